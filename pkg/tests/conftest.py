import numpy as np
import pytest

from emdenfowler.files import DEMOS
from emdenfowler.problem import ProblemSpec
from emdenfowler.solver import solve


def make_spec(p="0.5", q="0.5", lam=1, m=1, alpha=1, beta=1, gamma=1, delta=1, **kw):
    return ProblemSpec.from_strings(p=p, q=q, lam=lam, m=m, alpha=alpha, beta=beta,
                                    gamma=gamma, delta=delta, **kw)


@pytest.fixture(scope="session")
def demo_solutions():
    """Newton solutions of every shipped demo: name -> (demo, spec, grid, env)."""
    out = {}
    for demo in DEMOS:
        spec = demo.spec()
        grid, env = solve(spec)
        out[demo.name] = (demo, spec, grid, env)
    return out


@pytest.fixture(scope="session")
def dirichlet(demo_solutions):
    return demo_solutions["dirichlet"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# criterion number -> (passed, detail); filled by test_acceptance, echoed in the summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
