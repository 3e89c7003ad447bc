from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = ["SolutionGrid"]


@dataclass(frozen=True, eq=False)
class SolutionGrid:
    """Solution values ``u`` and derivatives ``du`` at nodes ``t``.

    ``tc`` holds ``1 - t`` at full relative precision. ``gauss_u`` are the
    Nystrom unknowns when the grid came from a solver; ``operator`` then
    allows evaluation anywhere through the integral representation.
    """

    t: np.ndarray
    tc: np.ndarray
    u: np.ndarray
    du: np.ndarray
    iterations: int = 0
    residual: float = np.nan
    method: str = ""
    converged: bool = False
    oscillating: bool = False
    history: tuple = ()
    gauss_u: Optional[np.ndarray] = field(default=None, repr=False)
    operator: Optional[object] = field(default=None, repr=False)
    reflected: bool = False

    def __len__(self):
        return len(self.t)

    def evaluate(self, t, tc=None):
        """u at arbitrary points (needs the producing operator)."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tc = 1.0 - t if tc is None else np.atleast_1d(np.asarray(tc, dtype=float))
        if self.operator is None:
            values = np.interp(t, self.t, self.u)
        elif self.reflected:
            values = self.operator.evaluate(tc, t, self.gauss_u)
        else:
            values = self.operator.evaluate(t, tc, self.gauss_u)
        return float(values[0]) if scalar else values

    def reflect(self) -> "SolutionGrid":
        """The grid under t -> 1 - t."""
        return replace(
            self,
            t=self.tc[::-1].copy(), tc=self.t[::-1].copy(),
            u=self.u[::-1].copy(), du=-self.du[::-1],
            reflected=not self.reflected,
        )
