"""Smooth test forms used to probe limits: plateau bumps and their linear moments.

A plateau bump equals 1 on the ball of radius ``r0``, falls to 0 at ``r1``
through a C^4 polynomial ramp and vanishes beyond. On the plateau, the
linear test ``(x - c)_j B dx_K`` has a constant codifferential and the plain
test ``B dx_K`` has zero codifferential, which makes point-supported defects
``d(v delta)`` easy to read off.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegreeError
from .forms import Form, codifferential
from .sequences import periodic_displacement
from .torus import TorusGrid, multi_indices

__all__ = ["TestForm", "smootherstep", "plateau_bump", "local_tests", "global_tests",
           "cycle_tests", "scalar_tests"]

DEFAULT_WIDTHS = ((0.28, 0.45), (0.26, 0.42))


def smootherstep(t):
    """Degree-9 ramp from 0 to 1 with four vanishing derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    # evaluate the upper half by symmetry so the value never overshoots 1
    u = np.minimum(t, 1.0 - t)
    low = u**5 * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + 70.0 * u))))
    return np.where(t <= 0.5, low, 1.0 - low)[()]


def plateau_bump(grid: TorusGrid, center: Sequence[float], r0: float, r1: float) -> np.ndarray:
    if not 0 < r0 < r1 <= min(grid.lengths) / 2:
        raise ValueError("need 0 < r0 < r1 <= half the shortest period")
    r = np.sqrt(sum(d**2 for d in periodic_displacement(grid, center)))
    return np.broadcast_to(1.0 - smootherstep((r - r0) / (r1 - r0)), grid.shape)


@dataclass(eq=False)
class TestForm:
    """A named test form; ``role`` is one of global, plain, linear or cycle."""

    id: str
    form: Form
    role: str
    center: Optional[tuple] = None
    axis: Optional[int] = None
    _codiff: Optional[Form] = field(default=None, repr=False)

    @property
    def degree(self) -> int:
        return self.form.degree

    @property
    def codiff(self) -> Optional[Form]:
        if self.form.degree == 0:
            return None
        if self._codiff is None:
            self._codiff = codifferential(self.form)
        return self._codiff


def _coframe(grid, degree, K, values):
    idx = multi_indices(grid.dim, degree)
    data = np.zeros((len(idx),) + grid.shape)
    data[idx.index(K)] = values
    return Form(grid, degree, data)


def _tag(K):
    return "".join(str(i) for i in K) or "0"


def local_tests(grid: TorusGrid, degree: int, center: Sequence[float],
                widths: Sequence[Sequence[float]] = DEFAULT_WIDTHS, label: str = "a0") -> list:
    """Plain and linear-moment plateau tests of one degree around ``center``."""
    if degree < 1:
        raise DegreeError("local tests need degree >= 1 to see a codifferential")
    center = tuple(float(c) for c in center)
    disp = periodic_displacement(grid, center)
    out = []
    for w, (r0, r1) in enumerate(widths):
        bump = plateau_bump(grid, center, r0, r1)
        for K in multi_indices(grid.dim, degree):
            out.append(TestForm(f"{label}:plain[w{w},dx{_tag(K)}]",
                                _coframe(grid, degree, K, bump), "plain", center))
            for j in range(grid.dim):
                out.append(TestForm(f"{label}:lin[w{w},x{j + 1},dx{_tag(K)}]",
                                    _coframe(grid, degree, K, disp[j] * bump),
                                    "linear", center, j))
    return out


def global_tests(grid: TorusGrid, degree: int, placements: Sequence[Sequence[float]],
                 width: Sequence[float] = DEFAULT_WIDTHS[0], constant: bool = True) -> list:
    """Plateau bumps at fixed placements, plus constant coframes if asked."""
    out = []
    for m, c in enumerate(placements):
        bump = plateau_bump(grid, c, *width)
        for K in multi_indices(grid.dim, degree):
            out.append(TestForm(f"g{m}[dx{_tag(K)}]", _coframe(grid, degree, K, bump), "global",
                                tuple(float(x) for x in c)))
    if constant:
        out += cycle_tests(grid, degree)
    return out


def cycle_tests(grid: TorusGrid, degree: int) -> list:
    """Constant coframes; in top degree this is the fundamental cycle."""
    return [TestForm(f"const[dx{_tag(K)}]", _coframe(grid, degree, K, 1.0), "cycle")
            for K in multi_indices(grid.dim, degree)]


def scalar_tests(grid: TorusGrid, placements, width=DEFAULT_WIDTHS[0], constant=True) -> list:
    """Scalar tests ``phi`` carried as top forms ``phi dvol``."""
    return global_tests(grid, grid.dim, placements, width, constant)
