"""Flat-torus grids and the sign algebra of multi-indices.

Multi-indices are plain tuples of 1-based axis labels, strictly increasing,
so ``(1, 3)`` stands for ``dx1 ^ dx3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb, prod
from typing import Sequence

import numpy as np

from .errors import DegreeError, GridError

__all__ = [
    "TorusGrid",
    "multi_indices",
    "merge_indices",
    "star_complement",
    "index_position",
]

MultiIndex = tuple  # strictly increasing tuple of 1-based axis labels


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the flat torus prod_i [0, L_i).

    Parameters
    ----------
    shape : sequence of int
        Grid points per axis; each must be even and at least 8.
    lengths : sequence of float, optional
        Periods of the axes, default 1.0 each.
    """

    shape: tuple
    lengths: tuple = field(default=None)

    def __post_init__(self):
        shape = tuple(int(r) for r in self.shape)
        if len(shape) not in (2, 3):
            raise GridError(f"dimension must be 2 or 3, got {len(shape)}")
        for r in shape:
            if r < 8 or r % 2:
                raise GridError(f"resolutions must be even and >= 8, got {shape}")
        lengths = self.lengths
        if lengths is None:
            lengths = (1.0,) * len(shape)
        lengths = tuple(float(x) for x in lengths)
        if len(lengths) != len(shape):
            raise GridError("lengths and shape disagree in dimension")
        if any(not np.isfinite(x) or x <= 0 for x in lengths):
            raise GridError(f"periods must be positive, got {lengths}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cube(cls, n_dim: int, resolution: int, length: float = 1.0) -> "TorusGrid":
        return cls((resolution,) * n_dim, (length,) * n_dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple:
        return tuple(L / r for L, r in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        return prod(self.spacing)

    @property
    def volume(self) -> float:
        return prod(self.lengths)

    @property
    def spectral_shape(self) -> tuple:
        """Shape of real-FFT coefficient arrays (last axis halved)."""
        return self.shape[:-1] + (self.shape[-1] // 2 + 1,)

    def axes(self) -> list:
        """1-D coordinate arrays, one per axis."""
        return [np.arange(r) * (L / r) for r, L in zip(self.shape, self.lengths)]

    def coords(self) -> list:
        """Broadcastable coordinate arrays (sparse meshgrid)."""
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def refine(self, factor: int) -> "TorusGrid":
        return TorusGrid(tuple(r * factor for r in self.shape), self.lengths)

    def wavenumbers(self) -> list:
        """Angular wavenumbers 2 pi k / L on the real-FFT layout.

        The Nyquist wavenumber is set to zero: odd-order derivatives of a
        Nyquist mode are not representable by a real field.
        """
        out = []
        for ax, (r, L) in enumerate(zip(self.shape, self.lengths)):
            if ax == self.dim - 1:
                k = np.arange(r // 2 + 1, dtype=float)
            else:
                k = np.fft.fftfreq(r, 1.0 / r)
            k = k.copy()
            k[np.abs(k) == r // 2] = 0.0
            shp = [1] * self.dim
            shp[ax] = k.size
            out.append((2 * np.pi / L * k).reshape(shp))
        return out

    def laplacian_symbol(self) -> np.ndarray:
        """|k|^2 on the real-FFT layout, consistent with ``wavenumbers``."""
        ks = self.wavenumbers()
        total = np.zeros(self.spectral_shape)
        for k in ks:
            total = total + k**2
        return total

    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each real-FFT coefficient in the full spectrum."""
        r = self.shape[-1]
        w = np.full(r // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shp = [1] * self.dim
        shp[-1] = w.size
        return w.reshape(shp)


@lru_cache(maxsize=None)
def multi_indices(n_dim: int, degree: int) -> tuple:
    """All increasing multi-indices of the given degree, lexicographic."""
    if not 0 <= degree <= n_dim:
        raise DegreeError(f"degree {degree} out of range for dimension {n_dim}")
    return tuple(combinations(range(1, n_dim + 1), degree))


def index_position(n_dim: int, index: Sequence[int]) -> int:
    """Position of ``index`` in ``multi_indices(n_dim, len(index))``."""
    return multi_indices(n_dim, len(index)).index(tuple(index))


@lru_cache(maxsize=None)
def merge_indices(i: MultiIndex, j: MultiIndex) -> tuple:
    """Sign and sorted union for ``dx_I ^ dx_J = sign * dx_K``.

    Returns ``(0, None)`` when the indices overlap.
    """
    i, j = tuple(i), tuple(j)
    if set(i) & set(j):
        return 0, None
    # parity = number of pairs (a in I, b in J) with a > b
    inversions = sum(1 for a in i for b in j if a > b)
    return (-1 if inversions % 2 else 1), tuple(sorted(i + j))


@lru_cache(maxsize=None)
def star_complement(i: MultiIndex, n_dim: int) -> tuple:
    """Sign and complement with ``dx_I ^ (sign * dx_Ic) = dx_1 ^ ... ^ dx_N``."""
    i = tuple(i)
    comp = tuple(a for a in range(1, n_dim + 1) if a not in i)
    sign, _ = merge_indices(i, comp)
    return sign, comp


def check_components(n_dim: int, degree: int, n_comp: int) -> None:
    if n_comp != comb(n_dim, degree):
        raise DegreeError(
            f"{n_comp} components do not match degree {degree} in dimension {n_dim}"
        )
