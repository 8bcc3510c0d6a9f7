"""Differential forms sampled on a flat torus, with spectral calculus.

A :class:`Form` keeps its components either as grid samples, as real-FFT
coefficients, or both; each representation is computed on demand and
cached. Linear operators (d, d*, the Laplacian, Fourier multipliers) act on
coefficients, products act on samples.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np
import scipy.fft as sfft

from .errors import DegreeError, ExponentError, GridError
from .torus import TorusGrid, merge_indices, multi_indices, star_complement

__all__ = [
    "Form",
    "SpectralForm",
    "set_fft_workers",
    "to_spectral",
    "to_physical",
    "exterior_derivative",
    "codifferential",
    "hodge_star",
    "wedge",
    "laplacian",
    "apply_multiplier",
    "lp_norm",
    "neg_sobolev_norm",
    "gradient_lp_norm",
    "inner_product_field",
    "inner_pairing",
    "pair_with_test",
    "evaluate",
    "random_form",
]

_FFT_WORKERS = None


def set_fft_workers(n: int | None) -> None:
    """Thread count handed to scipy.fft (``None`` = library default)."""
    global _FFT_WORKERS
    _FFT_WORKERS = n


def _axes(grid):
    return tuple(range(1, grid.dim + 1))


def _rfft(data, grid):
    return sfft.rfftn(data, axes=_axes(grid), workers=_FFT_WORKERS)


def _irfft(spec, grid):
    return sfft.irfftn(spec, s=grid.shape, axes=_axes(grid), workers=_FFT_WORKERS)


@lru_cache(maxsize=32)
def _ik(grid):
    """Derivative symbols ``i k_j`` per axis, cached per grid."""
    return tuple(_frozen(1j * k) for k in grid.wavenumbers())


@lru_cache(maxsize=32)
def _symbol(grid, kind, order=0.0):
    if kind == "laplacian":
        out = grid.laplacian_symbol()
    elif kind == "green":
        ksq = grid.laplacian_symbol()
        out = np.zeros_like(ksq)
        out[ksq > 0] = 1.0 / ksq[ksq > 0]
    else:
        out = _bessel_symbol(grid, order)
    return _frozen(out)


def _frozen(a):
    a.setflags(write=False)
    return a


# compact band-limited spectra ------------------------------------------------
# A band is a per-axis bound B_i < R_i/2. Its block keeps the coefficients
# with |k_i| <= B_i, leading axes ordered 0..B, -B..-1 and the last axis 0..B.

@lru_cache(maxsize=128)
def _band_index(shape, band):
    idx = []
    for ax, (r, b) in enumerate(zip(shape, band)):
        if ax == len(shape) - 1:
            idx.append(np.arange(b + 1))
        else:
            idx.append(np.r_[0:b + 1, r - b:r])
    return np.ix_(*idx)


def _block_shape(band):
    return tuple(2 * b + 1 for b in band[:-1]) + (band[-1] + 1,)


def _reband(block, band, new_band):
    if band == new_band:
        return block
    out = np.zeros(block.shape[:1] + _block_shape(new_band), dtype=complex)
    idx = []
    for ax, (b, nb) in enumerate(zip(band, new_band)):
        if ax == len(band) - 1:
            idx.append(np.arange(b + 1))
        else:
            idx.append(np.r_[0:b + 1, 2 * nb + 1 - b:2 * nb + 1])
    out[(slice(None),) + np.ix_(*idx)] = block
    return out


def _common(a, b):
    band = tuple(max(x, y) for x, y in zip(a._band, b._band))
    return _reband(a._block, a._band, band), _reband(b._block, b._band, band), band


@lru_cache(maxsize=128)
def _ik_band(grid, band):
    out = []
    for ax, k in enumerate(grid.wavenumbers()):
        shp = [1] * grid.dim
        kk = k.ravel()[_band_index(grid.shape, band)[ax].ravel()]
        shp[ax] = kk.size
        out.append(_frozen((1j * kk).reshape(shp)))
    return tuple(out)


class Form:
    """A degree-``degree`` differential form on ``grid``.

    Components are ordered as ``multi_indices(grid.dim, degree)``; the
    physical array has shape ``(n_components, *grid.shape)``.
    """

    __slots__ = ("grid", "degree", "_phys", "_spec", "_block", "_band")
    __array_priority__ = 100

    def __init__(self, grid: TorusGrid, degree: int, data=None, *, spectrum=None):
        if not 0 <= degree <= grid.dim:
            raise DegreeError(f"degree {degree} out of range for dimension {grid.dim}")
        if data is None and spectrum is None:
            raise ValueError("either data or spectrum must be given")
        n_comp = comb(grid.dim, degree)
        self.grid = grid
        self.degree = degree
        self._phys = None
        self._spec = None
        self._block = None
        self._band = None
        if data is not None:
            data = np.asarray(data, dtype=float)
            if data.shape != (n_comp,) + grid.shape:
                data = data.reshape((n_comp,) + grid.shape)
            if not np.all(np.isfinite(data)):
                raise ValueError("form samples must be finite")
            self._phys = _frozen(np.array(data, copy=True))
        if spectrum is not None:
            spectrum = np.asarray(spectrum, dtype=complex)
            if spectrum.shape != (n_comp,) + grid.spectral_shape:
                raise GridError("spectrum shape does not match the grid")
            self._spec = _frozen(np.array(spectrum, copy=True))

    # construction helpers -------------------------------------------------
    @classmethod
    def _wrap(cls, grid, degree, data=None, spectrum=None):
        """Adopt arrays without copying or validation (internal)."""
        obj = cls.__new__(cls)
        obj.grid = grid
        obj.degree = degree
        obj._phys = _frozen(data) if data is not None else None
        obj._spec = _frozen(spectrum) if spectrum is not None else None
        obj._block = None
        obj._band = None
        return obj

    @classmethod
    def _compact(cls, grid, degree, block, band):
        """Band-limited form stored by its coefficient block only (internal)."""
        obj = cls._wrap(grid, degree)
        obj._block = _frozen(block)
        obj._band = tuple(band)
        return obj

    @classmethod
    def zeros(cls, grid, degree):
        n = comb(grid.dim, degree)
        return cls._wrap(grid, degree, data=np.zeros((n,) + grid.shape))

    @classmethod
    def constant(cls, grid, degree, coefficients):
        """Constant-coefficient form; ``coefficients`` follow multi-index order."""
        coeffs = np.broadcast_to(np.asarray(coefficients, dtype=float),
                                 (comb(grid.dim, degree),))
        data = np.empty((coeffs.size,) + grid.shape)
        data[...] = coeffs.reshape((-1,) + (1,) * grid.dim)
        return cls(grid, degree, data)

    @classmethod
    def from_components(cls, grid, degree, components: dict):
        """Build from ``{multi_index: array or scalar}``; missing entries are zero."""
        idx = multi_indices(grid.dim, degree)
        data = np.zeros((len(idx),) + grid.shape)
        for key, value in components.items():
            key = tuple(key) if not isinstance(key, int) else (key,)
            if key not in idx:
                raise DegreeError(f"{key} is not an increasing degree-{degree} multi-index")
            data[idx.index(key)] = np.broadcast_to(value, grid.shape)
        return cls(grid, degree, data)

    @classmethod
    def scalar(cls, grid, values):
        return cls(grid, 0, np.broadcast_to(values, grid.shape)[None])

    # representations --------------------------------------------------------
    @property
    def data(self) -> np.ndarray:
        if self._phys is None:
            self._phys = _frozen(_irfft(self.spectrum, self.grid))
        return self._phys

    @property
    def spectrum(self) -> np.ndarray:
        if self._spec is None:
            if self._block is not None:
                full = np.zeros((self._block.shape[0],) + self.grid.spectral_shape, dtype=complex)
                full[(slice(None),) + _band_index(self.grid.shape, self._band)] = self._block
                self._spec = _frozen(full)
            else:
                self._spec = _frozen(_rfft(self._phys, self.grid))
        return self._spec

    @property
    def has_data(self) -> bool:
        return self._phys is not None

    @property
    def has_spectrum(self) -> bool:
        return self._spec is not None or self._block is not None

    @property
    def indices(self) -> tuple:
        return multi_indices(self.grid.dim, self.degree)

    @property
    def n_components(self) -> int:
        return comb(self.grid.dim, self.degree)

    def component(self, index) -> np.ndarray:
        index = (index,) if isinstance(index, int) else tuple(index)
        return self.data[self.indices.index(index)]

    def modulus(self) -> np.ndarray:
        """Pointwise length in the orthonormal flat coframe."""
        return np.sqrt(np.sum(self.data**2, axis=0))

    def mean(self) -> np.ndarray:
        """Componentwise spatial mean."""
        origin = (slice(None),) + (0,) * self.grid.dim
        if self._block is not None:
            return self._block[origin].real / np.prod(self.grid.shape)
        if self._spec is not None:
            return self._spec[origin].real / np.prod(self.grid.shape)
        return self._phys.mean(axis=_axes(self.grid))

    # arithmetic ---------------------------------------------------------------
    def _check_same(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if other.grid != self.grid:
            raise GridError("forms live on different grids")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add degrees {self.degree} and {other.degree}")
        return None

    def _combine(self, other, op):
        bad = self._check_same(other)
        if bad is NotImplemented:
            return bad
        if self._block is not None and other._block is not None:
            ba, bb, band = _common(self, other)
            return Form._compact(self.grid, self.degree, op(ba, bb), band)
        phys = spec = None
        if self._phys is not None and other._phys is not None:
            phys = op(self._phys, other._phys)
        if self._spec is not None and other._spec is not None:
            spec = op(self._spec, other._spec)
        if phys is None and spec is None:
            spec = op(self.spectrum, other.spectrum)
        return Form._wrap(self.grid, self.degree, phys, spec)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        c = float(c)
        phys = self._phys * c if self._phys is not None else None
        spec = self._spec * c if self._spec is not None else None
        out = Form._wrap(self.grid, self.degree, phys, spec)
        if self._block is not None:
            out._block = _frozen(self._block * c)
            out._band = self._band
        return out

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __repr__(self):
        return f"Form(degree={self.degree}, grid={self.grid.shape})"


class SpectralForm:
    """Fourier coefficients of a form on the full integer-frequency lattice.

    ``coefficients[c]`` is indexed in numpy FFT order; coefficient values are
    normalized so that a constant field ``c`` has value ``c`` at ``k = 0``.
    """

    def __init__(self, grid: TorusGrid, degree: int, coefficients: np.ndarray):
        self.grid = grid
        self.degree = degree
        self.coefficients = _frozen(np.asarray(coefficients, dtype=complex))

    def coefficient(self, component: int, k) -> complex:
        k = tuple(int(v) for v in k)
        for kk, r in zip(k, self.grid.shape):
            if not -r // 2 <= kk < r // 2:
                raise IndexError(f"frequency {k} outside the grid band")
        return complex(self.coefficients[(component,) + k])

    def frequencies(self) -> list:
        return [np.fft.fftfreq(r, 1.0 / r).astype(int) for r in self.grid.shape]


def to_spectral(form: Form) -> SpectralForm:
    axes = _axes(form.grid)
    coeffs = sfft.fftn(form.data, axes=axes, workers=_FFT_WORKERS) / np.prod(form.grid.shape)
    return SpectralForm(form.grid, form.degree, coeffs)


def to_physical(spec: SpectralForm) -> Form:
    axes = _axes(spec.grid)
    data = sfft.ifftn(spec.coefficients * np.prod(spec.grid.shape), axes=axes,
                      workers=_FFT_WORKERS)
    return Form(spec.grid, spec.degree, data.real)


# differential operators -------------------------------------------------------

def _view(form):
    """Coefficient array to operate on, with its band (``None`` = full layout)."""
    if form._block is not None:
        return form._block, form._band
    return form.spectrum, None


def _from_view(grid, degree, arr, band):
    if band is None:
        return Form._wrap(grid, degree, spectrum=arr)
    return Form._compact(grid, degree, arr, band)


def _map_spectrum(form, fn, degree=None):
    """Apply ``fn`` to the coefficients, keeping the compact layout if present."""
    arr, band = _view(form)
    return _from_view(form.grid, form.degree if degree is None else degree, fn(arr), band)


def exterior_derivative(form: Form) -> Form:
    """Exterior derivative, computed with the spectral symbol ``i k``."""
    grid, deg = form.grid, form.degree
    if deg >= grid.dim:
        raise DegreeError("the exterior derivative of a top-degree form is not taken")
    src, band = _view(form)
    ik = _ik(grid) if band is None else _ik_band(grid, band)
    src_idx = multi_indices(grid.dim, deg)
    out_idx = multi_indices(grid.dim, deg + 1)
    out = np.zeros((len(out_idx),) + src.shape[1:], dtype=complex)
    tmp = np.empty(src.shape[1:], dtype=complex)
    for a, I in enumerate(src_idx):
        for j in range(1, grid.dim + 1):
            sign, K = merge_indices((j,), I)
            if sign == 0:
                continue
            np.multiply(ik[j - 1], src[a], out=tmp)
            if sign > 0:
                out[out_idx.index(K)] += tmp
            else:
                out[out_idx.index(K)] -= tmp
    return _from_view(grid, deg + 1, out, band)


def hodge_star(form: Form) -> Form:
    """Hodge star of the flat metric: a signed relabeling of components."""
    grid, deg = form.grid, form.degree
    n = grid.dim
    src_idx = multi_indices(n, deg)
    out_idx = multi_indices(n, n - deg)
    perm = np.empty(len(src_idx), dtype=int)
    signs = np.empty(len(src_idx))
    for a, I in enumerate(src_idx):
        s, Ic = star_complement(I, n)
        perm[out_idx.index(Ic)] = a
        signs[out_idx.index(Ic)] = s
    shape = (-1,) + (1,) * n
    phys = form._phys[perm] * signs.reshape(shape) if form._phys is not None else None
    spec = form._spec[perm] * signs.reshape(shape) if form._spec is not None else None
    out = Form._wrap(grid, n - deg, phys, spec)
    if form._block is not None:
        out._block = _frozen(form._block[perm] * signs.reshape(shape))
        out._band = form._band
    return out


def codifferential(form: Form) -> Form:
    """Codifferential ``d* = (-1)^(N(l+1)+1) * d *`` on l-forms."""
    n, deg = form.grid.dim, form.degree
    if deg == 0:
        raise DegreeError("the codifferential of a 0-form is not defined")
    sign = -1.0 if (n * (deg + 1) + 1) % 2 else 1.0
    return sign * hodge_star(exterior_derivative(hodge_star(form)))


def laplacian(form: Form) -> Form:
    """``dd* + d*d``; on the flat torus the componentwise ``-sum d_jj``."""
    return apply_multiplier(form, _symbol(form.grid, "laplacian"))


def apply_multiplier(form: Form, symbol: np.ndarray) -> Form:
    """Apply a real Fourier multiplier given on the real-FFT layout."""
    arr, band = _view(form)
    if band is not None:
        symbol = np.broadcast_to(symbol, form.grid.spectral_shape)[
            _band_index(form.grid.shape, band)]
    return _from_view(form.grid, form.degree, arr * symbol[None], band)


def _bessel_symbol(grid: TorusGrid, order: float) -> np.ndarray:
    ks = []
    for ax, (r, L) in enumerate(zip(grid.shape, grid.lengths)):
        k = np.arange(r // 2 + 1) if ax == grid.dim - 1 else np.fft.fftfreq(r, 1.0 / r)
        shp = [1] * grid.dim
        shp[ax] = k.size
        ks.append(((2 * np.pi / L) * k).reshape(shp))
    ksq = sum(k**2 for k in ks)
    return (1.0 + ksq) ** (order / 2.0)


# products -----------------------------------------------------------------

def _padded_shape(grid, pad):
    out = []
    for r in grid.shape:
        p = int(round(r * pad))
        p += p % 2
        out.append(max(p, r))
    return tuple(out)


def _band_slices(shape, padded):
    """Index pairs mapping the resolved band of a grid into a padded grid."""
    native, target = [], []
    dim = len(shape)
    for ax, (r, p) in enumerate(zip(shape, padded)):
        h = r // 2
        if ax == dim - 1:
            native.append([slice(0, h)])
            target.append([slice(0, h)])
        else:
            native.append([slice(0, h), slice(r - h + 1, r)])
            target.append([slice(0, h), slice(p - h + 1, p)])
    return native, target


def _iter_blocks(native, target):
    import itertools
    for choice in itertools.product(*[range(len(s)) for s in native]):
        yield (tuple(native[a][c] for a, c in enumerate(choice)),
               tuple(target[a][c] for a, c in enumerate(choice)))


def _upsample(spec, grid, padded):
    """Samples of the trigonometric interpolant on a finer grid (Nyquist dropped)."""
    pgrid_spec = padded[:-1] + (padded[-1] // 2 + 1,)
    big = np.zeros((spec.shape[0],) + pgrid_spec, dtype=complex)
    native, target = _band_slices(grid.shape, padded)
    for ns, ts in _iter_blocks(native, target):
        big[(slice(None),) + ts] = spec[(slice(None),) + ns]
    big *= np.prod(padded) / np.prod(grid.shape)
    return sfft.irfftn(big, s=padded, axes=tuple(range(1, grid.dim + 1)), workers=_FFT_WORKERS)


def _downsample(values, grid, padded):
    big = sfft.rfftn(values, axes=tuple(range(1, grid.dim + 1)), workers=_FFT_WORKERS)
    out = np.zeros((values.shape[0],) + grid.spectral_shape, dtype=complex)
    native, target = _band_slices(grid.shape, padded)
    for ns, ts in _iter_blocks(native, target):
        out[(slice(None),) + ns] = big[(slice(None),) + ts]
    out *= np.prod(grid.shape) / np.prod(padded)
    return out


def wedge(a: Form, b: Form, pad: float = 1.5) -> Form:
    """Wedge product.

    With ``pad > 1`` the product is formed on a refined grid and truncated to
    the resolved band, which removes aliasing for any pair of grid fields.
    ``pad = 1`` multiplies samples directly.
    """
    if a.grid != b.grid:
        raise GridError("forms live on different grids")
    grid = a.grid
    n = grid.dim
    deg = a.degree + b.degree
    if deg > n:
        raise DegreeError(f"wedge of degrees {a.degree} and {b.degree} exceeds dimension {n}")
    fast = _band_product(a, b, grid)
    if fast is not None:
        return fast
    if pad > 1.0:
        padded = _padded_shape(grid, pad)
        va = _upsample(a.spectrum, grid, padded)
        vb = _upsample(b.spectrum, grid, padded)
        out = _wedge_samples(va, vb, a.degree, b.degree, n, padded)
        return Form._wrap(grid, deg, spectrum=_downsample(out, grid, padded))
    out = _wedge_samples(a.data, b.data, a.degree, b.degree, n, grid.shape)
    return Form._wrap(grid, deg, data=out)


def _wedge_samples(va, vb, da, db, n, shape):
    out_idx = multi_indices(n, da + db)
    out = np.zeros((len(out_idx),) + tuple(shape))
    for p, I in enumerate(multi_indices(n, da)):
        for q, J in enumerate(multi_indices(n, db)):
            sign, K = merge_indices(I, J)
            if sign == 0:
                continue
            r = out_idx.index(K)
            if sign > 0:
                out[r] += va[p] * vb[q]
            else:
                out[r] -= va[p] * vb[q]
    return out


def _bandwidth(spec, grid):
    """Largest |k_i| carrying a nonzero coefficient, per axis."""
    mask = np.any(spec != 0, axis=0)
    out = []
    for ax, r in enumerate(grid.shape):
        other = tuple(i for i in range(grid.dim) if i != ax)
        hit = np.nonzero(np.any(mask, axis=other))[0]
        if hit.size == 0:
            out.append(0)
            continue
        k = hit if ax == grid.dim - 1 else np.abs(np.fft.fftfreq(r, 1.0 / r)[hit])
        out.append(int(np.max(np.abs(k))))
    return out


def _band_product(a, b, grid):
    """Exact wedge of two band-limited forms on the smallest resolving grid.

    Trigonometric polynomials of degrees Ba and Bb multiply exactly on any
    grid with more than 2(Ba+Bb) points per axis, so the product is formed
    there and returned as a compact block. Returns ``None`` when the inputs
    are not known to be band-limited or the product is not resolved.
    """
    if a._block is not None and b._block is not None:
        ba, bb = a._band, b._band
        blk_a, blk_b = a._block, b._block
    elif a.has_spectrum and b.has_spectrum and not (a.has_data and b.has_data):
        ba, bb = tuple(_bandwidth(a.spectrum, grid)), tuple(_bandwidth(b.spectrum, grid))
        if any(2 * x >= r or 2 * y >= r for x, y, r in zip(ba, bb, grid.shape)):
            return None
        blk_a = a.spectrum[(slice(None),) + _band_index(grid.shape, ba)]
        blk_b = b.spectrum[(slice(None),) + _band_index(grid.shape, bb)]
    else:
        return None
    band = tuple(x + y for x, y in zip(ba, bb))
    small = tuple(max(8, 2 * t + 2) for t in band)
    if any(m > r for m, r in zip(small, grid.shape)):
        return None
    n = grid.dim
    axes = tuple(range(1, n + 1))
    ratio = np.prod(small) / np.prod(grid.shape)
    small_spec = small[:-1] + (small[-1] // 2 + 1,)

    def samples(block, bw):
        sp = np.zeros(block.shape[:1] + small_spec, dtype=complex)
        sp[(slice(None),) + _band_index(small, bw)] = block * ratio
        return sfft.irfftn(sp, s=small, axes=axes, workers=_FFT_WORKERS)

    prod_small = _wedge_samples(samples(blk_a, ba), samples(blk_b, bb),
                                a.degree, b.degree, n, small)
    ps = sfft.rfftn(prod_small, axes=axes, workers=_FFT_WORKERS)
    block = ps[(slice(None),) + _band_index(small, band)] / ratio
    return Form._compact(grid, a.degree + b.degree, block, band)


def inner_product_field(a: Form, b: Form) -> Form:
    """Pointwise inner product as a 0-form."""
    if a.degree != b.degree:
        raise DegreeError("inner product needs equal degrees")
    if a.grid != b.grid:
        raise GridError("forms live on different grids")
    return Form._wrap(a.grid, 0, data=np.sum(a.data * b.data, axis=0)[None])


def _parseval(sa, sb, grid):
    # sum of Re(a conj b) with weight 2 on interior last-axis modes
    fa = np.ascontiguousarray(sa).view(float).ravel()
    fb = np.ascontiguousarray(sb).view(float).ravel()
    tot = 2.0 * np.dot(fa, fb)
    for plane in (0, -1):
        tot -= np.vdot(sa[..., plane], sb[..., plane]).real
    return float(tot) * grid.volume / np.prod(grid.shape) ** 2


def _parseval_block(a, b):
    # no Nyquist inside a band, so only the k_last = 0 plane has weight 1
    sa, sb, _ = _common(a, b)
    fa = np.ascontiguousarray(sa).view(float).ravel()
    fb = np.ascontiguousarray(sb).view(float).ravel()
    tot = 2.0 * np.dot(fa, fb) - np.vdot(sa[..., 0], sb[..., 0]).real
    grid = a.grid
    return float(tot) * grid.volume / np.prod(grid.shape) ** 2


def inner_pairing(a: Form, b: Form) -> float:
    """L^2 pairing ``int <a, b> dvol``."""
    if a.degree != b.degree:
        raise DegreeError("inner pairing needs equal degrees")
    if a.grid != b.grid:
        raise GridError("forms live on different grids")
    if a._block is not None and b._block is not None:
        return _parseval_block(a, b)
    if a.has_data and b.has_data:
        return float(np.sum(a.data * b.data)) * a.grid.cell_volume
    if a.has_spectrum and b.has_spectrum:
        return _parseval(a.spectrum, b.spectrum, a.grid)
    return float(np.sum(a.data * b.data)) * a.grid.cell_volume


def pair_with_test(form: Form, test: Form) -> float:
    """Distributional pairing ``int_X form ^ test`` for complementary degrees."""
    n = form.grid.dim
    if form.degree + test.degree != n:
        raise DegreeError("pairing needs complementary degrees")
    if form.grid != test.grid:
        raise GridError("forms live on different grids")
    # form ^ test = <form, *^{-1} test> dvol and *^{-1} = (-1)^{l(N-l)} *
    l = form.degree
    sign = -1.0 if (l * (n - l)) % 2 else 1.0
    return sign * inner_pairing(form, hodge_star(test))


# norms ----------------------------------------------------------------------

def lp_norm(form: Form, p: float) -> float:
    """``(int |form|^p dvol)^(1/p)``; ``p = inf`` gives the maximum modulus."""
    p = float(p)
    if not p >= 1.0:
        raise ExponentError(f"L^p norms need p >= 1, got {p}")
    grid = form.grid
    if np.isinf(p):
        return float(form.modulus().max())
    if p == 2.0:
        if form._block is not None:
            return float(np.sqrt(max(_parseval_block(form, form), 0.0)))
        if form.has_data:
            return float(np.sqrt(np.sum(form.data**2) * grid.cell_volume))
        return float(np.sqrt(max(_parseval(form.spectrum, form.spectrum, grid), 0.0)))
    mod = form.modulus()
    return float((np.sum(mod**p) * grid.cell_volume) ** (1.0 / p))


def neg_sobolev_norm(form: Form, p: float) -> float:
    """Bessel-potential surrogate of the W^{-1,p} norm: ``||(1+Delta)^(-1/2) form||_p``."""
    p = float(p)
    if not 1.0 < p < np.inf:
        raise ExponentError(f"W^(-1,p) needs 1 < p < inf, got {p}")
    smoothed = apply_multiplier(form, _symbol(form.grid, "bessel", -1.0))
    return lp_norm(smoothed, p)


def gradient_lp_norm(form: Form, p: float) -> float:
    """L^p norm of the componentwise gradient ``(sum_{I,j} (d_j form_I)^2)^(1/2)``."""
    grid = form.grid
    spec = form.spectrum
    sq = np.zeros(grid.shape)
    for ik in _ik(grid):
        g = _irfft(ik[None] * spec, grid)
        sq += np.sum(g**2, axis=0)
    field = Form._wrap(grid, 0, data=np.sqrt(sq)[None])
    return lp_norm(field, p)


# evaluation and sampling --------------------------------------------------

def evaluate(form: Form, point) -> np.ndarray:
    """Trigonometric interpolant of every component at an arbitrary point."""
    grid = form.grid
    point = np.asarray(point, dtype=float)
    spec = form.spectrum.copy()
    phase = np.ones(grid.spectral_shape, dtype=complex)
    for ax, (r, L) in enumerate(zip(grid.shape, grid.lengths)):
        if ax == grid.dim - 1:
            k = np.arange(r // 2 + 1).astype(float)
        else:
            k = np.fft.fftfreq(r, 1.0 / r)
        k[np.abs(k) == r // 2] = np.nan
        e = np.exp(1j * 2 * np.pi / L * k * point[ax])
        e[np.isnan(k)] = 0.0
        shp = [1] * grid.dim
        shp[ax] = k.size
        phase = phase * e.reshape(shp)
    w = grid.rfft_weights()
    vals = np.sum((spec * phase[None] * w[None]).real, axis=_axes(grid))
    return vals / np.prod(grid.shape)


def random_form(grid: TorusGrid, degree: int, rng: np.random.Generator,
                bandwidth: int = 4, mean: bool = True) -> Form:
    """Random band-limited form with ``|k_i| <= bandwidth`` in every axis.

    Coefficients are i.i.d. complex Gaussians; the result is stored by its
    compact coefficient block only.
    """
    if 2 * bandwidth >= min(grid.shape) // 2:
        raise ValueError("bandwidth too large for the grid")
    band = (bandwidth,) * grid.dim
    shape = (comb(grid.dim, degree),) + _block_shape(band)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    block = vals * (np.prod(grid.shape) / np.sqrt(np.prod(shape[1:])))
    _hermitian_plane(block, grid)
    if not mean:
        block[(slice(None),) + (0,) * grid.dim] = 0.0
    return Form._compact(grid, degree, block, band)


def _hermitian_plane(spec, grid):
    """Symmetrize the k_last = 0 plane in place so the spectrum is of a real field."""
    lead = tuple(range(1, grid.dim))
    plane = spec[..., 0]
    mirrored = np.conj(np.roll(np.flip(plane, axis=lead), 1, axis=lead))
    spec[..., 0] = 0.5 * (plane + mirrored)
