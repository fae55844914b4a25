"""Fourier representations on the periodic square [0, 2pi)^2.

Coefficients follow ``f(x) = sum_k fhat_k exp(i k.x)`` with the ``1/n^2``
carried by the forward transform, so that ``fhat`` equals the analytic
Fourier coefficient of a band-limited field. Coefficient arrays are stored in
numpy FFT order: axis 0 is ``k_x``, axis 1 is ``k_y``.

Two bracket evaluators are provided. :func:`bracket_exact` zero-pads to a grid
large enough that the quadratic products carry no aliasing at all, which is
what the verification code needs. :func:`bracket_dealiased` uses the 2/3 rule
on the native grid and is what the time stepper calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "SymmetryError",
    "SolvabilityError",
    "BandError",
    "symmetrize",
    "measured_band",
    "transform_forward",
    "transform_inverse",
    "spectral_derivative",
    "multiply_exact",
    "bracket_exact",
    "bracket_dealiased",
    "poisson_solve",
    "laplacian",
    "velocity_from_stream",
    "from_modes",
    "padded_size",
]

ROUNDTRIP_TOL = 1e-13
SYMMETRY_TOL = 1e-12
MEAN_TOL = 1e-12


class SymmetryError(ValueError):
    """A field flagged real-valued lacks conjugate symmetry."""


class SolvabilityError(ValueError):
    """A linear constraint on the torus has no periodic solution."""


class BandError(ValueError):
    """A band declaration is missing or too wide for exact evaluation."""


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on [0, 2pi)^2 with nodes ``2 pi i / n``."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, ``-n/2 .. n/2-1``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)

    @cached_property
    def kx(self) -> np.ndarray:
        return self.k[:, None] * np.ones((1, self.n), dtype=np.int64)

    @cached_property
    def ky(self) -> np.ndarray:
        return np.ones((self.n, 1), dtype=np.int64) * self.k[None, :]

    @cached_property
    def kmax(self) -> np.ndarray:
        """``max(|k_x|, |k_y|)`` per coefficient."""
        return np.maximum(np.abs(self.kx), np.abs(self.ky))

    @cached_property
    def k2(self) -> np.ndarray:
        return (self.kx**2 + self.ky**2).astype(float)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.kmax <= self.dealias_cutoff

    @cached_property
    def ikx(self) -> np.ndarray:
        """``i k_x`` with the Nyquist line zeroed."""
        return np.where(self.kx == -self.nyquist, 0, 1j * self.kx)

    @cached_property
    def iky(self) -> np.ndarray:
        return np.where(self.ky == -self.nyquist, 0, 1j * self.ky)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """``1/|k|^2`` with the mean mode mapped to zero."""
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        out = 1.0 / k2
        out[0, 0] = 0.0
        return out

    @property
    def nyquist(self) -> int:
        return self.n // 2

    @property
    def dealias_cutoff(self) -> int:
        """Largest ``max(|k_x|,|k_y|)`` kept by the 2/3 rule."""
        return self.n // 3

    @property
    def max_band(self) -> int:
        """Largest band representable without touching the Nyquist line."""
        return self.n // 2 - 1

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = 2 * np.pi * np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")

    def index(self, kx: int, ky: int) -> tuple[int, int]:
        """Array position of mode ``(kx, ky)``."""
        return kx % self.n, ky % self.n


@dataclass(frozen=True, eq=False)
class RealField:
    """Real physical-space values, ``values[i, j] = f(x_i, y_j)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n,) * 2}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients on a grid.

    ``real`` marks fields that represent real-valued functions; for those the
    coefficients satisfy ``fhat[-k] == conj(fhat[k])`` exactly. ``band``, when
    set, promises that every coefficient with ``max(|k_x|,|k_y|) > band`` is
    exactly zero.
    """

    grid: Grid
    coeffs: np.ndarray
    band: int | None = None
    real: bool = False
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        n = self.grid.n
        if c.shape != (n, n):
            raise ValueError(f"expected coefficient shape {(n, n)}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients contain non-finite values")
        if self.band is not None:
            if self.band < 0 or self.band > self.grid.nyquist:
                raise BandError(f"band {self.band} outside [0, {self.grid.nyquist}]")
            outside = self.grid.kmax > self.band
            if np.any(c[outside] != 0):
                raise BandError(f"nonzero coefficients outside declared band {self.band}")
        if self.real and not self._checked:
            asym = np.max(np.abs(c - _conj_reflect(c)), initial=0.0)
            scale = np.max(np.abs(c), initial=0.0)
            if asym > SYMMETRY_TOL * max(scale, 1.0):
                raise SymmetryError(
                    f"field flagged real but conjugate symmetry violated by {asym:.3e}"
                )
            c = symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_checked", True)

    def norm(self) -> float:
        """L2 norm of the coefficients (RMS of the physical field)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def grad_norm(self) -> float:
        """``sqrt(sum |k|^2 |fhat_k|^2)``, the RMS of the gradient."""
        return float(np.sqrt(np.sum(self.grid.k2 * np.abs(self.coeffs) ** 2)))

    def mode(self, kx: int, ky: int) -> complex:
        return complex(self.coeffs[self.grid.index(kx, ky)])

    @property
    def effective_band(self) -> int:
        return self.band if self.band is not None else measured_band(self)

    def _new(self, coeffs, band=None, real=None) -> SpectralField:
        return SpectralField(
            self.grid, coeffs, band=band, real=self.real if real is None else real
        )

    def __add__(self, other: SpectralField) -> SpectralField:
        _same_grid(self, other)
        return SpectralField(
            self.grid,
            self.coeffs + other.coeffs,
            band=_join_band(self.band, other.band, max),
            real=self.real and other.real,
        )

    def __sub__(self, other: SpectralField) -> SpectralField:
        return self + (-other)

    def __neg__(self) -> SpectralField:
        return self._new(-self.coeffs, band=self.band)

    def __mul__(self, scalar) -> SpectralField:
        if isinstance(scalar, SpectralField):
            raise TypeError("use multiply_exact for products of fields")
        scalar = complex(scalar)
        real = self.real and scalar.imag == 0
        return self._new(self.coeffs * scalar, band=self.band, real=real)

    __rmul__ = __mul__

    def truncate(self, band: int) -> SpectralField:
        """Zero everything outside ``band`` and declare it."""
        c = np.where(self.grid.kmax > band, 0, self.coeffs)
        return self._new(c, band=band)

    def with_band(self, band: int | None = None, rtol: float = 1e-14) -> SpectralField:
        """Declare a band.

        With no explicit band, coefficients below ``rtol * max|fhat|`` are
        treated as transform roundoff: the band is measured above that floor
        and the field is truncated to it.
        """
        if band is not None:
            return self._new(self.coeffs, band=band)
        return self.truncate(measured_band(self, rtol=rtol))


def _same_grid(a: SpectralField, b: SpectralField):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: n={a.grid.n} vs n={b.grid.n}")


def _join_band(a, b, op):
    return None if a is None or b is None else op(a, b)


def _conj_reflect(c: np.ndarray) -> np.ndarray:
    """Array whose entry at k is ``conj(c[-k])``."""
    return np.conj(np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1)))


def symmetrize(c: np.ndarray) -> np.ndarray:
    """Project onto conjugate-symmetric arrays; the result is exactly symmetric."""
    return 0.5 * (c + _conj_reflect(c))


def measured_band(f: SpectralField, rtol: float = 0.0) -> int:
    """Smallest band holding every coefficient above ``rtol * max|fhat|``."""
    mag = np.abs(f.coeffs)
    nz = mag > rtol * mag.max(initial=0.0)
    return int(f.grid.kmax[nz].max()) if nz.any() else 0


def from_modes(grid: Grid, modes: dict, real: bool = False, band: int | None = None) -> SpectralField:
    """Build a field from ``{(kx, ky): coefficient}``."""
    c = np.zeros((grid.n, grid.n), dtype=complex)
    for (kx, ky), value in modes.items():
        c[grid.index(kx, ky)] += value
    f = SpectralField(grid, c, real=real)
    return f.with_band(band)


def transform_forward(values, grid: Grid | None = None) -> SpectralField:
    """Physical values to coefficients, ``fhat_k = n^-2 sum_j f_j exp(-i k.x_j)``.

    Accepts a :class:`RealField` or a (possibly complex) ``n x n`` array.
    Real input yields a field flagged real with exact conjugate symmetry.
    """
    if isinstance(values, RealField):
        grid, arr = values.grid, values.values
    else:
        arr = np.asarray(values)
        if grid is None:
            grid = Grid(arr.shape[0])
    if arr.shape != (grid.n, grid.n):
        raise ValueError(f"expected shape {(grid.n,) * 2}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot transform non-finite values")
    real = not np.iscomplexobj(arr)
    c = np.fft.fft2(arr) / grid.n**2
    if real:
        c = symmetrize(c)
    return SpectralField(grid, c, real=real, _checked=True)


def transform_inverse(fh: SpectralField) -> RealField | np.ndarray:
    """Coefficients to physical values.

    Fields flagged real come back as a :class:`RealField`; otherwise a complex
    array is returned.
    """
    n = fh.grid.n
    vals = np.fft.ifft2(fh.coeffs) * n**2
    if not fh.real:
        return vals
    imag = np.max(np.abs(vals.imag), initial=0.0)
    scale = np.max(np.abs(vals), initial=0.0)
    if imag > ROUNDTRIP_TOL * max(scale, 1.0):
        raise SymmetryError(f"imaginary residue {imag:.3e} in a real field")
    return RealField(fh.grid, vals.real.copy())


def spectral_derivative(fh: SpectralField, axis: str) -> SpectralField:
    """Multiply by ``i k_axis``; the Nyquist line ``k_axis = -n/2`` is zeroed."""
    grid = fh.grid
    if axis == "x":
        k = grid.kx
    elif axis == "y":
        k = grid.ky
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    mult = np.where(k == -grid.nyquist, 0, 1j * k)
    return fh._new(fh.coeffs * mult, band=fh.band)


def laplacian(fh: SpectralField) -> SpectralField:
    return fh._new(-fh.grid.k2 * fh.coeffs, band=fh.band)


def padded_size(band: int) -> int:
    """Smallest even grid size that resolves products of total band ``band`` exactly."""
    return max(8, 2 * band + 2)


def _gather(c: np.ndarray, n: int, band: int) -> np.ndarray:
    """Modes ``|k| <= band`` from an n-grid, as a ``(2b+1)^2`` block ordered -b..b."""
    idx = np.arange(-band, band + 1) % n
    return c[np.ix_(idx, idx)]


def _scatter(block: np.ndarray, m: int, band: int) -> np.ndarray:
    out = np.zeros((m, m), dtype=complex)
    idx = np.arange(-band, band + 1) % m
    out[np.ix_(idx, idx)] = block
    return out


def _to_padded(fh: SpectralField, band: int, m: int) -> np.ndarray:
    """Physical values of a band-limited field on an m-grid."""
    vals = np.fft.ifft2(_scatter(_gather(fh.coeffs, fh.grid.n, band), m, band)) * m**2
    return vals.real if fh.real else vals


def _from_padded(vals: np.ndarray, grid: Grid, band: int, real: bool) -> SpectralField:
    m = vals.shape[0]
    c = np.fft.fft2(vals) / m**2
    out = _scatter(_gather(c, m, band), grid.n, band)
    if real:
        out = symmetrize(out)
    return SpectralField(grid, out, band=band, real=real, _checked=True)


def _exact_bands(fh: SpectralField, gh: SpectralField) -> tuple[int, int, int]:
    _same_grid(fh, gh)
    if fh.band is None or gh.band is None:
        raise BandError("exact evaluation needs declared bands on both operands")
    total = fh.band + gh.band
    if total > fh.grid.max_band:
        raise BandError(
            f"product band {total} exceeds {fh.grid.max_band}; "
            f"use a grid with n >= {2 * total + 2}"
        )
    return fh.band, gh.band, total


def multiply_exact(fh: SpectralField, gh: SpectralField) -> SpectralField:
    """Alias-free pointwise product of two band-limited fields."""
    b1, b2, total = _exact_bands(fh, gh)
    m = padded_size(total)
    prod = _to_padded(fh, b1, m) * _to_padded(gh, b2, m)
    return _from_padded(prod, fh.grid, total, fh.real and gh.real)


def bracket_exact(fh: SpectralField, gh: SpectralField) -> SpectralField:
    """``{f, g} = f_x g_y - f_y g_x`` without aliasing.

    Both factors are zero-padded to ``M = 2(B1 + B2) + 2`` points per side
    before the products are formed; the result has band ``B1 + B2``.
    """
    b1, b2, total = _exact_bands(fh, gh)
    m = padded_size(total)
    fx = _to_padded(spectral_derivative(fh, "x"), b1, m)
    fy = _to_padded(spectral_derivative(fh, "y"), b1, m)
    gx = _to_padded(spectral_derivative(gh, "x"), b2, m)
    gy = _to_padded(spectral_derivative(gh, "y"), b2, m)
    return _from_padded(fx * gy - fy * gx, fh.grid, total, fh.real and gh.real)


def _full_from_half(half: np.ndarray, n: int) -> np.ndarray:
    """Rebuild a conjugate-symmetric n x n array from its rfft2 half."""
    h = n // 2 + 1
    full = np.empty((n, n), dtype=complex)
    full[:, :h] = half
    rows = (-np.arange(n)) % n
    cols = n - np.arange(h, n)
    full[:, h:] = np.conj(half[np.ix_(rows, cols)])
    return full


def _bracket_dealiased_arrays(fc: np.ndarray, gc: np.ndarray, grid: Grid, real: bool) -> np.ndarray:
    """Dealiased bracket on raw coefficient arrays; output is not symmetrized."""
    keep = grid.dealias_mask
    n = grid.n
    f = np.where(keep, fc, 0)
    g = np.where(keep, gc, 0)
    stack = np.stack([grid.ikx * f, grid.iky * f, grid.ikx * g, grid.iky * g])
    if real:
        # both operands real: half-spectrum transforms, the cutoff is far below n/2
        h = n // 2 + 1
        fx, fy, gx, gy = np.fft.irfft2(stack[:, :, :h], s=(n, n), axes=(1, 2)) * n**2
        half = np.fft.rfft2(fx * gy - fy * gx) / n**2
        return np.where(keep, _full_from_half(half, n), 0)
    fx, fy, gx, gy = np.fft.ifft2(stack, axes=(1, 2)) * n**2
    return np.where(keep, np.fft.fft2(fx * gy - fy * gx) / n**2, 0)


def bracket_dealiased(fh: SpectralField, gh: SpectralField) -> SpectralField:
    """``{f, g}`` on the native grid with 2/3-rule truncation of inputs and output."""
    _same_grid(fh, gh)
    real = fh.real and gh.real
    c = _bracket_dealiased_arrays(fh.coeffs, gh.coeffs, fh.grid, real)
    if real:
        c = symmetrize(c)
    return SpectralField(fh.grid, c, band=fh.grid.dealias_cutoff, real=real, _checked=True)


def poisson_solve(omega: SpectralField) -> SpectralField:
    """Stream function with ``Laplacian(psi) = omega`` and zero mean."""
    mean = abs(omega.coeffs[0, 0])
    if mean > MEAN_TOL * omega.norm():
        raise SolvabilityError(
            f"mean vorticity {mean:.3e} is nonzero; a periodic stream function "
            "exists only for zero-mean vorticity"
        )
    c = -omega.coeffs * omega.grid.inv_k2
    return SpectralField(omega.grid, c, band=omega.band, real=omega.real, _checked=omega.real)


def velocity_from_stream(psi: SpectralField) -> tuple[RealField, RealField]:
    """``u = -psi_y``, ``v = psi_x`` in physical space."""
    if not psi.real:
        raise SymmetryError("velocity recovery needs a real stream function")
    u = transform_inverse(-spectral_derivative(psi, "y"))
    v = transform_inverse(spectral_derivative(psi, "x"))
    return u, v
