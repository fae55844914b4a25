"""Vorticity dynamics on the torus.

Evolves ``d(omega)/dt + {psi, omega} = 0`` with ``Laplacian(psi) = omega``,
optionally transporting test functions ``phi`` along with it through
``d(phi)/dt + {psi, phi} = 0``. The modified system in which ``psi`` is
replaced by ``S`` solving ``D1 S = D2 omega`` (two constant-coefficient
directional derivatives) is also available.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    SolvabilityError,
    bracket_dealiased,
    _bracket_dealiased_arrays,
    measured_band,
    padded_size,
    poisson_solve,
    symmetrize,
    velocity_from_stream,
    MEAN_TOL,
)

log = logging.getLogger(__name__)

__all__ = [
    "FlowState",
    "TimeStepper",
    "ZakharovParams",
    "ResonanceError",
    "NumericalBlowup",
    "euler_rhs",
    "phi_rhs",
    "step",
    "integrate",
    "zakharov_solve_S",
    "zakharov_rhs",
    "resonant_modes",
    "directional_derivative",
    "initial_condition",
    "random_band_field",
    "diagnostics",
    "Diagnostics",
    "INITIAL_CONDITIONS",
]


class ResonanceError(SolvabilityError):
    """``D1 S = D2 omega`` has no solution on some lattice modes."""

    def __init__(self, modes):
        self.modes = list(modes)
        shown = ", ".join(str(m) for m in self.modes[:8])
        more = "" if len(self.modes) <= 8 else f" (+{len(self.modes) - 8} more)"
        super().__init__(
            f"resonant modes with alpha*kx + beta*ky = 0 carry nonzero D2 omega: {shown}{more}"
        )


class NumericalBlowup(FloatingPointError):
    """A field became non-finite during time stepping."""


@dataclass(frozen=True)
class FlowState:
    time: float
    omega: SpectralField
    phis: tuple[tuple[SpectralField, complex], ...] = ()

    def __post_init__(self):
        if not self.omega.real:
            raise ValueError("vorticity must be flagged real-valued")
        mean = abs(self.omega.coeffs[0, 0])
        if mean > MEAN_TOL * self.omega.norm():
            raise SolvabilityError(f"vorticity mean {mean:.3e} is not zero")
        object.__setattr__(self, "phis", tuple((p, complex(lam)) for p, lam in self.phis))


@dataclass(frozen=True)
class TimeStepper:
    """Classical four-stage Runge-Kutta with a fixed step."""

    dt: float
    scheme: str = "rk4"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme != "rk4":
            raise ValueError(f"only the rk4 scheme is available, got {self.scheme!r}")

    def cfl(self, omega: SpectralField) -> float:
        u, v = velocity_from_stream(poisson_solve(omega))
        umax = max(np.abs(u.values).max(), np.abs(v.values).max())
        return self.dt * umax * omega.grid.n / (2 * np.pi)

    def check_cfl(self, omega: SpectralField) -> bool:
        c = self.cfl(omega)
        if c > 0.5:
            log.warning("CFL number %.3f exceeds 0.5 (dt=%g, n=%d)", c, self.dt, omega.grid.n)
            return False
        return True

    def steps_to(self, duration: float) -> int:
        nsteps = round(duration / self.dt)
        if abs(nsteps * self.dt - duration) > 1e-9 * max(1.0, abs(duration)):
            raise ValueError(f"duration {duration} is not a multiple of dt={self.dt}")
        return nsteps


@dataclass(frozen=True)
class ZakharovParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    lam: complex = 0j
    resonance_policy: str = "error"

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("(alpha, beta) must not both vanish")
        if self.resonance_policy not in ("error", "zero-gauge"):
            raise ValueError(f"unknown resonance policy {self.resonance_policy!r}")
        object.__setattr__(self, "lam", complex(self.lam))


def euler_rhs(omega: SpectralField) -> SpectralField:
    """``-{psi, omega}`` with the 2/3-dealiased bracket."""
    return -bracket_dealiased(poisson_solve(omega), omega)


def phi_rhs(omega: SpectralField, phi: SpectralField, psi: SpectralField | None = None) -> SpectralField:
    """``-{psi, phi}``: transport of a test function by the flow."""
    if psi is None:
        psi = poisson_solve(omega)
    return -bracket_dealiased(psi, phi)


def _project(c: np.ndarray, grid: Grid, box) -> np.ndarray:
    if box is None:
        return c
    return np.where(box.mask(grid), c, 0)


def _rhs_arrays(omega_c, phi_cs, grid, box):
    psi_c = -omega_c * grid.inv_k2
    d_omega = -_bracket_dealiased_arrays(psi_c, omega_c, grid, True)
    d_phis = [_project(-_bracket_dealiased_arrays(psi_c, c, grid, False), grid, box) for c in phi_cs]
    return d_omega, d_phis


def step(state: FlowState, stepper: TimeStepper, phi_box=None) -> FlowState:
    """Advance vorticity and every transported ``phi`` by one RK4 step.

    The stream function is recomputed from the stage vorticity at every
    stage, so ``phi`` sees a stage-consistent transport operator. When
    ``phi_box`` (a :class:`~laxeuler.lax.ModeBox`) is given, the ``phi``
    tendencies are projected onto it, which is the Galerkin truncation the
    dense operator matrices use.
    """
    grid = state.omega.grid
    dt = stepper.dt
    w0 = state.omega.coeffs
    p0 = [phi.coeffs for phi, _ in state.phis]

    k1w, k1p = _rhs_arrays(w0, p0, grid, phi_box)
    k2w, k2p = _rhs_arrays(
        w0 + 0.5 * dt * k1w, [p + 0.5 * dt * k for p, k in zip(p0, k1p)], grid, phi_box
    )
    k3w, k3p = _rhs_arrays(
        w0 + 0.5 * dt * k2w, [p + 0.5 * dt * k for p, k in zip(p0, k2p)], grid, phi_box
    )
    k4w, k4p = _rhs_arrays(w0 + dt * k3w, [p + dt * k for p, k in zip(p0, k3p)], grid, phi_box)

    w1 = symmetrize(w0 + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w))
    if not np.all(np.isfinite(w1)):
        raise NumericalBlowup(f"omega became non-finite at t={state.time + dt:g}")
    phis = []
    for i, (phi, lam) in enumerate(state.phis):
        c = p0[i] + dt / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i])
        if not np.all(np.isfinite(c)):
            raise NumericalBlowup(f"phi[{i}] became non-finite at t={state.time + dt:g}")
        phis.append((SpectralField(grid, c, real=False), lam))
    omega = SpectralField(grid, w1, real=True, _checked=True)
    return FlowState(state.time + dt, omega, tuple(phis))


def integrate(state: FlowState, stepper: TimeStepper, nsteps: int, phi_box=None, callback=None) -> FlowState:
    """Apply :func:`step` ``nsteps`` times; ``callback(i, state)`` after each."""
    for i in range(1, nsteps + 1):
        state = step(state, stepper, phi_box=phi_box)
        if callback is not None:
            callback(i, state)
    return state


def directional_derivative(fh: SpectralField, a: float, b: float) -> SpectralField:
    """``a d/dx + b d/dy`` applied spectrally."""
    grid = fh.grid
    mult = 1j * (a * grid.kx + b * grid.ky)
    mult = np.where((grid.kx == -grid.nyquist) | (grid.ky == -grid.nyquist), 0, mult)
    return fh._new(fh.coeffs * mult, band=fh.band)


def _resonance(omega: SpectralField, params: ZakharovParams):
    grid = omega.grid
    d1 = params.alpha * grid.kx + params.beta * grid.ky
    d2 = params.gamma * grid.kx + params.delta * grid.ky
    scale = (abs(params.alpha) + abs(params.beta)) * np.sqrt(grid.k2)
    on_line = np.abs(d1) <= 1e-12 * scale
    on_line[0, 0] = True
    rhs = np.abs(omega.coeffs * d2)
    bad = on_line & (rhs > 1e-13 * omega.norm())
    bad[0, 0] = False
    return d1, d2, on_line, bad


def resonant_modes(omega: SpectralField, params: ZakharovParams) -> list[tuple[int, int]]:
    """Modes where ``D1 S = D2 omega`` cannot be solved."""
    grid = omega.grid
    _, _, _, bad = _resonance(omega, params)
    idx = np.argwhere(bad)
    return sorted((int(grid.k[i]), int(grid.k[j])) for i, j in idx)


def zakharov_solve_S(omega: SpectralField, params: ZakharovParams) -> SpectralField:
    """Solve ``(alpha d_x + beta d_y) S = (gamma d_x + delta d_y) omega``.

    Off the resonant line ``alpha kx + beta ky = 0`` the solution is
    ``S_k = (gamma kx + delta ky) / (alpha kx + beta ky) * omega_k``. On it,
    ``S_k = 0``; that is a legitimate gauge only when ``D2 omega`` vanishes
    there. Otherwise the ``error`` policy raises :class:`ResonanceError` and
    ``zero-gauge`` proceeds with a warning.
    """
    if abs(omega.coeffs[0, 0]) > MEAN_TOL * omega.norm():
        raise SolvabilityError("Zakharov solve needs zero-mean vorticity")
    d1, d2, on_line, bad = _resonance(omega, params)
    if bad.any():
        modes = resonant_modes(omega, params)
        if params.resonance_policy == "error":
            raise ResonanceError(modes)
        log.warning("zero-gauge applied on %d unsolvable resonant modes", len(modes))
    ratio = np.where(on_line, 0.0, d2 / np.where(on_line, 1.0, d1))
    return omega._new(ratio * omega.coeffs, band=omega.band)


def zakharov_rhs(omega: SpectralField, params: ZakharovParams) -> SpectralField:
    """``-{S, omega}`` for the modified system, dealiased."""
    return -bracket_dealiased(zakharov_solve_S(omega, params), omega)


def random_band_field(grid: Grid, band: int, seed: int, real: bool = True) -> SpectralField:
    """Gaussian coefficients on ``0 < max(|kx|,|ky|) <= band``.

    Real fields get exact conjugate symmetry. Nothing is normalized here.
    """
    if not 0 <= band <= grid.max_band:
        raise ValueError(f"band must lie in [0, {grid.max_band}], got {band}")
    rng = np.random.default_rng(seed)
    mask = grid.kmax <= band
    mask[0, 0] = False
    c = np.zeros((grid.n, grid.n), dtype=complex)
    m = int(mask.sum())
    c[mask] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    if real:
        c = symmetrize(c)
    return SpectralField(grid, c, band=band, real=real, _checked=True)


def _taylor_green(grid, params, seed):
    amp = params.get("amplitude", 1.0)
    return {(1, 1): amp / 2, (1, -1): amp / 2, (-1, 1): amp / 2, (-1, -1): amp / 2}


def _shear(grid, params, seed):
    amp = params.get("amplitude", 1.0)
    return {(0, 1): amp / 2, (0, -1): amp / 2}


def _perturbed_shear(grid, params, seed):
    eps = float(params.get("eps", 0.1))
    m = int(params.get("m", 8))
    if not math.isfinite(eps):
        raise ValueError("eps must be finite")
    # m = 1 gives a Laplacian eigenfunction, which does not evolve
    if not 1 <= m <= grid.dealias_cutoff:
        raise ValueError(f"perturbation wavenumber m must lie in [1, {grid.dealias_cutoff}]")
    modes = _shear(grid, {}, seed)
    modes.update({(m, 0): eps / 2, (-m, 0): eps / 2})
    return modes


INITIAL_CONDITIONS = ("taylor-green", "shear", "perturbed-shear", "random-band", "zero")
_ALLOWED = {
    "taylor-green": {"amplitude"},
    "shear": {"amplitude"},
    "perturbed-shear": {"eps", "m"},
    "random-band": {"band"},
    "zero": set(),
}


def initial_condition(name: str, params: dict | None = None, grid: Grid | None = None, seed: int = 0) -> SpectralField:
    """Zero-mean initial vorticity by name.

    ``shear`` is ``cos y``, ``taylor-green`` is ``2 cos x cos y`` and
    ``perturbed-shear`` is ``cos y + eps cos(m x)`` (``eps=0.1``, ``m=8``).
    ``random-band`` draws Gaussian coefficients from ``seed`` on a box of
    radius ``band`` (default 8) and rescales to unit enstrophy.
    """
    params = dict(params or {})
    if grid is None:
        grid = Grid(64)
    if name not in _ALLOWED:
        raise ValueError(f"unknown initial condition {name!r}; choose from {INITIAL_CONDITIONS}")
    extra = set(params) - _ALLOWED[name]
    if extra:
        raise ValueError(f"unexpected parameters for {name!r}: {sorted(extra)}")
    c = np.zeros((grid.n, grid.n), dtype=complex)
    if name == "random-band":
        band = int(params.get("band", 8))
        if band < 1:
            raise ValueError("random-band needs band >= 1")
        f = random_band_field(grid, band, seed)
        z = 0.5 * f.norm() ** 2
        return f * (1.0 / math.sqrt(z))
    if name != "zero":
        builders = {"taylor-green": _taylor_green, "shear": _shear, "perturbed-shear": _perturbed_shear}
        for (kx, ky), v in builders[name](grid, params, seed).items():
            c[grid.index(kx, ky)] += v
    f = SpectralField(grid, c, real=True)
    return f.with_band(measured_band(f))


@dataclass(frozen=True)
class Diagnostics:
    energy: float
    enstrophy: float
    casimir3: float
    casimir4: float

    def as_row(self, time: float) -> list[float]:
        return [time, self.energy, self.enstrophy, self.casimir3, self.casimir4]


def _casimirs(omega: SpectralField) -> tuple[float, float]:
    band = omega.effective_band
    if band > omega.grid.max_band:
        w = (np.fft.ifft2(omega.coeffs) * omega.grid.n**2).real
        return float(np.mean(w**3)), float(np.mean(w**4))
    m = padded_size(2 * band)
    # a grid of m >= 4B + 2 points integrates the band-4B polynomial omega^4 exactly
    idx = np.arange(-band, band + 1)
    block = omega.coeffs[np.ix_(idx % omega.grid.n, idx % omega.grid.n)]
    pad = np.zeros((m, m), dtype=complex)
    pad[np.ix_(idx % m, idx % m)] = block
    w = (np.fft.ifft2(pad) * m**2).real
    return float(np.mean(w**3)), float(np.mean(w**4))


def diagnostics(omega: SpectralField) -> Diagnostics:
    """Energy, enstrophy and the cubic and quartic Casimirs."""
    a2 = np.abs(omega.coeffs) ** 2
    k2 = omega.grid.k2.copy()
    k2[0, 0] = np.inf
    energy = 0.5 * float(np.sum(a2 / k2))
    enstrophy = 0.5 * float(np.sum(a2))
    c3, c4 = _casimirs(omega)
    return Diagnostics(energy, enstrophy, c3, c4)
