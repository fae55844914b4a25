"""Dense truncations of the bracket operators ``phi -> {omega, phi}`` and ``phi -> {psi, phi}``.

Both operators act on a box of Fourier modes ``max(|kx|,|ky|) <= K`` with
the mean mode removed. Input and output are projected onto the same box,
which keeps the matrices skew-Hermitian for real generating fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .dynamics import FlowState, TimeStepper, euler_rhs, integrate
from .reports import ResidualReport
from .spectral import BandError, Grid, SpectralField, poisson_solve

__all__ = [
    "ModeBox",
    "OperatorMatrix",
    "SpectrumReport",
    "NonStationaryError",
    "assemble_operator",
    "eigendecompose",
    "eigenvalues",
    "sort_eigenvalues",
    "hausdorff",
    "spectrum_along_flow",
    "eigenfunction_transport_check",
]

K_CAP = 32
SKEW_TOL = 1e-13
EIG_RESIDUAL_TOL = 1e-10


class NonStationaryError(ValueError):
    """The base flow passed to a closed-form check is not a steady state."""


@dataclass(frozen=True)
class ModeBox:
    """Modes with ``max(|kx|,|ky|) <= K`` except the origin, sorted by ``(kx, ky)``."""

    K: int

    def __post_init__(self):
        if not 1 <= self.K <= K_CAP:
            raise ValueError(f"K must lie in [1, {K_CAP}], got {self.K}")

    @cached_property
    def modes(self) -> np.ndarray:
        r = np.arange(-self.K, self.K + 1)
        kx, ky = np.meshgrid(r, r, indexing="ij")
        m = np.column_stack([kx.ravel(), ky.ravel()])
        return m[(m[:, 0] != 0) | (m[:, 1] != 0)]

    @property
    def dim(self) -> int:
        return (2 * self.K + 1) ** 2 - 1

    def position(self, kx: int, ky: int) -> int:
        """Row of mode ``(kx, ky)`` in the ordering."""
        if max(abs(kx), abs(ky)) > self.K or (kx, ky) == (0, 0):
            raise KeyError((kx, ky))
        i = (kx + self.K) * (2 * self.K + 1) + (ky + self.K)
        return i - 1 if i > self.dim // 2 else i

    def _check_grid(self, grid: Grid):
        if self.K > grid.max_band:
            raise BandError(f"box radius {self.K} exceeds grid support {grid.max_band} (n={grid.n})")

    def mask(self, grid: Grid) -> np.ndarray:
        self._check_grid(grid)
        m = grid.kmax <= self.K
        m[0, 0] = False
        return m

    def vector(self, f: SpectralField) -> np.ndarray:
        """Coefficients of ``f`` on the box, in box order."""
        self._check_grid(f.grid)
        return f.coeffs[self.modes[:, 0] % f.grid.n, self.modes[:, 1] % f.grid.n].copy()

    def field(self, vec: np.ndarray, grid: Grid) -> SpectralField:
        """Lift a box vector to a complex band-limited field."""
        self._check_grid(grid)
        c = np.zeros((grid.n, grid.n), dtype=complex)
        c[self.modes[:, 0] % grid.n, self.modes[:, 1] % grid.n] = vec
        return SpectralField(grid, c, band=self.K)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    box: ModeBox
    entries: np.ndarray
    kind: str

    def norm(self) -> float:
        """Frobenius norm (an upper bound on the operator 2-norm)."""
        return float(np.linalg.norm(self.entries))

    def skew_defect(self) -> float:
        return float(np.max(np.abs(self.entries + self.entries.conj().T), initial=0.0))

    def is_skew_hermitian(self, rtol: float = SKEW_TOL) -> bool:
        return self.skew_defect() <= rtol * self.norm()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.entries @ vec


def assemble_operator(omega: SpectralField, kind: str, box: ModeBox) -> OperatorMatrix:
    """Matrix of ``P {g, .} P`` on the box, ``g = omega`` (``"L"``) or ``psi`` (``"A"``).

    ``M[k, k'] = -(p_x q_y - p_y q_x) g_p`` with ``p = k - k'`` and ``q = k'``.
    Generating-field modes beyond the grid's representable range contribute
    nothing.
    """
    if kind == "L":
        g = omega
    elif kind == "A":
        g = poisson_solve(omega)
    else:
        raise ValueError(f"kind must be 'L' or 'A', got {kind!r}")
    grid = omega.grid
    box._check_grid(grid)
    k = box.modes
    px = k[:, None, 0] - k[None, :, 0]
    py = k[:, None, 1] - k[None, :, 1]
    qx = k[None, :, 0]
    qy = k[None, :, 1]
    inside = np.maximum(np.abs(px), np.abs(py)) <= grid.max_band
    gp = np.where(inside, g.coeffs[px % grid.n, py % grid.n], 0)
    entries = -(px * qy - py * qx) * gp
    return OperatorMatrix(box, entries, kind)


def sort_eigenvalues(lam: np.ndarray, vecs: np.ndarray | None = None):
    """Order by imaginary part, then real part, then magnitude."""
    order = np.lexsort((np.abs(lam), lam.real, lam.imag))
    if vecs is None:
        return lam[order]
    return lam[order], vecs[:, order]


def eigendecompose(m: OperatorMatrix, method: str = "auto", check: bool = True):
    """Full eigendecomposition, eigenvalues sorted deterministically.

    ``method="hermitian"`` diagonalizes ``i M`` with a Hermitian solver and
    only makes sense for skew-Hermitian ``M``; ``"general"`` uses the
    nonsymmetric solver; ``"auto"`` picks the former when the structure holds.
    With ``check`` each pair is verified to ``|Mv - lam v| <= 1e-10 |M|``.
    """
    a = m.entries
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("operator matrix has non-finite entries")
    if method == "auto":
        method = "hermitian" if m.is_skew_hermitian() else "general"
    try:
        if method == "hermitian":
            mu, vecs = np.linalg.eigh(1j * a)
            lam = -1j * mu
        elif method == "general":
            lam, vecs = np.linalg.eig(a)
        else:
            raise ValueError(f"unknown method {method!r}")
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigendecomposition failed for |M|_F={m.norm():.3e}: {exc}") from exc
    lam, vecs = sort_eigenvalues(lam, vecs)
    if check and a.size:
        res = np.linalg.norm(a @ vecs - vecs * lam, axis=0)
        worst = float(res.max())
        if worst > EIG_RESIDUAL_TOL * max(m.norm(), 1.0):
            raise np.linalg.LinAlgError(
                f"eigenpair residual {worst:.3e} exceeds {EIG_RESIDUAL_TOL:g}*|M| (|M|_F={m.norm():.3e})"
            )
    return lam, vecs


def eigenvalues(m: OperatorMatrix, method: str = "auto") -> np.ndarray:
    """Sorted eigenvalues only."""
    if method == "auto":
        method = "hermitian" if m.is_skew_hermitian() else "general"
    if method == "hermitian":
        lam = -1j * np.linalg.eigvalsh(1j * m.entries)
    else:
        lam = np.linalg.eigvals(m.entries)
    return sort_eigenvalues(lam)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two finite sets of complex numbers."""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    d = cdist(pa, pb)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass
class SpectrumReport:
    """Truncated spectra of ``L`` along a trajectory.

    ``norms`` holds the operator 2-norm at each sample (the spectral radius,
    as the matrices are normal). ``relative_drift`` divides each Hausdorff
    drift by the larger of the two norms involved, which makes drifts from
    different box sizes comparable.
    """

    K: int
    times: list[float]
    eigenvalues: list[np.ndarray] = field(default_factory=list)
    drift: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    @property
    def relative_drift(self) -> list[float]:
        out = []
        for i, d in enumerate(self.drift):
            scale = max(self.norms[i], self.norms[i + 1])
            out.append(d / scale if scale > 0 else d)
        return out

    @property
    def max_drift(self) -> float:
        return max(self.drift, default=0.0)

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "times": list(self.times),
            "norms": list(self.norms),
            "drift": list(self.drift),
            "relative_drift": self.relative_drift,
            "eigenvalues": [[[float(z.real), float(z.imag)] for z in lam] for lam in self.eigenvalues],
        }


def spectrum_along_flow(
    ic: SpectralField, stepper: TimeStepper, K: int, sample_times: Sequence[float]
) -> SpectrumReport:
    """Evolve ``ic`` and record the truncated spectrum of ``L`` at each sample time.

    ``drift[i]`` is the Hausdorff distance between the spectra at
    ``sample_times[i]`` and ``sample_times[i+1]``.
    """
    times = [float(t) for t in sample_times]
    if not times or times[0] != 0.0:
        raise ValueError("sample times must start at 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must increase")
    box = ModeBox(K)
    report = SpectrumReport(K=K, times=times)
    state = FlowState(0.0, ic)
    done = 0
    for t in times:
        target = stepper.steps_to(t)
        state = integrate(state, stepper, target - done)
        done = target
        m = assemble_operator(state.omega, "L", box)
        lam = eigenvalues(m)
        if report.eigenvalues:
            report.drift.append(hausdorff(report.eigenvalues[-1], lam))
        report.eigenvalues.append(lam)
        report.norms.append(float(np.abs(lam).max(initial=0.0)))
    return report


def _stationary_ratio(ic: SpectralField) -> float:
    """``c`` with ``psi = c * omega``; raises if the base flow is not of that kind."""
    scale = max(ic.norm() ** 2, 1e-300)
    rhs = euler_rhs(ic)
    if rhs.norm() > 1e-12 * scale:
        raise NonStationaryError(
            f"initial vorticity is not stationary: |rhs| = {rhs.norm():.3e}"
        )
    psi = poisson_solve(ic)
    wn = ic.norm()
    if wn == 0:
        return 0.0
    c = float(np.vdot(ic.coeffs, psi.coeffs).real / wn**2)
    if (psi - ic * c).norm() > 1e-12 * psi.norm():
        raise NonStationaryError("closed-form transport needs psi proportional to omega")
    return c


def eigenfunction_transport_check(
    ic: SpectralField,
    K: int,
    mode_index: int | None,
    stepper: TimeStepper,
    T: float,
    tolerance: float = 1e-6,
    norm_tolerance: float = 1e-8,
) -> list[ResidualReport]:
    """Transport an eigenvector of the truncated ``L`` and compare with the closed form.

    For a steady base flow with ``psi = c * omega`` the transport operator is
    ``c L``, so an eigenpair ``(lam, phi0)`` of the box operator evolves as
    ``phi(t) = exp(-c lam t) phi0``. ``phi`` is stepped together with the
    flow, its tendency projected onto the box. ``mode_index`` selects the
    eigenpair in sorted order; by default the one with the largest imaginary
    part.

    Returns reports for the transport error, norm preservation and the
    eigen-residual at time ``T``.
    """
    c = _stationary_ratio(ic)
    grid = ic.grid
    box = ModeBox(K)
    band = ic.effective_band
    if K > grid.dealias_cutoff or grid.n <= band + 2 * K:
        raise BandError(f"grid n={grid.n} too small for exact box transport at K={K}, band={band}")
    m = assemble_operator(ic, "L", box)
    lam_all, vecs = eigendecompose(m)
    idx = len(lam_all) - 1 if mode_index is None else mode_index
    if not -len(lam_all) <= idx < len(lam_all):
        raise IndexError(f"mode index {idx} outside [0, {len(lam_all)})")
    lam = complex(lam_all[idx])
    phi0 = box.field(vecs[:, idx], grid)
    state = FlowState(0.0, ic, ((phi0, lam),))
    state = integrate(state, stepper, stepper.steps_to(T), phi_box=box)
    phiT = state.phis[0][0]

    v0 = box.vector(phi0)
    vT = box.vector(phiT)
    expected = np.exp(-c * lam * T) * v0
    n0 = np.linalg.norm(v0)
    nT = np.linalg.norm(vT)
    ctx = {"K": K, "mode_index": int(idx % len(lam_all)), "lambda": lam, "T": T, "dt": stepper.dt, "psi_over_omega": c, "n": grid.n}
    transport = ResidualReport.build("transport", np.linalg.norm(vT - expected), n0, tolerance, **ctx)
    norm = ResidualReport.build("norm_preservation", abs(nT - n0), n0, norm_tolerance, **ctx)
    eig_res = np.linalg.norm(m.apply(vT) - lam * vT)
    eigen = ResidualReport.build("eigen_residual", eig_res, nT, tolerance, **ctx)
    return [transport, norm, eigen]
