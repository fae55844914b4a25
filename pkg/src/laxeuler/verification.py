"""Roundoff-level checks of the bracket algebra and of the two Lax pairs.

For the Euler pair ``L phi = {omega, phi}``, ``A phi = {psi, phi}`` the
residual ``{d_t omega, phi} - (L A - A L) phi`` vanishes identically once
``d_t omega = -{psi, omega}``; with exact (alias-free) brackets on
band-limited data it is pure roundoff. The same construction is applied to
``L phi = lam D1 phi + {omega, phi}``, ``A phi = lam D2 phi + {S, phi}``,
whose compatibility forces ``D1 S = D2 omega``.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import (
    FlowState,
    TimeStepper,
    ZakharovParams,
    diagnostics,
    directional_derivative,
    initial_condition,
    integrate,
    resonant_modes,
    zakharov_solve_S,
)
from .reports import ResidualReport
from .spectral import (
    BandError,
    Grid,
    SpectralField,
    bracket_exact,
    multiply_exact,
    poisson_solve,
    spectral_derivative,
    symmetrize,
)

__all__ = [
    "DEFAULT_TOL",
    "compatibility_residual",
    "zakharov_residual",
    "bracket_identity_suite",
    "conservation_suite",
    "random_test_field",
    "bracket_aliased",
]

DEFAULT_TOL = 1e-11


def random_test_field(grid: Grid, band: int, seed, real: bool = True, include_mean: bool = False) -> SpectralField:
    """Unit-norm Gaussian field on ``max(|kx|,|ky|) <= band``.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts, e.g. a
    ``(seed, trial, slot)`` tuple. Without ``include_mean`` the field has
    zero mean; with it, ``band=0`` gives a random constant.
    """
    if not 0 <= band <= grid.nyquist:
        raise ValueError(f"band must lie in [0, {grid.nyquist}], got {band}")
    rng = np.random.default_rng(seed)
    mask = grid.kmax <= band
    if not include_mean:
        mask[0, 0] = False
    m = int(mask.sum())
    c = np.zeros((grid.n, grid.n), dtype=complex)
    c[mask] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    if real:
        c = symmetrize(c)
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    if norm > 0:
        c = c / norm
    return SpectralField(grid, c, band=band, real=real, _checked=True)


def _check_padding(grid: Grid, total_band: int, what: str):
    if total_band > grid.max_band:
        raise BandError(
            f"{what} needs band {total_band} to be exact; use a grid with n >= {2 * total_band + 2}"
        )


def compatibility_residual(
    omega: SpectralField,
    phi: SpectralField,
    perturbation: SpectralField | None = None,
    tolerance: float = DEFAULT_TOL,
) -> ResidualReport:
    """``{d_t omega, phi} - ({omega, {psi, phi}} - {psi, {omega, phi}})``.

    ``d_t omega = -{psi, omega}`` plus an optional ``perturbation``, which
    exists to show that the check can fail. The residual is measured against
    ``|grad omega| |grad psi| |grad phi|``.
    """
    if not omega.real:
        raise ValueError("omega must be real-valued")
    bo, bp = omega.effective_band, phi.effective_band
    omega, phi = omega.with_band(bo), phi.with_band(bp)
    _check_padding(omega.grid, 2 * bo + bp, "the compatibility residual")
    psi = poisson_solve(omega)
    dt_omega = -bracket_exact(psi, omega)
    if perturbation is not None:
        pert = perturbation.with_band(perturbation.effective_band)
        _check_padding(omega.grid, pert.band + bp, "the perturbed residual")
        dt_omega = dt_omega + pert
    lhs = bracket_exact(dt_omega, phi)
    l_phi = bracket_exact(omega, phi)
    a_phi = bracket_exact(psi, phi)
    commutator = bracket_exact(omega, a_phi) - bracket_exact(psi, l_phi)
    r = lhs - commutator
    scale = omega.grad_norm() * psi.grad_norm() * phi.grad_norm()
    return ResidualReport.build(
        "compatibility",
        r.norm(),
        scale,
        tolerance,
        n=omega.grid.n,
        omega_band=bo,
        phi_band=bp,
        lhs_norm=lhs.norm(),
        commutator_norm=commutator.norm(),
        perturbed=perturbation is not None,
    )


def zakharov_residual(
    omega: SpectralField,
    phi: SpectralField,
    params: ZakharovParams,
    tolerance: float = DEFAULT_TOL,
) -> ResidualReport:
    """``(d_t L - [L, A]) phi`` for ``L = lam D1 + {omega, .}``, ``A = lam D2 + {S, .}``.

    ``S`` is solved from ``D1 S = D2 omega`` and ``d_t omega = -{S, omega}``.
    Expanding the commutator, the ``lam^2`` part cancels because ``D1`` and
    ``D2`` commute, the ``lam`` part is ``lam {D1 S - D2 omega, phi}`` (both
    operators are derivations of the bracket) and the ``lam^0`` part reduces
    to ``-{{S, omega}, phi}`` by the Jacobi identity. The full commutator is
    evaluated directly; the ``lam`` part is reported separately as
    ``constraint_norm``.
    """
    if not omega.real:
        raise ValueError("omega must be real-valued")
    bo, bp = omega.effective_band, phi.effective_band
    omega, phi = omega.with_band(bo), phi.with_band(bp)
    _check_padding(omega.grid, 2 * bo + bp, "the Zakharov residual")
    lam = params.lam
    S = zakharov_solve_S(omega, params)
    violated = resonant_modes(omega, params)

    def d1(f):
        return directional_derivative(f, params.alpha, params.beta)

    def d2(f):
        return directional_derivative(f, params.gamma, params.delta)

    def L(f):
        return d1(f) * lam + bracket_exact(omega, f)

    def A(f):
        return d2(f) * lam + bracket_exact(S, f)

    dt_omega = -bracket_exact(S, omega)
    lhs = bracket_exact(dt_omega, phi)
    commutator = L(A(phi)) - A(L(phi))
    r = lhs - commutator
    constraint = bracket_exact(d1(S) - d2(omega), phi) * lam

    c1 = math.hypot(params.alpha, params.beta)
    c2 = math.hypot(params.gamma, params.delta)
    scale = phi.grad_norm() * (omega.grad_norm() + abs(lam) * c1) * (S.grad_norm() + abs(lam) * c2)
    return ResidualReport.build(
        "zakharov",
        r.norm(),
        scale,
        tolerance,
        n=omega.grid.n,
        omega_band=bo,
        phi_band=bp,
        alpha=params.alpha,
        beta=params.beta,
        gamma=params.gamma,
        delta=params.delta,
        lam=lam,
        resonance_policy=params.resonance_policy,
        violated_modes=violated,
        constraint_norm=constraint.norm(),
    )


def bracket_aliased(fh: SpectralField, gh: SpectralField) -> SpectralField:
    """Bracket on the native grid with no padding and no truncation.

    Only useful as a negative control: products alias freely.
    """
    grid = fh.grid
    n2 = grid.n**2
    fx = np.fft.ifft2(spectral_derivative(fh, "x").coeffs) * n2
    fy = np.fft.ifft2(spectral_derivative(fh, "y").coeffs) * n2
    gx = np.fft.ifft2(spectral_derivative(gh, "x").coeffs) * n2
    gy = np.fft.ifft2(spectral_derivative(gh, "y").coeffs) * n2
    real = fh.real and gh.real
    prod = fx * gy - fy * gx
    if real:
        prod = prod.real
    c = np.fft.fft2(prod) / n2
    if real:
        c = symmetrize(c)
    return SpectralField(grid, c, real=real, _checked=True).with_band(grid.nyquist)


def _sum_norms(*fields) -> float:
    return float(sum(f.norm() for f in fields))


def bracket_identity_suite(
    grid: Grid,
    band: int,
    seed: int,
    trials: int,
    exact: bool = True,
    tolerance: float = DEFAULT_TOL,
) -> list[ResidualReport]:
    """Antisymmetry, bilinearity, Leibniz, Jacobi and zero-mean checks on random fields.

    Every residual is measured against the summed norms of the terms that
    should cancel. ``exact=False`` swaps in :func:`bracket_aliased` and is
    meant as a negative control at large bands.
    """
    br = bracket_exact if exact else bracket_aliased
    if exact:
        _check_padding(grid, 3 * band, "the Jacobi and Leibniz checks")
    reports = []
    for trial in range(trials):
        f, g, h = (
            random_test_field(grid, band, (seed, trial, slot), include_mean=True) for slot in range(3)
        )
        coef = np.random.default_rng((seed, trial, 99)).standard_normal(2)
        a, b = float(coef[0]), float(coef[1])
        ctx = {"seed": seed, "trial": trial, "band": band, "n": grid.n, "exact": exact}

        fg, gf = br(f, g), br(g, f)
        reports.append(
            ResidualReport.build("antisymmetry", (fg + gf).norm(), _sum_norms(fg, gf), tolerance, **ctx)
        )

        fh, gh = br(f, h), br(g, h)
        lin = br(f * a + g * b, h)
        reports.append(
            ResidualReport.build(
                "bilinearity",
                (lin - fh * a - gh * b).norm(),
                abs(a) * fh.norm() + abs(b) * gh.norm(),
                tolerance,
                a=a,
                b=b,
                **ctx,
            )
        )

        if exact:
            left = br(multiply_exact(f, g), h)
            t1 = multiply_exact(f, gh)
            t2 = multiply_exact(g, fh)
            reports.append(
                ResidualReport.build("leibniz", (left - t1 - t2).norm(), _sum_norms(left, t1, t2), tolerance, **ctx)
            )

        j1 = br(f, br(g, h))
        j2 = br(g, br(h, f))
        j3 = br(h, fg)
        reports.append(
            ResidualReport.build("jacobi", (j1 + j2 + j3).norm(), _sum_norms(j1, j2, j3), tolerance, **ctx)
        )

        reports.append(
            ResidualReport.build("zero_mean", abs(fg.coeffs[0, 0]), fg.norm(), tolerance, **ctx)
        )
    return reports


def _drift(rows: np.ndarray, col: int) -> float:
    return float(np.max(np.abs(rows[:, col] - rows[0, col])))


def _run_with_diagnostics(omega0, stepper, T, samples):
    nsteps = stepper.steps_to(T)
    every = max(1, nsteps // max(samples, 1))
    rows = [diagnostics(omega0).as_row(0.0)]

    def record(i, state):
        if i % every == 0 or i == nsteps:
            rows.append(diagnostics(state.omega).as_row(state.time))

    state = integrate(FlowState(0.0, omega0), stepper, nsteps, callback=record)
    return state.omega, np.array(rows)


def conservation_suite(
    ic_name: str,
    stepper: TimeStepper,
    T: float,
    samples: int = 10,
    grid: Grid | None = None,
    ic_params: dict | None = None,
    seed: int = 0,
    drift_tolerance: float = 1e-6,
    casimir_tolerance: float = math.inf,
    halvings: int = 2,
    order_window: tuple[float, float] = (3.5, 4.5),
    min_drift_order: float = 3.5,
) -> list[ResidualReport]:
    """Invariant drifts along a run, plus dt-halving convergence checks.

    The flow is run to ``T`` at ``dt`` and ``halvings`` successively halved
    steps. Drifts of energy, enstrophy and the two Casimirs come from the
    ``dt`` run, sampled ``samples`` times, relative to the initial energy and
    enstrophy; Casimirs are scaled by ``(2 Z)^(p/2)`` because their initial
    values can vanish. The dealiased system conserves only the quadratic
    invariants, so Casimir drifts are reported but, by default, not gated.

    With two halvings the solution order ``log2(|w_dt - w_dt/2| /
    |w_dt/2 - w_dt/4|)`` must land in ``order_window``. With at least one,
    the enstrophy drift must fall by ``2**min_drift_order`` or more per
    halving. Either check is waived when the quantities it compares sit at
    roundoff (a steady flow, or drifts below ``1e-13``).
    """
    grid = grid or Grid(128)
    omega0 = initial_condition(ic_name, ic_params, grid, seed)
    ctx = {"ic": ic_name, "ic_params": dict(ic_params or {}), "seed": seed, "n": grid.n, "dt": stepper.dt, "T": T}
    finals, tables = [], []
    for level in range(halvings + 1):
        st = stepper if level == 0 else TimeStepper(stepper.dt / 2**level)
        w, rows = _run_with_diagnostics(omega0, st, T, samples)
        finals.append(w)
        tables.append(rows)

    data = tables[0]
    e0, z0 = data[0, 1], data[0, 2]
    reports = [
        ResidualReport.build("energy_drift", _drift(data, 1), e0, drift_tolerance, **ctx),
        ResidualReport.build("enstrophy_drift", _drift(data, 2), z0, drift_tolerance, **ctx),
    ]
    for col, p in ((3, 3), (4, 4)):
        reports.append(
            ResidualReport.build(
                f"casimir{p}_drift", _drift(data, col), (2 * z0) ** (p / 2), casimir_tolerance, **ctx
            )
        )

    if halvings >= 1:
        drifts = [_drift(t, 2) / z0 if z0 > 0 else 0.0 for t in tables]
        energy = [_drift(t, 1) / e0 if e0 > 0 else 0.0 for t in tables]
        if drifts[1] <= 1e-13:
            reports.append(
                ResidualReport.build("drift_order", 0.0, 1.0, 1.0, drifts=drifts, energy_drifts=energy, waived=True, **ctx)
            )
        else:
            order = math.log2(drifts[0] / drifts[1])
            reports.append(
                # relative = required order / observed order, so it passes at <= 1
                ResidualReport.build(
                    "drift_order",
                    min_drift_order,
                    max(order, 0.0),
                    1.0,
                    order=order,
                    drifts=drifts,
                    energy_drifts=energy,
                    **ctx,
                )
            )

    if halvings >= 2:
        d1 = (finals[0] - finals[1]).norm()
        d2 = (finals[1] - finals[2]).norm()
        floor = 1e-13 * max(omega0.norm(), 1e-300)
        lo, hi = order_window
        if d1 <= floor and d2 <= floor:
            reports.append(
                ResidualReport.build(
                    "self_convergence_order", 0.0, 1.0, 1.0, order=None, diff_dt=d1, diff_dt2=d2, waived=True, **ctx
                )
            )
        else:
            order = math.log2(d1 / d2) if d2 > 0 else math.inf
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            reports.append(
                ResidualReport.build(
                    "self_convergence_order", abs(order - mid), 1.0, half, order=order, diff_dt=d1, diff_dt2=d2, **ctx
                )
            )
    return reports
