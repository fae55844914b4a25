import logging
import math

import numpy as np
import pytest
import sympy as sp

from laxeuler.dynamics import (
    INITIAL_CONDITIONS,
    FlowState,
    NumericalBlowup,
    ResonanceError,
    TimeStepper,
    ZakharovParams,
    diagnostics,
    directional_derivative,
    euler_rhs,
    initial_condition,
    integrate,
    phi_rhs,
    random_band_field,
    resonant_modes,
    step,
    zakharov_rhs,
    zakharov_solve_S,
)
from laxeuler.spectral import Grid, SolvabilityError, SpectralField, from_modes, transform_forward, transform_inverse

x, y = sp.symbols("x y", real=True)


def bracket_sym(f, g):
    return sp.diff(f, x) * sp.diff(g, y) - sp.diff(f, y) * sp.diff(g, x)


def on_grid(expr, grid):
    X, Y = grid.coordinates()
    return sp.lambdify((x, y), expr, "numpy")(X, Y) * np.ones_like(X)


def field_of(expr, grid):
    return transform_forward(on_grid(expr, grid)).with_band()


class TestRhs:
    def test_two_mode_oracle(self, grid32):
        eps = sp.Rational(1, 10)
        omega = sp.cos(y) + eps * sp.cos(2 * x)
        psi = -sp.cos(y) - eps / 4 * sp.cos(2 * x)
        assert sp.simplify(sp.diff(psi, x, 2) + sp.diff(psi, y, 2) - omega) == 0
        expect = sp.simplify(-bracket_sym(psi, omega))
        # by hand: -(3 eps / 2) sin 2x sin y
        assert sp.simplify(expect + sp.Rational(3, 2) * eps * sp.sin(2 * x) * sp.sin(y)) == 0
        got = transform_inverse(euler_rhs(field_of(omega, grid32))).values
        assert np.max(np.abs(got - on_grid(expect, grid32))) < 1e-14

    @pytest.mark.parametrize("name", ["shear", "taylor-green"])
    def test_steady_states(self, grid32, name):
        w = initial_condition(name, grid=grid32)
        assert np.max(np.abs(euler_rhs(w).coeffs)) < 1e-15

    def test_perturbed_shear_not_steady(self, grid64):
        w = initial_condition("perturbed-shear", grid=grid64)
        assert euler_rhs(w).norm() > 1e-2

    def test_phi_rhs_plane_wave(self, grid32):
        # psi = -cos y, phi = e^{ix}:  -{psi, phi} = -(0 - sin y * i e^{ix}) = i sin y e^{ix}
        w = field_of(sp.cos(y), grid32)
        phi = from_modes(grid32, {(1, 0): 1.0})
        got = transform_inverse(phi_rhs(w, phi))
        X, Y = grid32.coordinates()
        assert np.max(np.abs(got - 1j * np.sin(Y) * np.exp(1j * X))) < 1e-14

    def test_phi_rhs_sympy(self, grid32):
        omega = sp.cos(x) * sp.sin(y) + sp.cos(2 * y)
        psi = -sp.cos(x) * sp.sin(y) / 2 - sp.cos(2 * y) / 4
        phi = sp.sin(x + y) + sp.cos(3 * x)
        expect = -bracket_sym(psi, phi)
        got = transform_inverse(phi_rhs(field_of(omega, grid32), field_of(phi, grid32)))
        assert np.max(np.abs(got.values - on_grid(expect, grid32))) < 1e-13


class TestStepping:
    def test_steady_shear_stays_put(self, grid32):
        w = initial_condition("shear", grid=grid32)
        s = integrate(FlowState(0.0, w), TimeStepper(0.01), 50)
        assert s.time == pytest.approx(0.5)
        assert np.max(np.abs(s.omega.coeffs - w.coeffs)) < 1e-14

    def test_fourth_order(self):
        grid = Grid(64)
        w = initial_condition("perturbed-shear", {"eps": 0.1, "m": 4}, grid)
        finals = []
        for dt in (0.05, 0.025, 0.0125):
            st = TimeStepper(dt)
            finals.append(integrate(FlowState(0.0, w), st, st.steps_to(1.0)).omega)
        order = math.log2((finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm())
        assert 3.5 <= order <= 4.5

    def test_phi_carried_with_box(self, grid32):
        from laxeuler.lax import ModeBox

        w = initial_condition("shear", grid=grid32)
        phi = from_modes(grid32, {(1, 0): 1.0, (9, 9): 1.0})
        box = ModeBox(4)
        s = step(FlowState(0.0, w, ((phi, 0),)), TimeStepper(0.01), phi_box=box)
        out = s.phis[0][0].coeffs
        assert np.all(out[~box.mask(grid32)] == phi.coeffs[~box.mask(grid32)])

    def test_blowup_detected(self, grid32):
        c = np.zeros((32, 32), dtype=complex)
        c[grid32.index(0, 1)] = c[grid32.index(0, -1)] = 1e300
        c[grid32.index(3, 0)] = c[grid32.index(-3, 0)] = 1e300
        w = SpectralField(grid32, c, real=True, band=3)
        with pytest.raises(NumericalBlowup):
            with np.errstate(all="ignore"):
                step(FlowState(0.0, w), TimeStepper(1.0))

    def test_stepper_validation(self):
        with pytest.raises(ValueError):
            TimeStepper(0.0)
        with pytest.raises(ValueError):
            TimeStepper(0.1, scheme="euler")
        with pytest.raises(ValueError, match="multiple"):
            TimeStepper(0.3).steps_to(1.0)
        assert TimeStepper(1e-3).steps_to(1.0) == 1000

    def test_cfl_warning(self, grid32, caplog):
        w = initial_condition("shear", {"amplitude": 100.0}, grid32)
        with caplog.at_level(logging.WARNING):
            assert not TimeStepper(0.1).check_cfl(w)
        assert "CFL" in caplog.text
        assert TimeStepper(1e-3).check_cfl(initial_condition("shear", grid=grid32))

    def test_state_rejects_mean(self, grid32):
        w = from_modes(grid32, {(0, 0): 1.0}, real=True)
        with pytest.raises(SolvabilityError):
            FlowState(0.0, w)


class TestInitialConditions:
    def test_catalogue(self, grid64):
        X, Y = grid64.coordinates()
        cases = {
            "shear": np.cos(Y),
            "taylor-green": 2 * np.cos(X) * np.cos(Y),
            "perturbed-shear": np.cos(Y) + 0.1 * np.cos(8 * X),
            "zero": 0 * X,
        }
        for name, expect in cases.items():
            got = transform_inverse(initial_condition(name, grid=grid64)).values
            assert np.max(np.abs(got - expect)) < 1e-14, name

    def test_random_band_unit_enstrophy(self, grid64):
        w = initial_condition("random-band", {"band": 5}, grid64, seed=3)
        assert diagnostics(w).enstrophy == pytest.approx(1.0)
        assert w.band == 5
        again = initial_condition("random-band", {"band": 5}, grid64, seed=3)
        assert np.array_equal(w.coeffs, again.coeffs)

    def test_names(self):
        assert set(INITIAL_CONDITIONS) == {"taylor-green", "shear", "perturbed-shear", "random-band", "zero"}

    @pytest.mark.parametrize(
        "name,params",
        [("vortex", {}), ("shear", {"eps": 1}), ("perturbed-shear", {"m": 99}), ("random-band", {"band": 0})],
    )
    def test_rejects(self, grid64, name, params):
        with pytest.raises(ValueError):
            initial_condition(name, params, grid64)

    def test_random_band_field_raw(self, grid32):
        f = random_band_field(grid32, 4, 1, real=False)
        assert not f.real and f.mode(0, 0) == 0
        with pytest.raises(ValueError):
            random_band_field(grid32, 16, 1)


class TestDiagnostics:
    def test_cos_y(self, grid64):
        d = diagnostics(initial_condition("shear", grid=grid64))
        assert d.energy == pytest.approx(0.25)
        assert d.enstrophy == pytest.approx(0.25)
        assert abs(d.casimir3) < 1e-15
        assert d.casimir4 == pytest.approx(0.375)

    def test_quadrature_oracle(self, grid128):
        # on a fine grid the Riemann sums are exact for these band-limited integrands
        w = initial_condition("random-band", {"band": 6}, Grid(64), seed=11)
        d = diagnostics(w)
        fine = np.zeros((128, 128), dtype=complex)
        idx = np.arange(-6, 7)
        fine[np.ix_(idx % 128, idx % 128)] = w.coeffs[np.ix_(idx % 64, idx % 64)]
        W = (np.fft.ifft2(fine) * 128**2).real
        assert d.enstrophy == pytest.approx(0.5 * np.mean(W**2), rel=1e-13)
        assert d.casimir3 == pytest.approx(np.mean(W**3), rel=1e-12, abs=1e-15)
        assert d.casimir4 == pytest.approx(np.mean(W**4), rel=1e-12)
        # energy: 0.5 * mean |u|^2
        from laxeuler.spectral import poisson_solve, velocity_from_stream

        u, v = velocity_from_stream(poisson_solve(w))
        assert d.energy == pytest.approx(0.5 * np.mean(u.values**2 + v.values**2), rel=1e-13)

    def test_row(self, grid32):
        assert diagnostics(initial_condition("zero", grid=grid32)).as_row(2.0) == [2.0, 0, 0, 0, 0]


class TestZakharov:
    def test_solve_closed_form(self, grid32):
        # D1 = d_x + sqrt2 d_y, D2 = d_y ; omega = cos y  ->  S = cos y / sqrt2
        w = initial_condition("shear", grid=grid32)
        p = ZakharovParams(1.0, math.sqrt(2), 0.0, 1.0)
        S = zakharov_solve_S(w, p)
        assert np.max(np.abs(S.coeffs - w.coeffs / math.sqrt(2))) < 1e-15
        lhs = directional_derivative(S, 1.0, math.sqrt(2))
        rhs = directional_derivative(w, 0.0, 1.0)
        assert np.max(np.abs((lhs - rhs).coeffs)) < 1e-14

    def test_rhs_sympy(self, grid32):
        a, b, g, d = 1.0, math.sqrt(2), 0.0, 1.0
        omega = sp.cos(y) + sp.sin(2 * x - y) / 3
        # S for each plane-wave family: ratio (g kx + d ky) / (a kx + b ky)
        S = sp.cos(y) * (d / b) + sp.sin(2 * x - y) / 3 * ((2 * g - d) / (2 * a - b))
        expect = -bracket_sym(S, omega)
        got = zakharov_rhs(field_of(omega, grid32), ZakharovParams(a, b, g, d))
        assert np.max(np.abs(transform_inverse(got).values - on_grid(expect, grid32))) < 1e-13

    def test_resonance_error(self, grid32):
        w = initial_condition("shear", grid=grid32)
        p = ZakharovParams(1.0, 0.0, 0.0, 1.0)
        assert resonant_modes(w, p) == [(0, -1), (0, 1)]
        with pytest.raises(ResonanceError) as info:
            zakharov_solve_S(w, p)
        assert info.value.modes == [(0, -1), (0, 1)]

    def test_resonance_harmless_when_d2_vanishes(self, grid32):
        # D2 = d_x kills cos y on the resonant line kx = 0
        w = initial_condition("shear", grid=grid32)
        S = zakharov_solve_S(w, ZakharovParams(1.0, 0.0, 1.0, 0.0))
        assert np.all(S.coeffs == 0)

    def test_zero_gauge(self, grid32, caplog):
        w = initial_condition("shear", grid=grid32)
        with caplog.at_level(logging.WARNING):
            S = zakharov_solve_S(w, ZakharovParams(1.0, 0.0, 0.0, 1.0, resonance_policy="zero-gauge"))
        assert np.all(S.coeffs == 0)
        assert "zero-gauge" in caplog.text

    def test_param_validation(self):
        with pytest.raises(ValueError):
            ZakharovParams(0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ZakharovParams(1.0, 0.0, 1.0, 1.0, resonance_policy="ignore")
