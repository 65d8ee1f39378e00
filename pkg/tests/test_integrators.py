import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exprk import integrators
from exprk.errors import ConfigurationError, DomainError, ShapeError, StepFailureError
from exprk.integrators import (
    GeneralProblem,
    PrecomputedPropagators,
    SemilinearProblem,
    finite_difference_jacobian,
    integrate,
    normalize_method,
    step_etd_euler,
    step_exprk2,
    step_rb2,
    step_rk2,
    step_rk4,
)
from exprk.problems import cm1d, duffing, toy_model

from oracles import eig_function, euler_step, heun_step, phi_mp, probe_exact, random_symmetric

# e^-10 + 0.01 * phi_1(-10) from the 50-digit oracle; see test_oracle_value_of_etd_toy_step
ETD_TOY_STEP = 1.0453545298e-3

# cm1d relative errors at pi/2 from the published table (uniform grid)
CM1D_TABLE = {
    "rk2": {1e-4: 3.5469e-8, 5e-4: 1.9839e-6, 1e-3: 1.8844e-6, 5e-3: 1.2446e-5, 1e-2: 3.3266e-5},
    "exprk2": {1e-4: 3.5892e-8, 5e-4: 1.9952e-6, 1e-3: 1.9327e-6, 5e-3: 1.0355e-5, 1e-2: 1.6478e-5,
               5e-2: 5.7744e-4, 1e-1: 5.3437e-4},
    "rb2": {1e-4: 4.6309e-7, 5e-4: 4.3310e-7, 1e-3: 2.8822e-6, 5e-3: 3.5272e-5, 1e-2: 6.2265e-5,
            5e-2: 1.1943e-3, 1e-1: 1.5318e-1},
}


def scalar_linear(lam, u0=1.0, tf=1.0, g=None):
    return SemilinearProblem(np.array([[lam]]), g or (lambda t, u: np.zeros_like(u)), [u0], 0.0, tf)


def probe():
    return SemilinearProblem(np.array([[-1.0]]), lambda t, u: np.array([math.cos(t)]), [1.0], 0.0, 1.0)


def cm1d_error(method, h, grid="uniform"):
    p = cm1d()
    traj = integrate(p, method, h, grid=grid)
    ref = p.exact(p.tf)[0]
    return abs((traj.final_state[0] - ref) / ref)


# -- individual steppers -----------------------------------------------------


class TestETDEuler:
    def test_pure_linear_step(self):
        p = scalar_linear(-1000.0)
        pre = PrecomputedPropagators.build(p.A, 0.01)
        u1 = step_etd_euler(p, pre, 0.0, np.array([1.0]))
        assert abs(u1[0] - math.exp(-10)) < 1e-18
        assert abs(u1[0] - 4.539993e-5) < 1e-11

    def test_oracle_value_of_etd_toy_step(self):
        oracle = math.exp(-10) + 0.01 * phi_mp(1, -10).real
        assert abs(oracle - ETD_TOY_STEP) < 1e-13

    def test_toy_step(self):
        p = toy_model().as_semilinear()
        pre = PrecomputedPropagators.build(p.A, 0.01)
        u1 = step_etd_euler(p, pre, 0.0, p.u0)
        assert abs(u1[0] - ETD_TOY_STEP) < 1e-8
        # the printed 5.54e-5 would need phi_1(-10) = 1e-3, which the definition rules out
        assert abs(u1[0] - 5.54e-5) > 9e-4

    def test_zero_matrix_is_explicit_euler(self, rng):
        g = lambda t, u: np.sin(u) + t * u**2
        p = SemilinearProblem(np.zeros((3, 3)), g, rng.standard_normal(3), 0.0, 1.0)
        for h in (1e-3, 0.1, 0.7):
            pre = PrecomputedPropagators.build(p.A, h)
            u = rng.standard_normal(3)
            np.testing.assert_allclose(step_etd_euler(p, pre, 0.3, u), euler_step(g, 0.3, u, h), rtol=0, atol=1e-13)


class TestExpRK2:
    def test_linear_part_is_exact(self, rng):
        A = random_symmetric(rng, 4, -50, 0)
        p = SemilinearProblem(A, lambda t, u: np.zeros(4), np.ones(4), 0.0, 1.0)
        pre = PrecomputedPropagators.build(A, 0.05)
        u = rng.standard_normal(4)
        expected = eig_function(0.05 * A, math.exp) @ u
        np.testing.assert_allclose(step_exprk2(p, pre, 0.0, u), expected, atol=1e-13)

    def test_zero_matrix_is_heun(self, rng):
        g = lambda t, u: np.cos(u) - t * u
        p = SemilinearProblem(np.zeros((2, 2)), g, [0.2, 0.4], 0.0, 1.0)
        for h in (1e-3, 0.1, 0.5):
            pre = PrecomputedPropagators.build(p.A, h)
            u = rng.standard_normal(2)
            np.testing.assert_allclose(step_exprk2(p, pre, 0.1, u), heun_step(g, 0.1, u, h), rtol=0, atol=1e-13)


class TestRK2:
    def test_zero_rhs(self):
        p = GeneralProblem(lambda t, u: np.zeros_like(u), [2.0, -1.0], 0.0, 1.0)
        np.testing.assert_array_equal(step_rk2(p, 0.0, p.u0, 0.1), p.u0)

    def test_growth(self):
        p = GeneralProblem(lambda t, u: u, [1.0], 0.0, 1.0)
        assert step_rk2(p, 0.0, p.u0, 0.1)[0] == pytest.approx(1.105, abs=1e-15)

    def test_amplification_is_quadratic(self):
        p = GeneralProblem(lambda t, u: -3.0 * u, [1.0], 0.0, 1.0)
        z = -0.3
        assert step_rk2(p, 0.0, p.u0, 0.1)[0] == pytest.approx(1 + z + z * z / 2, abs=1e-15)


class TestRK4:
    def test_zero_rhs(self):
        p = GeneralProblem(lambda t, u: np.zeros_like(u), [3.0], 0.0, 1.0)
        np.testing.assert_array_equal(step_rk4(p, 0.0, p.u0, 0.5), p.u0)

    @pytest.mark.parametrize("h,printed", [(0.01, 290.59), (0.001, 0.3755)])
    def test_toy_walkthrough(self, h, printed):
        p = toy_model().as_general()
        u1 = step_rk4(p, 0.0, p.u0, h)[0]
        assert abs(u1 - printed) / printed < 0.01

    def test_quartic_amplification(self):
        p = GeneralProblem(lambda t, u: -1000.0 * u, [1.0], 0.0, 1.0)
        z = -10.0
        R = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
        assert step_rk4(p, 0.0, p.u0, 0.01)[0] == pytest.approx(R, rel=1e-14)


class TestRb2:
    def test_zero_rhs(self):
        p = GeneralProblem(lambda t, u: np.zeros_like(u), [1.0, 2.0], 0.0, 1.0)
        np.testing.assert_array_equal(step_rb2(p, 0.0, p.u0, 0.1), p.u0)

    def test_rational_amplification(self):
        lam = -10.0
        p = GeneralProblem(lambda t, u: lam * u, [1.0], 0.0, 1.0, jacobian=lambda t, u: np.array([[lam]]))
        assert step_rb2(p, 0.0, p.u0, 0.1, gamma=0.5)[0] == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
    def test_gamma_dependence(self, gamma):
        p = GeneralProblem(lambda t, u: -u, [1.0], 0.0, 1.0, jacobian=lambda t, u: np.array([[-1.0]]))
        z = -2.0
        expected = (1 + (1 - gamma) * z) / (1 - gamma * z)
        assert step_rb2(p, 0.0, p.u0, 2.0, gamma)[0] == pytest.approx(expected, abs=1e-15)

    def test_singular_system(self):
        # 1 - gamma h lambda = 0 for gamma = 1/2, h = 1, lambda = 2
        p = GeneralProblem(lambda t, u: 2.0 * u, [1.0], 0.0, 1.0, jacobian=lambda t, u: np.array([[2.0]]))
        with pytest.raises(StepFailureError) as info:
            step_rb2(p, 0.0, p.u0, 1.0)
        assert info.value.condition > 1e15 or math.isinf(info.value.condition)

    def test_uses_finite_difference_jacobian_when_absent(self):
        lam = -10.0
        analytic = GeneralProblem(lambda t, u: lam * u + u**3, [0.5], 0.0, 1.0,
                                  jacobian=lambda t, u: np.array([[lam + 3 * u[0] ** 2]]))
        numeric = GeneralProblem(analytic.F, [0.5], 0.0, 1.0)
        a = step_rb2(analytic, 0.0, analytic.u0, 0.1)
        b = step_rb2(numeric, 0.0, numeric.u0, 0.1)
        np.testing.assert_allclose(a, b, rtol=1e-8)


# -- finite-difference Jacobian ----------------------------------------------


class TestFiniteDifferenceJacobian:
    def test_linear_map(self, rng):
        A = rng.standard_normal((4, 4))
        J = finite_difference_jacobian(lambda t, u: A @ u, 0.0, rng.standard_normal(4))
        np.testing.assert_allclose(J, A, atol=1e-7)

    def test_square(self):
        J = finite_difference_jacobian(lambda t, u: u**2, 0.0, [3.0])
        assert abs(J[0, 0] - 6.0) < 1e-7

    def test_duffing(self):
        p = duffing()
        J = finite_difference_jacobian(p.F, 0.0, [1.0, 0.0])
        np.testing.assert_allclose(J, [[0.0, 1.0], [-301.0, 0.0]], atol=1e-6)
        np.testing.assert_allclose(J, p.jacobian(0.0, np.array([1.0, 0.0])), atol=1e-6)

    def test_non_finite_evaluation(self):
        with pytest.raises(DomainError):
            finite_difference_jacobian(lambda t, u: u * np.inf, 0.0, [0.0])


# -- problem types -----------------------------------------------------------


class TestProblemTypes:
    def test_window_must_be_increasing(self):
        with pytest.raises(DomainError):
            scalar_linear(-1.0, tf=0.0)
        with pytest.raises(DomainError):
            GeneralProblem(lambda t, u: u, [1.0], 1.0, 0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            SemilinearProblem(np.eye(2), lambda t, u: u, [1.0, 2.0, 3.0], 0.0, 1.0)

    def test_non_finite_nonlinearity(self):
        with pytest.raises(DomainError):
            SemilinearProblem(np.eye(1), lambda t, u: u * np.inf, [1.0], 0.0, 1.0)

    def test_full_rhs(self, rng):
        A = rng.standard_normal((3, 3))
        p = SemilinearProblem(A, lambda t, u: np.tanh(u) * t, np.ones(3), 0.0, 1.0)
        u = rng.standard_normal(3)
        np.testing.assert_allclose(p.F(0.7, u), A @ u + np.tanh(u) * 0.7, rtol=1e-15)
        np.testing.assert_allclose(p.as_general().F(0.7, u), p.F(0.7, u), rtol=1e-15)

    def test_general_problem_has_no_splitting(self):
        with pytest.raises(ConfigurationError):
            integrate(GeneralProblem(lambda t, u: -u, [1.0], 0.0, 1.0), "exprk2", 0.1)

    @pytest.mark.parametrize("tag,expected", [("ETD-Euler", "etd_euler"), ("ExpRK2", "exprk2"),
                                              ("RK4", "rk4"), ("Rb2", "rb2"), ("etd", "etd_euler")])
    def test_method_tags(self, tag, expected):
        assert normalize_method(tag) == expected

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            normalize_method("rk45")


# -- driver ------------------------------------------------------------------


class TestIntegrate:
    @pytest.mark.parametrize("h", [0.3, 0.1, 0.07, 1e-2, 1 / 3])
    def test_step_count_and_end_point(self, h):
        p = scalar_linear(-2.0)
        traj = integrate(p, "rk4", h)
        assert traj.n_steps == math.ceil(1.0 / h - 1e-9)
        assert traj.final_time == 1.0
        steps = np.diff(traj.times)
        np.testing.assert_allclose(steps[:-1], h, rtol=1e-12)
        assert 0 < steps[-1] <= h * (1 + 1e-12)
        assert len(traj.states) == len(traj.times)

    def test_uniform_grid(self):
        p = cm1d()
        traj = integrate(p, "exprk2", 0.1, grid="uniform")
        assert traj.n_steps == 16
        np.testing.assert_allclose(np.diff(traj.times), 0.1, rtol=1e-12)

    @pytest.mark.parametrize("method", ["etd_euler", "exprk2"])
    @pytest.mark.parametrize("h", [1e-3, 0.05, 0.37, 2.0])
    def test_exact_linear_propagation(self, rng, method, h):
        A = random_symmetric(rng, 6, -30, 0)
        u0 = rng.standard_normal(6)
        p = SemilinearProblem(A, lambda t, u: np.zeros(6), u0, 0.0, 100 * h)
        traj = integrate(p, method, h)
        assert traj.n_steps == 100
        for n in (1, 10, 57, 100):
            exact = eig_function(n * h * A, math.exp) @ u0
            assert np.linalg.norm(traj.states[n] - exact) <= 1e-12 * np.linalg.norm(u0)

    def test_propagators_built_per_step_size(self, monkeypatch):
        calls = []
        real = PrecomputedPropagators.build.__func__

        def counting(cls, A, h):
            calls.append(h)
            return real(cls, A, h)

        monkeypatch.setattr(PrecomputedPropagators, "build", classmethod(counting))
        integrate(scalar_linear(-5.0), "exprk2", 0.3)
        assert len(calls) == 2  # the full step and the shortened last step
        calls.clear()
        integrate(scalar_linear(-5.0), "exprk2", 0.25)
        assert calls == [0.25]

    def test_non_finite_run_stops(self):
        p = duffing()
        traj = integrate(p, "rk2", 0.05)
        assert not traj.finite
        assert not np.all(np.isfinite(traj.final_state))
        assert traj.final_time < p.tf
        assert np.all(np.isfinite(traj.states[:-1]))

    @pytest.mark.parametrize("h", [0.0, -0.1, math.inf, math.nan, 5.0])
    def test_bad_step(self, h):
        with pytest.raises(ConfigurationError):
            integrate(scalar_linear(-1.0), "rk2", h)

    def test_bad_grid(self):
        with pytest.raises(ConfigurationError):
            integrate(scalar_linear(-1.0), "rk2", 0.1, grid="adaptive")

    def test_wall_time_and_meta(self):
        traj = integrate(toy_model(), "rb2", 0.01, gamma=0.3)
        assert traj.wall_time >= 0
        assert traj.meta == {"grid": "exact", "gamma": 0.3}
        assert traj.method == "rb2"

    def test_rb2_step_failure_propagates(self):
        p = GeneralProblem(lambda t, u: 2.0 * u, [1.0], 0.0, 2.0, jacobian=lambda t, u: np.array([[2.0]]))
        with pytest.raises(StepFailureError):
            integrate(p, "rb2", 1.0)


# -- published cm1d table ----------------------------------------------------


class TestCm1dErrorTable:
    @pytest.mark.parametrize("method,h", [(m, h) for m, row in CM1D_TABLE.items() for h in row])
    def test_within_factor_three(self, method, h):
        err = cm1d_error(method, h)
        ratio = err / CM1D_TABLE[method][h]
        assert 1 / 3 <= ratio <= 3, f"{method} h={h}: {err:.4e} vs {CM1D_TABLE[method][h]:.4e}"

    @pytest.mark.parametrize("h", [5e-2, 1e-1])
    def test_rk2_blows_up(self, h):
        assert cm1d_error("rk2", h) > 1e10

    def test_exprk2_at_tf_on_exact_grid_is_smaller(self):
        # landing on pi/2 removes the time offset that dominates the tabulated error
        assert cm1d_error("exprk2", 1e-3, grid="exact") < cm1d_error("exprk2", 1e-3)


# -- properties --------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(
    lam=st.floats(-50.0, -1e-3),
    frac=st.floats(0.0, 1.0),
    u0=st.floats(-20.0, 20.0),
    v0=st.floats(-20.0, 20.0),
    h=st.sampled_from([1e-3, 1.0, 1e3]),
)
def test_etd_euler_contractivity(lam, frac, u0, v0, h):
    gamma = -lam * frac
    p = SemilinearProblem(np.array([[lam]]), lambda t, u: gamma * np.sin(u), [0.0], 0.0, 1.0)
    pre = PrecomputedPropagators.build(p.A, h)
    u1 = step_etd_euler(p, pre, 0.0, np.array([u0]))
    v1 = step_etd_euler(p, pre, 0.0, np.array([v0]))
    assert abs(u1[0] - v1[0]) <= abs(u0 - v0) * (1 + 1e-12) + 1e-15


def observed_order(method, problem, exact):
    hs = [2.0**-j for j in range(4, 11)]
    errs = [abs(integrate(problem, method, h).final_state[0] - exact) for h in hs]
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


@pytest.mark.parametrize("method,lo,hi", [("etd_euler", 0.9, 1.1), ("exprk2", 1.8, 2.2), ("rk2", 1.8, 2.2),
                                          ("rk4", 3.7, 4.3)])
def test_convergence_order(method, lo, hi):
    slope = observed_order(method, probe(), probe_exact(1.0))
    assert lo <= slope <= hi, slope


def test_rb2_order_autonomous():
    # u' = -u + u^2/4 has no explicit time dependence, so rb2 keeps order 2
    p = GeneralProblem(lambda t, u: -u + 0.25 * u**2, [1.0], 0.0, 1.0, jacobian=lambda t, u: np.array([[-1 + 0.5 * u[0]]]))
    exact = 4.0 / (1.0 + 3.0 * math.e)
    slope = observed_order("rb2", p, exact)
    assert 1.8 <= slope <= 2.2, slope


def test_rb2_order_drops_without_time_derivative():
    # the probe is non-autonomous and rb2 carries no dF/dt term
    slope = observed_order("rb2", probe(), probe_exact(1.0))
    assert 0.9 <= slope <= 1.1, slope


def test_module_lists_all_methods():
    assert set(integrators.METHODS) == {"etd_euler", "exprk2", "rk2", "rk4", "rb2"}
