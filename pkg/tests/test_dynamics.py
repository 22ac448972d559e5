import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import canonical_ab, held_input_solution, rk4_flow, taylor_expm
from scc_lfc.dynamics import (
    ContinuousModel,
    InputVector,
    InvalidParameterError,
    StateVector,
    SystemParams,
    build_continuous_model,
    discretize,
    equilibrium,
    local_controller_step,
    predict_measurements,
    rk4_propagator,
    step_continuous,
)

unit = st.floats(-1, 1, allow_nan=False)
vec5 = hnp.arrays(np.float64, 5, elements=unit)
vec2 = hnp.arrays(np.float64, 2, elements=unit)


# -- model construction ------------------------------------------------------

def test_canonical_entries(model):
    a = model.a
    assert a[0, 0] == -5.0
    assert a[0, 2] == pytest.approx(-100.0, rel=1e-15)
    assert a[2, 1] == pytest.approx(0.1, rel=1e-15)
    assert a[2, 2] == pytest.approx(-0.08, rel=1e-15)


def test_matches_hand_typed_oracle(model):
    a, b = canonical_ab()
    np.testing.assert_array_equal(model.a, a)
    np.testing.assert_array_equal(model.b, b)


ENTRY_TABLE = [
    # (matrix, row, col, closed form in terms of params)
    ("a", 0, 0, lambda p: -1 / p.tau_g),
    ("a", 0, 2, lambda p: -1 / (p.droop_r * p.tau_g)),
    ("a", 1, 0, lambda p: 1 / p.tau_t),
    ("a", 1, 1, lambda p: -1 / p.tau_t),
    ("a", 2, 1, lambda p: 1 / p.inertia_m),
    ("a", 2, 2, lambda p: -p.damping_d / p.inertia_m),
    ("a", 3, 2, lambda p: 1 / p.tau_omega),
    ("a", 3, 3, lambda p: -1 / p.tau_omega),
    ("a", 4, 1, lambda p: 1 / (p.inertia_m * p.tau_nu)),
    ("a", 4, 2, lambda p: -p.damping_d / (p.inertia_m * p.tau_nu)),
    ("a", 4, 4, lambda p: -1 / p.tau_nu),
    ("b", 0, 0, lambda p: 1 / p.tau_g),
    ("b", 2, 1, lambda p: -1 / p.inertia_m),
    ("b", 4, 1, lambda p: -1 / (p.inertia_m * p.tau_nu)),
]


@pytest.mark.parametrize("params", [
    SystemParams(),
    SystemParams(tau_g=0.08, tau_t=0.3, tau_omega=0.02, tau_nu=0.05, inertia_m=4.0,
                 damping_d=1.5, droop_r=0.04),
])
def test_all_35_entries(params):
    m = build_continuous_model(params)
    expected = {"a": np.zeros((5, 5)), "b": np.zeros((5, 2))}
    for mat, i, j, f in ENTRY_TABLE:
        expected[mat][i, j] = f(params)
    for mat in ("a", "b"):
        got = getattr(m, mat)
        for i in range(got.shape[0]):
            for j in range(got.shape[1]):
                assert got[i, j] == expected[mat][i, j], (mat, i, j)


def test_b_first_column_structure(model, params):
    assert model.b[0, 0] == 1 / params.tau_g
    assert model.b[2, 1] == -1 / params.inertia_m
    np.testing.assert_array_equal(model.b[1:, 0], 0.0)


@pytest.mark.parametrize("field", ["tau_g", "tau_t", "tau_omega", "tau_nu", "inertia_m", "droop_r"])
def test_zero_time_constant_rejected(field):
    with pytest.raises(InvalidParameterError) as exc:
        SystemParams(**{field: 0.0})
    assert exc.value.field == field


def test_negative_damping_rejected():
    with pytest.raises(InvalidParameterError, match="damping_d"):
        SystemParams(damping_d=-0.1)


def test_canonical_model_is_hurwitz(model):
    assert np.linalg.eigvals(model.a).real.max() < 0


# -- discretization ----------------------------------------------------------

def test_decoupled_scalar_case():
    m = ContinuousModel(-np.eye(5), np.ones((5, 2)))
    d = discretize(m, 1.0)
    np.testing.assert_allclose(d.a_d, np.exp(-1) * np.eye(5), atol=1e-15)
    np.testing.assert_allclose(d.b_d, (1 - np.exp(-1)) * np.ones((5, 2)), atol=1e-15)
    assert d.a_d[0, 0] == pytest.approx(0.367879, abs=1e-6)
    assert d.b_d[0, 0] == pytest.approx(0.632121, abs=1e-6)


def test_zero_step(model):
    d = discretize(model, 0.0, allow_zero=True)
    np.testing.assert_array_equal(d.a_d, np.eye(5))
    np.testing.assert_array_equal(d.b_d, np.zeros((5, 2)))
    with pytest.raises(ValueError):
        discretize(model, 0.0)
    with pytest.raises(ValueError):
        discretize(model, -0.1)


def test_selectors(dm):
    np.testing.assert_array_equal(dm.c_omega, [0, 0, 0, 1, 0])
    np.testing.assert_array_equal(dm.c_nu, [0, 0, 0, 0, 1])


def test_against_fine_rk4(model, dm):
    phi, gamma = rk4_flow(model.a, model.b, 0.25, 1e-5)
    assert np.linalg.norm(dm.a_d - phi) < 1e-9
    assert np.linalg.norm(dm.b_d - gamma) < 1e-9


def test_against_taylor(model, dm):
    assert np.linalg.norm(dm.a_d - taylor_expm(model.a * 0.25)) < 1e-10


def test_augmented_bd_matches_inverse_formula(model, dm):
    direct = np.linalg.solve(model.a, (dm.a_d - np.eye(5)) @ model.b)
    assert np.linalg.norm(dm.b_d - direct) < 1e-8


@pytest.mark.parametrize("t", [0.001, 0.05, 0.25, 1.0])
def test_semigroup(model, t):
    half = discretize(model, t / 2)
    full = discretize(model, t)
    assert np.linalg.norm(half.a_d @ half.a_d - full.a_d) < 1e-9
    # ZOH composition: B(T) = A(T/2) B(T/2) + B(T/2)
    assert np.linalg.norm(half.a_d @ half.b_d + half.b_d - full.b_d) < 1e-9


def test_singular_a_still_discretizes():
    m = ContinuousModel(np.zeros((5, 5)), np.ones((5, 2)))
    d = discretize(m, 0.5)
    np.testing.assert_allclose(d.a_d, np.eye(5), atol=1e-15)
    np.testing.assert_allclose(d.b_d, 0.5 * np.ones((5, 2)), atol=1e-15)


# -- prediction -------------------------------------------------------------

def test_prediction_at_origin(dm):
    assert predict_measurements(dm, StateVector(), InputVector()) == (0.0, 0.0)


def test_prediction_fixed_point(model, dm):
    u = InputVector(0.03, 0.05)
    xe = equilibrium(model, u)
    pw, pn = predict_measurements(dm, xe, u)
    assert pw == pytest.approx(xe[3], abs=1e-13)
    assert pn == pytest.approx(xe[4], abs=1e-13)


def test_prediction_mid_simulation(model, dm):
    x = np.zeros(5)
    for k in range(3000):  # 3 s under a load step and a control ramp
        x = step_continuous(model, x, (0.001 * k / 3000, 0.05), 1e-3)
    u = (0.02, 0.05)
    ref = held_input_solution(model.a, model.b, x, u, 0.25)
    pw, pn = predict_measurements(dm, x, u)
    assert abs(pw - ref[3]) < 1e-6
    assert abs(pn - ref[4]) < 1e-6


def test_prediction_rejects_nan(dm):
    with pytest.raises(ValueError):
        predict_measurements(dm, [np.nan, 0, 0, 0, 0], (0, 0))


@settings(max_examples=50, deadline=None)
@given(vec5, vec5, vec2, vec2, st.floats(-2, 2))
def test_linearity(x1, x2, u1, u2, c):
    model = build_continuous_model(SystemParams())
    dm = discretize(model, 0.25)
    p = np.array(predict_measurements(dm, x1 + c * x2, u1 + c * u2))
    q = np.array(predict_measurements(dm, x1, u1)) + c * np.array(predict_measurements(dm, x2, u2))
    assert np.abs(p - q).max() < 1e-12
    s = step_continuous(model, x1 + c * x2, u1 + c * u2, 1e-3)
    r = step_continuous(model, x1, u1, 1e-3) + c * step_continuous(model, x2, u2, 1e-3)
    assert np.abs(s - r).max() < 1e-12


# -- integration ------------------------------------------------------------

def test_rk4_zero(model):
    np.testing.assert_array_equal(step_continuous(model, np.zeros(5), (0, 0), 0.005), np.zeros(5))


@pytest.mark.parametrize("dt", [0.0, -1e-3, 0.011])
def test_rk4_step_range(model, dt):
    with pytest.raises(ValueError):
        step_continuous(model, np.zeros(5), (0, 0), dt)


def test_rk4_converges_to_equilibrium(model):
    u = np.array([0.02, 0.05])
    x = np.zeros(5)
    for _ in range(40_000):
        x = step_continuous(model, x, u, 1e-3)
    assert np.abs(x - equilibrium(model, u)).max() < 1e-6


def test_self_convergence(model):
    # input held piecewise constant on a 2 ms grid so both step sizes see it identically
    def end(dt):
        phi, gamma = rk4_propagator(model, dt)
        x = np.array([0.01, 0.0, 0.002, 0.0, 0.0])
        per = int(round(0.002 / dt))
        for k in range(int(round(60.0 / 0.002))):
            u = np.array([0.05 * np.sin(0.6 * np.pi * k * 0.002), 0.02])
            for _ in range(per):
                x = phi @ x + gamma @ u
        return x
    assert np.abs(end(1e-3) - end(5e-4)).max() < 1e-8


def test_propagator_matches_stagewise(model, rng):
    phi, gamma = rk4_propagator(model, 1e-3)
    for _ in range(20):
        x = rng.uniform(-1, 1, 5)
        u = rng.uniform(-1, 1, 2)
        np.testing.assert_allclose(phi @ x + gamma @ u, step_continuous(model, x, u, 1e-3),
                                   rtol=0, atol=1e-14)


# -- local controller --------------------------------------------------------

def test_controller_at_reference():
    p = SystemParams(omega_ref=0.002)
    out, state = local_controller_step(p, 0.002, 0.3, 1e-3)
    assert out == state == 0.3


def test_controller_increment():
    out, _ = local_controller_step(SystemParams(gain_k=1.0), -0.01, 0.0, 0.001)
    assert out == pytest.approx(1e-5, rel=1e-12)


def test_closed_loop_restores_frequency(model, params):
    phi, gamma = rk4_propagator(model, 1e-3)
    x = np.zeros(5)
    integ = 0.0
    for _ in range(30_000):
        dp_c, integ = local_controller_step(params, x[3], integ, 1e-3)
        x = phi @ x + gamma @ np.array([dp_c, 0.05])
    assert abs(x[3]) < 1e-3
