import numpy as np
import pytest

from rmpc.dynamics import (
    BicycleModel,
    BicycleParams,
    CubicScalarModel,
    DoubleIntegrator,
    TireForceParams,
    build_model,
    fiala_force,
    fiala_force_derivative,
    slip_angles,
)
from rmpc.errors import ConfigError, ContractViolation, NumericDomainError

MODELS = {
    "double_integrator": DoubleIntegrator(),
    "scalar_cubic": CubicScalarModel(),
    "bicycle": BicycleModel(),
}


def finite_difference(fn, x, eps=1e-6):
    columns = []
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = eps
        columns.append((fn(x + step) - fn(x - step)) / (2 * eps))
    return np.stack(columns, axis=-1)


def test_double_integrator_step():
    model = DoubleIntegrator(dt=0.05)
    np.testing.assert_allclose(model.step([1.0, 2.0], [0.5]), [1.1, 2.025])


@pytest.mark.parametrize("name", sorted(MODELS))
def test_jacobians_match_finite_differences(name):
    model = MODELS[name]
    rng = np.random.default_rng(0)
    low, high = model.sampling_box()
    for _ in range(100):
        x = rng.uniform(low, high)
        u = rng.uniform(model.u_min, model.u_max)
        dfdx, dfdu = model.jacobians(x, u)
        np.testing.assert_allclose(dfdx, finite_difference(lambda v: model.step(v, u), x), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(dfdu, finite_difference(lambda v: model.step(x, v), u), rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_batched_step_matches_rows(name):
    model = MODELS[name]
    rng = np.random.default_rng(1)
    low, high = model.sampling_box()
    x = rng.uniform(low, high, size=(6, model.n))
    u = rng.uniform(model.u_min, model.u_max, size=(6, model.m))
    batched = model.step(x, u)
    assert batched.shape == (6, model.n)
    for i in range(6):
        np.testing.assert_allclose(batched[i], model.step(x[i], u[i]))
    dfdx, dfdu = model.jacobians(x, u)
    assert dfdx.shape == (6, model.n, model.n)
    assert dfdu.shape == (6, model.n, model.m)


def test_bicycle_straight_driving_is_a_fixed_point():
    model = BicycleModel()
    np.testing.assert_array_equal(model.step(np.zeros(4), [0.0]), np.zeros(4))


def test_bicycle_steering_turns_the_car():
    model = BicycleModel()
    x = np.zeros(4)
    for _ in range(5):
        x = model.step(x, [0.05])
    # positive steering builds positive yaw rate and lateral offset
    assert x[3] > 0
    assert x[0] > 0


def test_fiala_small_angle_slope():
    p = TireForceParams(C=88000.0, mu=1.0, fz=8000.0)
    assert fiala_force_derivative(0.0, p) == pytest.approx(-p.C)
    assert fiala_force(1e-6, p) == pytest.approx(-p.C * np.tan(1e-6), rel=1e-5)


def test_fiala_saturates_continuously():
    p = TireForceParams(C=88000.0, mu=1.0, fz=8000.0)
    grip = p.mu * p.fz
    assert fiala_force(p.alpha_max, p) == pytest.approx(-grip)
    assert fiala_force(p.alpha_max + 0.1, p) == pytest.approx(-grip)
    assert fiala_force(-p.alpha_max - 0.1, p) == pytest.approx(grip)
    assert fiala_force_derivative(p.alpha_max + 0.1, p) == 0.0
    assert fiala_force_derivative(p.alpha_max, p) == pytest.approx(0.0, abs=1e-6 * p.C)


def test_fiala_is_odd():
    p = TireForceParams(C=94000.0, mu=0.8, fz=6000.0)
    alpha = np.linspace(-0.5, 0.5, 41)
    np.testing.assert_allclose(fiala_force(-alpha, p), -fiala_force(alpha, p))


def test_fiala_rejects_right_angle_slip():
    p = TireForceParams(C=94000.0, mu=0.8, fz=6000.0)
    with pytest.raises(NumericDomainError):
        fiala_force(np.pi / 2, p)


def test_tire_parameters_must_be_positive():
    with pytest.raises(ContractViolation):
        TireForceParams(C=0.0, mu=1.0, fz=1.0)


def test_bicycle_rejects_non_positive_speed():
    model = BicycleModel().with_params(vx=0.0)
    with pytest.raises(NumericDomainError):
        model.step(np.zeros(4), [0.0])


def test_with_params_copies():
    model = BicycleModel()
    heavy = model.with_params(mass=1800.0)
    assert heavy.params.mass == 1800.0
    assert model.params.mass == 1500.0
    assert DoubleIntegrator().with_params(dt=0.1).dt == 0.1


def test_describe_identifies_parameters():
    assert DoubleIntegrator(dt=0.05).describe() != DoubleIntegrator(dt=0.06).describe()
    assert BicycleModel().describe()["params"]["vx"] == 16.0


def test_empty_control_box():
    with pytest.raises(ContractViolation):
        DoubleIntegrator(u_bound=0.0)


def test_state_shape_is_checked():
    with pytest.raises(ContractViolation):
        DoubleIntegrator().step([1.0, 2.0, 3.0], [0.0])


def test_scalar_envelope():
    model = CubicScalarModel(x_limit=10.0)
    assert model.in_envelope([9.0])
    assert not model.in_envelope([11.0])
    assert not model.in_envelope([np.nan])


def test_build_model():
    assert isinstance(build_model("bicycle", {"mass": 1400.0}), BicycleModel)
    with pytest.raises(ConfigError):
        build_model("unicycle")
    with pytest.raises(ConfigError):
        build_model("bicycle", {"wheelbase": 2.0})


def test_slip_angles():
    params = BicycleParams()
    assert slip_angles(np.zeros(4), 0.0, params) == (0.0, 0.0)
    alpha_f, alpha_r = slip_angles(np.zeros(4), 0.1, params)
    assert alpha_f == pytest.approx(-0.1) and alpha_r == 0.0

    alpha_f, alpha_r = slip_angles(np.array([0.0, 0.0, 0.5, 0.1]), 0.0, params)
    assert alpha_f == pytest.approx(np.arctan(0.614 / 16))
    assert alpha_r == pytest.approx(np.arctan(0.36 / 16))

    with pytest.raises(NumericDomainError):
        slip_angles(np.zeros(4), 0.0, BicycleParams(vx=0.0))


def transcribed_bicycle_step(x, delta):
    """Scalar transcription of the lateral model: slip angles, Fiala forces, one Euler step."""
    vx, mass, a, b, iz, mu, g, f = 16.0, 1500.0, 1.14, 1.40, 2420.0, 1.0, 9.81, 20.0
    y, phi, vy, wr = x

    def tire(alpha, stiffness, load):
        # cubic written as grip * (1 - (1 - s)^3) with s = C |tan alpha| / (3 grip)
        s = stiffness * abs(np.tan(alpha)) / (3.0 * mu * load)
        magnitude = mu * load if s >= 1.0 else mu * load * (1.0 - (1.0 - s) ** 3)
        return -np.sign(alpha) * magnitude

    fyf = tire(np.arctan((vy + a * wr) / vx) - delta, 88000.0, b / (a + b) * mass * g)
    fyr = tire(np.arctan((vy - b * wr) / vx), 94000.0, a / (a + b) * mass * g)
    return np.array([
        y + (vx * np.sin(phi) + vy * np.cos(phi)) / f,
        phi + wr / f,
        vy + ((fyf * np.cos(delta) + fyr) / mass - vx * wr) / f,
        wr + (a * fyf * np.cos(delta) - b * fyr) / iz / f,
    ])


def test_bicycle_step_matches_a_transcription_of_the_equations():
    x = np.array([0.0, 0.0, 0.5, 0.1])
    expected = transcribed_bicycle_step(x, 0.02)
    np.testing.assert_allclose(BicycleModel().step(x, [0.02]), expected, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(expected[:2], [0.025, 0.005])


def test_bicycle_heading_sensitivity_at_rest():
    dfdx, _ = BicycleModel().jacobians(np.zeros(4), [0.0])
    assert dfdx[0, 1] == pytest.approx(16.0 / 20.0)


def test_double_integrator_jacobians_are_the_matrices():
    model = DoubleIntegrator(dt=0.05)
    dfdx, dfdu = model.jacobians([0.3, -1.2], [0.4])
    np.testing.assert_array_equal(dfdx, [[1.0, 0.05], [0.0, 1.0]])
    np.testing.assert_array_equal(dfdu, [[0.0], [0.05]])
    np.testing.assert_allclose(model.step([0.0, 1.0], [0.0]), [0.05, 1.0])


def test_double_integrator_is_linear():
    model = DoubleIntegrator(dt=0.05)
    rng = np.random.default_rng(2)
    for _ in range(20):
        x1, x2 = rng.uniform(-5.0, 5.0, size=(2, 2))
        u1, u2 = rng.uniform(-0.5, 0.5, size=(2, 1))
        combined = model.step(x1 + x2, u1 + u2)
        parts = model.step(x1, u1) + model.step(x2, u2) - model.step(np.zeros(2), np.zeros(1))
        np.testing.assert_allclose(combined, parts, rtol=1e-13, atol=1e-13)


def test_fiala_front_axle_values():
    params = BicycleParams()
    assert params.fz_front == pytest.approx(1.40 / 2.54 * 1500.0 * 9.81)
    p = TireForceParams(C=88000.0, mu=1.0, fz=8108.3)
    assert fiala_force(0.0, p) == 0.0
    assert fiala_force(0.5, p) == pytest.approx(-8108.3)
    s = 88000.0 * np.tan(0.01) / (3.0 * 8108.3)
    assert fiala_force(0.01, p) == pytest.approx(-8108.3 * (1.0 - (1.0 - s) ** 3), rel=1e-12)


@pytest.mark.parametrize("mu,fz", [(1.0, 8108.3), (0.3, 6651.7), (1.2, 4000.0)])
def test_fiala_force_is_bounded_by_grip(mu, fz):
    p = TireForceParams(C=94000.0, mu=mu, fz=fz)
    alpha = np.linspace(-1.5, 1.5, 6001)
    assert np.all(np.abs(fiala_force(alpha, p)) <= mu * fz * (1.0 + 1e-12))
