"""Full-waveform inversion tests: objective, adjoint gradient, descent loop."""

from dataclasses import replace

import numpy as np
import pytest

from wavesono.errors import ValidationError
from wavesono.fwi import (
    FwiConfig,
    element_mask,
    gradient,
    invert,
    jacobian_apply,
    jacobian_transpose,
    make_initial_model,
    objective,
)
from wavesono.solver import AcousticModel, _Propagator, make_curvilinear_array, make_linear_array, simulate_all_shots

from helpers import two_inclusion_speed

DX = 5e-4
FREQ = 3e5


def small_setup(n=32, num_elements=6):
    """32x32 model with an off-center block, linear array, pinned time axis."""
    speed = np.full((n, n), 1500.0)
    speed[12:20, 14:22] = 1560.0
    model = AcousticModel(speed=speed, grid_spacing=DX)
    geom = make_linear_array(num_elements, 2, (n, n), central_frequency=FREQ)
    prop = _Propagator(model, geom)
    geom = replace(geom, dt=prop.dt, duration=prop.nt * prop.dt)
    return model, geom, prop


# ---------------------------------------------------------------- objective


def test_objective_zero_for_true_model():
    model, geom, _ = small_setup()
    observed = simulate_all_shots(model, geom)
    energy = float(np.sum(observed.traces**2))
    assert objective(model, geom, observed) <= 1e-12 * energy


def test_objective_quadratic_scaling():
    model, geom, _ = small_setup()
    observed = simulate_all_shots(model, geom)
    # doubling every residual quadruples the misfit: d' = 2d - Pu gives
    # residual Pu - d' = 2(Pu - d)
    blurred = make_initial_model(model.speed, 2.0, DX)
    synth = simulate_all_shots(blurred, geom)
    phi1 = objective(blurred, geom, observed)
    doubled = replace(observed, traces=2.0 * observed.traces - synth.traces)
    phi2 = objective(blurred, geom, doubled)
    assert phi2 == pytest.approx(4.0 * phi1, rel=1e-9)


def test_objective_hand_built_residual():
    model, geom, _ = small_setup()
    observed = simulate_all_shots(model, geom)
    perturbed = observed.traces.copy()
    perturbed[0, 0, 10] -= 0.3
    perturbed[0, 1, 20] += 0.4
    phi = objective(model, geom, replace(observed, traces=perturbed))
    assert phi == pytest.approx(0.125, abs=1e-9)


def test_objective_geometry_mismatch():
    model, geom, _ = small_setup()
    observed = simulate_all_shots(model, geom)
    other = make_linear_array(4, 2, (32, 32), central_frequency=FREQ)
    with pytest.raises(ValidationError, match="match"):
        objective(model, other, observed)


# ---------------------------------------------------------------- gradient


def test_gradient_zero_for_zero_residual():
    model, geom, _ = small_setup()
    observed = simulate_all_shots(model, geom)
    g = gradient(model, geom, observed)
    assert np.abs(g).max() <= 1e-12


def test_adjoint_dot_test():
    model, geom, prop = small_setup()
    rng = np.random.default_rng(3)
    mask = element_mask(model.shape, geom)
    dm = rng.normal(size=model.shape) * 1e-9
    dm[~mask] = 0.0
    y = rng.normal(size=(geom.num_elements, prop.nt))
    lhs = float(np.sum(jacobian_apply(model, geom, dm, shot=0) * y))
    rhs = float(np.sum(dm * jacobian_transpose(model, geom, y, shot=0)))
    assert abs(lhs - rhs) <= 1e-3 * abs(lhs)


def test_gradient_matches_finite_differences():
    model, geom, _ = small_setup()
    true_speed = np.full((32, 32), 1500.0)
    true_speed[10:18, 10:18] = 1550.0
    observed = simulate_all_shots(AcousticModel(speed=true_speed, grid_spacing=DX), geom)
    start = make_initial_model(true_speed, 3.0, DX)
    g = gradient(start, geom, observed)
    m0 = start.slowness_sq
    for r, c in [(12, 12), (16, 16), (20, 10), (8, 20), (14, 18)]:
        eps = 1e-4 * m0[r, c]
        mp = m0.copy()
        mp[r, c] += eps
        mm = m0.copy()
        mm[r, c] -= eps
        fp = objective(AcousticModel.from_slowness_sq(mp, DX), geom, observed)
        fm = objective(AcousticModel.from_slowness_sq(mm, DX), geom, observed)
        fd = (fp - fm) / (2 * eps)
        assert abs(fd - g[r, c]) <= 1e-2 * abs(fd)


def test_gradient_descent_direction_reduces_objective():
    model, geom, _ = small_setup()
    true_speed = np.full((32, 32), 1500.0)
    true_speed[14:20, 14:20] = 1460.0  # single slow inclusion
    observed = simulate_all_shots(AcousticModel(speed=true_speed, grid_spacing=DX), geom)
    start = AcousticModel(speed=np.full((32, 32), 1500.0), grid_spacing=DX)
    g, phi0 = gradient(start, geom, observed, return_objective=True)
    m1 = start.slowness_sq - 0.005 * np.abs(start.slowness_sq).max() * g / np.abs(g).max()
    phi1 = objective(AcousticModel.from_slowness_sq(m1, DX), geom, observed)
    assert phi1 < phi0


def test_gradient_masked_near_elements():
    model, geom, _ = small_setup()
    true_speed = model.speed.copy()
    true_speed[20:24, 8:12] = 1540.0
    observed = simulate_all_shots(AcousticModel(speed=true_speed, grid_spacing=DX), geom)
    g = gradient(model, geom, observed)
    for r, c in geom.element_positions:
        assert g[r, c] == 0.0


# ---------------------------------------------------------------- init model


def test_initial_model_identity_blur():
    speed = two_inclusion_speed(48)
    init = make_initial_model(speed, 0.0, DX)
    np.testing.assert_array_equal(init.speed, speed)


def test_initial_model_constant_stays_constant():
    speed = np.full((32, 32), 1512.0)
    init = make_initial_model(speed, 5.0, DX)
    np.testing.assert_allclose(init.speed, 1512.0, rtol=1e-12)


def test_initial_model_mass_preservation_interior():
    speed = two_inclusion_speed(64)
    init = make_initial_model(speed, 4.0, DX)
    interior = (slice(16, 48), slice(16, 48))
    assert init.speed[interior].mean() == pytest.approx(speed[interior].mean(), rel=1e-3)


# ---------------------------------------------------------------- invert


@pytest.fixture(scope="module")
def quick_twin():
    n = 48
    speed = two_inclusion_speed(n)
    truth = AcousticModel(speed=speed, grid_spacing=DX)
    geom = make_curvilinear_array(
        12, n / 2 - 4, ((n - 1) / 2, (n - 1) / 2), 2 * np.pi, (n, n), central_frequency=FREQ
    )
    observed = simulate_all_shots(truth, geom)
    return truth, geom, observed


def test_invert_reduces_objective_and_rmse(quick_twin):
    truth, geom, observed = quick_twin
    init = make_initial_model(truth.speed, 6.0, DX)
    config = FwiConfig(num_iterations=6, step_size=0.01, gradient_smoothing_sigma=1.0,
                       model_bounds=(1400.0, 1700.0))
    final, state = invert(observed, geom, config, init)
    h = state.objective_history
    assert len(h) == config.num_iterations + 1
    assert h[-1] < 0.5 * h[0]
    rmse_init = np.sqrt(np.mean((init.speed - truth.speed) ** 2))
    rmse_final = np.sqrt(np.mean((final.speed - truth.speed) ** 2))
    assert rmse_final < rmse_init
    # best-so-far envelope decreases
    best = np.minimum.accumulate(h)
    assert best[-1] < best[0]
    assert np.all(np.diff(best) <= 0)


def test_invert_true_model_is_fixed_point(quick_twin):
    truth, geom, observed = quick_twin
    config = FwiConfig(num_iterations=2, step_size=0.01, model_bounds=(1400.0, 1700.0))
    final, state = invert(observed, geom, config, truth)
    energy = float(np.sum(observed.traces**2))
    assert state.objective_history[-1] <= 1e-12 * energy
    np.testing.assert_allclose(final.speed, truth.speed, atol=1e-9)


@pytest.mark.filterwarnings("ignore:only .* grid points per wavelength")
def test_invert_respects_bounds(quick_twin):
    truth, geom, observed = quick_twin
    init = make_initial_model(truth.speed, 6.0, DX)
    seen = []
    config = FwiConfig(num_iterations=3, step_size=0.5, model_bounds=(1480.0, 1540.0))

    def watch(it, phi, g):
        seen.append(True)

    final, _ = invert(observed, geom, config, init, callback=watch)
    assert len(seen) == 3
    assert final.speed.min() >= 1480.0 - 1e-9
    assert final.speed.max() <= 1540.0 + 1e-9


def test_fwi_config_validation():
    with pytest.raises(ValidationError):
        FwiConfig(num_iterations=0)
    with pytest.raises(ValidationError):
        FwiConfig(step_size=-1.0)
    with pytest.raises(ValidationError):
        FwiConfig(model_bounds=(1700.0, 1400.0))
