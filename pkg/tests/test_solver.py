"""Wave solver tests: source, arrays, propagation physics, stability."""

import numpy as np
import pytest

from wavesono.errors import CflViolationError, ValidationError
from wavesono.solver import (
    ARRAY_MARGIN,
    PAD,
    AcousticModel,
    AcquisitionGeometry,
    _Propagator,
    cfl_dt,
    forward,
    make_curvilinear_array,
    make_linear_array,
    ricker_wavelet,
    simulate_all_shots,
)

from helpers import travel_time

DX = 5e-4
FREQ = 3e5


def homogeneous(n=64, c=1540.0):
    return AcousticModel(speed=np.full((n, n), c), grid_spacing=DX)


# ---------------------------------------------------------------- wavelet


def test_ricker_peak_is_one_at_t0():
    dt = 1e-7
    f = 3e5
    w = ricker_wavelet(f, dt, 200)
    t0_idx = round(1.5 / f / dt)
    assert w[t0_idx] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(w).max() == pytest.approx(1.0, abs=1e-12)


def test_ricker_zero_mean():
    dt = 1e-7
    w = ricker_wavelet(3e5, dt, 400)  # covers well past 2*t0
    assert abs(np.sum(w) * dt) <= 1e-3 * np.abs(w).max() * dt * len(w)


def test_ricker_spectrum_peaks_at_central_frequency():
    dt = 1e-7
    n = 4096
    w = ricker_wavelet(3e5, dt, n)
    spec = np.abs(np.fft.rfft(w))
    freqs = np.fft.rfftfreq(n, dt)
    peak = freqs[np.argmax(spec)]
    assert abs(peak - 3e5) <= freqs[1] + 1e-9  # within one bin


# ---------------------------------------------------------------- arrays


def test_linear_array_two_elements_at_margins():
    geom = make_linear_array(2, 10, (100, 100))
    assert geom.element_positions == ((10, ARRAY_MARGIN), (10, 99 - ARRAY_MARGIN))


def test_linear_array_even_spacing():
    geom = make_linear_array(16, 5, (64, 64))
    cols = [c for _, c in geom.element_positions]
    gaps = np.diff(cols)
    assert gaps.max() - gaps.min() <= 1


def test_linear_array_64_on_256_distinct_sorted():
    geom = make_linear_array(64, 0, (256, 256))
    cols = [c for _, c in geom.element_positions]
    assert len(set(cols)) == 64
    assert cols == sorted(cols)


def test_linear_array_does_not_fit():
    with pytest.raises(ValidationError, match="fit"):
        make_linear_array(200, 0, (64, 64))


def test_curvilinear_even_angles():
    geom = make_curvilinear_array(3, 20.0, (32.0, 32.0), np.pi, (64, 64))
    # angles {0, pi/2, pi}: (+col), (+row), (-col)
    assert geom.element_positions == ((32, 52), (52, 32), (32, 12))


def test_curvilinear_radius_tolerance():
    geom = make_curvilinear_array(17, 23.0, (40.0, 40.0), 2 * np.pi, (96, 96))
    for r, c in geom.element_positions:
        assert abs(np.hypot(r - 40.0, c - 40.0) - 23.0) <= 0.51 * np.sqrt(2)


def test_curvilinear_full_circle_no_duplicates():
    n = 24
    radius = n / (2 * np.pi) + 1
    geom = make_curvilinear_array(n, radius, (32.0, 32.0), 2 * np.pi, (64, 64))
    assert len(set(geom.element_positions)) == n


def test_curvilinear_out_of_grid():
    with pytest.raises(ValidationError, match="outside"):
        make_curvilinear_array(8, 40.0, (32.0, 32.0), 2 * np.pi, (64, 64))


# ---------------------------------------------------------------- forward


def test_travel_time_matches_distance_over_speed():
    c = 1540.0
    model = homogeneous(96, c)
    geom = make_linear_array(8, 4, (96, 96), central_frequency=FREQ)
    prop = _Propagator(model, geom)
    traces, _ = forward(model, geom, shot=0)
    (r0, c0) = geom.element_positions[0]
    for j in (3, 5, 7):
        (r1, c1) = geom.element_positions[j]
        dist = np.hypot(r1 - r0, c1 - c0) * DX
        t = travel_time(traces[j], prop.wavelet_series, prop.dt)
        assert abs(t - dist / c) <= 2 * prop.dt


def test_zero_source_amplitude_zero_traces():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=FREQ)
    traces, _ = forward(model, geom, shot=0, source_scale=0.0)
    assert np.all(traces == 0.0)


def test_source_linearity():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=FREQ)
    t1, _ = forward(model, geom, shot=0, source_scale=1.0)
    t2, _ = forward(model, geom, shot=0, source_scale=2.0)
    assert np.abs(t2 - 2.0 * t1).max() <= 1e-9 * np.abs(t2).max()


def test_forward_refuses_cfl_violation():
    model = homogeneous(48)
    bad_dt = cfl_dt(model) * 1.2
    geom = make_linear_array(4, 2, (48, 48), central_frequency=FREQ, dt=bad_dt)
    with pytest.raises(CflViolationError):
        forward(model, geom, shot=0)


def test_with_stable_dt_clamps_downward():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), dt=1.0)
    clamped = geom.with_stable_dt(model)
    assert clamped.dt == pytest.approx(cfl_dt(model))
    forward(model, clamped, shot=0)  # runs fine


def test_dispersion_warning_at_high_frequency():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=1.0e7, duration=2e-6)
    with pytest.warns(UserWarning, match="dispersion"):
        forward(model, geom, shot=0)


def test_snapshots_match_padded_grid():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=FREQ, duration=1e-5)
    _, snaps = forward(model, geom, shot=0, record_wavefield=True, snapshot_stride=10)
    assert len(snaps) > 0
    for s in snaps:
        assert s.field.shape == (48 + 2 * PAD, 48 + 2 * PAD)


# ---------------------------------------------------------------- all shots


def test_all_shots_protocol_shape():
    model = homogeneous(48)
    geom = make_linear_array(5, 2, (48, 48), central_frequency=FREQ, duration=1.5e-5)
    record = simulate_all_shots(model, geom)
    assert record.traces.shape[0] == 5
    assert record.traces.shape[1] == 5


def test_reciprocity_homogeneous():
    model = homogeneous(64)
    geom = make_linear_array(6, 3, (64, 64), central_frequency=FREQ)
    t_i, _ = forward(model, geom, shot=0)
    t_j, _ = forward(model, geom, shot=4)
    a, b = t_i[4], t_j[0]
    assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)


def test_shot_order_independence():
    model = homogeneous(48)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=FREQ, duration=1.5e-5)
    record = simulate_all_shots(model, geom)
    # recompute shots in a scrambled order and reassemble
    scrambled = np.zeros_like(record.traces)
    for s in (2, 0, 3, 1):
        traces, _ = forward(model, record.geometry, shot=s)
        scrambled[s] = traces
    np.testing.assert_array_equal(scrambled, record.traces)


def test_determinism_bitwise():
    model = AcousticModel(speed=np.linspace(1450, 1600, 48 * 48).reshape(48, 48), grid_spacing=DX)
    geom = make_linear_array(4, 2, (48, 48), central_frequency=2.5e5, duration=1.5e-5)
    r1 = simulate_all_shots(model, geom)
    r2 = simulate_all_shots(model, geom)
    np.testing.assert_array_equal(r1.traces, r2.traces)


# ---------------------------------------------------------------- stability


def test_long_run_stays_bounded():
    model = homogeneous(48)
    dt = cfl_dt(model)
    geom = make_linear_array(4, 24, (48, 48), central_frequency=FREQ, duration=2000 * dt, dt=dt)
    prop = _Propagator(model, geom)
    assert prop.nt == 2000
    _, _, history = prop.run(0, store_history=True)
    peak = max(float(np.abs(h).max()) for h in history)
    assert peak <= 10.0  # source amplitude is 1


def test_sponge_absorbs_exiting_wave():
    model = homogeneous(96)
    geom = make_linear_array(8, 48, (96, 96), central_frequency=FREQ)
    prop = _Propagator(model, geom)
    _, _, history = prop.run(0, store_history=True)
    phys = (slice(PAD, -PAD), slice(PAD, -PAD))
    energy = np.array([float(np.sum(h[phys] ** 2)) for h in history])
    assert energy[-1] <= 0.01 * energy.max()


def test_grid_refinement_first_arrival_consistency():
    c = 1540.0
    n = 64
    coarse = AcousticModel(speed=np.full((n, n), c), grid_spacing=DX)
    fine = AcousticModel(speed=np.full((2 * n, 2 * n), c), grid_spacing=DX / 2)
    gc = AcquisitionGeometry(
        array_kind="linear",
        element_positions=((4, 4), (4, 60)),
        grid_shape=(n, n),
        central_frequency=FREQ,
    )
    gf = AcquisitionGeometry(
        array_kind="linear",
        element_positions=((8, 8), (8, 120)),
        grid_shape=(2 * n, 2 * n),
        central_frequency=FREQ,
    )
    pc = _Propagator(coarse, gc)
    pf = _Propagator(fine, gf)
    tc, _ = forward(coarse, gc, shot=0)
    tf, _ = forward(fine, gf, shot=0)
    t_coarse = travel_time(tc[1], pc.wavelet_series, pc.dt)
    t_fine = travel_time(tf[1], pf.wavelet_series, pf.dt)
    assert abs(t_coarse - t_fine) < pc.dt


# ---------------------------------------------------------------- model type


def test_model_rejects_out_of_band_speeds():
    with pytest.raises(ValidationError, match="sanity band"):
        AcousticModel(speed=np.full((8, 8), 100.0), grid_spacing=DX)


def test_slowness_consistency():
    model = homogeneous(32, 1500.0)
    np.testing.assert_allclose(model.slowness_sq * model.speed**2, 1.0, rtol=1e-12)
    back = AcousticModel.from_slowness_sq(model.slowness_sq, DX)
    np.testing.assert_allclose(back.speed, model.speed, rtol=1e-12)


def test_record_rejects_nonfinite():
    from wavesono.solver import ShotRecord

    geom = make_linear_array(2, 0, (32, 32))
    bad = np.zeros((1, 2, 4))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValidationError, match="finite"):
        ShotRecord(traces=bad, dt=1e-7, geometry=geom)
