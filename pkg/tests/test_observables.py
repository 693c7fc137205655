"""Tests for position/spin observables, densities, branch overlap, the
damped-oscillation fit, and serialization."""

import io
import math

import numpy as np
import pytest

from zitterlab.core import (
    DriveParams,
    PacketSpec,
    SpinorField,
    default_grid,
    make_gaussian,
)
from zitterlab.dynamics import (
    StepperConfig,
    default_dt,
    evolve,
    evolve_static_closed_form,
)
from zitterlab.efftheory import zb_closed_form
from zitterlab.observables import (
    NoOscillationError,
    TimeSeries,
    branch_overlap,
    count_density_peaks,
    fit_zb,
    position_expectation,
    spin_expectation,
    to_position_density,
)

SIGMA_P = 1.0 / (2.0 * math.sqrt(10.0))


def _static_spec(**kw):
    return PacketSpec(p0=(0.0, 5.0), sigma_p=(SIGMA_P, SIGMA_P), **kw)


# ------------------------------------------------------ position expectation


def test_both_methods_return_r0_for_fresh_gaussian():
    spec = _static_spec(r0=(3.0, -2.0))
    field = make_gaussian(spec, default_grid(spec, n=128))
    for method in ("momentum-gradient", "position-sum"):
        x, z = position_expectation(field, method=method, center=(3.0, -2.0))
        assert x == pytest.approx(3.0, abs=1e-8)
        assert z == pytest.approx(-2.0, abs=1e-8)


def test_methods_agree_to_relative_tolerance():
    spec = _static_spec(r0=(1.0, 0.5))
    field = make_gaussian(spec, default_grid(spec, n=128))
    field = evolve_static_closed_form(field, 4.0)
    center = (1.0, 0.5 + 5.0 * 4.0)
    a = position_expectation(field, method="momentum-gradient", center=center)
    b = position_expectation(field, method="position-sum", center=center)
    scale = max(1.0, abs(a[0]), abs(a[1]))
    assert abs(a[0] - b[0]) / scale < 1e-6
    assert abs(a[1] - b[1]) / scale < 1e-6


def test_free_scalar_evolution_is_ballistic():
    # spin-orbit off: apply the kinetic phase by hand and check Ehrenfest
    spec = _static_spec(r0=(0.5, -0.5))
    grid = default_grid(spec, n=64)
    field = make_gaussian(spec, grid)
    px, pz = grid.meshgrid()
    t = 3.0
    phase = np.exp(-0.5j * (px**2 + pz**2) * t)
    moved = SpinorField(grid, field.amp_up * phase, field.amp_down * phase)
    x, z = position_expectation(moved, center=(0.5, -0.5 + 5.0 * t))
    assert x == pytest.approx(0.5, abs=1e-8)
    assert z == pytest.approx(-0.5 + 5.0 * t, abs=1e-7)


def test_static_trajectory_matches_closed_form_oracle():
    spec = _static_spec()
    grid = default_grid(spec, n=64)
    field = make_gaussian(spec, grid)
    drive = DriveParams(v_d=0.0, omega_d=50.0)
    dt = default_dt(grid, drive)
    cfg = StepperConfig(dt=dt)
    times = np.array([round(t / dt) * dt for t in np.linspace(0.5, 10.0, 14)])
    oracle = zb_closed_form(spec, grid, 1.0, times)
    zb_amp = 0.1
    state = field
    t_prev = 0.0
    for t, (ox, _) in zip(times, oracle):
        state = evolve(state, drive, t_prev, t, cfg)
        t_prev = t
        x = position_expectation(state, center=(0.0, 5.0 * t))[0]
        assert abs(x - ox) < 0.02 * zb_amp


# -------------------------------------------------------------------- spin


def test_spin_expectation_of_reference_spinors():
    spec = _static_spec()  # default spinor (1, i)/sqrt(2): sigma_y eigenstate
    grid = default_grid(spec, n=32)
    s = spin_expectation(make_gaussian(spec, grid))
    assert np.allclose(s, (0.0, 1.0, 0.0), atol=1e-12)
    up = make_gaussian(_static_spec(spinor0=(1.0, 0.0)), grid)
    assert np.allclose(spin_expectation(up), (0.0, 0.0, 1.0), atol=1e-12)


def test_spin_expectation_inside_bloch_ball():
    spec = _static_spec()
    grid = default_grid(spec, n=32)
    field = make_gaussian(spec, grid)
    drive = DriveParams(v_d=38.0, omega_d=50.0)
    cfg = StepperConfig(dt=default_dt(grid, drive))
    for t in (64, 128, 256):
        field = evolve(field, drive, 0.0, t * cfg.dt, cfg)
        assert np.linalg.norm(spin_expectation(field)) <= 1.0 + 1e-12


# ----------------------------------------------------------------- density


def test_fresh_density_is_a_single_gaussian_peak():
    spec = _static_spec()
    field = make_gaussian(spec, default_grid(spec, n=128))
    x, z, dens = to_position_density(field, center=(0.0, 0.0))
    marg_x = dens.sum(axis=1)
    marg_z = dens.sum(axis=0)
    assert count_density_peaks(x, marg_x) == 1
    assert count_density_peaks(z, marg_z) == 1
    assert abs(x[np.argmax(marg_x)]) < 0.5
    assert abs(z[np.argmax(marg_z)]) < 0.5


def test_static_packet_splits_into_two_branches():
    # the two eigenvalue branches separate at group-velocity difference
    # ~ 2 along z after long evolution
    spec = _static_spec()
    grid = default_grid(spec, n=128)
    field = evolve_static_closed_form(make_gaussian(spec, grid), 10.0)
    x, z, dens = to_position_density(field, center=(0.0, 50.0))
    marg_z = dens.sum(axis=0)
    assert count_density_peaks(z, marg_z) == 2
    peaks = z[np.argsort(marg_z)[-2:]]
    # branch separation approximately 2 t
    i = np.where(marg_z > 0.05 * marg_z.max())[0]
    spread = z[i[-1]] - z[i[0]]
    assert spread > 10.0


# ----------------------------------------------------------- branch overlap


def test_branch_overlap_is_one_at_t0():
    spec = _static_spec()
    field = make_gaussian(spec, default_grid(spec, n=64))
    assert branch_overlap(field, 1.0, center=(0.0, 0.0)) == pytest.approx(1.0, abs=1e-6)


def test_branch_overlap_decays_monotonically_for_static_packet():
    spec = _static_spec()
    grid = default_grid(spec, n=64)
    field = make_gaussian(spec, grid)
    values = []
    for t in np.linspace(0.0, 10.0, 21):
        state = evolve_static_closed_form(field, t)
        values.append(branch_overlap(state, 1.0, center=(0.0, 5.0 * t)))
    diffs = np.diff(values)
    assert np.all(diffs < 1e-3)
    assert values[-1] < 0.1


def test_branch_overlap_invariant_under_global_phase():
    spec = _static_spec()
    grid = default_grid(spec, n=64)
    field = evolve_static_closed_form(make_gaussian(spec, grid), 3.0)
    rotated = SpinorField(
        grid, field.amp_up * np.exp(1j * 0.83), field.amp_down * np.exp(1j * 0.83)
    )
    a = branch_overlap(field, 1.0, center=(0.0, 15.0))
    b = branch_overlap(rotated, 1.0, center=(0.0, 15.0))
    assert a == pytest.approx(b, abs=1e-12)


# ------------------------------------------------------------------ fit_zb


def _series(t, y):
    return TimeSeries(times=list(t), x_mean=list(y), z_mean=list(np.zeros_like(y)))


def test_fit_recovers_its_own_model_class():
    t = np.linspace(0.0, 12.0, 2000)
    y = 5.0 + 0.3 * t + 0.1 * np.exp(-t / 8.0) * np.cos(10.0 * t + 0.2)
    fit = fit_zb(_series(t, y), "x")
    assert fit.offset == pytest.approx(5.0, rel=0.01)
    assert fit.drift_velocity[0] == pytest.approx(0.3, rel=0.01)
    assert fit.amplitude == pytest.approx(0.1, rel=0.01)
    assert fit.tau == pytest.approx(8.0, rel=0.01)
    assert fit.omega == pytest.approx(10.0, rel=0.01)
    assert fit.phase == pytest.approx(0.2, abs=0.01)


def test_fit_on_static_scenario_series():
    spec = _static_spec()
    grid = default_grid(spec, n=64)
    times = np.arange(0.0, 12.0 + 1e-12, math.pi / 100.0)
    traj = zb_closed_form(spec, grid, 1.0, times)
    fit = fit_zb(_series(times, traj[:, 0]), "x")
    assert fit.omega == pytest.approx(10.0, rel=0.03)
    assert fit.amplitude == pytest.approx(0.1, rel=0.05)


def test_fit_rejects_pure_line():
    t = np.linspace(0.0, 12.0, 500)
    with pytest.raises(NoOscillationError):
        fit_zb(_series(t, 1.0 + 2.0 * t), "x")


def test_fit_rejects_too_few_periods():
    t = np.linspace(0.0, 1.0, 400)
    y = np.cos(10.0 * t)  # ~1.6 periods
    with pytest.raises(NoOscillationError):
        fit_zb(_series(t, y), "x")


def test_fit_time_shift_equivariance():
    t = np.linspace(0.0, 12.0, 1500)
    y = 0.08 * np.exp(-t / 5.0) * np.cos(9.0 * t + 0.5)
    base = fit_zb(_series(t, y), "x")
    dt_shift = 0.7
    shifted = fit_zb(_series(t + dt_shift, y), "x")
    assert shifted.omega == pytest.approx(base.omega, rel=1e-3)
    assert shifted.tau == pytest.approx(base.tau, rel=0.05)
    dphi = (base.phase - shifted.phase - base.omega * dt_shift) % (2 * math.pi)
    assert min(dphi, 2 * math.pi - dphi) < 0.01


def test_fit_omega_hint_steers_peak_selection():
    t = np.linspace(0.0, 12.0, 2400)
    y = 0.01 * np.cos(10.0 * t) + 0.05 * np.cos(40.0 * t)
    assert fit_zb(_series(t, y), "x").omega == pytest.approx(40.0, rel=0.01)
    assert fit_zb(_series(t, y), "x", omega_hint=10.0).omega == pytest.approx(
        10.0, rel=0.01
    )


# ------------------------------------------------------------ serialization


def test_timeseries_csv_roundtrip():
    series = TimeSeries()
    for k in range(20):
        series.append(0.1 * k, (math.sin(k), -k), (0.1, 0.2, 0.3), 1.0, 0.99)
    text = series.to_csv()
    assert text.splitlines()[0] == "t,x_mean,z_mean,sx,sy,sz,norm,overlap"
    back = TimeSeries.from_csv(text)
    assert back.times == series.times
    assert back.x_mean == series.x_mean
    assert back.overlap == series.overlap


def test_zbsummary_text_block():
    t = np.linspace(0.0, 12.0, 800)
    y = 0.1 * np.exp(-t / 8.0) * np.cos(10.0 * t)
    fit = fit_zb(_series(t, y), "x")
    text = fit.to_text()
    parsed = dict(
        line.split(" = ") for line in text.strip().splitlines() if " = " in line
    )
    assert parsed["axis"] == "x"
    assert float(parsed["amplitude"]) == pytest.approx(fit.amplitude)
    assert float(parsed["omega"]) == pytest.approx(fit.omega)
