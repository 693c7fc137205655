"""Time evolution under the driven Hamiltonian.

H(p, t) = p^2/2 + [p_z - v_d cos(w_d t + phase)] sigma_z + p_x sigma_x
is diagonal in momentum, so every grid mode evolves independently under a
2x2 time-dependent Hamiltonian.  The stepper is the exponential midpoint
rule with the exact 2x2 exponential, unitary to roundoff per step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import SpinorField

SCHEMES = ("midpoint-exponential", "quarter-period-subdivided")


class StepperConfigError(ValueError):
    """Step size violates a stability/resolution constraint."""


@dataclass(frozen=True)
class ModeHamiltonian:
    """Per-mode 2x2 Hamiltonian: kinetic*I + h_z(t)*sigma_z + h_x*sigma_x."""

    kinetic: float
    h_x: float
    h_z_static: float
    drive: "DriveParams"

    def h_z(self, t):
        return self.h_z_static - self.drive.shift(t)


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "midpoint-exponential"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


def _apply_exponential(up, dn, hx, hz, kin, t):
    """Multiply by exp(-i t (kin*I + hz*sigma_z + hx*sigma_x)) elementwise.

    Uses the sinc-regularized exact form, well-defined at hx = hz = 0.
    """
    om = np.hypot(hx, hz)
    c = np.cos(om * t)
    s = t * np.sinc(om * t / np.pi)  # sin(om t)/om, exact limit at om=0
    phase = np.exp(-1j * kin * t)
    new_up = phase * ((c - 1j * s * hz) * up - 1j * s * hx * dn)
    new_dn = phase * (-1j * s * hx * up + (c + 1j * s * hz) * dn)
    return new_up, new_dn


def step_mode(s, mh, t, dt):
    """Advance a single spinor by one exponential-midpoint step from t."""
    hz = mh.h_z(t + 0.5 * dt)
    up, dn = _apply_exponential(s[0], s[1], mh.h_x, hz, mh.kinetic, dt)
    return np.array([up, dn], dtype=complex)


def _grid_fields(grid):
    px, pz = grid.meshgrid()
    kin = 0.5 * (px * px + pz * pz)
    return px, pz, kin


def validate_stepper(grid, drive, cfg):
    """Enforce drive resolution and fastest-phase constraints on dt."""
    if cfg.dt * drive.omega_d > 2.0 * math.pi / 64.0 + 1e-12:
        raise StepperConfigError(
            f"dt*omega_d = {cfg.dt * drive.omega_d:.4g} exceeds 2*pi/64; "
            "the drive period is under-resolved"
        )
    px, pz, kin = _grid_fields(grid)
    e_max = float(np.max(kin + np.hypot(px, np.abs(pz) + drive.v_d)))
    if cfg.dt * e_max > 0.5 + 1e-12:
        raise StepperConfigError(
            f"dt*max|E| = {cfg.dt * e_max:.4g} exceeds 0.5; "
            "the fastest grid phase is under-resolved"
        )
    return e_max


def evolve(field, drive, t0, t1, cfg):
    """Advance every grid mode from t0 to t1 under the driven Hamiltonian.

    The interval must be an integer number of steps of cfg.dt so that
    composing evolutions reproduces the single-shot result exactly.
    """
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    validate_stepper(field.grid, drive, cfg)
    span = t1 - t0
    n_steps = int(round(span / cfg.dt))
    if n_steps < 1 or abs(n_steps * cfg.dt - span) > 1e-9 * max(1.0, abs(t1)):
        raise StepperConfigError(
            f"interval {span:.6g} is not an integer multiple of dt = {cfg.dt:.6g}"
        )

    px, pz, kin = _grid_fields(field.grid)
    dt = cfg.dt
    if cfg.scheme == "quarter-period-subdivided":
        dt = dt / 4.0
        n_steps *= 4

    up = field.amp_up.copy()
    dn = field.amp_down.copy()
    kin_phase = np.exp(-1j * kin * dt)
    for k in range(n_steps):
        tm = t0 + (k + 0.5) * dt
        hz = pz - drive.shift(tm)
        om = np.hypot(px, hz)
        c = np.cos(om * dt)
        s = dt * np.sinc(om * dt / np.pi)
        new_up = kin_phase * ((c - 1j * s * hz) * up - 1j * s * px * dn)
        dn = kin_phase * (-1j * s * px * up + (c + 1j * s * hz) * dn)
        up = new_up
    return field.with_amplitudes(up, dn)


def _closed_form(field, hx, hz, t):
    px, pz, kin = _grid_fields(field.grid)
    up, dn = _apply_exponential(field.amp_up, field.amp_down, hx, hz, kin, t)
    return field.with_amplitudes(up, dn)


def evolve_static_closed_form(field, t):
    """Exact evolution under the undriven Hamiltonian (eigen-decomposition
    per mode, expressed through the exact 2x2 exponential)."""
    px, pz = field.grid.meshgrid()
    return _closed_form(field, px, pz, t)


def evolve_effective(field, j0, t):
    """Exact evolution under the period-averaged Hamiltonian with
    p_tilde = (j0*p_x, p_z) in the spin-orbit term."""
    px, pz = field.grid.meshgrid()
    return _closed_form(field, j0 * px, pz, t)


def evolve_resonance_closed_form(field, drive, t):
    """Exact evolution under the rotating-frame resonance Hamiltonian:
    p^2/2 + (v_d/2) sigma_z + (p_x - omega_d/2) sigma_x."""
    px, pz = field.grid.meshgrid()
    hx = px - 0.5 * drive.omega_d
    hz = np.full_like(px, 0.5 * drive.v_d)
    return _closed_form(field, hx, hz, t)


def rotate_frame(field, omega_d, t, direction):
    """sigma_x-basis drive-frame rotation of the spinor components.

    direction 'in' maps lab-frame to rotating-frame amplitudes: components
    along (1, 1)/sqrt(2) gain exp(+i omega_d t/2), along (1, -1)/sqrt(2)
    gain exp(-i omega_d t/2).  'out' applies the inverse.
    """
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    half = 0.5 * omega_d * t
    if direction == "out":
        half = -half
    c, s = math.cos(half), math.sin(half)
    up = c * field.amp_up + 1j * s * field.amp_down
    dn = 1j * s * field.amp_up + c * field.amp_down
    return field.with_amplitudes(up, dn)


def default_dt(grid, drive):
    """Largest dt satisfying both stepper constraints, commensurate with
    the half-period sampling interval pi/omega_d."""
    dt = 2.0 * math.pi / (128.0 * drive.omega_d)
    px, pz, kin = _grid_fields(grid)
    e_max = float(np.max(kin + np.hypot(px, np.abs(pz) + drive.v_d)))
    dt = min(dt, 0.5 / e_max)
    sample = math.pi / drive.omega_d
    n = int(math.ceil(sample / dt - 1e-12))
    return sample / n
