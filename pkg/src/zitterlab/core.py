"""Dimensionless unit system, momentum grids, state containers, and
Gaussian wavepacket construction.

Everything downstream works in units with hbar = m = kappa = 1; SI values
appear only through :func:`to_si` / :func:`from_si`.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

HBAR_SI = 1.054571817e-34  # J s

UNIT_TAGS = ("time", "length", "momentum", "velocity", "frequency", "energy")


class GridTruncationError(ValueError):
    """Momentum grid too small for the requested Gaussian packet."""


@dataclass(frozen=True)
class Scales:
    """Physical scales fixing the dimensionless unit system.

    ``kappa_per_m`` is the effective spin-orbit wavevector, i.e.
    (sqrt(2)-1) times the laser wavevector.
    """

    mass_kg: float
    kappa_per_m: float
    hbar_Js: float = HBAR_SI

    def __post_init__(self):
        for name in ("mass_kg", "kappa_per_m", "hbar_Js"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def time_unit_s(self):
        return self.mass_kg / (self.hbar_Js * self.kappa_per_m**2)

    @property
    def length_unit_m(self):
        return 1.0 / self.kappa_per_m

    @property
    def momentum_unit_kgms(self):
        return self.hbar_Js * self.kappa_per_m

    @property
    def velocity_unit_ms(self):
        return self.hbar_Js * self.kappa_per_m / self.mass_kg

    @property
    def energy_unit_J(self):
        return self.hbar_Js**2 * self.kappa_per_m**2 / self.mass_kg

    @property
    def frequency_unit_hz(self):
        return self.hbar_Js * self.kappa_per_m**2 / self.mass_kg

    def unit_for(self, tag):
        units = {
            "time": self.time_unit_s,
            "length": self.length_unit_m,
            "momentum": self.momentum_unit_kgms,
            "velocity": self.velocity_unit_ms,
            "frequency": self.frequency_unit_hz,
            "energy": self.energy_unit_J,
        }
        if tag not in units:
            raise ValueError(f"unknown unit tag {tag!r}; expected one of {UNIT_TAGS}")
        return units[tag]


def to_si(scales, value, tag):
    """Convert a dimensionless quantity tagged with its kind to SI."""
    return value * scales.unit_for(tag)


def from_si(scales, value, tag):
    """Inverse of :func:`to_si`."""
    return value / scales.unit_for(tag)


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform rectangular (p_x, p_z) grid with FFT-compatible conventions.

    Node k along x carries ``p_x = p_center[0] - p_halfwidth[0] + k*dp_x``,
    so the upper edge itself is excluded (periodic convention).
    """

    n_x: int
    n_z: int
    p_center: tuple
    p_halfwidth: tuple

    def __post_init__(self):
        for n, name in ((self.n_x, "n_x"), (self.n_z, "n_z")):
            if n < 16 or (n & (n - 1)) != 0:
                raise ValueError(f"{name} must be a power of two >= 16, got {n}")
        if len(self.p_center) != 2 or len(self.p_halfwidth) != 2:
            raise ValueError("p_center and p_halfwidth must be 2-vectors")
        if min(self.p_halfwidth) <= 0:
            raise ValueError("p_halfwidth components must be positive")
        object.__setattr__(self, "p_center", tuple(float(c) for c in self.p_center))
        object.__setattr__(self, "p_halfwidth", tuple(float(h) for h in self.p_halfwidth))

    @property
    def dp_x(self):
        return 2.0 * self.p_halfwidth[0] / self.n_x

    @property
    def dp_z(self):
        return 2.0 * self.p_halfwidth[1] / self.n_z

    @property
    def cell_area(self):
        return self.dp_x * self.dp_z

    def p_x_axis(self):
        return self.p_center[0] - self.p_halfwidth[0] + self.dp_x * np.arange(self.n_x)

    def p_z_axis(self):
        return self.p_center[1] - self.p_halfwidth[1] + self.dp_z * np.arange(self.n_z)

    def meshgrid(self):
        """(p_x, p_z) arrays of shape (n_x, n_z)."""
        return np.meshgrid(self.p_x_axis(), self.p_z_axis(), indexing="ij")


@dataclass(frozen=True)
class SpinorField:
    """Two-component spinor amplitudes over a momentum grid.

    Components live in the dark-state basis {|D1>, |D2>}.  Treated as
    immutable: evolution and transforms return new instances.
    """

    grid: MomentumGrid
    amp_up: np.ndarray
    amp_down: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n_x, self.grid.n_z)
        if self.amp_up.shape != shape or self.amp_down.shape != shape:
            raise ValueError("amplitude arrays must have shape (n_x, n_z)")

    def norm_squared(self):
        dens = np.abs(self.amp_up) ** 2 + np.abs(self.amp_down) ** 2
        return float(np.sum(dens)) * self.grid.cell_area

    def norm(self):
        return math.sqrt(self.norm_squared())

    def with_amplitudes(self, amp_up, amp_down):
        return SpinorField(self.grid, amp_up, amp_down)


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian wavepacket: center momentum, momentum widths, initial
    position, and a fixed internal spinor."""

    p0: tuple
    sigma_p: tuple
    r0: tuple = (0.0, 0.0)
    spinor0: tuple = (1.0 / math.sqrt(2.0), 1.0j / math.sqrt(2.0))

    def __post_init__(self):
        if min(self.sigma_p) <= 0:
            raise ValueError("sigma_p components must be positive")
        s = np.asarray(self.spinor0, dtype=complex)
        if s.shape != (2,):
            raise ValueError("spinor0 must be a complex 2-vector")
        nrm = np.linalg.norm(s)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"spinor0 must be unit-norm, |s| = {nrm}")


@dataclass(frozen=True)
class DriveParams:
    """Mirror drive: the sigma_z shift is v_d*cos(omega_d*t + phase)."""

    v_d: float
    omega_d: float
    phase: float = 0.0

    def __post_init__(self):
        if self.omega_d <= 0:
            raise ValueError("omega_d must be positive")
        if self.v_d < 0:
            raise ValueError("v_d must be nonnegative")

    def shift(self, t):
        """Instantaneous p_z shift of the spin-orbit term."""
        return self.v_d * np.cos(self.omega_d * t + self.phase)


def _truncated_mass_1d(p0, sigma, lo, hi):
    """Gaussian probability mass of N(p0, sigma) outside [lo, hi]."""
    a = (lo - p0) / (math.sqrt(2.0) * sigma)
    b = (hi - p0) / (math.sqrt(2.0) * sigma)
    return 0.5 * (math.erfc(b) + math.erfc(-a))


def make_gaussian(spec, grid):
    """Build a normalized minimum-uncertainty Gaussian spinor packet.

    amp(p) = spinor0 * N * exp(-(p-p0)^2/(4 sigma_p^2)) * exp(-i p.r0),
    renormalized on the discrete grid so the total norm is exactly 1.
    """
    p0x, p0z = spec.p0
    sx, sz = spec.sigma_p

    lox, hix = grid.p_center[0] - grid.p_halfwidth[0], grid.p_center[0] + grid.p_halfwidth[0]
    loz, hiz = grid.p_center[1] - grid.p_halfwidth[1], grid.p_center[1] + grid.p_halfwidth[1]
    out_x = _truncated_mass_1d(p0x, sx, lox, hix)
    out_z = _truncated_mass_1d(p0z, sz, loz, hiz)
    mass_out = 1.0 - (1.0 - out_x) * (1.0 - out_z)
    if mass_out > 1e-6:
        raise GridTruncationError(
            f"grid truncates {mass_out:.3e} of the Gaussian mass (> 1e-6); "
            "enlarge p_halfwidth or recenter the grid"
        )
    if min(hix - p0x, p0x - lox) < 5 * sx or min(hiz - p0z, p0z - loz) < 5 * sz:
        warnings.warn("grid half-width below 5 sigma_p around p0", stacklevel=2)

    px, pz = grid.meshgrid()
    envelope = np.exp(-((px - p0x) ** 2) / (4 * sx**2) - ((pz - p0z) ** 2) / (4 * sz**2))
    phase = np.exp(-1j * (px * spec.r0[0] + pz * spec.r0[1]))
    g = envelope * phase
    g /= math.sqrt(np.sum(np.abs(g) ** 2) * grid.cell_area)

    a, b = complex(spec.spinor0[0]), complex(spec.spinor0[1])
    return SpinorField(grid, a * g, b * g)


def default_grid(spec, n=256, halfwidth_sigmas=6.0):
    """Grid centered on the packet, half-width a fixed multiple of sigma_p."""
    return MomentumGrid(
        n_x=n,
        n_z=n,
        p_center=tuple(spec.p0),
        p_halfwidth=(halfwidth_sigmas * spec.sigma_p[0], halfwidth_sigmas * spec.sigma_p[1]),
    )
