"""Closed-form effective-theory engine for the driven spin-orbit system.

Contains the zeroth-order Bessel evaluation, the period-averaged
Hamiltonian (numeric and closed form), the renormalized eigensystem, the
closed-form wavepacket trajectory, drive-control case predictions, CDT
points, the on-resonance rotating-frame theory, and dephasing lifetime
estimates.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import make_gaussian, default_grid

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


class CdtPointError(ValueError):
    """Requested prediction is singular at a CDT point (J0 = 0)."""


class ResonanceConditionError(ValueError):
    """Drive/packet parameters violate the resonance condition."""


# --------------------------------------------------------------------------
# Bessel J0
# --------------------------------------------------------------------------

_SERIES_CUT = 12.0
_SERIES_TERMS = 48


def _j0_series(x):
    """Ascending power series, adequate for |x| <= _SERIES_CUT."""
    q = -0.25 * x * x
    term = np.ones_like(q)
    total = np.ones_like(q)
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / (k * k)
        total = total + term
    return total


def _j0_asymptotic(x):
    """Hankel asymptotic expansion with optimal truncation, |x| >= ~12."""
    z = np.abs(x)
    chi = z - 0.25 * math.pi
    p = np.ones_like(z)
    q = np.zeros_like(z)
    term = np.ones_like(z)
    active = np.ones_like(z, dtype=bool)
    prev_mag = np.full_like(z, np.inf)
    for m in range(1, 40):
        term = term * (2 * m - 1) ** 2 / (8.0 * m * z)
        mag = np.abs(term)
        # optimal truncation: stop where terms start growing
        active = active & (mag < prev_mag)
        prev_mag = np.where(active, mag, prev_mag)
        signed = np.where(active, term, 0.0)
        if m % 2 == 1:
            q = q - signed * (-1.0) ** ((m - 1) // 2)
        else:
            p = p + signed * (-1.0) ** (m // 2)
        if not active.any():
            break
    return np.sqrt(2.0 / (math.pi * z)) * (np.cos(chi) * p - np.sin(chi) * q)


def bessel_j0(x):
    """Ordinary Bessel function of order zero, |x| < 1e3.

    Power series below |x| = 12, Hankel asymptotic expansion beyond;
    absolute error below 1e-12 across the domain.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) >= 1e3):
        raise ValueError("bessel_j0 domain is |x| < 1e3")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.empty_like(x_arr)
    small = np.abs(x_arr) <= _SERIES_CUT
    if small.any():
        out[small] = _j0_series(x_arr[small])
    if (~small).any():
        out[~small] = _j0_asymptotic(x_arr[~small])
    return float(out[0]) if scalar else out


def j0_factor(drive):
    """Bessel renormalization J0(2 v_d / omega_d) of the x spin-orbit term."""
    return float(bessel_j0(2.0 * drive.v_d / drive.omega_d))


# --------------------------------------------------------------------------
# High-frequency averaging
# --------------------------------------------------------------------------

def static_hamiltonian_matrix(p):
    """2x2 matrix of the undriven Hamiltonian at momentum p."""
    px, pz = p
    kin = 0.5 * (px * px + pz * pz)
    return kin * IDENTITY2 + pz * SIGMA_Z + px * SIGMA_X


def effective_hamiltonian_matrix(p, j0):
    """Period-averaged Hamiltonian: the x coupling carries the J0 factor."""
    px, pz = p
    kin = 0.5 * (px * px + pz * pz)
    return kin * IDENTITY2 + pz * SIGMA_Z + j0 * px * SIGMA_X


def average_hamiltonian(drive, p, n_quad=512):
    """Numeric one-period average of the drive-frame Hamiltonian.

    Averages exp(iF(t)) H_S exp(-iF(t)) over one drive period with the
    trapezoid rule (spectrally accurate for the periodic integrand), where
    F(t) is the time integral of the oscillating sigma_z term.
    """
    if n_quad < 64:
        raise ValueError("n_quad must be >= 64")
    px, pz = p
    period = 2.0 * math.pi / drive.omega_d
    t = np.arange(n_quad) * (period / n_quad)
    lam = drive.v_d / drive.omega_d
    # F(t) = f(t) sigma_z with f the zero-mean antiderivative of the drive;
    # the zero-mean convention keeps the averaged off-diagonal real for any
    # drive phase, matching J0(2 v_d/omega_d) p_x
    f = -lam * np.sin(drive.omega_d * t + drive.phase)
    mean_e2if = np.mean(np.exp(2j * f))
    kin = 0.5 * (px * px + pz * pz)
    h = kin * IDENTITY2 + pz * SIGMA_Z
    h = h + px * np.array([[0.0, mean_e2if], [np.conj(mean_e2if), 0.0]])
    return h


# --------------------------------------------------------------------------
# Effective eigensystem
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EffEigensystem:
    p_tilde: tuple
    theta: float
    beta: float
    e_plus: float
    e_minus: float
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    degenerate: bool = False

    @property
    def zb_omega(self):
        return self.e_plus - self.e_minus


def eff_eigensystem(p, j0):
    """Eigensystem of the averaged Hamiltonian at momentum p.

    theta is the angle of p_tilde = (j0*p_x, p_z) with the x axis,
    beta = pi/4 - theta/2, psi+ = (cos beta, sin beta),
    psi- = (sin beta, -cos beta), E+- = p^2/2 +- |p_tilde|.
    """
    px, pz = p
    ptx, ptz = j0 * px, pz
    pt = math.hypot(ptx, ptz)
    kin = 0.5 * (px * px + pz * pz)
    degenerate = pt == 0.0
    theta = 0.0 if degenerate else math.atan2(ptz, ptx)
    beta = 0.25 * math.pi - 0.5 * theta
    psi_plus = np.array([math.cos(beta), math.sin(beta)], dtype=complex)
    psi_minus = np.array([math.sin(beta), -math.cos(beta)], dtype=complex)
    return EffEigensystem(
        p_tilde=(ptx, ptz),
        theta=theta,
        beta=beta,
        e_plus=kin + pt,
        e_minus=kin - pt,
        psi_plus=psi_plus,
        psi_minus=psi_minus,
        degenerate=degenerate,
    )


def grad_theta(px, pz, j0):
    """Analytic gradient of theta(p_tilde) with respect to (p_x, p_z).

    theta = atan2(p_z, j0*p_x), so
    d(theta)/dp_x = -j0*p_z/|p_tilde|^2 and d(theta)/dp_z = j0*p_x/|p_tilde|^2.
    Works elementwise on arrays; callers mask |p_tilde| ~ 0.
    """
    pt2 = (j0 * px) ** 2 + pz**2
    return -j0 * pz / pt2, j0 * px / pt2


# --------------------------------------------------------------------------
# Closed-form trajectory
# --------------------------------------------------------------------------

def zb_closed_form(spec, grid, j0, times):
    """Closed-form <r(t)> of the averaged theory for a Gaussian packet.

    <r(t)> = r0 + p0 t
             + (1/2) sum_p |G(p)|^2 grad_theta(p_tilde) (1 - cos w(p_tilde) t) dp
    with w(p_tilde) = 2 |p_tilde|.  Returns an array of shape (len(times), 2).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be sorted and nonnegative")
    field = make_gaussian(spec, grid)
    w = (np.abs(field.amp_up) ** 2 + np.abs(field.amp_down) ** 2) * grid.cell_area
    px, pz = grid.meshgrid()
    pt = np.hypot(j0 * px, pz)
    keep = pt >= 1e-8
    excluded = float(np.sum(w[~keep]))
    if excluded > 0:
        warnings.warn(
            f"excluded {excluded:.3e} packet mass at |p_tilde| < 1e-8", stacklevel=2
        )
    w = w[keep]
    gx, gz = grad_theta(px[keep], pz[keep], j0)
    omega = 2.0 * pt[keep]

    out = np.empty((times.size, 2))
    for i, t in enumerate(times):
        osc = 1.0 - np.cos(omega * t)
        out[i, 0] = spec.r0[0] + spec.p0[0] * t + 0.5 * np.sum(w * gx * osc)
        out[i, 1] = spec.r0[1] + spec.p0[1] * t + 0.5 * np.sum(w * gz * osc)
    return out


# --------------------------------------------------------------------------
# Case predictions and CDT points
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CasePrediction:
    amp_ratio: float
    freq_ratio: float
    axis: str


def case_a_prediction(drive):
    """Packet along z: ZB along x, amplitude scaled by J0, frequency unchanged."""
    j0 = j0_factor(drive)
    return CasePrediction(amp_ratio=j0, freq_ratio=1.0, axis="x")


def case_b_prediction(drive):
    """Packet along x: ZB along z, amplitude 1/J0, frequency scaled by J0."""
    j0 = j0_factor(drive)
    if abs(j0) < 1e-6:
        raise CdtPointError("on a CDT point: the ZB frequency is zero, prediction undefined")
    return CasePrediction(amp_ratio=1.0 / j0, freq_ratio=j0, axis="z")


def cdt_points(omega_d, n):
    """First n drive amplitudes v_d with J0(2 v_d / omega_d) = 0.

    Zeros of J0 are located by bisection on :func:`bessel_j0` to 1e-10.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    zeros = []
    x = 0.5
    fx = bessel_j0(x)
    step = 0.5
    while len(zeros) < n:
        x2 = x + step
        fx2 = bessel_j0(x2)
        if fx == 0.0:
            zeros.append(x)
        elif fx * fx2 < 0:
            lo, hi, flo = x, x2, fx
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                fm = bessel_j0(mid)
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            zeros.append(0.5 * (lo + hi))
        x, fx = x2, fx2
    return [omega_d * z / 2.0 for z in zeros]


# --------------------------------------------------------------------------
# Resonance theory
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceTheory:
    omega_d: float
    v_d: float
    p_x_res: float
    zb_freq: float
    axis: str = "x"

    def p_tilde(self, p):
        px, _pz = p
        return (px - 0.5 * self.omega_d, 0.5 * self.v_d)

    def e_reso_plus(self, p):
        px, pz = p
        ptx, ptz = self.p_tilde(p)
        return 0.5 * (px * px + pz * pz) + math.hypot(ptx, ptz)

    def e_reso_minus(self, p):
        px, pz = p
        ptx, ptz = self.p_tilde(p)
        return 0.5 * (px * px + pz * pz) - math.hypot(ptx, ptz)

    def group_velocity(self, p, branch):
        """Gradient of E_reso(+/-) at p."""
        px, pz = p
        ptx, ptz = self.p_tilde(p)
        pt = math.hypot(ptx, ptz)
        sign = 1.0 if branch == "+" else -1.0
        corr = 0.0 if pt == 0.0 else sign * ptx / pt
        return np.array([px + corr, pz])


def resonance_theory(drive, spec):
    """Rotating-frame resonance theory for a packet peaked near p_x = omega_d/2.

    The ZB frequency is the beating frequency of the two rotating-frame
    branches, approaching v_d at exact resonance; both branches share the
    ballistic group velocity, so the wavepacket does not split.
    """
    p_x_res = 0.5 * drive.omega_d
    detuning = spec.p0[0] - p_x_res
    if abs(detuning) > spec.sigma_p[0]:
        raise ResonanceConditionError(
            f"resonance condition violated: |p_x0 - omega_d/2| = {abs(detuning):.4g} "
            f"exceeds sigma_p = {spec.sigma_p[0]:.4g}"
        )
    pz0 = abs(spec.p0[1])
    for name, val in (("p_z0", pz0), ("v_d", drive.v_d)):
        if val > 0:
            ratio = drive.omega_d / val
            if ratio < 4:
                raise ResonanceConditionError(
                    f"omega_d / {name} = {ratio:.3g} < 4; rotating-frame averaging invalid"
                )
            if ratio < 10:
                warnings.warn(
                    f"omega_d / {name} = {ratio:.3g} < 10; averaging marginal", stacklevel=2
                )
    zb_freq = 2.0 * math.hypot(detuning, 0.5 * drive.v_d)
    return ResonanceTheory(
        omega_d=drive.omega_d, v_d=drive.v_d, p_x_res=p_x_res, zb_freq=zb_freq
    )


# --------------------------------------------------------------------------
# Lifetime estimates
# --------------------------------------------------------------------------

def lifetime_estimate(spec, j0, regime, drive=None, n=128):
    """Dephasing lifetime of the ZB envelope.

    static-like: tau = pi / (2 * delta_omega), with delta_omega the one-sigma
    spread of omega(p_tilde) = 2|p_tilde| over the packet.  resonance: the
    static tau scaled by the ratio of static to residual group-velocity
    difference, floored at 10x static (requires ``drive``).
    """
    if regime not in ("static-like", "resonance"):
        raise ValueError("regime must be 'static-like' or 'resonance'")
    grid = default_grid(spec, n=n)
    field = make_gaussian(spec, grid)
    w = (np.abs(field.amp_up) ** 2 + np.abs(field.amp_down) ** 2) * grid.cell_area
    px, pz = grid.meshgrid()

    pt_static = np.hypot(j0 * px, pz)
    omega = 2.0 * pt_static
    mean = np.sum(w * omega)
    delta = math.sqrt(max(np.sum(w * (omega - mean) ** 2), 0.0))
    if delta == 0.0:
        return math.inf
    tau_static = 0.5 * math.pi / delta
    if regime == "static-like":
        return tau_static

    if drive is None:
        raise ValueError("resonance regime requires drive parameters")
    # group-velocity difference between branches: 2 * grad|p_tilde|
    safe = np.where(pt_static == 0, 1.0, pt_static)
    gv_static = 2.0 * np.hypot(j0**2 * px, pz) / safe
    ptx = px - 0.5 * drive.omega_d
    pt_res = np.hypot(ptx, 0.5 * drive.v_d)
    gv_res = 2.0 * np.abs(ptx) / np.where(pt_res == 0, 1.0, pt_res)
    rms_static = math.sqrt(np.sum(w * gv_static**2))
    rms_res = math.sqrt(np.sum(w * gv_res**2))
    if rms_res == 0.0:
        return math.inf
    return tau_static * max(10.0, rms_static / rms_res)
