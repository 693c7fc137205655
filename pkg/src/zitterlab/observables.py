"""Observables extracted from a momentum-space spinor field.

Position expectations come by two independent routes (spectral momentum
gradient vs. explicit transform to the position grid and summing), plus
spin expectations, position densities, a branch-overlap damping diagnostic,
and least-squares fitting of damped ZB oscillations.
"""

import io
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import hilbert

from .efftheory import eff_eigensystem  # noqa: F401  (re-export convenience)


class BoundaryContaminationError(ValueError):
    """Packet mass too close to a grid boundary for a reliable expectation."""


class NoOscillationError(ValueError):
    """Time series carries no spectral peak above the noise floor."""


class FitFailureError(RuntimeError):
    """Damped-sinusoid fit failed to converge."""


POSITION_METHODS = ("momentum-gradient", "position-sum")


def _recenter(field, center):
    """Shift position content by -center via a momentum-space phase ramp."""
    if center is None:
        return field
    px, pz = field.grid.meshgrid()
    phase = np.exp(1j * (px * center[0] + pz * center[1]))
    return field.with_amplitudes(field.amp_up * phase, field.amp_down * phase)


def _edge_mass(density, cells, weight):
    mask = np.zeros(density.shape, dtype=bool)
    mask[:cells, :] = True
    mask[-cells:, :] = True
    mask[:, :cells] = True
    mask[:, -cells:] = True
    return float(np.sum(density[mask])) * weight


def _check_momentum_edges(field, cells=3, tol=1e-6):
    dens = np.abs(field.amp_up) ** 2 + np.abs(field.amp_down) ** 2
    mass = _edge_mass(dens, cells, field.grid.cell_area)
    if mass > tol:
        raise BoundaryContaminationError(
            f"momentum-space packet mass {mass:.3e} within {cells} cells of the grid edge"
        )


def position_axes(grid):
    """FFT-conjugate position axes (sawtooth order) and cell sizes."""
    x = 2.0 * math.pi * np.fft.fftfreq(grid.n_x, d=grid.dp_x)
    z = 2.0 * math.pi * np.fft.fftfreq(grid.n_z, d=grid.dp_z)
    dx = 2.0 * math.pi / (grid.n_x * grid.dp_x)
    dz = 2.0 * math.pi / (grid.n_z * grid.dp_z)
    return x, z, dx, dz


def _to_position(field):
    """Transform both spinor components to the conjugate position grid.

    psi(r) = (2 pi)^-1 int psi(p) exp(i p.r) dp, discretized with the grid
    offset folded into an explicit phase.  Satisfies Parseval with cell
    sizes from :func:`position_axes`.
    """
    grid = field.grid
    x, z, _, _ = position_axes(grid)
    p0x = grid.p_center[0] - grid.p_halfwidth[0]
    p0z = grid.p_center[1] - grid.p_halfwidth[1]
    offset = np.exp(1j * (p0x * x[:, None] + p0z * z[None, :]))
    scale = grid.cell_area * grid.n_x * grid.n_z / (2.0 * math.pi)
    psi_up = scale * offset * np.fft.ifft2(field.amp_up)
    psi_dn = scale * offset * np.fft.ifft2(field.amp_down)
    return psi_up, psi_dn


def position_expectation(field, method="momentum-gradient", center=None):
    """Expectation value of position by one of two independent routes.

    ``center``, when given, is a known reference position (e.g. the
    ballistic drift r0 + p0 t); the field is measured in the comoving
    frame and the reference added back, keeping phase winding on-grid.
    """
    if method not in POSITION_METHODS:
        raise ValueError(f"method must be one of {POSITION_METHODS}")
    field = _recenter(field, center)
    _check_momentum_edges(field)
    grid = field.grid

    if method == "momentum-gradient":
        wx = 2.0 * math.pi * np.fft.fftfreq(grid.n_x, d=grid.dp_x)
        wz = 2.0 * math.pi * np.fft.fftfreq(grid.n_z, d=grid.dp_z)
        acc = np.zeros(2)
        for amp in (field.amp_up, field.amp_down):
            f = np.fft.fft(amp, axis=0)
            dpx_amp = np.fft.ifft(1j * wx[:, None] * f, axis=0)
            f = np.fft.fft(amp, axis=1)
            dpz_amp = np.fft.ifft(1j * wz[None, :] * f, axis=1)
            conj = np.conj(amp)
            acc[0] += np.real(1j * np.sum(conj * dpx_amp))
            acc[1] += np.real(1j * np.sum(conj * dpz_amp))
        r = acc * grid.cell_area
    else:
        psi_up, psi_dn = _to_position(field)
        x, z, dx, dz = position_axes(grid)
        dens = (np.abs(psi_up) ** 2 + np.abs(psi_dn) ** 2) * dx * dz
        near_x = np.abs(x) >= np.abs(x).max() - 2.5 * dx
        near_z = np.abs(z) >= np.abs(z).max() - 2.5 * dz
        edge = float(np.sum(dens[near_x, :])) + float(np.sum(dens[:, near_z]))
        if edge > 1e-6:
            raise BoundaryContaminationError(
                f"position-space packet mass {edge:.3e} within 3 cells of the periodic box edge"
            )
        r = np.array([np.sum(x[:, None] * dens), np.sum(z[None, :] * dens)])

    if center is not None:
        r = r + np.asarray(center, dtype=float)
    return r


def spin_expectation(field):
    """(<sigma_x>, <sigma_y>, <sigma_z>) of the internal spinor."""
    up, dn = field.amp_up, field.amp_down
    w = field.grid.cell_area
    cross = np.sum(np.conj(up) * dn)
    sx = 2.0 * w * float(np.real(cross))
    sy = 2.0 * w * float(np.imag(cross))
    sz = w * float(np.sum(np.abs(up) ** 2 - np.abs(dn) ** 2))
    return np.array([sx, sy, sz])


def to_position_density(field, center=None):
    """Total position-space density on the conjugate grid.

    Returns (x_axis, z_axis, density) with ascending axes; the density
    integrates to the field norm (Parseval).
    """
    field = _recenter(field, center)
    psi_up, psi_dn = _to_position(field)
    x, z, _, _ = position_axes(field.grid)
    dens = np.abs(psi_up) ** 2 + np.abs(psi_dn) ** 2
    ix, iz = np.argsort(x), np.argsort(z)
    xs = x[ix] if center is None else x[ix] + center[0]
    zs = z[iz] if center is None else z[iz] + center[1]
    return xs, zs, dens[np.ix_(ix, iz)]


def count_density_peaks(axis_values, marginal, rel_height=0.05):
    """Number of local maxima of a 1-D marginal above a relative threshold.

    Used to classify wavepacket profiles as unimodal vs. split.
    """
    y = np.asarray(marginal, dtype=float)
    thresh = rel_height * y.max()
    peaks = 0
    for i in range(1, y.size - 1):
        if y[i] >= thresh and y[i] > y[i - 1] and y[i] >= y[i + 1]:
            peaks += 1
    return peaks


def branch_overlap(field, j0, center=None, drive_phase=None):
    """Bhattacharyya overlap of the two effective-branch position densities.

    Each mode is projected onto the averaged-Hamiltonian eigenstates
    psi+-(p_tilde); both branch wavefunctions are transformed to position
    space and the overlap integral of sqrt(rho+ rho-) returned, normalized
    so co-located branches give 1.  A branch carrying < 1e-6 mass makes the
    diagnostic degenerate; 1.0 is returned with a warning.

    With ``drive_phase`` (= omega_d t + phase of a resonant drive) the
    overlap is taken between the *dressed* branches — the equal-weight
    combinations of the bare branches whose relative phase is unwound at
    the drive frequency.  On resonance the drive coherently swaps bare
    branch populations, so the bare overlap oscillates with the swap while
    the dressed packets are the ones whose spatial separation actually
    damps the trembling; their overlap is the secular diagnostic.
    """
    grid = field.grid
    px, pz = grid.meshgrid()
    theta = np.arctan2(pz, j0 * px)
    beta = 0.25 * math.pi - 0.5 * theta
    cb, sb = np.cos(beta), np.sin(beta)
    c_plus = cb * field.amp_up + sb * field.amp_down
    c_minus = sb * field.amp_up - cb * field.amp_down
    if drive_phase is not None:
        ph = np.exp(1j * drive_phase)
        c_plus, c_minus = (
            (c_plus + ph * c_minus) / math.sqrt(2.0),
            (c_plus - ph * c_minus) / math.sqrt(2.0),
        )

    masses = []
    rhos = []
    for amp in (c_plus, c_minus):
        branch = _recenter(field.with_amplitudes(amp, np.zeros_like(amp)), center)
        psi, _ = _to_position(branch)
        x, z, dx, dz = position_axes(grid)
        rho = np.abs(psi) ** 2
        rhos.append(rho)
        masses.append(float(np.sum(rho)) * dx * dz)
    if min(masses) < 1e-6:
        warnings.warn("degenerate branch: one branch carries < 1e-6 mass", stacklevel=2)
        return 1.0
    x, z, dx, dz = position_axes(grid)
    bc = float(np.sum(np.sqrt(rhos[0] * rhos[1]))) * dx * dz
    return bc / math.sqrt(masses[0] * masses[1])


# --------------------------------------------------------------------------
# Time series and ZB fitting
# --------------------------------------------------------------------------

TIMESERIES_HEADER = "t,x_mean,z_mean,sx,sy,sz,norm,overlap"


@dataclass
class TimeSeries:
    times: list = dc_field(default_factory=list)
    x_mean: list = dc_field(default_factory=list)
    z_mean: list = dc_field(default_factory=list)
    sx: list = dc_field(default_factory=list)
    sy: list = dc_field(default_factory=list)
    sz: list = dc_field(default_factory=list)
    norm: list = dc_field(default_factory=list)
    overlap: list = dc_field(default_factory=list)

    def append(self, t, r, s, norm, overlap):
        self.times.append(float(t))
        self.x_mean.append(float(r[0]))
        self.z_mean.append(float(r[1]))
        self.sx.append(float(s[0]))
        self.sy.append(float(s[1]))
        self.sz.append(float(s[2]))
        self.norm.append(float(norm))
        self.overlap.append(float(overlap))

    def to_csv(self):
        buf = io.StringIO()
        buf.write(TIMESERIES_HEADER + "\n")
        for row in zip(
            self.times, self.x_mean, self.z_mean,
            self.sx, self.sy, self.sz, self.norm, self.overlap,
        ):
            buf.write(",".join(repr(v) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln]
        if lines[0] != TIMESERIES_HEADER:
            raise ValueError("unexpected time-series header")
        ts = cls()
        for ln in lines[1:]:
            vals = [float(v) for v in ln.split(",")]
            ts.append(vals[0], vals[1:3], vals[3:6], vals[6], vals[7])
        return ts


@dataclass
class ZbSummary:
    amplitude: float
    omega: float
    tau: float
    drift_velocity: tuple
    axis: str
    fit_residual: float
    phase: float = 0.0
    offset: float = 0.0
    envelope_power: float = 1.0

    def to_text(self):
        lines = [
            f"axis = {self.axis}",
            f"amplitude = {self.amplitude!r}",
            f"omega = {self.omega!r}",
            f"tau = {self.tau!r}",
            f"drift_velocity_x = {self.drift_velocity[0]!r}",
            f"drift_velocity_z = {self.drift_velocity[1]!r}",
            f"fit_residual = {self.fit_residual!r}",
            f"phase = {self.phase!r}",
            f"offset = {self.offset!r}",
            f"envelope_power = {self.envelope_power!r}",
        ]
        return "\n".join(lines) + "\n"


def _zb_model(t, c0, c1, a, tau, omega, phi, power=1.0):
    """Drifting background plus a stretched-exponentially damped cosine.

    The envelope exponent interpolates between exponential decay
    (power = 1) and the Gaussian dephasing of a wavepacket's frequency
    spread (power = 2); fitting it keeps the extrapolated t = 0 amplitude
    unbiased for either decay shape.
    """
    env = np.exp(-((np.abs(t) / tau) ** power))
    return c0 + c1 * t + a * env * np.cos(omega * t + phi)


def _spur_frequencies(t, res, omega, known):
    """Strongest residual line away from omega and already-known spurs."""
    window = np.hanning(t.size)
    spec = np.abs(np.fft.rfft(res * window))
    freqs = 2.0 * math.pi * np.fft.rfftfreq(t.size, d=t[1] - t[0])
    spec[0] = 0.0
    dw = freqs[1] - freqs[0]
    masked = spec.copy()
    # micromotion lines live near the drive frequency and its harmonics,
    # far above the ZB line; anything lower is signal or its dephasing
    # sidelobes and must not be subtracted
    masked[freqs < 2.5 * omega] = 0.0
    for w in known:
        masked[np.abs(freqs - w) < 4.0 * dw] = 0.0
    k = int(np.argmax(masked))
    floor = float(np.median(spec[1:])) + 1e-300
    if masked[k] < 6.0 * floor:
        return None
    w = freqs[k]
    if 1 <= k < spec.size - 1:
        denom = spec[k - 1] - 2 * spec[k] + spec[k + 1]
        if denom != 0:
            w = freqs[k] + 0.5 * (spec[k - 1] - spec[k + 1]) / denom * dw
    return w


def _spur_signal(t, y_minus_primary, tau, spur_freqs):
    """Linear least-squares spur reconstruction at fixed frequencies.

    Each spur line gets cos/sin quadratures under both a decaying envelope
    exp(-t/tau) and a flat one, so modulation sidebands and persistent
    micromotion lines are both absorbed.
    """
    env = np.exp(-t / tau)
    cols = []
    for w in spur_freqs:
        c, s = np.cos(w * t), np.sin(w * t)
        cols.extend([env * c, env * s, c, s])
    basis = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(basis, y_minus_primary, rcond=None)
    return basis @ coef


def _refit_with_spur(t, y, popt, omega_bounds=None, max_spurs=4):
    """Strip narrow micromotion lines that bias the main amplitude.

    Sampled micromotion of a driven run leaves spectral lines away from
    the main oscillation.  Alternate between locating the strongest such
    line, subtracting all located lines by linear least squares, and
    refitting the primary damped cosine on the cleaned series.
    """
    best = popt
    spur_freqs = []
    for _ in range(max_spurs):
        res = y - _zb_model(t, *best)
        if spur_freqs:
            res = res - _spur_signal(t, res + 0.0, best[3], spur_freqs)
        w = _spur_frequencies(t, res, best[4], spur_freqs)
        if w is None:
            break
        spur_freqs.append(w)
        spur = _spur_signal(t, y - _zb_model(t, *best), best[3], spur_freqs)
        cleaned = y - spur
        span = t[-1] - t[0]
        w_lo, w_hi = omega_bounds or (0.5 * best[4], 2.0 * best[4])
        bounds = (
            [-np.inf, -np.inf, 0.0, span / 100.0, w_lo, -2 * math.pi, 0.8],
            [np.inf, np.inf, np.inf, 1e4, w_hi, 2 * math.pi, 3.0],
        )
        try:
            refit, _ = curve_fit(
                _zb_model, t, cleaned, p0=list(best), bounds=bounds, maxfev=20000
            )
        except RuntimeError:
            break
        old = np.mean((y - _zb_model(t, *best) - spur) ** 2)
        new = np.mean((cleaned - _zb_model(t, *refit)) ** 2)
        if new > old * 1.05:
            spur_freqs.pop()
            break
        best = refit
    if spur_freqs:
        spur = _spur_signal(t, y - _zb_model(t, *best), best[3], spur_freqs)
        return best, spur
    return best, None


def fit_zb(series, axis, omega_hint=None):
    """Least-squares fit of c0 + c1 t + a exp(-t/tau) cos(w t + phi).

    Initial guesses come from a linear detrend, the discrete spectrum peak
    of the residual, and the log-envelope slope.  The reported amplitude is
    the envelope value at t = 0.  When ``omega_hint`` is given, the peak
    search is restricted to [hint/2, 2*hint] so a strong sampled-micromotion
    line elsewhere in the spectrum cannot capture the fit.
    """
    if axis not in ("x", "z"):
        raise ValueError("axis must be 'x' or 'z'")
    t = np.asarray(series.times, dtype=float)
    y = np.asarray(series.x_mean if axis == "x" else series.z_mean, dtype=float)
    other = np.asarray(series.z_mean if axis == "x" else series.x_mean, dtype=float)
    if t.size < 16 or np.any(np.diff(t) <= 0):
        raise ValueError("series must be monotone in time with >= 16 samples")

    c1, c0 = np.polyfit(t, y, 1)
    resid = y - (c0 + c1 * t)

    # spectral peak of the residual (Hann window against leakage)
    window = np.hanning(t.size)
    spec = np.abs(np.fft.rfft(resid * window))
    freqs = 2.0 * math.pi * np.fft.rfftfreq(t.size, d=t[1] - t[0])
    spec[0] = 0.0
    searchable = spec.copy()
    if omega_hint is not None:
        if omega_hint <= 0:
            raise ValueError("omega_hint must be positive")
        searchable[(freqs < 0.5 * omega_hint) | (freqs > 2.0 * omega_hint)] = 0.0
        if not np.any(searchable > 0):
            raise NoOscillationError(
                "no spectral content within a factor of 2 of omega_hint"
            )
    k = int(np.argmax(searchable))
    floor = float(np.median(spec[1:])) + 1e-300
    if spec[k] < 3.0 * floor or spec[k] == 0.0:
        raise NoOscillationError(
            f"no spectral peak >= 3x the noise floor (peak/floor = {spec[k] / floor:.2f})"
        )
    # parabolic peak interpolation
    omega0 = freqs[k]
    if 1 <= k < spec.size - 1:
        denom = spec[k - 1] - 2 * spec[k] + spec[k + 1]
        if denom != 0:
            delta = 0.5 * (spec[k - 1] - spec[k + 1]) / denom
            omega0 = freqs[k] + delta * (freqs[1] - freqs[0])
    span = t[-1] - t[0]
    n_periods = span * omega0 / (2.0 * math.pi)
    if n_periods < 3.0:
        raise NoOscillationError(
            f"series spans only {n_periods:.2f} estimated ZB periods (need >= 3)"
        )

    env = np.abs(hilbert(resid))
    use = env > 0.2 * env.max()
    if np.count_nonzero(use) >= 4:
        slope = np.polyfit(t[use], np.log(env[use] + 1e-300), 1)[0]
        tau0 = -1.0 / slope if slope < -1e-12 else 1e3
    else:
        tau0 = 1e3
    tau0 = float(np.clip(tau0, span / 50.0, 1e4))
    a0 = float(env[: max(4, t.size // 10)].mean())

    # phase guess by quadrature correlation at omega0
    decay = np.exp(-t / tau0)
    cc = np.sum(resid * decay * np.cos(omega0 * t))
    ss = np.sum(resid * decay * np.sin(omega0 * t))
    phi0 = math.atan2(-ss, cc)

    p0 = [c0, c1, a0, tau0, omega0, phi0, 1.2]
    # with a hint the frequency must stay inside the hinted octave, so a
    # stronger out-of-band line (e.g. sampled micromotion near suppression
    # points) cannot capture the nonlinear fit either
    if omega_hint is not None:
        omega_lo, omega_hi = 0.5 * omega_hint, 2.0 * omega_hint
        omega0 = float(np.clip(omega0, omega_lo, omega_hi))
        p0[4] = omega0
    else:
        omega_lo, omega_hi = 0.25 * omega0, 4.0 * omega0
    bounds = (
        [-np.inf, -np.inf, 0.0, span / 100.0, omega_lo, -2 * math.pi, 0.8],
        [np.inf, np.inf, np.inf, 1e4, omega_hi, 2 * math.pi, 3.0],
    )
    try:
        popt, _ = curve_fit(_zb_model, t, y, p0=p0, bounds=bounds, maxfev=20000)
    except RuntimeError as exc:
        raise FitFailureError(f"damped-sinusoid fit did not converge: {exc}") from exc
    popt, spur = _refit_with_spur(t, y, popt, omega_bounds=(omega_lo, omega_hi))
    c0f, c1f, a, tau, omega, phi, power = popt

    model = _zb_model(t, *popt) + (spur if spur is not None else 0.0)
    osc_rms = float(np.sqrt(np.mean((y - (c0f + c1f * t)) ** 2))) + 1e-300
    residual = float(np.sqrt(np.mean((y - model) ** 2))) / osc_rms
    residual = min(max(residual, 0.0), 1.0)
    if residual > 0.5:
        # the damped cosine explains less than half the oscillatory content:
        # whatever sits in the searched band is not a coherent oscillation
        # (happens at suppression points, where only micromotion remains)
        raise NoOscillationError(
            f"damped-cosine model leaves {residual:.0%} relative residual"
        )

    other_slope = float(np.polyfit(t, other, 1)[0])
    drift = (c1f, other_slope) if axis == "x" else (other_slope, c1f)
    return ZbSummary(
        amplitude=float(a),
        omega=float(omega),
        tau=float(tau),
        drift_velocity=drift,
        axis=axis,
        fit_residual=residual,
        phase=float(phi),
        offset=float(c0f),
        envelope_power=float(power),
    )
