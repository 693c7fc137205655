"""Tests for the tripod dark-subspace gauge structure.

The gauge-invariant payoff is the field-strength spectrum: eigenvalues
+/- 2 in units of hbar kappa^2 for the default configuration.
"""

import math

import numpy as np
import pytest

from zitterlab.gauge import (
    DEFAULT_XI,
    GAUGES,
    GaugeFixingError,
    LaserConfig,
    bright_row,
    dark_projector,
    dark_states,
    field_strength,
    field_strength_spectrum,
    gauge_potential,
)

CFG = LaserConfig()
RNG_SEED = 20260826


def _random_points(n, scale=math.pi):
    rng = np.random.default_rng(RNG_SEED)
    return rng.uniform(-scale, scale, size=(n, 2))


def test_default_mixing_angle():
    assert math.cos(DEFAULT_XI) == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-15)
    assert CFG.kappa == pytest.approx(math.sqrt(2.0) - 1.0)


def test_dark_states_annihilated_by_bright_row():
    for point in _random_points(10):
        row = bright_row(CFG, point)
        basis = dark_states(CFG, point)
        assert np.max(np.abs(row @ basis)) < 1e-12
        # orthonormal columns
        overlap = basis.conj().T @ basis
        assert np.max(np.abs(overlap - np.eye(2))) < 1e-12


def test_dark_projector_is_periodic_in_x():
    for point in _random_points(5):
        p1 = dark_projector(CFG, point)
        p2 = dark_projector(CFG, (point[0] + 2 * math.pi / CFG.k_l, point[1]))
        assert np.max(np.abs(p1 - p2)) < 1e-10


def test_gauge_fixing_is_smooth_between_nearby_points():
    h = 1e-4 / CFG.k_l
    for point in _random_points(5):
        b1 = dark_states(CFG, point)
        b2 = dark_states(CFG, (point[0] + h, point[1] + h))
        overlap = b1.conj().T @ b2
        assert np.max(np.abs(overlap - np.eye(2))) < 1e-3


def test_gauge_potential_is_hermitian():
    for point in _random_points(5):
        ax, az = gauge_potential(CFG, point)
        assert np.max(np.abs(ax - ax.conj().T)) < 1e-10
        assert np.max(np.abs(az - az.conj().T)) < 1e-10


def test_gauge_potential_richardson_order_two():
    point = (0.7, -0.4)
    ref_h = 2.5e-5
    ref = np.concatenate(gauge_potential(CFG, point, h=ref_h))
    errs = []
    for h in (4e-4, 2e-4):
        a = np.concatenate(gauge_potential(CFG, point, h=h))
        errs.append(np.max(np.abs(a - ref)))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_commutator_term_is_non_abelian():
    # the two components must not commute, otherwise the field strength
    # could not be constant with vanishing derivative terms
    ax, az = gauge_potential(CFG, (1.0, 1.0))
    comm = ax @ az - az @ ax
    assert np.max(np.abs(comm)) > 0.1 * CFG.kappa**2


def test_field_strength_spectrum_is_plus_minus_two():
    for point in _random_points(10):
        lo, hi = field_strength_spectrum(CFG, point)
        assert lo == pytest.approx(-2.0, abs=1e-4)
        assert hi == pytest.approx(2.0, abs=1e-4)


def test_field_strength_spectrum_is_translation_invariant():
    spectra = np.array([field_strength_spectrum(CFG, p) for p in _random_points(10)])
    assert np.ptp(spectra[:, 0]) < 1e-8
    assert np.ptp(spectra[:, 1]) < 1e-8


def test_spectrum_invariant_under_smooth_gauge_twist():
    # apply a random smooth local SU(2) rotation to the dark basis and
    # check the field-strength spectrum does not move
    rng = np.random.default_rng(5)
    c = rng.normal(size=(3, 2))  # random smooth angle functions

    def twisted(point):
        x, z = point
        base = dark_states(CFG, point)
        angles = c @ np.array([math.sin(0.3 * x), math.cos(0.2 * z)])
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
        gen = angles[0] * sx + angles[1] * sy + angles[2] * sz
        vals, vecs = np.linalg.eigh(gen)
        u = vecs @ np.diag(np.exp(1j * vals)) @ vecs.conj().T
        return base @ u

    for point in _random_points(3):
        plain = field_strength_spectrum(CFG, point)
        twist = field_strength_spectrum(CFG, point, section=twisted)
        assert abs(plain[0] - twist[0]) < 1e-6
        assert abs(plain[1] - twist[1]) < 1e-6


def test_transport_gauges_agree_on_spectrum():
    point = (0.9, -1.3)
    base = field_strength_spectrum(CFG, point)
    for gauge in GAUGES[1:]:
        from zitterlab.gauge import _section

        spec = field_strength_spectrum(CFG, point, section=_section(CFG, gauge))
        assert abs(spec[0] - base[0]) < 1e-6
        assert abs(spec[1] - base[1]) < 1e-6


def test_analytic_field_strength_magnitude():
    # independent oracle: F_xz for the constant potential
    # A = -hbar kappa (sigma_x, sigma_z) is -i[a_x, a_z] = -hbar^2 kappa^2
    # [sigma_x, sigma_z] i^{-1} with spectrum +/- 2 hbar kappa^2
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    f = -1j * (sx @ sz - sz @ sx)  # in units of hbar kappa^2
    vals = np.linalg.eigvalsh(f)
    assert vals[0] == pytest.approx(-2.0)
    assert vals[1] == pytest.approx(2.0)


def test_bad_configuration_rejected():
    with pytest.raises(ValueError):
        LaserConfig(omega0=-1.0)
    with pytest.raises(ValueError):
        LaserConfig(xi=2.0)
    with pytest.raises(ValueError):
        dark_states(CFG, (0.0, 0.0), gauge="axial")
