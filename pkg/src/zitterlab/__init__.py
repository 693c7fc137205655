"""zitterlab: driven spin-orbit cold-atom Zitterbewegung simulator.

Simulates the mirror-driven Dirac-like equation for a tripod-scheme cold
atom, cross-validates the dynamics against the Bessel-renormalized
effective theory, and quantifies amplitude/frequency control, coherent
destruction of tunneling, and on-resonance damping suppression.
"""

from .core import (
    DriveParams,
    GridTruncationError,
    MomentumGrid,
    PacketSpec,
    Scales,
    SpinorField,
    default_grid,
    from_si,
    make_gaussian,
    to_si,
)
from .dynamics import (
    ModeHamiltonian,
    StepperConfig,
    StepperConfigError,
    evolve,
    evolve_effective,
    evolve_resonance_closed_form,
    evolve_static_closed_form,
    rotate_frame,
    step_mode,
)
from .efftheory import (
    CdtPointError,
    EffEigensystem,
    ResonanceConditionError,
    ResonanceTheory,
    average_hamiltonian,
    bessel_j0,
    case_a_prediction,
    case_b_prediction,
    cdt_points,
    eff_eigensystem,
    j0_factor,
    lifetime_estimate,
    resonance_theory,
    zb_closed_form,
)
from .gauge import (
    GaugeFixingError,
    LaserConfig,
    dark_states,
    field_strength_spectrum,
    gauge_potential,
)
from .observables import (
    BoundaryContaminationError,
    FitFailureError,
    NoOscillationError,
    TimeSeries,
    ZbSummary,
    branch_overlap,
    fit_zb,
    position_expectation,
    spin_expectation,
    to_position_density,
)
from .scenarios import (
    PRESET_NAMES,
    Scenario,
    ScenarioResult,
    SweepResult,
    preset,
    run_scenario,
    run_sweep,
    verify_gauge,
)

__version__ = "0.1.0"
