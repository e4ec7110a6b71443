"""Decay analysis toolkit for linear Schrodinger flows with quadratic,
uniform-magnetic, and time-dependent electric potentials."""

from .grids import GridSpec, WaveField, field_from_callable, read_field, write_field
from .specfun import (
    EigenfunctionSample,
    LandauSpectrumEntry,
    OscillatorSpectrumEntry,
    landau_eigenfunction,
    landau_spectrum,
    oscillator_spectrum,
    qho_eigenfunction,
)
from .fields import (
    ElectricPotential,
    GaugeResult,
    MagneticPotential,
    cronstrom_gauge,
    make_uniform_magnetic,
    validate_HE,
    validate_HM,
)
from .engine import (
    EquationSpec,
    GuardError,
    default_grid,
    free_oracle,
    harmonic_oracle,
    laplacian,
    magnetic_laplacian,
    magnetic_oracle,
    propagate,
    residual,
)
from .transforms import (
    TransformChain,
    TransformRecord,
    apply,
    comoving,
    electric_removal,
    galilean,
    harmonic_removal,
    phase_removal,
    repulsive_removal,
    rotating_frame,
)
from .closedform import (
    CounterexampleParams,
    SharpThreshold,
    alpha_tilde_sq,
    counterexample_equation,
    counterexample_field,
    counterexample_u,
    counterexample_V,
    h_constant,
    measured_endpoint_rate,
    select_reading,
    verification_report,
)
from .decay import (
    DecayReport,
    ThresholdVerdict,
    classify,
    fit_rate,
    fourier_decay,
    threshold_value,
    weighted_norm,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
