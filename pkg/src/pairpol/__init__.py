"""Photon-pair polarization tomography and fiber spectroscopy toolkit."""

from .errors import ConvergenceError, InputError
from .jones import (
    JonesVector,
    ProjectionSetting,
    WaveplateSetting,
    canonical_state,
    hwp_jones,
    projector_from_setting,
    protocol_single,
    protocol_two,
    qwp_jones,
)
from .linalg import DensityMatrix, fidelity, hermitian_eigen, partial_trace, tensor_product
from .coincidence import (
    CountRecord,
    FilterSpec,
    expected_coincidence_rate,
    filter_transmission,
    simulate_counts,
    simulate_state_counts,
)
from .metrics import (
    MetricsReport,
    StokesVector,
    concurrence,
    degree_of_polarization,
    entanglement_of_formation,
    purity,
    report_for,
    stokes_from_probs,
    stokes_from_rho,
)
from .source import SourceSpec, SpectralPeak, build_two_photon_state, conjugate_wavelength
from .spectroscopy import (
    CalibrationCurve,
    Spectrum,
    TimeHistogram,
    fit_calibration,
    invert_histogram,
    resolution_estimate,
    simulate_delay_histogram,
)
from .tomography import (
    MleOptions,
    TomographyProblem,
    bootstrap_uncertainty,
    linear_reconstruct,
    mle_reconstruct,
    problem_from_records,
    rho_from_params,
)

__version__ = "0.1.0"
