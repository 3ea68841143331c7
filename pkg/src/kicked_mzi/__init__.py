"""Kicked non-linear Mach-Zehnder interferometer as a single-mode Gaussian map, with its phase QFI."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    KickParams,
    SpectralData,
    TangentState,
    closed_form_S_t,
    critical_phase,
    is_stable,
    is_stable_with_loss,
    max_photon_number,
    propagate,
    propagate_with_tangent,
    spectral_data,
    step_matrix,
    step_matrix_dphi,
)
from .errors import (  # noqa: E402
    CalibrationError,
    InconsistentTangentError,
    KickedMZIError,
    NotConvergedError,
    UnstableDynamicsError,
)
from .gaussian import (  # noqa: E402
    Covariance,
    GaussianState,
    apply_loss,
    apply_symplectic,
    make_coherent,
    make_vacuum,
    photon_number,
    purity,
    rotation_matrix,
    squeeze_matrix,
)
from .qfi import (  # noqa: E402
    QfiSeries,
    max_rescaled_qfi,
    purity_derivative,
    qfi_coherent_benchmark,
    qfi_finite_difference,
    qfi_gaussian,
    qfi_noon_benchmark,
    qfi_vs_time,
)

__all__ = [
    "KickParams",
    "SpectralData",
    "TangentState",
    "closed_form_S_t",
    "critical_phase",
    "is_stable",
    "is_stable_with_loss",
    "max_photon_number",
    "propagate",
    "propagate_with_tangent",
    "spectral_data",
    "step_matrix",
    "step_matrix_dphi",
    "CalibrationError",
    "InconsistentTangentError",
    "KickedMZIError",
    "NotConvergedError",
    "UnstableDynamicsError",
    "Covariance",
    "GaussianState",
    "apply_loss",
    "apply_symplectic",
    "make_coherent",
    "make_vacuum",
    "photon_number",
    "purity",
    "rotation_matrix",
    "squeeze_matrix",
    "QfiSeries",
    "max_rescaled_qfi",
    "purity_derivative",
    "qfi_coherent_benchmark",
    "qfi_finite_difference",
    "qfi_gaussian",
    "qfi_noon_benchmark",
    "qfi_vs_time",
]
