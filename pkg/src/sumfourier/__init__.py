"""Low-entropy partial-Fourier compressed sensing on sumset frequencies.

The measurement matrix samples a prime-length DFT at all L-fold modular
sums of n random seed residues, so it spends only n*log2(N) bits of
randomness while exposing n**L rows. The package provides the implicit
operator and its closed-form Grams, dual-certificate checks, a basis
pursuit denoising solver, scikit-learn wrappers, Monte-Carlo verifiers for
the supporting concentration claims, and a reproducible experiment CLI.
"""

from .ensemble import (
    MinkowskiEnsemble,
    dirichlet_profile,
    ensemble_from_text,
    ensemble_to_text,
    entropy_bits,
    load_ensemble,
    multiplicity_vector,
    sample_ensemble,
    save_ensemble,
)
from .fourier import cyclic_convolve, dft, eval_unit_root, idft, is_prime
from .operator import (
    MeasurementData,
    apply_adjoint,
    apply_forward,
    coherence,
    cross_gram_row,
    dense_matrix,
    entry,
    gram_on_support,
)
from .certificate import (
    CertificateReport,
    build_certificate,
    certify,
    gram_conditioning_norm,
    offsupport_sup,
)
from .solver import (
    RecoveryResult,
    SolverConfig,
    recovery_error_bound,
    soft_threshold,
    solve_bpdn,
    solve_bpdn_dense,
)
from .estimators import BasisPursuitDenoiser, MinkowskiSensing
from .validation import CapacityError, CertificateInfeasibleError

__version__ = "0.1.0"

__all__ = [
    "MinkowskiEnsemble",
    "MeasurementData",
    "CertificateReport",
    "RecoveryResult",
    "SolverConfig",
    "BasisPursuitDenoiser",
    "MinkowskiSensing",
    "CapacityError",
    "CertificateInfeasibleError",
    "apply_adjoint",
    "apply_forward",
    "build_certificate",
    "certify",
    "coherence",
    "cross_gram_row",
    "cyclic_convolve",
    "dense_matrix",
    "dft",
    "dirichlet_profile",
    "ensemble_from_text",
    "ensemble_to_text",
    "entropy_bits",
    "entry",
    "eval_unit_root",
    "gram_conditioning_norm",
    "gram_on_support",
    "idft",
    "is_prime",
    "load_ensemble",
    "multiplicity_vector",
    "offsupport_sup",
    "recovery_error_bound",
    "sample_ensemble",
    "save_ensemble",
    "soft_threshold",
    "solve_bpdn",
    "solve_bpdn_dense",
]
