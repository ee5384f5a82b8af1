"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .fourier import is_prime

__all__ = [
    "CapacityError",
    "CertificateInfeasibleError",
    "check_complex_vector",
    "check_positive_int",
    "check_prime_modulus",
    "check_support",
    "check_unimodular",
]


class CapacityError(ValueError):
    """Requested explicit/dense materialization exceeds the configured cap."""


class CertificateInfeasibleError(ValueError):
    """Support Gram is too ill-conditioned for a certificate to exist."""


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return int(value)


def check_prime_modulus(N) -> int:
    N = check_positive_int(N, "N")
    if not is_prime(N):
        raise ValueError(f"modulus N must be prime, got {N}")
    return N


def check_complex_vector(v, name: str = "v") -> np.ndarray:
    """Return ``v`` as a finite 1-D complex128 array."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_support(T, N: int) -> np.ndarray:
    """Canonicalize a support set to sorted ascending int64 residues."""
    T = np.asarray(T, dtype=np.int64).ravel()
    if T.size == 0:
        raise ValueError("support must be non-empty")
    if np.any(T < 0) or np.any(T >= N):
        raise ValueError(f"support indices must lie in [0, {N})")
    T = np.sort(T)
    if np.any(T[1:] == T[:-1]):
        raise ValueError("support contains duplicate indices")
    return T


def check_unimodular(p, s: int, tol: float = 1e-8) -> np.ndarray:
    p = check_complex_vector(p, "sign_pattern")
    if p.size != s:
        raise ValueError(f"sign_pattern must have length {s}, got {p.size}")
    if np.max(np.abs(np.abs(p) - 1.0)) > tol:
        raise ValueError("sign_pattern entries must have unit modulus")
    return p
