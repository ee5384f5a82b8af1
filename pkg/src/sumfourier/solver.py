"""Noise-aware l1 recovery against the implicit measurement operator.

Solves ``minimize ||z||_1 subject to ||A z - y||_2 <= eta`` over complex
vectors with a first-order primal-dual splitting (proximal step on the l1
term, shrinkage of the dual residual toward the eta-ball). The only
operator access is one forward and one adjoint apply per iteration, so the
same loop runs on reduced-mode ensembles, explicit-mode ensembles and
plain dense matrices. Step sizes come from a power-iteration estimate of
the operator norm, scaled by ``step_scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rng
from .ensemble import MinkowskiEnsemble, multiplicity_vector
from .fourier import dft, idft
from .operator import (
    MeasurementData,
    occupied_frequencies,
    row_frequencies,
    _reduced_weights,
)
from .validation import check_complex_vector

__all__ = [
    "SolverConfig",
    "RecoveryResult",
    "soft_threshold",
    "operator_norm_estimate",
    "solve_bpdn",
    "solve_bpdn_dense",
    "recovery_error_bound",
    "best_term_tail_l1",
]


@dataclass
class SolverConfig:
    max_iters: int = 20000
    primal_tol: float = 1e-7
    feasibility_tol: float = 1e-9
    step_scale: float = 0.99

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.primal_tol <= 0 or self.feasibility_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.step_scale <= 1.0:
            raise ValueError("step_scale must lie in (0, 1]")


@dataclass
class RecoveryResult:
    x_hat: np.ndarray
    iterations: int
    residual: float
    l1_value: float
    converged: bool


def soft_threshold(z, tau):
    """Proximal map of tau * |.| for complex inputs: shrink modulus, keep phase."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    scale = np.maximum(1.0 - tau / np.maximum(mag, 1e-300), 0.0)
    out = z * scale
    if out.ndim == 0:
        return complex(out)
    return out


def _ensemble_ops(e: MinkowskiEnsemble, mode: str):
    """Forward/adjoint closures with all index tables bound up front."""
    N = e.N
    if mode == "reduced":
        occ = occupied_frequencies(e)
        weights = _reduced_weights(e)

        def forward(z):
            return weights * dft(z)[occ]

        def adjoint(q):
            acc = np.zeros(N, dtype=np.complex128)
            acc[occ] = weights * q
            return N * idft(acc)

        return forward, adjoint, occ.shape[0]
    if mode == "explicit":
        freqs = row_frequencies(e)
        scale = e.column_scale

        def forward(z):
            return scale * dft(z)[freqs]

        def adjoint(q):
            acc = np.zeros(N, dtype=np.complex128)
            np.add.at(acc, freqs, q)
            return scale * N * idft(acc)

        return forward, adjoint, freqs.shape[0]
    raise ValueError(f"mode must be 'explicit' or 'reduced', got {mode!r}")


@lru_cache(maxsize=256)
def operator_norm_estimate(e: MinkowskiEnsemble, iters: int = 300,
                           tol: float = 1e-12) -> float:
    """Power-iteration estimate of ||A||; identical for both apply modes."""
    forward, adjoint, _ = _ensemble_ops(e, "reduced")
    gen = rng.generator(rng.derive_stream("opnorm-start", e.N, e.n, e.L))
    x = gen.standard_normal(e.N) + 1j * gen.standard_normal(e.N)
    x /= np.linalg.norm(x)
    lam_prev = 0.0
    lam = 0.0
    for _ in range(iters):
        y = adjoint(forward(x))
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
        if abs(lam - lam_prev) <= tol * max(lam, 1.0):
            break
        lam_prev = lam
    return math.sqrt(lam)


def _pdhg(forward, adjoint, y_samples, eta, cfg, n_features, opnorm) -> RecoveryResult:
    tau = sigma = cfg.step_scale / max(opnorm, 1e-300)
    z = np.zeros(n_features, dtype=np.complex128)
    zbar = z.copy()
    p = np.zeros_like(y_samples)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d = p + sigma * forward(zbar) - sigma * y_samples
        if eta > 0.0:
            nd = float(np.linalg.norm(d))
            p = d * max(0.0, 1.0 - eta * sigma / nd) if nd > 0.0 else d * 0.0
        else:
            p = d
        z_new = soft_threshold(z - tau * adjoint(p), tau)
        change = float(np.linalg.norm(z_new - z))
        zbar = 2.0 * z_new - z
        z = z_new
        if change <= cfg.primal_tol * max(float(np.linalg.norm(z)), 1e-30):
            resid = float(np.linalg.norm(forward(z) - y_samples))
            if resid <= eta + cfg.feasibility_tol:
                converged = True
                break
    residual = float(np.linalg.norm(forward(z) - y_samples))
    return RecoveryResult(
        x_hat=z,
        iterations=it,
        residual=residual,
        l1_value=float(np.sum(np.abs(z))),
        converged=converged,
    )


def solve_bpdn(e: MinkowskiEnsemble, y: MeasurementData, eta: float,
               cfg: SolverConfig | None = None) -> RecoveryResult:
    """Recover a signal from MeasurementData in either mode.

    ``eta = 0`` degenerates the ball constraint to the equality A z = y and
    is handled by the same iteration. Non-convergence within ``max_iters``
    is reported through ``converged = False``, never silently.
    """
    cfg = cfg or SolverConfig()
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    forward, adjoint, n_samples = _ensemble_ops(e, y.mode)
    samples = np.asarray(y.samples, dtype=np.complex128)
    if samples.shape != (n_samples,):
        raise ValueError(
            f"{y.mode} data has shape {samples.shape}, expected ({n_samples},)"
        )
    opnorm = operator_norm_estimate(e)
    return _pdhg(forward, adjoint, samples, eta, cfg, e.N, opnorm)


def solve_bpdn_dense(A: np.ndarray, y: np.ndarray, eta: float,
                     cfg: SolverConfig | None = None) -> RecoveryResult:
    """Same iteration against a plain dense matrix (ecosystem entry point)."""
    cfg = cfg or SolverConfig()
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ValueError(f"A must be a matrix, got shape {A.shape}")
    y = check_complex_vector(y, "y")
    if y.shape[0] != A.shape[0]:
        raise ValueError(f"y has length {y.shape[0]}, expected {A.shape[0]}")
    Ah = A.conj().T
    opnorm = float(np.linalg.norm(A, 2))
    return _pdhg(lambda z: A @ z, lambda q: Ah @ q, y, eta, cfg, A.shape[1], opnorm)


def best_term_tail_l1(x, s: int) -> float:
    """l1 mass outside the s largest-magnitude entries (ties: lowest index)."""
    x = check_complex_vector(x, "x")
    if not 1 <= s <= x.shape[0]:
        raise ValueError(f"s must lie in [1, {x.shape[0]}], got {s}")
    order = np.lexsort((np.arange(x.shape[0]), -np.abs(x)))
    return float(np.sum(np.abs(x[order[s:]])))


def recovery_error_bound(s: int, eta: float, x, x_hat) -> tuple[float, float, bool]:
    """Recovery error against the certified-ensemble guarantee.

    Returns (err, bound, satisfied) with err = ||x_hat - x||_2 and
    bound = 25 * (sqrt(s) * eta + ||x - x_s||_1).
    """
    x = check_complex_vector(x, "x")
    x_hat = check_complex_vector(x_hat, "x_hat")
    if x.shape != x_hat.shape:
        raise ValueError("x and x_hat must have equal length")
    tail = best_term_tail_l1(x, s)
    err = float(np.linalg.norm(x_hat - x))
    bound = 25.0 * (math.sqrt(s) * eta + tail)
    return err, bound, err <= bound + 1e-6
