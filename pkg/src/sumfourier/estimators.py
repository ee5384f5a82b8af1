"""Scikit-learn style wrappers around the operator and the recovery solver.

``MinkowskiSensing`` is a transformer: ``fit`` draws the seeds for the
number of input features (which must be prime) and ``transform`` measures
each row of ``X``. ``BasisPursuitDenoiser`` is a fit/predict estimator for
one inverse problem: ``fit(A, y)`` recovers the coefficient vector from
measurements ``y``, where ``A`` is either a fitted ``MinkowskiSensing``,
a raw ensemble, or a plain dense matrix; ``predict(X)`` re-measures with
dense rows. Both follow the get_params/set_params contract, so they clone
and pipeline like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import rng
from .ensemble import MinkowskiEnsemble, entropy_bits, sample_ensemble
from .operator import MeasurementData, apply_adjoint, apply_forward, occupied_frequencies
from .solver import SolverConfig, solve_bpdn, solve_bpdn_dense
from .validation import check_prime_modulus

__all__ = ["MinkowskiSensing", "BasisPursuitDenoiser"]


def _check_complex_matrix(X, n_cols: int | None = None) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {X.shape}")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite entries")
    if n_cols is not None and X.shape[1] != n_cols:
        raise ValueError(f"expected {n_cols} features, got {X.shape[1]}")
    return X


class MinkowskiSensing(BaseEstimator, TransformerMixin):
    """Random sumset-frequency Fourier measurements as a transformer.

    Parameters
    ----------
    n_seeds : number of seed residues n.
    order : sumset order L; the implicit matrix has n**L rows.
    mode : 'reduced' (one weighted sample per occupied frequency) or
        'explicit' (one sample per row tuple, capped).
    random_state : 64-bit reproducibility token.
    """

    def __init__(self, n_seeds: int = 32, order: int = 2,
                 mode: str = "reduced", random_state: int = 0):
        self.n_seeds = n_seeds
        self.order = order
        self.mode = mode
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_complex_matrix(X)
        N = check_prime_modulus(X.shape[1])
        token = rng.derive_stream("minkowski-sensing", self.random_state)
        self.ensemble_ = sample_ensemble(N, self.n_seeds, self.order, token)
        self.n_features_in_ = N
        self.entropy_bits_ = entropy_bits(self.ensemble_)
        if self.mode == "reduced":
            self.n_measurements_ = int(occupied_frequencies(self.ensemble_).shape[0])
        elif self.mode == "explicit":
            self.n_measurements_ = self.ensemble_.num_rows
        else:
            raise ValueError(f"mode must be 'explicit' or 'reduced', got {self.mode!r}")
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = _check_complex_matrix(X, self.n_features_in_)
        out = np.empty((X.shape[0], self.n_measurements_), dtype=np.complex128)
        for i, row in enumerate(X):
            out[i] = apply_forward(self.ensemble_, row, mode=self.mode).samples
        return out

    def adjoint_transform(self, Y) -> np.ndarray:
        """Apply the adjoint operator to each row of measurements."""
        self._check_fitted()
        Y = _check_complex_matrix(Y, self.n_measurements_)
        out = np.empty((Y.shape[0], self.n_features_in_), dtype=np.complex128)
        for i, row in enumerate(Y):
            data = MeasurementData(mode=self.mode, samples=row)
            out[i] = apply_adjoint(self.ensemble_, data)
        return out

    def _check_fitted(self):
        if not hasattr(self, "ensemble_"):
            raise RuntimeError("MinkowskiSensing is not fitted; call fit(X) first")


class BasisPursuitDenoiser(BaseEstimator):
    """Minimize ||z||_1 subject to ||A z - y||_2 <= eta over complex z.

    After ``fit``, the recovered vector is in ``coef_`` along with
    ``n_iter_``, ``residual_``, ``l1_value_`` and ``converged_``.
    """

    def __init__(self, eta: float = 0.0, max_iters: int = 20000,
                 primal_tol: float = 1e-7, feasibility_tol: float = 1e-9,
                 step_scale: float = 0.99, mode: str = "reduced"):
        self.eta = eta
        self.max_iters = max_iters
        self.primal_tol = primal_tol
        self.feasibility_tol = feasibility_tol
        self.step_scale = step_scale
        self.mode = mode

    def _solver_config(self) -> SolverConfig:
        return SolverConfig(
            max_iters=self.max_iters,
            primal_tol=self.primal_tol,
            feasibility_tol=self.feasibility_tol,
            step_scale=self.step_scale,
        )

    def fit(self, X, y):
        y = np.asarray(y, dtype=np.complex128).ravel()
        cfg = self._solver_config()
        if isinstance(X, MinkowskiSensing):
            X._check_fitted()
            data = MeasurementData(mode=X.mode, samples=y, eta=self.eta)
            result = solve_bpdn(X.ensemble_, data, self.eta, cfg)
        elif isinstance(X, MinkowskiEnsemble):
            data = MeasurementData(mode=self.mode, samples=y, eta=self.eta)
            result = solve_bpdn(X, data, self.eta, cfg)
        else:
            A = _check_complex_matrix(X)
            result = solve_bpdn_dense(A, y, self.eta, cfg)
        self.coef_ = result.x_hat
        self.n_iter_ = result.iterations
        self.residual_ = result.residual
        self.l1_value_ = result.l1_value
        self.converged_ = result.converged
        self.n_features_in_ = result.x_hat.shape[0]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise RuntimeError("BasisPursuitDenoiser is not fitted; call fit first")
        X = _check_complex_matrix(X, self.n_features_in_)
        return X @ self.coef_
