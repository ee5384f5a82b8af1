"""Measurement operator built on an ensemble.

Forward and adjoint applies come in two modes:

* ``explicit`` materializes one sample per row tuple (lexicographic order
  over the tuple, first index most significant) and is capped because the
  row count n^L explodes with L;
* ``reduced`` carries one weighted sample sqrt(mu[r]) * n^(-L/2) * w[r] per
  occupied frequency r, where w is the DFT of the signal. Repetition
  weighting makes the two modes isometric: ||A z||_2 agrees exactly.

Support Grams, cross rows and coherence never touch rows at all; every
column inner product is a power of the Dirichlet profile:
<a_t, a_u> = n^(-L) * S(u - t)^L.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ensemble import MinkowskiEnsemble, dirichlet_profile, multiplicity_vector
from .fourier import dft, eval_unit_root, idft
from .validation import CapacityError, check_complex_vector, check_support

__all__ = [
    "EXPLICIT_SAMPLE_CAP",
    "DENSE_MATRIX_CAP",
    "MeasurementData",
    "row_frequencies",
    "occupied_frequencies",
    "entry",
    "apply_forward",
    "apply_adjoint",
    "gram_on_support",
    "cross_gram_row",
    "coherence",
    "dense_matrix",
]

EXPLICIT_SAMPLE_CAP = 2**24
DENSE_MATRIX_CAP = 2**14


@dataclass
class MeasurementData:
    """Measurements plus their representation and noise budget.

    ``samples`` is ordered lexicographically over row tuples in explicit
    mode, and by ascending occupied frequency in reduced mode (the
    ``frequencies`` field records that order).
    """

    mode: str
    samples: np.ndarray
    eta: float = 0.0
    frequencies: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("explicit", "reduced"):
            raise ValueError(f"mode must be 'explicit' or 'reduced', got {self.mode!r}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        self.samples = np.asarray(self.samples, dtype=np.complex128)


def row_frequencies(e: MinkowskiEnsemble, cap: int = EXPLICIT_SAMPLE_CAP) -> np.ndarray:
    """Seed-sum frequency of every row tuple, lexicographic tuple order."""
    if e.num_rows > cap:
        raise CapacityError(
            f"explicit mode needs n^L = {e.num_rows} rows > cap {cap}; use reduced mode"
        )
    seeds = np.asarray(e.seeds, dtype=np.int64)
    freqs = seeds.copy()
    for _ in range(e.L - 1):
        freqs = ((freqs[:, None] + seeds[None, :]) % e.N).ravel()
    return freqs


@lru_cache(maxsize=64)
def occupied_frequencies(e: MinkowskiEnsemble) -> np.ndarray:
    occ = np.flatnonzero(multiplicity_vector(e))
    occ.flags.writeable = False
    return occ


@lru_cache(maxsize=64)
def _reduced_weights(e: MinkowskiEnsemble) -> np.ndarray:
    """sqrt(mu[r]) * n^(-L/2) over occupied frequencies, ascending r."""
    occ = occupied_frequencies(e)
    w = np.sqrt(multiplicity_vector(e)[occ].astype(np.float64)) * e.column_scale
    w.flags.writeable = False
    return w


@lru_cache(maxsize=64)
def _profile_power(e: MinkowskiEnsemble) -> np.ndarray:
    """Elementwise S(d)^L; repeated products keep full precision for small L."""
    S = dirichlet_profile(e)
    P = S.copy()
    for _ in range(e.L - 1):
        P *= S
    P.flags.writeable = False
    return P


def entry(e: MinkowskiEnsemble, row: tuple[int, ...], col: int) -> complex:
    """Matrix entry at a 1-based row tuple (i_1..i_L) and 0-based column."""
    if len(row) != e.L:
        raise IndexError(f"row tuple must have length L = {e.L}")
    if any(i < 1 or i > e.n for i in row):
        raise IndexError(f"row tuple entries must lie in [1, {e.n}]")
    if col < 0 or col >= e.N:
        raise IndexError(f"column must lie in [0, {e.N})")
    total = sum(e.seeds[i - 1] for i in row)
    return e.column_scale * eval_unit_root(total * col, e.N)


def apply_forward(e: MinkowskiEnsemble, z, mode: str = "reduced",
                  cap: int = EXPLICIT_SAMPLE_CAP) -> MeasurementData:
    """Measure a length-N signal; cost O(N log N + samples)."""
    z = check_complex_vector(z, "z")
    if z.shape[0] != e.N:
        raise ValueError(f"signal length {z.shape[0]} != N = {e.N}")
    w = dft(z)
    if mode == "explicit":
        samples = e.column_scale * w[row_frequencies(e, cap=cap)]
        return MeasurementData(mode="explicit", samples=samples)
    if mode == "reduced":
        occ = occupied_frequencies(e)
        samples = _reduced_weights(e) * w[occ]
        return MeasurementData(mode="reduced", samples=samples, frequencies=occ)
    raise ValueError(f"mode must be 'explicit' or 'reduced', got {mode!r}")


def apply_adjoint(e: MinkowskiEnsemble, y: MeasurementData) -> np.ndarray:
    """Adjoint apply A* y, returning a length-N vector."""
    samples = np.asarray(y.samples, dtype=np.complex128)
    acc = np.zeros(e.N, dtype=np.complex128)
    if y.mode == "explicit":
        if samples.shape[0] != e.num_rows:
            raise ValueError(
                f"explicit data has {samples.shape[0]} samples, expected n^L = {e.num_rows}"
            )
        np.add.at(acc, row_frequencies(e), samples)
        acc *= e.column_scale
    elif y.mode == "reduced":
        occ = occupied_frequencies(e)
        if samples.shape[0] != occ.shape[0]:
            raise ValueError(
                f"reduced data has {samples.shape[0]} samples, expected {occ.shape[0]}"
            )
        acc[occ] = _reduced_weights(e) * samples
    else:
        raise ValueError(f"unknown measurement mode {y.mode!r}")
    return e.N * idft(acc)


def gram_on_support(e: MinkowskiEnsemble, T) -> np.ndarray:
    """Support Gram A_T* A_T from the profile; O(s^2 + N log N), rows untouched."""
    T = check_support(T, e.N)
    P = _profile_power(e)
    diff = (T[None, :] - T[:, None]) % e.N
    return (float(e.n) ** (-e.L)) * P[diff]


def cross_gram_row(e: MinkowskiEnsemble, u: int, T) -> np.ndarray:
    """Row a_u* A_T for a column u outside the support."""
    T = check_support(T, e.N)
    u = int(u)
    if u < 0 or u >= e.N:
        raise ValueError(f"u must lie in [0, {e.N})")
    if np.any(T == u):
        raise ValueError(f"u = {u} lies inside the support")
    P = _profile_power(e)
    return (float(e.n) ** (-e.L)) * P[(T - u) % e.N]


def coherence(e: MinkowskiEnsemble) -> float:
    """Largest |<a_t, a_u>| over distinct columns: n^(-L) * max_d |S(d)|^L."""
    S = dirichlet_profile(e)
    top = float(np.max(np.abs(S[1:])))
    return (top ** e.L) * (float(e.n) ** (-e.L))


def dense_matrix(e: MinkowskiEnsemble, cap: int = DENSE_MATRIX_CAP) -> np.ndarray:
    """Materialize the full n^L x N matrix (test/toy sizes only)."""
    if e.num_rows > cap:
        raise CapacityError(
            f"dense matrix needs n^L = {e.num_rows} rows > cap {cap}"
        )
    freqs = row_frequencies(e, cap=cap)
    cols = np.arange(e.N, dtype=np.int64)
    phases = (freqs[:, None] * cols[None, :]) % e.N
    return e.column_scale * np.exp(2j * np.pi * phases / e.N)
