"""Sumset-structured partial-Fourier ensembles.

An ensemble is fixed by a prime modulus N, an order L, and n seed residues
b_1..b_n. The implied measurement matrix has one row per index tuple in
[n]^L and samples the length-N DFT at the modular sum of the selected
seeds, scaled by n^(-L/2). Everything the matrix can do is determined by
two length-N summaries:

* the Dirichlet profile S(d) = sum_i e_N(b_i * d), the DFT of the seed
  histogram, and
* the multiplicity vector mu[r] = number of row tuples whose seed sum is
  congruent to r, the L-fold cyclic self-convolution of the histogram.

The n seeds are the only randomness, so the ensemble consumes exactly
n*log2(N) bits of entropy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import rng
from .fourier import cyclic_convolve, dft
from .kvformat import dumps_kv, loads_kv
from .validation import check_positive_int, check_prime_modulus

__all__ = [
    "MinkowskiEnsemble",
    "sample_ensemble",
    "entropy_bits",
    "seed_histogram",
    "dirichlet_profile",
    "multiplicity_vector",
    "ensemble_to_text",
    "ensemble_from_text",
    "save_ensemble",
    "load_ensemble",
]

ENSEMBLE_SCHEMA_VERSION = 1

# Stream word separating seed sampling from every other use of a token.
_SEED_STREAM = 0x5EED


@dataclass(frozen=True)
class MinkowskiEnsemble:
    """Seeds plus parameters; immutable and hashable so summaries can cache."""

    N: int
    n: int
    L: int
    seeds: tuple[int, ...]
    rng_seed: int = 0

    def __post_init__(self):
        check_prime_modulus(self.N)
        check_positive_int(self.n, "n")
        check_positive_int(self.L, "L")
        if len(self.seeds) != self.n:
            raise ValueError(f"expected {self.n} seeds, got {len(self.seeds)}")
        if any(b < 0 or b >= self.N for b in self.seeds):
            raise ValueError(f"seeds must be residues in [0, {self.N})")

    @property
    def num_rows(self) -> int:
        return self.n ** self.L

    @property
    def column_scale(self) -> float:
        """Modulus of every matrix entry, n^(-L/2)."""
        return float(self.n) ** (-self.L / 2.0)


def sample_ensemble(N: int, n: int, L: int, rng_seed: int) -> MinkowskiEnsemble:
    """Draw n i.i.d. uniform seed residues; deterministic given ``rng_seed``."""
    N = check_prime_modulus(N)
    n = check_positive_int(n, "n")
    L = check_positive_int(L, "L")
    seeds = rng.uniform_residues(rng.philox(rng_seed, _SEED_STREAM), N, n)
    return MinkowskiEnsemble(N=N, n=n, L=L, seeds=tuple(int(b) for b in seeds),
                             rng_seed=int(rng_seed))


def entropy_bits(e: MinkowskiEnsemble) -> float:
    """Randomness consumed by the ensemble: n draws uniform over N values."""
    return e.n * np.log2(e.N)


@lru_cache(maxsize=64)
def seed_histogram(e: MinkowskiEnsemble) -> np.ndarray:
    h = np.bincount(np.asarray(e.seeds, dtype=np.int64), minlength=e.N)
    h.flags.writeable = False
    return h


@lru_cache(maxsize=64)
def dirichlet_profile(e: MinkowskiEnsemble) -> np.ndarray:
    """S(d) = sum_i e_N(b_i * d), computed as the DFT of the seed histogram."""
    values = dft(seed_histogram(e).astype(np.complex128))
    values.flags.writeable = False
    return values


@lru_cache(maxsize=64)
def multiplicity_vector(e: MinkowskiEnsemble) -> np.ndarray:
    """Per-frequency row counts: L-fold cyclic self-convolution of the histogram.

    Intermediate convolutions are rounded back to exact integers, so no
    floating error accumulates across levels.
    """
    h = seed_histogram(e).astype(np.float64)
    mu = h
    for _ in range(e.L - 1):
        mu = np.rint(cyclic_convolve(mu, h))
    mu = mu.astype(np.int64)
    total = int(mu.sum())
    if total != e.num_rows:
        raise ArithmeticError(
            f"multiplicity mass {total} != n^L = {e.num_rows}; convolution lost precision"
        )
    mu.flags.writeable = False
    return mu


def ensemble_to_text(e: MinkowskiEnsemble) -> str:
    pairs = {
        "schema_version": str(ENSEMBLE_SCHEMA_VERSION),
        "N": str(e.N),
        "n": str(e.n),
        "L": str(e.L),
        "rng_seed": str(e.rng_seed),
        "seeds": ",".join(str(b) for b in e.seeds),
    }
    return dumps_kv(pairs)


def ensemble_from_text(text: str) -> MinkowskiEnsemble:
    pairs = loads_kv(text)
    missing = {"schema_version", "N", "n", "L", "rng_seed", "seeds"} - pairs.keys()
    if missing:
        raise ValueError(f"ensemble record missing keys: {sorted(missing)}")
    version = int(pairs["schema_version"])
    if version != ENSEMBLE_SCHEMA_VERSION:
        raise ValueError(f"unsupported ensemble schema_version {version}")
    seeds = tuple(int(tok) for tok in pairs["seeds"].split(",") if tok.strip() != "")
    return MinkowskiEnsemble(
        N=int(pairs["N"]),
        n=int(pairs["n"]),
        L=int(pairs["L"]),
        seeds=seeds,
        rng_seed=int(pairs["rng_seed"]),
    )


def save_ensemble(e: MinkowskiEnsemble, path) -> None:
    Path(path).write_text(ensemble_to_text(e))


def load_ensemble(path) -> MinkowskiEnsemble:
    return ensemble_from_text(Path(path).read_text())
