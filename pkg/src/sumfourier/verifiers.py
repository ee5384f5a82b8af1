"""Desk-scale Monte-Carlo and combinatorial verifiers.

Each verifier re-checks one supporting claim behind the recovery guarantee
on freshly drawn ensembles: profile tails, support-Gram conditioning tails,
the decoupled matrix iterate and its spectral-norm envelope, moments of the
off-support certificate terms, and an exact integer rank lower bound for
aggregated sign constraints. Every tail report carries a Wilson 95% upper
bound; bare point estimates never leave this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng
from .ensemble import MinkowskiEnsemble, dirichlet_profile
from .fourier import dft
from .operator import cross_gram_row, gram_on_support
from .certificate import gram_conditioning_norm
from .validation import CapacityError, check_positive_int

__all__ = [
    "TailEstimate",
    "wilson_bounds",
    "coherence_tail",
    "conditioning_tail",
    "DecoupledProcessState",
    "decoupled_process",
    "decoupled_tail",
    "MomentCheck",
    "moment_estimate",
    "ConstraintSystem",
    "integer_rank",
    "RankCheck",
    "rank_lower_bound_check",
]

_Z95 = 1.959963984540054
_DECOUPLED_SIZE_CAP = 512


def wilson_bounds(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class TailEstimate:
    threshold: float
    violation_count: int
    trials: int
    rate: float
    wilson_upper_95: float

    def to_jsonable(self) -> dict:
        return {
            "threshold": self.threshold,
            "violation_count": self.violation_count,
            "trials": self.trials,
            "rate": self.rate,
            "wilson_upper_95": self.wilson_upper_95,
        }


def _tail_estimate(threshold: float, violations: int, trials: int) -> TailEstimate:
    _, hi = wilson_bounds(violations, trials)
    return TailEstimate(
        threshold=float(threshold),
        violation_count=int(violations),
        trials=int(trials),
        rate=violations / trials,
        wilson_upper_95=hi,
    )


def _batch_seeds(N: int, n: int, trials: int, seed: int, label: str) -> np.ndarray:
    bg = rng.philox(rng.derive_stream(label, N, n, trials, seed))
    return rng.uniform_residues(bg, N, trials * n).reshape(trials, n)


def coherence_tail(N: int, n: int, L: int, epsilon: float, trials: int,
                   seed: int = 0) -> TailEstimate:
    """Tail of the profile maximum max_{d != 0} |S(d)| over fresh ensembles.

    The threshold t = sqrt(2 n ln(12 N^2 / epsilon)) is the exact level at
    which the Hoeffding union bound 4 N^2 exp(-t^2 / 2n) equals epsilon/3.
    The statistic is order-free: coherence at any order L is
    (max |S(d)| / n)^L, so one threshold covers all L.
    """
    check_positive_int(trials, "trials")
    check_positive_int(L, "L")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    threshold = math.sqrt(2.0 * n * math.log(12.0 * N * N / epsilon))
    all_seeds = _batch_seeds(N, n, trials, seed, "coherence-tail")
    violations = 0
    for row in all_seeds:
        e = MinkowskiEnsemble(N=N, n=n, L=L, seeds=tuple(int(b) for b in row))
        top = float(np.max(np.abs(dirichlet_profile(e)[1:])))
        if top > threshold:
            violations += 1
    return _tail_estimate(threshold, violations, trials)


def conditioning_tail(N: int, n: int, L: int, s: int, trials: int,
                      seed: int = 0, threshold: float = 1.0 / math.e) -> TailEstimate:
    """Tail of ||A_T* A_T - I|| over fresh ensembles and uniform supports."""
    check_positive_int(trials, "trials")
    if s > N:
        raise ValueError(f"s = {s} exceeds N = {N}")
    all_seeds = _batch_seeds(N, n, trials, seed, "conditioning-tail")
    gen = rng.generator(rng.derive_stream("conditioning-tail-support", N, n, s, trials, seed))
    violations = 0
    for row in all_seeds:
        e = MinkowskiEnsemble(N=N, n=n, L=L, seeds=tuple(int(b) for b in row))
        T = np.sort(gen.choice(N, size=s, replace=False))
        norm = gram_conditioning_norm(gram_on_support(e, T))
        if norm > threshold:
            violations += 1
    return _tail_estimate(threshold, violations, trials)


@dataclass
class DecoupledProcessState:
    """Matrix iterate built from independent seed banks.

    ``entries`` is the level-``level`` matrix: zero diagonal, and at (t, u)
    the product over banks q of S_q(u - t), where S_q is the profile of
    bank q. ``spectral_norms[q]`` and ``sigma_sq[q]`` report ||X_q|| and
    n * max_t ||X_q e_t||_2^2 for every level q = 0..level.
    """

    level: int
    seed_banks: np.ndarray
    support: np.ndarray
    entries: np.ndarray
    spectral_norms: list[float]
    sigma_sq: list[float]


def _level_matrices(N: int, n: int, banks: np.ndarray, T: np.ndarray) -> list[np.ndarray]:
    s = T.shape[0]
    diff = (T[None, :] - T[:, None]) % N
    X = np.ones((s, s), dtype=np.complex128)
    np.fill_diagonal(X, 0.0)
    levels = [X]
    for q in range(banks.shape[0]):
        hist = np.bincount(banks[q], minlength=N).astype(np.complex128)
        S = dft(hist)
        X = X * S[diff]
        np.fill_diagonal(X, 0.0)
        levels.append(X)
    return levels


def decoupled_process(N: int, n: int, s: int, levels: int,
                      seed: int = 0) -> DecoupledProcessState:
    """Draw seed banks and a support, build the iterate via the product form."""
    N = check_positive_int(N, "N")
    check_positive_int(n, "n")
    check_positive_int(s, "s")
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if s > _DECOUPLED_SIZE_CAP:
        raise CapacityError(f"s = {s} exceeds dense eigensolve cap {_DECOUPLED_SIZE_CAP}")
    if s > N:
        raise ValueError(f"s = {s} exceeds N = {N}")
    bg = rng.philox(rng.derive_stream("decoupled-banks", N, n, s, levels, seed))
    banks = rng.uniform_residues(bg, N, levels * n).reshape(levels, n)
    gen = rng.generator(rng.derive_stream("decoupled-support", N, n, s, levels, seed))
    T = np.sort(gen.choice(N, size=s, replace=False))
    mats = _level_matrices(N, n, banks, T)
    norms = [float(np.max(np.abs(np.linalg.eigvalsh(X)))) for X in mats]
    sigmas = [float(n * np.max(np.sum(np.abs(X) ** 2, axis=0))) for X in mats]
    return DecoupledProcessState(
        level=levels,
        seed_banks=banks,
        support=T,
        entries=mats[-1],
        spectral_norms=norms,
        sigma_sq=sigmas,
    )


def decoupled_tail(N: int, n: int, s: int, L: int, alpha: float, trials: int,
                   seed: int = 0, scale_constant: float = 1.0) -> TailEstimate:
    """Tail of ||X_L|| against the envelope c * n^(L/2) sqrt(s) ln^(3L/2)(N/alpha).

    ``scale_constant`` plays the role of the (unspecified) absolute constant;
    the default 1 makes the check conservative, since the true constant is
    at least 1.
    """
    check_positive_int(trials, "trials")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if s > _DECOUPLED_SIZE_CAP:
        raise CapacityError(f"s = {s} exceeds dense eigensolve cap {_DECOUPLED_SIZE_CAP}")
    threshold = (
        scale_constant * float(n) ** (L / 2.0) * math.sqrt(s)
        * math.log(N / alpha) ** (1.5 * L)
    )
    bg = rng.philox(rng.derive_stream("decoupled-tail-banks", N, n, s, L, trials, seed))
    all_banks = rng.uniform_residues(bg, N, trials * L * n).reshape(trials, L, n)
    gen = rng.generator(rng.derive_stream("decoupled-tail-support", N, n, s, L, trials, seed))
    violations = 0
    for t in range(trials):
        T = np.sort(gen.choice(N, size=s, replace=False))
        X = _level_matrices(N, n, all_banks[t], T)[-1]
        norm = float(np.max(np.abs(np.linalg.eigvalsh(X))))
        if norm > threshold:
            violations += 1
    return _tail_estimate(threshold, violations, trials)


class MomentCheck(NamedTuple):
    estimate: float
    bound: float
    ratio: float


def moment_estimate(N: int, n: int, L: int, s: int, k: int, p: float,
                    trials: int, seed: int = 0, z=None) -> MomentCheck:
    """Monte-Carlo mean of |a_u* A_T (I - G)^k z|^p against its moment bound.

    The bound is 2 * h^(2h) * (s^(1/L) / n)^(h/2) with h = (k+1) * L * p,
    valid under the hypothesis n >= 2 s^(1/L). It is extremely loose, so an
    empirical violation signals an implementation bug rather than a tight
    constant.
    """
    check_positive_int(trials, "trials")
    if k < 0:
        raise ValueError("k must be >= 0")
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if n < 2.0 * s ** (1.0 / L):
        raise ValueError(
            f"hypothesis n >= 2 s^(1/L) fails: n = {n}, 2 s^(1/L) = {2.0 * s ** (1.0 / L):.3f}"
        )
    if z is None:
        z = np.ones(s, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (s,):
        raise ValueError(f"z must have shape ({s},)")
    all_seeds = _batch_seeds(N, n, trials, seed, "moment-seeds")
    gen = rng.generator(rng.derive_stream("moment-support", N, n, L, s, k, p, trials, seed))
    acc = 0.0
    eye = np.eye(s)
    for row in all_seeds:
        e = MinkowskiEnsemble(N=N, n=n, L=L, seeds=tuple(int(b) for b in row))
        pick = gen.choice(N, size=s + 1, replace=False)
        T = np.sort(pick[:s])
        u = int(pick[s])
        G = gram_on_support(e, T)
        vec = z
        B = eye - G
        for _ in range(k):
            vec = B @ vec
        val = abs(complex(cross_gram_row(e, u, T) @ vec))
        acc += val ** p
    estimate = acc / trials
    h = (k + 1) * L * p
    bound = 2.0 * h ** (2.0 * h) * (s ** (1.0 / L) / n) ** (h / 2.0)
    return MomentCheck(estimate=estimate, bound=bound, ratio=estimate / bound)


def integer_rank(matrix) -> int:
    """Rank of an integer matrix by exact fraction-free (Bareiss) elimination."""
    M = [[int(v) for v in row] for row in matrix]
    nrows = len(M)
    ncols = len(M[0]) if nrows else 0
    rank = 0
    prev = 1
    for col in range(ncols):
        piv = next((r for r in range(rank, nrows) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(rank + 1, nrows):
            for c in range(col + 1, ncols):
                M[r][c] = (M[r][c] * M[rank][col] - M[r][col] * M[rank][c]) // prev
            M[r][col] = 0
        prev = M[rank][col]
        rank += 1
        if rank == nrows:
            break
    return rank


@dataclass
class ConstraintSystem:
    """Aggregated sign constraints induced by one index map.

    The map assigns each (h, p, q) in [k+1] x [2M] x [L] a bucket in [n];
    row i of the matrix is the sum over the preimage of i of the basis
    vectors (-1)^p e_{1,p} (h = 1) or (-1)^p (e_{h,p} - e_{h-1,p}) (h > 1),
    flattened over (h, p).
    """

    k: int
    M: int
    L: int
    n: int
    assignment: tuple[int, ...]
    matrix: list[list[int]]

    @classmethod
    def from_assignment(cls, k: int, M: int, L: int, n: int,
                        assignment: tuple[int, ...]) -> "ConstraintSystem":
        width = (k + 1) * 2 * M
        rows = [[0] * width for _ in range(n)]
        domain = list(itertools.product(range(k + 1), range(2 * M), range(L)))
        if len(assignment) != len(domain):
            raise ValueError("assignment length does not match the domain size")
        for (h0, p0, _q0), bucket in zip(domain, assignment):
            sign = 1 if p0 % 2 == 1 else -1  # (-1)^p with 1-based p
            flat = h0 * 2 * M + p0
            rows[bucket][flat] += sign
            if h0 > 0:
                rows[bucket][(h0 - 1) * 2 * M + p0] -= sign
        return cls(k=k, M=M, L=L, n=n, assignment=assignment, matrix=rows)

    @property
    def image_size(self) -> int:
        return len(set(self.assignment))

    @property
    def required_rank(self) -> int:
        return -(-self.image_size // self.L)

    def rank(self) -> int:
        return integer_rank(self.matrix)


class RankCheck(NamedTuple):
    checked: int
    min_rank_ratio: float
    all_pass: bool


def rank_lower_bound_check(k: int, M: int, L: int, n: int,
                           mode: str = "exhaustive", samples: int = 1000,
                           seed: int = 0) -> RankCheck:
    """Verify rank(constraints) >= ceil(m / L) for index maps ((m = image size).

    ``exhaustive`` enumerates all n^((k+1)*2M*L) maps (capped at 10^6);
    ``sampled`` draws ``samples`` maps uniformly from the module PRNG.
    """
    domain_size = (k + 1) * 2 * M * L
    total = n ** domain_size
    if mode == "exhaustive":
        if total > 10**6:
            raise CapacityError(
                f"exhaustive mode needs {total} maps > 10^6; use sampled mode"
            )
        assignments = itertools.product(range(n), repeat=domain_size)
    elif mode == "sampled":
        check_positive_int(samples, "samples")
        bg = rng.philox(rng.derive_stream("rank-maps", k, M, L, n, samples, seed))
        draws = rng.uniform_residues(bg, n, samples * domain_size)
        assignments = (
            tuple(int(v) for v in draws[i * domain_size:(i + 1) * domain_size])
            for i in range(samples)
        )
    else:
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    checked = 0
    min_ratio = math.inf
    all_pass = True
    for assignment in assignments:
        system = ConstraintSystem.from_assignment(k, M, L, n, tuple(assignment))
        ratio = system.rank() / system.required_rank
        min_ratio = min(min_ratio, ratio)
        if ratio < 1.0:
            all_pass = False
        checked += 1
    return RankCheck(checked=checked, min_rank_ratio=min_ratio, all_pass=all_pass)
