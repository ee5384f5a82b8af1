"""Approximate dual certificates for a given ensemble and support.

Given a support T and a unimodular sign pattern, the certificate solves
c = (A_T* A_T)^(-1) sign, so the implied vector v = A_T c interpolates the
pattern on T. The report checks three inequalities:

* conditioning: ||A_T* A_T - I|| <= 1/2,
* interpolator size: ||v||_2 <= sqrt(2 s),
* off-support leakage: ||(A* v)_{T^c}||_inf <= 1/2.

Passing all three guarantees stable l1 recovery of any signal whose best
s-term support is T. A truncated Neumann expansion of the Gram inverse is
available as an alternative construction; it matches the direct solve up
to a geometric factor once the conditioning norm is below 1/e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import rng
from .ensemble import MinkowskiEnsemble
from .operator import cross_gram_row, gram_on_support, _profile_power
from .validation import (
    CertificateInfeasibleError,
    check_complex_vector,
    check_support,
    check_unimodular,
)

__all__ = [
    "CertificateReport",
    "gram_conditioning_norm",
    "build_certificate",
    "offsupport_sup",
    "certify",
    "default_neumann_terms",
]

_DENSE_EIG_CUTOFF = 512
_POWER_TOL = 1e-10
_POWER_MAX_ITERS = 10**4


@dataclass
class CertificateReport:
    """Outcome of one certification; serializes to one JSON object."""

    gram_norm: float
    v_norm: float
    u_inf_offsupport: float
    s: int
    passes_conditioning: bool
    passes_v: bool
    passes_u: bool
    neumann_terms_used: int
    sign_pattern: np.ndarray

    @property
    def passes_all(self) -> bool:
        return self.passes_conditioning and self.passes_v and self.passes_u

    def to_jsonable(self) -> dict:
        def _num(x):
            return None if (isinstance(x, float) and math.isnan(x)) else x

        return {
            "gram_norm": _num(self.gram_norm),
            "v_norm": _num(self.v_norm),
            "u_inf_offsupport": _num(self.u_inf_offsupport),
            "s": self.s,
            "passes_conditioning": self.passes_conditioning,
            "passes_v": self.passes_v,
            "passes_u": self.passes_u,
            "passes_all": self.passes_all,
            "neumann_terms_used": self.neumann_terms_used,
            "sign_pattern_re": [float(v) for v in self.sign_pattern.real],
            "sign_pattern_im": [float(v) for v in self.sign_pattern.imag],
        }


def default_neumann_terms(N: int) -> int:
    """Truncation order ceil(2 ln N) used when none is given."""
    return int(math.ceil(2.0 * math.log(N)))


def gram_conditioning_norm(G) -> float:
    """Spectral norm ||G - I|| of a Hermitian Gram.

    Dense eigendecomposition up to 512x512; power iteration (tolerance 1e-10,
    at most 10^4 iterations) above that.
    """
    G = np.asarray(G, dtype=np.complex128)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"G must be square, got shape {G.shape}")
    herm_gap = float(np.max(np.abs(G - G.conj().T))) if G.size else 0.0
    if herm_gap > 1e-10:
        raise ValueError(f"G is not Hermitian within 1e-10 (gap {herm_gap:.3e})")
    s = G.shape[0]
    if s <= _DENSE_EIG_CUTOFF:
        eigs = np.linalg.eigvalsh(G)
        return float(np.max(np.abs(eigs - 1.0)))
    M = G - np.eye(s)
    gen = rng.generator(rng.derive_stream("gram-norm-start", s))
    x = gen.standard_normal(s) + 1j * gen.standard_normal(s)
    x /= np.linalg.norm(x)
    lam_prev = 0.0
    for _ in range(_POWER_MAX_ITERS):
        y = M @ x
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
        if abs(lam - lam_prev) <= _POWER_TOL * max(lam, 1.0):
            return lam
        lam_prev = lam
    return lam_prev


def _neumann_partial_sum(G: np.ndarray, p: np.ndarray, terms: int) -> np.ndarray:
    acc = p.copy()
    term = p.copy()
    for _ in range(terms - 1):
        term = term - G @ term
        acc += term
    return acc


def build_certificate(e: MinkowskiEnsemble, T, sign_pattern,
                      method: str = "direct",
                      neumann_terms: int | None = None) -> tuple[np.ndarray, float]:
    """Return the coefficient vector c and ||v||_2 = sqrt(c* G c).

    ``method`` is ``"direct"`` (Hermitian positive-definite solve of
    G c = sign) or ``"neumann"`` (partial sum of (I - G)^k sign, default
    truncation ceil(2 ln N)). Both need ||G - I|| < 1.
    """
    T = check_support(T, e.N)
    p = check_unimodular(sign_pattern, T.size)
    G = gram_on_support(e, T)
    gram_norm = gram_conditioning_norm(G)
    return _build_from_gram(G, gram_norm, p, method, neumann_terms, e.N)


def _build_from_gram(G, gram_norm, p, method, neumann_terms, N) -> tuple[np.ndarray, float]:
    if gram_norm >= 1.0:
        raise CertificateInfeasibleError(
            f"conditioning norm {gram_norm:.6f} >= 1; Gram inverse unavailable"
        )
    if method == "direct":
        c = cho_solve(cho_factor(G, lower=True), p)
    elif method == "neumann":
        terms = default_neumann_terms(N) if neumann_terms is None else int(neumann_terms)
        if terms < 1:
            raise ValueError(f"neumann_terms must be >= 1, got {terms}")
        c = _neumann_partial_sum(G, p, terms)
    else:
        raise ValueError(f"method must be 'direct' or 'neumann', got {method!r}")
    v_norm = math.sqrt(max(float(np.real(np.vdot(c, G @ c))), 0.0))
    return c, v_norm


def offsupport_sup(e: MinkowskiEnsemble, T, c) -> float:
    """max over j outside T of |sum_t c_t n^(-L) S(t - j)^L|, cost O(N s)."""
    T = check_support(T, e.N)
    c = check_complex_vector(c, "c")
    if c.shape[0] != T.size:
        raise ValueError(f"c must have length {T.size}, got {c.shape[0]}")
    if T.size == e.N:
        return 0.0
    P = _profile_power(e)
    cols = np.arange(e.N, dtype=np.int64)
    u_all = (float(e.n) ** (-e.L)) * (c @ P[(T[:, None] - cols[None, :]) % e.N])
    mags = np.abs(u_all)
    mags[T] = 0.0
    return float(np.max(mags))


def certify(e: MinkowskiEnsemble, T, sign_pattern,
            method: str = "direct",
            neumann_terms: int | None = None) -> CertificateReport:
    """Build the certificate and report all three pass/fail conditions.

    When the Gram inverse does not exist (conditioning norm >= 1) the
    remaining fields are NaN and all flags are false. With the direct
    method the on-support interpolation identity is re-checked to 1e-8.
    """
    T = check_support(T, e.N)
    s = int(T.size)
    p = check_unimodular(sign_pattern, s)
    G = gram_on_support(e, T)
    gram_norm = gram_conditioning_norm(G)
    if gram_norm >= 1.0:
        return CertificateReport(
            gram_norm=gram_norm,
            v_norm=math.nan,
            u_inf_offsupport=math.nan,
            s=s,
            passes_conditioning=False,
            passes_v=False,
            passes_u=False,
            neumann_terms_used=0,
            sign_pattern=p,
        )
    c, v_norm = _build_from_gram(G, gram_norm, p, method, neumann_terms, e.N)
    terms_used = 0
    if method == "neumann":
        terms_used = default_neumann_terms(e.N) if neumann_terms is None else int(neumann_terms)
    if method == "direct":
        interp_gap = float(np.max(np.abs(G @ c - p)))
        if interp_gap > 1e-8:
            raise ArithmeticError(
                f"on-support interpolation failed: gap {interp_gap:.3e} > 1e-8"
            )
    u_inf = offsupport_sup(e, T, c)
    return CertificateReport(
        gram_norm=gram_norm,
        v_norm=v_norm,
        u_inf_offsupport=u_inf,
        s=s,
        passes_conditioning=gram_norm <= 0.5,
        passes_v=v_norm <= math.sqrt(2.0 * s),
        passes_u=u_inf <= 0.5,
        neumann_terms_used=terms_used,
        sign_pattern=p,
    )
