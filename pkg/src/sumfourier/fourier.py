"""Prime-length Fourier kernels over Z/NZ.

All transforms use the positive-sign convention w_r = sum_j v_j * e_N(r*j)
with e_N(x) = exp(2*pi*i*x/N). Prime lengths rule out radix FFT splitting,
so ``dft`` runs the chirp-z (Bluestein) reduction to a power-of-two
convolution. Per-length chirp tables are precomputed once and never mutated
afterwards, so cached plans are safe to share across threads.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = ["is_prime", "eval_unit_root", "dft", "idft", "cyclic_convolve"]

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test, exact for 64-bit inputs."""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # This witness set is exact for all n < 3.3e24 (covers 64-bit inputs).
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def eval_unit_root(x: int, N: int) -> complex:
    """Evaluate e_N(x) = exp(2*pi*i*x/N).

    ``x`` is reduced mod N first, so the function is exactly periodic and the
    angle stays in [0, 2*pi) for full double precision.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"modulus N must be a positive integer, got {N!r}")
    return complex(np.exp(2j * np.pi * (int(x) % int(N)) / int(N)))


class _ChirpPlan:
    """Bluestein tables for one transform length; immutable after build."""

    __slots__ = ("length", "padded", "chirp", "kernel_fft")

    def __init__(self, N: int):
        self.length = N
        M = 1
        while M < 2 * N - 1:
            M *= 2
        self.padded = M
        k = np.arange(N, dtype=np.int64)
        # k^2 mod 2N keeps chirp angles small and exact for any 64-bit N.
        angles = np.pi * ((k * k) % (2 * N)) / N
        self.chirp = np.exp(1j * angles)
        kernel = np.zeros(M, dtype=np.complex128)
        kernel[:N] = np.conj(self.chirp)
        if N > 1:
            kernel[M - N + 1:] = np.conj(self.chirp[1:])[::-1]
        self.kernel_fft = np.fft.fft(kernel)


_plans: dict[int, _ChirpPlan] = {}
_plans_lock = threading.Lock()


def _plan(N: int) -> _ChirpPlan:
    plan = _plans.get(N)
    if plan is None:
        with _plans_lock:
            plan = _plans.get(N)
            if plan is None:
                plan = _ChirpPlan(N)
                _plans[N] = plan
    return plan


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty one-dimensional vector")
    return arr


def dft(v) -> np.ndarray:
    """Forward transform w_r = sum_j v_j * exp(2*pi*i*r*j/N), any length N."""
    v = _as_vector(v, "v")
    N = v.shape[0]
    if N == 1:
        return v.copy()
    plan = _plan(N)
    a = np.zeros(plan.padded, dtype=np.complex128)
    a[:N] = v * plan.chirp
    conv = np.fft.ifft(np.fft.fft(a) * plan.kernel_fft)[:N]
    return conv * plan.chirp


def idft(w) -> np.ndarray:
    """Inverse of :func:`dft`: v_j = (1/N) sum_r w_r * exp(-2*pi*i*r*j/N)."""
    w = _as_vector(w, "w")
    return np.conj(dft(np.conj(w))) / w.shape[0]


def cyclic_convolve(a, b) -> np.ndarray:
    """Cyclic convolution c_r = sum_t a_t * b_{(r-t) mod N} via dft/idft.

    Returns a real array when both inputs are real.
    """
    a_arr = _as_vector(a, "a")
    b_arr = _as_vector(b, "b")
    if a_arr.shape[0] != b_arr.shape[0]:
        raise ValueError(
            f"length mismatch: {a_arr.shape[0]} vs {b_arr.shape[0]}"
        )
    c = idft(dft(a_arr) * dft(b_arr))
    if not np.iscomplexobj(np.asarray(a)) and not np.iscomplexobj(np.asarray(b)):
        return c.real
    return c
