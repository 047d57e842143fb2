"""Path statistics: normalizers, W_k, log-averages, and the block machinery.

Every sum runs in ascending index order through ``math.fsum`` so values are
bit-stable across runs and schedules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GParams
from .functions import TestFunction


@dataclass(frozen=True)
class NormalizerSeq:
    sigma_mid: np.ndarray = field(repr=False)  # sigma_i, i = 1..n
    b: np.ndarray = field(repr=False)  # B_i

    def __len__(self):
        return len(self.b)


def normalizers(params: GParams, n: int) -> NormalizerSeq:
    """B_k = sigma_mid * sqrt(k) for a constant band."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    return NormalizerSeq(np.full(n, params.sigma_mid), params.sigma_mid * np.sqrt(k))


def normalizers_from_bands(sigma_lo, sigma_hi) -> NormalizerSeq:
    """General per-step bands: B_k = sqrt(sum_{i<=k} sigma_i^2)."""
    mid = 0.5 * (np.asarray(sigma_lo, float) + np.asarray(sigma_hi, float))
    if mid.ndim != 1 or mid.size == 0 or np.any(mid <= 0):
        raise ValueError("need a nonempty sequence of positive bands")
    return NormalizerSeq(mid, np.sqrt(np.cumsum(mid * mid)))


def w_sequence(increments, norm: NormalizerSeq) -> np.ndarray:
    """W_k = S_k / B_k per path; accepts a PathBatch or a (paths x steps) array."""
    inc = getattr(increments, "increments", increments)
    inc = np.atleast_2d(np.asarray(inc, dtype=float))
    n = inc.shape[1]
    if len(norm) < n:
        raise ValueError(f"normalizer length {len(norm)} < number of steps {n}")
    return np.cumsum(inc, axis=1) / norm.b[:n]


def harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def log_average(f: TestFunction, w_path, n: int | None = None) -> float:
    """A_n = (1/log n) * sum_{k<=n} f(W_k) / k."""
    w = np.asarray(w_path, dtype=float).ravel()
    n = len(w) if n is None else n
    if n < 2:
        raise ValueError("log_average needs n >= 2")
    if n > len(w):
        raise ValueError(f"path has {len(w)} steps, need {n}")
    terms = np.asarray(f(w[:n]), dtype=float) / np.arange(1, n + 1)
    return math.fsum(terms.tolist()) / math.log(n)


def log_averages(f: TestFunction, w_path, horizons) -> np.ndarray:
    """A_n at every horizon in ascending ``horizons``; equals log_average bit for bit."""
    w = np.asarray(w_path, dtype=float).ravel()
    horizons = sorted(int(h) for h in horizons)
    if horizons[0] < 2 or horizons[-1] > len(w):
        raise ValueError(f"horizons must lie in [2, {len(w)}]")
    terms = np.asarray(f(w[:horizons[-1]]), dtype=float) / np.arange(1, horizons[-1] + 1)
    return np.array([math.fsum(terms[:h].tolist()) / math.log(h) for h in horizons])


def centered_xi(f: TestFunction, w, reference_means) -> np.ndarray:
    """xi_k = f(W_k) - reference_means[k-1] (per path if ``w`` is 2-D)."""
    w = np.asarray(w, dtype=float)
    ref = np.asarray(reference_means, dtype=float).ravel()
    n = w.shape[-1]
    if len(ref) < n:
        raise ValueError(f"missing reference index: have {len(ref)} means, need {n}")
    return np.asarray(f(w), dtype=float) - ref[:n]


def block_count(length: int) -> int:
    """Largest N with 4^N - 1 <= length."""
    n = 0
    while 4 ** (n + 1) - 1 <= length:
        n += 1
    return n


@dataclass(frozen=True)
class BlockDecomposition:
    xi: np.ndarray = field(repr=False)
    z: np.ndarray  # Z_1..Z_N
    t: np.ndarray  # T_1..T_N


def blocks(xi_path, n_blocks: int | None = None) -> BlockDecomposition:
    """Z_l = sum over 4^(l-1) <= k < 4^l of xi_k / k, T_n = Z_1 + ... + Z_n.

    ``xi_path[k-1]`` holds xi_k. Without ``n_blocks`` the length must be
    exactly 4^N - 1.
    """
    xi = np.asarray(xi_path, dtype=float).ravel()
    if n_blocks is None:
        n_blocks = block_count(len(xi))
        if n_blocks == 0 or len(xi) != 4**n_blocks - 1:
            raise ValueError(
                f"incomplete final block: length {len(xi)}, need 4^N - 1 "
                f"(e.g. {4 ** max(1, n_blocks) - 1} or {4 ** (n_blocks + 1) - 1})"
            )
    need = 4**n_blocks - 1
    if len(xi) < need:
        raise ValueError(f"incomplete final block: {n_blocks} blocks need length {need}, got {len(xi)}")
    terms = xi[:need] / np.arange(1, need + 1)
    z = np.array([math.fsum(terms[4 ** (l - 1) - 1:4**l - 1].tolist()) for l in range(1, n_blocks + 1)])
    t = np.array([math.fsum(z[:n].tolist()) for n in range(1, n_blocks + 1)])
    return BlockDecomposition(xi[:need], z, t)


def d_statistic(t_seq, n_max: int | None = None) -> np.ndarray:
    """D_n = max over n^2 <= k < (n+1)^2 of |T_k - T_{n^2}|, for n = 1..n_max.

    ``t_seq[k-1]`` holds T_k.
    """
    t = np.asarray(t_seq, dtype=float).ravel()
    avail = math.isqrt(len(t) + 1) - 1  # largest n with (n+1)^2 - 1 <= len
    if n_max is None:
        n_max = avail
    if n_max > avail:
        raise ValueError(
            f"window exceeds sequence: D_{n_max} needs length {(n_max + 1) ** 2 - 1}, got {len(t)}"
        )
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        window = t[n * n - 1:(n + 1) ** 2 - 1]
        out[n - 1] = np.max(np.abs(window - t[n * n - 1]))
    return out
