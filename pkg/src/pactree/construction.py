"""Rate profiles, reliability estimates, critical sets and metric bias tables.

Indices are in natural order: bit ``k`` of index ``i`` (LSB = 0) selects the
g-branch at stage ``k`` of the SC tree, so index ``N-1`` is the most reliable
synthetic channel and row ``i`` of the polar kernel has weight
``2**popcount(i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

# Bias terms are snapped to this grid so that accumulating them in any order
# is exact in double precision (e.g. the bias cancels exactly at the last bit).
BIAS_GRID = 2.0 ** -32

PE_FLOOR = 1e-12


def design_sigma2(design_snr_db: float, rate: float) -> float:
    return 1.0 / (2.0 * rate * 10.0 ** (design_snr_db / 10.0))


def _log_phi(x: float) -> float:
    """log of Chung's approximation of the Gaussian-approximation phi function."""
    if x <= 0:
        return 0.0218
    if x < 10:
        return -0.4527 * x ** 0.86 + 0.0218
    return 0.5 * math.log(math.pi / x) - x / 4.0 + math.log1p(-10.0 / (7.0 * x))


def _phi_inv_log(t: float) -> float:
    """Solve ``log phi(x) = t`` for ``x >= 0``."""
    if t >= 0.0218:
        return 0.0
    hi = 12.0
    while _log_phi(hi) > t:
        hi *= 2.0
    return brentq(lambda x: _log_phi(x) - t, 0.0, hi, xtol=1e-13, rtol=1e-14)


def _f_mean(m: float) -> float:
    """Mean LLR of the check-node (f) child given the parent mean."""
    lp = _log_phi(m)
    p = math.exp(lp)
    # 1 - (1 - p)^2 = p (2 - p)
    return _phi_inv_log(lp + math.log(2.0 - p))


def dega_means(N: int, design_snr_db: float, rate: float = 0.5) -> np.ndarray:
    """Mean decision LLR of every synthetic channel (Gaussian approximation)."""
    n = _log2(N)
    means = np.array([2.0 / design_sigma2(design_snr_db, rate)])
    for _ in range(n):
        nxt = np.empty(2 * means.size)
        nxt[0::2] = [_f_mean(m) for m in means]
        nxt[1::2] = 2.0 * means
        means = nxt
    return means


def dega_reliability(N: int, design_snr_db: float, rate: float = 0.5) -> np.ndarray:
    """Reliability per index (larger is better)."""
    return dega_means(N, design_snr_db, rate)


def pe_from_reliability(means) -> np.ndarray:
    """Bit error probability ``Q(sqrt(mean / 2))`` clamped to ``[1e-12, 0.5]``."""
    means = np.maximum(np.asarray(means, dtype=np.float64), 0.0)
    pe = ndtr(-np.sqrt(means / 2.0))
    return np.clip(pe, PE_FLOOR, 0.5)


def log1m_pe_from_reliability(means) -> np.ndarray:
    """``log(1 - p_e)`` with the same clamp, accurate for tiny ``p_e``."""
    means = np.maximum(np.asarray(means, dtype=np.float64), 0.0)
    pe = np.clip(ndtr(-np.sqrt(means / 2.0)), PE_FLOOR, 0.5)
    return np.log1p(-pe)


def _log2(N: int) -> int:
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")
    return N.bit_length() - 1


def row_weights(N: int) -> np.ndarray:
    _log2(N)
    return np.array([1 << bin(i).count("1") for i in range(N)], dtype=np.int64)


def _top_k(score, K: int, tiebreak=None) -> np.ndarray:
    N = len(score)
    if not 0 <= K <= N:
        raise ValueError(f"K must be in [0, {N}], got {K}")
    idx = np.arange(N)
    tb = idx if tiebreak is None else np.asarray(tiebreak)
    # larger score first, then larger tiebreak, then larger index
    order = np.lexsort((idx, tb, np.asarray(score)))[::-1]
    return np.sort(order[:K])


@dataclass(frozen=True)
class RateProfile:
    """Information set of an (N, K) code."""

    N: int
    info: tuple

    def __post_init__(self):
        _log2(self.N)
        info = tuple(sorted(int(i) for i in self.info))
        if len(set(info)) != len(info) or any(not 0 <= i < self.N for i in info):
            raise ValueError("information indices must be distinct and in range")
        object.__setattr__(self, "info", info)

    @property
    def K(self) -> int:
        return len(self.info)

    @property
    def info_array(self) -> np.ndarray:
        return np.array(self.info, dtype=np.int64)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=np.uint8)
        m[list(self.info)] = 1
        return m

    def min_row_weight(self) -> int:
        return int(row_weights(self.N)[self.info_array].min())

    def save(self, path) -> None:
        lines = [f"{self.N} {self.K}"] + [str(i) for i in self.info]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "RateProfile":
        toks = Path(path).read_text().split()
        if len(toks) < 2:
            raise ValueError(f"{path}: missing 'N K' header")
        N, K = int(toks[0]), int(toks[1])
        info = [int(t) for t in toks[2:]]
        if len(info) != K:
            raise ValueError(f"{path}: header says K={K} but lists {len(info)} indices")
        return cls(N, tuple(info))


def rm_profile(N: int, K: int, design_snr_db: float = 3.5, rate: float | None = None) -> RateProfile:
    """Highest row weights first; ties inside a weight class go to the most reliable."""
    rel = dega_reliability(N, design_snr_db, K / N if rate is None else rate)
    return RateProfile(N, tuple(_top_k(row_weights(N), K, rel)))


def dega_profile(N: int, K: int, design_snr_db: float = 2.0, rate: float | None = None) -> RateProfile:
    rel = dega_reliability(N, design_snr_db, K / N if rate is None else rate)
    return RateProfile(N, tuple(_top_k(rel, K)))


def pw_weights(N: int) -> np.ndarray:
    """Polarization weight ``sum_j b_j 2^{j/4}``."""
    n = _log2(N)
    beta = 2.0 ** (np.arange(n) / 4.0)
    bits = (np.arange(N)[:, None] >> np.arange(n)) & 1
    return bits @ beta


def pw_profile(N: int, K: int) -> RateProfile:
    return RateProfile(N, tuple(_top_k(pw_weights(N), K)))


def pw_modified(N: int, K: int) -> RateProfile:
    """PW profile with every minimum-row-weight index swapped for the
    highest-PW excluded index of strictly larger row weight."""
    base = pw_profile(N, K)
    if K == 0:
        return base
    w = row_weights(N)
    pw = pw_weights(N)
    info = set(base.info)
    wmin = min(w[i] for i in info)
    drop = [i for i in info if w[i] == wmin]
    pool = sorted((i for i in range(N) if i not in info and w[i] > wmin),
                  key=lambda i: (pw[i], i), reverse=True)
    if len(pool) < len(drop):
        raise ValueError(
            f"cannot lift minimum row weight {wmin}: {len(drop)} indices to replace, "
            f"only {len(pool)} candidates of larger weight")
    info.difference_update(drop)
    info.update(pool[: len(drop)])
    return RateProfile(N, tuple(info))


def critical_set(profile: RateProfile) -> np.ndarray:
    """Flags over information positions (length K) marking critical bits.

    A bit is critical when it is the first leaf of a maximal subtree of the SC
    tree whose leaves are all information bits.
    """
    mask = profile.mask
    first = set()

    def visit(start, size):
        seg = mask[start:start + size]
        if seg.all():
            first.add(start)
        elif seg.any() and size > 1:
            visit(start, size // 2)
            visit(start + size // 2, size // 2)

    visit(0, profile.N)
    return np.array([1 if i in first else 0 for i in profile.info], dtype=np.uint8)


def critical_set_least_reliable(profile: RateProfile, q: int, reliability) -> np.ndarray:
    """Fallback critical set: the ``q`` least reliable information bits."""
    rel = np.asarray(reliability)[profile.info_array]
    flags = np.zeros(profile.K, dtype=np.uint8)
    flags[np.argsort(rel, kind="stable")[:q]] = 1
    return flags


@dataclass(frozen=True)
class BiasTables:
    """``log(1 - p_e)`` per index, total bias ``B`` and remainders ``B^c``.

    ``Bc[i] = B - sum_{j <= i} log1m_pe[j]`` so ``Bc[N-1] == 0`` exactly.
    """

    log1m_pe: np.ndarray
    B: float
    Bc: np.ndarray


def bias_tables(pe_or_means, *, from_means: bool = False) -> BiasTables:
    if from_means:
        l = log1m_pe_from_reliability(pe_or_means)
    else:
        pe = np.clip(np.asarray(pe_or_means, dtype=np.float64), PE_FLOOR, 0.5)
        l = np.log1p(-pe)
    l = np.round(l / BIAS_GRID) * BIAS_GRID
    B = float(l.sum())
    Bc = B - np.cumsum(l)
    return BiasTables(l, B, Bc)


def design_bias(N: int, design_snr_db: float = 4.0, rate: float = 0.5) -> BiasTables:
    return bias_tables(dega_means(N, design_snr_db, rate), from_means=True)

