"""Weight spectra, the truncated union bound and genie-aided error statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .channel import bpsk, frame_draw, llr_from_y, sigma_from_ebn0
from .code import PACCode
from .construction import row_weights
from .decoder_sc_scl import sc_decode, scl_list
from .polar_kernel import polar_transform


@dataclass
class WeightSpectrum:
    """Multiplicities ``A_d`` of nonzero codeword weights (``counts[d] = A_d``)."""

    counts: dict = field(default_factory=dict)

    @property
    def d_min(self) -> int | None:
        return min(self.counts) if self.counts else None

    def __getitem__(self, d: int) -> int:
        return self.counts.get(d, 0)

    def truncated(self, max_weight: int) -> "WeightSpectrum":
        return WeightSpectrum({d: a for d, a in self.counts.items() if d <= max_weight})

    def items(self):
        return sorted(self.counts.items())

    def to_csv(self) -> str:
        return "weight,count\n" + "".join(f"{d},{a}\n" for d, a in self.items())


def _from_weights(w) -> WeightSpectrum:
    w = np.asarray(w)
    d, a = np.unique(w[w > 0], return_counts=True)
    return WeightSpectrum({int(x): int(y) for x, y in zip(d, a)})


def _pack(x: np.ndarray) -> np.ndarray:
    """Rows of bits into rows of uint64 words."""
    x = np.asarray(x, dtype=np.uint8)
    pad = (-x.shape[-1]) % 64
    if pad:
        x = np.concatenate([x, np.zeros((*x.shape[:-1], pad), dtype=np.uint8)], axis=-1)
    by = np.packbits(x, axis=-1)
    return by.view(">u8").astype(np.uint64)


def exhaustive_spectrum(code: PACCode, max_k: int = 24) -> WeightSpectrum:
    """Exact spectrum by encoding all ``2**K`` messages."""
    if code.K > max_k:
        raise ValueError(f"K={code.K} is too large for exhaustive enumeration (limit {max_k})")
    G = _pack(code.generator_matrix())
    words = np.zeros((1, G.shape[1]), dtype=np.uint64)
    for row in G:                      # span doubles with every generator row
        words = np.concatenate([words, words ^ row])
    w = np.bitwise_count(words).sum(axis=1)
    return _from_weights(w)


def flip_positions(code: PACCode, max_weight: int) -> np.ndarray:
    """Information positions whose row weight is at most ``max_weight``.

    With ``g_0 = 1`` a codeword whose first nonzero ``v`` index is ``i`` has
    weight at least the row weight of ``i``, so these positions cover every
    codeword up to ``max_weight``.
    """
    w = row_weights(code.N)[code.info_array]
    return code.info_array[w <= max_weight]


def spectrum_scl(code: PACCode, L: int, max_weight: int | None = None,
                 max_levels: int | None = 1) -> WeightSpectrum:
    """Low-weight spectrum (lower bounds) by list search around the zero word.

    For each flip position ``i``, bits before ``i`` are pinned to 0 and bit
    ``i`` to 1; list decoding of the noiseless all-zero observation then
    collects the nearby codewords of that coset.  Weights up to
    ``max_weight`` (default twice the minimum row weight) are tallied over
    distinct codewords.

    A coset with more than ``log2 L`` free bits is split, level by level, into
    its all-zero continuation plus one sub-coset per position of the next
    nonzero bit.  ``max_levels = 1`` searches each coset once; ``None`` splits
    until every piece fits in the list, which makes the result exact.
    """
    w_min = code.profile.min_row_weight()
    cap = 2 * w_min if max_weight is None else int(max_weight)
    llrs = np.ones(code.N)
    info = code.info_array
    fits = int(L).bit_length() - 1          # free bits a list of L holds in full
    seen: set = set()
    weights = []

    def tally(x):
        x = np.atleast_2d(x)
        wt = x.sum(axis=1, dtype=np.int64)
        keep = (wt > 0) & (wt <= cap)
        for row, d in zip(_pack(x[keep]), wt[keep]):
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                weights.append(int(d))

    todo = []
    for i in flip_positions(code, cap)[::-1]:
        forced = np.full(code.N, -1, dtype=np.int64)
        forced[info[info < i]] = 0
        forced[i] = 1
        todo.append((forced, int(i), 1))
    while todo:
        forced, last, level = todo.pop()
        later = info[info > last]
        if later.size <= fits or (max_levels is not None and level >= max_levels):
            tally(polar_transform(scl_list(llrs, code, L, forced=forced).u))
            continue
        v = np.where(forced > 0, 1, 0).astype(np.uint8)
        tally(code.encode_v(v))             # every later bit zero
        for q in later[::-1]:
            f = forced.copy()
            f[later[later < q]] = 0
            f[q] = 1
            todo.append((f, int(q), level + 1))
    return _from_weights(np.array(weights, dtype=np.int64))


def union_bound_fer(spectrum: WeightSpectrum, rate: float, ebn0_db) -> np.ndarray | float:
    """Truncated union bound ``A_dmin Q(sqrt(2 d_min R Eb/N0))``."""
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)
    d = spectrum.d_min
    if d is None:
        return np.zeros_like(ebn0) if ebn0.ndim else 0.0
    out = spectrum[d] * ndtr(-np.sqrt(2.0 * d * rate * ebn0))
    return out if out.ndim else float(out)


@dataclass
class GenieHistogram:
    counts: dict                 # channel-induced errors per failed frame -> failures
    frames: int                  # frames simulated
    failures: int

    def fraction_at_most(self, b: int) -> float:
        if not self.failures:
            return 1.0
        return sum(c for k, c in self.counts.items() if k <= b) / self.failures


def genie_error_histogram(code: PACCode, ebn0_db: float, target_failures: int, *,
                          seed: int = 0, max_frames: int | None = None) -> GenieHistogram:
    """Run genie-aided SC until ``target_failures`` frames needed a correction.

    A frame fails when plain SC would have made at least one wrong
    information decision; the genie corrects every such decision and the
    number of corrections is recorded.
    """
    sigma = sigma_from_ebn0(ebn0_db, code.rate)
    counts: dict = {}
    failures = frames = 0
    while failures < target_failures and (max_frames is None or frames < max_frames):
        msg, z = frame_draw(seed, frames, code.k_data, code.N)
        v, x = code.encode(msg)
        llrs = llr_from_y(bpsk(x) + sigma * z, sigma)
        frames += 1
        c = sc_decode(llrs, code, genie_v=v).extra["corrections"]
        if c:
            counts[c] = counts.get(c, 0) + 1
            failures += 1
    return GenieHistogram(dict(sorted(counts.items())), frames, failures)
