"""Polar transform and the successive-cancellation factor graph.

Memory layout (Leroux-style, N = 2**n):

* ``ch``  : N channel LLRs (stage n, read only).
* ``llr`` : N-1 intermediate LLRs; stage ``s`` (0 <= s < n) holds ``2**s``
  values starting at offset ``2**s - 1``.  Stage 0 is the decision LLR.
* ``ps``  : N-1 partial-sum bits with the same layout.  ``ps`` at stage
  ``s`` holds the re-encoded left sibling needed by the g-node at stage ``s``.

Counters are an int64 array ``cnt = [time_steps, operations]``: one time step
per activated stage, one operation per f/g evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


def polar_transform(u) -> np.ndarray:
    """Return ``x = u P^{(x)n}`` over GF(2) with ``P = [[1,0],[1,1]]``.

    Natural index order (no bit reversal).  The transform is its own inverse.
    """
    x = np.array(u, dtype=np.uint8) & 1
    N = x.shape[-1]
    if N == 0 or N & (N - 1):
        raise ValueError(f"length must be a power of two, got {N}")
    h = 1
    while h < N:
        x = x.reshape(*x.shape[:-1], N // (2 * h), 2, h)
        x[..., 0, :] ^= x[..., 1, :]
        x = x.reshape(*x.shape[:-3], N)
        h *= 2
    return x


@njit(cache=True)
def ffs_star(i, n):
    """Index of the lowest set bit of ``i``; ``n - 1`` for ``i == 0``."""
    if i == 0:
        return n - 1
    s = 0
    while (i >> s) & 1 == 0:
        s += 1
    return s


@njit(cache=True)
def s_max(i_start, i_curr, n):
    """Largest ``ffs_star`` over the inclusive range ``[i_start, i_curr]``."""
    best = -1
    for i in range(i_start, i_curr + 1):
        s = ffs_star(i, n)
        if s > best:
            best = s
    return best


@njit(cache=True)
def f_node(a, b, exact):
    s = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
    if exact:
        # 2 atanh(tanh(a/2) tanh(b/2)) in a form that never overflows
        s += math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))
    return s


@njit(cache=True)
def g_node(a, b, u):
    return b + (1.0 - 2.0 * u) * a


# The stage loops below are written out in full on purpose: calling a helper
# that takes arrays costs more than the arithmetic at these sizes.

@njit(cache=True)
def _stages(i, top, n, ch, llr, ps, exact):
    """Recompute stages ``top .. 0`` on the path to bit ``i``.

    Stage ``s`` is a g-node exactly when bit ``s`` of ``i`` is set.
    """
    for s in range(top, -1, -1):
        h = 1 << s
        dst = h - 1
        g = ((i >> s) & 1) == 1
        if s == n - 1:
            if g:
                for k in range(h):
                    llr[dst + k] = ch[k + h] + (1.0 - 2.0 * ps[dst + k]) * ch[k]
            elif exact:
                for k in range(h):
                    llr[dst + k] = f_node(ch[k], ch[k + h], True)
            else:
                for k in range(h):
                    a = ch[k]
                    b = ch[k + h]
                    llr[dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
        else:
            off = 2 * h - 1
            if g:
                for k in range(h):
                    llr[dst + k] = llr[off + k + h] + (1.0 - 2.0 * ps[dst + k]) * llr[off + k]
            elif exact:
                for k in range(h):
                    llr[dst + k] = f_node(llr[off + k], llr[off + k + h], True)
            else:
                for k in range(h):
                    a = llr[off + k]
                    b = llr[off + k + h]
                    llr[dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
    return llr[0]


@njit(cache=True)
def update_llrs(i, n, ch, llr, ps, cnt, exact):
    """Activate stages ``ffs_star(i) .. 0`` and return the decision LLR of bit i.

    Stage ``ffs_star(i)`` is a g-node when ``i > 0``; all stages below it are
    f-nodes.  (Same loops as ``_stages``, kept inline for speed.)
    """
    top = ffs_star(i, n)
    cnt[0] += top + 1
    cnt[1] += (1 << (top + 1)) - 1
    for s in range(top, -1, -1):
        h = 1 << s
        dst = h - 1
        g = ((i >> s) & 1) == 1
        if s == n - 1:
            if g:
                for k in range(h):
                    llr[dst + k] = ch[k + h] + (1.0 - 2.0 * ps[dst + k]) * ch[k]
            elif exact:
                for k in range(h):
                    llr[dst + k] = f_node(ch[k], ch[k + h], True)
            else:
                for k in range(h):
                    a = ch[k]
                    b = ch[k + h]
                    llr[dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
        else:
            off = 2 * h - 1
            if g:
                for k in range(h):
                    llr[dst + k] = llr[off + k + h] + (1.0 - 2.0 * ps[dst + k]) * llr[off + k]
            elif exact:
                for k in range(h):
                    llr[dst + k] = f_node(llr[off + k], llr[off + k + h], True)
            else:
                for k in range(h):
                    a = llr[off + k]
                    b = llr[off + k + h]
                    llr[dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
    return llr[0]


@njit(cache=True)
def update_partial_sums(i, u, n, ps):
    """Fold decision ``u`` of bit ``i`` into the partial sums.

    The re-encoded block ending at bit ``i`` is written to stage
    ``ffs_star(i + 1)``; lower stages are only read.  Nothing is stored after
    the last bit.
    """
    N = 1 << n
    if i >= N - 1:
        return
    t = ffs_star(i + 1, n)
    end = (1 << (t + 1)) - 1  # one past the last slot of stage t
    ps[end - 1] = u
    for s in range(t):
        h = 1 << s
        for k in range(h):
            ps[end - 2 * h + k] = ps[h - 1 + k] ^ ps[end - h + k]


@njit(cache=True)
def update_llrs_rows(i, n, ch, llr, ps, rows, nrows, exact):
    """``update_llrs`` for the paths ``rows[:nrows]`` of 2-D ``llr``/``ps``.

    Decision LLRs end up in ``llr[rows[r], 0]``; counters are left to the
    caller (one time step per stage however many paths run in parallel).
    """
    top = ffs_star(i, n)
    for s in range(top, -1, -1):
        h = 1 << s
        dst = h - 1
        off = 2 * h - 1
        g = ((i >> s) & 1) == 1
        for r in range(nrows):
            l = rows[r]
            if s == n - 1:
                if g:
                    for k in range(h):
                        llr[l, dst + k] = ch[k + h] + (1.0 - 2.0 * ps[l, dst + k]) * ch[k]
                elif exact:
                    for k in range(h):
                        llr[l, dst + k] = f_node(ch[k], ch[k + h], True)
                else:
                    for k in range(h):
                        a = ch[k]
                        b = ch[k + h]
                        llr[l, dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)
            else:
                if g:
                    for k in range(h):
                        llr[l, dst + k] = llr[l, off + k + h] + (1.0 - 2.0 * ps[l, dst + k]) * llr[l, off + k]
                elif exact:
                    for k in range(h):
                        llr[l, dst + k] = f_node(llr[l, off + k], llr[l, off + k + h], True)
                else:
                    for k in range(h):
                        a = llr[l, off + k]
                        b = llr[l, off + k + h]
                        llr[l, dst + k] = math.copysign(min(abs(a), abs(b)), a) * math.copysign(1.0, b)


@njit(cache=True)
def update_partial_sums_rows(i, us, n, ps, rows, nrows):
    """``update_partial_sums`` for the paths ``rows[:nrows]``; ``us[r]`` is the decision of path r."""
    N = 1 << n
    if i >= N - 1:
        return
    t = ffs_star(i + 1, n)
    end = (1 << (t + 1)) - 1
    for r in range(nrows):
        l = rows[r]
        ps[l, end - 1] = us[r]
        for s in range(t):
            h = 1 << s
            for k in range(h):
                ps[l, end - 2 * h + k] = ps[l, h - 1 + k] ^ ps[l, end - h + k]


@njit(cache=True)
def rewind(i_start, i_curr, u_hat, n, ch, llr, ps, cnt, exact):
    """Bring the memory back to bit ``i_start`` and return its decision LLR.

    Precondition: the memory holds the state right after
    ``update_llrs(i_curr)`` along the path ``u_hat`` (decisions for bits
    ``< i_curr`` folded into the partial sums).  On return the memory holds
    the state right after ``update_llrs(i_start)`` on that same path, so the
    caller may decide bit ``i_start`` directly.

    Only stages overwritten after ``i_start`` are recomputed.  The deepest of
    them is ``S = s_max(i_start + 1, i_curr)``; the partial sums of the
    stage-S block holding ``i_start`` are replayed from the stored decisions,
    then stages ``S .. 0`` are recomputed along the path to ``i_start``.
    """
    if i_start >= i_curr:
        return llr[0]
    S = s_max(i_start + 1, i_curr, n)
    first = (i_start >> S) << S
    for b in range(first, i_start):
        update_partial_sums(b, u_hat[b], n, ps)
    cnt[0] += S + 1
    cnt[1] += (1 << (S + 1)) - 1
    return _stages(i_start, S, n, ch, llr, ps, exact)


@dataclass
class FactorGraphMemory:
    """Single-path SC memory: channel LLRs, intermediate LLRs, partial sums."""

    channel_llrs: np.ndarray
    exact_f: bool = False
    inter_llrs: np.ndarray = field(init=False)
    psums: np.ndarray = field(init=False)
    counters: np.ndarray = field(init=False)

    def __post_init__(self):
        self.channel_llrs = np.ascontiguousarray(self.channel_llrs, dtype=np.float64)
        N = self.channel_llrs.size
        if N < 2 or N & (N - 1):
            raise ValueError(f"block length must be a power of two >= 2, got {N}")
        self.n = N.bit_length() - 1
        self.inter_llrs = np.zeros(N - 1)
        self.psums = np.zeros(N - 1, dtype=np.uint8)
        self.counters = np.zeros(2, dtype=np.int64)

    @property
    def N(self) -> int:
        return self.channel_llrs.size

    @property
    def time_steps(self) -> int:
        return int(self.counters[0])

    @property
    def operations(self) -> int:
        return int(self.counters[1])

    def update_llrs(self, i: int) -> float:
        if not 0 <= i < self.N:
            raise IndexError(i)
        return float(update_llrs(i, self.n, self.channel_llrs, self.inter_llrs,
                                 self.psums, self.counters, self.exact_f))

    def update_partial_sums(self, i: int, u: int) -> None:
        if not 0 <= i < self.N:
            raise IndexError(i)
        update_partial_sums(i, np.uint8(u & 1), self.n, self.psums)

    def rewind(self, i_start: int, i_curr: int, u_hat) -> float:
        if not 0 <= i_start <= i_curr < self.N:
            raise ValueError(f"need 0 <= i_start <= i_curr < N, got {i_start}, {i_curr}")
        u_hat = np.ascontiguousarray(u_hat, dtype=np.uint8)
        return float(rewind(i_start, i_curr, u_hat, self.n, self.channel_llrs,
                            self.inter_llrs, self.psums, self.counters, self.exact_f))
