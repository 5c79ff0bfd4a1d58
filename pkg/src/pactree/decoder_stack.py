"""Stack (best-first) sequential decoding of PAC codes.

Every stack entry owns a copy of the SC factor-graph memory, parked at its
next information bit with that bit's decision LLR already computed (or at
``N`` when complete).  Popping the best entry forks it into its two children;
each child is carried through the following run of frozen bits before it is
pushed, so the tree only branches at information bits.  When the stack holds
more than ``D`` entries the worst one is dropped, the shorter path first on
metric ties.  Decoding ends when the popped entry is complete.

The metric is the biased Fano metric with ``alpha = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .code import PACCode
from .construction import BiasTables, design_bias
from .decoder_sc_scl import DecodeResult
from .metrics import branch_metric, hard_decision
from .polar_kernel import update_llrs, update_partial_sums


@dataclass
class StackConfig:
    depth: int = 256                   # D, maximum number of stored paths
    max_iterations: int | None = None  # pops before giving up (None: no limit)
    max_steps_factor: float = 1e4      # hang guard: give up after this many SC passes worth of time steps
    design_snr_db: float = 4.0         # for the bias tables
    exact_f: bool = False
    exact_metric: bool = False


@njit(cache=True)
def _advance(slot, i, n, ch, llr, ps, v, u, st, mu, is_info, par, mask, l1pe, exact_f, exact_m, cnt):
    """Carry ``slot`` from bit ``i`` through frozen bits to the next information
    bit (computing its decision LLR) or to ``N``.  Returns the new length."""
    N = 1 << n
    while i < N:
        lam = update_llrs(i, n, ch, llr[slot], ps[slot], cnt, exact_f)
        if is_info[i]:
            return i
        uu = par[st[slot]]
        mu[slot] += branch_metric(lam, uu, exact_m) - l1pe[i]
        cnt[1] += 2
        v[slot, i] = 0
        u[slot, i] = uu
        st[slot] = (st[slot] << 1) & mask
        update_partial_sums(i, uu, n, ps[slot])
        i += 1
    return N


@njit(cache=True)
def _stack_kernel(ch, is_info, par, m, n, l1pe, B, D, max_iter, max_steps, exact_f, exact_m, cnt):
    N = 1 << n
    P = D + 2
    mask = (1 << m) - 1
    llr = np.zeros((P, N - 1))
    ps = np.zeros((P, N - 1), dtype=np.uint8)
    v = np.zeros((P, N), dtype=np.uint8)
    u = np.zeros((P, N), dtype=np.uint8)
    st = np.zeros(P, dtype=np.int64)
    mu = np.zeros(P)
    length = np.zeros(P, dtype=np.int64)
    stamp = np.zeros(P, dtype=np.int64)     # push order, for deterministic ties
    used = np.zeros(P, dtype=np.uint8)

    mu[0] = B
    length[0] = _advance(0, 0, n, ch, llr, ps, v, u, st, mu, is_info, par, mask, l1pe,
                         exact_f, exact_m, cnt)
    used[0] = 1
    size = 1
    clock = 1
    iters = 0
    best = 0
    while True:
        # pop: largest metric, then longest, then oldest
        best = -1
        for s in range(P):
            if used[s]:
                if best < 0 or mu[s] > mu[best] or (mu[s] == mu[best] and (
                        length[s] > length[best] or (length[s] == length[best] and stamp[s] < stamp[best]))):
                    best = s
        iters += 1
        cnt[1] += size
        if length[best] >= N:
            return v[best].copy(), u[best].copy(), mu[best], iters, True
        if iters > max_iter or cnt[0] > max_steps:
            return v[best].copy(), u[best].copy(), mu[best], iters, False
        # fork: the parent slot becomes the hard-decision child
        i = length[best]
        lam = llr[best, 0]
        hd = hard_decision(lam)
        free = -1
        for s in range(P):
            if not used[s]:
                free = s
                break
        c = free
        llr[c, :] = llr[best]
        ps[c, :] = ps[best]
        v[c, :i] = v[best, :i]
        u[c, :i] = u[best, :i]
        st[c] = st[best]
        used[c] = 1
        size += 1
        s0 = st[best]
        base = mu[best] - l1pe[i]
        mu[best] = base + branch_metric(lam, hd, exact_m)
        mu[c] = base + branch_metric(lam, hd ^ 1, exact_m)
        cnt[1] += 5
        for q in range(2):
            child = best if q == 0 else c
            ub = hd ^ q
            vv = ub ^ par[s0]
            v[child, i] = vv
            u[child, i] = ub
            st[child] = ((s0 << 1) | vv) & mask
            update_partial_sums(i, ub, n, ps[child])
            length[child] = _advance(child, i + 1, n, ch, llr, ps, v, u, st, mu, is_info, par,
                                     mask, l1pe, exact_f, exact_m, cnt)
            stamp[child] = clock
            clock += 1
        # overflow: drop the worst entry, the shorter first on ties, then the newest
        if size > D:
            worst = -1
            for s in range(P):
                if used[s]:
                    if worst < 0 or mu[s] < mu[worst] or (mu[s] == mu[worst] and (
                            length[s] < length[worst] or (length[s] == length[worst] and stamp[s] > stamp[worst]))):
                        worst = s
            used[worst] = 0
            size -= 1
            cnt[1] += size


class StackDecoder:
    def __init__(self, code: PACCode, config: StackConfig | None = None,
                 bias: BiasTables | None = None):
        self.code = code
        self.cfg = cfg = config or StackConfig()
        if cfg.depth < 2:
            raise ValueError("stack depth must be >= 2")
        self.bias = bias or design_bias(code.N, cfg.design_snr_db, code.K / code.N)
        self.max_iter = int(cfg.max_iterations if cfg.max_iterations is not None else 2 ** 62)
        self.max_steps = int(cfg.max_steps_factor * (2 * code.N - 2))

    def decode(self, llrs) -> DecodeResult:
        c, cfg = self.code, self.cfg
        cnt = np.zeros(2, dtype=np.int64)
        ch = np.ascontiguousarray(llrs, dtype=np.float64)
        v, u, mu, iters, ok = _stack_kernel(ch, c.is_info, c.par, c.m, c.n, self.bias.log1m_pe,
                                            self.bias.B, int(cfg.depth), self.max_iter, self.max_steps,
                                            cfg.exact_f, cfg.exact_metric, cnt)
        return DecodeResult(v, u, int(cnt[0]), int(cnt[1]), success=bool(ok),
                            final_metric=float(mu), extra={"iterations": int(iters)})


def stack_decode(llrs, code: PACCode, depth: int = 256) -> DecodeResult:
    return StackDecoder(code, StackConfig(depth=depth)).decode(llrs)
