"""Fano sequential decoding of PAC codes with partial factor-graph rewinds.

Search model
------------
The decoder walks the *main path* (always the better branch, i.e. the SC
path) while its Fano metric stays above the threshold ``T``.  When the better
branch at information bit ``j_end`` falls to ``T`` or below, one backtracking
*iteration* starts: every eligible *stem* (an earlier information bit on the
main path whose unexplored branch metric exceeds ``T``) is explored in turn,
top-down (earliest first) or bottom-up (latest first).  Inside a stem's
subtree the search is depth-first; on each failure it scans back up for the
nearest eligible node (already-diverged nodes are passed over) and diverges
there.  An exploration that reaches the last bit is the decision.  When every
stem fails, ``T`` is lowered and the main path resumes.  With one-shot
updates ``T`` drops straight to just below the main path's metric at
``j_end``; otherwise it drops by one step ``delta``.

Going back to a node reuses the stored decisions through
``polar_kernel.rewind``; returning to a stem restores a snapshot of the
factor graph taken there.  Moving forward along the main path to a later stem
replays SC updates, which are charged like any other stage activation.

Optional techniques (all independent):

* adaptive bias: before bit ``i_bu`` violations only lower ``T``; at the
  first violation from ``i_bu`` on, the bias scale ``alpha`` is estimated from
  the metric accumulated so far, rounded up to a multiple of ``delta_q`` and
  applied retroactively to every stored metric;
* critical set: only critical bits may be diverged;
* top-down: stems are tried earliest first;
* max diversions: at most this many diverged bits on any explored path;
* explored refresh: after a stem's subtree fails, its stored branch metric
  is replaced by the best metric reached inside it, so later iterations skip
  it until ``T`` drops below that value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .code import PACCode
from .construction import BiasTables, critical_set, design_bias
from .decoder_sc_scl import DecodeResult
from .metrics import branch_metric, hard_decision
from .polar_kernel import rewind, update_llrs, update_partial_sums

NEG_INF = -np.inf

# abort reasons
OK, ABORT_STEPS, ABORT_METRIC = 0, 1, 2


@dataclass
class FanoConfig:
    delta: float = 2.0                 # threshold step
    i_bu: int | None = None            # bias-update bit; default round(0.6 K)
    max_diversions: int = 4            # set to N (or None) to disable
    use_critical_set: bool = True
    use_top_down: bool = True
    use_adaptive_bias: bool = True
    use_one_shot_threshold: bool = True
    use_explored_refresh: bool = True
    delta_q: float = 2.0               # alpha quantisation step
    design_snr_db: float = 4.0         # for the bias tables
    max_steps_factor: float = 1e4      # hang guard: abort after this many SC passes worth of time steps
    min_metric_factor: float = 5.0     # abort when a metric falls below this many times alpha*B
    exact_f: bool = False
    exact_metric: bool = False

    @classmethod
    def unconstrained(cls, **kw) -> "FanoConfig":
        """No adaptive bias, no critical set, bottom-up only, unlimited diversions."""
        base = dict(max_diversions=None, use_critical_set=False, use_top_down=False,
                    use_adaptive_bias=False)
        base.update(kw)
        return cls(**base)


@njit(cache=True)
def floor_strict(mu, delta):
    """Largest integer ``k`` with ``k * delta < mu``."""
    k = math.floor(mu / delta)
    if k * delta >= mu:
        k -= 1
    return k


@njit(cache=True)
def scan_bottom_up(alt, div, cs, use_cs, max_div, T, j, stem):
    """Nearest ``k`` in ``(stem, j)`` scanning upward that may be diverged.

    Eligible: unexplored branch metric above ``T``, critical (if required) and
    within the diversion budget counted over bits ``< k``.  Returns -1 if the
    scan reaches ``stem``.
    """
    if stem + 1 >= j:
        return -1
    above = 0
    for k in range(stem + 1):
        above += div[k]
    # prefix sums over (stem, j)
    pre = np.empty(j - stem - 1, dtype=np.int64)
    acc = above
    for k in range(stem + 1, j):
        pre[k - stem - 1] = acc
        acc += div[k]
    for k in range(j - 1, stem, -1):
        if alt[k] > T and (cs[k] or not use_cs) and pre[k - stem - 1] + 1 <= max_div:
            return k
    return -1


@njit(cache=True)
def next_stem(malt, cs, use_cs, max_div, T, j_end, cursor, top_down):
    """Next main-path stem after ``cursor`` in search order, or -1."""
    if max_div < 1:
        return -1
    if top_down:
        for k in range(cursor + 1, j_end):
            if malt[k] > T and (cs[k] or not use_cs):
                return k
    else:
        for k in range(cursor - 1, -1, -1):
            if malt[k] > T and (cs[k] or not use_cs):
                return k
    return -1


@njit(cache=True)
def _fano_kernel(ch, is_info, info, info_idx, cs, l1pe, Bc, B, par, m, n,
                 delta, i_bu, max_div, use_cs, top_down, adaptive, one_shot, refresh,
                 delta_q, max_steps, min_factor, exact_f, exact_m, cnt):
    N = 1 << n
    K = info.size
    mask = (1 << m) - 1
    llr = np.zeros(N - 1)
    ps = np.zeros(N - 1, dtype=np.uint8)
    snap_llr = np.zeros(N - 1)
    snap_ps = np.zeros(N - 1, dtype=np.uint8)
    # current path
    v = np.zeros(N, dtype=np.uint8)
    u = np.zeros(N, dtype=np.uint8)
    mu = np.zeros(N + 1)           # mu[i + 1] is the metric after bit i
    alt = np.full(K, -np.inf)      # unexplored branch metric per information bit
    div = np.zeros(K, dtype=np.int64)
    cst = np.zeros(K + 1, dtype=np.int64)
    # main path records
    mv = np.zeros(N, dtype=np.uint8)
    mainu = np.zeros(N, dtype=np.uint8)
    mmu = np.zeros(N + 1)
    malt = np.full(K, -np.inf)
    mcst = np.zeros(K + 1, dtype=np.int64)
    best_inside = np.full(K, -np.inf)   # best failure metric seen below each stem

    alpha = 1.0
    bias_done = not adaptive
    t_idx = 0                      # T = t_idx * delta
    mu[0] = B
    i = 0
    j = 0
    st = 0
    main = True
    to_diverge = False
    llr_ready = False
    stem = -1
    j_end = -1
    mu_end = 0.0
    main_pos = -1
    cursor = -1
    moves = 0
    iterations = 0
    status = OK
    lam = 0.0
    mu_take = 0.0

    while i < N:
        if cnt[0] > max_steps:
            status = ABORT_STEPS
            break
        if llr_ready:
            lam = llr[0]
            llr_ready = False
        else:
            lam = update_llrs(i, n, ch, llr, ps, cnt, exact_f)
        T = t_idx * delta
        if not is_info[i]:
            uu = par[st]
            mu[i + 1] = mu[i] + branch_metric(lam, uu, exact_m) - alpha * l1pe[i]
            cnt[1] += 2
            v[i] = 0
            u[i] = uu
            st = (st << 1) & mask
            update_partial_sums(i, uu, n, ps)
            i += 1
            continue

        j = info_idx[i]
        hd = hard_decision(lam)
        vg = hd ^ par[st]
        base = mu[i] - alpha * l1pe[i]
        mu_g = base + branch_metric(lam, hd, exact_m)
        mu_b = base + branch_metric(lam, hd ^ 1, exact_m)
        cnt[1] += 5

        take = -1
        if to_diverge:
            to_diverge = False
            take = vg ^ 1
            mu_take = mu_b
            alt[j] = -np.inf
            div[j] = 1
        elif mu_g > T:
            take = vg
            mu_take = mu_g
            alt[j] = mu_b
            div[j] = 0
        if take >= 0:
            cst[j] = st
            uu = take ^ par[st]
            v[i] = take
            u[i] = uu
            st = ((st << 1) | take) & mask
            mu[i + 1] = mu_take
            update_partial_sums(i, uu, n, ps)
            i += 1
            continue

        # ---- threshold violation at information bit j ----
        if mu_g < min_factor * alpha * B:
            status = ABORT_METRIC
            break
        if not bias_done:
            if i < i_bu:
                t_idx = floor_strict(mu_g, delta)
                llr_ready = True
                continue
            bias_done = True
            expected = B - Bc[i]
            if expected < 0.0:
                a = (mu_g - Bc[i]) / expected
                if a > 1.0:
                    alpha = math.ceil(a / delta_q) * delta_q
                    da = alpha - 1.0
                    mu[0] += da * B
                    for t in range(1, i + 1):
                        mu[t] += da * Bc[t - 1]
                    for k in range(j):
                        alt[k] += da * Bc[info[k]]
                    cnt[1] += i + j
            llr_ready = True
            continue

        if main:
            # start a backtracking iteration from this failure point
            iterations += 1
            j_end = j
            mu_end = mu_g
            for t in range(i):
                mv[t] = v[t]
                mainu[t] = u[t]
            for t in range(i + 1):
                mmu[t] = mu[t]
            for k in range(j):
                malt[k] = alt[k]
                mcst[k] = cst[k]
            mcst[j] = st
            main_pos = j
            cursor = -1 if top_down else j_end
        else:
            if mu_g > best_inside[stem]:
                best_inside[stem] = mu_g
            k = scan_bottom_up(alt, div, cs, use_cs, max_div, T, j, stem)
            cnt[1] += j - stem
            if k >= 0:
                rewind(info[k], i, u, n, ch, llr, ps, cnt, exact_f)
                i = info[k]
                j = k
                st = cst[k]
                to_diverge = True
                llr_ready = True
                moves += 1
                continue
            # subtree of this stem exhausted: back to the main path
            if refresh:
                malt[stem] = best_inside[stem]
            llr[:] = snap_llr
            ps[:] = snap_ps
            main_pos = stem
            cursor = stem

        k = next_stem(malt, cs, use_cs, max_div, T, j_end, cursor, top_down)
        cnt[1] += j_end
        if k >= 0:
            target = k
        else:
            target = j_end
        # move the factor graph along the main path to ``target``
        if target < main_pos:
            rewind(info[target], info[main_pos], mainu, n, ch, llr, ps, cnt, exact_f)
        elif target > main_pos:
            for b in range(info[main_pos], info[target]):
                update_partial_sums(b, mainu[b], n, ps)
                update_llrs(b + 1, n, ch, llr, ps, cnt, exact_f)
        main_pos = target
        i = info[target]
        j = target
        for t in range(i):
            v[t] = mv[t]
            u[t] = mainu[t]
        for t in range(i + 1):
            mu[t] = mmu[t]
        for kk in range(j):
            alt[kk] = malt[kk]
            div[kk] = 0
            cst[kk] = mcst[kk]
        st = mcst[j]
        llr_ready = True
        if k >= 0:
            snap_llr[:] = llr
            snap_ps[:] = ps
            stem = k
            cursor = k
            best_inside[k] = -np.inf
            main = False
            to_diverge = True
            moves += 1
        else:
            if one_shot:
                t_idx = floor_strict(mu_end, delta)
            else:
                t_idx -= 1
            main = True

    if status != OK:
        # return the current partial path; later entries belong to abandoned branches
        for t in range(i, N):
            v[t] = 0
            u[t] = 0
        for k in range(K):
            if info[k] >= i:
                div[k] = 0
    return v, u, mu[N] if status == OK else mu[i], div, status, moves, iterations, t_idx, alpha


class FanoDecoder:
    """Precomputes bias tables and the critical set for one code."""

    def __init__(self, code: PACCode, config: FanoConfig | None = None,
                 bias: BiasTables | None = None, cs=None):
        self.code = code
        self.cfg = cfg = config or FanoConfig()
        self.bias = bias or design_bias(code.N, cfg.design_snr_db, code.K / code.N)
        self.cs = np.asarray(critical_set(code.profile) if cs is None else cs, dtype=np.uint8)
        if self.cs.size != code.K:
            raise ValueError("critical-set flags must cover the information positions")
        info = code.info_array
        self.info_idx = np.full(code.N, -1, dtype=np.int64)
        self.info_idx[info] = np.arange(code.K)
        i_bu = cfg.i_bu if cfg.i_bu is not None else int(round(0.6 * code.K))
        self.i_bu = int(i_bu)
        md = cfg.max_diversions
        self.max_div = code.N if md is None else int(md)
        self.max_steps = int(cfg.max_steps_factor * (2 * code.N - 2))

    def decode(self, llrs) -> DecodeResult:
        c, cfg, b = self.code, self.cfg, self.bias
        cnt = np.zeros(2, dtype=np.int64)
        ch = np.ascontiguousarray(llrs, dtype=np.float64)
        v, u, mu_final, div, status, moves, iters, t_idx, alpha = _fano_kernel(
            ch, c.is_info, c.info_array, self.info_idx, self.cs, b.log1m_pe, b.Bc, b.B,
            c.par, c.m, c.n, float(cfg.delta), self.i_bu, self.max_div,
            cfg.use_critical_set, cfg.use_top_down, cfg.use_adaptive_bias,
            cfg.use_one_shot_threshold, cfg.use_explored_refresh, float(cfg.delta_q),
            self.max_steps, float(cfg.min_metric_factor), cfg.exact_f, cfg.exact_metric, cnt)
        return DecodeResult(v, u, int(cnt[0]), int(cnt[1]), success=status == OK,
                            backward_moves=int(moves), final_metric=float(mu_final),
                            diversions=div,
                            extra={"status": int(status), "iterations": int(iters),
                                   "threshold": t_idx * cfg.delta, "threshold_index": int(t_idx),
                                   "alpha_q": float(alpha)})


def fano_decode(llrs, code: PACCode, config: FanoConfig | None = None) -> DecodeResult:
    return FanoDecoder(code, config).decode(llrs)


def move_back(alt, j: int, T: float, div, cs, from_main: bool, *, stem: int = -1,
              j_end: int | None = None, cursor: int | None = None, max_div: int = 1 << 30,
              use_cs: bool = True, top_down: bool = True) -> tuple[float, int, bool]:
    """Pick where to go after a threshold violation at information bit ``j``.

    From the main path the next stem is chosen (top-down or bottom-up); inside
    an exploration the nearest eligible node above ``j`` is chosen.  Returns
    ``(T, j', to_diverge)``: ``to_diverge`` is False when no node qualifies,
    with ``j'`` then equal to ``stem`` (back to the main path) inside an
    exploration, or ``j`` from the main path (the caller lowers ``T``).
    """
    alt = np.asarray(alt, dtype=np.float64)
    div = np.asarray(div, dtype=np.int64)
    cs = np.asarray(cs, dtype=np.uint8)
    if from_main:
        end = j if j_end is None else j_end
        cur = (-1 if top_down else end) if cursor is None else cursor
        k = next_stem(alt, cs, use_cs, max_div, T, end, cur, top_down)
        return (T, k, True) if k >= 0 else (T, j, False)
    k = scan_bottom_up(alt, div, cs, use_cs, max_div, T, j, stem)
    return (T, k, True) if k >= 0 else (T, stem, False)


def refresh_explored(best_inside: float, mu_max: float) -> float:
    """Running maximum of the metrics reached inside a stem's subtree."""
    return max(best_inside, mu_max)
