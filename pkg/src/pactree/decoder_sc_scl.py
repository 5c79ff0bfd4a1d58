"""Successive-cancellation and list decoding of PAC codes.

List decoding forks every path at each information bit and keeps the L
candidates with the smallest penalty metric.  Candidates are ordered by
(path index, hard-decision child first); metric ties go to the lower
candidate, and survivors keep candidate order as their new path indices.
This makes L = 1 reproduce SC bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .code import PACCode
from .metrics import branch_metric, hard_decision
from .polar_kernel import (ffs_star, update_llrs, update_llrs_rows, update_partial_sums,
                           update_partial_sums_rows)


@dataclass
class DecodeResult:
    v_hat: np.ndarray                 # decided pre-transform bits (length N)
    u_hat: np.ndarray                 # polar-transform input (length N)
    time_steps: int = 0
    operations: int = 0
    success: bool = True              # False when the decoder gave up
    backward_moves: int = 0
    final_metric: float = 0.0
    diversions: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


@njit(cache=True)
def _sc_kernel(ch, is_info, par, m, n, exact, genie_v, use_genie, cnt):
    N = 1 << n
    llr = np.zeros(N - 1)
    ps = np.zeros(N - 1, dtype=np.uint8)
    v = np.zeros(N, dtype=np.uint8)
    u = np.zeros(N, dtype=np.uint8)
    lams = np.zeros(N)
    state = 0
    corrections = 0
    mask = (1 << m) - 1
    for i in range(N):
        lam = update_llrs(i, n, ch, llr, ps, cnt, exact)
        lams[i] = lam
        if is_info[i]:
            uu = hard_decision(lam)
            vv = uu ^ par[state]
            if use_genie and vv != genie_v[i]:
                vv = genie_v[i]
                uu = vv ^ par[state]
                corrections += 1
        else:
            vv = 0
            uu = par[state]
        v[i] = vv
        u[i] = uu
        state = ((state << 1) | vv) & mask
        update_partial_sums(i, uu, n, ps)
    return v, u, lams, corrections


@njit(cache=True)
def _scl_kernel(ch, is_info, forced, par, m, n, L, exact, cnt):
    """Returns ``(v, u, pm)`` for the surviving paths sorted by metric."""
    N = 1 << n
    mask = (1 << m) - 1
    llr = np.zeros((L, N - 1))
    ps = np.zeros((L, N - 1), dtype=np.uint8)
    v = np.zeros((L, N), dtype=np.uint8)
    u = np.zeros((L, N), dtype=np.uint8)
    st = np.zeros(L, dtype=np.int64)
    pm = np.zeros(L)
    act = np.zeros(L, dtype=np.int64)      # slots in rank order
    nact = 1
    us = np.zeros(L, dtype=np.uint8)
    cand_pm = np.zeros(2 * L)
    cand_v = np.zeros(2 * L, dtype=np.uint8)
    order = np.zeros(2 * L, dtype=np.int64)
    slot_of = np.zeros(L, dtype=np.int64)
    claimed = np.zeros(L, dtype=np.uint8)
    alive = np.zeros(L, dtype=np.uint8)
    inuse = np.zeros(L, dtype=np.uint8)
    free = np.zeros(L, dtype=np.int64)
    new_act = np.zeros(L, dtype=np.int64)
    for i in range(N):
        top = ffs_star(i, n)
        cnt[0] += top + 1
        cnt[1] += ((1 << (top + 1)) - 1) * nact
        update_llrs_rows(i, n, ch, llr, ps, act, nact, exact)
        if not is_info[i] or forced[i] >= 0:
            vv = 0 if not is_info[i] else forced[i]
            for r in range(nact):
                l = act[r]
                uu = vv ^ par[st[l]]
                pm[l] -= branch_metric(llr[l, 0], uu, exact)
                v[l, i] = vv
                u[l, i] = uu
                us[r] = uu
                st[l] = ((st[l] << 1) | vv) & mask
            update_partial_sums_rows(i, us, n, ps, act, nact)
            cnt[1] += nact
            continue
        nc = 2 * nact
        for r in range(nact):
            l = act[r]
            lam = llr[l, 0]
            hd = hard_decision(lam)
            vg = hd ^ par[st[l]]
            cand_v[2 * r] = vg
            cand_v[2 * r + 1] = vg ^ 1
            cand_pm[2 * r] = pm[l] - branch_metric(lam, hd, exact)
            cand_pm[2 * r + 1] = pm[l] - branch_metric(lam, hd ^ 1, exact)
        # survivors: the L smallest metrics, ties to the lower candidate index,
        # listed in candidate order (which becomes the new path order)
        if nc <= L:
            nk = nc
            for q in range(nc):
                order[q] = q
        else:
            nk = L
            thr = np.partition(cand_pm[:nc], L - 1)[L - 1]
            n_lt = 0
            for c in range(nc):
                if cand_pm[c] < thr:
                    n_lt += 1
            n_eq = L - n_lt
            q = 0
            for c in range(nc):
                x = cand_pm[c]
                if x < thr:
                    order[q] = c
                    q += 1
                elif x == thr and n_eq > 0:
                    order[q] = c
                    q += 1
                    n_eq -= 1
        cnt[1] += 3 * nc
        # free slots: parents with no surviving child, then never-used slots
        for r in range(nact):
            alive[r] = 0
        for q in range(nk):
            alive[order[q] // 2] = 1
        for l in range(L):
            inuse[l] = 0
            claimed[l] = 0
        nfree = 0
        for r in range(nact):
            inuse[act[r]] = 1
            if not alive[r]:
                free[nfree] = act[r]
                nfree += 1
        for l in range(L):
            if not inuse[l]:
                free[nfree] = l
                nfree += 1
        # stages at or below ffs*(i+1) are recomputed next bit: no need to copy
        lo = 0
        if i < N - 1:
            lo = (1 << (ffs_star(i + 1, n) + 1)) - 1
        # first pass: clone parents for second children while still untouched
        fp = 0
        for q in range(nk):
            l = act[order[q] // 2]
            if claimed[l] == 0:
                claimed[l] = 1
                slot_of[q] = l
            else:
                d = free[fp]
                fp += 1
                for k in range(lo, N - 1):
                    llr[d, k] = llr[l, k]
                for k in range(N - 1):
                    ps[d, k] = ps[l, k]
                for k in range(i):
                    v[d, k] = v[l, k]
                    u[d, k] = u[l, k]
                st[d] = st[l]
                slot_of[q] = d
        # second pass: apply decisions
        for q in range(nk):
            c = order[q]
            d = slot_of[q]
            vv = cand_v[c]
            s0 = st[d]
            uu = vv ^ par[s0]
            v[d, i] = vv
            u[d, i] = uu
            us[q] = uu
            st[d] = ((s0 << 1) | vv) & mask
            pm[d] = cand_pm[c]
            new_act[q] = d
        for q in range(nk):
            act[q] = new_act[q]
        nact = nk
        update_partial_sums_rows(i, us, n, ps, act, nact)
    # final order by metric, ties by rank
    fm = np.zeros(nact)
    for r in range(nact):
        fm[r] = pm[act[r]]
    fin = np.argsort(fm, kind="mergesort")
    vo = np.zeros((nact, N), dtype=np.uint8)
    uo = np.zeros((nact, N), dtype=np.uint8)
    po = np.zeros(nact)
    for q in range(nact):
        l = act[fin[q]]
        vo[q, :] = v[l, :]
        uo[q, :] = u[l, :]
        po[q] = pm[l]
    return vo, uo, po


def sc_decode(llrs, code: PACCode, *, exact: bool = False, genie_v=None) -> DecodeResult:
    """SC decoding.  With ``genie_v`` every wrong information decision is
    corrected and counted in ``extra['corrections']``."""
    ch = np.ascontiguousarray(llrs, dtype=np.float64)
    cnt = np.zeros(2, dtype=np.int64)
    use_genie = genie_v is not None
    gv = np.asarray(genie_v if use_genie else np.zeros(code.N), dtype=np.uint8)
    v, u, lams, corr = _sc_kernel(ch, code.is_info, code.par, code.m, code.n, exact,
                                  gv, use_genie, cnt)
    return DecodeResult(v, u, int(cnt[0]), int(cnt[1]),
                        extra={"corrections": int(corr), "decision_llrs": lams})


@dataclass
class ListOutput:
    v: np.ndarray     # (paths, N), sorted by metric
    u: np.ndarray
    pm: np.ndarray
    time_steps: int
    operations: int


def scl_list(llrs, code: PACCode, L: int, *, exact: bool = False, forced=None) -> ListOutput:
    """Run list decoding and return every surviving path.

    ``forced`` (length N, -1 = free) pins chosen information bits to 0/1.
    """
    if L < 1:
        raise ValueError("list size must be >= 1")
    ch = np.ascontiguousarray(llrs, dtype=np.float64)
    fz = np.full(code.N, -1, dtype=np.int64) if forced is None else np.asarray(forced, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    v, u, pm = _scl_kernel(ch, code.is_info, fz, code.par, code.m, code.n, int(L), exact, cnt)
    return ListOutput(v, u, pm, int(cnt[0]), int(cnt[1]))


def select_path(out: ListOutput, code: PACCode) -> tuple[int, bool]:
    """Index of the chosen path and whether a CRC passed.

    Without CRC the best metric wins.  With CRC the best path whose check
    passes wins, falling back to the best metric when none does.
    """
    if code.crc is None:
        return 0, False
    ok = code.crc.check_many(out.v[:, code.info_array], code.crc_matrix)
    hits = np.flatnonzero(ok)
    if hits.size:
        return int(hits[0]), True
    return 0, False


def scl_decode(llrs, code: PACCode, L: int, *, exact: bool = False) -> DecodeResult:
    out = scl_list(llrs, code, L, exact=exact)
    k, crc_ok = select_path(out, code)
    return DecodeResult(out.v[k].copy(), out.u[k].copy(), out.time_steps, out.operations,
                        final_metric=float(out.pm[k]),
                        extra={"crc_pass": crc_ok, "list": out})


def ml_bound_event(v_hat, v_true, y, code: PACCode) -> bool:
    """True when a wrong decision is closer to ``y`` than the transmitted word.

    An ML decoder would fail on such a frame too, so the rate of these events
    over a simulation lower-bounds the ML frame error rate.
    """
    v_hat = np.asarray(v_hat, dtype=np.uint8)
    v_true = np.asarray(v_true, dtype=np.uint8)
    if np.array_equal(v_hat, v_true):
        return False
    y = np.asarray(y, dtype=np.float64)
    s_hat = 1.0 - 2.0 * code.encode_v(v_hat)
    s_true = 1.0 - 2.0 * code.encode_v(v_true)
    return bool(np.sum((s_hat - y) ** 2) < np.sum((s_true - y) ** 2))
