"""Acceptance criteria 1-10.

Each test records ``VERDICTS[k] = (passed, detail)`` before asserting, and the
terminal summary prints one PASS/FAIL line per criterion.  Long Monte-Carlo
runs are part of the default run; ``PACTREE_EXTENDED=1`` adds the runs that
take hours on one core.
"""

import math
import os
import time

import numpy as np
import pytest
from numba import njit

from conftest import VERDICTS
from pactree.analysis import exhaustive_spectrum, genie_error_histogram, spectrum_scl
from pactree.channel import bpsk, frame_draw, llr_from_y, sigma_from_ebn0
from pactree.code import PACCode
from pactree.construction import critical_set, rm_profile
from pactree.crc import CRC
from pactree.decoder_fano import FanoConfig, FanoDecoder
from pactree.decoder_sc_scl import sc_decode, scl_decode
from pactree.decoder_stack import StackDecoder
from pactree.metrics import branch_metric, path_metric_from_scratch, retro_update
from pactree.polar_kernel import rewind, update_llrs, update_partial_sums
from pactree.sim_harness import Campaign, run_campaign

EXTENDED = os.environ.get("PACTREE_EXTENDED") == "1"


def record(k, ok, detail):
    VERDICTS[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def noisy_llrs(code, snr, frame, seed):
    s = sigma_from_ebn0(snr, code.rate)
    msg, z = frame_draw(seed, frame, code.k_data, code.N)
    v, x = code.encode(msg)
    return v, llr_from_y(bpsk(x) + s * z, s)


# ------------------------------------------------------------------ 1


@njit(cache=True)
def _rewind_mismatches(ch, u, n):
    """Count decision LLRs that differ after rewinding, over every (i_start, i_curr)."""
    N = 1 << n
    cnt = np.zeros(2, dtype=np.int64)
    llr = np.zeros(N - 1)
    ps = np.zeros(N - 1, dtype=np.uint8)
    ref = np.empty(N)
    for i in range(N):
        ref[i] = update_llrs(i, n, ch, llr, ps, cnt, False)
        update_partial_sums(i, u[i], n, ps)
    bad = 0
    for i_curr in range(N):
        for i_start in range(i_curr + 1):
            llr[:] = 0.0
            ps[:] = 0
            for i in range(i_curr + 1):
                update_llrs(i, n, ch, llr, ps, cnt, False)
                if i < i_curr:
                    update_partial_sums(i, u[i], n, ps)
            if rewind(i_start, i_curr, u, n, ch, llr, ps, cnt, False) != ref[i_start]:
                bad += 1
            update_partial_sums(i_start, u[i_start], n, ps)
            for i in range(i_start + 1, N):
                if update_llrs(i, n, ch, llr, ps, cnt, False) != ref[i]:
                    bad += 1
                update_partial_sums(i, u[i], n, ps)
    return bad


def test_criterion_1_rewind_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad = 0
    for n in (3, 4, 5):
        for _ in range(1000):
            ch = rng.normal(1.0, 2.0, 1 << n)
            u = rng.integers(0, 2, 1 << n).astype(np.uint8)
            bad += _rewind_mismatches(ch, u, n)
    dt = time.perf_counter() - t0
    record(1, bad == 0 and dt < 60,
           f"N in 8/16/32, 1000 frames each, all pairs: {bad} mismatches, {dt:.1f} s")


# ------------------------------------------------------------------ 2


def test_criterion_2_scl1_equals_sc(pac128):
    t0 = time.perf_counter()
    diff = 0
    for f in range(10_000):
        _, l = noisy_llrs(pac128, 2.0, f, seed=202)
        a, b = sc_decode(l, pac128), scl_decode(l, pac128, 1)
        diff += not (np.array_equal(a.v_hat, b.v_hat) and np.array_equal(a.u_hat, b.u_hat))
    dt = time.perf_counter() - t0
    record(2, diff == 0 and dt < 60, f"10^4 frames at 2 dB: {diff} differ, {dt:.1f} s")


# ------------------------------------------------------------------ 3


def test_criterion_3_noiseless(pac128):
    sigma = sigma_from_ebn0(2.5, pac128.rate)
    fano_full = FanoDecoder(pac128)
    fano_unc = FanoDecoder(pac128, FanoConfig.unconstrained())
    stack = StackDecoder(pac128)
    rng = np.random.default_rng(303)
    fails = {k: 0 for k in ("sc", "scl32", "stack", "fano", "fano-unc", "fano-moves",
                            "fano-metric", "sc-steps")}
    for _ in range(1000):
        v, x = pac128.encode(rng.integers(0, 2, pac128.k_data))
        l = llr_from_y(bpsk(x), sigma)
        r = sc_decode(l, pac128)
        fails["sc"] += not np.array_equal(r.v_hat, v)
        fails["sc-steps"] += r.time_steps != 2 * pac128.N - 2
        fails["scl32"] += not np.array_equal(scl_decode(l, pac128, 32).v_hat, v)
        fails["stack"] += not np.array_equal(stack.decode(l).v_hat, v)
        for key, dec in (("fano", fano_full), ("fano-unc", fano_unc)):
            rf = dec.decode(l)
            fails[key] += not np.array_equal(rf.v_hat, v)
            fails["fano-moves"] += rf.backward_moves != 0
            fails["fano-metric"] += rf.final_metric != 0.0
    bad = {k: c for k, c in fails.items() if c}
    record(3, not bad, f"10^3 messages, all decoders; failures: {bad or 'none'}")


# ------------------------------------------------------------------ 4


def test_criterion_4_spectrum_desk():
    t0 = time.perf_counter()
    details, ok = [], True
    for N, K in ((16, 8), (32, 16)):
        code = PACCode(rm_profile(N, K))
        got = spectrum_scl(code, 1 << 10, max_weight=N, max_levels=None)
        ref = exhaustive_spectrum(code)
        ok &= got.counts == ref.counts
        details.append(f"PAC({N},{K}) d_min={ref.d_min} A={ref[ref.d_min]} "
                       f"{'equal' if got.counts == ref.counts else 'DIFFERENT'}")
    dt = time.perf_counter() - t0
    record(4, ok and dt < 60, "; ".join(details) + f"; {dt:.1f} s")


# ------------------------------------------------------------------ 5

EXPECTED_A16_PAC, EXPECTED_A16_POLAR = 3171, 94488


def test_criterion_5_spectrum_full_scale(pac128, polar128):
    desk = spectrum_scl(pac128, 1 << 14)
    desk_ok = desk.d_min == 16 and 0.9 * EXPECTED_A16_PAC <= desk[16] <= EXPECTED_A16_PAC
    pac = spectrum_scl(pac128, 1 << 17, max_weight=16)
    polar = spectrum_scl(polar128, 1 << 17, max_weight=16)
    full_ok = (pac.d_min == 16 and pac[16] == EXPECTED_A16_PAC
               and polar.d_min == 16 and polar[16] == EXPECTED_A16_POLAR)
    record(5, desk_ok and full_ok,
           f"L=2^14: d_min={desk.d_min} A16={desk[16]} ({'ok' if desk_ok else 'bad'}); "
           f"L=2^17: PAC A16={pac[16]} (expected {EXPECTED_A16_PAC}), "
           f"polar A16={polar[16]} (expected {EXPECTED_A16_POLAR})")


# ------------------------------------------------------------------ 6


def fer_point(snr, min_errors=200, max_frames=2_000_000, seed=606, **kw):
    camp = Campaign(snr=[snr], min_errors=min_errors, max_frames=max_frames, seed=seed,
                    timing=False, **kw)
    return run_campaign(camp)[0]


def test_criterion_6_fer_ordering():
    pac_scl = fer_point(2.5, decoder="scl", list_size=256)
    pol_scl = fer_point(2.5, decoder="scl", list_size=256, g="1")
    fano = fer_point(2.5, decoder="fano", max_div=None, cs=False, topdown=False, adaptive=False)
    stack = fer_point(2.5, decoder="stack", stack_depth=256)
    a = pac_scl.fer < pol_scl.fer
    b = fano.fer <= stack.fer
    c = stack.fer <= 3 * pac_scl.fer
    enough = min(r.frame_errors for r in (pac_scl, pol_scl, fano, stack)) >= 200
    fmt = lambda r: f"{r.fer:.2e} ({r.frame_errors}/{r.frames})"
    record(6, a and b and c and enough,
           f"PAC SCL-256 {fmt(pac_scl)} vs P SCL-256 {fmt(pol_scl)} [{'ok' if a else 'violated'}]; "
           f"Fano {fmt(fano)} <= stack {fmt(stack)} [{'ok' if b else 'violated'}]; "
           f"stack <= 3 x PAC SCL [{'ok' if c else 'violated'}]")


# ------------------------------------------------------------------ 7

C7_GRID = {2.0: 20_000, 2.5: 30_000, 3.0: 50_000}     # 10^5 frames per configuration


def snr_at(points, target):
    """SNR where log10(FER) crosses ``target``, by linear interpolation in dB."""
    pts = sorted(points)
    for (s0, f0), (s1, f1) in zip(pts, pts[1:]):
        if f0 >= target >= f1 and f0 > 0 and f1 > 0:
            if f0 == f1:
                return s0
            t = (math.log10(f0) - math.log10(target)) / (math.log10(f0) - math.log10(f1))
            return s0 + t * (s1 - s0)
    return None


def test_criterion_7_complexity_reduction():
    unc = dict(decoder="fano", max_div=None, cs=False, topdown=False, adaptive=False)
    full = dict(decoder="fano", max_div=4, cs=True, topdown=True, adaptive=True)
    runs = {name: {snr: fer_point(snr, min_errors=0, max_frames=n, seed=707, **kw)
                   for snr, n in C7_GRID.items()} for name, kw in (("unc", unc), ("full", full))}
    # operating point: grid SNR where unconstrained FER is closest to 1e-2 on a log scale
    op = min(C7_GRID, key=lambda s: abs(math.log10(max(runs["unc"][s].fer, 1e-9)) + 2))
    ratio = runs["full"][op].avg_time_steps / runs["unc"][op].avg_time_steps
    s_unc = snr_at([(s, r.fer) for s, r in runs["unc"].items()], 1e-3)
    s_full = snr_at([(s, r.fer) for s, r in runs["full"].items()], 1e-3)
    shift = None if s_unc is None or s_full is None else s_full - s_unc
    table = ", ".join(f"{s} dB: FER {runs['unc'][s].fer:.2e}/{runs['full'][s].fer:.2e} "
                      f"steps {runs['unc'][s].avg_time_steps:.0f}/{runs['full'][s].avg_time_steps:.0f}"
                      for s in C7_GRID)
    ok = 0.2 <= ratio <= 0.5 and shift is not None and shift <= 0.3
    record(7, ok, f"at {op} dB time-step ratio {ratio:.3f} (want 0.20-0.50); "
                  f"SNR shift at 1e-3 {'n/a' if shift is None else f'{shift:.3f}'} dB (want <= 0.3); "
                  f"unc/full: {table}")


# ------------------------------------------------------------------ 8


def test_criterion_8_genie_histogram(pac128):
    h = genie_error_histogram(pac128, 2.5, 1000, seed=808)
    frac = h.fraction_at_most(5)
    record(8, h.failures == 1000 and frac >= 0.97,
           f"{h.failures} failures in {h.frames} frames; {100 * frac:.2f}% with <= 5 errors; "
           f"histogram {h.counts}")


# ------------------------------------------------------------------ 9


def test_criterion_9_metric_properties(pac128):
    rng = np.random.default_rng(909)
    problems = []
    lams = rng.normal(0, 8, 20_000)
    us = rng.integers(0, 2, lams.size)
    for lam, u in zip(lams, us):
        a, e = branch_metric(lam, u, False), branch_metric(lam, u, True)
        if a not in (0.0, -abs(lam)):
            problems.append(f"approx metric {a} at {lam}")
        if abs(a - e) > math.log(2) + 1e-12:
            problems.append(f"|approx-exact| at {lam}")
    for _ in range(500):
        k = int(rng.integers(1, 128))
        l1 = -rng.exponential(0.2, k)
        B = float(l1.sum())
        Bc = B - np.cumsum(l1)
        aq = float(rng.choice([2.0, 4.0, 6.0]))
        lm, uu = rng.normal(0, 5, k), rng.integers(0, 2, k)
        upd = retro_update(path_metric_from_scratch(lm, uu, l1, B, 1.0), aq, Bc)
        if not np.allclose(upd, path_metric_from_scratch(lm, uu, l1, B, aq), atol=1e-9):
            problems.append("retro_update mismatch")
    cfg = FanoConfig(max_diversions=4, delta=2.0)
    dec = FanoDecoder(pac128, cfg)
    cs = critical_set(pac128.profile)
    worst = 0
    for f in range(10_000):
        _, l = noisy_llrs(pac128, 2.0, f, seed=909)
        r = dec.decode(l)
        worst = max(worst, int(r.diversions.sum()))
        if r.diversions.sum() > cfg.max_diversions or np.any(cs[r.diversions > 0] == 0):
            problems.append(f"frame {f}: diversions {np.flatnonzero(r.diversions)}")
        if r.extra["threshold"] != r.extra["threshold_index"] * cfg.delta:
            problems.append(f"frame {f}: threshold {r.extra['threshold']}")
    record(9, not problems,
           f"20000 metric draws, 500 retro-updates, 10^4 Fano frames (max diversions seen "
           f"{worst}); problems: {problems[:3] or 'none'}")


# ------------------------------------------------------------------ 10


def test_criterion_10_crc():
    crc = CRC(0xA6, 8)
    rng = np.random.default_rng(1010)
    problems = 0
    for _ in range(2000):
        c = crc.attach(rng.integers(0, 2, int(rng.integers(1, 300))))
        problems += not crc.check(c)
        for k in range(c.size):
            e = c.copy()
            e[k] ^= 1
            problems += crc.check(e)
    base = dict(N=512, K=256, profile="dega", design_snr=2.0, decoder="scl", list_size=32,
                seed=1010)
    plain = fer_point(2.5, **base)
    # same frames for the CRC-aided decoder
    need = 200 if EXTENDED else 0
    aided = fer_point(2.5, min_errors=need, max_frames=plain.frames if not EXTENDED else 10 ** 8,
                      crc="0xA6", **base)
    ok = problems == 0 and plain.frame_errors >= 200 and aided.fer < plain.fer
    record(10, ok,
           f"round trip and single flips: {problems} problems; PAC(512,256) at 2.5 dB: "
           f"SCL-32 {plain.fer:.2e} ({plain.frame_errors}/{plain.frames}) vs CA-SCL-32 "
           f"{aided.fer:.2e} ({aided.frame_errors}/{aided.frames})"
           + ("" if EXTENDED else "; CA side on the same frames (200-error count needs PACTREE_EXTENDED=1)"))
