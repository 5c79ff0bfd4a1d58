import numpy as np
import pytest

from pactree.channel import bpsk, frame_draw, llr_from_y, sigma_from_ebn0
from pactree.code import PACCode
from pactree.construction import critical_set, rm_profile
from pactree.conv_transform import conv_1b_trans, conv_encode
from pactree.crc import CRC
from pactree.decoder_fano import FanoConfig, FanoDecoder, floor_strict, move_back, refresh_explored
from pactree.decoder_sc_scl import ml_bound_event, sc_decode, scl_decode, scl_list
from pactree.decoder_stack import StackConfig, StackDecoder
from pactree.polar_kernel import FactorGraphMemory


def noisy_frames(code, snr, count, seed=0):
    s = sigma_from_ebn0(snr, code.rate)
    for f in range(count):
        msg, z = frame_draw(seed, f, code.k_data, code.N)
        v, x = code.encode(msg)
        yield v, llr_from_y(bpsk(x) + s * z, s)


def sc_with_flips(llrs, code, flips):
    """SC path, except that the decision at each flagged information bit is inverted."""
    mem = FactorGraphMemory(np.asarray(llrs, dtype=np.float64))
    state = [0] * code.m
    v = np.zeros(code.N, dtype=np.uint8)
    k = 0
    for i in range(code.N):
        lam = mem.update_llrs(i)
        if code.is_info[i]:
            hd = 0 if lam > 0 else 1
            # v is chosen so that u = v conv g hits the wanted u value
            u0, _ = conv_1b_trans(0, state, code.gbits)
            v[i] = u0 ^ hd ^ int(flips[k])
            k += 1
        u, state = conv_1b_trans(int(v[i]), state, code.gbits)
        mem.update_partial_sums(i, u)
    return v


def test_sc_is_sc_with_no_flips(pac128):
    for _, l in noisy_frames(pac128, 2.0, 30):
        assert np.array_equal(sc_decode(l, pac128).v_hat, sc_with_flips(l, pac128, np.zeros(64)))


@pytest.mark.parametrize("g", ["133", "1"])
def test_noiseless_recovery_all_decoders(g):
    code = PACCode(rm_profile(64, 32), g=g)
    fano, stack = FanoDecoder(code), StackDecoder(code)
    rng = np.random.default_rng(5)
    for _ in range(20):
        v, x = code.encode(rng.integers(0, 2, 32))
        l = 4.0 * bpsk(x)
        r = sc_decode(l, code)
        assert np.array_equal(r.v_hat, v) and r.time_steps == 2 * code.N - 2
        assert np.array_equal(scl_decode(l, code, 8).v_hat, v)
        rf = fano.decode(l)
        assert np.array_equal(rf.v_hat, v)
        assert rf.backward_moves == 0 and rf.final_metric == 0.0
        rs = stack.decode(l)
        assert np.array_equal(rs.v_hat, v) and rs.extra["iterations"] == code.K + 1


def test_scl_list_sorted_and_forced(pac128, rng):
    l = rng.normal(1, 1, 128)
    out = scl_list(l, pac128, 16)
    assert np.all(np.diff(out.pm) >= 0) and len(out.pm) == 16
    forced = np.full(128, -1)
    forced[pac128.info_array[:3]] = [1, 0, 1]
    out = scl_list(l, pac128, 16, forced=forced)
    assert np.all(out.v[:, pac128.info_array[:3]] == [1, 0, 1])
    with pytest.raises(ValueError):
        scl_list(l, pac128, 0)


def replay_penalty(llrs, code, u):
    """List penalty of a fixed u sequence, by walking the factor graph."""
    mem = FactorGraphMemory(np.asarray(llrs, dtype=np.float64))
    pm = 0.0
    for i in range(code.N):
        lam = mem.update_llrs(i)
        pm += abs(lam) if (lam <= 0) != bool(u[i]) else 0.0
        mem.update_partial_sums(i, int(u[i]))
    return pm


def test_list_metrics_match_replay(pac128):
    for _, l in noisy_frames(pac128, 1.5, 10):
        out = scl_list(l, pac128, 8)
        for k in range(8):
            assert out.pm[k] == pytest.approx(replay_penalty(l, pac128, out.u[k]), abs=1e-9)
            assert np.array_equal(conv_encode(out.v[k], pac128.gbits), out.u[k])


def test_crc_aided_selection():
    code = PACCode(rm_profile(64, 40), crc=CRC())
    assert code.k_data == 32 and code.rate == 0.5
    for v, l in noisy_frames(code, 2.0, 30):
        r = scl_decode(l, code, 8)
        if r.extra["crc_pass"]:
            assert code.crc.check(r.v_hat[code.info_array])


def test_fano_output_is_sc_with_its_diversions_flipped(pac128):
    cs = critical_set(pac128.profile)
    for cfg in (FanoConfig(), FanoConfig.unconstrained()):
        dec = FanoDecoder(pac128, cfg)
        seen = 0
        for _, l in noisy_frames(pac128, 2.0, 150):
            r = dec.decode(l)
            if cfg.use_critical_set:
                assert r.diversions.sum() <= 4
            if not r.success:
                continue
            assert np.array_equal(r.v_hat, sc_with_flips(l, pac128, r.diversions))
            seen += r.diversions.sum() > 0
            if cfg.use_critical_set:
                assert r.diversions.sum() <= 4
                assert np.all(cs[r.diversions > 0] == 1)
        assert seen > 0


def test_fano_abort_returns_consistent_prefix(pac128):
    dec = FanoDecoder(pac128, FanoConfig(max_steps_factor=3))
    aborted = 0
    for _, l in noisy_frames(pac128, 1.0, 60):
        r = dec.decode(l)
        if r.success:
            continue
        aborted += 1
        assert r.diversions.sum() <= 4
        # flags only on the decided prefix, which is SC with those flips
        stop = np.flatnonzero(r.v_hat)[-1] + 1 if r.v_hat.any() else 0
        ref = sc_with_flips(l, pac128, r.diversions)
        assert np.array_equal(r.v_hat[:stop], ref[:stop])
    assert aborted > 0


def test_fano_thresholds_are_multiples_of_delta(pac128):
    for delta in (1.0, 2.0, 3.0):
        dec = FanoDecoder(pac128, FanoConfig(delta=delta))
        for _, l in noisy_frames(pac128, 2.0, 40):
            r = dec.decode(l)
            assert r.extra["threshold"] == r.extra["threshold_index"] * delta


def test_fano_explored_refresh_keeps_decisions(pac128):
    on, off = FanoDecoder(pac128), FanoDecoder(pac128, FanoConfig(use_explored_refresh=False))
    for _, l in noisy_frames(pac128, 2.0, 100):
        a, b = on.decode(l), off.decode(l)
        if a.success and b.success:
            assert np.array_equal(a.v_hat, b.v_hat)
            assert a.time_steps <= b.time_steps


def test_floor_strict():
    assert floor_strict(4.0, 2.0) == 1
    assert floor_strict(4.1, 2.0) == 2
    assert floor_strict(-0.5, 2.0) == -1
    assert floor_strict(0.0, 2.0) == -1


def test_move_back():
    alt = np.array([-1.0, 3.0, -9.0, 5.0, 2.0])
    cs = np.array([1, 1, 1, 0, 1])
    div = np.zeros(5)
    # from the main path: top-down takes the earliest eligible stem
    assert move_back(alt, 4, 0.0, div, cs, True) == (0.0, 1, True)
    assert move_back(alt, 4, 0.0, div, cs, True, use_cs=False, top_down=False) == (0.0, 3, True)
    assert move_back(alt, 4, 10.0, div, cs, True) == (10.0, 4, False)
    # inside an exploration below stem 1: nearest eligible node above bit 4
    assert move_back(alt, 4, 0.0, div, cs, False, stem=1) == (0.0, 1, False)
    assert move_back(alt, 4, 0.0, div, cs, False, stem=1, use_cs=False) == (0.0, 3, True)
    div[1] = 1
    assert move_back(alt, 5, 0.0, div, cs, False, stem=1, max_div=1) == (0.0, 1, False)
    assert move_back(alt, 5, 0.0, div, cs, False, stem=1, max_div=2) == (0.0, 4, True)
    assert refresh_explored(-3.0, -1.0) == -1.0


def test_stack_depth_and_guard(pac128):
    with pytest.raises(ValueError):
        StackDecoder(pac128, StackConfig(depth=1))
    dec = StackDecoder(pac128, StackConfig(depth=16, max_iterations=10))
    for _, l in noisy_frames(pac128, 0.5, 5):
        r = dec.decode(l)
        assert r.extra["iterations"] <= 11


def test_ml_bound_event():
    code = PACCode(rm_profile(8, 4))
    v0, x0 = code.encode([0, 0, 0, 0])
    v1, x1 = code.encode([1, 0, 0, 0])
    assert not ml_bound_event(v0, v0, bpsk(x0), code)
    assert ml_bound_event(v1, v0, bpsk(x1), code)       # y sits on the wrong word
    assert not ml_bound_event(v1, v0, bpsk(x0), code)


def test_ablation_all_techniques_cost_less(pac128):
    full, unc = FanoDecoder(pac128), FanoDecoder(pac128, FanoConfig.unconstrained())
    a = b = 0
    for _, l in noisy_frames(pac128, 2.0, 10_000, seed=11):
        a += full.decode(l).time_steps
        b += unc.decode(l).time_steps
    assert a <= b
