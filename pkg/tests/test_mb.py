"""Memory network unit math: sparse coding, readout against brute-force
oracles, the depression rule, consolidation tiers, and the bookkeeping
invariants under randomized fuzzing."""

import numpy as np
import pytest

from antnav.mb import MBONOutput, MBParams, MushroomBody, opposite

SMALL = MBParams(n_pn=50, n_kc=400, k=20, alpha=0.5, tau_e=0, fan_in=5, seed=3)


def small_mb(**overrides) -> MushroomBody:
    params = {**SMALL.__dict__, **overrides}
    return MushroomBody(MBParams(**params))


def rand_pn(rng, n=SMALL.n_pn):
    return rng.uniform(0.0, 1.0, n)


def test_params_validation():
    with pytest.raises(ValueError):
        MBParams(k=0)
    with pytest.raises(ValueError):
        MBParams(n_kc=10, k=10)
    with pytest.raises(ValueError):
        MBParams(alpha=0.0)
    with pytest.raises(ValueError):
        MBParams(alpha=1.5)
    with pytest.raises(ValueError, match="fan_in > n_pn"):
        MBParams(n_pn=10, fan_in=11)
    with pytest.raises(ValueError):
        MBParams(tau_e=-1)


def test_fresh_memory_reads_ones():
    mb = small_mb()
    rng = np.random.default_rng(0)
    for _ in range(5):
        kc = mb.encode(rand_pn(rng))
        z = mb.read_out(kc)
        assert z == MBONOutput(1.0, 1.0)  # exact: all weights start at 1


def test_projection_deterministic_and_distinct():
    a = MushroomBody(SMALL).w0_idx
    b = MushroomBody(SMALL).w0_idx
    assert np.array_equal(a, b)
    assert a.shape == (SMALL.n_kc, SMALL.fan_in)
    for row in a:
        assert len(set(row.tolist())) == SMALL.fan_in  # distinct inputs per cell
    c = small_mb(seed=4).w0_idx
    assert not np.array_equal(a, c)


def test_full_fan_in_rows_are_all_ones():
    mb = small_mb(fan_in=SMALL.n_pn)
    for row in mb.w0_idx[:10]:
        assert sorted(row.tolist()) == list(range(SMALL.n_pn))


def test_encode_exact_k_and_tie_rule():
    mb = small_mb()
    active = mb.encode(np.zeros(SMALL.n_pn))
    assert len(active) == SMALL.k
    # all scores equal, so the k lowest indices win
    assert np.array_equal(active, np.arange(SMALL.k))


def test_encode_full_size_coding_level():
    mb = MushroomBody(MBParams())
    rng = np.random.default_rng(1)
    active = mb.encode(rng.uniform(0, 1, 1089))
    assert len(active) == 320  # 1% of 32000


def test_encode_scale_invariance():
    mb = small_mb()
    rng = np.random.default_rng(2)
    pn = rand_pn(rng)
    assert np.array_equal(mb.encode(pn), mb.encode(2.0 * pn))


def test_encode_rejects_bad_shape():
    mb = small_mb()
    with pytest.raises(ValueError):
        mb.encode(np.zeros(SMALL.n_pn + 1))


def test_read_out_matches_brute_force():
    mb = small_mb()
    rng = np.random.default_rng(3)
    # scatter random depression across the tiers by hand
    for layer in (mb.d_stm, mb.d_itm, mb.d_ltm):
        layer[:] = rng.uniform(0, 0.3, layer.shape)
    kc = mb.encode(rand_pn(rng))
    z = mb.read_out(kc)
    w1 = mb.w1
    for j, got in enumerate(z):
        want = sum(w1[j, i] for i in kc) / SMALL.k
        assert abs(got - want) <= 1e-12


def test_punish_basic_arithmetic():
    mb = small_mb(alpha=0.1)
    kc = mb.encode(np.zeros(SMALL.n_pn))
    mb.record(kc)
    mb.punish("left")
    w1 = mb.w1
    assert np.allclose(w1[0, kc], 0.9)
    assert np.allclose(w1[1], 1.0)  # right row untouched
    off = np.setdiff1d(np.arange(SMALL.n_kc), kc)
    assert np.allclose(w1[0, off], 1.0)


def test_punish_twice_uses_snapshot_rule():
    # alpha=0.5, tau_e=0: second event sees the post-first-punish weight
    mb = small_mb(alpha=0.5)
    kc = mb.encode(np.zeros(SMALL.n_pn))
    mb.record(kc)
    mb.punish("left")
    mb.record(kc)
    mb.punish("left")
    assert np.allclose(mb.w1[0, kc], 0.25)


def test_punish_uses_delayed_frame():
    mb = small_mb(tau_e=2)
    rng = np.random.default_rng(4)
    views = [mb.encode(rand_pn(rng)) for _ in range(3)]
    for kc in views:
        mb.record(kc)
    mb.punish("right")  # should hit views[0], recorded tau_e frames back
    w1 = mb.w1
    assert np.allclose(w1[1, views[0]], 0.5)
    only_later = np.setdiff1d(views[2], views[0])
    assert np.allclose(w1[1, only_later], 1.0)


def test_punish_stale_snapshot_clamps_at_zero():
    # tau_e=0 with alpha=1 twice on the same record would go negative without
    # the live-weight clamp
    mb = small_mb(alpha=1.0, tau_e=1)
    kc = mb.encode(np.zeros(SMALL.n_pn))
    mb.record(kc)
    mb.record(kc)
    mb.punish("left")
    mb.punish("left")  # same stale snapshot of weight 1.0
    w1 = mb.w1
    assert (w1[0, kc] == 0.0).all()
    mb.check_invariants()


def test_punish_requires_a_recorded_frame():
    mb = small_mb()
    with pytest.raises(RuntimeError):
        mb.punish("left")


def test_reward_depresses_named_side_at_current_view():
    mb = small_mb(alpha=0.1)
    kc = mb.encode(np.zeros(SMALL.n_pn))
    # collision was left; the escape handler passes the opposite side
    mb.reward(opposite("left"), kc)
    w1 = mb.w1
    assert np.allclose(w1[1, kc], 0.9)
    assert np.allclose(w1[0], 1.0)


def test_reward_twice_alpha_one_zeroes():
    mb = small_mb(alpha=1.0)
    kc = mb.encode(np.zeros(SMALL.n_pn))
    mb.reward("right", kc)
    mb.reward("right", kc)
    assert (mb.w1[1, kc] == 0.0).all()


def test_end_trial_selective_improved():
    mb = small_mb()
    mb.d_itm[0, :5] = 0.25
    itm_before = mb.d_itm.copy()
    consolidated = mb.end_trial(spl_this_trial=0.5, best_spl_so_far=0.3, mode="selective")
    assert consolidated
    assert np.array_equal(mb.d_ltm, itm_before)
    assert not mb.d_stm.any()


def test_end_trial_selective_not_improved_discards_itm():
    mb = small_mb()
    mb.d_itm[0, :5] = 0.25
    mb.d_stm[1, :3] = 0.125
    stm_before = mb.d_stm.copy()
    consolidated = mb.end_trial(spl_this_trial=0.2, best_spl_so_far=0.3, mode="selective")
    assert not consolidated
    assert not mb.d_ltm.any()  # LTM unchanged
    assert np.array_equal(mb.d_itm, stm_before)  # ITM <- STM regardless
    assert not mb.d_stm.any()


def test_end_trial_excessive_always_folds():
    mb = small_mb()
    mb.d_itm[1, :4] = 0.5
    consolidated = mb.end_trial(spl_this_trial=0.0, best_spl_so_far=0.9, mode="excessive")
    assert consolidated
    assert np.allclose(mb.d_ltm[1, :4], 0.5)


def test_end_trial_zero_itm_reports_no_ltm_change():
    mb = small_mb()
    assert not mb.end_trial(spl_this_trial=0.9, best_spl_so_far=0.1, mode="selective")


def test_checkpoint_restore_best_is_argmax():
    mb = small_mb()
    for spl, mark in ((0.2, 0.1), (0.6, 0.2), (0.4, 0.3)):
        mb.d_stm[0, 0] = mark
        mb.end_trial(spl, 0.0, mode="checkpoint")
    restored = mb.restore_best_checkpoint()
    assert restored == 0.6
    assert mb.d_stm[0, 0] == 0.2  # trial-2 state


def test_reset_episode():
    mb = small_mb()
    kc = mb.encode(np.zeros(SMALL.n_pn))
    mb.record(kc)
    mb.punish("left")
    mb.end_trial(0.5, 0.0, mode="selective")
    mb.end_trial(0.7, 0.5, mode="selective")  # learning now in LTM
    assert mb.d_ltm.any()
    mb.reset_episode()
    assert mb.read_out(kc) == MBONOutput(1.0, 1.0)
    mb.reset_episode()  # idempotent
    assert mb.read_out(kc) == MBONOutput(1.0, 1.0)
    assert not (mb.d_stm.any() or mb.d_itm.any() or mb.d_ltm.any())


def test_bloom_filter_disjoint_views_unaffected():
    mb = small_mb(alpha=0.5)
    view_a = np.arange(SMALL.k)
    view_b = np.arange(SMALL.k, 2 * SMALL.k)  # shares no active cells
    z_b_before = mb.read_out(view_b)
    mb.record(view_a)
    mb.punish("left")
    assert mb.read_out(view_a).z_left < 1.0
    assert mb.read_out(view_b) == z_b_before == MBONOutput(1.0, 1.0)


def test_overlap_transfers_proportional_depression():
    # >= 50% shared cells must transfer >= 50% of the z drop (linear readout)
    mb = small_mb(alpha=0.8)
    view_a = np.arange(SMALL.k)
    half = SMALL.k // 2
    view_b = np.concatenate([view_a[:half], np.arange(SMALL.k, SMALL.k + half)])
    mb.record(view_a)
    mb.punish("right")
    drop_a = 1.0 - mb.read_out(view_a).z_right
    drop_b = 1.0 - mb.read_out(view_b).z_right
    assert drop_b >= 0.5 * drop_a - 1e-12


def test_conservation_fuzz_10k_steps():
    """Tier bookkeeping identity and bounds under 10k random operations."""
    mb = small_mb(alpha=0.7, tau_e=2)
    rng = np.random.default_rng(9)
    best = 0.0
    recorded = False
    for step in range(10_000):
        op = rng.integers(0, 10)
        if op < 5:
            kc = mb.encode(rand_pn(rng))
            mb.record(kc)
            recorded = True
        elif op < 7 and recorded:
            mb.punish("left" if rng.integers(2) else "right")
        elif op == 7 and recorded:
            kc = mb.encode(rand_pn(rng))
            mb.reward("left" if rng.integers(2) else "right", kc)
        elif op == 8:
            spl = float(rng.uniform(0, 1))
            mb.end_trial(spl, best, mode=("selective", "excessive")[int(rng.integers(2))])
            best = max(best, spl)
            mb.start_trial()
            recorded = False
        else:
            if rng.integers(0, 50) == 0:
                mb.reset_episode()
                best = 0.0
                recorded = False
        if step % 500 == 0:
            mb.check_invariants()
    mb.check_invariants()
    # conservation: the tiers sum exactly to the total depression 1 - W1
    total = mb.d_stm + mb.d_itm + mb.d_ltm
    assert np.array_equal(1.0 - mb.w1, total)
    assert (total >= 0).all() and (total <= 1.0 + 1e-12).all()


def test_monotone_within_trial():
    mb = small_mb(alpha=0.3, tau_e=1)
    rng = np.random.default_rng(12)
    prev = mb.w1
    for _ in range(50):
        kc = mb.encode(rand_pn(rng))
        mb.record(kc)
        if rng.integers(2):
            mb.punish("left" if rng.integers(2) else "right")
        else:
            mb.reward("left" if rng.integers(2) else "right", kc)
        cur = mb.w1
        assert (cur <= prev + 1e-15).all()
        prev = cur


def test_state_dump_restore_round_trip(tmp_path):
    mb = small_mb()
    rng = np.random.default_rng(5)
    for _ in range(10):
        kc = mb.encode(rand_pn(rng))
        mb.record(kc)
        mb.punish("left" if rng.integers(2) else "right")
    mb.end_trial(0.4, 0.0)
    path = tmp_path / "weights.json"
    mb.save_state(path)
    other = small_mb()
    other.load_state(path)
    for layer, twin in ((mb.d_stm, other.d_stm), (mb.d_itm, other.d_itm), (mb.d_ltm, other.d_ltm)):
        assert np.array_equal(layer, twin)
    with pytest.raises(ValueError):
        MushroomBody(MBParams(n_pn=50, n_kc=200, k=20, fan_in=5)).load_state(path)
