"""Tests for the MCS table, EESM, BLER draws, outer-loop link adaptation and HARQ."""

import math

import numpy as np
import pytest

from radar_coexist.errors import DomainError
from radar_coexist.link import (
    MCS_TABLE,
    HarqProcess,
    LinkAdaptationState,
    block_error_probability,
    decode_outcome,
    effective_sinr_db,
    harq_step,
    link_adaptation,
    mcs_table,
    select_mcs,
    transport_block_bits,
)


# ── MCS Table ──────────────────────────────────────────────────────────────────

def test_table_shape_and_ordering():
    assert [m.index for m in MCS_TABLE] == list(range(1, 16))
    thresholds = [m.snr_threshold_db for m in MCS_TABLE]
    efficiencies = [m.spectral_efficiency for m in MCS_TABLE]
    assert thresholds == sorted(thresholds)
    assert efficiencies == sorted(efficiencies)
    assert efficiencies[0] == pytest.approx(0.15, abs=0.01)
    assert efficiencies[-1] == pytest.approx(5.55, abs=0.01)


def test_beta_grows_per_index():
    assert [m.beta for m in MCS_TABLE[:3]] == [1.0, 1.25, 1.5]
    assert all(m.beta == 1.0 for m in mcs_table(beta_step=0.0))


def test_modulation_orders():
    assert {m.modulation_order for m in MCS_TABLE} == {2, 4, 6}


def test_transport_block_bits():
    # 50 RBs × 12 subcarriers × 12 data symbols at 0.1523 bit/s/Hz
    assert transport_block_bits(MCS_TABLE[0], 50) == 1096
    assert transport_block_bits(MCS_TABLE[-1], 1) == math.floor(5.5547 * 144)


def test_select_mcs():
    assert select_mcs(None).index == 1
    assert select_mcs(-40.0).index == 1
    assert select_mcs(MCS_TABLE[7].snr_threshold_db).index == 8
    assert select_mcs(MCS_TABLE[7].snr_threshold_db - 1e-9).index == 7
    assert select_mcs(60.0).index == 15


def test_select_mcs_monotone():
    picks = [select_mcs(x).index for x in np.linspace(-20, 40, 601)]
    assert picks == sorted(picks)


# ── EESM ───────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("beta", [0.5, 1.0, 3.0, 10.0])
def test_uniform_field_is_its_own_effective_sinr(beta):
    assert effective_sinr_db(np.full((12, 24), 10.0), beta) == pytest.approx(10.0, abs=1e-9)


def test_effective_sinr_between_min_and_max():
    rng = np.random.default_rng(0)
    field = rng.uniform(-5.0, 25.0, size=(12, 36))
    eff = effective_sinr_db(field, 2.0)
    assert field.min() <= eff <= field.max()


def test_one_nulled_symbol_matches_direct_evaluation():
    field = np.full((14, 12), 10.0)
    field[3] = -np.inf
    gamma = 10.0
    expected = -math.log(13 / 14 * math.exp(-gamma) + 1 / 14)
    assert effective_sinr_db(field, 1.0) == pytest.approx(10 * math.log10(expected), abs=1e-9)


def test_beta_limits():
    field = np.array([0.0, 10.0])  # 1 and 10 linear
    # large β → arithmetic mean, small β → minimum
    assert effective_sinr_db(field, 1e4) == pytest.approx(10 * math.log10(5.5), abs=0.01)
    assert effective_sinr_db(field, 1e-3) == pytest.approx(0.0, abs=0.01)


def test_effective_sinr_all_nulled():
    assert effective_sinr_db([-np.inf] * 3) == -math.inf


def test_effective_sinr_domain():
    with pytest.raises(DomainError):
        effective_sinr_db([])
    with pytest.raises(DomainError):
        effective_sinr_db([3.0], beta=0.0)


# ── Decoding ───────────────────────────────────────────────────────────────────

def test_bler_midpoint_at_threshold():
    mcs = MCS_TABLE[5]
    assert block_error_probability(mcs.snr_threshold_db, mcs) == pytest.approx(0.5)


def test_bler_two_db_above_threshold():
    mcs = MCS_TABLE[5]
    assert block_error_probability(mcs.snr_threshold_db + 2.0, mcs) == pytest.approx(0.018, abs=5e-4)


def test_decode_far_above_threshold_always_succeeds():
    rng = np.random.default_rng(1)
    assert all(decode_outcome(40.0, MCS_TABLE[0], rng) for _ in range(1000))


def test_decode_rate_at_threshold():
    rng = np.random.default_rng(2)
    mcs = MCS_TABLE[3]
    wins = sum(decode_outcome(mcs.snr_threshold_db, mcs, rng) for _ in range(20_000))
    assert wins / 20_000 == pytest.approx(0.5, abs=0.02)


def test_decode_with_caller_supplied_uniform():
    mcs = MCS_TABLE[3]
    assert decode_outcome(mcs.snr_threshold_db, mcs, 0.75)
    assert not decode_outcome(mcs.snr_threshold_db, mcs, 0.25)
    assert decode_outcome(mcs.snr_threshold_db + 10.0, mcs, 0.01)


# ── Link Adaptation ────────────────────────────────────────────────────────────

def test_cold_start_uses_lowest_mcs():
    assert link_adaptation(LinkAdaptationState()).index == 1


def test_measurement_below_all_thresholds():
    state = LinkAdaptationState()
    state.measure(-30.0, 0.0)
    assert link_adaptation(state).index == 1


def test_estimate_tracks_power_change():
    state = LinkAdaptationState(olla_offset_db=-1.0)
    state.measure(8.0, 5.0)
    assert state.estimate_db(2.0) == pytest.approx(4.0)
    assert state.estimate_db() == pytest.approx(7.0)


def test_olla_steps():
    state = LinkAdaptationState()
    state.olla_update(False)
    assert state.olla_offset_db == pytest.approx(-0.5)
    for _ in range(9):
        state.olla_update(True)
    assert state.olla_offset_db == pytest.approx(0.0, abs=1e-12)


def test_radar_hit_measurement_never_raises_mcs():
    clean, hit = LinkAdaptationState(), LinkAdaptationState()
    clean.measure(12.0, 0.0)
    hit.measure(7.5, 0.0)
    assert link_adaptation(hit).index <= link_adaptation(clean).index


@pytest.mark.parametrize("channel_db", [3.0, 9.0, 15.0])
def test_olla_converges_to_target_bler(channel_db):
    rng = np.random.default_rng(7)
    state = LinkAdaptationState()
    state.measure(channel_db, 0.0)
    failures = 0
    n = 20_000
    for _ in range(n):
        mcs = link_adaptation(state)
        success = decode_outcome(channel_db, mcs, rng)
        failures += not success
        state.olla_update(success)
    assert failures / n == pytest.approx(0.10, abs=0.03)


# ── HARQ ───────────────────────────────────────────────────────────────────────

def _process():
    return HarqProcess(ue=0, mcs=MCS_TABLE[4], payload_bits=5000, n_rb=4)


def test_chase_combining_doubles_sinr():
    proc = _process()
    single = proc.combine(6.0)
    double = proc.combine(6.0)
    assert single == pytest.approx(6.0)
    assert double - single == pytest.approx(3.0103, abs=1e-4)


def test_combining_is_nondecreasing():
    proc = _process()
    values = [proc.combine(x) for x in (2.0, -np.inf, -3.0, 0.0)]
    assert values == sorted(values)


def test_success_on_first_transmission():
    proc = _process()
    proc.combine(10.0)
    step = harq_step(proc, True)
    assert step.delivered_bits == 5000
    assert step.closed and not proc.active


def test_four_failures_deliver_nothing():
    proc = _process()
    steps = []
    for _ in range(4):
        proc.combine(-5.0)
        steps.append(harq_step(proc, False))
    assert [s.closed for s in steps] == [False, False, False, True]
    assert sum(s.delivered_bits for s in steps) == 0
    assert proc.tx_count == 4


def test_closed_process_rejects_steps():
    proc = _process()
    proc.combine(10.0)
    harq_step(proc, True)
    with pytest.raises(DomainError):
        harq_step(proc, True)


def test_rb_allocation():
    proc = HarqProcess(ue=3, mcs=MCS_TABLE[0], payload_bits=10, n_rb=5, rb_start=10)
    assert list(proc.rb_allocation) == [10, 11, 12, 13, 14]
