"""Tests for TDD gating, the PF scheduler, per-RE SINR and the TTI loop."""

import math

import numpy as np
import pytest

from radar_coexist.engine import build_state
from radar_coexist.link import HarqProcess, LinkAdaptationState
from radar_coexist.models import LteConfig, SimulationConfig, SubframeType
from radar_coexist.network import N_CELLS
from radar_coexist.radar import pulse_train
from radar_coexist.uplink import (
    TddFrame,
    cell_sinr_maps_db,
    noise_per_subcarrier_dbm,
    per_re_sinr_db,
    schedule_tti,
    step_tti,
)


def _config(**overrides):
    document = {
        "seed": 42,
        "radar_distances_km": [50.0],
        "sim_duration_s": 0.02,
        "sinr_dump_tti_count": 0,
        "lte": {"ue_per_cell": 2},
    }
    document.update(overrides)
    return SimulationConfig.model_validate(document)


def _linear_rates(n_ues, n_rb=50, bits_per_rb=100.0):
    return np.tile(bits_per_rb * np.arange(n_rb + 1, dtype=float), (n_ues, 1))


# ── Frame Structure ────────────────────────────────────────────────────────────

def test_default_frame_pattern():
    frame = TddFrame()
    assert [frame.is_uplink(t) for t in range(10)] == [False, False, True, True, True] * 2
    assert frame.subframe(5) is SubframeType.downlink
    assert frame.subframe(6) is SubframeType.special
    assert frame.uplink_fraction == pytest.approx(0.6)


def test_next_uplink_tti():
    frame = TddFrame()
    assert frame.next_uplink_tti(0) == 2
    assert frame.next_uplink_tti(3) == 3
    assert frame.next_uplink_tti(5) == 7


def test_frame_from_config():
    frame = TddFrame.from_lte(LteConfig(frame_pattern="DU"))
    assert frame.uplink_fraction == 0.5
    with pytest.raises(ValueError):
        TddFrame.from_lte(LteConfig(frame_pattern="DDS")).next_uplink_tti(0)


def test_noise_per_subcarrier():
    assert noise_per_subcarrier_dbm(LteConfig()) == pytest.approx(-127.24, abs=0.01)


# ── Scheduler ──────────────────────────────────────────────────────────────────

def test_no_grants_outside_uplink():
    rng = np.random.default_rng(0)
    for subframe in (SubframeType.downlink, SubframeType.special):
        result = schedule_tti(50, [0, 1], _linear_rates(2), np.ones(2), rng, subframe=subframe)
        assert result.grants == {}


def test_single_ue_takes_every_rb():
    result = schedule_tti(50, [7], _linear_rates(1), np.ones(1), np.random.default_rng(0))
    assert result.grants == {7: (0, 50)}
    assert np.all(result.owners(50) == 7)


def test_grants_contiguous_and_disjoint():
    rng = np.random.default_rng(1)
    averages = rng.uniform(0.5, 2.0, size=10)
    result = schedule_tti(50, list(range(10)), _linear_rates(10), averages, rng)
    covered = np.zeros(50, dtype=int)
    for start, n in result.grants.values():
        assert n >= 1
        covered[start : start + n] += 1
    assert np.all(covered == 1)
    owners = result.owners(50)
    for ue in result.grants:
        blocks = np.flatnonzero(owners == ue)
        assert np.array_equal(blocks, np.arange(blocks[0], blocks[-1] + 1))


def test_zero_rates_leave_rbs_idle():
    rates = np.zeros((3, 51))
    result = schedule_tti(50, [0, 1, 2], rates, np.ones(3), np.random.default_rng(0))
    assert result.grants == {}


def test_retransmissions_first_with_original_size():
    rng = np.random.default_rng(2)
    result = schedule_tti(
        50, [0, 1, 2], _linear_rates(3), np.ones(3), rng, retransmissions=[(1, 6)]
    )
    assert result.grants[1] == (0, 6)
    assert result.retransmissions == {1}
    assert all(start >= 6 for ue, (start, _) in result.grants.items() if ue != 1)


def test_retransmission_postponed_when_it_does_not_fit():
    rng = np.random.default_rng(2)
    result = schedule_tti(
        50, [0, 1], _linear_rates(2), np.ones(2), rng, retransmissions=[(0, 30), (1, 30)]
    )
    assert result.grants == {0: (0, 30)}
    assert result.postponed == [1]


def test_proportional_fair_shares_equal_users():
    rng = np.random.default_rng(3)
    n_ues, window = 10, 100
    rates = _linear_rates(n_ues)
    averages = np.ones(n_ues)
    rbs = np.zeros(n_ues)
    for _ in range(3000):
        result = schedule_tti(50, list(range(n_ues)), rates, averages, rng, window_tti=window)
        granted = np.zeros(n_ues)
        for ue, (_, n) in result.grants.items():
            granted[ue] = rates[ue, n]
            rbs[ue] += n
        averages = (1 - 1 / window) * averages + granted / window
    shares = rbs / rbs.sum()
    assert np.allclose(shares, 0.1, atol=0.02)


# ── SINR ───────────────────────────────────────────────────────────────────────

def test_sinr_without_radar_is_constant_over_symbols():
    signal = np.full(600, 1e-9)
    sinr = per_re_sinr_db(signal, np.zeros(600), np.zeros((14, 600)), 1e-12)
    assert np.allclose(sinr, 30.0)
    assert np.all(np.var(sinr, axis=0) == 0.0)


def test_sinr_dips_under_a_pulse_and_recovers():
    signal, cell_i = np.full(600, 1e-9), np.full(600, 1e-12)
    clear = per_re_sinr_db(signal, cell_i, np.zeros((14, 600)), 1e-12)
    radar = np.zeros((14, 600))
    radar[3, 295:306] = 1e-8
    hit = per_re_sinr_db(signal, cell_i, radar, 1e-12)
    assert np.all(hit[3, 295:306] < clear[3, 295:306] - 20.0)
    untouched = np.ones((14, 600), dtype=bool)
    untouched[3, 295:306] = False
    assert np.array_equal(hit[untouched], clear[untouched])


def test_cell_map_for_lone_ue():
    n_users, n_rb = 1, 50
    owners = np.full((N_CELLS, n_rb), -1)
    owners[0] = 0
    gain_db = np.full((n_users, N_CELLS), -200.0)
    gain_db[0, 0] = -100.0
    reference = np.full(N_CELLS, -1)
    reference[0] = 0
    noise_mw = 10 ** (-127.24 / 10)
    maps = cell_sinr_maps_db(
        owners, np.array([10.0]), reference, np.array([0.0]), gain_db,
        np.zeros((N_CELLS, 14, 600)), noise_mw, cells=[0],
    )
    expected = 10.0 - 10 * math.log10(12) - 100.0 + 127.24
    assert list(maps) == [0]
    assert maps[0].shape == (14, 600)
    assert np.allclose(maps[0], expected, atol=1e-9)


def test_cell_map_sees_other_cell_interference():
    owners = np.full((N_CELLS, 50), -1)
    owners[0], owners[3] = 0, 1
    gain_db = np.full((2, N_CELLS), -200.0)
    gain_db[0, 0], gain_db[1, 3] = -100.0, -100.0
    reference = np.full(N_CELLS, -1)
    radar = np.zeros((N_CELLS, 14, 600))
    args = (np.array([10.0, 10.0]), reference, np.zeros(2))
    quiet = cell_sinr_maps_db(owners, *args, gain_db, radar, 1e-13, cells=[0])[0]
    gain_db[1, 0] = -110.0
    loud = cell_sinr_maps_db(owners, *args, gain_db, radar, 1e-13, cells=[0])[0]
    assert np.all(loud < quiet - 5.0)


# ── TTI Loop ───────────────────────────────────────────────────────────────────

def test_step_advances_one_millisecond():
    state = build_state(_config(), None, 42)
    for _ in range(5):
        step_tti(state)
    assert state.tti == 5
    assert state.elapsed_s == pytest.approx(5e-3)


def test_downlink_subframes_carry_nothing():
    state = build_state(_config(), 50.0, 42)
    for t in range(20):
        before = state.granted_rbs.copy()
        step_tti(state)
        if not state.frame.is_uplink(t):
            assert np.array_equal(state.granted_rbs, before)
            assert state.last_sinr_maps == {}


def test_uplink_subframes_grant_every_cell():
    state = build_state(_config(), None, 42)
    step_tti(state)
    step_tti(state)
    step_tti(state)  # tti 2 is the first uplink subframe
    assert state.granted_rbs.sum() > 0
    assert sorted(state.last_sinr_maps) == list(range(N_CELLS))


def test_delivered_never_exceeds_granted():
    state = build_state(_config(), 50.0, 42)
    for _ in range(40):
        step_tti(state)
    assert np.all(state.delivered_bits <= state.granted_bits)
    assert state.delivered_bits.sum() > 0


def test_radar_grids_only_when_active():
    quiet = build_state(_config(), None, 42)
    noisy = build_state(_config(), 50.0, 42)
    assert not quiet.radar_active and noisy.radar_active
    hits = 0
    for _ in range(10):
        step_tti(quiet)
        step_tti(noisy)
        assert not np.any(quiet.last_radar_grids_mw)
        hits += bool(np.any(noisy.last_radar_grids_mw))
    # one pulse every 0.5 ms: every TTI is hit somewhere in the cluster
    assert hits == 10


def test_clear_tti_sinr_matches_baseline():
    quiet = build_state(_config(), None, 42)
    noisy = build_state(_config(), 50.0, 42)
    # the first uplink TTI is scheduled from identical state in both runs
    for _ in range(3):
        step_tti(quiet)
        step_tti(noisy)
    clear_rows = 0
    for cell, sinr in quiet.last_sinr_maps.items():
        clear = ~np.any(noisy.last_radar_grids_mw[cell], axis=1)
        clear_rows += int(clear.sum())
        assert np.array_equal(sinr[clear], noisy.last_sinr_maps[cell][clear])
        assert np.all(noisy.last_sinr_maps[cell][~clear] <= sinr[~clear])
    # two pulses touch four of the fourteen symbols
    assert clear_rows == N_CELLS * 10


def test_zero_users_run_cleanly():
    state = build_state(_config(lte={"ue_per_cell": 0}), 50.0, 42)
    for _ in range(10):
        step_tti(state)
    assert state.network.n_users == 0
    assert state.delivered_bits.sum() == 0


def test_same_seed_same_outcome():
    runs = []
    for _ in range(2):
        state = build_state(_config(), 50.0, 7)
        for _ in range(25):
            step_tti(state)
        runs.append(state.delivered_bits.copy())
    assert np.array_equal(runs[0], runs[1])


def test_sinr_dump_collects_window():
    state = build_state(_config(sinr_dump_tti_start=2, sinr_dump_tti_count=3), 50.0, 42)
    for _ in range(8):
        step_tti(state)
    assert sorted(state.sinr_dump) == [2, 3, 4]
    assert state.sinr_dump[2].shape == (14, 600)


def test_pulse_spill_reaches_next_tti():
    # with a 0.47 ms PRI the third pulse starts at 0.94 ms and runs to 1.018 ms
    state = build_state(_config(radar={"pri_s": 0.47e-3}), 50.0, 42)
    step_tti(state)
    step_tti(state)
    grids = state.last_radar_grids_mw
    assert np.all(grids[:, 0, :].sum(axis=-1) > 0)

    spilled = next(p for p in pulse_train(state.radar, 0.0, 1e-3) if p.end_s > 1e-3)
    energy = grids[:, 0, :].sum(axis=-1) * state.lte.symbol_duration_s
    expected = state.coupling_table_mw[spilled.beam_index] * (spilled.end_s - 1e-3)
    assert np.allclose(energy, expected, rtol=1e-9, atol=0.0)


def test_symbols_tile_the_tti():
    state = build_state(_config(), 50.0, 42)
    assert state.lte.symbols_per_tti * state.lte.symbol_duration_s == pytest.approx(1e-3, rel=1e-12)


def test_link_gains_refresh_on_interval():
    state = build_state(_config(lte={"ue_per_cell": 2, "link_refresh_tti": 4}), None, 42)
    first = state.link_gains()
    state.tti = 3
    assert state.link_gains() is first
    state.tti = 4
    refreshed = state.link_gains()
    assert refreshed is not first
    assert state.link_gains_tti == 4


def test_paired_runs_consume_identical_decode_draws():
    quiet = build_state(_config(), None, 42)
    noisy = build_state(_config(), 50.0, 42)
    for _ in range(30):
        step_tti(quiet)
        step_tti(noisy)
    for a, b in zip(quiet.decode_rngs, noisy.decode_rngs):
        assert a.random() == b.random()


def test_only_first_transmissions_feed_link_adaptation(monkeypatch):
    measured, resent = [], []
    measure, combine = LinkAdaptationState.measure, HarqProcess.combine

    def counting_measure(self, eff_sinr_db, rb_power_dbm):
        measured.append(eff_sinr_db)
        measure(self, eff_sinr_db, rb_power_dbm)

    def counting_combine(self, eff_sinr_db):
        if self.tx_count:
            resent.append(self.ue)
        return combine(self, eff_sinr_db)

    monkeypatch.setattr(LinkAdaptationState, "measure", counting_measure)
    monkeypatch.setattr(HarqProcess, "combine", counting_combine)
    state = build_state(_config(), 50.0, 42)
    for _ in range(60):
        step_tti(state)
    assert resent
    assert len(measured) == state.first_tx
