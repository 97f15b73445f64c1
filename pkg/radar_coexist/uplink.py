"""Per-TTI uplink simulation: TDD gating, PF scheduling, per-RE SINR, decoding and HARQ."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from radar_coexist.interference import cell_radar_grids_mw, dbm_to_mw
from radar_coexist.link import (
    DATA_SYMBOLS_PER_TTI,
    HarqProcess,
    LinkAdaptationState,
    decode_outcome,
    effective_sinr_db,
    harq_step,
)
from radar_coexist.models import (
    RB_SUBCARRIERS,
    TTI_S,
    LteConfig,
    McsEntry,
    PropagationParams,
    RadarConfig,
    SubframeType,
)
from radar_coexist.network import N_CELLS, NetworkState, move_users, state_link_gain_db
from radar_coexist.radar import pulse_train

logger = logging.getLogger(__name__)

_FLOOR_MW = 1e-30


# ── Frame Structure ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TddFrame:
    pattern: tuple[SubframeType, ...] = (
        SubframeType.downlink,
        SubframeType.special,
        SubframeType.uplink,
        SubframeType.uplink,
        SubframeType.uplink,
    )
    symbol_duration_s: float = TTI_S / 14
    symbols_per_tti: int = 14

    @classmethod
    def from_lte(cls, lte: LteConfig) -> TddFrame:
        return cls(tuple(lte.subframes), lte.symbol_duration_s, lte.symbols_per_tti)

    def subframe(self, tti: int) -> SubframeType:
        return self.pattern[tti % len(self.pattern)]

    def is_uplink(self, tti: int) -> bool:
        return self.subframe(tti) is SubframeType.uplink

    def next_uplink_tti(self, tti: int) -> int:
        """First uplink subframe at or after ``tti``."""
        for t in range(tti, tti + len(self.pattern)):
            if self.is_uplink(t):
                return t
        raise ValueError("frame pattern has no uplink subframe")

    @property
    def uplink_fraction(self) -> float:
        return sum(s is SubframeType.uplink for s in self.pattern) / len(self.pattern)


def noise_per_subcarrier_dbm(lte: LteConfig) -> float:
    """Thermal noise in one subcarrier plus the eNB noise figure."""
    return (
        lte.thermal_noise_dbm_hz
        + 10.0 * math.log10(lte.subcarrier_spacing_hz)
        + lte.enb_noise_figure_db
    )


# ── Scheduler ──────────────────────────────────────────────────────────────────

@dataclass
class ScheduleResult:
    grants: dict[int, tuple[int, int]] = field(default_factory=dict)
    retransmissions: set[int] = field(default_factory=set)
    postponed: list[int] = field(default_factory=list)

    def owners(self, n_rb: int) -> np.ndarray:
        owner = np.full(n_rb, -1, dtype=int)
        for ue, (start, n) in self.grants.items():
            owner[start : start + n] = ue
        return owner


def schedule_tti(
    n_rb: int,
    ue_ids: Sequence[int],
    rates: np.ndarray,
    averages: np.ndarray,
    rng: np.random.Generator,
    retransmissions: Sequence[tuple[int, int]] = (),
    window_tti: int = 100,
    subframe: SubframeType = SubframeType.uplink,
) -> ScheduleResult:
    """Greedy contiguous proportional-fair allocation for one cell.

    ``rates[i, n]`` is the bits UE ``ue_ids[i]`` would carry on ``n`` RBs
    (column 0 is zero). Pending retransmissions take their original RB count
    first; the rest are handed out RB by RB to the candidate with the best
    marginal rate over its running average. A UE's block stays contiguous:
    once another UE takes over, the previous block is closed.
    """
    result = ScheduleResult()
    if subframe is not SubframeType.uplink or n_rb <= 0:
        return result

    ids = np.asarray(ue_ids, dtype=int)
    jitter = 1.0 + 1e-9 * rng.random(len(ids))
    busy = np.zeros(len(ids), dtype=bool)
    index_of = {int(u): i for i, u in enumerate(ids)}

    pos = 0
    for ue, n in retransmissions:
        if ue in index_of:
            busy[index_of[ue]] = True
        if pos + n <= n_rb:
            result.grants[ue] = (pos, n)
            result.retransmissions.add(ue)
            pos += n
        else:
            result.postponed.append(ue)

    if len(ids) == 0:
        return result
    size = np.zeros(len(ids), dtype=int)
    start = np.zeros(len(ids), dtype=int)
    closed = busy.copy()
    avg = np.maximum(np.asarray(averages, dtype=float), 1e-9)
    rows = np.arange(len(ids))
    current = -1

    while pos < n_rb:
        eligible = ~closed & ((size == 0) | (rows == current))
        if not eligible.any():
            break
        step = rates[rows, np.minimum(size + 1, rates.shape[1] - 1)] - rates[rows, size]
        metric = step / (avg + rates[rows, size] / window_tti) * jitter
        metric = np.where(eligible, metric, -np.inf)
        best = int(np.argmax(metric))
        if metric[best] <= 0.0:
            break
        if best != current:
            if current >= 0:
                closed[current] = True
            start[best] = pos
            current = best
        size[best] += 1
        pos += 1

    for i in np.flatnonzero(size):
        result.grants[int(ids[i])] = (int(start[i]), int(size[i]))
    return result


# ── SINR ───────────────────────────────────────────────────────────────────────

def per_re_sinr_db(
    signal_mw: np.ndarray,
    cell_interference_mw: np.ndarray,
    radar_mw: np.ndarray,
    noise_mw: float,
) -> np.ndarray:
    """SINR per (symbol, subcarrier): S / (N + I_cell + I_radar).

    ``signal_mw`` and ``cell_interference_mw`` are per subcarrier and constant
    over the TTI; ``radar_mw`` carries the symbol dimension.
    """
    denominator = noise_mw + np.asarray(cell_interference_mw)[None, :] + radar_mw
    ratio = np.maximum(np.asarray(signal_mw)[None, :], _FLOOR_MW) / denominator
    return 10.0 * np.log10(ratio)


def cell_sinr_maps_db(
    owners: np.ndarray,
    rb_power_dbm: np.ndarray,
    reference_ue: np.ndarray,
    reference_power_dbm: np.ndarray,
    gain_db: np.ndarray,
    radar_grids_mw: np.ndarray,
    noise_mw: float,
    cells: Optional[Sequence[int]] = None,
) -> dict[int, np.ndarray]:
    """SINR maps for the requested cells, each of shape (n_symbols, n_subcarriers).

    Allocated RBs use the scheduled UE's received power; unallocated RBs use the
    cell's reference UE at its one-RB power. Interference comes from every UE
    transmitting on the same RB in another cell.
    """
    n_cells, n_rb = owners.shape
    cells = range(n_cells) if cells is None else cells
    per_sc = 10.0 * math.log10(RB_SUBCARRIERS)

    active = owners >= 0
    safe_owner = np.where(active, owners, 0)
    if gain_db.shape[0]:
        tx_mw = np.where(active, dbm_to_mw(rb_power_dbm[safe_owner] - per_sc), 0.0)
        link_mw = dbm_to_mw(gain_db)[safe_owner]  # (src cell, rb, victim cell)
        rx_mw = tx_mw[:, :, None] * link_mw
        total = rx_mw.sum(axis=0)  # (rb, victim cell)
    else:
        rx_mw = np.zeros((n_cells, n_rb, n_cells))
        total = np.zeros((n_rb, n_cells))

    maps: dict[int, np.ndarray] = {}
    for c in cells:
        interference_rb = total[:, c] - rx_mw[c, :, c]
        signal_rb = rx_mw[c, :, c].copy()
        ref = int(reference_ue[c])
        idle = ~active[c]
        if ref >= 0:
            signal_rb[idle] = dbm_to_mw(reference_power_dbm[ref] - per_sc + gain_db[ref, c])
        else:
            signal_rb[idle] = 0.0
        maps[c] = per_re_sinr_db(
            np.repeat(signal_rb, RB_SUBCARRIERS),
            np.repeat(np.maximum(interference_rb, 0.0), RB_SUBCARRIERS),
            radar_grids_mw[c],
            noise_mw,
        )
    return maps


# ── Simulation State ───────────────────────────────────────────────────────────

@dataclass
class SimulationState:
    """Everything the TTI loop mutates for one scenario."""

    radar: RadarConfig
    lte: LteConfig
    prop: PropagationParams
    frame: TddFrame
    network: NetworkState
    mcs_table: tuple[McsEntry, ...]
    sched_rngs: list[np.random.Generator]
    decode_rngs: list[np.random.Generator]
    coupling_table_mw: Optional[np.ndarray] = None
    spectral_weights: Optional[np.ndarray] = None
    dump_cell: int = 0
    dump_ttis: range = range(0)
    tti: int = 0
    link_adaptation: list[LinkAdaptationState] = field(default_factory=list)
    pf_average: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delivered_bits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    granted_bits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    granted_rbs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    harq: list[HarqProcess] = field(default_factory=list)
    first_tx: int = 0
    first_tx_failures: int = 0
    sinr_dump: dict[int, np.ndarray] = field(default_factory=dict)
    last_radar_grids_mw: Optional[np.ndarray] = None
    last_sinr_maps: dict[int, np.ndarray] = field(default_factory=dict)
    link_gains_db: Optional[np.ndarray] = None
    link_gains_tti: int = -1

    def __post_init__(self) -> None:
        n = self.network.n_users
        if not self.link_adaptation:
            self.link_adaptation = [LinkAdaptationState() for _ in range(n)]
        if len(self.pf_average) != n:
            self.pf_average = np.ones(n)
        if len(self.delivered_bits) != n:
            self.delivered_bits = np.zeros(n)
        if len(self.granted_bits) != n:
            self.granted_bits = np.zeros(n)
        if len(self.granted_rbs) != n:
            self.granted_rbs = np.zeros(n, dtype=int)

    @property
    def radar_active(self) -> bool:
        return self.coupling_table_mw is not None

    @property
    def elapsed_s(self) -> float:
        return self.tti * TTI_S

    @property
    def first_tx_bler(self) -> float:
        return self.first_tx_failures / self.first_tx if self.first_tx else 0.0

    def link_gains(self) -> np.ndarray:
        """UE-to-cell gains, refreshed every ``lte.link_refresh_tti`` TTIs as terminals move."""
        if self.link_gains_db is None or self.tti - self.link_gains_tti >= self.lte.link_refresh_tti:
            self.link_gains_db = state_link_gain_db(self.network, self.prop)
            self.link_gains_tti = self.tti
        return self.link_gains_db

    def reference_ues(self) -> np.ndarray:
        ref = np.full(N_CELLS, -1, dtype=int)
        for c in range(N_CELLS):
            members = self.network.users_of(c)
            if len(members):
                ref[c] = int(members[0])
        return ref


def _rate_table(
    state: SimulationState,
    ues: np.ndarray,
    pc_rb_dbm: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Bits and MCS index for every UE in ``ues`` and every RB count."""
    n_rb = state.lte.n_rb
    counts = np.arange(1, n_rb + 1)
    p_rb = np.minimum(
        pc_rb_dbm[ues][:, None], state.lte.power_control.p_max_dbm - 10.0 * np.log10(counts)[None, :]
    )
    thresholds = np.array([m.snr_threshold_db for m in state.mcs_table])
    efficiency = np.array([m.spectral_efficiency for m in state.mcs_table])

    idx = np.zeros((len(ues), n_rb), dtype=int)
    for row, ue in enumerate(ues):
        la = state.link_adaptation[ue]
        if la.last_eff_sinr_db is None:
            continue
        estimate = la.last_eff_sinr_db + la.olla_offset_db + (p_rb[row] - la.last_rb_power_dbm)
        idx[row] = np.maximum(np.searchsorted(thresholds, estimate, side="right") - 1, 0)

    bits = np.floor(efficiency[idx] * counts[None, :] * RB_SUBCARRIERS * DATA_SYMBOLS_PER_TTI)
    rates = np.hstack([np.zeros((len(ues), 1)), bits])
    return rates, idx


@dataclass
class _CellPlan:
    schedule: ScheduleResult
    mcs_index: np.ndarray
    rates: np.ndarray
    ues: np.ndarray
    retransmissions: dict[int, HarqProcess]
    draws: np.ndarray


def step_tti(state: SimulationState) -> SimulationState:
    """Advance one 1 ms TTI."""
    lte, t = state.lte, state.tti
    t0 = t * TTI_S
    n_sym, n_sc, n_rb = lte.symbols_per_tti, lte.n_subcarriers, lte.n_rb

    if state.radar_active:
        # pulses fired late in the previous TTI still spill into this one
        pulses = pulse_train(state.radar, max(0.0, t0 - state.radar.pulse_width_s), t0 + TTI_S)
        grids = cell_radar_grids_mw(
            pulses, state.coupling_table_mw, state.spectral_weights, t0, lte.symbol_duration_s, n_sym
        )
    else:
        grids = np.zeros((N_CELLS, n_sym, n_sc))
    state.last_radar_grids_mw = grids

    net = state.network
    uplink = state.frame.is_uplink(t)
    needs_dump = t in state.dump_ttis
    if not needs_dump and not (uplink and net.n_users):
        state.last_sinr_maps = {}
        move_users(net, TTI_S)
        state.tti += 1
        return state

    gain_db = state.link_gains()
    owners = np.full((N_CELLS, n_rb), -1, dtype=int)
    rb_power = np.zeros(net.n_users)
    pc = lte.power_control
    users = np.arange(net.n_users)
    pc_rb = pc.p0_dbm + pc.alpha * (-gain_db[users, net.serving]) if net.n_users else np.zeros(0)
    reference_power = np.minimum(pc_rb, pc.p_max_dbm)
    noise_mw = float(dbm_to_mw(noise_per_subcarrier_dbm(lte)))

    plans: dict[int, _CellPlan] = {}
    if uplink and net.n_users:
        for c in range(N_CELLS):
            ues = net.users_of(c)
            if len(ues) == 0:
                continue
            # one draw per attached UE every uplink TTI keeps paired runs on common numbers
            draws = state.decode_rngs[c].random(len(ues))
            due: dict[int, HarqProcess] = {}
            for proc in sorted(state.harq, key=lambda h: (h.next_tx_tti, h.ue)):
                if proc.active and net.serving[proc.ue] == c and proc.next_tx_tti <= t:
                    due.setdefault(proc.ue, proc)
            rates, mcs_idx = _rate_table(state, ues, pc_rb)
            sched = schedule_tti(
                n_rb,
                ues,
                rates,
                state.pf_average[ues],
                state.sched_rngs[c],
                retransmissions=[(ue, proc.n_rb) for ue, proc in due.items()],
                window_tti=lte.pf_window_tti,
            )
            for ue in sched.postponed:
                due[ue].next_tx_tti = state.frame.next_uplink_tti(t + 1)
            owners[c] = sched.owners(n_rb)
            for ue, (_, n) in sched.grants.items():
                rb_power[ue] = min(pc_rb[ue], pc.p_max_dbm - 10.0 * math.log10(n))
            for ue in sched.retransmissions:
                due[ue].rb_start = sched.grants[ue][0]
            plans[c] = _CellPlan(sched, mcs_idx, rates, ues, due, draws)

    wanted = sorted(set(plans) | ({state.dump_cell} if needs_dump else set()))
    maps = cell_sinr_maps_db(
        owners, rb_power, state.reference_ues(), reference_power, gain_db, grids, noise_mw, wanted
    )
    state.last_sinr_maps = maps
    if needs_dump:
        state.sinr_dump[t] = maps[state.dump_cell]

    for c, plan in plans.items():
        _decode_cell(state, c, plan, rb_power, maps[c])

    move_users(net, TTI_S)
    state.tti += 1
    return state


def _decode_cell(
    state: SimulationState,
    cell: int,
    plan: _CellPlan,
    rb_power: np.ndarray,
    sinr_map: np.ndarray,
) -> None:
    lte, t = state.lte, state.tti
    sched, mcs_idx, rates, ues = plan.schedule, plan.mcs_index, plan.rates, plan.ues
    row_of = {int(u): i for i, u in enumerate(ues)}
    granted = np.zeros(len(ues))

    for ue in sorted(sched.grants):
        start, n = sched.grants[ue]
        row = row_of[ue]
        if ue in sched.retransmissions:
            proc = plan.retransmissions[ue]
            first = False
        else:
            proc = HarqProcess(
                ue=ue,
                mcs=state.mcs_table[int(mcs_idx[row, n - 1])],
                payload_bits=int(rates[row, n]),
                n_rb=n,
                rb_start=start,
            )
            state.harq.append(proc)
            first = True

        block = sinr_map[:, start * RB_SUBCARRIERS : (start + n) * RB_SUBCARRIERS]
        eff = effective_sinr_db(block, proc.mcs.beta)
        combined = proc.combine(eff)
        success = decode_outcome(combined, proc.mcs, float(plan.draws[row]), lte.bler_slope_db)
        outcome = harq_step(proc, success, lte.harq_max_tx)

        if first:
            # only fresh blocks feed the estimator
            la = state.link_adaptation[ue]
            state.first_tx += 1
            state.first_tx_failures += 0 if success else 1
            la.olla_update(success, lte.olla_step_db, lte.bler_target)
            la.measure(eff if math.isfinite(eff) else -50.0, float(rb_power[ue]))

        state.delivered_bits[ue] += outcome.delivered_bits
        state.granted_bits[ue] += proc.payload_bits if first else 0
        state.granted_rbs[ue] += n
        granted[row] += proc.payload_bits
        if not outcome.closed:
            proc.next_tx_tti = state.frame.next_uplink_tti(t + lte.harq_rtt_ms)

    w = 1.0 / lte.pf_window_tti
    state.pf_average[ues] = (1.0 - w) * state.pf_average[ues] + w * granted
    state.harq = [p for p in state.harq if p.active]
