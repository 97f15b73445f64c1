"""Link abstraction: MCS table, EESM, outer-loop link adaptation, BLER draws and HARQ."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit, logsumexp

from radar_coexist.errors import DomainError
from radar_coexist.models import RB_SUBCARRIERS, McsEntry

# 12 data-bearing symbols per subframe (two DMRS symbols)
DATA_SYMBOLS_PER_TTI = 12

_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
_THRESHOLD_DB = (
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
)


def _modulation_order(index: int) -> int:
    if index <= 6:
        return 2
    if index <= 9:
        return 4
    return 6


def mcs_table(beta_step: float = 0.25) -> tuple[McsEntry, ...]:
    """Fifteen CQI-style entries; EESM β grows by ``beta_step`` per index."""
    return tuple(
        McsEntry(
            index=i,
            spectral_efficiency=eff,
            snr_threshold_db=thr,
            modulation_order=_modulation_order(i),
            beta=1.0 + beta_step * (i - 1),
        )
        for i, (eff, thr) in enumerate(zip(_EFFICIENCY, _THRESHOLD_DB), start=1)
    )


MCS_TABLE = mcs_table()


def transport_block_bits(mcs: McsEntry, n_rb: int) -> int:
    return int(math.floor(mcs.spectral_efficiency * n_rb * RB_SUBCARRIERS * DATA_SYMBOLS_PER_TTI))


def select_mcs(estimate_db: Optional[float], table: tuple[McsEntry, ...] = MCS_TABLE) -> McsEntry:
    """Highest entry whose threshold does not exceed the estimate; lowest entry otherwise."""
    if estimate_db is None:
        return table[0]
    thresholds = np.array([m.snr_threshold_db for m in table])
    pos = int(np.searchsorted(thresholds, estimate_db, side="right")) - 1
    return table[max(pos, 0)]


# ── EESM ───────────────────────────────────────────────────────────────────────

def effective_sinr_db(sinr_db: ArrayLike, beta: float = 1.0) -> float:
    """Exponential effective SINR: −β·ln(mean(exp(−γ/β))), returned in dB."""
    gamma = np.power(10.0, np.asarray(sinr_db, dtype=float).ravel() / 10.0)
    if gamma.size == 0:
        raise DomainError("effective SINR needs at least one resource element")
    if beta <= 0:
        raise DomainError("beta must be > 0")
    eff = -beta * (logsumexp(-gamma / beta) - math.log(gamma.size))
    if eff <= 0:
        return -math.inf
    return 10.0 * math.log10(eff)


# ── Decoding ───────────────────────────────────────────────────────────────────

def block_error_probability(eff_sinr_db: float, mcs: McsEntry, slope_db: float = 0.5) -> float:
    """Logistic BLER curve centred on the MCS threshold."""
    return float(expit((mcs.snr_threshold_db - eff_sinr_db) / slope_db))


def decode_outcome(
    eff_sinr_db: float,
    mcs: McsEntry,
    draw: np.random.Generator | float,
    slope_db: float = 0.5,
) -> bool:
    """True when the transport block decodes.

    ``draw`` is either a generator or a uniform in [0, 1) drawn by the caller.
    """
    u = draw.random() if isinstance(draw, np.random.Generator) else float(draw)
    return bool(u >= block_error_probability(eff_sinr_db, mcs, slope_db))


# ── Link Adaptation ────────────────────────────────────────────────────────────

@dataclass
class LinkAdaptationState:
    """Per-UE memory: last effective SINR measurement and the OLLA offset."""

    olla_offset_db: float = 0.0
    last_eff_sinr_db: Optional[float] = None
    last_rb_power_dbm: Optional[float] = None

    def estimate_db(self, rb_power_dbm: Optional[float] = None) -> Optional[float]:
        """Predicted effective SINR at a new per-RB power, including the OLLA offset."""
        if self.last_eff_sinr_db is None:
            return None
        shift = 0.0
        if rb_power_dbm is not None and self.last_rb_power_dbm is not None:
            shift = rb_power_dbm - self.last_rb_power_dbm
        return self.last_eff_sinr_db + shift + self.olla_offset_db

    def measure(self, eff_sinr_db: float, rb_power_dbm: float) -> None:
        self.last_eff_sinr_db = eff_sinr_db
        self.last_rb_power_dbm = rb_power_dbm

    def olla_update(self, success: bool, step_db: float = 0.5, bler_target: float = 0.1) -> None:
        """Down one step on a failure, up step·target/(1 − target) on a success."""
        if success:
            self.olla_offset_db += step_db * bler_target / (1.0 - bler_target)
        else:
            self.olla_offset_db -= step_db


def link_adaptation(
    state: LinkAdaptationState,
    table: tuple[McsEntry, ...] = MCS_TABLE,
    rb_power_dbm: Optional[float] = None,
) -> McsEntry:
    """MCS for the next first transmission; cold start uses the lowest entry."""
    return select_mcs(state.estimate_db(rb_power_dbm), table)


# ── HARQ ───────────────────────────────────────────────────────────────────────

@dataclass
class HarqProcess:
    ue: int
    mcs: McsEntry
    payload_bits: int
    n_rb: int
    rb_start: int = 0
    tx_count: int = 0
    accumulated_sinr_linear: float = 0.0
    next_tx_tti: int = 0
    active: bool = True

    @property
    def rb_allocation(self) -> range:
        return range(self.rb_start, self.rb_start + self.n_rb)

    def combine(self, eff_sinr_db: float) -> float:
        """Chase-combine one more transmission; returns the accumulated SINR in dB."""
        self.tx_count += 1
        if math.isfinite(eff_sinr_db):
            self.accumulated_sinr_linear += 10.0 ** (eff_sinr_db / 10.0)
        if self.accumulated_sinr_linear <= 0:
            return -math.inf
        return 10.0 * math.log10(self.accumulated_sinr_linear)


@dataclass(frozen=True)
class HarqStep:
    delivered_bits: int
    closed: bool


def harq_step(process: HarqProcess, success: bool, max_tx: int = 4) -> HarqStep:
    """Close the process on success or after ``max_tx`` transmissions."""
    if not process.active:
        raise DomainError("HARQ process is already closed")
    if success:
        process.active = False
        return HarqStep(delivered_bits=process.payload_bits, closed=True)
    if process.tx_count >= max_tx:
        process.active = False
        return HarqStep(delivered_bits=0, closed=True)
    return HarqStep(delivered_bits=0, closed=False)
