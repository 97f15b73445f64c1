"""Map radar pulses onto per-symbol × per-subcarrier interference at each eNB."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import sici

from radar_coexist.antennas import radar_gain_db, sector_gain_dbi
from radar_coexist.errors import DomainError
from radar_coexist.models import (
    CouplingConfig,
    CouplingResult,
    EnbElevation,
    PropagationParams,
    PulseEvent,
    RadarConfig,
)
from radar_coexist.network import Cell, NetworkLayout
from radar_coexist.propagation import radar_path_loss_db
from radar_coexist.radar import boresight_eirp_dbm, off_boresight_deg, radar_position_m

# overlaps shorter than this are rounding noise where a pulse edge meets a symbol edge
_MIN_OVERLAP_S = 1e-12


@dataclass(frozen=True)
class ResourceGrid:
    """Radar interference (mW) received by one eNB during one TTI."""

    tti_index: int
    n_symbols: int
    n_subcarriers: int
    radar_interference_mw: np.ndarray

    @classmethod
    def empty(cls, tti_index: int, n_symbols: int, n_subcarriers: int) -> ResourceGrid:
        return cls(tti_index, n_symbols, n_subcarriers, np.zeros((n_symbols, n_subcarriers)))

    @property
    def is_clear(self) -> bool:
        return not np.any(self.radar_interference_mw)


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


# ── Coupling ───────────────────────────────────────────────────────────────────

def _geometry(radar: RadarConfig, site: np.ndarray, distance_km: float, prop: PropagationParams):
    ship = radar_position_m(radar, distance_km)
    to_site = site - ship
    az_ship_to_site = np.degrees(np.arctan2(to_site[..., 1], to_site[..., 0]))
    az_site_to_ship = np.degrees(np.arctan2(-to_site[..., 1], -to_site[..., 0]))
    ground = np.hypot(to_site[..., 0], to_site[..., 1])
    dh = prop.radar_antenna_height_m - prop.lte_antenna_height_m
    # positive when the site sits below the radar horizon line
    site_depression = np.degrees(np.arctan2(dh, ground))
    return az_ship_to_site, az_site_to_ship, site_depression


def _enb_gain_dbi(cell_az, az_site_to_ship, site_depression, cell_antenna, coupling: CouplingConfig):
    if not coupling.apply_enb_pattern:
        return np.full(np.shape(az_site_to_ship), cell_antenna.peak_gain_dbi)
    az_off = np.asarray(az_site_to_ship) - np.asarray(cell_az)
    if coupling.enb_elevation is EnbElevation.boresight:
        el_off = np.full(np.shape(az_off), cell_antenna.el_tilt)
    else:
        # the radar is seen slightly above the horizon from the eNB
        el_off = -np.asarray(site_depression)
    return sector_gain_dbi(az_off, el_off, cell_antenna)


def radar_pattern_gain_db(radar: RadarConfig, az_off, el_off) -> np.ndarray:
    """Radar relative gain toward an (azimuth, elevation) offset, floored at the back lobe."""
    p = radar.pattern
    total = np.asarray(radar_gain_db(az_off, p, p.theta_3db_az)) + np.asarray(
        radar_gain_db(el_off, p, p.theta_3db_el)
    )
    return np.maximum(total, p.backlobe_floor_db)


def coupling_gain(
    radar: RadarConfig,
    boresight_az: float,
    enb: Cell,
    distance_km: float,
    prop: PropagationParams,
    coupling: CouplingConfig = CouplingConfig(),
) -> CouplingResult:
    """Received pulse power at one eNB for one radar boresight.

    Path loss is evaluated at the scenario distance; the geometry only sets the
    antenna angles on both ends.
    """
    if distance_km <= 0:
        raise DomainError(f"distance_km must be > 0 (got {distance_km})")
    site = np.asarray(enb.site_pos, dtype=float)
    az_ship_to_site, az_site_to_ship, depression = _geometry(radar, site, distance_km, prop)

    delta_az = float(off_boresight_deg(boresight_az, az_ship_to_site))
    radar_gain = float(radar_pattern_gain_db(radar, delta_az, depression))
    enb_gain = float(_enb_gain_dbi(enb.azimuth_deg, az_site_to_ship, depression, enb.antenna, coupling))
    loss = radar_path_loss_db(distance_km, prop)
    return CouplingResult(
        radar_off_boresight_deg=delta_az,
        enb_gain_toward_radar_db=enb_gain,
        path_loss_db=loss,
        received_pulse_power_dbm=boresight_eirp_dbm(radar) + radar_gain - loss + enb_gain,
    )


def beam_coupling_table_mw(
    radar: RadarConfig,
    beam_azimuths: np.ndarray,
    layout: NetworkLayout,
    distance_km: float,
    prop: PropagationParams,
    coupling: CouplingConfig = CouplingConfig(),
) -> np.ndarray:
    """Received pulse power (mW) for every beam position × cell, shape (n_beams, n_cells)."""
    if distance_km <= 0:
        raise DomainError(f"distance_km must be > 0 (got {distance_km})")
    sites = layout.cell_sites
    az_ship_to_site, az_site_to_ship, depression = _geometry(radar, sites, distance_km, prop)
    antenna = layout.cells[0].antenna
    enb_gain = _enb_gain_dbi(layout.cell_azimuths, az_site_to_ship, depression, antenna, coupling)

    delta_az = off_boresight_deg(np.asarray(beam_azimuths)[:, None], az_ship_to_site[None, :])
    radar_gain = radar_pattern_gain_db(radar, delta_az, np.broadcast_to(depression, delta_az.shape))
    loss = radar_path_loss_db(distance_km, prop)
    received_dbm = boresight_eirp_dbm(radar) + radar_gain - loss + enb_gain[None, :]
    return dbm_to_mw(received_dbm)


# ── Spectrum ───────────────────────────────────────────────────────────────────

def _sinc2_cdf(u: np.ndarray) -> np.ndarray:
    """∫₀ᵘ sinc²(x) dx with sinc(x) = sin(πx)/(πx); odd in u."""
    si, _ = sici(2.0 * np.pi * u)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(u == 0.0, 0.0, np.sin(np.pi * u) ** 2 / (np.pi * u))
    return (si - tail) / np.pi


def spectral_weights(
    pulse_width_s: float,
    subcarrier_spacing_hz: float,
    n_subcarriers: int,
    center_index: int,
) -> np.ndarray:
    """Share of a rectangular pulse's power falling into each subcarrier bin, summing to 1."""
    if pulse_width_s <= 0:
        raise DomainError("pulse_width_s must be > 0")
    if not 0 <= center_index < n_subcarriers:
        raise DomainError(f"center_index {center_index} outside [0, {n_subcarriers})")
    offsets = np.arange(n_subcarriers) - center_index
    lo = (offsets - 0.5) * subcarrier_spacing_hz * pulse_width_s
    hi = (offsets + 0.5) * subcarrier_spacing_hz * pulse_width_s
    mass = _sinc2_cdf(hi) - _sinc2_cdf(lo)
    return mass / mass.sum()


# ── Time ───────────────────────────────────────────────────────────────────────

def symbol_overlap_fractions(
    pulse_start_s: float,
    pulse_width_s: float,
    tti_start_s: float,
    symbol_duration_s: float,
    n_symbols: int,
) -> np.ndarray:
    """Fraction of each OFDM symbol covered by the pulse."""
    if pulse_width_s <= 0 or symbol_duration_s <= 0:
        raise DomainError("durations must be > 0")
    edges = tti_start_s + symbol_duration_s * np.arange(n_symbols + 1)
    overlap = np.minimum(edges[1:], pulse_start_s + pulse_width_s) - np.maximum(
        edges[:-1], pulse_start_s
    )
    overlap[overlap < _MIN_OVERLAP_S] = 0.0
    return overlap / symbol_duration_s


def overlay_radar_interference(
    grid: ResourceGrid,
    pulses: Sequence[PulseEvent],
    received_power_mw: float | Sequence[float],
    weights: np.ndarray,
    tti_start_s: float,
    symbol_duration_s: float,
) -> ResourceGrid:
    """Add every pulse's energy to the grid: power × symbol overlap × bin weight.

    ``received_power_mw`` is one value for all pulses or one per pulse.
    """
    if not pulses:
        return grid
    powers = np.broadcast_to(np.asarray(received_power_mw, dtype=float), (len(pulses),))
    fractions = np.array(
        [
            symbol_overlap_fractions(
                p.start_s, p.duration_s, tti_start_s, symbol_duration_s, grid.n_symbols
            )
            for p in pulses
        ]
    )
    added = np.einsum("p,ps,k->sk", powers, fractions, weights)
    return ResourceGrid(
        grid.tti_index, grid.n_symbols, grid.n_subcarriers, grid.radar_interference_mw + added
    )


def cell_radar_grids_mw(
    pulses: Sequence[PulseEvent],
    coupling_table_mw: np.ndarray,
    weights: np.ndarray,
    tti_start_s: float,
    symbol_duration_s: float,
    n_symbols: int,
) -> np.ndarray:
    """Interference for every cell in one TTI, shape (n_cells, n_symbols, n_subcarriers)."""
    n_cells = coupling_table_mw.shape[1]
    if not pulses:
        return np.zeros((n_cells, n_symbols, len(weights)))
    fractions = np.array(
        [
            symbol_overlap_fractions(p.start_s, p.duration_s, tti_start_s, symbol_duration_s, n_symbols)
            for p in pulses
        ]
    )
    powers = coupling_table_mw[[p.beam_index for p in pulses]]
    return np.einsum("pc,ps,k->csk", powers, fractions, weights)


def center_subcarrier(n_subcarriers: int, offset: int = 0) -> int:
    index = n_subcarriers // 2 + offset
    if not 0 <= index < n_subcarriers:
        raise DomainError(f"center subcarrier offset {offset} leaves the carrier")
    return index


def overlap_duration_s(pulse: PulseEvent, tti_start_s: float, symbol_duration_s: float, n_symbols: int) -> float:
    span_end = tti_start_s + n_symbols * symbol_duration_s
    return max(0.0, min(pulse.end_s, span_end) - max(pulse.start_s, tti_start_s))

