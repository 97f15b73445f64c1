"""Rotating radar emitter: scan arithmetic, pulse train and radiated EIRP."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from radar_coexist.antennas import radar_gain_db, wrap_deg
from radar_coexist.models import PulseEvent, RadarConfig, ScanTiming

_EPS = 1e-9


def scan_timing(cfg: RadarConfig) -> ScanTiming:
    """Scan period, beam positions and dwell arithmetic for one configuration."""
    scan_period = 60.0 / cfg.rotation_rpm
    n_beams = max(1, math.ceil(360.0 / cfg.az_beamwidth_deg - _EPS))
    dwell = scan_period / n_beams
    return ScanTiming(
        scan_period_s=scan_period,
        n_beam_positions=n_beams,
        dwell_time_s=dwell,
        pulses_per_dwell=max(1, round(dwell / cfg.pri_s)),
        pulses_per_scan=round(scan_period / cfg.pri_s),
        beam_step_deg=360.0 / n_beams,
    )


def default_boresight_deg(cfg: RadarConfig) -> float:
    """Boresight at t = 0: configured, otherwise pointing back at the LTE centre."""
    if cfg.initial_boresight_deg is not None:
        return cfg.initial_boresight_deg % 360.0
    return (cfg.bearing_deg + 180.0) % 360.0


def pulse_train(
    cfg: RadarConfig,
    t0: float,
    t1: float,
    initial_boresight_deg: float | None = None,
) -> list[PulseEvent]:
    """Pulses starting in ``[t0, t1)`` on a free-running clock (pulse k at k·PRI).

    The boresight holds still for a dwell and then steps by 360/n_beam_positions,
    so the pattern repeats every scan period.
    """
    if t1 <= t0:
        return []
    timing = scan_timing(cfg)
    start_az = default_boresight_deg(cfg) if initial_boresight_deg is None else initial_boresight_deg

    k0 = math.ceil(t0 / cfg.pri_s - _EPS)
    k1 = math.ceil(t1 / cfg.pri_s - _EPS)
    events: list[PulseEvent] = []
    for k in range(k0, k1):
        start = k * cfg.pri_s
        beam = math.floor(start / timing.dwell_time_s + _EPS)
        first_in_dwell = math.ceil(beam * timing.dwell_time_s / cfg.pri_s - _EPS)
        events.append(
            PulseEvent(
                start_s=start,
                duration_s=cfg.pulse_width_s,
                boresight_az_deg=(start_az + (beam % timing.n_beam_positions) * timing.beam_step_deg)
                % 360.0,
                beam_index=beam % timing.n_beam_positions,
                pulse_index_in_dwell=k - first_in_dwell,
            )
        )
    return events


def beam_azimuths_deg(cfg: RadarConfig, initial_boresight_deg: float | None = None) -> np.ndarray:
    """Boresight azimuth of every beam position, indexed like ``PulseEvent.beam_index``."""
    timing = scan_timing(cfg)
    start_az = default_boresight_deg(cfg) if initial_boresight_deg is None else initial_boresight_deg
    return (start_az + np.arange(timing.n_beam_positions) * timing.beam_step_deg) % 360.0


# ── Footprint & EIRP ───────────────────────────────────────────────────────────

def footprint_width_km(r_km: float, az_beamwidth_deg: float) -> float:
    """Illuminated width 2·R·tan(θ) at range R, with the full beamwidth inside tan."""
    return 2.0 * r_km * math.tan(math.radians(az_beamwidth_deg))


def footprint_approx_km(r_km: float) -> float:
    return 0.03 * r_km


def boresight_eirp_dbm(cfg: RadarConfig) -> float:
    return cfg.peak_power_dbm + cfg.antenna_gain_dbi - cfg.insertion_loss_db


def emitted_eirp_dbm(cfg: RadarConfig, off_boresight_deg: ArrayLike) -> float | np.ndarray:
    """EIRP toward a direction ``off_boresight_deg`` away from the main beam."""
    return boresight_eirp_dbm(cfg) + radar_gain_db(off_boresight_deg, cfg.pattern)


def radar_position_m(cfg: RadarConfig, distance_km: float | None = None) -> np.ndarray:
    """Ship position relative to the LTE centre, metres."""
    d = cfg.distance_km if distance_km is None else distance_km
    if d is None:
        raise ValueError("radar position requested while the radar is disabled")
    bearing = math.radians(cfg.bearing_deg)
    return np.array([d * 1000.0 * math.cos(bearing), d * 1000.0 * math.sin(bearing)])


def off_boresight_deg(boresight_az_deg: ArrayLike, target_az_deg: ArrayLike) -> np.ndarray:
    """Signed azimuth offset of a target from the boresight, wrapped to [-180, 180)."""
    return wrap_deg(np.asarray(target_az_deg) - np.asarray(boresight_az_deg))
