"""Antenna gain patterns: radar cosine aperture and 3GPP sector antennas.

All functions accept scalars or numpy arrays of angles (degrees) and return
gains in dB with the same shape.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

from radar_coexist.models import PatternKind, RadarPatternParams, SectorPatternParams

# Cosine-aperture lobe argument factor (degrees): u = 68.8·π·sin θ / θ_3dB
_LOBE_SCALE_DEG = 68.8
_MASK_SLOPE_DB = 17.51
_MASK_KNEE = 2.331


def wrap_deg(angle: ArrayLike) -> np.ndarray:
    """Wrap angles to [-180, 180)."""
    return (np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0


def _as_output(value: np.ndarray, like: ArrayLike) -> float | np.ndarray:
    return float(value) if np.ndim(like) == 0 else value


# ── Radar ──────────────────────────────────────────────────────────────────────

def transition_angle_deg(theta_3db: float, sidelobe_transition_db: float) -> float:
    """Angle where the sidelobe mask equals -sidelobe_transition_db."""
    return float(np.exp(sidelobe_transition_db / _MASK_SLOPE_DB) / _MASK_KNEE * theta_3db)


def floor_crossing_angle_deg(theta_3db: float, backlobe_floor_db: float) -> float:
    """Angle where the sidelobe mask reaches the back-lobe floor."""
    return float(np.exp(-backlobe_floor_db / _MASK_SLOPE_DB) / _MASK_KNEE * theta_3db)


def _cosine_lobe_db(theta: np.ndarray, theta_3db: float) -> np.ndarray:
    u = _LOBE_SCALE_DEG * np.pi * np.sin(np.radians(theta)) / theta_3db
    denom = 1.0 - (2.0 * u / np.pi) ** 2
    singular = np.abs(denom) < 1e-9
    amplitude = np.where(singular, np.pi / 4.0, np.cos(u) / np.where(singular, 1.0, denom))
    return 20.0 * np.log10(np.maximum(np.abs(amplitude), 1e-300))


def radar_gain_db(
    theta_off: ArrayLike,
    p: RadarPatternParams,
    theta_3db: float | None = None,
) -> float | np.ndarray:
    """Relative radar gain (≤ 0 dB) at theta_off degrees from boresight.

    Theoretical cosine-aperture lobe inside the transition angle, the
    logarithmic sidelobe mask beyond it, and the constant back-lobe floor once
    the mask falls below it. ``theta_3db`` defaults to the azimuth beamwidth.
    """
    width = p.theta_3db_az if theta_3db is None else theta_3db
    theta = np.abs(wrap_deg(theta_off))
    t_switch = transition_angle_deg(width, p.sidelobe_transition_db)

    lobe = _cosine_lobe_db(np.minimum(theta, t_switch), width)
    with np.errstate(divide="ignore"):
        mask = -_MASK_SLOPE_DB * np.log(np.maximum(_MASK_KNEE * theta / width, 1e-300))
    gain = np.where(theta < t_switch, lobe, np.maximum(mask, p.backlobe_floor_db))
    gain = np.minimum(gain, 0.0)
    return _as_output(gain, theta_off)


# ── Sector ─────────────────────────────────────────────────────────────────────

def sector_element_gain_db(
    theta_off: ArrayLike,
    tilt: float,
    theta_3db: float,
    a_m: float,
) -> float | np.ndarray:
    """Parabolic element pattern: -min(12·((θ - tilt)/θ_3dB)², A_m)."""
    theta = np.asarray(theta_off, dtype=float)
    gain = -np.minimum(12.0 * ((theta - tilt) / theta_3db) ** 2, a_m)
    return _as_output(gain, theta_off)


def sector_composite_gain_db(
    az_off: ArrayLike,
    el_off: ArrayLike,
    p: SectorPatternParams,
) -> float | np.ndarray:
    """Composite relative gain: dB-sum of azimuth and elevation patterns floored at -A_m.

    ``az_off`` is measured from the sector azimuth; ``el_off`` is the depression
    angle below the horizon (same convention as ``el_tilt``).
    """
    g_a = sector_element_gain_db(wrap_deg(az_off), p.az_tilt, p.theta_3db_az, p.a_m)
    g_e = sector_element_gain_db(el_off, p.el_tilt, p.theta_3db_el, p.a_m)
    gain = -np.minimum(-(np.asarray(g_a) + np.asarray(g_e)), p.a_m)
    like = az_off if np.ndim(az_off) >= np.ndim(el_off) else el_off
    return _as_output(gain, like)


def sector_gain_dbi(az_off: ArrayLike, el_off: ArrayLike, p: SectorPatternParams):
    """Absolute sector gain: peak gain plus composite relative gain."""
    return p.peak_gain_dbi + sector_composite_gain_db(az_off, el_off, p)


# ── Pattern Cuts ───────────────────────────────────────────────────────────────

def _angle_grid(lo: float, hi: float, step_deg: float) -> np.ndarray:
    n = int(round((hi - lo) / step_deg))
    return lo + step_deg * np.arange(n + 1)


def pattern_cut(
    which: PatternKind,
    step_deg: float,
    radar: RadarPatternParams | None = None,
    sector: SectorPatternParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Angle/gain arrays for one pattern cut.

    ``sector-az`` is taken at the elevation tilt, ``sector-el`` at the azimuth
    tilt, ``sector-composite`` is the azimuth cut at the horizon (el = 0°).
    """
    if step_deg <= 0:
        raise ValueError("step_deg must be > 0")
    radar = radar or RadarPatternParams()
    sector = sector or SectorPatternParams()

    if which is PatternKind.radar:
        angles = _angle_grid(-180.0, 180.0, step_deg)
        return angles, np.asarray(radar_gain_db(angles, radar))
    if which is PatternKind.sector_el:
        angles = _angle_grid(-90.0, 90.0, step_deg)
        gains = sector_element_gain_db(angles, sector.el_tilt, sector.theta_3db_el, sector.a_m)
        return angles, np.asarray(gains)
    angles = _angle_grid(-180.0, 180.0, step_deg)
    if which is PatternKind.sector_az:
        gains = sector_element_gain_db(angles, sector.az_tilt, sector.theta_3db_az, sector.a_m)
        return angles, np.asarray(gains)
    return angles, np.asarray(sector_composite_gain_db(angles, np.zeros_like(angles), sector))
