"""Path loss: free space, the radar line-of-sight switch to ITM, and urban macro."""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from radar_coexist.errors import DomainError
from radar_coexist.itm import ItmMode, itm_area_prediction
from radar_coexist.models import PathLossModel, PropagationParams, UmaParams

logger = logging.getLogger(__name__)

_SPEED_OF_LIGHT = 299_792_458.0


# ── Radar → eNB ────────────────────────────────────────────────────────────────

def fspl_db(f_mhz: float, r_km: float) -> float:
    """Free-space path loss: 20·log10(f) + 20·log10(r) + 32.45 (f in MHz, r in km)."""
    if f_mhz <= 0:
        raise DomainError(f"f_mhz must be > 0 (got {f_mhz})")
    if r_km <= 0:
        raise DomainError(f"r_km must be > 0 (got {r_km})")
    return 20.0 * math.log10(f_mhz) + 20.0 * math.log10(r_km) + 32.45


def los_horizon_km(h1_m: float, h2_m: float) -> float:
    """Radio line-of-sight range over a 4/3 earth: 4.1·(√h1 + √h2)."""
    for name, h in (("h1_m", h1_m), ("h2_m", h2_m)):
        if h <= 0:
            raise DomainError(f"{name} must be > 0 (got {h})")
    return 4.1 * (math.sqrt(h1_m) + math.sqrt(h2_m))


def itm_loss_db(d_km: float, p: PropagationParams) -> float:
    """Longley-Rice area-prediction loss between the radar and an eNB."""
    return itm_area_prediction(
        d_km, p.freq_mhz, p.radar_antenna_height_m, p.lte_antenna_height_m, p.itm
    ).loss_db


def radar_path_loss_db(d_km: float, p: PropagationParams) -> float:
    """FSPL inside the radio horizon, ITM at and beyond it."""
    if d_km <= 0:
        raise DomainError(f"d_km must be > 0 (got {d_km})")
    if d_km < los_horizon_km(p.radar_antenna_height_m, p.lte_antenna_height_m):
        return fspl_db(p.freq_mhz, d_km)
    return itm_loss_db(d_km, p)


def path_loss_table(
    model: PathLossModel,
    p: PropagationParams,
    from_km: float,
    to_km: float,
    step_km: float,
) -> list[tuple[float, float, Optional[ItmMode]]]:
    """Rows ``(distance_km, loss_db, itm_mode)`` over an inclusive distance grid."""
    if step_km <= 0:
        raise DomainError("step_km must be > 0")
    if to_km < from_km:
        raise DomainError("to_km must be >= from_km")
    n = int(math.floor((to_km - from_km) / step_km + 1e-9))
    horizon = los_horizon_km(p.radar_antenna_height_m, p.lte_antenna_height_m)

    rows: list[tuple[float, float, Optional[ItmMode]]] = []
    for i in range(n + 1):
        d = round(from_km + i * step_km, 9)
        if model is PathLossModel.fspl or (model is PathLossModel.combined and d < horizon):
            rows.append((d, fspl_db(p.freq_mhz, d), None))
            continue
        result = itm_area_prediction(
            d, p.freq_mhz, p.radar_antenna_height_m, p.lte_antenna_height_m, p.itm
        )
        rows.append((d, result.loss_db, result.mode))
    return rows


# ── UE → eNB (urban macro) ─────────────────────────────────────────────────────

def uma_los_probability(d_m: ArrayLike) -> float | np.ndarray:
    """P(LoS) = min(18/d, 1)·(1 − e^(−d/63)) + e^(−d/63), d in metres (2D)."""
    d = np.maximum(np.asarray(d_m, dtype=float), 1e-9)
    tail = np.exp(-d / 63.0)
    prob = np.minimum(18.0 / d, 1.0) * (1.0 - tail) + tail
    return float(prob) if np.ndim(d_m) == 0 else prob


def _uma_los_db(d: np.ndarray, fc_ghz: float, h_bs: float, h_ut: float) -> np.ndarray:
    h_bs_eff = h_bs - 1.0
    h_ut_eff = h_ut - 1.0
    breakpoint_m = 4.0 * h_bs_eff * h_ut_eff * fc_ghz * 1e9 / _SPEED_OF_LIGHT
    near = 22.0 * np.log10(d) + 28.0 + 20.0 * np.log10(fc_ghz)
    far = (
        40.0 * np.log10(d)
        + 7.8
        - 18.0 * np.log10(h_bs_eff)
        - 18.0 * np.log10(h_ut_eff)
        + 2.0 * np.log10(fc_ghz)
    )
    return np.where(d < breakpoint_m, near, far)


def _uma_nlos_db(d: np.ndarray, fc_ghz: float, h_bs: float, h_ut: float, u: UmaParams) -> np.ndarray:
    w, h = u.street_width_m, u.building_height_m
    return (
        161.04
        - 7.1 * np.log10(w)
        + 7.5 * np.log10(h)
        - (24.37 - 3.7 * (h / h_bs) ** 2) * np.log10(h_bs)
        + (43.42 - 3.1 * np.log10(h_bs)) * (np.log10(d) - 3.0)
        + 20.0 * np.log10(fc_ghz)
        - (3.2 * np.log10(11.75 * h_ut) ** 2 - 4.97)
    )


def uma_pathloss_db(
    d_m: ArrayLike,
    is_los: ArrayLike,
    p: PropagationParams,
    indoor: ArrayLike = False,
) -> float | np.ndarray:
    """Urban-macro path loss in dB for 3D distance ``d_m``.

    The NLoS branch never drops below the LoS value at the same distance.
    Indoor terminals pay the fixed building penetration loss on top.
    """
    u = p.uma
    d = np.asarray(d_m, dtype=float)
    if np.any(d < u.min_distance_m):
        raise DomainError(f"UE-eNB distance must be >= {u.min_distance_m} m")
    fc_ghz = p.freq_mhz / 1000.0
    h_bs, h_ut = p.lte_antenna_height_m, u.ue_height_m

    los = _uma_los_db(d, fc_ghz, h_bs, h_ut)
    nlos = np.maximum(_uma_nlos_db(d, fc_ghz, h_bs, h_ut, u), los)
    loss = np.where(np.asarray(is_los, dtype=bool), los, nlos)
    loss = loss + np.where(np.asarray(indoor, dtype=bool), u.indoor_penetration_db, 0.0)
    return float(loss) if loss.ndim == 0 else loss


def sample_shadowing_db(
    is_los: ArrayLike,
    rng: np.random.Generator,
    u: UmaParams = UmaParams(),
) -> float | np.ndarray:
    """Zero-mean log-normal shadowing (in dB) with the LoS or NLoS sigma."""
    los = np.asarray(is_los, dtype=bool)
    if not u.shadowing_enabled:
        zeros = np.zeros(los.shape)
        return float(zeros) if los.ndim == 0 else zeros
    sigma = np.where(los, u.los_sigma_db, u.nlos_sigma_db)
    draw = rng.standard_normal(los.shape) * sigma
    return float(draw) if los.ndim == 0 else draw
