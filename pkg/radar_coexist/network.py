"""Seven-site hexagonal macro layout with wrap-around, UE drops, attachment and mobility."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from radar_coexist.antennas import sector_gain_dbi, wrap_deg
from radar_coexist.models import LteConfig, PowerControl, PropagationParams, SectorPatternParams
from radar_coexist.propagation import sample_shadowing_db, uma_los_probability, uma_pathloss_db

logger = logging.getLogger(__name__)

N_SITES = 7
CELLS_PER_SITE = 3
N_CELLS = N_SITES * CELLS_PER_SITE
CELL_AZIMUTHS_DEG = (90.0, 210.0, 330.0)


# ── Layout ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Cell:
    cell_id: int
    site_id: int
    site_pos: tuple[float, float]
    azimuth_deg: float
    antenna: SectorPatternParams
    height_m: float
    noise_figure_db: float
    carrier_bandwidth_hz: float
    n_rb: int
    n_subcarriers: int


@dataclass(frozen=True)
class NetworkLayout:
    isd_m: float
    sites: np.ndarray
    cells: tuple[Cell, ...]
    wraparound_offsets: np.ndarray
    area_extent_m: tuple[float, float]

    @property
    def image_shifts(self) -> np.ndarray:
        """The zero shift followed by the six wrap-around translations, shape (7, 2)."""
        return np.vstack([np.zeros((1, 2)), self.wraparound_offsets])

    @property
    def cell_sites(self) -> np.ndarray:
        return np.array([c.site_pos for c in self.cells])

    @property
    def cell_azimuths(self) -> np.ndarray:
        return np.array([c.azimuth_deg for c in self.cells])


def build_layout(lte: LteConfig, prop: PropagationParams | None = None) -> NetworkLayout:
    """Centre site at the origin, six neighbours at ISD, three sectors per site."""
    isd = lte.isd_m
    height = prop.lte_antenna_height_m if prop else 25.0
    angles = np.radians(60.0 * np.arange(6))
    sites = np.vstack([np.zeros((1, 2)), isd * np.column_stack([np.cos(angles), np.sin(angles)])])

    # seven-site cluster tiling: |v| = ISD·√7, rotated atan(√3/5) from the first neighbour
    wrap_angles = np.radians(math.degrees(math.atan2(math.sqrt(3.0), 5.0)) + 60.0 * np.arange(6))
    wraps = isd * math.sqrt(7.0) * np.column_stack([np.cos(wrap_angles), np.sin(wrap_angles)])

    cells = tuple(
        Cell(
            cell_id=CELLS_PER_SITE * s + j,
            site_id=s,
            site_pos=(float(sites[s, 0]), float(sites[s, 1])),
            azimuth_deg=az,
            antenna=lte.antenna,
            height_m=height,
            noise_figure_db=lte.enb_noise_figure_db,
            carrier_bandwidth_hz=lte.carrier_bandwidth_hz,
            n_rb=lte.n_rb,
            n_subcarriers=lte.n_subcarriers,
        )
        for s in range(N_SITES)
        for j, az in enumerate(CELL_AZIMUTHS_DEG)
    )
    return NetworkLayout(
        isd_m=isd,
        sites=sites,
        cells=cells,
        wraparound_offsets=wraps,
        area_extent_m=(3.2 * isd, 3.2 * isd),
    )


def wrapped_displacement(points: ArrayLike, targets: ArrayLike, layout: NetworkLayout) -> np.ndarray:
    """Displacement from every point to the nearest wrap-around image of every target.

    Returns shape (n_points, n_targets, 2).
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    images = t[None, :, None, :] + layout.image_shifts[None, None, :, :]
    delta = images - p[:, None, None, :]
    nearest = np.argmin(np.einsum("ntid,ntid->nti", delta, delta), axis=2)
    rows, cols = np.indices(nearest.shape)
    return delta[rows, cols, nearest]


def wrapped_distance_m(a: ArrayLike, b: ArrayLike, layout: NetworkLayout) -> np.ndarray:
    """Pairwise wrap-around distance, shape (len(a), len(b))."""
    return np.linalg.norm(wrapped_displacement(a, b, layout), axis=2)


def reenter(points: np.ndarray, layout: NetworkLayout) -> np.ndarray:
    """Fold points back into the cluster: subtract the wrap shift of their nearest image site."""
    images = layout.sites[None, :, :] + layout.image_shifts[:, None, :]
    flat = images.reshape(-1, 2)
    nearest = np.argmin(
        np.linalg.norm(points[:, None, :] - flat[None, :, :], axis=2), axis=1
    )
    shift_index = nearest // N_SITES
    return points - layout.image_shifts[shift_index]


# ── Users ──────────────────────────────────────────────────────────────────────

@dataclass
class UserTerminal:
    ue_id: int
    pos: tuple[float, float]
    height_m: float
    indoor: bool
    speed_mps: float
    heading_deg: float
    serving_cell: int = -1
    drop_cell: int = -1
    shadowing_db: np.ndarray = field(default_factory=lambda: np.zeros(N_CELLS))
    los: np.ndarray = field(default_factory=lambda: np.zeros(N_CELLS, dtype=bool))
    tx_power_max_dbm: float = 23.0


def _in_cell_region(point: np.ndarray, cell: Cell, isd: float, min_distance_m: float) -> bool:
    rel = point - np.asarray(cell.site_pos)
    dist = float(np.hypot(*rel))
    if dist < min_distance_m:
        return False
    for k in range(3):
        ang = math.radians(60.0 * k)
        if abs(rel[0] * math.cos(ang) + rel[1] * math.sin(ang)) > isd / 2.0:
            return False
    bearing = math.degrees(math.atan2(rel[1], rel[0]))
    return abs(float(wrap_deg(bearing - cell.azimuth_deg))) <= 60.0


def sample_position(cell: Cell, isd: float, min_distance_m: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point inside the cell's 120° slice of its site hexagon."""
    radius = isd / math.sqrt(3.0)
    site = np.asarray(cell.site_pos)
    while True:
        point = site + rng.uniform(-radius, radius, size=2)
        if _in_cell_region(point, cell, isd, min_distance_m):
            return point


def drop_users(
    layout: NetworkLayout,
    lte: LteConfig,
    rng: np.random.Generator,
    prop: PropagationParams | None = None,
    heading_rng: np.random.Generator | None = None,
) -> list[UserTerminal]:
    """Drop ``ue_per_cell`` terminals uniformly into every cell's coverage region.

    Headings come from ``heading_rng`` when given so that mobility has its own stream.
    """
    heading_rng = heading_rng or rng
    uma = (prop or PropagationParams()).uma
    users: list[UserTerminal] = []
    for cell in layout.cells:
        for _ in range(lte.ue_per_cell):
            pos = sample_position(cell, layout.isd_m, uma.min_distance_m, rng)
            users.append(
                UserTerminal(
                    ue_id=len(users),
                    pos=(float(pos[0]), float(pos[1])),
                    height_m=uma.ue_height_m,
                    indoor=bool(rng.random() < lte.indoor_fraction),
                    speed_mps=lte.ue_speed_mps,
                    heading_deg=float(heading_rng.uniform(0.0, 360.0)),
                    drop_cell=cell.cell_id,
                    tx_power_max_dbm=lte.power_control.p_max_dbm,
                )
            )
    return users


def draw_link_states(
    users: list[UserTerminal],
    layout: NetworkLayout,
    prop: PropagationParams,
    rng: np.random.Generator,
) -> None:
    """Fix the LoS state and shadowing of every UE-cell link for the run."""
    if not users:
        return
    d2d = wrapped_distance_m([u.pos for u in users], layout.cell_sites, layout)
    p_los = uma_los_probability(d2d)
    los = rng.random(d2d.shape) < p_los
    shadow = sample_shadowing_db(los, rng, prop.uma)
    for i, ue in enumerate(users):
        ue.los = los[i]
        ue.shadowing_db = np.asarray(shadow[i], dtype=float)


# ── Link Gains ─────────────────────────────────────────────────────────────────

@dataclass
class NetworkState:
    """Structure-of-arrays view of the UE population used inside the TTI loop."""

    layout: NetworkLayout
    positions: np.ndarray
    headings_deg: np.ndarray
    speeds_mps: np.ndarray
    heights_m: np.ndarray
    indoor: np.ndarray
    los: np.ndarray
    shadowing_db: np.ndarray
    serving: np.ndarray

    @classmethod
    def from_users(cls, layout: NetworkLayout, users: list[UserTerminal]) -> NetworkState:
        n = len(users)
        return cls(
            layout=layout,
            positions=np.array([u.pos for u in users], dtype=float).reshape(n, 2),
            headings_deg=np.array([u.heading_deg for u in users], dtype=float),
            speeds_mps=np.array([u.speed_mps for u in users], dtype=float),
            heights_m=np.array([u.height_m for u in users], dtype=float),
            indoor=np.array([u.indoor for u in users], dtype=bool),
            los=np.array([u.los for u in users], dtype=bool).reshape(n, N_CELLS),
            shadowing_db=np.array([u.shadowing_db for u in users], dtype=float).reshape(n, N_CELLS),
            serving=np.array([u.serving_cell for u in users], dtype=int),
        )

    @property
    def n_users(self) -> int:
        return len(self.serving)

    def users_of(self, cell_id: int) -> np.ndarray:
        return np.flatnonzero(self.serving == cell_id)


def link_gain_db(
    positions: ArrayLike,
    heights_m: ArrayLike,
    indoor: ArrayLike,
    los: np.ndarray,
    shadowing_db: np.ndarray,
    layout: NetworkLayout,
    prop: PropagationParams,
    apply_shadowing: bool = True,
) -> np.ndarray:
    """Coupling gain UE → cell receiver in dB, shape (n_users, n_cells).

    Path loss over the nearest wrap-around image, shadowing, indoor penetration
    and the absolute sector gain toward the UE. Distances below the UMa minimum
    are clamped to it.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.shape[0] == 0 or pos.size == 0:
        return np.zeros((0, len(layout.cells)))
    h_ut = np.asarray(heights_m, dtype=float)[:, None]
    delta = wrapped_displacement(pos, layout.cell_sites, layout)
    d2d = np.hypot(delta[..., 0], delta[..., 1])
    dh = prop.lte_antenna_height_m - h_ut
    d3d = np.maximum(np.hypot(d2d, dh), prop.uma.min_distance_m)

    loss = uma_pathloss_db(d3d, los, prop, indoor=np.asarray(indoor, dtype=bool)[:, None])
    if apply_shadowing:
        loss = loss + shadowing_db

    # angles seen from the site toward the UE
    az_to_ue = np.degrees(np.arctan2(-delta[..., 1], -delta[..., 0]))
    depression = np.degrees(np.arctan2(dh, np.maximum(d2d, 1e-9)))
    antenna = layout.cells[0].antenna
    gain = sector_gain_dbi(az_to_ue - layout.cell_azimuths[None, :], depression, antenna)
    return gain - loss


def state_link_gain_db(state: NetworkState, prop: PropagationParams) -> np.ndarray:
    return link_gain_db(
        state.positions,
        state.heights_m,
        state.indoor,
        state.los,
        state.shadowing_db,
        state.layout,
        prop,
        apply_shadowing=prop.uma.shadowing_enabled,
    )


# ── Attachment ─────────────────────────────────────────────────────────────────

def _best_cells(users: list[UserTerminal], layout: NetworkLayout, prop: PropagationParams) -> np.ndarray:
    gains = link_gain_db(
        [u.pos for u in users],
        [u.height_m for u in users],
        [u.indoor for u in users],
        np.array([u.los for u in users]),
        np.array([u.shadowing_db for u in users]),
        layout,
        prop,
        apply_shadowing=prop.uma.shadowing_enabled,
    )
    return np.argmax(gains, axis=1)


def attach_users(
    users: list[UserTerminal],
    layout: NetworkLayout,
    prop: PropagationParams,
    lte: LteConfig,
    drop_rng: np.random.Generator,
    shadow_rng: np.random.Generator,
) -> dict[int, int]:
    """Attach every UE to its strongest cell, then rebalance to ``ue_per_cell`` each.

    Surplus UEs of overloaded cells are re-dropped into an underloaded cell
    (fresh position and link states) until they attach there. After
    ``rebalance_attempts`` failed re-drops a UE is assigned to the cell directly.
    """
    if not users:
        return {}
    best = _best_cells(users, layout, prop)
    for ue, cell_id in zip(users, best):
        ue.serving_cell = int(cell_id)

    target = lte.ue_per_cell
    moves = 0
    while True:
        counts = np.bincount([u.serving_cell for u in users], minlength=N_CELLS)
        over = np.flatnonzero(counts > target)
        under = np.flatnonzero(counts < target)
        if len(over) == 0 or len(under) == 0:
            break
        src, dst = int(over[0]), int(under[0])
        ue = max((u for u in users if u.serving_cell == src), key=lambda u: u.ue_id)
        cell = layout.cells[dst]
        placed = False
        for _ in range(lte.rebalance_attempts):
            pos = sample_position(cell, layout.isd_m, prop.uma.min_distance_m, drop_rng)
            ue.pos = (float(pos[0]), float(pos[1]))
            draw_link_states([ue], layout, prop, shadow_rng)
            if int(_best_cells([ue], layout, prop)[0]) == dst:
                placed = True
                break
        if not placed:
            logger.warning("UE %d forced onto cell %d", ue.ue_id, dst)
        ue.serving_cell = dst
        ue.drop_cell = dst
        moves += 1
    logger.debug("attachment rebalanced with %d re-dropped UEs", moves)
    return {u.ue_id: u.serving_cell for u in users}


# ── Mobility & Power ───────────────────────────────────────────────────────────

def move_users(state: NetworkState, dt_s: float) -> None:
    """Straight-line motion; terminals leaving the cluster re-enter through wrap-around."""
    if dt_s <= 0 or state.n_users == 0:
        return
    heading = np.radians(state.headings_deg)
    step = (state.speeds_mps * dt_s)[:, None] * np.column_stack([np.cos(heading), np.sin(heading)])
    state.positions = reenter(state.positions + step, state.layout)


def uplink_tx_power_dbm(
    n_rb_granted: ArrayLike,
    pathloss_db: ArrayLike,
    pc: PowerControl = PowerControl(),
) -> float | np.ndarray:
    """Open-loop fractional power control: min(Pmax, P0 + 10·log10(n) + α·PL)."""
    n = np.asarray(n_rb_granted, dtype=float)
    if np.any(n < 1):
        raise ValueError("n_rb_granted must be >= 1")
    power = np.minimum(pc.p_max_dbm, pc.p0_dbm + 10.0 * np.log10(n) + pc.alpha * np.asarray(pathloss_db))
    return float(power) if np.ndim(power) == 0 else power


def layout_rows(layout: NetworkLayout, users: list[UserTerminal] | None = None) -> list[tuple]:
    """Rows ``(entity, id, x_m, y_m, azimuth_deg)`` for sites, cells and UEs."""
    rows: list[tuple] = [("site", i, float(x), float(y), "") for i, (x, y) in enumerate(layout.sites)]
    rows += [("cell", c.cell_id, c.site_pos[0], c.site_pos[1], c.azimuth_deg) for c in layout.cells]
    rows += [("ue", u.ue_id, u.pos[0], u.pos[1], u.heading_deg) for u in users or []]
    return rows
