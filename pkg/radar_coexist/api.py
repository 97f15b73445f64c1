"""FastAPI query surface: path loss, antenna patterns, scan timing and footprint."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse

from radar_coexist import __version__
from radar_coexist.antennas import pattern_cut
from radar_coexist.models import (
    Footprint,
    PathLossModel,
    PathLossPoint,
    PatternKind,
    PatternPoint,
    PropagationParams,
    RadarConfig,
    ScanTiming,
)
from radar_coexist.propagation import path_loss_table
from radar_coexist.radar import footprint_approx_km, footprint_width_km, scan_timing

# ── App Setup ──────────────────────────────────────────────────────────────────

app = FastAPI(
    title="radar-coexist",
    description="Shipborne radar vs TDD LTE uplink: propagation, patterns and scan timing",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)

MAX_POINTS = 100_000


def _check_points(span: float, step: float) -> None:
    if step > 0 and span / step > MAX_POINTS:
        raise HTTPException(422, f"grid would exceed {MAX_POINTS} points; raise the step")


# ── Propagation ────────────────────────────────────────────────────────────────

@app.get("/api/pathloss", response_model=list[PathLossPoint], tags=["Propagation"])
async def pathloss(
    model: PathLossModel = PathLossModel.combined,
    freq_mhz: float = 3500.0,
    from_km: float = Query(1.0, gt=0),
    to_km: float = Query(300.0, gt=0),
    step_km: float = Query(1.0, gt=0),
):
    """Radar-to-eNB path loss over an inclusive distance grid."""
    _check_points(to_km - from_km, step_km)
    try:
        rows = path_loss_table(model, PropagationParams(freq_mhz=freq_mhz), from_km, to_km, step_km)
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    return [
        PathLossPoint(distance_km=d, loss_db=loss, mode=mode.value if mode else None)
        for d, loss, mode in rows
    ]


# ── Antennas ───────────────────────────────────────────────────────────────────

@app.get("/api/pattern", response_model=list[PatternPoint], tags=["Antennas"])
async def pattern(which: PatternKind = PatternKind.radar, step_deg: float = Query(0.1, gt=0)):
    """One pattern cut; the default step is coarser than the CLI's."""
    _check_points(360.0, step_deg)
    try:
        angles, gains = pattern_cut(which, step_deg)
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    return [PatternPoint(angle_deg=float(a), gain_db=float(g)) for a, g in zip(angles, gains)]


# ── Radar ──────────────────────────────────────────────────────────────────────

@app.get("/api/timing", response_model=ScanTiming, tags=["Radar"])
async def timing_default():
    """Scan timing of the default radar."""
    return scan_timing(RadarConfig())


@app.post("/api/timing", response_model=ScanTiming, tags=["Radar"])
async def timing_custom(radar: RadarConfig):
    return scan_timing(radar)


@app.get("/api/footprint", response_model=Footprint, tags=["Radar"])
async def footprint(
    distance_km: float = Query(..., gt=0),
    az_beamwidth_deg: float = Query(0.81, gt=0, lt=90),
):
    """Illuminated width at range, exact and with the 0.03·R rule of thumb."""
    return Footprint(
        distance_km=distance_km,
        az_beamwidth_deg=az_beamwidth_deg,
        width_km=footprint_width_km(distance_km, az_beamwidth_deg),
        approx_width_km=footprint_approx_km(distance_km),
    )


@app.get("/", response_class=HTMLResponse, include_in_schema=False)
async def index():
    return HTMLResponse(
        "<h1>radar-coexist API</h1><p>Visit <a href='/docs'>/docs</a> for API documentation.</p>"
    )
