"""Command-line interface for radar-coexist (Typer + Rich)."""

from __future__ import annotations

import csv
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from radar_coexist.antennas import pattern_cut
from radar_coexist.config import load_config
from radar_coexist.engine import ScenarioEngine, drop_network
from radar_coexist.errors import CoexistError
from radar_coexist.metrics import fmt
from radar_coexist.models import PathLossModel, PatternKind, PropagationParams, SimulationConfig
from radar_coexist.network import layout_rows
from radar_coexist.propagation import path_loss_table
from radar_coexist.radar import footprint_approx_km, footprint_width_km, scan_timing

app = typer.Typer(
    name="radar-coexist",
    help="Shipborne radar vs TDD LTE uplink: sweeps, path-loss curves, patterns and scan timing.",
    rich_markup_mode="rich",
)
console = Console()
err_console = Console(stderr=True)

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Scenario document (default: bundled)")


def default_config_path() -> Path:
    return Path(str(resources.files("radar_coexist") / "scenarios" / "default.cfg"))


def _load(config: Optional[Path], **overrides) -> SimulationConfig:
    return load_config(config or default_config_path(), overrides)


def _fail(exc: Exception) -> typer.Exit:
    err_console.print(f"[red]{exc}[/red]")
    return typer.Exit(1)


def _emit_csv(header: tuple[str, ...], rows) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    quiet: bool = typer.Option(False, "--quiet", help="Warnings and errors only"),
):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


# ── Simulate Command ───────────────────────────────────────────────────────────

@app.command()
def simulate(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed", help="Override simulation.seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Override simulation.output_dir"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Extra seeds, comma-separated"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel distance scenarios"),
):
    """Run the baseline and every configured radar distance, then print the loss table."""
    overrides = {
        "simulation.seed": seed,
        "simulation.output_dir": str(out) if out else None,
        "simulation.workers": workers,
    }
    try:
        if seeds is not None:
            overrides["simulation.seeds"] = [int(s) for s in seeds.split(",") if s.strip()]
        cfg = _load(config, **overrides)
        summaries, averaged = ScenarioEngine(cfg).sweep_all_seeds()
    except (CoexistError, ValueError, OSError) as exc:
        raise _fail(exc)

    entries = averaged if len(summaries) > 1 else summaries[0].per_distance
    title = "Throughput loss vs radar distance"
    if len(summaries) > 1:
        title += f" (mean of {len(summaries)} seeds)"
    table = Table(title=title, show_lines=True)
    table.add_column("Distance (km)", style="cyan", justify="right")
    table.add_column("Mean throughput (bit/s)", justify="right")
    table.add_column("Loss vs baseline", style="magenta", justify="right")
    for e in entries:
        table.add_row(fmt(e.distance_km), fmt(e.mean_throughput_bps), fmt(e.loss_fraction))
    console.print(table)

    baselines = [s.baseline_mean for s in summaries if s.baseline_mean is not None]
    if baselines:
        console.print(f"[dim]baseline mean: {fmt(sum(baselines) / len(baselines))} bit/s[/dim]")
    console.print(f"[green]Results written to {cfg.output_dir}[/green]")


# ── Curve Dumps ────────────────────────────────────────────────────────────────

@app.command()
def pathloss(
    model: PathLossModel = typer.Option(PathLossModel.combined, "--model", "-m"),
    freq_mhz: float = typer.Option(3500.0, "--freq-mhz"),
    from_km: float = typer.Option(1.0, "--from-km"),
    to_km: float = typer.Option(300.0, "--to-km"),
    step_km: float = typer.Option(1.0, "--step-km"),
    with_mode: bool = typer.Option(False, "--with-mode", help="Add the ITM propagation mode column"),
):
    """Radar-to-eNB path loss over distance as CSV on stdout."""
    try:
        rows = path_loss_table(model, PropagationParams(freq_mhz=freq_mhz), from_km, to_km, step_km)
    except (CoexistError, ValueError) as exc:
        raise _fail(exc)
    if with_mode:
        _emit_csv(
            ("distance_km", "loss_db", "mode"),
            ((fmt(d), fmt(loss), mode.value if mode else "free_space") for d, loss, mode in rows),
        )
    else:
        _emit_csv(("distance_km", "loss_db"), ((fmt(d), fmt(loss)) for d, loss, _ in rows))


@app.command()
def pattern(
    which: PatternKind = typer.Option(PatternKind.radar, "--which"),
    step_deg: float = typer.Option(0.01, "--step-deg"),
):
    """One antenna pattern cut as CSV on stdout."""
    try:
        angles, gains = pattern_cut(which, step_deg)
    except ValueError as exc:
        raise _fail(exc)
    _emit_csv(("angle_deg", "gain_db"), ((fmt(a), fmt(g)) for a, g in zip(angles, gains)))


@app.command()
def timing(config: Optional[Path] = CONFIG_OPTION):
    """Scan-timing arithmetic and the illuminated footprint at each distance."""
    try:
        cfg = _load(config)
    except (CoexistError, ValueError) as exc:
        raise _fail(exc)
    t = scan_timing(cfg.radar)

    table = Table(title="Radar scan timing")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("scan period", f"{t.scan_period_s:.6g} s")
    table.add_row("beam positions", str(t.n_beam_positions))
    table.add_row("beam step", f"{t.beam_step_deg:.6g} deg")
    table.add_row("dwell time", f"{t.dwell_time_s * 1e3:.6g} ms")
    table.add_row("pulses per dwell", str(t.pulses_per_dwell))
    table.add_row("pulses per scan", str(t.pulses_per_scan))
    console.print(table)

    footprint = Table(title="Footprint width")
    footprint.add_column("Distance (km)", style="cyan", justify="right")
    footprint.add_column("2R·tan(θ) (km)", justify="right")
    footprint.add_column("0.03R (km)", justify="right")
    for d in sorted(cfg.radar_distances_km):
        footprint.add_row(
            fmt(d),
            fmt(footprint_width_km(d, cfg.radar.az_beamwidth_deg)),
            fmt(footprint_approx_km(d)),
        )
    console.print(footprint)


@app.command()
def layout(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Sites, cells and the UE drop for one seed as CSV on stdout."""
    try:
        cfg = _load(config, **{"simulation.seed": seed})
    except (CoexistError, ValueError) as exc:
        raise _fail(exc)
    grid, users = drop_network(cfg, cfg.seed)
    _emit_csv(
        ("entity", "id", "x_m", "y_m", "azimuth_deg"),
        (
            (entity, i, fmt(x), fmt(y), az if az == "" else fmt(az))
            for entity, i, x, y, az in layout_rows(grid, users)
        ),
    )


# ── Server Command ─────────────────────────────────────────────────────────────

@app.command(name="serve")
def serve(
    host: str = typer.Option("127.0.0.1", "--host"),
    port: int = typer.Option(8000, "--port", "-p"),
    reload: bool = typer.Option(False, "--reload"),
):
    """Start the HTTP query API."""
    import uvicorn

    console.print(Panel(f"http://{host}:{port}  [dim]docs at /docs[/dim]", title="radar-coexist API"))
    uvicorn.run("radar_coexist.api:app", host=host, port=port, reload=reload)


if __name__ == "__main__":
    app()
