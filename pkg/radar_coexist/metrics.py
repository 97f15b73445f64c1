"""Throughput statistics, CDF comparison and the CSV/text report writers."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from jinja2 import Environment, PackageLoader, StrictUndefined

from radar_coexist.errors import DomainError
from radar_coexist.models import ScenarioReport, SweepEntry, SweepSummary

logger = logging.getLogger(__name__)

DOMINANCE_SLACK = 0.05

_env = Environment(
    loader=PackageLoader("radar_coexist", "templates"),
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
    undefined=StrictUndefined,
)


def fmt(value: float) -> str:
    """Six significant digits, the precision every CSV column is written at."""
    return format(float(value), ".6g")


_env.filters["fmt"] = fmt


# ── Distributions ──────────────────────────────────────────────────────────────

def cdf_on_grid(values: Sequence[float], points: Sequence[float]) -> np.ndarray:
    """Empirical CDF (fraction of values ≤ x) at each x in ``points``."""
    data = np.sort(np.asarray(values, dtype=float))
    if data.size == 0:
        raise DomainError("CDF of an empty sample")
    return np.searchsorted(data, np.asarray(points, dtype=float), side="right") / data.size


def throughput_cdf(values: Sequence[float], n_points: int = 101) -> list[tuple[float, float]]:
    """Empirical CDF sampled at ``n_points`` evenly spaced quantiles.

    Each point is ``(quantile value, fraction of UEs at or below it)``; the last
    point is the maximum observed value with fraction 1.
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise DomainError("throughput CDF needs at least one UE")
    if n_points < 2:
        raise DomainError("n_points must be >= 2")
    points = np.quantile(data, np.linspace(0.0, 1.0, n_points), method="inverted_cdf")
    fractions = cdf_on_grid(data, points)
    return [(float(v), float(f)) for v, f in zip(points, fractions)]


def loss_fraction(baseline: ScenarioReport | float, scenario: ScenarioReport | float) -> float:
    """1 − scenario mean / baseline mean."""
    base = baseline.mean_throughput if isinstance(baseline, ScenarioReport) else float(baseline)
    mean = scenario.mean_throughput if isinstance(scenario, ScenarioReport) else float(scenario)
    if base == 0:
        raise DomainError("baseline mean throughput is zero")
    return 1.0 - mean / base


@dataclass(frozen=True)
class DominanceResult:
    dominates: bool
    max_violation: float


def dominance_check(
    cdf_a: Sequence[tuple[float, float]],
    cdf_b: Sequence[tuple[float, float]],
    epsilon: float = DOMINANCE_SLACK,
) -> DominanceResult:
    """Whether ``a`` is stochastically worse than ``b``: F_a(v) ≥ F_b(v) − ε at every grid point."""
    if len(cdf_a) != len(cdf_b) or any(
        not np.isclose(pa, pb, rtol=1e-12, atol=0.0) for (pa, _), (pb, _) in zip(cdf_a, cdf_b)
    ):
        raise DomainError("CDFs must share the same grid")
    gaps = np.array([fb - fa for (_, fa), (_, fb) in zip(cdf_a, cdf_b)])
    violation = float(max(gaps.max(initial=0.0), 0.0))
    return DominanceResult(dominates=violation <= epsilon, max_violation=violation)


def fraction_below(values: Sequence[float], threshold: float) -> float:
    data = np.asarray(values, dtype=float)
    return float(np.mean(data < threshold))


# ── Writers ────────────────────────────────────────────────────────────────────

def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("wrote %s", path)
    return path


def write_throughput_per_ue(path: Path, per_ue: Sequence[tuple[int, float]]) -> Path:
    return _write_rows(
        path, ("ue_id", "mean_throughput_bps"), ((ue, fmt(v)) for ue, v in per_ue)
    )


def write_throughput_cdf(path: Path, cdf: Sequence[tuple[float, float]]) -> Path:
    return _write_rows(path, ("throughput_bps", "cum_fraction"), ((fmt(v), fmt(f)) for v, f in cdf))


def sinr_grid_dump(grids: Mapping[int, np.ndarray], tti_window: range | None, path: Path) -> Path:
    """Rows ``(tti, symbol, subcarrier, sinr_db)`` for every dumped TTI inside the window."""
    ttis = sorted(t for t in grids if tti_window is None or t in tti_window)

    def rows():
        for t in ttis:
            grid = grids[t]
            for s in range(grid.shape[0]):
                for k in range(grid.shape[1]):
                    yield t, s, k, fmt(grid[s, k])

    return _write_rows(path, ("tti", "symbol", "subcarrier", "sinr_db"), rows())


def write_sweep_summary(path: Path, entries: Sequence[SweepEntry]) -> Path:
    return _write_rows(
        path,
        ("distance_km", "mean_throughput_bps", "loss_fraction"),
        ((fmt(e.distance_km), fmt(e.mean_throughput_bps), fmt(e.loss_fraction)) for e in entries),
    )


def render_summary(report: ScenarioReport, baseline_mean: float | None = None) -> str:
    values = np.array([v for _, v in report.per_ue_throughput], dtype=float)
    stats = {
        "ue_count": int(values.size),
        "median": fmt(np.median(values)) if values.size else "n/a",
        "p05": fmt(np.percentile(values, 5)) if values.size else "n/a",
        "p95": fmt(np.percentile(values, 95)) if values.size else "n/a",
    }
    loss = None
    if baseline_mean and report.distance_km is not None:
        loss = fmt(loss_fraction(baseline_mean, report.mean_throughput))
    return _env.get_template("summary.txt.j2").render(
        report=report,
        stats=stats,
        mean=fmt(report.mean_throughput),
        bler=fmt(report.first_tx_bler),
        loss=loss,
    )


def write_summary(path: Path, report: ScenarioReport, baseline_mean: float | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_summary(report, baseline_mean), encoding="utf-8")
    logger.info("wrote %s", path)
    return path


# ── Sweep Aggregation ──────────────────────────────────────────────────────────

def sweep_entries(
    baseline: Optional[ScenarioReport], reports: Sequence[ScenarioReport]
) -> list[SweepEntry]:
    """Baseline-relative table, sorted by distance; loss is NaN without a usable baseline."""
    usable = baseline is not None and baseline.mean_throughput > 0
    entries = [
        SweepEntry(
            distance_km=r.distance_km,
            mean_throughput_bps=r.mean_throughput,
            loss_fraction=loss_fraction(baseline, r) if usable else math.nan,
            cdf_path=(r.output_dir / "throughput_cdf.csv") if r.output_dir else None,
        )
        for r in reports
        if r.distance_km is not None
    ]
    return sorted(entries, key=lambda e: e.distance_km)


def average_over_seeds(summaries: Sequence[SweepSummary]) -> list[SweepEntry]:
    """Per-distance mean throughput and loss averaged across seeds."""
    if not summaries:
        return []
    by_distance: dict[float, list[SweepEntry]] = {}
    for summary in summaries:
        for entry in summary.per_distance:
            by_distance.setdefault(entry.distance_km, []).append(entry)
    return [
        SweepEntry(
            distance_km=d,
            mean_throughput_bps=float(np.mean([e.mean_throughput_bps for e in group])),
            loss_fraction=float(np.mean([e.loss_fraction for e in group])),
        )
        for d, group in sorted(by_distance.items())
    ]
