"""Tests for throughput CDFs, loss, dominance and the report writers."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from radar_coexist.errors import DomainError
from radar_coexist.metrics import (
    average_over_seeds,
    cdf_on_grid,
    dominance_check,
    fmt,
    fraction_below,
    loss_fraction,
    render_summary,
    sinr_grid_dump,
    sweep_entries,
    throughput_cdf,
    write_summary,
    write_sweep_summary,
    write_throughput_cdf,
    write_throughput_per_ue,
)
from radar_coexist.models import ScenarioReport, SweepEntry, SweepSummary


def _report(mean, distance_km=None, values=None, output_dir=None):
    values = values if values is not None else [mean] * 4
    return ScenarioReport(
        scenario_label="baseline" if distance_km is None else f"d{int(distance_km):03d}km",
        distance_km=distance_km,
        seed_used=42,
        per_ue_throughput=list(enumerate(values)),
        mean_throughput=mean,
        cdf_points=[],
        output_dir=output_dir,
        tti_count=5000,
    )


def _read(path: Path):
    with path.open(newline="") as fh:
        return list(csv.reader(fh))


# ── CDF ────────────────────────────────────────────────────────────────────────

def test_cdf_of_equal_values_is_a_step():
    cdf = throughput_cdf([3e6] * 10, 11)
    assert {v for v, _ in cdf} == {3e6}
    assert all(f == 1.0 for _, f in cdf)


def test_cdf_reaches_one_at_max():
    rng = np.random.default_rng(0)
    values = rng.gamma(2.0, 1e6, size=210)
    cdf = throughput_cdf(values)
    assert len(cdf) == 101
    assert cdf[-1] == (pytest.approx(values.max()), 1.0)
    assert cdf[0][0] == pytest.approx(values.min())


def test_cdf_monotone():
    rng = np.random.default_rng(1)
    cdf = throughput_cdf(rng.exponential(1e6, size=57), 33)
    xs, fs = zip(*cdf)
    assert list(xs) == sorted(xs)
    assert list(fs) == sorted(fs)
    assert all(0.0 < f <= 1.0 for f in fs)


def test_cdf_domain():
    with pytest.raises(DomainError):
        throughput_cdf([])
    with pytest.raises(DomainError):
        throughput_cdf([1.0], 1)
    with pytest.raises(DomainError):
        cdf_on_grid([], [1.0])


def test_cdf_on_grid_counts_ties():
    assert list(cdf_on_grid([1, 2, 2, 3], [0, 1, 2, 3, 4])) == [0.0, 0.25, 0.75, 1.0, 1.0]


def test_fraction_below():
    assert fraction_below([1, 2, 3, 4], 3) == 0.5


# ── Loss ───────────────────────────────────────────────────────────────────────

def test_loss_zero_against_itself():
    base = _report(5e6)
    assert loss_fraction(base, base) == 0.0


def test_loss_fraction_value():
    assert loss_fraction(_report(5e6), _report(4e6, 50.0)) == pytest.approx(0.2)
    assert loss_fraction(5e6, 6e6) == pytest.approx(-0.2)


def test_loss_needs_nonzero_baseline():
    with pytest.raises(DomainError):
        loss_fraction(_report(0.0), _report(1.0, 50.0))


# ── Dominance ──────────────────────────────────────────────────────────────────

def test_identical_cdfs_dominate_trivially():
    cdf = [(1.0, 0.2), (2.0, 0.6), (3.0, 1.0)]
    result = dominance_check(cdf, cdf)
    assert result.dominates
    assert result.max_violation == 0.0


def test_dominance_is_asymmetric():
    points = [1.0, 2.0, 3.0, 4.0]
    worse = [(p, f) for p, f in zip(points, [0.4, 0.8, 0.95, 1.0])]
    better = [(p, f) for p, f in zip(points, [0.1, 0.3, 0.7, 1.0])]
    assert dominance_check(worse, better).dominates
    flipped = dominance_check(better, worse)
    assert not flipped.dominates
    assert flipped.max_violation == pytest.approx(0.5)


def test_dominance_within_slack():
    a = [(1.0, 0.50), (2.0, 1.0)]
    b = [(1.0, 0.54), (2.0, 1.0)]
    assert dominance_check(a, b).dominates


def test_dominance_needs_shared_grid():
    with pytest.raises(DomainError):
        dominance_check([(1.0, 0.5)], [(1.0, 0.5), (2.0, 1.0)])
    with pytest.raises(DomainError):
        dominance_check([(1.0, 0.5)], [(1.5, 0.5)])


# ── Writers ────────────────────────────────────────────────────────────────────

def test_fmt_six_significant_digits():
    assert fmt(1234567.891) == "1.23457e+06"
    assert fmt(0.1) == "0.1"
    assert fmt(-12.3456789) == "-12.3457"


def test_per_ue_writer(tmp_path):
    path = write_throughput_per_ue(tmp_path / "t.csv", [(0, 1.5e6), (1, 2.25e6)])
    assert _read(path) == [["ue_id", "mean_throughput_bps"], ["0", "1.5e+06"], ["1", "2.25e+06"]]


def test_cdf_writer(tmp_path):
    rows = _read(write_throughput_cdf(tmp_path / "c.csv", [(1e6, 0.5), (2e6, 1.0)]))
    assert rows[0] == ["throughput_bps", "cum_fraction"]
    assert rows[2] == ["2e+06", "1"]


def test_sinr_dump_rows(tmp_path):
    grids = {5: np.full((2, 3), 12.5), 6: np.arange(6.0).reshape(2, 3), 9: np.zeros((2, 3))}
    rows = _read(sinr_grid_dump(grids, range(5, 8), tmp_path / "s.csv"))
    assert rows[0] == ["tti", "symbol", "subcarrier", "sinr_db"]
    assert len(rows) == 1 + 2 * 6
    assert rows[1] == ["5", "0", "0", "12.5"]
    assert rows[-1] == ["6", "1", "2", "5"]


def test_sinr_dump_empty_window(tmp_path):
    rows = _read(sinr_grid_dump({}, range(0), tmp_path / "s.csv"))
    assert rows == [["tti", "symbol", "subcarrier", "sinr_db"]]


def test_writer_creates_parent_dirs(tmp_path):
    path = write_sweep_summary(tmp_path / "a" / "b" / "sweep.csv", [])
    assert _read(path) == [["distance_km", "mean_throughput_bps", "loss_fraction"]]


# ── Summary ────────────────────────────────────────────────────────────────────

def test_render_summary_with_loss():
    text = render_summary(_report(4e6, 50.0, [3e6, 5e6]), baseline_mean=5e6)
    assert "scenario: d050km" in text
    assert "radar distance: 50 km" in text
    assert "mean throughput: 4e+06 bit/s" in text
    assert "loss vs baseline: 0.2" in text


def test_render_summary_baseline():
    text = render_summary(_report(5e6))
    assert "radar distance: disabled (baseline)" in text
    assert "loss vs baseline" not in text


def test_render_summary_formats_distance():
    text = render_summary(_report(4e6, 12.3456789, [3e6, 5e6]))
    assert "radar distance: 12.3457 km" in text


def test_write_summary(tmp_path):
    path = write_summary(tmp_path / "summary.txt", _report(5e6))
    assert path.read_text(encoding="utf-8").startswith("scenario: baseline")


# ── Sweep Aggregation ──────────────────────────────────────────────────────────

def test_sweep_entries_sorted_with_loss(tmp_path):
    base = _report(10e6)
    reports = [_report(9.5e6, 200.0), _report(8e6, 50.0, output_dir=tmp_path)]
    entries = sweep_entries(base, reports)
    assert [e.distance_km for e in entries] == [50.0, 200.0]
    assert entries[0].loss_fraction == pytest.approx(0.2)
    assert entries[1].loss_fraction == pytest.approx(0.05)
    assert entries[0].cdf_path == tmp_path / "throughput_cdf.csv"
    assert entries[1].cdf_path is None


def test_sweep_entries_without_baseline():
    entries = sweep_entries(None, [_report(8e6, 50.0)])
    assert math.isnan(entries[0].loss_fraction)
    assert entries[0].mean_throughput_bps == 8e6


def test_sweep_entries_skip_baseline_reports():
    assert sweep_entries(_report(1e6), [_report(1e6)]) == []


def test_average_over_seeds():
    def summary(seed, means):
        return SweepSummary(
            seed=seed,
            baseline_mean=10.0,
            per_distance=[
                SweepEntry(distance_km=d, mean_throughput_bps=m, loss_fraction=1 - m / 10.0)
                for d, m in means.items()
            ],
        )

    averaged = average_over_seeds([summary(1, {50.0: 8.0, 100.0: 9.0}), summary(2, {100.0: 10.0, 50.0: 6.0})])
    assert [e.distance_km for e in averaged] == [50.0, 100.0]
    assert averaged[0].mean_throughput_bps == pytest.approx(7.0)
    assert averaged[0].loss_fraction == pytest.approx(0.3)
    assert averaged[1].loss_fraction == pytest.approx(0.05)
    assert average_over_seeds([]) == []
