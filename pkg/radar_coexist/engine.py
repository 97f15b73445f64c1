"""Orchestrator: seeding, scenario runs, distance sweeps and report files."""

from __future__ import annotations

import hashlib
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from radar_coexist.errors import OutputDirectoryError
from radar_coexist.interference import beam_coupling_table_mw, center_subcarrier, spectral_weights
from radar_coexist.link import mcs_table
from radar_coexist.metrics import (
    average_over_seeds,
    sinr_grid_dump,
    sweep_entries,
    throughput_cdf,
    write_summary,
    write_sweep_summary,
    write_throughput_cdf,
    write_throughput_per_ue,
)
from radar_coexist.models import ScenarioReport, SimulationConfig, SweepEntry, SweepSummary
from radar_coexist.network import (
    N_CELLS,
    NetworkLayout,
    NetworkState,
    UserTerminal,
    attach_users,
    build_layout,
    draw_link_states,
    drop_users,
)
from radar_coexist.radar import beam_azimuths_deg
from radar_coexist.uplink import SimulationState, TddFrame, step_tti

logger = logging.getLogger(__name__)


# ── Seeding ────────────────────────────────────────────────────────────────────

def stream(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator for one labelled purpose (``drop``, ``decode/3``, ...)."""
    digest = int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([master_seed, digest]))


def scenario_label(distance_km: Optional[float]) -> str:
    if distance_km is None:
        return "baseline"
    if float(distance_km).is_integer():
        return f"d{int(distance_km):03d}km"
    return f"d{distance_km:07.3f}km".replace(".", "p")


def ensure_writable(directory: Path) -> Path:
    """Create ``directory`` and prove it accepts files, before any simulation work."""
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=directory, prefix=".write-check-"):
            pass
    except OSError as exc:
        raise OutputDirectoryError(f"output directory {directory} is not writable: {exc}") from exc
    return directory


# ── Scenario Setup ─────────────────────────────────────────────────────────────

def drop_network(cfg: SimulationConfig, seed: int) -> tuple[NetworkLayout, list[UserTerminal]]:
    """Layout plus attached UEs.

    The drop, shadowing and mobility streams depend only on the seed, so every
    distance of a sweep sees the same UEs on the same trajectories.
    """
    lte, prop = cfg.lte, cfg.propagation
    layout = build_layout(lte, prop)
    drop_rng, shadow_rng = stream(seed, "drop"), stream(seed, "shadowing")
    users = drop_users(layout, lte, drop_rng, prop, heading_rng=stream(seed, "mobility"))
    draw_link_states(users, layout, prop, shadow_rng)
    attach_users(users, layout, prop, lte, drop_rng, shadow_rng)
    return layout, users


def build_state(cfg: SimulationConfig, distance_km: Optional[float], seed: int) -> SimulationState:
    """Network drop, link states and radar coupling for one scenario."""
    lte, prop = cfg.lte, cfg.propagation
    layout, users = drop_network(cfg, seed)

    radar = cfg.radar.model_copy(update={"distance_km": distance_km})
    coupling_table = weights = None
    if distance_km is not None:
        coupling_table = beam_coupling_table_mw(
            radar, beam_azimuths_deg(radar), layout, distance_km, prop, cfg.coupling
        )
        weights = spectral_weights(
            radar.pulse_width_s,
            lte.subcarrier_spacing_hz,
            lte.n_subcarriers,
            center_subcarrier(lte.n_subcarriers, cfg.coupling.center_subcarrier_offset),
        )

    return SimulationState(
        radar=radar,
        lte=lte,
        prop=prop,
        frame=TddFrame.from_lte(lte),
        network=NetworkState.from_users(layout, users),
        mcs_table=mcs_table(lte.eesm_beta_step),
        sched_rngs=[stream(seed, f"sched/{c}") for c in range(N_CELLS)],
        decode_rngs=[stream(seed, f"decode/{c}") for c in range(N_CELLS)],
        coupling_table_mw=coupling_table,
        spectral_weights=weights,
        dump_cell=cfg.sinr_dump_cell,
        dump_ttis=range(cfg.sinr_dump_tti_start, cfg.sinr_dump_tti_start + cfg.sinr_dump_tti_count),
    )


def simulate(cfg: SimulationConfig, distance_km: Optional[float], seed: int) -> SimulationState:
    """Run ``cfg.tti_count`` TTIs and return the final state."""
    state = build_state(cfg, distance_km, seed)
    for _ in range(cfg.tti_count):
        step_tti(state)
    return state


# ── Engine ─────────────────────────────────────────────────────────────────────

class ScenarioEngine:
    """Runs scenarios and sweeps for one configuration and writes their reports."""

    def __init__(self, cfg: SimulationConfig) -> None:
        self.cfg = cfg

    def seed_dir(self, seed: int) -> Path:
        root = Path(self.cfg.output_dir)
        if len(self.cfg.all_seeds) > 1:
            return root / f"seed{seed}"
        return root

    def run_scenario(
        self,
        distance_km: Optional[float],
        seed: Optional[int] = None,
        baseline_mean: Optional[float] = None,
    ) -> ScenarioReport:
        """One scenario: simulate, then write the per-UE, CDF, SINR and summary files."""
        seed = self.cfg.seed if seed is None else seed
        label = scenario_label(distance_km)
        out_dir = ensure_writable(self.seed_dir(seed) / label)
        logger.info("scenario %s (seed %d): %d TTIs", label, seed, self.cfg.tti_count)

        state = simulate(self.cfg, distance_km, seed)
        duration = self.cfg.tti_count * 1e-3
        per_ue = [(i, float(bits / duration)) for i, bits in enumerate(state.delivered_bits)]
        values = [v for _, v in per_ue]
        mean = float(np.mean(values)) if values else 0.0
        cdf = throughput_cdf(values, self.cfg.cdf_points) if values else []

        dump_path = sinr_grid_dump(state.sinr_dump, state.dump_ttis, out_dir / "sinr_grid.csv")
        write_throughput_per_ue(out_dir / "throughput_per_ue.csv", per_ue)
        write_throughput_cdf(out_dir / "throughput_cdf.csv", cdf)
        report = ScenarioReport(
            scenario_label=label,
            distance_km=distance_km,
            seed_used=seed,
            per_ue_throughput=per_ue,
            mean_throughput=mean,
            cdf_points=cdf,
            sinr_dump_path=dump_path,
            output_dir=out_dir,
            first_tx_bler=state.first_tx_bler,
            tti_count=self.cfg.tti_count,
        )
        write_summary(out_dir / "summary.txt", report, baseline_mean)
        logger.info("scenario %s done: mean %.6g bit/s", label, mean)
        return report

    def sweep_distances(self, seed: Optional[int] = None) -> SweepSummary:
        """Baseline first (unless disabled), then every configured distance on the same drop."""
        seed = self.cfg.seed if seed is None else seed
        ensure_writable(self.seed_dir(seed))
        baseline = self.run_scenario(None, seed) if self.cfg.baseline_enabled else None
        baseline_mean = baseline.mean_throughput if baseline else None
        distances = sorted(self.cfg.radar_distances_km)

        if self.cfg.workers > 1 and len(distances) > 1:
            with ProcessPoolExecutor(max_workers=min(self.cfg.workers, len(distances))) as pool:
                futures = [
                    pool.submit(_run_one, self.cfg, d, seed, baseline_mean)
                    for d in distances
                ]
                reports = [f.result() for f in futures]
        else:
            reports = [self.run_scenario(d, seed, baseline_mean) for d in distances]

        entries = sweep_entries(baseline, reports)
        write_sweep_summary(self.seed_dir(seed) / "sweep_summary.csv", entries)
        return SweepSummary(
            seed=seed,
            baseline_mean=baseline_mean,
            baseline=baseline,
            reports=reports,
            per_distance=entries,
        )

    def sweep_all_seeds(self) -> tuple[list[SweepSummary], list[SweepEntry]]:
        """One sweep per seed plus the per-distance averages across seeds."""
        summaries = [self.sweep_distances(seed) for seed in self.cfg.all_seeds]
        averaged = average_over_seeds(summaries)
        if len(summaries) > 1:
            write_sweep_summary(Path(self.cfg.output_dir) / "sweep_summary.csv", averaged)
        return summaries, averaged


def _run_one(
    cfg: SimulationConfig, distance_km: float, seed: int, baseline_mean: Optional[float]
) -> ScenarioReport:
    logging.getLogger(__name__).debug("worker %d running %s", os.getpid(), distance_km)
    return ScenarioEngine(cfg).run_scenario(distance_km, seed, baseline_mean)


# ── Module-level API ───────────────────────────────────────────────────────────

def run_scenario(cfg: SimulationConfig, distance_km: Optional[float]) -> ScenarioReport:
    return ScenarioEngine(cfg).run_scenario(distance_km)


def sweep_distances(cfg: SimulationConfig) -> SweepSummary:
    return ScenarioEngine(cfg).sweep_distances()
