"""Core data models: scenario configuration records and report records."""

from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TTI_S = 1e-3
RB_SUBCARRIERS = 12
MAX_SEED = 2**64 - 1


# ── Enums ──────────────────────────────────────────────────────────────────────

class Climate(str, Enum):
    equatorial = "equatorial"
    continental_subtropical = "continental_subtropical"
    maritime_subtropical = "maritime_subtropical"
    desert = "desert"
    continental_temperate = "continental_temperate"
    maritime_temperate_land = "maritime_temperate_land"
    maritime_temperate_sea = "maritime_temperate_sea"

    @property
    def code(self) -> int:
        """ITM radio-climate code (1..7)."""
        return list(Climate).index(self) + 1


class Variability(str, Enum):
    single_message = "single_message"
    accidental = "accidental"
    mobile = "mobile"
    broadcast = "broadcast"

    @property
    def code(self) -> int:
        return list(Variability).index(self)


class Polarization(str, Enum):
    horizontal = "horizontal"
    vertical = "vertical"


class Siting(str, Enum):
    random = "random"
    careful = "careful"
    very_careful = "very_careful"

    @property
    def code(self) -> int:
        return list(Siting).index(self)


class PathLossModel(str, Enum):
    fspl = "fspl"
    itm = "itm"
    combined = "combined"


class PatternKind(str, Enum):
    radar = "radar"
    sector_az = "sector-az"
    sector_el = "sector-el"
    sector_composite = "sector-composite"


class SubframeType(str, Enum):
    downlink = "D"
    special = "S"
    uplink = "U"


class BandwidthMode(str, Enum):
    mhz10 = "10mhz"
    mhz20 = "20mhz"


class EnbElevation(str, Enum):
    boresight = "boresight"
    geometric = "geometric"


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _Frozen(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ── Antenna Parameters ─────────────────────────────────────────────────────────

class RadarPatternParams(_Frozen):
    """Cosine-aperture radar pattern with sidelobe mask and back-lobe floor."""

    theta_3db_az: float = Field(0.81, gt=0, description="Azimuth 3 dB beamwidth, degrees")
    theta_3db_el: float = Field(0.81, gt=0, description="Elevation 3 dB beamwidth, degrees")
    sidelobe_transition_db: float = Field(14.4, description="Mask takes over this far below peak")
    backlobe_floor_db: float = Field(-50.0, description="Constant back-lobe level, dB")

    @model_validator(mode="after")
    def _levels_ordered(self) -> RadarPatternParams:
        if not self.backlobe_floor_db < -self.sidelobe_transition_db < 0:
            raise ValueError(
                "radar pattern requires backlobe_floor_db < -sidelobe_transition_db < 0"
            )
        return self


class SectorPatternParams(_Frozen):
    """3GPP sector antenna: parabolic element patterns floored at A_m."""

    theta_3db_az: float = Field(70.0, gt=0)
    theta_3db_el: float = Field(10.0, gt=0)
    az_tilt: float = Field(0.0, ge=-180, le=180)
    el_tilt: float = Field(12.0, ge=-90, le=90, description="Downtilt, degrees below horizon")
    a_m: float = Field(20.0, gt=0, description="Maximum attenuation, dB")
    peak_gain_dbi: float = 17.0


# ── Propagation Parameters ─────────────────────────────────────────────────────

class ItmParams(_Frozen):
    """Longley-Rice area-prediction inputs (NTIA Fast Track values by default)."""

    terrain_roughness_m: float = Field(10.0, ge=0, le=5000)
    dielectric_constant: float = Field(15.0, ge=1, le=100)
    conductivity: float = Field(0.005, gt=0, le=100, description="S/m")
    surface_refractivity: float = Field(301.0, ge=250, le=400, description="N-units")
    climate: Climate = Climate.continental_temperate
    variability: Variability = Variability.single_message
    polarization: Polarization = Polarization.vertical
    tx_siting: Siting = Siting.random
    rx_siting: Siting = Siting.random
    time_pct: float = Field(50.0, gt=0, lt=100)
    location_pct: float = Field(50.0, gt=0, lt=100)
    confidence_pct: float = Field(50.0, gt=0, lt=100)


class UmaParams(_Frozen):
    """Urban-macro UE↔eNB channel parameters."""

    los_sigma_db: float = Field(4.0, ge=0)
    nlos_sigma_db: float = Field(6.0, ge=0)
    indoor_penetration_db: float = Field(20.0, ge=0)
    street_width_m: float = Field(20.0, gt=0)
    building_height_m: float = Field(20.0, gt=0)
    ue_height_m: float = Field(1.5, gt=1.0)
    min_distance_m: float = Field(25.0, gt=0)
    shadowing_enabled: bool = True


class PropagationParams(_Frozen):
    freq_mhz: float = 3500.0
    radar_antenna_height_m: float = Field(50.0, gt=0)
    lte_antenna_height_m: float = Field(25.0, gt=0)
    itm: ItmParams = ItmParams()
    uma: UmaParams = UmaParams()

    @field_validator("freq_mhz")
    @classmethod
    def _itm_frequency_range(cls, v: float) -> float:
        if not 20.0 <= v <= 20000.0:
            raise ValueError("freq_mhz must be within 20-20000 MHz")
        return v


# ── Radar ──────────────────────────────────────────────────────────────────────

class RadarConfig(_Record):
    """Rotating shipborne S-band radar; defaults describe the reference deployment."""

    freq_mhz: float = 3500.0
    peak_power_dbm: float = 83.0
    antenna_gain_dbi: float = 45.0
    insertion_loss_db: float = 2.0
    antenna_height_m: float = Field(50.0, gt=0)
    pri_s: float = Field(0.5e-3, gt=0)
    pulse_width_s: float = Field(78e-6, gt=0)
    rotation_rpm: float = 30.0
    az_beamwidth_deg: float = Field(0.81, gt=0, le=360)
    el_beamwidth_deg: float = Field(0.81, gt=0, le=180)
    distance_km: Optional[float] = Field(None, description="None disables the radar")
    bearing_deg: float = Field(90.0, description="Direction from the LTE centre to the ship")
    initial_boresight_deg: Optional[float] = Field(
        None, description="Boresight at t = 0; None aims at the LTE centre"
    )
    pattern: RadarPatternParams = RadarPatternParams()

    @model_validator(mode="before")
    @classmethod
    def _pattern_follows_beamwidths(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        pattern = data.get("pattern")
        if pattern is None or isinstance(pattern, dict):
            pattern = dict(pattern or {})
            pattern.setdefault("theta_3db_az", data.get("az_beamwidth_deg", 0.81))
            pattern.setdefault("theta_3db_el", data.get("el_beamwidth_deg", 0.81))
            data = {**data, "pattern": pattern}
        return data

    @field_validator("rotation_rpm")
    @classmethod
    def _positive_rpm(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("rotation_rpm must be > 0")
        return v

    @field_validator("distance_km")
    @classmethod
    def _positive_distance(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError("distance_km must be > 0")
        return v

    @model_validator(mode="after")
    def _pulse_fits_pri(self) -> RadarConfig:
        if self.pulse_width_s >= self.pri_s:
            raise ValueError("pulse_width_s must be < pri_s")
        for name in ("peak_power_dbm", "antenna_gain_dbi", "insertion_loss_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def enabled(self) -> bool:
        return self.distance_km is not None


class ScanTiming(_Frozen):
    scan_period_s: float
    n_beam_positions: int
    dwell_time_s: float
    pulses_per_dwell: int
    pulses_per_scan: int
    beam_step_deg: float


class PulseEvent(_Frozen):
    start_s: float
    duration_s: float
    boresight_az_deg: float
    beam_index: int
    pulse_index_in_dwell: int

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


# ── LTE ────────────────────────────────────────────────────────────────────────

class PowerControl(_Frozen):
    """Open-loop fractional uplink power control."""

    p0_dbm: float = Field(-82.0, description="Target received power per RB, dBm")
    alpha: float = Field(0.8, ge=0, le=1)
    p_max_dbm: float = 23.0


class LteConfig(_Record):
    """TDD LTE macro network at 3.5 GHz."""

    isd_m: float = Field(500.0, gt=0)
    ue_per_cell: int = Field(10, ge=0)
    indoor_fraction: float = Field(0.8, ge=0, le=1)
    ue_speed_kmh: float = Field(3.0, ge=0)
    enb_noise_figure_db: float = 5.0
    thermal_noise_dbm_hz: float = -174.0
    bandwidth_mode: BandwidthMode = BandwidthMode.mhz10
    subcarrier_spacing_hz: float = Field(15e3, gt=0)
    symbol_duration_s: float = Field(TTI_S / 14, gt=0, description="Symbols tile the 1 ms TTI")
    symbols_per_tti: int = Field(14, ge=1)
    frame_pattern: str = "DSUUU"
    antenna: SectorPatternParams = SectorPatternParams()
    power_control: PowerControl = PowerControl()
    harq_max_tx: int = Field(4, ge=1)
    harq_rtt_ms: int = Field(4, ge=1)
    olla_step_db: float = Field(0.5, gt=0)
    bler_target: float = Field(0.1, gt=0, lt=1)
    bler_slope_db: float = Field(0.5, gt=0)
    eesm_beta_step: float = Field(0.25, ge=0)
    pf_window_tti: int = Field(100, ge=1)
    link_refresh_tti: int = Field(
        100, ge=1, description="TTIs between UE-to-cell gain updates while terminals move"
    )
    rebalance_attempts: int = Field(200, ge=0)

    @field_validator("frame_pattern")
    @classmethod
    def _valid_pattern(cls, v: str) -> str:
        v = v.upper().replace(",", "").replace(" ", "")
        if not v or set(v) - {"D", "S", "U"}:
            raise ValueError("frame_pattern must be a string of D, S and U")
        return v

    @model_validator(mode="after")
    def _symbols_fit_tti(self) -> LteConfig:
        if self.symbols_per_tti * self.symbol_duration_s > TTI_S * (1 + 1e-6):
            raise ValueError("symbols_per_tti * symbol_duration_s must fit in one 1 ms TTI")
        return self

    @property
    def n_rb(self) -> int:
        return 50 if self.bandwidth_mode is BandwidthMode.mhz10 else 100

    @property
    def n_subcarriers(self) -> int:
        return RB_SUBCARRIERS * self.n_rb

    @property
    def carrier_bandwidth_hz(self) -> float:
        return 10e6 if self.bandwidth_mode is BandwidthMode.mhz10 else 20e6

    @property
    def ue_speed_mps(self) -> float:
        return self.ue_speed_kmh / 3.6

    @property
    def subframes(self) -> list[SubframeType]:
        return [SubframeType(c) for c in self.frame_pattern]


class CouplingConfig(_Record):
    apply_enb_pattern: bool = Field(
        True, description="False assumes eNB boresight coupling toward the radar"
    )
    enb_elevation: EnbElevation = Field(
        EnbElevation.boresight,
        description="boresight: radar seen on the tilted main beam; geometric: true depression angle",
    )
    center_subcarrier_offset: int = Field(0, description="Radar carrier offset from band centre")


# ── Simulation ─────────────────────────────────────────────────────────────────

class SimulationConfig(_Record):
    """One scenario document: every parameter of a sweep."""

    radar: RadarConfig = RadarConfig()
    lte: LteConfig = LteConfig()
    propagation: PropagationParams = PropagationParams()
    coupling: CouplingConfig = CouplingConfig()
    sim_duration_s: float = 5.0
    seed: int = Field(..., ge=0, le=MAX_SEED)
    seeds: list[int] = Field(default_factory=list, description="Extra seeds for averaging")
    radar_distances_km: list[float] = Field(..., min_length=1)
    output_dir: Path = Path("results")
    baseline_enabled: bool = True
    workers: int = Field(1, ge=1)
    sinr_dump_cell: int = Field(0, ge=0)
    sinr_dump_tti_start: int = Field(0, ge=0)
    sinr_dump_tti_count: int = Field(10, ge=0)
    cdf_points: int = Field(101, ge=2)

    @field_validator("sim_duration_s")
    @classmethod
    def _positive_duration(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("sim_duration_s must be > 0")
        return v

    @field_validator("radar_distances_km")
    @classmethod
    def _positive_distances(cls, v: list[float]) -> list[float]:
        for d in v:
            if d <= 0:
                raise ValueError(f"every distance must be > 0 (got {d})")
        return v

    @field_validator("seeds")
    @classmethod
    def _seed_range(cls, v: list[int]) -> list[int]:
        for s in v:
            if not 0 <= s <= MAX_SEED:
                raise ValueError(f"seed {s} outside 64-bit unsigned range")
        return v

    @model_validator(mode="after")
    def _consistent_radar(self) -> SimulationConfig:
        if self.radar.antenna_height_m != self.propagation.radar_antenna_height_m:
            raise ValueError(
                "radar.antenna_height_m must match propagation.radar_antenna_height_m"
            )
        if self.sinr_dump_cell >= 21:
            raise ValueError("sinr_dump_cell must be < 21")
        return self

    @property
    def tti_count(self) -> int:
        return math.floor(self.sim_duration_s / TTI_S + 1e-9)

    @property
    def all_seeds(self) -> list[int]:
        return [self.seed] + [s for s in self.seeds if s != self.seed]


# ── Link Abstraction ───────────────────────────────────────────────────────────

class McsEntry(_Frozen):
    index: int = Field(..., ge=1)
    spectral_efficiency: float = Field(..., gt=0, description="bit/s/Hz")
    snr_threshold_db: float
    modulation_order: int
    beta: float = Field(1.0, gt=0, description="EESM calibration factor")


# ── Reports ────────────────────────────────────────────────────────────────────

class CouplingResult(_Frozen):
    radar_off_boresight_deg: float
    enb_gain_toward_radar_db: float
    path_loss_db: float
    received_pulse_power_dbm: float


class ScenarioReport(_Record):
    """Outcome of one scenario run (one distance or the baseline, one seed)."""

    scenario_label: str
    distance_km: Optional[float] = None
    seed_used: int
    per_ue_throughput: list[tuple[int, float]]
    mean_throughput: float
    cdf_points: list[tuple[float, float]]
    sinr_dump_path: Optional[Path] = None
    output_dir: Optional[Path] = None
    first_tx_bler: float = 0.0
    tti_count: int = 0


class SweepEntry(_Record):
    distance_km: float
    mean_throughput_bps: float
    loss_fraction: float
    cdf_path: Optional[Path] = None


class SweepSummary(_Record):
    seed: int
    baseline_mean: Optional[float] = None
    baseline: Optional[ScenarioReport] = None
    reports: list[ScenarioReport] = []
    per_distance: list[SweepEntry] = []


# ── HTTP Payloads ──────────────────────────────────────────────────────────────

class PathLossPoint(_Record):
    distance_km: float
    loss_db: float
    mode: Optional[str] = Field(None, description="ITM propagation mode; None for free space")


class PatternPoint(_Record):
    angle_deg: float
    gain_db: float


class Footprint(_Record):
    distance_km: float
    az_beamwidth_deg: float
    width_km: float
    approx_width_km: float
