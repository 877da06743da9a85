"""Run configuration: flat sectioned key/value files with strict validation,
scenario presets and the sweepable-parameter registry."""

from __future__ import annotations

import configparser
import copy
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from spssim import phy
from spssim.channel import FadingBin, PathLossTable, TwoRayParams
from spssim.grid import GridConfig, GridError, PscchScheme, tb_size
from spssim.phy import BlerCurve, RadioConfig, default_bler_curve
from spssim.scenario import EdgeMode, OffsetMode, ScenarioConfig, PRESETS
from spssim.sps import SpsConfig, STANDARD_RESELECT_PROBS


class ConfigError(ValueError):
    pass


class ConfigWarning(UserWarning):
    pass


@dataclass
class ChannelConfig:
    carrier_hz: float = 5.86e9
    antenna_height_m: float = 1.5
    reflection_coeff: float = -1.0
    weibull_k: float = 1.4
    bins: str = ""   # "lo:hi:alpha:m, ..." with '-' marking the Weibull tail

    @property
    def path_loss_table(self) -> PathLossTable:
        if not self.bins:
            default = PathLossTable.fowlerville()
            return PathLossTable(default.bins, self.weibull_k)
        parsed = []
        for part in self.bins.split(","):
            fields = part.strip().split(":")
            if len(fields) != 4:
                raise ConfigError(f"channel bin needs lo:hi:alpha:m, got {part!r}")
            lo, hi, alpha, m = fields
            parsed.append(FadingBin(float(lo), float(hi), float(alpha),
                                    None if m.strip() == "-" else float(m)))
        return PathLossTable(tuple(parsed), self.weibull_k)

    @property
    def two_ray_params(self) -> TwoRayParams:
        return TwoRayParams(self.carrier_hz, self.antenna_height_m,
                            self.reflection_coeff)


@dataclass
class MetricsConfig:
    distance_bin_m: float = 25.0
    max_range_m: float = 1000.0
    ipg_bin_ms: int = 100
    ipg_cap_ms: int = 500

    def validate(self) -> None:
        if self.distance_bin_m <= 0 or self.max_range_m <= 0:
            raise ConfigError("metric bin width and range must be positive")
        if self.ipg_bin_ms <= 0 or self.ipg_cap_ms < self.ipg_bin_ms:
            raise ConfigError("ipg_cap_ms must cover at least one ipg_bin_ms")


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    sps: SpsConfig = field(default_factory=SpsConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed: int = 1
    out_dir: str = "out"
    trace: bool = False
    strict: bool = True
    bler_file: str = ""

    def validate(self) -> None:
        try:
            self.grid.validate(self.strict)
            self.sps.validate()
            self.scenario.validate()
        except (GridError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        self.metrics.validate()
        if (self.sps.p_resel not in STANDARD_RESELECT_PROBS
                and self.sps.p_resel != 0.0):
            warnings.warn(
                f"p_resel={self.sps.p_resel} outside the standard set "
                f"{STANDARD_RESELECT_PROBS}; accepted", ConfigWarning)
        if self.sps.p_rsvp_ms not in self.sps.allowed_p_rsvp:
            if self.strict:
                raise ConfigError(
                    f"p_rsvp_ms={self.sps.p_rsvp_ms} not in allowed set "
                    f"{self.sps.allowed_p_rsvp}; rerun with strict=false")
            warnings.warn(f"non-standard p_rsvp_ms={self.sps.p_rsvp_ms}",
                          ConfigWarning)
        payload_bits = self.scenario.packet_bytes * 8
        capacity = tb_size(self.grid.mcs_index, self.grid.n_pssch_rb)
        if capacity < payload_bits:
            raise ConfigError(
                f"packet_bytes={self.scenario.packet_bytes} does not fit: "
                f"n_pssch_rb={self.grid.n_pssch_rb} carries {capacity} bits at "
                f"mcs_index={self.grid.mcs_index}")
        self.channel.path_loss_table   # parses and validates bins
        self.bler_curve                # parses and validates the curve

    @property
    def bler_curve(self) -> BlerCurve:
        curve = getattr(self, "_bler_curve", None)
        if curve is None:
            if self.bler_file:
                try:
                    curve = BlerCurve.from_text(Path(self.bler_file).read_text())
                except (OSError, phy.PhyError) as exc:
                    raise ConfigError(f"bler_file {self.bler_file}: {exc}") from exc
            else:
                curve = default_bler_curve()
            object.__setattr__(self, "_bler_curve", curve)
        return curve


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (OffsetMode, PscchScheme, EdgeMode)):
        return value.value if not isinstance(value, OffsetMode) else str(value)
    return str(value)


# section -> key -> (attribute, parser).  The emit order follows this table.
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "grid": {
        "bandwidth_rbs": ("bandwidth_rbs", int),
        "subchannel_size": ("subchannel_size", int),
        "n_subch": ("n_subch", int),
        "l_subch": ("l_subch", int),
        "mcs_index": ("mcs_index", int),
        "pscch_scheme": ("pscch_scheme", PscchScheme),
        "n_pssch_rb": ("n_pssch_rb", int),
    },
    "radio": {
        "tx_power_dbm": ("tx_power_dbm", float),
        "antenna_gain_dbi": ("antenna_gain_dbi", float),
        "noise_figure_db": ("noise_figure_db", float),
        "rx_antennas": ("rx_antennas", int),
        "thermal_noise_dbm_hz": ("thermal_noise_dbm_hz", float),
        "rb_bandwidth_hz": ("rb_bandwidth_hz", float),
        "sci_sensitivity_dbm": ("sci_sensitivity_dbm", float),
        "sci_sinr_threshold_db": ("sci_sinr_threshold_db", float),
        "sci_always_decodable": ("sci_always_decodable", _parse_bool),
    },
    "sps": {
        "t1": ("t1", int),
        "t2": ("t2", int),
        "p_rsvp_ms": ("p_rsvp_ms", int),
        "p_step_ms": ("p_step_ms", int),
        "th_sps_dbm": ("th_sps_dbm", float),
        "p_resel": ("p_resel", float),
        "harq_enabled": ("harq_enabled", _parse_bool),
        "max_missed_opportunities": ("max_missed_opportunities", int),
    },
    "channel": {
        "carrier_hz": ("carrier_hz", float),
        "antenna_height_m": ("antenna_height_m", float),
        "reflection_coeff": ("reflection_coeff", float),
        "weibull_k": ("weibull_k", float),
        "bins": ("bins", str),
    },
    "scenario": {
        "lanes": ("lanes", int),
        "lane_spacing_m": ("lane_spacing_m", float),
        "road_length_m": ("road_length_m", float),
        "density_per_km_lane": ("density_per_km_lane", float),
        "speed_kmh": ("speed_kmh", float),
        "t_gen_ms": ("t_gen_ms", int),
        "packet_bytes": ("packet_bytes", int),
        "sim_time_s": ("sim_time_s", float),
        "offset_mode": ("offset_mode", OffsetMode.parse),
        "start_stagger_cycles": ("start_stagger_cycles", int),
        "edge_mode": ("edge_mode", EdgeMode),
        "measurement_window_m": ("measurement_window_m", float),
    },
    "metrics": {
        "distance_bin_m": ("distance_bin_m", float),
        "max_range_m": ("max_range_m", float),
        "ipg_bin_ms": ("ipg_bin_ms", int),
        "ipg_cap_ms": ("ipg_cap_ms", int),
    },
    "run": {
        "seed": ("seed", int),
        "out_dir": ("out_dir", str),
        "trace": ("trace", _parse_bool),
        "strict": ("strict", _parse_bool),
        "bler_file": ("bler_file", str),
    },
}

_RUN_LEVEL = {"seed", "out_dir", "trace", "strict", "bler_file"}


def _section_obj(cfg: RunConfig, section: str):
    return cfg if section == "run" else getattr(cfg, section)


def parse_and_validate(text_or_path: str | Path, is_path: bool | None = None) -> RunConfig:
    """Load a config file (or literal text), fill defaults and validate.

    Unknown sections or keys are hard errors; an empty input yields the
    built-in defaults.
    """
    if is_path is None:
        is_path = isinstance(text_or_path, Path)
    text = Path(text_or_path).read_text() if is_path else str(text_or_path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    cfg = RunConfig()
    grid_overrides: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            attr, parse = _SCHEMA[section][key]
            try:
                value = parse(raw)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from exc
            if section == "grid":
                grid_overrides[attr] = value
            else:
                setattr(_section_obj(cfg, section), attr, value)
    if grid_overrides:
        try:
            cfg.grid = GridConfig(**grid_overrides)
        except GridError as exc:
            raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def emit(cfg: RunConfig) -> str:
    """Serialize a resolved config; parsing the output reproduces it exactly."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        obj = _section_obj(cfg, section)
        for key, (attr, _) in keys.items():
            out.write(f"{key} = {_fmt(getattr(obj, attr))}\n")
        out.write("\n")
    return out.getvalue()


def apply_preset(cfg: RunConfig, name: str) -> RunConfig:
    """Bind one of the congestion presets (density, speed) onto the config."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    density, speed = PRESETS[name]
    cfg.scenario.density_per_km_lane = density
    cfg.scenario.speed_kmh = speed
    return cfg


# Parameter sweeps ------------------------------------------------------------

SWEEPABLE: dict[str, object] = {
    "sps.p_resel": float,
    "sps.th_sps_dbm": float,
    "sps.p_rsvp_ms": int,
    "sps.t2": int,
    "grid.mcs_index": int,
    "scenario.density_per_km_lane": float,
    "scenario.speed_kmh": float,
    "scenario.packet_bytes": int,
    "scenario.offset_mode": OffsetMode.parse,
}


def set_key(cfg: RunConfig, dotted: str, value) -> RunConfig:
    if dotted not in SWEEPABLE:
        raise ConfigError(
            f"{dotted!r} is not sweepable; sweepable keys: "
            f"{', '.join(sorted(SWEEPABLE))}")
    section, key = dotted.split(".", 1)
    setattr(getattr(cfg, section), key, value)
    return cfg


def parse_sweep_values(dotted: str, values_csv: str) -> list:
    if dotted not in SWEEPABLE:
        raise ConfigError(
            f"{dotted!r} is not sweepable; sweepable keys: "
            f"{', '.join(sorted(SWEEPABLE))}")
    parse = SWEEPABLE[dotted]
    return [parse(v.strip()) for v in values_csv.split(",") if v.strip()]


def sweep_configs(base: RunConfig, dotted: str, values: list,
                  seeds: list[int]) -> list[tuple[object, int, RunConfig]]:
    """One resolved config per (value, seed), identical to a standalone run."""
    jobs = []
    for value in values:
        for seed in seeds:
            cfg = copy.deepcopy(base)
            if hasattr(cfg, "_bler_curve"):
                delattr(cfg, "_bler_curve")
            set_key(cfg, dotted, value)
            cfg.seed = seed
            cfg.validate()
            jobs.append((value, seed, cfg))
    return jobs
