"""Scenario configuration: flat dotted-key text files with Table-style defaults.

The format is one `key = value` pair per line, `#` comments, values either
scalars or comma-separated sweep lists. dB/dBm quantities live only here;
everything behind the parser is linear. An empty file is a valid config and
yields the default 14 GHz / 1.4 GHz / 1024-subcarrier / 8x8 / 500 km setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .beamformer import DirectionMapping, OptimizerSettings, mapping_lines, mapping_spiral
from .channel import ArrayGeometry, FrequencyPlan, LinkBudget
from .geometry import GroundUserPosition, SatelliteGeometry, user_geometry

SCHEME_TAGS = ("rainbow", "bh_squint", "bh_no_squint", "beam_sharing")
ALLOCATORS = ("jspa", "maxch")
POWER_RULES = ("waterfill", "equal")
MAPPING_KINDS = ("lines", "spiral")


class ConfigError(ValueError):
    """Configuration problem; carries the offending key for machine handling."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete experiment description; sweepable fields hold tuples."""

    f_c_hz: float = 14e9
    bandwidth_hz: tuple[float, ...] = (1.4e9,)
    subcarriers: int = 1024
    n_x: int = 8
    n_y: int = 8
    satellite_gain_dbi: float = 0.0
    terminal_gain_dbi: float = 43.2
    noise_temperature_k: float = 290.0
    altitude_m: float = 500e3
    coverage_radius_m: float = 500e3
    earth_radius_m: float = 6371e3
    users: tuple[int, ...] = (32,)
    rician_factor_db: float = 10.0
    power_budget_dbm: float = 23.0
    tau_max_s: float = 50e-9
    grid_step_s: float = 25e-12
    convergence_tol: float = 1e-6
    max_iterations: int = 100
    mapping_kind: str = "lines"
    n_lines: int | None = None
    u_max: float | None = None
    schemes: tuple[str, ...] = SCHEME_TAGS
    allocator: tuple[str, ...] = ("jspa",)
    power_rule: tuple[str, ...] = ("waterfill",)
    slots: int | None = None
    bh_service_contour_db: float = 10.0
    seed: int = 1
    seeds: int = 1
    output_dir: str = "out"
    beam_grid_points: int = 512
    beam_stride: int | None = None
    footprint_samples: int = 16
    footprint_grid_points: int = 192

    def plan(self, bandwidth_hz: float) -> FrequencyPlan:
        return FrequencyPlan.from_bandwidth(self.f_c_hz, bandwidth_hz, self.subcarriers)

    def geom(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_x, self.n_y)

    def link(self) -> LinkBudget:
        return LinkBudget.from_db(
            self.satellite_gain_dbi, self.terminal_gain_dbi, self.noise_temperature_k
        )

    def sat(self) -> SatelliteGeometry:
        return SatelliteGeometry(self.altitude_m, self.earth_radius_m)

    def resolved_u_max(self) -> float:
        """Beams are never steered beyond the coverage edge."""
        if self.u_max is not None:
            return self.u_max
        edge = GroundUserPosition(self.coverage_radius_m, 0.0)
        direction, _ = user_geometry(self.sat(), edge)
        return direction.radius

    def build_mapping(self, m_subcarriers: int | None = None) -> DirectionMapping:
        m_sub = self.subcarriers if m_subcarriers is None else m_subcarriers
        u_max = self.resolved_u_max()
        if self.mapping_kind == "spiral":
            return mapping_spiral(m_sub, u_max, n_x=self.n_x)
        return mapping_lines(m_sub, u_max, self.n_lines, n_x=self.n_x)

    def optimizer_settings(self) -> OptimizerSettings:
        return OptimizerSettings(
            tau_max_s=self.tau_max_s,
            grid_step_s=self.grid_step_s,
            convergence_tol=self.convergence_tol,
            max_iterations=self.max_iterations,
        )

    def expand(self) -> list["ScenarioCase"]:
        """Cross product of the sweepable fields, repetition-major last."""
        cases = []
        index = 0
        for bw in self.bandwidth_hz:
            for k in self.users:
                for alloc in self.allocator:
                    for rule in self.power_rule:
                        for rep in range(self.seeds):
                            cases.append(
                                ScenarioCase(
                                    config=self,
                                    bandwidth_hz=bw,
                                    k_users=k,
                                    allocator=alloc,
                                    power_rule=rule,
                                    case_index=index,
                                    rep=rep,
                                )
                            )
                        index += 1
        return cases


@dataclass(frozen=True)
class ScenarioCase:
    """One concrete point of a sweep: fixed bandwidth, user count and allocator."""

    config: ScenarioConfig
    bandwidth_hz: float
    k_users: int
    allocator: str
    power_rule: str
    case_index: int
    rep: int

    def plan(self) -> FrequencyPlan:
        return self.config.plan(self.bandwidth_hz)

    def l_slots(self) -> int:
        return self.config.slots if self.config.slots is not None else self.k_users


# Key table: dotted key -> (attribute, parser, validator message or None).


def _positive(x: float) -> bool:
    return x > 0


def _nonneg(x: float) -> bool:
    return x >= 0


def _pos_int(x: int) -> bool:
    return x >= 1


_AUTO_FIELDS = {"mapping.n_lines", "mapping.u_max", "scenario.slots", "metrics.beam_stride"}

_KEYS: dict[str, tuple[str, type, object]] = {
    "plan.center_frequency_hz": ("f_c_hz", float, _positive),
    "plan.bandwidth_hz": ("bandwidth_hz", tuple, _positive),
    "plan.subcarriers": ("subcarriers", int, _pos_int),
    "array.n_x": ("n_x", int, _pos_int),
    "array.n_y": ("n_y", int, _pos_int),
    "link.satellite_gain_dbi": ("satellite_gain_dbi", float, None),
    "link.terminal_gain_dbi": ("terminal_gain_dbi", float, None),
    "link.noise_temperature_k": ("noise_temperature_k", float, _positive),
    "geometry.altitude_m": ("altitude_m", float, _positive),
    "geometry.coverage_radius_m": ("coverage_radius_m", float, _positive),
    "geometry.earth_radius_m": ("earth_radius_m", float, _positive),
    "users.count": ("users", tuple, _pos_int),
    "users.rician_factor_db": ("rician_factor_db", float, None),
    "users.power_budget_dbm": ("power_budget_dbm", float, None),
    "optimizer.tau_max_s": ("tau_max_s", float, _nonneg),
    "optimizer.grid_step_s": ("grid_step_s", float, _positive),
    "optimizer.convergence_tol": ("convergence_tol", float, _nonneg),
    "optimizer.max_iterations": ("max_iterations", int, _pos_int),
    "mapping.kind": ("mapping_kind", str, None),
    "mapping.n_lines": ("n_lines", int, _pos_int),
    "mapping.u_max": ("u_max", float, _positive),
    "schemes": ("schemes", tuple, None),
    "allocator": ("allocator", tuple, None),
    "power_rule": ("power_rule", tuple, None),
    "scenario.slots": ("slots", int, _pos_int),
    "bh.service_contour_db": ("bh_service_contour_db", float, _positive),
    "seed": ("seed", int, None),
    "seeds": ("seeds", int, _pos_int),
    "output_dir": ("output_dir", str, None),
    "metrics.beam_grid_points": ("beam_grid_points", int, lambda x: x >= 2),
    "metrics.beam_stride": ("beam_stride", int, _pos_int),
    "metrics.footprint_samples": ("footprint_samples", int, _pos_int),
    "metrics.footprint_grid_points": ("footprint_grid_points", int, lambda x: x >= 2),
}

_INT_FIELDS = {"subcarriers", "n_x", "n_y", "users", "max_iterations", "n_lines",
               "slots", "seed", "seeds", "beam_grid_points", "beam_stride",
               "footprint_samples", "footprint_grid_points"}
_CHOICE_FIELDS = {"schemes": SCHEME_TAGS, "allocator": ALLOCATORS,
                  "power_rule": POWER_RULES, "mapping_kind": MAPPING_KINDS}


def _parse_scalar(key: str, attr: str, text: str):
    try:
        if attr in _INT_FIELDS:
            value = int(float(text))
            if float(text) != value:
                raise ValueError
            return value
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as a number") from None


def parse_config_text(text: str, path: str = "<config>") -> ScenarioConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in _KEYS:
            raise ConfigError(key, "unknown configuration key")
        attr, kind, validator = _KEYS[key]
        if key in _AUTO_FIELDS and value_text == "auto":
            values[attr] = None
            continue
        if kind is str:
            values[attr] = value_text
        elif kind is tuple:
            parts = [p.strip() for p in value_text.split(",") if p.strip()]
            if not parts:
                raise ConfigError(key, "empty list")
            if attr in _CHOICE_FIELDS:
                values[attr] = tuple(parts)
            else:
                values[attr] = tuple(_parse_scalar(key, attr, p) for p in parts)
        else:
            values[attr] = _parse_scalar(key, attr, value_text)
        if validator is not None and values[attr] is not None:
            items = values[attr] if isinstance(values[attr], tuple) else (values[attr],)
            if attr not in _CHOICE_FIELDS and not all(validator(x) for x in items):
                raise ConfigError(key, f"invalid value {value_text!r}")
    config = ScenarioConfig(**values)
    validate_config(config)
    return config


def validate_config(config: ScenarioConfig) -> None:
    for attr, choices in _CHOICE_FIELDS.items():
        entries = getattr(config, attr)
        entries = entries if isinstance(entries, tuple) else (entries,)
        key = next(k for k, (a, _, _) in _KEYS.items() if a == attr)
        for entry in entries:
            if entry not in choices:
                raise ConfigError(key, f"{entry!r} is not one of {choices}")
        if isinstance(getattr(config, attr), tuple) and not entries:
            raise ConfigError(key, "must not be empty")
    if config.u_max is not None and config.u_max > 1.0:
        raise ConfigError("mapping.u_max", "must be <= 1")
    edge_angle = config.coverage_radius_m / config.earth_radius_m
    horizon = math.acos(config.earth_radius_m / (config.earth_radius_m + config.altitude_m))
    if edge_angle > horizon:
        raise ConfigError("geometry.coverage_radius_m", "coverage extends beyond the horizon")


def parse_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), path=str(path))


def serialize_config(config: ScenarioConfig) -> str:
    lines = []
    for key, (attr, kind, _) in _KEYS.items():
        value = getattr(config, attr)
        if value is None:
            lines.append(f"{key} = auto")
        elif isinstance(value, tuple):
            lines.append(f"{key} = {','.join(_fmt(v) for v in value)}")
        else:
            lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))
