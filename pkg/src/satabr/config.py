"""Scenario configuration: dataclass, flat ``key = value`` files, presets."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .abr import Service
from .erica import Scheme


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    """Full description of one experiment on the n Source + VBR topology.

    Times are given in milliseconds here and converted to ticks when the
    topology is built.  ``scale`` divides the RTT, the feedback delay and the
    TCP receiver window together; the link rate is left alone.
    """

    n_sources: int = 15
    service: Service = Service.ABR
    scheme: str = "erica"  # "erica", "erica+", or "none" (no ER stamping)
    feedback_delay_ms: float = 0.01
    rtt_ms: float = 550.0
    vbr: bool = False
    duration_rtts: float = 20.0
    link_cell_rate: float = 365_000.0
    buffer_capacity: int | None = None
    scale: float = 1.0
    dest_leg_ms: float = 0.005

    # switch
    target_utilization: float = 0.9
    interval_ms: float = 1.0
    interval_cells: int = 100
    cbr_reserved: float = 0.0
    erica_plus_t0_us: float = 500.0
    erica_plus_b: float = 1.05
    erica_plus_qdlf: float = 0.5
    clamp_er_to_capacity: bool = True
    overload_floor: float = 0.05
    capacity_floor: float = 10.0

    # ABR end systems
    nrm: int = 32
    icr_fraction: float = 1 / 32
    mcr_floor: float = 10.0

    # TCP
    mss: int = 512
    rcvwnd: int = 34000 * 2**8
    header_overhead: int = 40
    trailer: int = 8
    delayed_ack: bool = False
    rto_rtts: float = 2.0

    # VBR background
    vbr_on_ms: float = 1.0
    vbr_off_ms: float = 1.0
    vbr_start_ms: float = 2.0
    vbr_peak_fraction: float = 0.8

    sample_ms: float = 1.0
    name: str = "custom"
    reference: dict[str, Any] = field(default_factory=dict)

    # -- derived quantities ------------------------------------------------
    @property
    def eff_rtt_ms(self) -> float:
        return self.rtt_ms / self.scale

    @property
    def eff_feedback_delay_ms(self) -> float:
        return self.feedback_delay_ms / self.scale

    @property
    def eff_rcvwnd(self) -> int:
        return int(round(self.rcvwnd / self.scale))

    def delays_ms(self) -> tuple[float, float, float]:
        """One-way (access, satellite, destination) delays in ms."""
        rtt = self.eff_rtt_ms
        fd = self.eff_feedback_delay_ms
        half = (rtt - fd) / 2
        dest = min(self.dest_leg_ms, half)
        return fd / 2, half - dest, dest

    def validate(self) -> "ScenarioConfig":
        if not 1 <= self.n_sources <= 64:
            raise ConfigError(f"n_sources must be in 1..64, got {self.n_sources}")
        if self.scheme not in ("erica", "erica+", "none"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scale <= 0:
            raise ConfigError("scale must be positive")
        if self.rtt_ms <= 0:
            raise ConfigError("rtt must be positive")
        if self.feedback_delay_ms < 0:
            raise ConfigError("feedback delay must be non-negative")
        if self.feedback_delay_ms > self.rtt_ms:
            raise ConfigError(
                f"feedback delay {self.feedback_delay_ms} ms exceeds the round trip time {self.rtt_ms} ms"
            )
        if self.dest_leg_ms < 0:
            raise ConfigError("destination leg delay must be non-negative")
        if self.duration_rtts <= 0:
            raise ConfigError("duration must be positive")
        if not 0 < self.target_utilization <= 1:
            raise ConfigError("target utilization must lie in (0, 1]")
        if self.buffer_capacity is not None and self.buffer_capacity < 1:
            raise ConfigError("buffer capacity must be at least one cell")
        if self.mss <= 0 or self.eff_rcvwnd < self.mss:
            raise ConfigError("receiver window must hold at least one MSS")
        if self.nrm < 2:
            raise ConfigError("nrm must be at least 2")
        if not 0 < self.icr_fraction <= 1:
            raise ConfigError("icr_fraction must lie in (0, 1]")
        return self

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


# key aliases accepted in config files and on the command line
ALIASES = {
    "n": "n_sources",
    "feedback_delay": "feedback_delay_ms",
    "rtt": "rtt_ms",
    "duration": "duration_rtts",
    "dest_leg": "dest_leg_ms",
    "interval": "interval_ms",
}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str) -> Any:
    kind = _FIELD_TYPES[key]
    text = raw.strip()
    if key == "service":
        try:
            return Service(text.lower())
        except ValueError:
            raise ConfigError(f"service must be abr or ubr, got {text!r}") from None
    if key == "scheme":
        value = text.lower().replace("_plus", "+").replace("plus", "+")
        if value not in ("erica", "erica+", "none"):
            raise ConfigError(f"scheme must be erica or erica+, got {text!r}")
        return value
    if kind == "bool":
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected on/off, got {text!r}")
    if key == "buffer_capacity":
        if text.lower() in ("unbounded", "none", "inf", ""):
            return None
        return int(text)
    try:
        if kind == "int":
            return int(float(text)) if "." in text or "e" in text.lower() else int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None
    return text


def normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in _FIELD_TYPES or key == "reference":
        raise ConfigError(f"unknown configuration key {key!r}")
    return key


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        values[normalize_key(key)] = _coerce(normalize_key(key), raw)
    return values


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = (base or ScenarioConfig()).replace(**parse_config_text(text))
    return cfg.validate()


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, str]) -> ScenarioConfig:
    changes = {}
    for key, raw in overrides.items():
        k = normalize_key(key)
        changes[k] = _coerce(k, raw)
    return cfg.replace(**changes).validate()


def _preset(name: str, ref: dict[str, Any], **kw: Any) -> ScenarioConfig:
    return ScenarioConfig(name=name, reference=ref, **kw)


RTT_CELLS = 200_750

PRESETS: dict[str, ScenarioConfig] = {
    "table1a": _preset("table1a", {"max_queue_cells": 1229, "rtt_fraction": 0.006},
                       n_sources=5, feedback_delay_ms=0.01),
    "table1b": _preset("table1b", {"max_queue_cells": 2059, "rtt_fraction": 0.01},
                       n_sources=15, feedback_delay_ms=0.01),
    "table1c": _preset("table1c", {"max_queue_cells": 18356, "rtt_fraction": 0.09},
                       n_sources=5, feedback_delay_ms=10.0),
    "table1d": _preset("table1d", {"max_queue_cells": 17309, "rtt_fraction": 0.086},
                       n_sources=15, feedback_delay_ms=10.0),
    "table2a": _preset("table2a", {"verdict": "UNBOUNDED"},
                       n_sources=15, feedback_delay_ms=550.0, scheme="erica"),
    "table2b": _preset("table2b", {"rtt_fraction": 1.6, "verdict": "BOUNDED"},
                       n_sources=15, feedback_delay_ms=550.0, scheme="erica+"),
    "table3a": _preset("table3a", {"verdict": "UNBOUNDED"},
                       n_sources=15, vbr=True, feedback_delay_ms=0.01, scheme="erica"),
    "table3b": _preset("table3b", {"verdict": "UNBOUNDED"},
                       n_sources=15, vbr=True, feedback_delay_ms=10.0, scheme="erica"),
    "table3c": _preset("table3c", {"max_queue_cells": 2006, "rtt_fraction": 0.01, "verdict": "BOUNDED"},
                       n_sources=15, vbr=True, feedback_delay_ms=0.01, scheme="erica+"),
    "table3d": _preset("table3d", {"max_queue_cells": 5824, "rtt_fraction": 0.028, "verdict": "BOUNDED"},
                       n_sources=15, vbr=True, feedback_delay_ms=10.0, scheme="erica+"),
    "ubr5": _preset("ubr5", {"max_queue_cells": 817819, "window_sum_cells": 821133},
                    n_sources=5, service=Service.UBR, feedback_delay_ms=10.0),
}


def get_preset(name: str) -> ScenarioConfig:
    try:
        return dataclasses.replace(PRESETS[name], reference=dict(PRESETS[name].reference))
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
