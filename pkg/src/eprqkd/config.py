"""Scenario configuration: a strict YAML-subset key-value format.

Unknown keys are rejected and every range violation names the offending
field.  The four scenario kinds are `simulate`, `epr-check`,
`attack-sweep`, and `bell`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .adversary import BeamsplitterTap, EveModel, InterceptResend, NoEve, QndTap
from .bell import AngleSet
from .protocol import ProtocolConfig

SCENARIO_KINDS = ("simulate", "epr-check", "attack-sweep", "bell")

PAIR_COHERENT_ANGLES = AngleSet(
    theta=0.0, phi=-np.pi / 4.0, theta_prime=np.pi / 2.0, phi_prime=-3.0 * np.pi / 4.0
)
CAT_ANGLES = AngleSet(
    theta=0.42 * np.pi, phi=-0.28 * np.pi, theta_prime=-0.28 * np.pi, phi_prime=0.42 * np.pi
)


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class SweepGrid:
    """One swept parameter over an inclusive [start, stop] grid."""

    param: str
    start: float
    stop: float
    step: float
    repeats: int = 20
    rounds: int | None = None

    SWEEPABLE = ("eta_tap", "r_sq", "r", "channel_eta")

    def __post_init__(self):
        if self.param not in self.SWEEPABLE:
            raise ConfigError(f"sweep.param must be one of {self.SWEEPABLE}, got {self.param!r}")
        if self.stop < self.start:
            raise ConfigError("sweep grid must be monotone: stop >= start")
        if self.stop > self.start and self.step <= 0:
            raise ConfigError("sweep.step must be positive")
        if self.repeats < 1:
            raise ConfigError("sweep.repeats must be positive")
        if self.rounds is not None and self.rounds < 100:
            raise ConfigError("sweep.rounds must be at least 100")

    def values(self) -> np.ndarray:
        if self.stop == self.start:
            return np.array([self.start])
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass(frozen=True)
class BellSpec:
    """Which Bell-test state to build and how to analyze it."""

    state: str = "pair-coherent"
    r0: float = 1.1
    alpha0: float = 0.9
    beta0: float = 0.9
    kappa_t: float = 0.6
    truncation: int | None = None
    loss_eta: float = 1.0
    shifted: bool = False
    angles: AngleSet | None = None
    convergence_step: int = 10

    def __post_init__(self):
        if self.state not in ("pair-coherent", "cat"):
            raise ConfigError("bell.state must be 'pair-coherent' or 'cat'")
        if self.state == "pair-coherent" and self.r0 <= 0:
            raise ConfigError("bell.r0 must be positive")
        if self.truncation is not None and self.truncation < 5:
            raise ConfigError("bell.truncation must be at least 5")
        if not 0.0 <= self.loss_eta <= 1.0:
            raise ConfigError("bell.loss_eta must lie in [0, 1]")
        if self.convergence_step < 1:
            raise ConfigError("bell.convergence_step must be positive")

    def effective_truncation(self) -> int:
        if self.truncation is not None:
            return self.truncation
        return 40 if self.state == "pair-coherent" else 30

    def effective_angles(self) -> AngleSet:
        if self.angles is not None:
            return self.angles
        return PAIR_COHERENT_ANGLES if self.state == "pair-coherent" else CAT_ANGLES


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully validated scenario: kind plus the sections it needs."""

    kind: str
    seed: int = 0
    workers: int = 1
    protocol: ProtocolConfig | None = None
    sweep: SweepGrid | None = None
    bell: BellSpec | None = None
    report_path: str | None = None
    csv_path: str | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"scenario must be one of {SCENARIO_KINDS}, got {self.kind!r}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.kind in ("simulate", "epr-check", "attack-sweep") and self.protocol is None:
            raise ConfigError(f"scenario {self.kind!r} needs a protocol section")
        if self.kind == "attack-sweep" and self.sweep is None:
            raise ConfigError("scenario 'attack-sweep' needs a sweep section")
        if self.kind == "bell" and self.bell is None:
            raise ConfigError("scenario 'bell' needs a bell section")


def _require_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a key-value mapping")
    return value


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _number(mapping: dict, key: str, where: str, default=None):
    if key not in mapping:
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    return value


def _parse_eve(raw) -> EveModel:
    raw = _require_mapping(raw, "protocol.eve")
    _reject_unknown(raw, {"model", "r", "eta_tap", "r_sq"}, "protocol.eve")
    model = raw.get("model", "none")
    try:
        if model == "none":
            return NoEve()
        if model == "intercept-resend":
            return InterceptResend(r=_number(raw, "r", "protocol.eve", 1.0))
        if model == "tap":
            return BeamsplitterTap(eta_tap=_number(raw, "eta_tap", "protocol.eve", 0.5))
        if model == "qnd":
            return QndTap(
                eta_tap=_number(raw, "eta_tap", "protocol.eve", 0.5),
                r_sq=_number(raw, "r_sq", "protocol.eve", 1.0),
            )
    except ValueError as exc:
        raise ConfigError(f"protocol.eve: {exc}") from exc
    raise ConfigError(
        f"protocol.eve.model must be none|intercept-resend|tap|qnd, got {model!r}"
    )


_PROTOCOL_KEYS = {
    "alpha0",
    "alpha1",
    "kappa_t",
    "channel_eta",
    "rounds",
    "alarm_z",
    "outlier_z",
    "outlier_margin_z",
    "eve",
}


def _parse_protocol(raw, seed: int) -> ProtocolConfig:
    raw = _require_mapping(raw, "protocol")
    _reject_unknown(raw, _PROTOCOL_KEYS, "protocol")
    kwargs: dict[str, Any] = {"seed": seed}
    for key in _PROTOCOL_KEYS - {"eve", "rounds"}:
        value = _number(raw, key, "protocol")
        if value is not None:
            kwargs[key] = float(value)
    if "rounds" in raw:
        rounds = raw["rounds"]
        if isinstance(rounds, bool) or not isinstance(rounds, int):
            raise ConfigError("protocol.rounds must be an integer")
        kwargs["rounds"] = rounds
    kwargs["eve"] = _parse_eve(raw.get("eve"))
    try:
        return ProtocolConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from exc


def _parse_sweep(raw) -> SweepGrid | None:
    if raw is None:
        return None
    raw = _require_mapping(raw, "sweep")
    _reject_unknown(raw, {"param", "start", "stop", "step", "repeats", "rounds"}, "sweep")
    for key in ("param", "start", "stop", "step"):
        if key not in raw:
            raise ConfigError(f"sweep.{key} is required")
    kwargs = dict(
        param=str(raw["param"]),
        start=float(_number(raw, "start", "sweep")),
        stop=float(_number(raw, "stop", "sweep")),
        step=float(_number(raw, "step", "sweep")),
    )
    if "repeats" in raw:
        kwargs["repeats"] = int(_number(raw, "repeats", "sweep"))
    if "rounds" in raw:
        kwargs["rounds"] = int(_number(raw, "rounds", "sweep"))
    return SweepGrid(**kwargs)


def _parse_angles(raw) -> AngleSet | None:
    if raw is None:
        return None
    raw = _require_mapping(raw, "bell.angles")
    keys = {"theta", "phi", "theta_prime", "phi_prime"}
    _reject_unknown(raw, keys, "bell.angles")
    missing = keys - set(raw)
    if missing:
        raise ConfigError(f"bell.angles missing {sorted(missing)}")
    return AngleSet(**{k: float(_number(raw, k, "bell.angles")) for k in keys})


def _parse_bell(raw) -> BellSpec | None:
    if raw is None:
        return None
    raw = _require_mapping(raw, "bell")
    allowed = {
        "state",
        "r0",
        "alpha0",
        "beta0",
        "kappa_t",
        "truncation",
        "loss_eta",
        "shifted",
        "angles",
        "convergence_step",
    }
    _reject_unknown(raw, allowed, "bell")
    kwargs: dict[str, Any] = {}
    if "state" in raw:
        kwargs["state"] = str(raw["state"])
    for key in ("r0", "alpha0", "beta0", "kappa_t", "loss_eta"):
        value = _number(raw, key, "bell")
        if value is not None:
            kwargs[key] = float(value)
    for key in ("truncation", "convergence_step"):
        if key in raw:
            kwargs[key] = int(_number(raw, key, "bell"))
    if "shifted" in raw:
        if not isinstance(raw["shifted"], bool):
            raise ConfigError("bell.shifted must be a boolean")
        kwargs["shifted"] = raw["shifted"]
    kwargs["angles"] = _parse_angles(raw.get("angles"))
    return BellSpec(**kwargs)


_TOP_KEYS = {"scenario", "seed", "workers", "protocol", "sweep", "bell", "output"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario from key-value text.

    Raises ConfigError with line/column on syntax errors and with the
    offending field name on range violations or unknown keys.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"config syntax error{where}: {exc}") from exc
    raw = _require_mapping(raw, "config")
    if not raw:
        raise ConfigError("empty configuration")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if "scenario" not in raw:
        raise ConfigError("config.scenario is required")
    kind = str(raw["scenario"])

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    workers = raw.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int):
        raise ConfigError("workers must be an integer")

    output = _require_mapping(raw.get("output"), "output")
    _reject_unknown(output, {"report", "csv"}, "output")

    protocol = None
    if raw.get("protocol") is not None or kind in ("simulate", "epr-check", "attack-sweep"):
        protocol = _parse_protocol(raw.get("protocol"), seed)

    return ScenarioConfig(
        kind=kind,
        seed=seed,
        workers=workers,
        protocol=protocol,
        sweep=_parse_sweep(raw.get("sweep")),
        bell=_parse_bell(raw.get("bell")),
        report_path=output.get("report"),
        csv_path=output.get("csv"),
    )
