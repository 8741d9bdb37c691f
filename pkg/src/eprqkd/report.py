"""Run reports and deterministic serialization.

Floats are printed with 17 significant digits (round-trip exact), keys are
sorted, and the results payload excludes wall time, so identical
config+seed runs produce byte-identical payloads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .rng import ALGORITHM_ID

ARTIFACT_VERSION = "eprqkd-0.1.0"


@dataclass(frozen=True)
class RunReport:
    """A scenario run: config echo, provenance, and the results payload."""

    scenario: str
    config_echo: dict
    payload: dict
    wall_time_s: float
    version: str = ARTIFACT_VERSION
    rng_algorithm: str = ALGORITHM_ID
    exit_code: int = 0

    def payload_json(self) -> str:
        """The deterministic part of the report."""
        return to_json(self.payload)

    def to_json(self) -> str:
        body = {
            "scenario": self.scenario,
            "version": self.version,
            "rng_algorithm": self.rng_algorithm,
            "config": self.config_echo,
            "wall_time_s": self.wall_time_s,
            "payload": self.payload,
        }
        return to_json(body)


def _normalize(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def to_json(value, indent: int = 0) -> str:
    """JSON with sorted keys and %.17g floats, for checkable determinism."""
    value = _normalize(value)
    pad = " " * (2 * indent)
    inner = " " * (2 * (indent + 1))
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value}")
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [to_json(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}"
            for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_report(path: str, report: RunReport) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")


SWEEP_CSV_HEADER = "model,param,eta,var_x_new,var_p_new,product,eve_ber,alarm_rate"


def write_sweep_csv(path: str, rows: list[dict]) -> None:
    """Attack-sweep table, one row per grid point."""
    names = SWEEP_CSV_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for row in rows:
            formatted = []
            for name in names:
                value = _normalize(row[name])
                formatted.append(
                    format(value, ".17g") if isinstance(value, float) else str(value)
                )
            fh.write(",".join(formatted) + "\n")
