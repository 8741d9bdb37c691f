"""Scenario orchestration: dispatch a validated config to the simulators.

Exit-code contract: 0 success, 2 for a simulate run whose alarm fired (so
shell pipelines can branch on eavesdropper detection), 1 on error.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from .adversary import (
    BeamsplitterTap,
    EveModel,
    InterceptResend,
    NoEve,
    QndTap,
    predicted_signature,
)
from .bell import bell_S, truncation_convergence
from .config import BellSpec, ScenarioConfig, SweepGrid
from .epr import epr_criterion
from .fock import apply_fock_loss, evolved_cat_state, pair_coherent_state, phase_encode
from .protocol import ProtocolConfig, analytic_baseline, run_protocol, write_round_csv
from .report import RunReport, write_report, write_sweep_csv
from .rng import SWEEP_STREAM, stream_generator


def eve_echo(model: EveModel) -> dict:
    out: dict = {"model": model.kind}
    if isinstance(model, InterceptResend):
        out["r"] = model.r
    elif isinstance(model, BeamsplitterTap):
        out["eta_tap"] = model.eta_tap
    elif isinstance(model, QndTap):
        out["eta_tap"] = model.eta_tap
        out["r_sq"] = model.r_sq
    return out


def protocol_echo(config: ProtocolConfig) -> dict:
    return {
        "alpha0": config.alpha0,
        "alpha1": config.alpha1,
        "kappa_t": config.kappa_t,
        "channel_eta": config.channel_eta,
        "rounds": config.rounds,
        "seed": config.seed,
        "alarm_z": config.alarm_z,
        "outlier_z": config.outlier_z,
        "outlier_margin_z": config.outlier_margin_z,
        "eve": eve_echo(config.eve),
    }


def config_echo(config: ScenarioConfig) -> dict:
    echo: dict = {"scenario": config.kind, "seed": config.seed, "workers": config.workers}
    if config.protocol is not None:
        echo["protocol"] = protocol_echo(config.protocol)
    if config.sweep is not None:
        echo["sweep"] = {
            "param": config.sweep.param,
            "start": config.sweep.start,
            "stop": config.sweep.stop,
            "step": config.sweep.step,
            "repeats": config.sweep.repeats,
            "rounds": config.sweep.rounds,
        }
    if config.bell is not None:
        spec = config.bell
        angles = spec.effective_angles()
        echo["bell"] = {
            "state": spec.state,
            "r0": spec.r0,
            "alpha0": spec.alpha0,
            "beta0": spec.beta0,
            "kappa_t": spec.kappa_t,
            "truncation": spec.effective_truncation(),
            "loss_eta": spec.loss_eta,
            "shifted": spec.shifted,
            "angles": {
                "theta": angles.theta,
                "phi": angles.phi,
                "theta_prime": angles.theta_prime,
                "phi_prime": angles.phi_prime,
            },
            "convergence_step": spec.convergence_step,
        }
    return echo


def _simulate_payload(config: ScenarioConfig) -> tuple[dict, int]:
    proto = config.protocol
    rounds, report = run_protocol(proto, workers=config.workers)
    payload = {
        "product_est": report.product_est,
        "product_stderr": report.product_stderr,
        "baseline_product": report.baseline_product,
        "alarm": report.alarm,
        "outlier_fraction": report.outlier_fraction,
        "ber": report.ber,
        "rounds": proto.rounds,
        "resolution_ratio": proto.resolution_ratio(),
    }
    if config.csv_path:
        write_round_csv(config.csv_path, rounds, proto)
    return payload, (2 if report.alarm else 0)


def _epr_check_payload(config: ScenarioConfig) -> tuple[dict, int]:
    proto = config.protocol
    analytic = analytic_baseline(proto)
    _, report = run_protocol(proto, workers=config.workers)
    payload = {
        "analytic": {
            "gamma_x": analytic.gamma_x,
            "gamma_p": analytic.gamma_p,
            "var_x_inf": analytic.var_x_inf,
            "var_p_inf": analytic.var_p_inf,
            "product": analytic.product,
            "epr_correlated": epr_criterion(analytic),
        },
        "estimated": {
            "product": report.product_est,
            "stderr": report.product_stderr,
            "epr_correlated": report.product_est < 1.0,
            "rounds": proto.rounds,
        },
    }
    return payload, 0


def _sweep_model(base: EveModel, param: str, value: float) -> EveModel:
    if param == "eta_tap":
        if isinstance(base, QndTap):
            return QndTap(eta_tap=value, r_sq=base.r_sq)
        return BeamsplitterTap(eta_tap=value)
    if param == "r":
        return InterceptResend(r=value)
    if param == "r_sq":
        if not isinstance(base, QndTap):
            raise ValueError("sweeping r_sq requires a qnd eavesdropper with an eta_tap")
        return QndTap(eta_tap=base.eta_tap, r_sq=value)
    raise ValueError(f"cannot sweep parameter {param!r} on the eavesdropper")


def sweep_rows(proto: ProtocolConfig, grid: SweepGrid, seed: int) -> list[dict]:
    """One row per grid point: predicted signature plus seeded alarm rate."""
    values = grid.values()
    rounds = grid.rounds if grid.rounds is not None else proto.rounds
    seed_rng = stream_generator(seed, SWEEP_STREAM)
    run_seeds = seed_rng.integers(0, 2**63, size=(values.size, grid.repeats))

    rows = []
    for i, value in enumerate(values):
        if grid.param == "channel_eta":
            point = replace(proto, channel_eta=float(value), rounds=rounds)
        else:
            point = replace(
                proto, eve=_sweep_model(proto.eve, grid.param, float(value)), rounds=rounds
            )
        signature = predicted_signature(point.eve, point)
        alarms = 0
        for j in range(grid.repeats):
            _, report = run_protocol(replace(point, seed=int(run_seeds[i, j])))
            alarms += int(report.alarm)
        eta = point.eve.eta_tap if hasattr(point.eve, "eta_tap") else point.channel_eta
        rows.append(
            {
                "model": point.eve.kind,
                "param": float(value),
                "eta": float(eta),
                "var_x_new": signature.var_x_inf_new,
                "var_p_new": signature.var_p_inf_new,
                "product": signature.var_x_inf_new * signature.var_p_inf_new,
                "eve_ber": signature.eve_ber,
                "alarm_rate": alarms / grid.repeats,
            }
        )
    return rows


def _attack_sweep_payload(config: ScenarioConfig) -> tuple[dict, int]:
    rows = sweep_rows(config.protocol, config.sweep, config.seed)
    if config.csv_path:
        write_sweep_csv(config.csv_path, rows)
    return {"rows": rows, "param": config.sweep.param}, 0


def build_bell_state(spec: BellSpec, truncation: int | None = None):
    """Construct the configured Bell-test state at a given truncation."""
    n_max = truncation if truncation is not None else spec.effective_truncation()
    if spec.state == "pair-coherent":
        state = pair_coherent_state(spec.r0, n_max)
    else:
        state = evolved_cat_state(spec.alpha0, spec.beta0, spec.kappa_t, n_max)
    if spec.shifted:
        state = phase_encode(state, True)
    if spec.loss_eta < 1.0:
        state = apply_fock_loss(state, spec.loss_eta)
    return state


def _bell_payload(config: ScenarioConfig) -> tuple[dict, int]:
    spec = config.bell
    angles = spec.effective_angles()
    n_max = spec.effective_truncation()
    outcome = bell_S(build_bell_state(spec), angles)
    s_low, s_high, delta = truncation_convergence(
        lambda n: build_bell_state(spec, truncation=n), angles, n_max, spec.convergence_step
    )
    payload = {
        "S": outcome.S,
        "violates_ch": outcome.S > 1.0,
        "p_plus_a_theta_prime": outcome.p_plus_a,
        "p_plus_b_phi": outcome.p_plus_b,
        "p_joint": {f"{ka},{kb}": v for (ka, kb), v in outcome.p_joint.items()},
        "truncation": n_max,
        "convergence": {
            "s_at_truncation": s_low,
            "s_at_truncation_plus_step": s_high,
            "delta": delta,
            "step": spec.convergence_step,
        },
    }
    return payload, 0


def run_scenario(config: ScenarioConfig) -> RunReport:
    """Dispatch a scenario, write any configured outputs, return the report."""
    start = time.perf_counter()
    if config.kind == "simulate":
        payload, code = _simulate_payload(config)
    elif config.kind == "epr-check":
        payload, code = _epr_check_payload(config)
    elif config.kind == "attack-sweep":
        payload, code = _attack_sweep_payload(config)
    else:
        payload, code = _bell_payload(config)
    report = RunReport(
        scenario=config.kind,
        config_echo=config_echo(config),
        payload=payload,
        wall_time_s=time.perf_counter() - start,
        exit_code=code,
    )
    if config.report_path:
        write_report(config.report_path, report)
    return report
