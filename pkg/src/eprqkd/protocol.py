"""End-to-end key-transmission protocol with eavesdropping detection.

Per round the sender encodes one bit as the coherent amplitude fed into a
two-mode parametric interaction, keeps one output mode, and transmits the
other through a lossy (and possibly attacked) channel.  The receiver
measures X or P at random, decodes the bit by nearest mean, and both
parties record only the fluctuation of their result about the
bit-conditional mean.  Comparing fluctuation transcripts over a public
channel yields the inference-variance product; any rise above the
calibrated clean-channel baseline, or an excess of per-round conditional
outliers, raises the alarm.

The receiver holds the transmitted mode (mode 0 everywhere), the sender
the retained mode (mode 1).  Public transcripts carry bases and
fluctuations only — never bit values.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .adversary import (
    EveModel,
    InterceptResend,
    NoEve,
    gaussian_eve_channel,
    gaussian_tail,
    nearest_bit,
)
from .epr import InferenceResult, PairedSamples, estimate_inference, inference_variance_analytic
from .gaussian import (
    GaussianState,
    QuadratureBasis,
    apply_loss,
    displace_coherent,
    drop_mode,
    selected_moments,
    spectral_factor,
    two_mode_squeeze,
    vacuum_state,
)
from .rng import BITS_STREAM, CALIBRATION_STREAM, round_generator, stream_generator


class Role(Enum):
    ALICE = "alice"
    BOB = "bob"


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol parameters.

    alpha0/alpha1 are the two coherent input amplitudes (bit 1 / bit 0),
    kappa_t the parametric interaction strength, channel_eta the intensity
    transmission of the channel to the receiver.  alarm_z is the
    baseline-exceedance threshold in standard errors; outlier_z the
    per-round z threshold, with the outlier-fraction alarm tripping
    outlier_margin_z binomial standard errors above its expectation.
    """

    alpha0: float = 8.0
    alpha1: float = 0.0
    kappa_t: float = 0.5
    channel_eta: float = 1.0
    rounds: int = 10_000
    eve: EveModel = field(default_factory=NoEve)
    seed: int = 0
    alarm_z: float = 3.0
    outlier_z: float = 3.0
    outlier_margin_z: float = 4.0

    def __post_init__(self):
        if not self.alpha0 > self.alpha1 >= 0:
            raise ValueError("require alpha0 > alpha1 >= 0")
        if not self.kappa_t > 0:
            raise ValueError("kappa_t must be positive")
        if not 0.0 <= self.channel_eta <= 1.0:
            raise ValueError("channel_eta must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if not (self.alarm_z > 0 and self.outlier_z > 0 and self.outlier_margin_z > 0):
            raise ValueError("alarm thresholds must be positive")

    def pre_loss_mean(self, bit: int) -> float:
        """Transmitted-mode X (and P) mean before channel loss: √2·α·cosh(kt)."""
        alpha = self.alpha0 if bit == 1 else self.alpha1
        return np.sqrt(2.0) * alpha * np.cosh(self.kappa_t)

    def bob_mean(self, bit: int) -> float:
        """Receiver's bit-conditional mean, channel attenuation included."""
        return np.sqrt(self.channel_eta) * self.pre_loss_mean(bit)

    def alice_mean(self, bit: int, basis: QuadratureBasis) -> float:
        """Sender's bit-conditional mean on the retained mode (no loss).

        X centres on √2·α·sinh(kt); P on its negative — the retained mode's
        P is anticorrelated with the transmitted one.
        """
        alpha = self.alpha0 if bit == 1 else self.alpha1
        m = np.sqrt(2.0) * alpha * np.sinh(self.kappa_t)
        return m if basis is QuadratureBasis.X else -m

    def bob_sigma(self) -> float:
        """Receiver's clean-channel standard deviation per quadrature."""
        return np.sqrt(
            self.channel_eta * np.cosh(2.0 * self.kappa_t) + 1.0 - self.channel_eta
        )

    def separation(self) -> float:
        """Distance between the receiver's two bit means."""
        return self.bob_mean(1) - self.bob_mean(0)

    def resolution_ratio(self) -> float:
        """Bit separation over the receiver's noise; decoding wants this large."""
        sigma = self.bob_sigma()
        return self.separation() / sigma if sigma > 0 else np.inf


@dataclass(frozen=True)
class BitRound:
    """One protocol round as both parties record it (private)."""

    bit_sent: int
    bob_basis: QuadratureBasis
    alice_basis: QuadratureBasis
    bob_raw: float
    bob_fluct: float
    alice_raw: float
    alice_fluct: float
    bob_bit_decoded: int


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of the public-channel comparison."""

    product_est: float
    product_stderr: float
    baseline_product: float
    alarm: bool
    outlier_fraction: float
    ber: float


def encode_round(bit: int, config: ProtocolConfig) -> GaussianState:
    """Two-mode state after encoding, attack, and channel loss.

    Coherent input α_bit·e^{iπ/4} on the transmitted mode, vacuum on the
    retained one, the parametric interaction, then the configured attack
    and the lossy channel on mode 0.  Tap attacks' Eve port is traced out;
    intercept-resend uses its ideal-decode Gaussian surrogate (see
    gaussian_eve_channel) — the runner simulates that attack exactly.
    """
    state = encode_round_full(bit, config)
    while state.n_modes > 2:
        state = drop_mode(state, state.n_modes - 1)
    return state


def encode_round_full(bit: int, config: ProtocolConfig) -> GaussianState:
    """encode_round without tracing out the eavesdropper's port."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    alpha = config.alpha0 if bit == 1 else config.alpha1
    state = vacuum_state(2)
    state = displace_coherent(state, 0, alpha, np.pi / 4.0)
    state = two_mode_squeeze(state, 0, 1, config.kappa_t)
    state = gaussian_eve_channel(state, config.eve)
    return apply_loss(state, 0, config.channel_eta)


def bob_decode(raw: float, basis: QuadratureBasis, config: ProtocolConfig) -> int:
    """Nearest-mean bit decision; both quadratures share the same means.

    Exact midpoints resolve to bit 0.
    """
    del basis  # X and P centre on the same bit-conditional means
    return nearest_bit(raw, config.bob_mean(1), config.bob_mean(0))


def record_fluctuation(
    raw: float, bit: int, basis: QuadratureBasis, role: Role, config: ProtocolConfig
) -> float:
    """Result minus the role/basis/bit-implied mean.

    The receiver's means include the channel attenuation; the sender's
    retained mode is not attenuated.
    """
    if role is Role.BOB:
        return float(raw - config.bob_mean(bit))
    return float(raw - config.alice_mean(bit, basis))


def message_bits(config: ProtocolConfig, bits: Sequence[int] | None = None) -> np.ndarray:
    """The bit sequence to send: explicit message or seeded pseudorandom."""
    if bits is not None:
        arr = np.asarray(list(bits), dtype=int)
        if arr.size != config.rounds:
            raise ValueError(f"message length {arr.size} != rounds {config.rounds}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("message bits must be 0 or 1")
        return arr
    rng = stream_generator(config.seed, BITS_STREAM)
    return rng.integers(0, 2, size=config.rounds)


def _gaussian_round_tables(config: ProtocolConfig):
    """Per-(bit, basis) means and a shared factor for joint outcome draws."""
    states = [encode_round_full(b, config) for b in (0, 1)]
    n_modes = states[0].n_modes
    mus = np.zeros((2, 2, n_modes))
    factors = []
    for ib, basis in enumerate((QuadratureBasis.X, QuadratureBasis.P)):
        bases = [basis, basis] + [QuadratureBasis.X] * (n_modes - 2)
        for bit in (0, 1):
            mu, cov = selected_moments(states[bit], bases)
            mus[bit, ib] = mu
        factors.append(spectral_factor(cov))  # covariance is bit-independent
    return mus, factors, n_modes


def _fill_gaussian_rounds(config, bits, basis_idx, z, out):
    """Vectorized outcomes for the Gaussian (none/tap/QND) attack path."""
    mus, factors, _ = _gaussian_round_tables(config)
    for ib in (0, 1):
        sel = np.flatnonzero(basis_idx == ib)
        if sel.size == 0:
            continue
        out[sel] = mus[bits[sel], ib] + z[sel] @ factors[ib].T


def _fill_intercept_rounds(config, bits, basis_idx, z, bob_raw, alice_raw):
    """Exact per-round intercept-resend simulation (pre-draws in z).

    Draw layout per round: z[:, 0:2] feed the joint (X_a, sender) outcome,
    z[:, 2] Eve's measurement noise, z[:, 3] the receiver's outcome on the
    resent-and-attenuated state.
    """
    model: InterceptResend = config.eve
    r = model.r
    eta = config.channel_eta
    kt = config.kappa_t
    cosh2 = np.cosh(2.0 * kt)
    sinh2 = np.sinh(2.0 * kt)

    pre_means = np.array([config.pre_loss_mean(0), config.pre_loss_mean(1)])
    alice_x = np.array(
        [config.alice_mean(0, QuadratureBasis.X), config.alice_mean(1, QuadratureBasis.X)]
    )
    alice_p = np.array(
        [config.alice_mean(0, QuadratureBasis.P), config.alice_mean(1, QuadratureBasis.P)]
    )
    factor_xx = spectral_factor(np.array([[cosh2, sinh2], [sinh2, cosh2]]))
    sigma_q = np.sqrt(cosh2)

    is_p = basis_idx == 1
    # Joint (X_a, sender) draw: X–X correlated, X–P independent across modes.
    pair = z[:, :2] @ factor_xx.T
    x_true = pre_means[bits] + np.where(is_p, sigma_q * z[:, 0], pair[:, 0])
    alice_raw[:] = np.where(
        is_p, alice_p[bits] + sigma_q * z[:, 1], alice_x[bits] + pair[:, 1]
    )

    record = x_true + z[:, 2] / np.sqrt(r)
    eve_bits = nearest_bit(record, pre_means[1], pre_means[0])

    sigma_bob_x = np.sqrt(eta / r + 1.0 - eta)
    sigma_bob_p = np.sqrt(eta * r + 1.0 - eta)
    bob_x = np.sqrt(eta) * record + sigma_bob_x * z[:, 3]
    bob_p = np.sqrt(eta) * pre_means[eve_bits] + sigma_bob_p * z[:, 3]
    bob_raw[:] = np.where(is_p, bob_p, bob_x)


def _draw_rounds(config: ProtocolConfig, n_draws: int, workers: int):
    """Per-round basis choices and standard-normal draws.

    Each round consumes its own counter-based stream derived from
    (seed, round index), so the result is identical for any worker count
    and any execution order.
    """
    n = config.rounds
    basis_idx = np.empty(n, dtype=np.int64)
    z = np.empty((n, n_draws))

    def fill(lo: int, hi: int):
        for i in range(lo, hi):
            rng = round_generator(config.seed, i)
            basis_idx[i] = rng.integers(0, 2)
            z[i] = rng.standard_normal(n_draws)

    if workers <= 1:
        fill(0, n)
    else:
        chunk = -(-n // workers)
        spans = [(k * chunk, min((k + 1) * chunk, n)) for k in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: fill(*span), [s for s in spans if s[0] < s[1]]))
    return basis_idx, z


def run_protocol(
    config: ProtocolConfig,
    bits: Sequence[int] | None = None,
    workers: int = 1,
    baseline_product: float | None = None,
) -> tuple[list[BitRound], DetectionReport]:
    """Run the full protocol and the public-channel detection tests.

    Args:
        config: protocol parameters, attack model included.
        bits: explicit message; omitted means seeded pseudorandom bits.
        workers: parallel round evaluation; transcripts are byte-identical
            for any worker count.
        baseline_product: calibrated clean-channel product; defaults to the
            analytic value for the configured loss.

    Returns:
        (per-round records, detection report).
    """
    if config.rounds < 100:
        warnings.warn("fewer than 100 rounds gives an unreliable detection report")
    sent = message_bits(config, bits)

    intercept = isinstance(config.eve, InterceptResend)
    if intercept:
        n_draws = 4
    else:
        n_draws = encode_round_full(0, config).n_modes
    basis_idx, z = _draw_rounds(config, n_draws, workers)

    n = config.rounds
    bob_raw = np.empty(n)
    alice_raw = np.empty(n)
    if intercept:
        _fill_intercept_rounds(config, sent, basis_idx, z, bob_raw, alice_raw)
    else:
        out = np.empty((n, n_draws))
        _fill_gaussian_rounds(config, sent, basis_idx, z, out)
        bob_raw, alice_raw = out[:, 0].copy(), out[:, 1].copy()

    bob_bits = nearest_bit(bob_raw, config.bob_mean(1), config.bob_mean(0))
    bob_means = np.array([config.bob_mean(0), config.bob_mean(1)])
    bob_fluct = bob_raw - bob_means[bob_bits]  # decoded bit: the receiver's best knowledge
    alice_means = np.array(
        [
            [config.alice_mean(0, QuadratureBasis.X), config.alice_mean(0, QuadratureBasis.P)],
            [config.alice_mean(1, QuadratureBasis.X), config.alice_mean(1, QuadratureBasis.P)],
        ]
    )
    alice_fluct = alice_raw - alice_means[sent, basis_idx]

    report = _detection_report(
        config, sent, basis_idx, bob_fluct, alice_fluct, bob_bits, baseline_product
    )

    basis_enum = (QuadratureBasis.X, QuadratureBasis.P)
    rounds = [
        BitRound(
            bit_sent=int(sent[i]),
            bob_basis=basis_enum[basis_idx[i]],
            alice_basis=basis_enum[basis_idx[i]],
            bob_raw=float(bob_raw[i]),
            bob_fluct=float(bob_fluct[i]),
            alice_raw=float(alice_raw[i]),
            alice_fluct=float(alice_fluct[i]),
            bob_bit_decoded=int(bob_bits[i]),
        )
        for i in range(n)
    ]
    return rounds, report


def analytic_baseline(config: ProtocolConfig) -> InferenceResult:
    """Clean-channel inference variances at the configured loss."""
    clean = replace(config, eve=NoEve())
    return inference_variance_analytic(encode_round(1, clean), 0, 1)


def calibrate_baseline(config: ProtocolConfig, n_calibration: int) -> float:
    """Estimate the clean-channel product by a dedicated calibration run.

    Uses a seed stream disjoint from the message run so calibration noise
    is independent of the transmission it will be compared against.
    """
    if n_calibration < 1000:
        raise ValueError("calibration needs at least 1000 rounds")
    cal_seed = int(stream_generator(config.seed, CALIBRATION_STREAM).integers(0, 2**63))
    cal = replace(config, eve=NoEve(), rounds=n_calibration, seed=cal_seed)
    _, report = run_protocol(cal)
    return report.product_est


def conditional_outlier_test(
    alice_fluct: np.ndarray,
    bob_fluct: np.ndarray,
    bases: np.ndarray,
    config: ProtocolConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Round-by-round z-scores of the receiver's fluctuations.

    Given the sender's fluctuation, the receiver's should fall in a
    Gaussian of variance equal to the clean-channel inference variance;
    z = (bob - gain*alice)/sqrt(var_inf) with the clean-channel regression
    gain per basis.  Flags mark |z| > outlier_z.

    bases holds 0 for X rounds and 1 for P rounds.
    """
    base = analytic_baseline(config)
    gains = np.array([base.gamma_x, -base.gamma_p])  # signed regression gains
    sigmas = np.sqrt(np.array([base.var_x_inf, base.var_p_inf]))
    bases = np.asarray(bases, dtype=int)
    z = (np.asarray(bob_fluct) - gains[bases] * np.asarray(alice_fluct)) / sigmas[bases]
    return z, np.abs(z) > config.outlier_z


def _detection_report(
    config, sent, basis_idx, bob_fluct, alice_fluct, bob_bits, baseline_product
) -> DetectionReport:
    x_sel = basis_idx == 0
    p_sel = ~x_sel
    if x_sel.sum() < 2 or p_sel.sum() < 2:
        raise ValueError("need at least 2 rounds in each basis to estimate correlations")
    est = estimate_inference(
        PairedSamples(QuadratureBasis.X, bob_fluct[x_sel], alice_fluct[x_sel]),
        PairedSamples(QuadratureBasis.P, bob_fluct[p_sel], alice_fluct[p_sel]),
    )
    if baseline_product is None:
        baseline_product = analytic_baseline(config).product

    z, flags = conditional_outlier_test(alice_fluct, bob_fluct, basis_idx, config)
    outlier_fraction = float(np.mean(flags))
    expected = 2.0 * gaussian_tail(config.outlier_z)
    margin = config.outlier_margin_z * np.sqrt(
        expected * (1.0 - expected) / config.rounds
    )
    alarm = bool(
        est.product - baseline_product > config.alarm_z * est.stderr_product
        or outlier_fraction > expected + margin
    )
    return DetectionReport(
        product_est=est.product,
        product_stderr=est.stderr_product,
        baseline_product=float(baseline_product),
        alarm=alarm,
        outlier_fraction=outlier_fraction,
        ber=float(np.mean(bob_bits != sent)),
    )


@dataclass(frozen=True)
class SeparationChoice:
    """Result of tuning the bit-amplitude separation against a tap."""

    separation: float
    eve_ber: float
    bob_ber: float


def choose_amplitude_separation(
    config: ProtocolConfig,
    eta_min_detectable: float,
    target_eve_ber: float,
    max_bob_ber: float = 0.45,
) -> SeparationChoice:
    """Largest amplitude separation keeping a borderline tap ineffective.

    An eavesdropper tapping at the smallest transmission the parties could
    still detect (eta_min_detectable) sees the two bit peaks separated by
    sqrt(2(1-eta))*cosh(kt)*(alpha0-alpha1); her error rate falls as the
    separation grows.  Bisection finds the separation at which her error
    rate equals target_eve_ber — any larger separation would hand her the
    bit.  The receiver's own error rate at that separation is reported and
    must stay below max_bob_ber.
    """
    if not 0.0 < eta_min_detectable < 1.0:
        raise ValueError("eta_min_detectable must lie strictly inside (0, 1)")
    if not 0.0 < target_eve_ber <= 0.5:
        raise ValueError("target_eve_ber must lie in (0, 0.5]")

    kt = config.kappa_t
    cosh2 = np.cosh(2.0 * kt)
    eta = eta_min_detectable
    eve_sigma = np.sqrt(eta + (1.0 - eta) * cosh2)
    eve_scale = np.sqrt(2.0 * (1.0 - eta)) * np.cosh(kt)

    def eve_ber(sep: float) -> float:
        return gaussian_tail(eve_scale * sep / (2.0 * eve_sigma))

    def bob_ber(sep: float) -> float:
        bob_sep = np.sqrt(2.0 * config.channel_eta) * np.cosh(kt) * sep
        return gaussian_tail(bob_sep / (2.0 * config.bob_sigma()))

    if target_eve_ber == 0.5:
        return SeparationChoice(separation=0.0, eve_ber=0.5, bob_ber=0.5)

    hi = 1.0
    while eve_ber(hi) > target_eve_ber:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("failed to bracket the target error rate")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eve_ber(mid) >= target_eve_ber:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    sep = 0.5 * (lo + hi)
    bob = bob_ber(sep)
    if bob > max_bob_ber:
        raise ValueError(
            f"receiver error rate {bob:.3f} exceeds {max_bob_ber}: "
            "parameters leave no usable separation"
        )
    return SeparationChoice(separation=float(sep), eve_ber=float(eve_ber(sep)), bob_ber=float(bob))


def transcript_z(rounds: Sequence[BitRound], config: ProtocolConfig) -> np.ndarray:
    """Conditional z-scores for a recorded transcript."""
    bases = np.array([0 if r.bob_basis is QuadratureBasis.X else 1 for r in rounds])
    alice = np.array([r.alice_fluct for r in rounds])
    bob = np.array([r.bob_fluct for r in rounds])
    z, _ = conditional_outlier_test(alice, bob, bases, config)
    return z


def public_transcript(
    rounds: Sequence[BitRound], config: ProtocolConfig
) -> list[dict]:
    """What travels over the public channel: bases and fluctuations only."""
    z = transcript_z(rounds, config)
    return [
        {
            "round": i,
            "bob_basis": r.bob_basis.value,
            "bob_fluct": r.bob_fluct,
            "alice_fluct": r.alice_fluct,
            "z": float(z[i]),
        }
        for i, r in enumerate(rounds)
    ]


def write_round_csv(path, rounds: Sequence[BitRound], config: ProtocolConfig) -> None:
    """Per-round CSV with header round,bob_basis,bob_fluct,alice_fluct,z."""
    records = public_transcript(rounds, config)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "bob_basis", "bob_fluct", "alice_fluct", "z"])
        for rec in records:
            writer.writerow(
                [
                    rec["round"],
                    rec["bob_basis"],
                    format(rec["bob_fluct"], ".17g"),
                    format(rec["alice_fluct"], ".17g"),
                    format(rec["z"], ".17g"),
                ]
            )
