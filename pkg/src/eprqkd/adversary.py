"""Eavesdropper models for the transmitted beam.

Three attacks on the channel mode, each with a closed-form signature (the
inference variances the legitimate parties will measure afterwards) and a
Monte-Carlo-faithful realization used by the protocol runner:

  * intercept-resend: Eve measures X to accuracy 1/r and resends a
    minimum-uncertainty squeezed state (Δ²X = 1/r, Δ²P = r) centred on her
    record, guessing the P centre from the bit she decoded;
  * beamsplitter tap: a partially transmitting mirror diverts part of the
    beam to Eve, feeding vacuum back into the channel;
  * QND tap: the same mirror with a squeezed ancilla (Δ²X = 1/r_sq,
    Δ²P = r_sq), reading X almost noiselessly at the price of a large P
    back-action.

Every transform touches only the transmitted mode; the sender's retained
mode is left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.special import erfc

from .gaussian import (
    GaussianState,
    append_mode,
    append_vacuum_mode,
    beamsplitter,
)
from .rng import EVE_STREAM, stream_generator

if TYPE_CHECKING:  # pragma: no cover
    from .protocol import ProtocolConfig


def gaussian_tail(z: float) -> float:
    """Upper-tail probability Q(z) of the standard normal."""
    return 0.5 * erfc(z / np.sqrt(2.0))


@dataclass(frozen=True)
class NoEve:
    """Clean channel."""

    kind = "none"


@dataclass(frozen=True)
class InterceptResend:
    """Measure X with error variance 1/r, resend a squeezed state."""

    r: float
    kind = "intercept-resend"

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("intercept-resend r must be positive")


@dataclass(frozen=True)
class BeamsplitterTap:
    """Divert a 1-eta_tap fraction of the beam with a vacuum-fed mirror."""

    eta_tap: float
    kind = "tap"

    def __post_init__(self):
        if not 0.0 <= self.eta_tap <= 1.0:
            raise ValueError("eta_tap must lie in [0, 1]")


@dataclass(frozen=True)
class QndTap:
    """Beamsplitter tap with a squeezed ancilla (Δ²X = 1/r_sq, Δ²P = r_sq)."""

    eta_tap: float
    r_sq: float
    kind = "qnd"

    def __post_init__(self):
        if not 0.0 <= self.eta_tap <= 1.0:
            raise ValueError("eta_tap must lie in [0, 1]")
        if not self.r_sq >= 1.0:
            raise ValueError("r_sq must be >= 1 (squeezed-ancilla strength)")


EveModel = Union[NoEve, InterceptResend, BeamsplitterTap, QndTap]


@dataclass(frozen=True)
class AttackSignature:
    """What the attack does to the detectable statistics.

    var_x_inf_new / var_p_inf_new are the inference variances the parties
    will measure; eve_separation and eve_sigma describe the two-peak bit
    distribution in Eve's record, and eve_ber her nearest-mean error rate.
    """

    var_x_inf_new: float
    var_p_inf_new: float
    eve_separation: float
    eve_sigma: float
    eve_ber: float

    def __post_init__(self):
        if not 0.0 <= self.eve_ber <= 0.5 + 1e-12:
            raise ValueError("eve_ber must lie in [0, 0.5]")


def tap_transform(state: GaussianState, eta_tap: float) -> GaussianState:
    """Beamsplitter tap on mode 0: returns (a, b, eve) with Eve's port last.

    Eve's marginal picks up mean -sqrt(1-eta)*<X_a> and variance
    eta + (1-eta)*Var(X_a).
    """
    out = append_vacuum_mode(state)
    return beamsplitter(out, 0, out.n_modes - 1, eta_tap)


def qnd_transform(state: GaussianState, eta_tap: float, r_sq: float) -> GaussianState:
    """Tap with a squeezed ancilla; r_sq = 1 reduces to tap_transform.

    The channel mode keeps only (1-eta)/r_sq extra X noise but suffers
    (1-eta)*r_sq extra P noise — an almost-noiseless X readout paid for in
    the conjugate quadrature.
    """
    if r_sq < 1.0:
        raise ValueError("r_sq must be >= 1")
    out = append_mode(state, np.zeros(2), np.diag([1.0 / r_sq, r_sq]))
    return beamsplitter(out, 0, out.n_modes - 1, eta_tap)


@dataclass(frozen=True)
class InterceptResendSample:
    """One round of the intercept-resend attack, before channel loss.

    Bob's measurement statistics on the resent state are Gaussian with the
    recorded means/variances; eve_record and eve_bit are what Eve keeps.
    """

    eve_record: float
    eve_bit: int
    bob_x_mean: float
    bob_x_var: float
    bob_p_mean: float
    bob_p_var: float


def nearest_bit(value, mean_one: float, mean_zero: float):
    """Nearest-mean decision; exact midpoints resolve to bit 0."""
    value = np.asarray(value, dtype=float)
    bit = (np.abs(value - mean_one) < np.abs(value - mean_zero)).astype(int)
    return bit if bit.ndim else int(bit)


def intercept_resend_transform(
    true_x: float, r: float, config: "ProtocolConfig", rng: np.random.Generator
) -> InterceptResendSample:
    """Eve's measure-and-resend step for one round.

    Args:
        true_x: the X value the transmitted mode would have yielded.
        r: measurement precision; Eve's record adds noise of variance 1/r.
        config: protocol parameters (for Eve's decode means and P guesses).
        rng: stream supplying Eve's measurement noise.

    Returns:
        Bob's observed distribution parameters plus Eve's record: X is
        centred on the record with the squeezed variance 1/r, P on the
        bit-conditional mean of the bit Eve decoded, with variance r.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    record = true_x + rng.standard_normal() / np.sqrt(r)
    mean_one = config.pre_loss_mean(1)
    mean_zero = config.pre_loss_mean(0)
    bit = nearest_bit(record, mean_one, mean_zero)
    p_guess = mean_one if bit == 1 else mean_zero
    return InterceptResendSample(
        eve_record=float(record),
        eve_bit=bit,
        bob_x_mean=float(record),
        bob_x_var=1.0 / r,
        bob_p_mean=float(p_guess),
        bob_p_var=float(r),
    )


def gaussian_eve_channel(state: GaussianState, model: EveModel) -> GaussianState:
    """Apply an attack to the two-mode (channel, retained) state.

    Tap models return a three-mode state with Eve's port appended.  The
    intercept-resend attack is not a Gaussian channel (the resent P centre
    is a discrete function of Eve's record); here it is replaced by its
    ideal-decode surrogate — exact whenever Eve decodes the bit correctly:
    the X variance grows by 2/r (measurement noise plus resend noise), the
    P block is replaced by fresh variance r, and all P correlations to the
    retained mode are severed.  The protocol runner simulates the attack
    exactly, decode errors included.
    """
    if isinstance(model, NoEve):
        return state
    if isinstance(model, BeamsplitterTap):
        return tap_transform(state, model.eta_tap)
    if isinstance(model, QndTap):
        return qnd_transform(state, model.eta_tap, model.r_sq)
    if isinstance(model, InterceptResend):
        cov = state.cov.copy()
        xa, pa = 0, 1
        cov[xa, xa] += 2.0 / model.r
        cov[pa, :] = 0.0
        cov[:, pa] = 0.0
        cov[pa, pa] = model.r
        return GaussianState(mean=state.mean, cov=cov)
    raise TypeError(f"unknown eavesdropper model: {model!r}")


def predicted_signature(model: EveModel, config: "ProtocolConfig") -> AttackSignature:
    """Closed-form attack signature for the configured protocol.

    The inference variances include the configured channel loss on top of
    the attack (eta*v + 1-eta); Eve taps before the lossy stretch, so her
    separation and noise do not.  For intercept-resend the variances are
    the additive forms Δ²_inf + 1/r and Δ²_inf + r; the exact simulation
    adds measurement noise twice on X and can fall below the additive P
    form when Eve decodes reliably, so treat these as the attack's
    idealized signature rather than a sharp prediction.
    """
    d = 1.0 / np.cosh(2.0 * config.kappa_t)
    cosh2 = np.cosh(2.0 * config.kappa_t)
    amp_sep = config.alpha0 - config.alpha1
    full_sep = np.sqrt(2.0) * np.cosh(config.kappa_t) * amp_sep

    if isinstance(model, NoEve):
        vx = vp = d
        separation, sigma = 0.0, 0.0
    elif isinstance(model, InterceptResend):
        vx = d + 1.0 / model.r
        vp = d + model.r
        separation = full_sep
        sigma = np.sqrt(cosh2 + 1.0 / model.r)
    elif isinstance(model, BeamsplitterTap):
        eta = model.eta_tap
        vx = vp = eta * d + (1.0 - eta)
        separation = np.sqrt(1.0 - eta) * full_sep
        sigma = np.sqrt(eta + (1.0 - eta) * cosh2)
    elif isinstance(model, QndTap):
        eta = model.eta_tap
        vx = eta * d + (1.0 - eta) / model.r_sq
        vp = eta * d + (1.0 - eta) * model.r_sq
        separation = np.sqrt(1.0 - eta) * full_sep
        sigma = np.sqrt(eta / model.r_sq + (1.0 - eta) * cosh2)
    else:
        raise TypeError(f"unknown eavesdropper model: {model!r}")

    eta_ch = config.channel_eta
    vx = eta_ch * vx + (1.0 - eta_ch)
    vp = eta_ch * vp + (1.0 - eta_ch)
    ber = 0.5 if separation == 0.0 else gaussian_tail(separation / (2.0 * sigma))
    return AttackSignature(
        var_x_inf_new=float(vx),
        var_p_inf_new=float(vp),
        eve_separation=float(separation),
        eve_sigma=float(sigma),
        eve_ber=float(ber),
    )


def eve_ber_empirical(
    model: EveModel, config: "ProtocolConfig", n: int, seed: int | None = None
) -> float:
    """Monte Carlo estimate of Eve's bit error rate over n rounds."""
    if n < 1000:
        raise ValueError("need at least 1000 rounds for a stable estimate")
    rng = stream_generator(config.seed if seed is None else seed, EVE_STREAM)
    bits = rng.integers(0, 2, size=n)
    if isinstance(model, NoEve):
        guesses = rng.integers(0, 2, size=n)  # no record: a coin flip
        return float(np.mean(guesses != bits))

    cosh2 = np.cosh(2.0 * config.kappa_t)
    means = np.array([config.pre_loss_mean(0), config.pre_loss_mean(1)])
    if isinstance(model, InterceptResend):
        centres = means[bits]
        sigma = np.sqrt(cosh2 + 1.0 / model.r)
        m1, m0 = means[1], means[0]
    elif isinstance(model, (BeamsplitterTap, QndTap)):
        eta = model.eta_tap
        anc_var = 1.0 / model.r_sq if isinstance(model, QndTap) else 1.0
        centres = -np.sqrt(1.0 - eta) * means[bits]
        sigma = np.sqrt(eta * anc_var + (1.0 - eta) * cosh2)
        m1, m0 = -np.sqrt(1.0 - eta) * means[1], -np.sqrt(1.0 - eta) * means[0]
    else:
        raise TypeError(f"unknown eavesdropper model: {model!r}")

    records = centres + sigma * rng.standard_normal(n)
    if m1 == m0:
        guesses = rng.integers(0, 2, size=n)
    else:
        guesses = nearest_bit(records, m1, m0)
    return float(np.mean(guesses != bits))
