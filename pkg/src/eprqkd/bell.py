"""Bell-Clauser-Horne tests on two-mode states via quadrature sign binning.

Each side measures a rotated quadrature X_θ = X·cosθ + P·sinθ and records
+1 when the outcome is nonnegative.  The strong CH ratio

    S = [P₊₊(θ,φ) - P₊₊(θ,φ') + P₊₊(θ',φ) + P₊₊(θ',φ')] / [P₊ᴬ(θ') + P₊ᴮ(φ)]

obeys S ≤ 1 for every locally factorizable model; suitable non-Gaussian
states push it above 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    FockTwoMode,
    halfaxis_projector,
    joint_quadrature_density,
)
from .rng import stream_generator

PROB_ATOL = 1e-9


@dataclass(frozen=True)
class AngleSet:
    """The four analyzer angles of a CH test (radians)."""

    theta: float
    phi: float
    theta_prime: float
    phi_prime: float

    def __post_init__(self):
        for name in ("theta", "phi", "theta_prime", "phi_prime"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class BellOutcome:
    """Probabilities entering the CH ratio, and the ratio itself.

    p_joint maps the four (angle-a, angle-b) pairs, keyed
    ("theta", "phi") etc., to P₊₊ values.
    """

    p_plus_a: float  # at theta_prime
    p_plus_b: float  # at phi
    p_joint: dict
    S: float

    def __post_init__(self):
        probs = [self.p_plus_a, self.p_plus_b, *self.p_joint.values()]
        for p in probs:
            if not -PROB_ATOL <= p <= 1.0 + PROB_ATOL:
                raise ValueError(f"probability {p} outside [0, 1]")


def _expectation(state: FockTwoMode, op_a: np.ndarray | None, op_b: np.ndarray | None) -> float:
    """⟨D_a ⊗ D_b⟩ with None meaning identity on that side."""
    d = state.n_max + 1
    ident = np.eye(d)
    da = ident if op_a is None else op_a
    db = ident if op_b is None else op_b
    if state.is_pure:
        c = state.coeffs
        val = np.vdot(c, da @ c @ db.T)
    else:
        rho4 = state.rho.reshape(d, d, d, d)
        val = np.einsum("nmab,an,bm->", rho4, da, db, optimize=True)
    return float(np.real(val))


def sign_probabilities(
    state: FockTwoMode, theta: float, phi: float
) -> tuple[float, float, float]:
    """(P₊ᴬ(θ), P₊ᴮ(φ), P₊₊(θ, φ)) for one angle pair."""
    da = halfaxis_projector(theta, state.n_max)
    db = halfaxis_projector(phi, state.n_max)
    p_a = _expectation(state, da, None)
    p_b = _expectation(state, None, db)
    p_joint = _expectation(state, da, db)
    for p in (p_a, p_b, p_joint):
        if not -PROB_ATOL <= p <= 1.0 + PROB_ATOL:
            raise ArithmeticError(f"probability {p} escaped [0, 1]; state invalid?")
    return p_a, p_b, p_joint


def bell_S(state: FockTwoMode, angles: AngleSet) -> BellOutcome:
    """Evaluate the strong CH ratio at the given angles."""
    da = {
        "theta": halfaxis_projector(angles.theta, state.n_max),
        "theta_prime": halfaxis_projector(angles.theta_prime, state.n_max),
    }
    db = {
        "phi": halfaxis_projector(angles.phi, state.n_max),
        "phi_prime": halfaxis_projector(angles.phi_prime, state.n_max),
    }
    joint = {
        (ka, kb): _expectation(state, da[ka], db[kb]) for ka in da for kb in db
    }
    p_a = _expectation(state, da["theta_prime"], None)
    p_b = _expectation(state, None, db["phi"])
    denom = p_a + p_b
    if denom <= 0:
        raise ZeroDivisionError("CH denominator P₊ᴬ(θ') + P₊ᴮ(φ) vanishes")
    num = (
        joint[("theta", "phi")]
        - joint[("theta", "phi_prime")]
        + joint[("theta_prime", "phi")]
        + joint[("theta_prime", "phi_prime")]
    )
    return BellOutcome(p_plus_a=p_a, p_plus_b=p_b, p_joint=joint, S=num / denom)


def truncation_convergence(
    build_state, angles: AngleSet, n_max: int, step: int = 10
) -> tuple[float, float, float]:
    """(S at n_max, S at n_max+step, |difference|) for a state builder.

    build_state(n) must return the same physical state truncated at n.
    """
    s_low = bell_S(build_state(n_max), angles).S
    s_high = bell_S(build_state(n_max + step), angles).S
    return s_low, s_high, abs(s_high - s_low)


def lhv_factorized_S(
    weights: np.ndarray, p_a: np.ndarray, p_b: np.ndarray, angles: AngleSet | None = None
) -> float:
    """CH ratio of a factorized (local hidden variable) mixture.

    Args:
        weights: mixture weights, shape (k,), summing to 1.
        p_a: per-component +1 probabilities at (theta, theta_prime), shape (k, 2).
        p_b: per-component +1 probabilities at (phi, phi_prime), shape (k, 2).
        angles: unused; accepted so callers can document the angle set.

    Joint probabilities are Σ_λ w_λ·pᴬ_λ·pᴮ_λ; the returned ratio can never
    exceed 1, whatever the tables.
    """
    del angles
    w = np.asarray(weights, dtype=float)
    pa = np.asarray(p_a, dtype=float)
    pb = np.asarray(p_b, dtype=float)
    if w.ndim != 1 or pa.shape != (w.size, 2) or pb.shape != (w.size, 2):
        raise ValueError("weights (k,), p_a (k, 2) and p_b (k, 2) required")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("mixture weights must sum to 1")
    if w.min() < 0:
        raise ValueError("mixture weights must be nonnegative")
    if pa.min() < 0 or pa.max() > 1 or pb.min() < 0 or pb.max() > 1:
        raise ValueError("outcome probabilities must lie in [0, 1]")

    def joint(ia: int, ib: int) -> float:
        return float(np.sum(w * pa[:, ia] * pb[:, ib]))

    denom = float(np.sum(w * pa[:, 1]) + np.sum(w * pb[:, 0]))
    if denom <= 0:
        raise ZeroDivisionError("CH denominator vanishes")
    num = joint(0, 0) - joint(0, 1) + joint(1, 0) + joint(1, 1)
    return num / denom


def _grid_cell_probabilities(
    state: FockTwoMode, xa_grid: np.ndarray, xb_grid: np.ndarray
) -> np.ndarray:
    """Cell probabilities of the θ = φ = 0 joint distribution (midpoint rule)."""
    xa = np.asarray(xa_grid, dtype=float)
    xb = np.asarray(xb_grid, dtype=float)
    dens = joint_quadrature_density(state, 0.5 * (xa[1:] + xa[:-1]), 0.5 * (xb[1:] + xb[:-1]))
    cells = dens * np.outer(np.diff(xa), np.diff(xb))
    total = cells.sum()
    if total <= 0:
        raise ValueError("grid misses the state's support")
    return cells / total


def reference_histograms(
    state: FockTwoMode, xa_grid: np.ndarray, xb_grid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact cell probabilities for the unshifted and 180°-shifted encodings."""
    from .fock import phase_encode

    return (
        _grid_cell_probabilities(state, xa_grid, xb_grid),
        _grid_cell_probabilities(phase_encode(state, True), xa_grid, xb_grid),
    )


def sample_block_histogram(
    state: FockTwoMode,
    n_samples: int,
    seed: int,
    xa_grid: np.ndarray,
    xb_grid: np.ndarray,
) -> np.ndarray:
    """Histogram of a measured block: multinomial draw from the exact cells."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    cells = _grid_cell_probabilities(state, xa_grid, xb_grid)
    rng = stream_generator(seed)
    counts = rng.multinomial(n_samples, cells.ravel())
    return counts.reshape(cells.shape)


def block_decode(
    joint_histogram: np.ndarray,
    ref_unshifted: np.ndarray,
    ref_shifted: np.ndarray,
) -> tuple[int, float]:
    """Maximum-likelihood phase-bit decision from a block's joint histogram.

    Returns (bit, llr) where bit 0 means the unshifted encoding and llr is
    the unshifted-over-shifted log-likelihood ratio (positive favours 0).
    The two encodings differ only in the joint shape — each mode's marginal
    is identical, so a single-mode histogram carries no signal.
    """
    counts = np.asarray(joint_histogram, dtype=float)
    if counts.sum() <= 0:
        raise ValueError("empty block")
    if counts.shape != ref_unshifted.shape or counts.shape != ref_shifted.shape:
        raise ValueError("histogram and references must share one grid")
    floor = 1e-300
    llr = float(
        np.sum(counts * (np.log(np.maximum(ref_unshifted, floor)) - np.log(np.maximum(ref_shifted, floor))))
    )
    return (0 if llr >= 0 else 1), llr
