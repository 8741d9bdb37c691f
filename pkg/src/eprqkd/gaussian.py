"""Exact Gaussian-state engine for multimode quadrature optics.

Convention: X = a + a†, P = (a - a†)/i, so the vacuum has unit variance in
both quadratures and the uncertainty relation reads Δ²X·Δ²P ≥ 1.  States
are mean vectors and covariance matrices over (x1, p1, x2, p2, ...);
covariances are symmetrized second moments of the fluctuations.

All operations are pure: they return new states and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .rng import stream_generator

SYMMETRY_RTOL = 1e-12
PHYSICALITY_ATOL = 1e-10


class QuadratureBasis(Enum):
    """Which quadrature a homodyne detector measures on one mode."""

    X = "X"
    P = "P"


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal form Ω with 2x2 blocks [[0, 1], [-1, 0]].

    Scaled so a physical covariance satisfies cov + iΩ ≥ 0 with the vacuum
    (cov = I) exactly on the boundary.
    """
    w = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = w
    return out


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an M-mode Gaussian field.

    mean has length 2M ordered (x1, p1, x2, p2, ...); cov is the matching
    2M x 2M real symmetric matrix in the same units squared.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2 != 0 or mean.size == 0:
            raise ValueError("mean must be a flat vector of even positive length")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("state moments must be finite")
        scale = max(1.0, np.abs(cov).max())
        if np.abs(cov - cov.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        lam = self.uncertainty_eigenvalues()
        if lam.min() < -PHYSICALITY_ATOL:
            raise ValueError(
                f"covariance violates the uncertainty principle: min eig(cov + iΩ) = {lam.min():.3e}"
            )

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def uncertainty_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of cov + iΩ; all ≥ 0 (to tolerance) for a physical state."""
        omega = symplectic_form(self.n_modes)
        return np.linalg.eigvalsh(self.cov + 1j * omega)

    def quadrature_index(self, mode: int, basis: QuadratureBasis) -> int:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes}-mode state")
        return 2 * mode + (0 if basis is QuadratureBasis.X else 1)


@dataclass(frozen=True)
class SymplecticOp:
    """Linear phase-space map: mean -> matrix @ mean + displacement."""

    matrix: np.ndarray
    displacement: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        disp = (
            np.zeros(matrix.shape[0])
            if self.displacement is None
            else np.array(self.displacement, dtype=float)
        )
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError("matrix must be square with even dimension")
        if disp.shape != (matrix.shape[0],):
            raise ValueError("displacement length must match matrix dimension")
        omega = symplectic_form(matrix.shape[0] // 2)
        if np.abs(matrix @ omega @ matrix.T - omega).max() > 1e-10:
            raise ValueError("matrix does not preserve the symplectic form")
        matrix.setflags(write=False)
        disp.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "displacement", disp)

    def apply(self, state: GaussianState) -> GaussianState:
        if self.matrix.shape[0] != 2 * state.n_modes:
            raise ValueError("operator dimension does not match state")
        return GaussianState(
            mean=self.matrix @ state.mean + self.displacement,
            cov=self.matrix @ state.cov @ self.matrix.T,
        )


def _embed(n_modes: int, block: np.ndarray, modes: tuple[int, ...]) -> np.ndarray:
    """Embed a 2k x 2k phase-space block acting on `modes` into 2M x 2M."""
    full = np.eye(2 * n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    full[np.ix_(idx, idx)] = block
    return full


def vacuum_state(n_modes: int) -> GaussianState:
    """M-mode vacuum: zero mean, identity covariance."""
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    return GaussianState(mean=np.zeros(2 * n_modes), cov=np.eye(2 * n_modes))


def displace_coherent(
    state: GaussianState, mode: int, amplitude: float, phase: float
) -> GaussianState:
    """Displace one mode to a coherent amplitude α·e^{iφ}.

    Shifts the mode mean by (2α·cosφ, 2α·sinφ) — in this scaling a coherent
    state |α e^{iφ}⟩ has ⟨X⟩ = 2α cosφ — and leaves the covariance alone.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    ix = state.quadrature_index(mode, QuadratureBasis.X)
    mean = state.mean.copy()
    mean[ix] += 2.0 * amplitude * np.cos(phase)
    mean[ix + 1] += 2.0 * amplitude * np.sin(phase)
    return GaussianState(mean=mean, cov=state.cov)


def two_mode_squeezer_matrix(s: float) -> np.ndarray:
    """Phase-space matrix of the nondegenerate parametric interaction.

    X_a -> X_a cosh s + X_b sinh s,  P_a -> P_a cosh s - P_b sinh s,
    and symmetrically for mode b.  The X quadratures become correlated,
    the P quadratures anticorrelated.
    """
    c, sh = np.cosh(s), np.sinh(s)
    return np.array(
        [
            [c, 0.0, sh, 0.0],
            [0.0, c, 0.0, -sh],
            [sh, 0.0, c, 0.0],
            [0.0, -sh, 0.0, c],
        ]
    )


def two_mode_squeeze(
    state: GaussianState, mode_a: int, mode_b: int, s: float
) -> GaussianState:
    """Apply the two-mode squeezer with interaction strength s to (mode_a, mode_b)."""
    if mode_a == mode_b:
        raise ValueError("two_mode_squeeze requires distinct modes")
    if not np.isfinite(s):
        raise ValueError("squeezing parameter must be finite")
    block = two_mode_squeezer_matrix(s)
    op = SymplecticOp(_embed(state.n_modes, block, (mode_a, mode_b)))
    return op.apply(state)


def beamsplitter_matrix(eta: float) -> np.ndarray:
    """Beamsplitter with intensity transmittance η on modes (1, 2).

    out1 = √η·in1 + √(1-η)·in2,  out2 = √η·in2 - √(1-η)·in1, acting
    identically on both quadratures.
    """
    t, r = np.sqrt(eta), np.sqrt(1.0 - eta)
    return np.array(
        [
            [t, 0.0, r, 0.0],
            [0.0, t, 0.0, r],
            [-r, 0.0, t, 0.0],
            [0.0, -r, 0.0, t],
        ]
    )


def beamsplitter(
    state: GaussianState, mode_1: int, mode_2: int, eta: float
) -> GaussianState:
    """Mix two modes on a beamsplitter of intensity transmittance η ∈ [0, 1]."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta}")
    if mode_1 == mode_2:
        raise ValueError("beamsplitter requires distinct modes")
    block = beamsplitter_matrix(eta)
    op = SymplecticOp(_embed(state.n_modes, block, (mode_1, mode_2)))
    return op.apply(state)


def phase_shift(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Rotate one mode in phase space by θ.

    After the rotation, measuring X on the new state is equivalent to
    measuring X_θ = X cosθ + P sinθ on the old one; θ = π negates the
    mode's mean.
    """
    c, s = np.cos(theta), np.sin(theta)
    block = np.array([[c, s], [-s, c]])
    full = np.eye(2 * state.n_modes)
    ix = 2 * mode
    full[ix : ix + 2, ix : ix + 2] = block
    return SymplecticOp(full).apply(state)


def apply_loss(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """Pure loss of intensity transmission η on one mode.

    Mixes the mode with vacuum on a beamsplitter and discards the reflected
    port: the mode mean scales by √η, its covariance block V becomes
    ηV + (1-η)I, and cross blocks scale by √η.  η = 0 replaces the mode by
    vacuum.  (An amplitude-transmission convention would put η² where this
    map has η.)
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    state.quadrature_index(mode, QuadratureBasis.X)
    n = state.n_modes
    scale = np.ones(2 * n)
    scale[2 * mode : 2 * mode + 2] = np.sqrt(eta)
    mean = state.mean * scale
    cov = state.cov * np.outer(scale, scale)
    cov = cov.copy()
    cov[2 * mode, 2 * mode] += 1.0 - eta
    cov[2 * mode + 1, 2 * mode + 1] += 1.0 - eta
    return GaussianState(mean=mean, cov=cov)


def append_vacuum_mode(state: GaussianState) -> GaussianState:
    """Adjoin a fresh vacuum mode as the new last mode."""
    return append_mode(state, np.zeros(2), np.eye(2))


def append_mode(
    state: GaussianState, mode_mean: np.ndarray, mode_cov: np.ndarray
) -> GaussianState:
    """Adjoin an uncorrelated single-mode Gaussian as the new last mode."""
    n = state.n_modes
    mean = np.concatenate([state.mean, np.asarray(mode_mean, dtype=float)])
    cov = np.zeros((2 * n + 2, 2 * n + 2))
    cov[: 2 * n, : 2 * n] = state.cov
    cov[2 * n :, 2 * n :] = np.asarray(mode_cov, dtype=float)
    return GaussianState(mean=mean, cov=cov)


def drop_mode(state: GaussianState, mode: int) -> GaussianState:
    """Trace out one mode (for Gaussians: delete its rows and columns)."""
    state.quadrature_index(mode, QuadratureBasis.X)
    if state.n_modes == 1:
        raise ValueError("cannot drop the only mode")
    keep = [i for i in range(2 * state.n_modes) if i // 2 != mode]
    return GaussianState(mean=state.mean[keep], cov=state.cov[np.ix_(keep, keep)])


def marginal_moments(
    state: GaussianState, mode: int, basis: QuadratureBasis
) -> tuple[float, float]:
    """(mean, variance) of the Gaussian marginal of one quadrature."""
    i = state.quadrature_index(mode, basis)
    return float(state.mean[i]), float(state.cov[i, i])


def selected_moments(
    state: GaussianState, basis_per_mode: list[QuadratureBasis]
) -> tuple[np.ndarray, np.ndarray]:
    """Joint mean and covariance of one chosen quadrature per mode.

    One quadrature per mode means all selected operators commute, so the
    joint outcome distribution is the classical Gaussian these moments
    describe.
    """
    if len(basis_per_mode) != state.n_modes:
        raise ValueError("need exactly one basis per mode")
    idx = [state.quadrature_index(m, b) for m, b in enumerate(basis_per_mode)]
    return state.mean[idx], state.cov[np.ix_(idx, idx)]


def spectral_factor(cov: np.ndarray, atol: float = PHYSICALITY_ATOL) -> np.ndarray:
    """Factor F with F·Fᵀ = cov via eigendecomposition.

    Eigenvalues in [-atol, 0] are clamped to 0 (loss channels can leave a
    covariance numerically semidefinite); anything more negative signals an
    invalid state and raises.
    """
    lam, q = np.linalg.eigh(np.asarray(cov, dtype=float))
    if lam.min() < -atol:
        raise ValueError(
            f"selected covariance is not positive semidefinite (min eig {lam.min():.3e})"
        )
    return q * np.sqrt(np.clip(lam, 0.0, None))


def sample_quadratures(
    state: GaussianState,
    basis_per_mode: list[QuadratureBasis],
    n_samples: int,
    seed: int,
) -> np.ndarray:
    """Draw joint homodyne outcomes, one chosen quadrature per mode.

    Args:
        state: the Gaussian state to measure.
        basis_per_mode: X or P for each mode, length n_modes.
        n_samples: number of joint outcome rows to draw.
        seed: Philox stream seed; identical seeds give identical matrices.

    Returns:
        Array of shape (n_samples, n_modes).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    mu, cov = selected_moments(state, basis_per_mode)
    factor = spectral_factor(cov)
    rng = stream_generator(seed)
    z = rng.standard_normal((n_samples, mu.size))
    return mu + z @ factor.T
