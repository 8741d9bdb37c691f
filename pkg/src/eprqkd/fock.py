"""Truncated two-mode Fock-space states and non-Gaussian operations.

States live on the product basis |n, m⟩ with 0 ≤ n, m ≤ n_max, either as a
complex coefficient matrix c[n, m] (pure) or as a density matrix over the
flattened basis index n*(n_max+1) + m.  The quadrature eigenfunctions use
the X = a + a† scaling (vacuum variance 1) to match the Gaussian engine:

    psi_n(x) = (2π)^(-1/4) (2^n n!)^(-1/2) H_n(x/√2) exp(-x²/4)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.sparse import lil_matrix
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

DEFAULT_TAIL_BOUND = 1e-8


@dataclass(frozen=True)
class FockTwoMode:
    """Two-mode state truncated at photon number n_max per mode.

    Exactly one of coeffs (pure) and rho (density) is set.  tail_mass
    estimates the norm living outside the truncation; construction fails
    when it exceeds tail_bound.
    """

    n_max: int
    coeffs: np.ndarray | None = None
    rho: np.ndarray | None = None
    tail_mass: float = 0.0
    tail_bound: float = DEFAULT_TAIL_BOUND

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be positive")
        d = self.n_max + 1
        if (self.coeffs is None) == (self.rho is None):
            raise ValueError("exactly one of coeffs and rho must be given")
        if self.tail_mass > self.tail_bound:
            raise ValueError(
                f"truncation insufficient: tail mass {self.tail_mass:.3e} "
                f"exceeds bound {self.tail_bound:.3e}"
            )
        if self.coeffs is not None:
            c = np.array(self.coeffs, dtype=complex)
            if c.shape != (d, d):
                raise ValueError(f"coeffs must have shape {(d, d)}")
            norm = np.linalg.norm(c)
            if norm == 0:
                raise ValueError("zero state")
            c = c / norm
            c.setflags(write=False)
            object.__setattr__(self, "coeffs", c)
        else:
            rho = np.array(self.rho, dtype=complex)
            if rho.shape != (d * d, d * d):
                raise ValueError(f"rho must have shape {(d * d, d * d)}")
            if np.abs(rho - rho.conj().T).max() > 1e-10:
                raise ValueError("density matrix must be hermitian")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace {tr} != 1")
            rho.setflags(write=False)
            object.__setattr__(self, "rho", rho)

    @property
    def is_pure(self) -> bool:
        return self.coeffs is not None

    def to_density(self) -> "FockTwoMode":
        """Density representation (outer product for pure states)."""
        if not self.is_pure:
            return self
        v = self.coeffs.ravel()
        return FockTwoMode(
            n_max=self.n_max,
            rho=np.outer(v, v.conj()),
            tail_mass=self.tail_mass,
            tail_bound=self.tail_bound,
        )

    def density_eigenvalues(self) -> np.ndarray:
        """Spectrum of the density matrix; all ≥ -1e-10 for a valid state."""
        return np.linalg.eigvalsh(self.to_density().rho)

    def mean_photon_numbers(self) -> tuple[float, float]:
        """(⟨n_a⟩, ⟨n_b⟩) of the truncated state."""
        d = self.n_max + 1
        n = np.arange(d)
        if self.is_pure:
            w = np.abs(self.coeffs) ** 2
        else:
            w = np.diag(self.rho).real.reshape(d, d)
        return float((w.sum(axis=1) * n).sum()), float((w.sum(axis=0) * n).sum())


def _boundary_band_mass(c: np.ndarray) -> float:
    """Probability weight on the outermost truncation band."""
    w = np.abs(c) ** 2
    return float(w[-1, :].sum() + w[:, -1].sum() - w[-1, -1])


def pair_coherent_state(
    r0: float, n_max: int, tail_bound: float = DEFAULT_TAIL_BOUND
) -> FockTwoMode:
    """Phase-averaged product of correlated coherent states.

    Averaging |r0·e^{iς}⟩|r0·e^{-iς}⟩ over ς kills every off-diagonal Fock
    component, leaving c[n, n] ∝ r0^{2n}/n! with squared norm
    I₀(2r0²) — perfect photon-number correlation between the modes.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    n = np.arange(n_max + 1)
    log_terms = 2.0 * n * np.log(r0) - gammaln(n + 1.0)
    c = np.exp(log_terms - log_terms.max())
    norm_sq = float(np.sum(c * c))
    # First omitted diagonal term, with a geometric-tail correction.
    log_next = 2.0 * (n_max + 1) * np.log(r0) - gammaln(n_max + 2.0) - log_terms.max()
    ratio = (r0 ** 4) / ((n_max + 2) ** 2)
    tail = np.exp(2.0 * log_next) / norm_sq / max(1.0 - ratio, 0.5)
    return FockTwoMode(
        n_max=n_max,
        coeffs=np.diag(c).astype(complex),
        tail_mass=float(tail),
        tail_bound=tail_bound,
    )


def _coherent_coefficients(alpha: float, n_max: int) -> np.ndarray:
    """Unnormalized coherent-state Fock coefficients α^n/√(n!), real α."""
    n = np.arange(n_max + 1)
    if alpha == 0.0:
        return (n == 0).astype(float)
    sign = np.sign(alpha) ** n
    return sign * np.exp(n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1.0))


@lru_cache(maxsize=8)
def _pair_creation_generator(n_max: int):
    """Sparse a†b† - ab on the flattened two-mode basis (anti-hermitian)."""
    d = n_max + 1
    g = lil_matrix((d * d, d * d))
    root = np.sqrt(np.arange(1, d))
    for i in range(n_max):
        for j in range(n_max):
            amp = root[i] * root[j]  # √((i+1)(j+1))
            g[(i + 1) * d + (j + 1), i * d + j] += amp
            g[i * d + j, (i + 1) * d + (j + 1)] -= amp
    return g.tocsc()


def evolved_cat_state(
    alpha0: float,
    beta0: float,
    kappa_t: float,
    n_max: int,
    tail_bound: float = DEFAULT_TAIL_BOUND,
) -> FockTwoMode:
    """Two-mode cat superposition evolved through the parametric interaction.

    Builds |α₀⟩|β₀⟩ + |-α₀⟩|-β₀⟩, normalizes, and applies
    U = exp(s·(a†b† - ab)) with s = kappa_t as the exponential action of
    the truncated (anti-hermitian, hence norm-preserving) generator.
    """
    if not (np.isfinite(alpha0) and np.isfinite(beta0) and np.isfinite(kappa_t)):
        raise ValueError("state parameters must be finite")
    d = n_max + 1
    ca = _coherent_coefficients(alpha0, n_max)
    cb = _coherent_coefficients(beta0, n_max)
    c = np.outer(ca, cb)
    n = np.arange(d)
    parity = (-1.0) ** (n[:, None] + n[None, :])
    c = c * (1.0 + parity)
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ValueError("cat superposition vanishes for these amplitudes")
    c = (c / norm).astype(complex)
    pre_tail = _boundary_band_mass(c)

    gen = _pair_creation_generator(n_max)
    v = expm_multiply(kappa_t * gen, c.ravel())
    drift = abs(np.linalg.norm(v) - 1.0)
    if drift > 1e-8:
        raise ArithmeticError(f"norm drift {drift:.3e} after the exponential")
    evolved = v.reshape(d, d)
    tail = max(pre_tail, _boundary_band_mass(evolved))
    return FockTwoMode(n_max=n_max, coeffs=evolved, tail_mass=tail, tail_bound=tail_bound)


def fock_phase_shift(state: FockTwoMode, mode: int, delta: float) -> FockTwoMode:
    """Local phase shift by delta on one mode.

    Multiplies c[n, m] by e^{-i·n·delta} (mode 0) or e^{-i·m·delta}
    (mode 1), matching the half-axis projector convention: shifting a mode
    by delta is equivalent to advancing that mode's measurement angle by
    delta.
    """
    if mode not in (0, 1):
        raise IndexError("mode must be 0 or 1")
    d = state.n_max + 1
    phase = np.exp(-1j * delta * np.arange(d))
    if state.is_pure:
        c = state.coeffs * (phase[:, None] if mode == 0 else phase[None, :])
        return replace(state, coeffs=c)
    full = np.kron(phase, np.ones(d)) if mode == 0 else np.kron(np.ones(d), phase)
    rho = state.rho * np.outer(full, full.conj())
    return replace(state, rho=rho)


def phase_encode(state: FockTwoMode, shifted: bool) -> FockTwoMode:
    """The sender's signal: 180° phase shift of the transmitted mode, or not."""
    if not state.is_pure:
        raise ValueError("phase encoding acts on pure states")
    if not shifted:
        return state
    return fock_phase_shift(state, 0, np.pi)


def _damping_coefficients(n_max: int, eta: float) -> list[np.ndarray]:
    """coef[k][a] = √(C(a+k, k) η^a (1-η)^k): the k-photon-loss Kraus band."""
    coefs = []
    for k in range(n_max + 1):
        a = np.arange(n_max + 1 - k)
        log_binom = gammaln(a + k + 1.0) - gammaln(k + 1.0) - gammaln(a + 1.0)
        log_eta = a * np.log(eta) if eta > 0 else np.where(a == 0, 0.0, -np.inf)
        log_loss = k * np.log(1.0 - eta) if eta < 1 else np.where(k == 0, 0.0, -np.inf)
        coefs.append(np.exp(0.5 * (log_binom + log_eta + log_loss)))
    return coefs


def _damp_mode(rho4: np.ndarray, coefs: list[np.ndarray], axes: tuple[int, int]) -> np.ndarray:
    """Amplitude damping on one mode of the (n, m, n', m') density tensor."""
    d = rho4.shape[0]
    out = np.zeros_like(rho4)
    src = np.moveaxis(rho4, axes, (0, 1))
    dst = np.moveaxis(out, axes, (0, 1))
    for k in range(d):
        w = coefs[k]
        keep = d - k
        dst[:keep, :keep] += (w[:, None] * w[None, :])[..., None, None] * src[k:, k:]
    return out


def apply_fock_loss(state: FockTwoMode, eta: float) -> FockTwoMode:
    """Amplitude damping of intensity transmission η on each mode.

    Standard Fock-basis Kraus family: A_k lowers k photons with amplitude
    √(C(n,k)) η^((n-k)/2) (1-η)^(k/2).  Photon loss only moves weight down
    the ladder, so the truncated channel is exactly trace preserving.
    Returns a density-representation state.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    d = state.n_max + 1
    dense = state.to_density()
    rho4 = np.array(dense.rho, dtype=complex).reshape(d, d, d, d)
    coefs = _damping_coefficients(state.n_max, eta)
    rho4 = _damp_mode(rho4, coefs, (0, 2))  # transmitted mode: indices n, n'
    rho4 = _damp_mode(rho4, coefs, (1, 3))  # retained mode: indices m, m'
    rho = rho4.reshape(d * d, d * d)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-10:
        raise ArithmeticError(f"loss channel broke the trace: {tr}")
    rho = 0.5 * (rho + rho.conj().T)
    return FockTwoMode(
        n_max=state.n_max, rho=rho, tail_mass=state.tail_mass, tail_bound=state.tail_bound
    )


def quadrature_wavefunctions(x, n_max: int) -> np.ndarray:
    """psi_n(x) for n = 0..n_max via the stable three-term recurrence.

    Returns shape (n_max+1,) + shape(x).  Recurrence:
    psi_{n+1} = (x·psi_n - √n·psi_{n-1}) / √(n+1).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = (2.0 * np.pi) ** (-0.25) * np.exp(-x * x / 4.0)
    if n_max >= 1:
        out[1] = x * out[0]
    for n in range(1, n_max):
        out[n + 1] = (x * out[n] - np.sqrt(n) * out[n - 1]) / np.sqrt(n + 1.0)
    return out


@lru_cache(maxsize=8)
def halfline_overlaps(n_max: int) -> np.ndarray:
    """The integrals I[n, m] = ∫_0^∞ psi_n psi_m dx.

    Parity makes even n+m pairs exactly δ_{nm}/2; odd pairs come from
    adaptive quadrature on [0, x_max] with x_max past the largest classical
    turning point √(2(2n+1)) plus a 10-unit margin, beyond which the
    integrand's Gaussian envelope is negligible.
    """
    from scipy.integrate import quad_vec

    x_max = np.sqrt(2.0 * (2.0 * n_max + 1.0)) + 10.0

    def integrand(x):
        p = quadrature_wavefunctions(x, n_max)
        return np.outer(p, p)

    table, err = quad_vec(integrand, 0.0, x_max, epsabs=1e-13, epsrel=1e-13)
    if err > 1e-9:
        raise ArithmeticError(f"half-axis quadrature failed to converge (err={err:.2e})")
    n = np.arange(n_max + 1)
    even = (n[:, None] + n[None, :]) % 2 == 0
    table[even] = 0.0
    np.fill_diagonal(table, 0.5)
    table.setflags(write=False)
    return table


def halfaxis_projector(theta: float, n_max: int) -> np.ndarray:
    """Matrix of the 'quadrature X_θ ≥ 0' outcome on the truncated basis.

    D(θ)[n, m] = e^{i(m-n)θ} ∫_0^∞ psi_n psi_m dx.  Hermitian; its
    eigenvalues sit in [0, 1] up to truncation error, and
    D(θ) + D(θ+π) = I exactly.
    """
    table = halfline_overlaps(n_max)
    n = np.arange(n_max + 1)
    phase = np.exp(1j * (n[None, :] - n[:, None]) * theta)
    return phase * table


def joint_quadrature_density(
    state: FockTwoMode, xa: np.ndarray, xb: np.ndarray
) -> np.ndarray:
    """|Ψ(x_a, x_b)|² on a grid, for the θ = φ = 0 measurement pair."""
    if not state.is_pure:
        raise ValueError("joint density is implemented for pure states")
    pa = quadrature_wavefunctions(np.asarray(xa, dtype=float), state.n_max)
    pb = quadrature_wavefunctions(np.asarray(xb, dtype=float), state.n_max)
    amp = pa.T @ state.coeffs @ pb
    return np.abs(amp) ** 2
