"""EPR inference variances and the correlation criterion.

Two parties each hold one mode of a correlated pair.  The error of
inferring one party's X from the other's, minimized over a linear gain γ,
is the inference variance; the product of the X and P inference variances
drops below 1 exactly when the pair carries EPR correlations.  The sign
conventions follow the correlated-X / anticorrelated-P structure of the
parametric interaction: δx = X_a − γ·X_b and δp = P_a + γ·P_b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState, QuadratureBasis


@dataclass(frozen=True)
class InferenceResult:
    """Optimal gains, inference variances, and their product.

    stderr_product and the pair counts are zero for analytic results.
    """

    gamma_x: float
    gamma_p: float
    var_x_inf: float
    var_p_inf: float
    product: float
    stderr_product: float = 0.0
    n_pairs_x: int = 0
    n_pairs_p: int = 0

    def __post_init__(self):
        if self.var_x_inf < 0 or self.var_p_inf < 0:
            raise ValueError("inference variances must be nonnegative")
        check = self.var_x_inf * self.var_p_inf
        if abs(check - self.product) > 1e-12 * max(1.0, abs(check)):
            raise ValueError("product field disagrees with var_x_inf * var_p_inf")


@dataclass(frozen=True)
class PairedSamples:
    """Matched fluctuation records from the two parties, one basis."""

    basis: QuadratureBasis
    a_values: np.ndarray
    b_values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_values, dtype=float)
        b = np.asarray(self.b_values, dtype=float)
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
            raise ValueError("a_values and b_values must be equal-length vectors")
        if a.size < 2:
            raise ValueError("need at least 2 paired samples")
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "b_values", b)

    def __len__(self) -> int:
        return self.a_values.size


def optimal_gamma(cov_ab: float, var_b: float) -> float:
    """Gain minimizing Var(X_a − γ·X_b): the regression coefficient cov/var."""
    if var_b <= 0:
        raise ValueError("var_b must be positive (degenerate marginal)")
    return cov_ab / var_b


def inference_variance_analytic(
    state: GaussianState, mode_a: int, mode_b: int
) -> InferenceResult:
    """Exact inference variances from a state's second moments.

    Per quadrature the minimized variance is
    (Δ²Q_a·Δ²Q_b − cov(Q_a, Q_b)²) / Δ²Q_b, never worse than Δ²Q_a alone.
    """
    if mode_a == mode_b:
        raise ValueError("modes must be distinct")
    ix_a = state.quadrature_index(mode_a, QuadratureBasis.X)
    ix_b = state.quadrature_index(mode_b, QuadratureBasis.X)
    cov = state.cov

    out = {}
    for name, (ia, ib) in {"x": (ix_a, ix_b), "p": (ix_a + 1, ix_b + 1)}.items():
        var_a, var_b, c = cov[ia, ia], cov[ib, ib], cov[ia, ib]
        if var_b <= 0:
            raise ValueError("degenerate marginal variance on the inferring mode")
        out[name] = (var_a - c * c / var_b, c / var_b)

    var_x, gamma_x = out["x"]
    var_p, gamma_reg_p = out["p"]
    return InferenceResult(
        gamma_x=gamma_x,
        gamma_p=-gamma_reg_p,  # δp = P_a + γ·P_b, so γ = −cov/var
        var_x_inf=var_x,
        var_p_inf=var_p,
        product=var_x * var_p,
    )


def epr_criterion(result: InferenceResult) -> bool:
    """True when the inference-variance product beats the quantum limit of 1."""
    return bool(result.product < 1.0)


def _branch_estimate(samples: PairedSamples) -> tuple[float, float, int]:
    """(inference variance, signed regression gain, n) for one basis."""
    a, b = samples.a_values, samples.b_values
    n = a.size
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    if var_b == 0.0:
        raise ValueError("zero sample variance on b_values; gain is undefined")
    cov = float(np.cov(a, b, ddof=1)[0, 1])
    gain = cov / var_b
    var_inf = max(var_a - cov * cov / var_b, 0.0)
    return var_inf, gain, n


def estimate_inference(
    samples_x: PairedSamples, samples_p: PairedSamples
) -> InferenceResult:
    """Plug-in inference-variance estimate from measurement transcripts.

    Gains are fitted independently per basis.  The product's standard error
    uses the Gaussian fourth-moment approximation Var(s²) ≈ 2σ⁴/(n−1) per
    branch, combined in quadrature on the relative scale.
    """
    if samples_x.basis is not QuadratureBasis.X or samples_p.basis is not QuadratureBasis.P:
        raise ValueError("estimate_inference expects an X-basis and a P-basis sample set")
    var_x, gain_x, n_x = _branch_estimate(samples_x)
    var_p, gain_p, n_p = _branch_estimate(samples_p)
    product = var_x * var_p
    stderr = product * np.sqrt(2.0 / (n_x - 1) + 2.0 / (n_p - 1))
    return InferenceResult(
        gamma_x=gain_x,
        gamma_p=-gain_p,
        var_x_inf=var_x,
        var_p_inf=var_p,
        product=product,
        stderr_product=stderr,
        n_pairs_x=n_x,
        n_pairs_p=n_p,
    )
