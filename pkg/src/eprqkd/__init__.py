"""Continuous-variable EPR quantum cryptography simulator.

A Gaussian-state engine for the two-mode parametric source and its lossy
channel, EPR inference-variance metrics, the bit-transmission protocol
with three eavesdropper models and detection tests, and truncated
Fock-space Bell-CH numerics for the non-Gaussian second scheme.
"""

from .adversary import (
    AttackSignature,
    BeamsplitterTap,
    EveModel,
    InterceptResend,
    NoEve,
    QndTap,
    eve_ber_empirical,
    gaussian_tail,
    intercept_resend_transform,
    predicted_signature,
    qnd_transform,
    tap_transform,
)
from .bell import (
    AngleSet,
    BellOutcome,
    bell_S,
    block_decode,
    lhv_factorized_S,
    reference_histograms,
    sample_block_histogram,
    sign_probabilities,
    truncation_convergence,
)
from .config import (
    CAT_ANGLES,
    PAIR_COHERENT_ANGLES,
    BellSpec,
    ConfigError,
    ScenarioConfig,
    SweepGrid,
    parse_config,
)
from .epr import (
    InferenceResult,
    PairedSamples,
    epr_criterion,
    estimate_inference,
    inference_variance_analytic,
    optimal_gamma,
)
from .fock import (
    FockTwoMode,
    apply_fock_loss,
    evolved_cat_state,
    fock_phase_shift,
    halfaxis_projector,
    pair_coherent_state,
    phase_encode,
    quadrature_wavefunctions,
)
from .gaussian import (
    GaussianState,
    QuadratureBasis,
    SymplecticOp,
    apply_loss,
    beamsplitter,
    displace_coherent,
    marginal_moments,
    phase_shift,
    sample_quadratures,
    two_mode_squeeze,
    vacuum_state,
)
from .protocol import (
    BitRound,
    DetectionReport,
    ProtocolConfig,
    Role,
    SeparationChoice,
    analytic_baseline,
    bob_decode,
    calibrate_baseline,
    choose_amplitude_separation,
    conditional_outlier_test,
    encode_round,
    public_transcript,
    record_fluctuation,
    run_protocol,
    write_round_csv,
)
from .report import RunReport, to_json
from .scenarios import build_bell_state, run_scenario, sweep_rows

__version__ = "0.1.0"
