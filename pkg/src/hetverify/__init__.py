"""Heterodyne verification of continuous-variable quantum states.

Estimators of density-matrix elements from heterodyne samples, an exact
truncated Fock-space oracle, a seeded heterodyne sampler for simulated
provers, and sample-size planners and accept/abort verifiers built on top.
"""

from .errors import HetVerifyError, NumericalError, ParameterError, TruncationError, ValidationError
from .estimators import (
    CoreEstimator,
    EstimatorConfig,
    EstimatorConstants,
    bias_bound,
    constants_for,
    f_kl,
    g_core,
    g_kl,
    laguerre2d,
    range_bound,
)
from .protocols import (
    EnergyTestConfig,
    PlanRequest,
    PlanResult,
    VerificationReport,
    noniid_confidence,
    noniid_postprocess,
    protocol1_estimate,
    protocol1_plan,
    protocol2_plan,
    protocol2_witness,
    protocol3_plan,
    protocol3_verify,
    tvd_bound,
)
from .sampler import (
    ProverModel,
    SampleBatch,
    forward_transform,
    sample_core_q,
    sample_density_q,
    sample_prover,
    verifier_transform,
)
from .states import (
    CoreState,
    FockDensityMatrix,
    PassiveUnitary,
    TargetSpec,
    apply_loss,
    expectation_g_exact,
    fidelity_pure,
    haar_unitary,
    squeezed_coherent_fock,
    witness_exact,
)

__version__ = "0.1.0"

__all__ = [
    "HetVerifyError",
    "NumericalError",
    "ParameterError",
    "TruncationError",
    "ValidationError",
    "CoreEstimator",
    "EstimatorConfig",
    "EstimatorConstants",
    "bias_bound",
    "constants_for",
    "f_kl",
    "g_core",
    "g_kl",
    "laguerre2d",
    "range_bound",
    "EnergyTestConfig",
    "PlanRequest",
    "PlanResult",
    "VerificationReport",
    "noniid_confidence",
    "noniid_postprocess",
    "protocol1_estimate",
    "protocol1_plan",
    "protocol2_plan",
    "protocol2_witness",
    "protocol3_plan",
    "protocol3_verify",
    "tvd_bound",
    "ProverModel",
    "SampleBatch",
    "forward_transform",
    "sample_core_q",
    "sample_density_q",
    "sample_prover",
    "verifier_transform",
    "CoreState",
    "FockDensityMatrix",
    "PassiveUnitary",
    "TargetSpec",
    "apply_loss",
    "expectation_g_exact",
    "fidelity_pure",
    "haar_unitary",
    "squeezed_coherent_fock",
    "witness_exact",
]
