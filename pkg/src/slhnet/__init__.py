"""Coherent-feedback SLH networks: composition, amplifier elimination,
squeezed-bath Lindblad dynamics, and nonclassicality observables."""

from .algebra import (
    ModeRegistry,
    OperatorExpr,
    add,
    adjoint,
    commutator,
    is_hermitian,
    multiply,
)
from .network import (
    AmplifierParams,
    Bath,
    BathKind,
    DissipationChannel,
    EffectiveModel,
    FeedbackLoopSpec,
    SLHTriple,
    amplifier_slh,
    compose_loop_full,
    cross_kerr_coefficient,
    eliminate_amplifier,
    gamma_a_from_circuit,
    high_gain_limit,
    kerr_coefficients,
    quartic_coefficients,
    self_feedback,
    series_product,
)

__all__ = [
    "ModeRegistry",
    "OperatorExpr",
    "add",
    "adjoint",
    "commutator",
    "is_hermitian",
    "multiply",
    "AmplifierParams",
    "Bath",
    "BathKind",
    "DissipationChannel",
    "EffectiveModel",
    "FeedbackLoopSpec",
    "SLHTriple",
    "amplifier_slh",
    "compose_loop_full",
    "cross_kerr_coefficient",
    "eliminate_amplifier",
    "gamma_a_from_circuit",
    "high_gain_limit",
    "kerr_coefficients",
    "quartic_coefficients",
    "self_feedback",
    "series_product",
]
