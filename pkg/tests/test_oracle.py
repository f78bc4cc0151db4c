"""Co-simulation checks: the full plant-plus-amplifier composite against the
eliminated single-mode model, plus the error-sweep harness around them."""

from __future__ import annotations

import math

import numpy as np
import pytest

from slhnet.algebra import ModeRegistry, OperatorExpr
from slhnet.lindblad import (
    DensityMatrix,
    build_liouvillian,
    integrate,
    to_matrix,
    trace_distance,
)
from slhnet.network import (
    AmplifierParams,
    FeedbackLoopSpec,
    eliminate_amplifier,
)
from slhnet.oracle import elimination_error, full_loop_simulate

DIM = 8
REG = ModeRegistry((("a", DIM),))
A_OP = OperatorExpr.annihilation(REG, "a")


def linear_loop(kappa: float) -> FeedbackLoopSpec:
    """Damped linear plant feeding back through its position quadrature,
    with the amplifier held at squeezing parameter r0 = 0.5."""
    return FeedbackLoopSpec(
        plant_H=0.8 * A_OP.adjoint() * A_OP,
        theta=0.3,
        L=A_OP,
        L_f=0.5 * math.sqrt(0.5) * (A_OP + A_OP.adjoint()),
        amp=AmplifierParams(kappa=kappa, xi=kappa * math.tanh(0.25)),
    )


class TestFullLoopSimulate:
    def test_decoupled_limit_is_unitary_plant_evolution(self):
        """With no pump, no drive and no couplings the plant precesses
        freely while the amplifier sits in vacuum."""
        omega, alpha = 0.8, 0.6
        spec = FeedbackLoopSpec(
            plant_H=omega * A_OP.adjoint() * A_OP,
            theta=0.0,
            L=OperatorExpr.zero(REG),
            L_f=OperatorExpr.zero(REG),
            amp=AmplifierParams(kappa=5.0, xi=0.0),
        )
        t_grid = [0.0, 0.7, 1.9]
        red = full_loop_simulate(
            spec, DensityMatrix.coherent(DIM, alpha), t_grid, amp_dim=6
        )
        for t, st in zip(t_grid, red):
            ref = DensityMatrix.coherent(DIM, alpha * np.exp(-1j * omega * t))
            assert trace_distance(st.mat, ref.mat) < 1e-6

    def test_reduced_states_stay_physical(self):
        spec = linear_loop(kappa=10.0)
        red = full_loop_simulate(
            spec, DensityMatrix.coherent(DIM, 0.6), [0.0, 0.5], amp_dim=10
        )
        for st in red:
            assert abs(np.trace(st.mat).real - 1.0) < 1e-9
            assert np.max(np.abs(st.mat - st.mat.conj().T)) < 1e-10

    def test_fast_amplifier_matches_eliminated_mean_occupation(self):
        """At a hundredfold timescale separation the reduced mean photon
        number follows the eliminated model to within five percent."""
        spec = linear_loop(kappa=100.0)
        rho0 = DensityMatrix.coherent(DIM, 0.6)
        t_grid = [0.0, 1.0, 3.0]
        red = full_loop_simulate(spec, rho0, t_grid, amp_dim=10)
        liou = build_liouvillian(eliminate_amplifier(spec), REG)
        ref = integrate(liou, rho0, t_grid)
        nmat = to_matrix(A_OP.adjoint() * A_OP, REG)
        for full_st, red_st in zip(red[1:], ref[1:]):
            n_full = np.trace(nmat @ full_st.mat).real
            n_red = np.trace(nmat @ red_st.mat).real
            assert abs(n_full - n_red) <= 0.05 * max(n_red, 1e-12)


class TestEliminationError:
    def test_error_shrinks_with_timescale_separation(self):
        rep = elimination_error(
            linear_loop(10.0), kappa_over_gamma=(10.0, 30.0), amp_dim=10
        )
        assert rep.verdict == "monotone"
        assert rep.distances[1] < rep.distances[0]
        assert all(d > 0 for d in rep.distances)
        assert rep.probe_time == pytest.approx(3.0)

    def test_single_ratio_is_insufficient(self):
        rep = elimination_error(
            linear_loop(10.0), kappa_over_gamma=(10.0,), amp_dim=10
        )
        assert rep.verdict == "insufficient"
        assert len(rep.rows) == 1

    def test_sweep_is_deterministic(self):
        kwargs = dict(kappa_over_gamma=(10.0, 30.0), amp_dim=10)
        r1 = elimination_error(linear_loop(10.0), **kwargs)
        r2 = elimination_error(linear_loop(10.0), **kwargs)
        assert r1.distances == r2.distances
        assert r1.verdict == r2.verdict

    def test_rows_record_scaled_linewidths(self):
        rep = elimination_error(
            linear_loop(10.0), kappa_over_gamma=(10.0, 30.0), amp_dim=10
        )
        for row in rep.rows:
            assert row.kappa == pytest.approx(row.kappa_over_gamma * 1.0)


class TestFixedSqueezingInvariance:
    def test_eliminated_model_depends_only_on_squeezing_parameter(self):
        """Scaling the amplifier linewidth at fixed r0 must leave every
        coefficient of the eliminated model unchanged."""
        slow = linear_loop(kappa=10.0)
        fast = linear_loop(kappa=100.0)
        assert abs(slow.amp.r0 - fast.amp.r0) < 1e-12
        m_slow = eliminate_amplifier(slow)
        m_fast = eliminate_amplifier(fast)
        assert (m_slow.H_eff - m_fast.H_eff).max_coeff() < 1e-12
        assert len(m_slow.channels) == len(m_fast.channels) == 1
        diff = m_slow.channels[0].op - m_fast.channels[0].op
        assert diff.max_coeff() < 1e-12
