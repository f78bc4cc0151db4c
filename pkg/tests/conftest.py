"""Shared fixtures and hypothesis strategies for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from slhnet.algebra import ModeRegistry, OperatorExpr


@pytest.fixture
def reg1() -> ModeRegistry:
    return ModeRegistry((("a", 8),))


@pytest.fixture
def reg2() -> ModeRegistry:
    return ModeRegistry((("a", 6), ("b", 5)))


def small_complex(max_mag: float = 2.0):
    part = st.floats(-max_mag, max_mag, allow_nan=False, allow_infinity=False)
    return st.builds(complex, part, part)


def operator_exprs(registry: ModeRegistry, max_degree: int = 1,
                   max_terms: int = 3):
    """Random low-degree operator polynomials over a fixed registry.

    Per-mode powers stay small so that triple products remain below the
    high-degree warning threshold of the algebra layer.
    """
    n = len(registry)
    mono = st.tuples(*[
        st.tuples(st.integers(0, max_degree), st.integers(0, max_degree))
        for _ in range(n)
    ])
    term = st.tuples(mono, small_complex())
    return st.lists(term, min_size=0, max_size=max_terms).map(
        lambda pairs: OperatorExpr(
            registry,
            {m: sum(c for mm, c in pairs if mm == m)
             for m, _ in pairs},
        )
    )


def assert_close_matrices(x: np.ndarray, y: np.ndarray, tol: float,
                          label: str = "") -> None:
    dev = float(np.max(np.abs(x - y))) if x.size else 0.0
    assert dev <= tol, f"{label} max deviation {dev:.3e} > {tol:.1e}"
