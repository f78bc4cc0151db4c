"""Nonclassicality diagnostics: Fano factor, steady-state g2 via quantum
regression, and non-Gaussianity against a moment-matched Gaussian reference."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .lindblad import (
    DensityMatrix,
    PhysicsValidationError,
    annihilation_matrix,
    build_liouvillian,
    integrate,
    partial_trace,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentSet:
    """First and second quadrature moments, x = (a + ad)/sqrt(2)."""

    mean: tuple[float, float]
    cov: np.ndarray  # 2x2 symmetric

    def __post_init__(self):
        c = np.asarray(self.cov, dtype=float)
        if c.shape != (2, 2) or abs(c[0, 1] - c[1, 0]) > 1e-9:
            raise PhysicsValidationError("covariance must be 2x2 symmetric")
        if np.linalg.det(c) < 0.25 - 1e-9:
            raise PhysicsValidationError(
                f"covariance below uncertainty floor: det={np.linalg.det(c):.6g}"
            )


def _mode_reduced(rho: np.ndarray, dims, mode: int) -> np.ndarray:
    if dims is None or len(dims) == 1:
        return rho
    return partial_trace(rho, tuple(dims), (mode,))


def moments(rho: DensityMatrix | np.ndarray, dims=None, mode: int = 0) -> MomentSet:
    """Quadrature mean and symmetrized covariance of one mode."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else rho
    red = _mode_reduced(mat, dims, mode)
    d = red.shape[0]
    a = annihilation_matrix(d)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2)
    p = 1j * (ad - a) / math.sqrt(2)
    ex = float(np.trace(x @ red).real)
    ep = float(np.trace(p @ red).real)
    xx = float(np.trace(x @ x @ red).real) - ex * ex
    pp = float(np.trace(p @ p @ red).real) - ep * ep
    xp = float((0.5 * np.trace((x @ p + p @ x) @ red)).real) - ex * ep
    return MomentSet(mean=(ex, ep), cov=np.array([[xx, xp], [xp, pp]]))


def fano_factor(rho: DensityMatrix | np.ndarray, dims=None, mode: int = 0) -> float:
    """Photon-number variance over mean; NaN on vanishing mean (undefined)."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else rho
    red = _mode_reduced(mat, dims, mode)
    n = np.arange(red.shape[0], dtype=float)
    pops = np.diag(red).real
    mean = float(n @ pops)
    if mean <= 0:
        return math.nan
    var = float((n * n) @ pops) - mean * mean
    return var / mean


def g2(model, rho_ss: DensityMatrix, tau_grid, registry=None) -> list[float]:
    """Stationary g2(tau) by quantum regression.

    The seed a rho_ss ad is renormalized, evolved under the model Liouvillian,
    and probed with the number operator; g2(0) = <ad ad a a>/<ad a>^2 emerges
    at the first grid point.
    """
    reg = registry if registry is not None else model.registry
    liou = build_liouvillian(model, reg)
    d = liou.dim
    if rho_ss.dim != d:
        raise PhysicsValidationError("steady state dimension mismatch with model")
    if len(reg) != 1:
        raise PhysicsValidationError("g2 supports single-mode models")
    a = annihilation_matrix(d)
    nmat = a.conj().T @ a
    nbar = float(np.trace(nmat @ rho_ss.mat).real)
    if nbar <= 0:
        raise PhysicsValidationError("g2 undefined at zero mean photon number")
    seed = a @ rho_ss.mat @ a.conj().T
    seed = 0.5 * (seed + seed.conj().T)
    seed_tr = float(np.trace(seed).real)  # equals nbar
    sigma0 = DensityMatrix(seed / seed_tr)
    taus = list(tau_grid)
    prepend = taus[0] != 0.0
    states = integrate(liou, sigma0, ([0.0] + taus) if prepend else taus)
    if prepend:
        states = states[1:]
    out = []
    for st in states:
        val = float(np.trace(nmat @ st.mat).real) * seed_tr / (nbar * nbar)
        out.append(val)
    return out


def _displacement(d: int, alpha: complex) -> np.ndarray:
    a = annihilation_matrix(d)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def _squeeze(d: int, zeta: complex) -> np.ndarray:
    a = annihilation_matrix(d)
    return expm(0.5 * (np.conj(zeta) * (a @ a) - zeta * (a.conj().T @ a.conj().T)))


def gaussian_reference(rho: DensityMatrix | np.ndarray, dims=None, mode: int = 0) -> DensityMatrix:
    """Displaced squeezed thermal state matching the mode's first/second moments.

    One-mode normal form: nu = sqrt(det cov) fixes the thermal occupancy
    nbar = nu - 1/2, the principal-axis ratio fixes the squeeze magnitude,
    and the principal angle fixes the squeeze phase.
    """
    mat = rho.mat if isinstance(rho, DensityMatrix) else rho
    red = _mode_reduced(mat, dims, mode)
    d = red.shape[0]
    ms = moments(red)
    V = ms.cov
    nu = math.sqrt(max(np.linalg.det(V), 0.25))
    nbar = max(nu - 0.5, 0.0)
    w, vecs = np.linalg.eigh(V)  # ascending: w[0] squeezed axis
    r = 0.25 * math.log(w[1] / w[0]) if w[0] > 0 else 0.0
    # angle of the low-variance principal axis in the (x, p) plane
    psi = math.atan2(vecs[1, 0], vecs[0, 0])
    alpha = (ms.mean[0] + 1j * ms.mean[1]) / math.sqrt(2)
    base = DensityMatrix.thermal(d, nbar).mat
    S = _squeeze(d, r * np.exp(2j * psi))
    Dm = _displacement(d, alpha)
    U = Dm @ S
    sigma = U @ base @ U.conj().T
    sigma = 0.5 * (sigma + sigma.conj().T)
    sigma /= np.trace(sigma).real
    out = DensityMatrix(sigma)
    ms2 = moments(out)
    dev = max(
        abs(ms2.mean[0] - ms.mean[0]),
        abs(ms2.mean[1] - ms.mean[1]),
        float(np.max(np.abs(ms2.cov - ms.cov))),
    )
    if dev > 1e-6:
        # moments beyond truncation reach cannot be matched; surface it
        raise PhysicsValidationError(
            f"gaussian reference self-check failed: moment deviation {dev:.2e} "
            f"(truncation {d} too small for these moments?)"
        )
    return out


def non_gaussianity(rho: DensityMatrix | np.ndarray, dims=None, mode: int = 0) -> float:
    """Hilbert-Schmidt non-Gaussianity tr[(rho-sigma)^2/2]/tr[rho^2], in [0,1]."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else rho
    red = _mode_reduced(mat, dims, mode)
    sigma = gaussian_reference(red).mat
    diff = red - sigma
    num = 0.5 * float(np.trace(diff @ diff).real)
    den = float(np.trace(red @ red).real)
    val = num / den
    if val < 0 or val > 1:
        log.info("clamping non-Gaussianity %.3e to [0,1]", val)
    return min(max(val, 0.0), 1.0)
