"""Truncated-Fock-space realization of effective models: operator matrices,
vacuum and squeezed dissipators, Liouvillian assembly, time integration, and
steady states."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .algebra import ModeRegistry, OperatorExpr

log = logging.getLogger(__name__)

ATOL = 1e-10
RTOL = 1e-8
DENSE_STEADY_DIM = 40
DIM_CAP = 4096
CLIP_FLOOR = -1e-8
ABORT_FLOOR = -1e-7
LEAK_THRESHOLD = 1e-6


class PhysicsValidationError(ValueError):
    """Model or state violates a physical precondition."""


class NumericalFailure(RuntimeError):
    """Integration or linear algebra failed beyond recoverable tolerance."""


def annihilation_matrix(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def to_matrix(x: OperatorExpr, registry: ModeRegistry) -> np.ndarray:
    """Fock-basis matrix of a normal-ordered polynomial.

    Tensor-product order follows the registry; annihilation carries sqrt(n)
    on the first superdiagonal of each mode factor.
    """
    dims = registry.dims
    total = int(np.prod(dims))
    if total > DIM_CAP:
        raise PhysicsValidationError(
            f"total Hilbert dimension {total} exceeds cap {DIM_CAP}"
        )
    out = np.zeros((total, total), dtype=complex)
    singles = [annihilation_matrix(d) for d in dims]
    for mono, coeff in x.terms.items():
        factors = []
        for (p, q), a in zip(mono, singles):
            ad = a.conj().T
            factors.append(np.linalg.matrix_power(ad, p) @ np.linalg.matrix_power(a, q))
        m = factors[0]
        for f in factors[1:]:
            m = np.kron(m, f)
        out += coeff * m
    return out


def expectation(opmat: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(opmat @ rho))


def partial_trace(rho: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Trace out all modes not in keep; keep order follows original order."""
    n = len(dims)
    keep = tuple(sorted(keep))
    resh = rho.reshape(dims + dims)
    # pair up traced-out axes
    traced = [i for i in range(n) if i not in keep]
    for off, ax in enumerate(traced):
        resh = np.trace(resh, axis1=ax - off, axis2=ax - off + n - off)
        n -= 1
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return resh.reshape(d, d)


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    sv = np.linalg.svd(r1 - r2, compute_uv=False)
    return float(0.5 * np.sum(sv))


@dataclass
class DensityMatrix:
    """Validated truncated-Fock density matrix."""

    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        d = self.mat.shape[0]
        if self.mat.shape != (d, d):
            raise PhysicsValidationError("density matrix must be square")
        herm = np.max(np.abs(self.mat - self.mat.conj().T))
        if herm > 1e-10:
            raise PhysicsValidationError(f"density matrix not Hermitian: max dev {herm:.2e}")
        tr = np.trace(self.mat).real
        if abs(tr - 1.0) > 1e-8:
            raise PhysicsValidationError(f"trace {tr!r} deviates from 1 beyond 1e-8")
        mineig = float(np.linalg.eigvalsh(self.mat)[0])
        if mineig < CLIP_FLOOR:
            raise PhysicsValidationError(f"negative eigenvalue {mineig:.2e} below floor")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @staticmethod
    def vacuum(dim: int) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[0, 0] = 1.0
        return DensityMatrix(m)

    @staticmethod
    def fock(dim: int, n: int) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[n, n] = 1.0
        return DensityMatrix(m)

    @staticmethod
    def coherent(dim: int, alpha: complex) -> "DensityMatrix":
        ns = np.arange(dim)
        logfact = np.cumsum(np.log(np.maximum(ns, 1)))
        amps = np.exp(-abs(alpha) ** 2 / 2) * np.power(alpha, ns) / np.exp(logfact / 2)
        amps /= np.linalg.norm(amps)  # truncation renormalization
        return DensityMatrix(np.outer(amps, amps.conj()))

    @staticmethod
    def thermal(dim: int, nbar: float) -> "DensityMatrix":
        if nbar <= 0:
            return DensityMatrix.vacuum(dim)
        pops = (nbar / (1 + nbar)) ** np.arange(dim) / (1 + nbar)
        pops /= pops.sum()
        return DensityMatrix(np.diag(pops).astype(complex))


def _dissipator_apply(Lmat: np.ndarray, rho: np.ndarray) -> np.ndarray:
    Ld = Lmat.conj().T
    LdL = Ld @ Lmat
    return Lmat @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def vacuum_dissipator(Lmat: np.ndarray):
    """Superoperator closure for D[L]."""
    Ld = Lmat.conj().T
    LdL = Ld @ Lmat

    def apply(rho: np.ndarray) -> np.ndarray:
        return Lmat @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)

    return apply


def squeezed_dissipator(Lmat: np.ndarray, N: float, M: complex):
    """Superoperator closure for the squeezed-bath dissipator D_s[L].

    D_s[L]rho = (N+1) D[L]rho + N D[Ld]rho
                + conj(M) (L rho L - (L^2 rho + rho L^2)/2)
                + M (Ld rho Ld - (Ld^2 rho + rho Ld^2)/2)
    """
    if abs(M) ** 2 > N * (N + 1) + 1e-9:
        raise PhysicsValidationError(
            f"unphysical squeezed bath: |M|^2={abs(M)**2:.6g} > N(N+1)={N*(N+1):.6g}"
        )
    Ld = Lmat.conj().T
    L2 = Lmat @ Lmat
    Ld2 = Ld @ Ld
    Mc = complex(M).conjugate()

    def apply(rho: np.ndarray) -> np.ndarray:
        out = (N + 1) * _dissipator_apply(Lmat, rho)
        out += N * _dissipator_apply(Ld, rho)
        out += Mc * (Lmat @ rho @ Lmat - 0.5 * (L2 @ rho + rho @ L2))
        out += M * (Ld @ rho @ Ld - 0.5 * (Ld2 @ rho + rho @ Ld2))
        return out

    return apply


@dataclass
class Liouvillian:
    """Master-equation generator: commutator with H plus weighted dissipators.

    Holds matrices and closure terms; the dense dim^2 x dim^2 matrix is built
    lazily for steady-state work only.
    """

    Hmat: np.ndarray
    channels: list  # (Lmat, bath, rate_prefactor) for diagnostics
    dim: int
    _terms: list = field(default_factory=list, repr=False)
    _dense: np.ndarray | None = field(default=None, repr=False)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.Hmat @ rho - rho @ self.Hmat)
        for rate, term in self._terms:
            out += rate * term(rho)
        return out

    def as_dense(self) -> np.ndarray:
        if self._dense is None:
            d = self.dim
            if d > DENSE_STEADY_DIM * 3:
                raise NumericalFailure(
                    f"dense superoperator at dim={d} would be {d*d}x{d*d}; refusing"
                )
            M = np.zeros((d * d, d * d), dtype=complex)
            E = np.zeros((d, d), dtype=complex)
            for i in range(d):
                for j in range(d):
                    E[i, j] = 1.0
                    M[:, i * d + j] = self.apply(E).ravel()
                    E[i, j] = 0.0
            self._dense = M
        return self._dense


def build_liouvillian(model, registry: ModeRegistry) -> Liouvillian:
    """Assemble the generator of an EffectiveModel over a registry."""
    from .network import BathKind  # cycle-free: network imports algebra only

    Hmat = to_matrix(model.H_eff, registry)
    dim = Hmat.shape[0]
    if dim * dim > DIM_CAP * DIM_CAP:
        raise PhysicsValidationError("Liouvillian dimension cap exceeded")
    herm = np.max(np.abs(Hmat - Hmat.conj().T)) if dim else 0.0
    if herm > 1e-9:
        raise PhysicsValidationError(f"H_eff matrix not Hermitian: {herm:.2e}")
    terms = []
    chans = []
    for ch in model.channels:
        Lmat = to_matrix(ch.op, registry)
        if ch.bath.kind is BathKind.VACUUM:
            terms.append((ch.rate_prefactor, vacuum_dissipator(Lmat)))
        else:
            terms.append(
                (ch.rate_prefactor, squeezed_dissipator(Lmat, ch.bath.N, ch.bath.M))
            )
        chans.append((Lmat, ch.bath, ch.rate_prefactor))
    return Liouvillian(Hmat=Hmat, channels=chans, dim=dim, _terms=terms)


def _validate_evolved(rho: np.ndarray, t: float) -> np.ndarray:
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise NumericalFailure(f"trace drift {tr - 1:.3e} at t={t:g}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > 1e-9:
        raise NumericalFailure(f"Hermiticity loss {herm:.3e} at t={t:g}")
    rho = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(rho)
    if w[0] < ABORT_FLOOR:
        raise NumericalFailure(
            f"negative population {w[0]:.3e} at t={t:g}; truncation inadequate"
        )
    if w[0] < CLIP_FLOOR:
        # roundoff-scale negatives: project back to the PSD cone and renormalize
        wc, v = np.linalg.eigh(rho)
        wc = np.clip(wc, 0.0, None)
        rho = (v * wc) @ v.conj().T
        rho /= np.trace(rho).real
        log.info("clipped eigenvalue floor %.3e at t=%g", w[0], t)
    return rho


def integrate(
    liou: Liouvillian, rho0: DensityMatrix, t_grid, stats: dict | None = None
) -> list[DensityMatrix]:
    """Evolve rho0 along t_grid (strictly increasing from 0).

    If ``stats`` is given, it receives the integrator's work counters.
    """
    t_grid = list(t_grid)
    if t_grid[0] != 0 or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    d = liou.dim

    def rhs(t, y):
        return liou.apply(y.reshape(d, d)).ravel()

    sol = solve_ivp(
        rhs,
        (0.0, t_grid[-1]),
        rho0.mat.ravel().astype(complex),
        t_eval=t_grid,
        method="RK45",
        atol=ATOL,
        rtol=RTOL,
    )
    if stats is not None:
        stats.update(
            method="RK45",
            rhs_evaluations=int(sol.nfev),
            accepted_points=int(sol.t.size),
            atol=ATOL,
            rtol=RTOL,
        )
    if not sol.success:
        raise NumericalFailure(f"integrator failed: {sol.message}")
    out = []
    for k, t in enumerate(t_grid):
        rho = sol.y[:, k].reshape(d, d)
        out.append(DensityMatrix(_validate_evolved(rho, t)))
    return out


def steady_state(liou: Liouvillian) -> DensityMatrix:
    """Null-space steady state; dense eigensolve at small dim, else shift-invert."""
    d = liou.dim
    if d <= DENSE_STEADY_DIM:
        M = liou.as_dense()
        w, v = np.linalg.eig(M)
        scale = np.max(np.abs(w)) or 1.0
        idx = np.argsort(np.abs(w))
        if len(w) > 1 and abs(w[idx[1]]) < 1e-9 * scale:
            raise PhysicsValidationError(
                "degenerate Liouvillian kernel: multiple steady states"
            )
        vec = v[:, idx[0]]
    else:
        from scipy.sparse import csr_matrix
        from scipy.sparse.linalg import eigs

        M = csr_matrix(liou.as_dense())
        w, v = eigs(M, k=2, sigma=0.0, which="LM")
        order = np.argsort(np.abs(w))
        if abs(w[order[1]]) < 1e-9:
            raise PhysicsValidationError(
                "degenerate Liouvillian kernel: multiple steady states"
            )
        vec = v[:, order[0]]
    rho = vec.reshape(d, d)
    rho = rho + rho.conj().T
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise NumericalFailure("steady-state candidate has vanishing trace")
    rho = rho / tr
    res = np.linalg.norm(liou.apply(rho))
    norm = np.linalg.norm(liou.as_dense()) if d <= DENSE_STEADY_DIM else 1.0
    if res > 1e-9 * max(norm, 1.0):
        warnings.warn(f"steady-state residual {res:.2e} above target")
    w = np.linalg.eigvalsh(rho)
    if w[0] < CLIP_FLOOR:
        wc, v2 = np.linalg.eigh(rho)
        wc = np.clip(wc, 0.0, None)
        rho = (v2 * wc) @ v2.conj().T
        rho /= np.trace(rho).real
    return DensityMatrix(rho)


def fock_leak(rho: np.ndarray, dims: tuple[int, ...]) -> float:
    """Worst top-two-level population over modes (truncation adequacy probe)."""
    worst = 0.0
    for k, d in enumerate(dims):
        red = partial_trace(rho, dims, (k,)) if len(dims) > 1 else rho
        pops = np.diag(red).real
        worst = max(worst, float(pops[-2:].sum()))
    return worst
