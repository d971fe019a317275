"""Liouvillian assembly, steady states, time evolution and expectation values.

Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho), i.e.
rho is flattened in Fortran order. Steady states come from a direct sparse LU
factorization of the Liouvillian with its first row replaced by the vectorized
trace constraint (right-hand side e1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import splu

from .errors import DimensionError, SolverError, SteadyStateError
from .hilbert import Operator, SpaceDims
from .model import SystemParams

RESIDUAL_REL_TOL = 1e-9
TRACE_TOL = 1e-10
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8


@dataclass
class DensityMatrix:
    """A system state: Hermitian, unit-trace d x d complex matrix."""

    dims: SpaceDims
    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        if self.mat.shape != (self.dims.total, self.dims.total):
            raise DimensionError(
                f"state shape {self.mat.shape} does not match dims total {self.dims.total}")

    def validate(self, hermit_tol=HERMITICITY_TOL, trace_tol=TRACE_TOL,
                 eig_floor=EIGENVALUE_FLOOR):
        """Assert Hermiticity, unit trace and positivity; raises SolverError."""
        scale = max(1.0, float(np.abs(self.mat).max()))
        herm = float(np.abs(self.mat - self.mat.conj().T).max()) / scale
        if herm > hermit_tol:
            raise SolverError(f"density matrix not Hermitian: deviation {herm:.3e}")
        tr = complex(np.trace(self.mat))
        if abs(tr - 1.0) > trace_tol:
            raise SolverError(f"density matrix trace {tr} deviates from 1")
        evals = np.linalg.eigvalsh(self.mat)
        if evals.min() < eig_floor:
            raise SolverError(f"density matrix negative eigenvalue {evals.min():.3e}")
        return self

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, self.mat.copy())


@dataclass
class Liouvillian:
    """Sparse superoperator on vectorized density matrices (column-stacking)."""

    dims: SpaceDims
    super: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.super.shape[0]

    def __add__(self, other: "Liouvillian") -> "Liouvillian":
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return Liouvillian(self.dims, self.super + other.super)

    def __mul__(self, scalar) -> "Liouvillian":
        return Liouvillian(self.dims, self.super * scalar)

    __rmul__ = __mul__


def build_liouvillian(H: Operator | None,
                      channels: Sequence[tuple[Operator, float]] = ()) -> Liouvillian:
    """Superoperator of -i[H, .] plus the given jump channels.

    Each channel (A, r) contributes r * (2 A . A† - A†A . - . A†A), matching
    the convention of `model.dissipators`.
    """
    if H is None and not channels:
        raise ValueError("need a Hamiltonian or at least one channel")
    dims = H.dims if H is not None else channels[0][0].dims
    d = dims.total
    eye = sp.identity(d, format="csr", dtype=complex)
    terms = []
    if H is not None:
        hm = H.mat
        terms.append(-1j * (sp.kron(eye, hm) - sp.kron(hm.T, eye)))
    for A, rate in channels:
        if A.dims != dims:
            raise DimensionError(f"channel dims {A.dims} do not match {dims}")
        if rate == 0.0:
            continue
        am = A.mat
        ada = (am.conj().T @ am)
        terms.append(rate * (2.0 * sp.kron(am.conj(), am)
                             - sp.kron(eye, ada) - sp.kron(ada.T, eye)))
    if not terms:
        total = sp.csr_matrix((d * d, d * d), dtype=complex)
    else:
        total = terms[0]
        for t in terms[1:]:
            total = total + t
    return Liouvillian(dims, sp.csr_matrix(total))


def _trace_constrained_system(L: Liouvillian):
    """Replace row 0 of L with the vectorized trace row; rhs is e1."""
    d = L.dims.total
    n = L.n
    coo = L.super.tocoo()
    keep = coo.row != 0
    rows = np.concatenate([coo.row[keep], np.zeros(d, dtype=coo.row.dtype)])
    cols = np.concatenate([coo.col[keep], np.arange(0, n, d + 1, dtype=coo.col.dtype)])
    data = np.concatenate([coo.data[keep], np.ones(d, dtype=complex)])
    M = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0
    return M, rhs


def steady_state(L: Liouvillian) -> DensityMatrix:
    """Unique null state of the Liouvillian, normalized to unit trace.

    Raises SteadyStateError when the constrained system is singular (degenerate
    null space) or when the residual ||L rho|| exceeds RESIDUAL_REL_TOL * ||L||.
    """
    d = L.dims.total
    M, rhs = _trace_constrained_system(L)
    try:
        lu = splu(M, permc_spec="COLAMD")
        x = lu.solve(rhs)
    except RuntimeError as exc:  # SuperLU signals singularity this way
        raise SteadyStateError(
            f"non-unique steady state: constrained solve failed ({exc})") from exc
    if not np.all(np.isfinite(x)):
        raise SteadyStateError("non-unique steady state: solution is not finite")
    rho = x.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if abs(tr) < 1e-12:
        raise SteadyStateError("steady-state solve returned a traceless matrix")
    rho /= tr
    lnorm = sp.linalg.norm(L.super)
    residual = float(np.linalg.norm(L.super @ rho.flatten(order="F")))
    if lnorm > 0 and residual > RESIDUAL_REL_TOL * lnorm:
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} exceeds "
            f"{RESIDUAL_REL_TOL:.0e} * ||L|| = {RESIDUAL_REL_TOL * lnorm:.3e}")
    return DensityMatrix(L.dims, rho)


def evolve(L: Liouvillian, rho0: DensityMatrix, times: Sequence[float],
           rtol: float = 1e-8, atol: float = 1e-12) -> list[DensityMatrix]:
    """Propagate rho0 through the master equation, sampled at the given times.

    Uses an adaptive embedded Runge-Kutta 4(5) integrator on the vectorized
    state. The trace must stay within 1e-8 of unity at every sample.
    """
    if rho0.dims != L.dims:
        raise DimensionError(f"state dims {rho0.dims} do not match {L.dims}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty strictly increasing sequence")
    d = L.dims.total
    y0 = rho0.mat.flatten(order="F")
    mat = L.super

    def rhs(_t, y):
        return mat @ y

    t0 = 0.0 if times[0] > 0 else float(times[0])
    sol = solve_ivp(rhs, (t0, float(times[-1])), y0, t_eval=times,
                    method="RK45", rtol=rtol, atol=atol)
    if not sol.success:
        raise SolverError(f"time integration failed: {sol.message}")
    out = []
    for k in range(sol.y.shape[1]):
        rho = sol.y[:, k].reshape((d, d), order="F")
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > 1e-8:
            raise SolverError(
                f"trace drifted to {tr} at t={times[k]}; tighten tolerances")
        out.append(DensityMatrix(L.dims, rho))
    return out


def expect(op: Operator, rho: DensityMatrix) -> complex:
    """tr(op rho); real up to ~1e-10 for Hermitian op on a physical state."""
    if op.dims != rho.dims:
        raise DimensionError(f"dims mismatch: {op.dims} vs {rho.dims}")
    # tr(A B) = sum_ij A_ij B_ji without forming the product
    return complex(op.mat.multiply(rho.mat.T).sum())


@dataclass
class ConvergenceReport:
    """Result of recomputing an observable with doubled Fock cutoffs."""

    label: str
    base_dims: SpaceDims
    doubled_dims: SpaceDims
    base_value: float
    doubled_value: float
    rel_change: float
    passed: bool
    tolerance: float


def convergence_check(p: SystemParams, observable: Callable[[SystemParams], float],
                      label: str = "observable", tolerance: float = 1e-3) -> ConvergenceReport:
    """Certify a cutoff choice by doubling both Fock cutoffs and recomputing.

    `observable` maps SystemParams to a scalar. Passes when the relative change
    between the base and doubled cutoffs stays below `tolerance`.
    """
    base = float(observable(p))
    doubled_dims = SpaceDims(p.dims.n_atom, 2 * p.dims.n_photon, 2 * p.dims.n_phonon)
    doubled = float(observable(p.replace(dims=doubled_dims)))
    denom = max(abs(base), abs(doubled), 1e-300)
    rel = abs(doubled - base) / denom
    return ConvergenceReport(label, p.dims, doubled_dims, base, doubled,
                             rel, rel < tolerance, tolerance)
