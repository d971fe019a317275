"""Composite Hilbert space (atom x photon Fock x phonon Fock) and its operators.

Basis ordering is fixed: the atom index varies slowest, the phonon index
fastest, so the global index of |i_atom, i_ph, i_b> is

    ((i_atom * n_photon) + i_ph) * n_phonon + i_b

Atomic levels for the three-level system are ordered (u, e, g) = (0, 1, 2);
the reduced two-level space keeps (u, e) = (0, 1). All operators are sparse
and immutable after construction, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError

ATOM_LEVELS_3 = ("u", "e", "g")
ATOM_LEVELS_2 = ("u", "e")


@dataclass(frozen=True)
class SpaceDims:
    """Factor sizes of the composite space.

    n_atom   number of atomic levels (2 or 3 for the models here)
    n_photon photon Fock cutoff, states 0 .. n_photon-1
    n_phonon phonon Fock cutoff, states 0 .. n_phonon-1
    """

    n_atom: int
    n_photon: int
    n_phonon: int

    def __post_init__(self):
        for name in ("n_atom", "n_photon", "n_phonon"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.n_atom * self.n_photon * self.n_phonon

    def index(self, i_atom: int, i_photon: int, i_phonon: int) -> int:
        """Global basis index of |i_atom, i_photon, i_phonon>."""
        if not (0 <= i_atom < self.n_atom and 0 <= i_photon < self.n_photon
                and 0 <= i_phonon < self.n_phonon):
            raise DimensionError(
                f"basis labels ({i_atom},{i_photon},{i_phonon}) outside {self}")
        return (i_atom * self.n_photon + i_photon) * self.n_phonon + i_phonon

    def atom_level(self, name: str) -> int:
        levels = ATOM_LEVELS_3 if self.n_atom == 3 else ATOM_LEVELS_2
        if name not in levels[: self.n_atom]:
            raise DimensionError(f"unknown atomic level {name!r} for n_atom={self.n_atom}")
        return levels.index(name)


class Operator:
    """A complex sparse square matrix on the composite space, tagged with dims."""

    __slots__ = ("dims", "mat")

    def __init__(self, dims: SpaceDims, mat):
        mat = sp.csr_matrix(mat, dtype=complex)
        if mat.shape != (dims.total, dims.total):
            raise DimensionError(
                f"matrix shape {mat.shape} does not match dims total {dims.total}")
        self.dims = dims
        self.mat = mat

    def dag(self) -> "Operator":
        return Operator(self.dims, self.mat.conj().T)

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()

    def norm(self) -> float:
        """Frobenius norm of the matrix."""
        return float(sp.linalg.norm(self.mat))

    def _check(self, other: "Operator"):
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other):
        self._check(other)
        return Operator(self.dims, self.mat + other.mat)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.dims, self.mat - other.mat)

    def __neg__(self):
        return Operator(self.dims, -self.mat)

    def __mul__(self, scalar):
        return Operator(self.dims, self.mat * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return Operator(self.dims, self.mat @ other.mat)

    def __repr__(self):
        return f"Operator(dims={self.dims}, nnz={self.mat.nnz})"


def _lowering(n: int) -> sp.csr_matrix:
    """Fock-space lowering operator on n states: a|k> = sqrt(k)|k-1>."""
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)


def tensor_embed(op, slot: str, dims: SpaceDims) -> Operator:
    """Embed a single-factor operator into the full space as 1 x .. x op x .. x 1.

    `op` may be a dense or sparse matrix acting on the factor named by `slot`
    ("atom", "photon" or "phonon"); factor order is fixed (atom, photon, phonon).
    """
    sizes = {"atom": dims.n_atom, "photon": dims.n_photon, "phonon": dims.n_phonon}
    if slot not in sizes:
        raise DimensionError(f"unknown slot {slot!r}")
    op = sp.csr_matrix(op, dtype=complex)
    if op.shape != (sizes[slot], sizes[slot]):
        raise DimensionError(
            f"operator shape {op.shape} does not match {slot} size {sizes[slot]}")
    eye = {name: sp.identity(n, format="csr", dtype=complex) for name, n in sizes.items()}
    factors = [op if name == slot else eye[name] for name in ("atom", "photon", "phonon")]
    full = sp.kron(sp.kron(factors[0], factors[1]), factors[2], format="csr")
    return Operator(dims, full)


class HilbertSpace:
    """Elementary operators on the composite space.

    Exposes the photon mode (a, a_dag), the phonon mode (b, b_dag), atomic
    transition projectors sigma(i, j) = |i><j| and the identity, all embedded
    in the full tensor-product space.
    """

    def __init__(self, dims: SpaceDims):
        self.dims = dims
        self.identity = Operator(dims, sp.identity(dims.total, format="csr", dtype=complex))
        self.a = tensor_embed(_lowering(dims.n_photon), "photon", dims)
        self.a_dag = self.a.dag()
        self.b = tensor_embed(_lowering(dims.n_phonon), "phonon", dims)
        self.b_dag = self.b.dag()
        self._sigma_cache: dict[tuple[int, int], Operator] = {}

    def sigma(self, i, j) -> Operator:
        """Atomic transition operator |i><j|, levels by name ("u","e","g") or index."""
        ii = self.dims.atom_level(i) if isinstance(i, str) else int(i)
        jj = self.dims.atom_level(j) if isinstance(j, str) else int(j)
        n = self.dims.n_atom
        if not (0 <= ii < n and 0 <= jj < n):
            raise DimensionError(f"atomic level ({ii},{jj}) outside n_atom={n}")
        key = (ii, jj)
        if key not in self._sigma_cache:
            m = sp.csr_matrix(
                (np.ones(1, dtype=complex), (np.array([ii]), np.array([jj]))), shape=(n, n))
            self._sigma_cache[key] = tensor_embed(m, "atom", self.dims)
        return self._sigma_cache[key]

    def number_photon(self) -> Operator:
        return self.a_dag @ self.a

    def number_phonon(self) -> Operator:
        return self.b_dag @ self.b

    def basis_vector(self, i_atom, i_photon=0, i_phonon=0) -> np.ndarray:
        """Dense basis ket |i_atom, i_photon, i_phonon> as a length-d array."""
        if isinstance(i_atom, str):
            i_atom = self.dims.atom_level(i_atom)
        v = np.zeros(self.dims.total, dtype=complex)
        v[self.dims.index(i_atom, i_photon, i_phonon)] = 1.0
        return v


def build_space(dims: SpaceDims) -> HilbertSpace:
    """Construct the operator set for the given factor sizes."""
    return HilbertSpace(dims)
