"""Finite CAR algebra on the fermionic Fock space of a lattice window.

Creation and annihilation matrices come from the Jordan-Wigner transformation
in a fixed mode order (row-major site index, then orbital).  The support
metadata carried by :class:`FockOperator` refers to abstract CAR localization,
which is what the trace-compatible conditional expectation and the quasi-local
norms are defined against; gauge-invariant operators with disjoint supports
commute exactly despite the global string.

The conditional expectation onto a region M is evaluated by conjugating with
the fermionic mode-reordering unitary that brings the modes of M to the front,
where the subalgebra becomes a full tensor factor and the expectation reduces
to a normalized partial trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import SizeError
from .lattice import Lattice, Region

DENSE_CAP = 2 ** 12       # matrices at or below this dimension are dense
EM_MODE_GUARD = 12        # cost guard for conditional expectations


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"


@lru_cache(maxsize=8)
def _jw_creation_ops(n_modes: int):
    """Sparse Jordan-Wigner creation matrices for ``n_modes`` modes.

    Mode 0 occupies the most significant qubit; the string of Z factors sits
    on the modes after the target, matching the convention that creation
    operators for lower mode indices are applied first when building basis
    states.
    """
    id2 = sparse.identity(2, format="csr")
    z = sparse.csr_matrix(np.diag([1.0, -1.0]))
    sp = sparse.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))  # |1><0|
    ops = []
    for i in range(n_modes):
        factors = [id2] * n_modes
        factors[i] = sp
        for j in range(i):
            factors[j] = z
        m = sparse.identity(1, format="csr")
        for f in factors:
            m = sparse.kron(m, f, format="csr")
        m = sparse.csr_matrix(m, dtype=complex)
        m.eliminate_zeros()
        ops.append(m)
    return tuple(ops)


def _popcounts(n_modes: int) -> np.ndarray:
    idx = np.arange(2 ** n_modes, dtype=np.uint64)
    return np.array([int(b).bit_count() for b in idx], dtype=np.int64)


@dataclass(frozen=True)
class FockSpace:
    """Fock space over all (site, orbital) modes of a lattice window."""

    lat: Lattice
    max_modes: int = 16

    def __post_init__(self):
        if self.lat.n_modes > self.max_modes:
            raise SizeError(
                f"{self.lat.n_modes} modes exceed the {self.max_modes}-mode cap")

    @property
    def n_modes(self) -> int:
        return self.lat.n_modes

    @property
    def dim(self) -> int:
        return 2 ** self.n_modes

    @property
    def dense(self) -> bool:
        return self.dim <= DENSE_CAP

    def mode_index(self, site, orb=0) -> int:
        return self.lat.mode_index(site, orb)

    def region_modes(self, region: Region) -> list:
        return [self.mode_index(s, o) for s in region for o in range(self.lat.n_orb)]

    def popcounts(self) -> np.ndarray:
        return _popcounts(self.n_modes)

    def _wrap(self, matrix):
        if self.dense and sparse.issparse(matrix):
            return np.asarray(matrix.todense(), dtype=complex)
        return matrix


@dataclass(frozen=True)
class FockOperator:
    """Matrix on Fock space with CAR-localization metadata."""

    space: FockSpace
    matrix: object
    support: Region
    parity: Parity
    gauge_invariant: bool

    def __post_init__(self):
        object.__setattr__(self, "matrix", self.space._wrap(self.matrix))

    # -- arithmetic -------------------------------------------------------

    def _meta_binary(self, other):
        support = self.support.union(other.support)
        parity = self.parity if self.parity == other.parity else Parity.MIXED
        gauge = self.gauge_invariant and other.gauge_invariant
        return support, parity, gauge

    def __add__(self, other):
        support, parity, gauge = self._meta_binary(other)
        return FockOperator(self.space, self.matrix + other.matrix, support, parity, gauge)

    def __sub__(self, other):
        support, parity, gauge = self._meta_binary(other)
        return FockOperator(self.space, self.matrix - other.matrix, support, parity, gauge)

    def __mul__(self, scalar):
        return FockOperator(self.space, self.matrix * scalar, self.support,
                            self.parity, self.gauge_invariant)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __matmul__(self, other):
        support = self.support.union(other.support)
        if Parity.MIXED in (self.parity, other.parity):
            parity = Parity.MIXED
        elif self.parity == other.parity:
            parity = Parity.EVEN
        else:
            parity = Parity.ODD
        gauge = self.gauge_invariant and other.gauge_invariant
        return FockOperator(self.space, self.matrix @ other.matrix, support, parity, gauge)

    def dagger(self):
        m = self.matrix.conj().T.copy() if isinstance(self.matrix, np.ndarray) \
            else self.matrix.conjugate().transpose().tocsr()
        return FockOperator(self.space, m, self.support, self.parity, self.gauge_invariant)

    def commutator(self, other):
        out = self @ other - other @ self
        return out

    def with_support(self, region: Region):
        return FockOperator(self.space, self.matrix, region, self.parity,
                            self.gauge_invariant)

    # -- scalars ----------------------------------------------------------

    def dense_matrix(self) -> np.ndarray:
        if sparse.issparse(self.matrix):
            return np.asarray(self.matrix.todense(), dtype=complex)
        return self.matrix

    def norm(self) -> float:
        """Operator norm (largest singular value)."""
        m = self.matrix
        if sparse.issparse(m):
            if self.space.dim <= DENSE_CAP:
                m = np.asarray(m.todense())
            else:
                from scipy.sparse.linalg import svds
                return float(svds(m, k=1, return_singular_vectors=False)[0])
        if not np.any(m):
            return 0.0
        return float(np.linalg.norm(m, 2))

    def is_hermitian(self, tol=1e-12) -> bool:
        m = self.dense_matrix()
        return bool(np.max(np.abs(m - m.conj().T)) <= tol * max(1.0, np.max(np.abs(m))))


# -- constructors ----------------------------------------------------------

def identity(space: FockSpace) -> FockOperator:
    m = sparse.identity(space.dim, dtype=complex, format="csr")
    return FockOperator(space, m, Region([]), Parity.EVEN, True)


def zero(space: FockSpace) -> FockOperator:
    m = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    return FockOperator(space, m, Region([]), Parity.EVEN, True)


def creation(space: FockSpace, site, orb: int = 0) -> FockOperator:
    mu = space.mode_index(site, orb)
    m = _jw_creation_ops(space.n_modes)[mu]
    return FockOperator(space, m, Region([site]), Parity.ODD, False)


def annihilation(space: FockSpace, site, orb: int = 0) -> FockOperator:
    return creation(space, site, orb).dagger()


def number(space: FockSpace, site) -> FockOperator:
    """Number operator of a site, summed over its orbitals."""
    diag = np.zeros(space.dim)
    idx = np.arange(space.dim, dtype=np.uint64)
    for orb in range(space.lat.n_orb):
        mu = space.mode_index(site, orb)
        pos = space.n_modes - 1 - mu
        diag += ((idx >> np.uint64(pos)) & np.uint64(1)).astype(float)
    m = sparse.diags(diag.astype(complex), format="csr")
    return FockOperator(space, m, Region([site]), Parity.EVEN, True)


def mode_number(space: FockSpace, site, orb: int) -> FockOperator:
    mu = space.mode_index(site, orb)
    pos = space.n_modes - 1 - mu
    idx = np.arange(space.dim, dtype=np.uint64)
    diag = ((idx >> np.uint64(pos)) & np.uint64(1)).astype(complex)
    return FockOperator(space, sparse.diags(diag, format="csr"),
                        Region([site]), Parity.EVEN, True)


def total_number(space: FockSpace) -> FockOperator:
    diag = space.popcounts().astype(complex)
    return FockOperator(space, sparse.diags(diag, format="csr"),
                        space.lat.all_sites(), Parity.EVEN, True)


def random_local(space: FockSpace, region: Region, rng, gauge_invariant=True,
                 hermitian=True) -> FockOperator:
    """Random operator supported in ``region`` (seeded), for property tests."""
    modes = sorted(space.region_modes(region))
    ops = _jw_creation_ops(space.n_modes)
    dim = space.dim
    m = sparse.csr_matrix((dim, dim), dtype=complex)
    if gauge_invariant:
        for mu in modes:
            for nu in modes:
                c = rng.normal() + 1j * rng.normal()
                m = m + c * (ops[mu] @ ops[nu].conj().T)
        for mu in modes:
            for nu in modes:
                if mu < nu:
                    c = rng.normal()
                    m = m + c * (ops[mu] @ ops[mu].conj().T @ ops[nu] @ ops[nu].conj().T)
        parity = Parity.EVEN
    else:
        for mu in modes:
            c = rng.normal() + 1j * rng.normal()
            m = m + c * ops[mu] + np.conj(c) * ops[mu].conj().T
        parity = Parity.MIXED
    if hermitian:
        m = (m + m.conjugate().transpose()) * 0.5
    return FockOperator(space, m, region, parity, gauge_invariant)


# -- states and expectations ------------------------------------------------

def tracial_state(A: FockOperator) -> complex:
    """Normalized matrix trace, the unique tracial state at finite size."""
    m = A.matrix
    tr = m.trace() if sparse.issparse(m) else np.trace(m)
    return complex(tr) / A.space.dim


@lru_cache(maxsize=64)
def _reorder_data(n_modes: int, front_modes: tuple):
    """Signed basis permutation bringing ``front_modes`` to the leading qubits.

    Returns (new_index, sign) arrays over the 2**n_modes basis states.  The
    sign is the parity of the permutation induced on the occupied modes, which
    is exactly the phase picked up when reordering a product of creation
    operators.
    """
    rest = [m for m in range(n_modes) if m not in front_modes]
    order = list(front_modes) + rest         # new position -> old mode
    dim = 2 ** n_modes
    new_index = np.zeros(dim, dtype=np.int64)
    signs = np.zeros(dim, dtype=np.int8)
    for b in range(dim):
        occ_old = [m for m in range(n_modes) if (b >> (n_modes - 1 - m)) & 1]
        nb = 0
        seq = []
        for pos, old_mode in enumerate(order):
            if old_mode in occ_old:
                nb |= 1 << (n_modes - 1 - pos)
                seq.append(old_mode)
        # parity of the permutation sorting `seq` ascending
        perm = sorted(range(len(seq)), key=lambda i: seq[i])
        sign = 1
        visited = [False] * len(seq)
        for i in range(len(seq)):
            if visited[i]:
                continue
            j = i
            cycle = 0
            while not visited[j]:
                visited[j] = True
                j = perm[j]
                cycle += 1
            if cycle % 2 == 0:
                sign = -sign
        new_index[b] = nb
        signs[b] = sign
    return new_index, signs


def reorder_unitary(space: FockSpace, region: Region) -> sparse.csr_matrix:
    """Unitary mapping the fixed mode order to (region modes first, rest after)."""
    front = tuple(sorted(space.region_modes(region)))
    new_index, signs = _reorder_data(space.n_modes, front)
    dim = space.dim
    return sparse.csr_matrix(
        (signs.astype(complex), (new_index, np.arange(dim))), shape=(dim, dim))


def conditional_expectation(region: Region, A: FockOperator,
                            mode_guard: int = EM_MODE_GUARD) -> FockOperator:
    """Trace-compatible projection of A onto the subalgebra of ``region``.

    Uses the defining property against the tracial state; realized as a
    normalized partial trace after the fermionic mode reorder.  The result is
    supported in ``region`` and inherits gauge invariance.
    """
    space = A.space
    if len(region) == 0:
        val = tracial_state(A)
        out = identity(space) * val
        return FockOperator(space, out.matrix, Region([]), Parity.EVEN,
                            A.gauge_invariant)
    m_modes = len(space.region_modes(region))
    if m_modes > mode_guard:
        raise SizeError(
            f"conditional expectation on {m_modes} modes exceeds guard {mode_guard}")
    if m_modes == space.n_modes:
        return A
    R = reorder_unitary(space, region)
    dense = A.dense_matrix()
    rot = (R @ dense) @ R.conj().T.todense()
    rot = np.asarray(rot)
    d1 = 2 ** m_modes
    d2 = space.dim // d1
    blocks = rot.reshape(d1, d2, d1, d2)
    red = np.einsum("ajbj->ab", blocks) / d2
    back = np.kron(red, np.eye(d2, dtype=complex))
    out = np.asarray((R.conj().T @ back) @ R.todense())
    parity = A.parity if A.parity != Parity.MIXED else Parity.MIXED
    return FockOperator(space, out, region, parity, A.gauge_invariant)


def local_norm(A: FockOperator, nu: int, x, mode_guard: int = EM_MODE_GUARD) -> float:
    """Quasi-local norm: ||A|| + max_k ||A - E_{B_k(x)} A|| (1+k)^nu.

    Defined on gauge-invariant operators.  The maximum terminates at the first
    box that covers the support of A, beyond which the terms vanish exactly.
    """
    if not A.gauge_invariant:
        raise ValueError("local norm is defined on gauge-invariant operators")
    lat = A.space.lat
    if len(A.support) == 0:
        return A.norm()
    k_cover = max(max(abs(s[0] - x[0]), abs(s[1] - x[1])) for s in A.support)
    total = A.norm()
    best = 0.0
    for k in range(k_cover):
        box = lat.box(x, k)
        diff = A - conditional_expectation(box, A, mode_guard)
        best = max(best, diff.norm() * (1 + k) ** nu)
    return total + best
