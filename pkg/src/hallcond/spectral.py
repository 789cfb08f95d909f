"""Exact diagonalization: ground states, gaps, Fermi seas, gap inequality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .errors import DegenerateGroundState, GaplessError, NumericalError
from .fock import DENSE_CAP, FockOperator
from .interactions import Interaction, liouvillian

DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    """Full spectrum of a hermitian Fock matrix (dense systems only)."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.size

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ m @ self.vectors

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.vectors @ m @ self.vectors.conj().T


@dataclass(frozen=True)
class GroundState:
    """Nondegenerate lowest eigenpair of an interaction's total matrix."""

    vector: np.ndarray
    energy: float
    gap: float
    hamiltonian_ref: str
    eig: EigenSystem = None

    def expectation(self, A: FockOperator) -> complex:
        v = self.vector
        return complex(v.conj() @ (A.matrix @ v))


@dataclass(frozen=True)
class FermiSea:
    """One-body spectral projection below a chemical potential."""

    projection: np.ndarray
    mu: float
    one_body_gap: float
    energies: np.ndarray = None

    @property
    def n_filled(self) -> int:
        return int(round(np.trace(self.projection).real))


def _total_matrix(H: Interaction):
    m = H.total().matrix
    if sparse.issparse(m) and H.space.dim <= DENSE_CAP:
        m = np.asarray(m.todense())
    return m


def ground_state(H: Interaction, degeneracy_tol: float = DEGENERACY_TOL,
                 keep_spectrum: bool = True) -> GroundState:
    """Lowest eigenpair plus gap; rejects degenerate ground states.

    Dense systems get a full diagonalization (cached in the result, needed by
    the off-diagonal filter); larger systems fall back to a Lanczos solver for
    the two lowest eigenpairs.
    """
    m = _total_matrix(H)
    if sparse.issparse(m):
        d = (m - m.conjugate().transpose()).tocoo()
        if d.nnz and np.max(np.abs(d.data)) > 1e-10:
            raise NumericalError("assembled Hamiltonian is not hermitian")
        vals, vecs = eigsh(m.tocsc(), k=2, which="SA", tol=1e-12)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        eig = None
    else:
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise NumericalError("assembled Hamiltonian is not hermitian")
        vals, vecs = np.linalg.eigh(m)
        eig = EigenSystem(vals, vecs) if keep_spectrum else None
    gap = float(vals[1] - vals[0])
    if gap < degeneracy_tol:
        raise DegenerateGroundState(
            f"E1 - E0 = {gap:.3e} below tolerance {degeneracy_tol:.1e}")
    return GroundState(np.ascontiguousarray(vecs[:, 0]), float(vals[0]), gap,
                       H.name, eig)


def fermi_sea(h: np.ndarray, mu: float = 0.0) -> FermiSea:
    """Spectral projection of a one-body matrix onto eigenvalues below mu."""
    vals, vecs = np.linalg.eigh(h)
    if np.min(np.abs(vals - mu)) < 1e-12:
        raise GaplessError(f"one-body eigenvalue at mu={mu}")
    below = vals < mu
    if not below.any() or below.all():
        raise GaplessError(f"mu={mu} outside the one-body spectrum")
    p = vecs[:, below] @ vecs[:, below].conj().T
    gap = float(vals[~below].min() - vals[below].max())
    return FermiSea(p, mu, gap, vals)


def free_expectation_quadratic(sea: FermiSea, kernel: np.ndarray) -> complex:
    """Expectation of a quadratic observable sum_ij kernel_ij a*_i a_j."""
    return complex(np.sum(sea.projection.T * kernel))


def verify_gap_inequality(gs: GroundState, H: Interaction, samples) -> dict:
    """Check omega(A* L_H A) >= gap * (omega(A*A) - |omega(A)|^2) per sample."""
    rows = []
    min_slack = np.inf
    for A in samples:
        LA = liouvillian(H, A)
        lhs = gs.expectation(A.dagger() @ LA).real
        a2 = gs.expectation(A.dagger() @ A).real
        a1 = gs.expectation(A)
        rhs = gs.gap * (a2 - abs(a1) ** 2)
        slack = lhs - rhs
        min_slack = min(min_slack, slack)
        rows.append({"lhs": lhs, "rhs": rhs, "slack": slack})
    return {
        "gap": gs.gap,
        "n_samples": len(rows),
        "min_slack": float(min_slack if rows else 0.0),
        "passed": bool(min_slack >= -1e-10 if rows else True),
        "samples": rows,
    }


def state_invariance_residual(gs: GroundState, H: Interaction, samples) -> float:
    """max |omega(L_H A)| over samples; zero for exact eigenstates."""
    worst = 0.0
    for A in samples:
        worst = max(worst, abs(gs.expectation(liouvillian(H, A))))
    return worst
