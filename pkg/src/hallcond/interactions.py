"""Interactions: maps from finite regions to local self-adjoint operators.

Hamiltonians, the number operator, half-plane switch functions and position
operators are all interactions.  The module provides their norms, the
center-rule resummation into per-site local terms, Liouvillians, and the
termwise commutator of two interactions.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError
from .fock import FockOperator, FockSpace, number, zero
from .lattice import Boundary, Region, center_of


class Interaction:
    """Finite map ``Region -> FockOperator`` with deterministic term order."""

    def __init__(self, space: FockSpace, name: str = ""):
        self.space = space
        self.name = name
        self._terms = {}

    def add_term(self, region: Region, op: FockOperator, validate: bool = True):
        """Add (accumulate) a term on ``region``."""
        if len(region) == 0:
            raise ValueError("interaction terms must have nonempty support")
        if validate:
            if not op.support.issubset(region):
                raise ValueError(f"term support {op.support.sites} not within {region.sites}")
            if not op.is_hermitian(1e-10):
                raise ValueError("interaction terms must be self-adjoint")
            if not op.gauge_invariant:
                raise ValueError("interaction terms must be gauge-invariant")
        key = region.sites
        if key in self._terms:
            self._terms[key] = self._terms[key] + op
        else:
            self._terms[key] = op
        return self

    def terms(self):
        """(Region, FockOperator) pairs sorted lexicographically by region."""
        for key in sorted(self._terms):
            yield Region(key), self._terms[key]

    def term(self, region: Region):
        return self._terms.get(region.sites)

    def __len__(self):
        return len(self._terms)

    def __add__(self, other: "Interaction") -> "Interaction":
        out = Interaction(self.space, f"{self.name}+{other.name}")
        for region, op in self.terms():
            out.add_term(region, op, validate=False)
        for region, op in other.terms():
            out.add_term(region, op, validate=False)
        return out

    def scaled(self, factor: float) -> "Interaction":
        out = Interaction(self.space, f"{factor}*{self.name}")
        for region, op in self.terms():
            out.add_term(region, op * factor, validate=False)
        return out

    def total(self) -> FockOperator:
        """Sum of all terms (well defined on the finite lattice)."""
        acc = zero(self.space)
        for _, op in self.terms():
            acc = acc + op
        return acc

    def local_term(self, x) -> FockOperator:
        """Sum of the terms whose region center is ``x`` (center rule)."""
        acc = zero(self.space)
        for region, op in self.terms():
            if center_of(region) == tuple(x):
                acc = acc + op
        return acc

    def local_terms(self) -> dict:
        """All nonzero local terms keyed by center site."""
        out = {}
        for region, op in self.terms():
            c = center_of(region)
            out[c] = out[c] + op if c in out else op
        return out


# -- built-in interactions ---------------------------------------------------

def builtin(kind: str, space: FockSpace, j: int = None, shift: int = 0) -> Interaction:
    """The interactions N, Lambda_j (half-plane number) and X_j (position).

    All are supported on singletons; coordinates are origin-relative, and the
    half-plane step can be moved with ``shift`` (x_j >= shift).  The
    half-plane and position families require open boundary, since a consistent
    step function does not exist on a torus.
    """
    lat = space.lat
    kind = kind.upper()
    if kind in ("LAMBDA", "X"):
        if j not in (1, 2):
            raise ValueError("axis j must be 1 or 2")
        if lat.boundary is Boundary.TORUS:
            raise GeometryError(f"{kind}_{j} is not defined on a torus")
    out = Interaction(space, kind if j is None else f"{kind}{j}")
    for s in lat.sites():
        n_s = number(space, s)
        if kind == "N":
            out.add_term(Region([s]), n_s, validate=False)
        elif kind == "LAMBDA":
            if s[j - 1] >= shift:
                out.add_term(Region([s]), n_s, validate=False)
        elif kind == "X":
            if s[j - 1] != 0:
                out.add_term(Region([s]), n_s * float(s[j - 1]), validate=False)
        else:
            raise ValueError(f"unknown builtin kind {kind!r}")
    return out


# -- norms --------------------------------------------------------------------

def interaction_norm(phi: Interaction, nu: int) -> float:
    """sup_x sum over terms containing x of (1 + diam(M))^nu ||Phi(M)||."""
    return _norm(phi, lambda d: (1.0 + d) ** nu)


def interaction_norm_exp(phi: Interaction, a: float) -> float:
    """Same with exponential weight exp(a * diam(M))."""
    return _norm(phi, lambda d: float(np.exp(a * d)))


def _norm(phi: Interaction, weight) -> float:
    per_site = {}
    for region, op in phi.terms():
        w = weight(region.diameter()) * op.norm()
        for s in region:
            per_site[s] = per_site.get(s, 0.0) + w
    return max(per_site.values(), default=0.0)


# -- derivations ---------------------------------------------------------------

def liouvillian(phi: Interaction, A: FockOperator) -> FockOperator:
    """Sum over terms of [Phi(M), A].

    Terms whose region is disjoint from the support of a gauge-invariant A are
    skipped; their commutators vanish exactly.
    """
    acc = zero(A.space)
    a_sites = set(A.support.sites)
    for region, op in phi.terms():
        if not (set(region.sites) & a_sites):
            continue  # Phi(M) is gauge-invariant, so disjoint supports commute
        acc = acc + op.commutator(A)
    return acc


def commutator_interaction(phi: Interaction, psi: Interaction) -> Interaction:
    """The interaction i[Phi, Psi] with terms on the unions of supports.

    Pairs accumulating on the same union region may cancel exactly (for
    instance every [n_x, Phi(M)] with x inside M, summed over x); vanished
    accumulated terms are dropped.
    """
    out = Interaction(phi.space, f"i[{phi.name},{psi.name}]")
    for r1, op1 in phi.terms():
        s1 = set(r1.sites)
        for r2, op2 in psi.terms():
            if not (s1 & set(r2.sites)):
                continue  # disjoint gauge-invariant terms commute exactly
            comm = op1.commutator(op2) * 1j
            union = r1.union(r2)
            out.add_term(union, comm.with_support(union), validate=False)
    for key in [k for k, op in out._terms.items() if op.norm() == 0.0]:
        del out._terms[key]
    return out
