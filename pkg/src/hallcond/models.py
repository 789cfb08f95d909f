"""Concrete lattice models, as one-body matrices and as interactions.

Every quadratic model is described once by cell data (on-site block plus a
finite list of hopping blocks between cells); the same data feeds the
real-space builder and the Bloch matrix used by the Chern oracle, so the two
can be cross-checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, SizeError
from .fock import FockSpace, creation, number
from .interactions import Interaction
from .lattice import Boundary, Lattice, Region

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

FOCK_DIM_CAP = 2 ** 16


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of a concrete model; the gap is always verified downstream."""

    kind: str
    u: float = 1.0                     # qwz mass
    t1: float = 1.0                    # haldane / cluster hopping
    t2: float = 0.2                    # haldane next-nearest hopping
    phi: float = np.pi / 2             # haldane flux phase
    m: float = 0.0                     # haldane sublattice mass
    flux: tuple = (1, 3)               # hofstadter flux p/q
    t: float = 1.0                     # cluster hopping
    V: float = 0.0                     # cluster nearest-neighbor repulsion
    mu: float = 0.0                    # cluster chemical potential
    disorder_strength: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("atomic", "qwz", "haldane", "hofstadter",
                             "interacting_cluster"):
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.disorder_strength < 0:
            raise ModelError("disorder strength must be >= 0")

    @property
    def n_orb(self) -> int:
        return 2 if self.kind in ("qwz", "haldane") else 1

    def nominally_gapped(self) -> bool:
        """Documented gapped parameter ranges (informational only)."""
        if self.kind == "atomic":
            return True
        if self.kind == "qwz":
            return min(abs(self.u), abs(abs(self.u) - 2.0)) > 1e-3
        if self.kind == "haldane":
            return abs(abs(self.m) - 3.0 * np.sqrt(3.0) * abs(self.t2 * np.sin(self.phi))) > 1e-3
        return True


def atomic(disorder: float = 0.0, seed: int = 0) -> ModelSpec:
    return ModelSpec("atomic", disorder_strength=disorder, rng_seed=seed)


def qwz(u: float = 1.0, disorder: float = 0.0, seed: int = 0) -> ModelSpec:
    return ModelSpec("qwz", u=u, disorder_strength=disorder, rng_seed=seed)


def haldane(t1=1.0, t2=0.2, phi=np.pi / 2, m=0.0, disorder=0.0, seed=0) -> ModelSpec:
    return ModelSpec("haldane", t1=t1, t2=t2, phi=phi, m=m,
                     disorder_strength=disorder, rng_seed=seed)


def hofstadter(p: int = 1, q: int = 3, t: float = 1.0, seed: int = 0) -> ModelSpec:
    return ModelSpec("hofstadter", flux=(p, q), t=t, rng_seed=seed)


def interacting_cluster(t=1.0, V=0.0, mu=0.0, disorder=0.0, seed=0) -> ModelSpec:
    return ModelSpec("interacting_cluster", t=t, V=V, mu=mu,
                     disorder_strength=disorder, rng_seed=seed)


# -- hopping data -------------------------------------------------------------

def _qwz_hops(spec):
    onsite = spec.u * SZ
    hops = [((1, 0), 0.5 * (1j * SX - SZ)), ((0, 1), 0.5 * (1j * SY - SZ))]
    return onsite, hops


def _haldane_hops(spec):
    t1, t2, phi, m = spec.t1, spec.t2, spec.phi, spec.m
    A, B = 0, 1
    onsite = np.array([[m, t1], [t1, -m]], dtype=complex)
    chiral = [(1, 0), (-1, 1), (0, -1)]

    def block(d):
        M = np.zeros((2, 2), dtype=complex)
        # nearest neighbors: A in cell n bonds to B in cells n-e1 and n-e2
        if d == (-1, 0) or d == (0, -1):
            M[B, A] += t1
        if d in chiral:
            M[A, A] += t2 * np.exp(1j * phi)
            M[B, B] += t2 * np.exp(-1j * phi)
        if tuple(-x for x in d) in chiral:
            M[A, A] += t2 * np.exp(-1j * phi)
            M[B, B] += t2 * np.exp(1j * phi)
        return M

    ds = sorted({d for d in
                 [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, 1), (1, -1)]})
    hops = []
    seen = set()
    for d in ds:
        if d in seen or tuple(-x for x in d) in seen:
            continue
        seen.add(d)
        M = block(d)
        if np.any(M):
            hops.append((d, M))
    return onsite, hops


def build_one_body(spec: ModelSpec, lat: Lattice) -> np.ndarray:
    """Hermitian one-body matrix of a quadratic model on the lattice window."""
    if spec.kind == "interacting_cluster" and spec.V != 0.0:
        raise ModelError("interacting cluster has no one-body matrix")
    if spec.kind in ("qwz", "haldane") and lat.n_orb != 2:
        raise ModelError(f"{spec.kind} requires n_orb=2, lattice has {lat.n_orb}")
    if spec.kind in ("atomic", "hofstadter", "interacting_cluster") and lat.n_orb != 1:
        raise ModelError(f"{spec.kind} requires n_orb=1, lattice has {lat.n_orb}")

    n = lat.n_modes
    h = np.zeros((n, n), dtype=complex)

    def add_hop(x, d, M):
        y = (x[0] + d[0], x[1] + d[1])
        if not lat.contains(y):
            return
        y = lat.wrap(y)
        for a in range(lat.n_orb):
            for b in range(lat.n_orb):
                if M[a, b] != 0.0:
                    i = lat.mode_index(y, a)
                    j = lat.mode_index(x, b)
                    h[i, j] += M[a, b]
                    h[j, i] += np.conj(M[a, b])

    if spec.kind == "qwz":
        onsite, hops = _qwz_hops(spec)
    elif spec.kind == "haldane":
        onsite, hops = _haldane_hops(spec)
    elif spec.kind == "atomic":
        onsite, hops = None, []
    elif spec.kind == "hofstadter":
        onsite, hops = np.zeros((1, 1)), []
    else:  # free cluster
        onsite = np.array([[-spec.mu]], dtype=complex)
        hops = [((1, 0), np.array([[-spec.t]], dtype=complex)),
                ((0, 1), np.array([[-spec.t]], dtype=complex))]

    for x in lat.sites():
        if spec.kind == "atomic":
            eps = 1.0 if x[0] % 2 == 0 else -1.0
            h[lat.mode_index(x), lat.mode_index(x)] += eps
        elif onsite is not None:
            for a in range(lat.n_orb):
                for b in range(lat.n_orb):
                    if onsite[a, b] != 0.0:
                        h[lat.mode_index(x, a), lat.mode_index(x, b)] += onsite[a, b]
        for d, M in hops:
            add_hop(x, d, M)
        if spec.kind == "hofstadter":
            p, q = spec.flux
            alpha = p / q
            w1 = x[0] + lat.origin[0]
            add_hop(x, (1, 0), np.array([[-spec.t]], dtype=complex))
            add_hop(x, (0, 1),
                    np.array([[-spec.t * np.exp(2j * np.pi * alpha * w1)]]))

    if spec.disorder_strength > 0.0:
        rng = np.random.default_rng(spec.rng_seed)
        w = spec.disorder_strength
        for x in lat.sites():
            eps = rng.uniform(-w, w)
            for a in range(lat.n_orb):
                i = lat.mode_index(x, a)
                h[i, i] += eps

    if np.max(np.abs(h - h.conj().T)) > 1e-12:
        raise ModelError("assembled one-body matrix is not hermitian")
    return h


def bloch_hamiltonian(spec: ModelSpec, k1: float, k2: float) -> np.ndarray:
    """Bloch matrix over the (magnetic) unit cell at momentum (k1, k2)."""
    if spec.disorder_strength > 0.0:
        raise ModelError("disordered models are not translation invariant")
    if spec.kind == "qwz":
        onsite, hops = _qwz_hops(spec)
    elif spec.kind == "haldane":
        onsite, hops = _haldane_hops(spec)
    elif spec.kind == "atomic":
        return np.diag([1.0, -1.0]).astype(complex)  # two-column cell
    elif spec.kind == "hofstadter":
        return _harper(spec, k1, k2)
    else:
        onsite = np.array([[-spec.mu]], dtype=complex)
        hops = [((1, 0), np.array([[-spec.t]], dtype=complex)),
                ((0, 1), np.array([[-spec.t]], dtype=complex))]
    H = onsite.astype(complex).copy()
    for d, M in hops:
        phase = np.exp(-1j * (k1 * d[0] + k2 * d[1]))
        H = H + phase * M + np.conj(phase) * M.conj().T
    return H


def _harper(spec, k1, k2):
    p, q = spec.flux
    alpha = p / q
    t = spec.t
    H = np.zeros((q, q), dtype=complex)
    for j in range(q):
        H[j, j] = -2.0 * t * np.cos(k2 + 2.0 * np.pi * alpha * j)
    for j in range(q - 1):
        H[j + 1, j] += -t
        H[j, j + 1] += -t
    # k1 is conjugate to the magnetic-cell index (q sites wide)
    H[0, q - 1] += -t * np.exp(-1j * k1)
    H[q - 1, 0] += -t * np.exp(1j * k1)
    return H


def bloch_gap(spec: ModelSpec, mu: float = 0.0, nk: int = 64) -> float:
    """Bulk one-body gap at chemical potential mu from the Bloch spectrum."""
    ks = 2.0 * np.pi * np.arange(nk) / nk
    below, above = -np.inf, np.inf
    for k1 in ks:
        for k2 in ks:
            ev = np.linalg.eigvalsh(bloch_hamiltonian(spec, k1, k2))
            lo = ev[ev < mu]
            hi = ev[ev >= mu]
            if lo.size:
                below = max(below, lo.max())
            if hi.size:
                above = min(above, hi.min())
    if not np.isfinite(below) or not np.isfinite(above) or above - below <= 0:
        from .errors import GaplessError
        raise GaplessError(f"Bloch spectrum of {spec.kind} not gapped at mu={mu}")
    return float(above - below)


# -- second quantization ------------------------------------------------------

def build_interaction(spec: ModelSpec, lat: Lattice) -> Interaction:
    """Interaction form of a model, with terms on singletons and bonds."""
    if 2 ** lat.n_modes > FOCK_DIM_CAP:
        raise SizeError(
            f"Fock dimension 2^{lat.n_modes} exceeds cap 2^16")
    space = FockSpace(lat)
    out = Interaction(space, spec.kind)

    if spec.kind == "interacting_cluster":
        c = {s: creation(space, s) for s in lat.sites()}
        if spec.mu != 0.0:
            for s in lat.sites():
                out.add_term(Region([s]), number(space, s) * (-spec.mu), validate=False)
        for s in lat.sites():
            for d in ((1, 0), (0, 1)):
                y = (s[0] + d[0], s[1] + d[1])
                if not lat.contains(y):
                    continue
                y = lat.wrap(y)
                hop = c[y] @ c[s].dagger()
                bond = (hop + hop.dagger()) * (-spec.t)
                if spec.V != 0.0:
                    bond = bond + (number(space, s) @ number(space, y)) * spec.V
                region = Region([s, y])
                out.add_term(region, bond.with_support(region), validate=False)
        _add_disorder_terms(spec, lat, space, out)
        return out

    h = build_one_body(spec, lat)
    return quadratic_interaction(h, lat, space, name=spec.kind)


def quadratic_interaction(h: np.ndarray, lat: Lattice,
                          space: FockSpace = None, name: str = "dGamma(h)") -> Interaction:
    """Second quantization of a one-body matrix as an interaction.

    Matrix elements are grouped by the (one- or two-site) region they act on;
    each emitted term is self-adjoint and gauge-invariant.
    """
    if space is None:
        space = FockSpace(lat)
    out = Interaction(space, name)
    n_orb = lat.n_orb
    pairs = {}
    for i in range(h.shape[0]):
        si = lat.site_at(i // n_orb)
        for j in range(h.shape[1]):
            if h[i, j] == 0.0:
                continue
            sj = lat.site_at(j // n_orb)
            key = tuple(sorted({si, sj}))
            pairs.setdefault(key, []).append((i, j, h[i, j]))
    cs = {}

    def cr(mode):
        if mode not in cs:
            site = lat.site_at(mode // n_orb)
            cs[mode] = creation(space, site, mode % n_orb)
        return cs[mode]

    for key, elems in sorted(pairs.items()):
        region = Region(list(key))
        acc = None
        for i, j, v in elems:
            t = (cr(i) @ cr(j).dagger()) * v
            acc = t if acc is None else acc + t
        out.add_term(region, acc.with_support(region), validate=False)
    return out


def _add_disorder_terms(spec, lat, space, out):
    if spec.disorder_strength <= 0.0:
        return
    rng = np.random.default_rng(spec.rng_seed)
    w = spec.disorder_strength
    for x in lat.sites():
        eps = rng.uniform(-w, w)
        out.add_term(Region([x]), number(space, x) * eps, validate=False)
