"""Locally generated automorphisms as finite-lattice propagators.

A cocycle of automorphisms generated by a bounded interaction family is
realized by the unitary solving dU/dv = -i G(v) U with G(v) the summed
generator; conjugation A -> U* A U then satisfies the defining derivative
property, and propagators compose as U_{u,w} = U_{v,w} U_{u,v}.  Finite-depth
circuits of local gauge-invariant gates are provided as a strictly local
subclass with exact support control, used by the conductance-invariance test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError
from .fock import FockOperator, FockSpace, Parity, number, random_local
from .interactions import Interaction, interaction_norm
from .lattice import Region
from .neass import _apply_expmh
from .odmap import many_body_context
from .spectral import ground_state
from .weightfn import build_weight


@dataclass(frozen=True)
class LgaSpec:
    """Interaction family v -> Phi^v on [0, 1], with a recorded norm budget."""

    generator: object              # callable v -> Interaction
    space: FockSpace
    norm_budget: dict = None

    def sampled_norm_budget(self, nus=(0, 1, 2), n_samples: int = 5) -> dict:
        out = {}
        for nu in nus:
            out[nu] = max(interaction_norm(self.generator(v), nu)
                          for v in np.linspace(0.0, 1.0, n_samples))
        return out


def build_lga(spec: LgaSpec, u: float, v: float, tol: float = 1e-11,
              dt0: float = 0.05) -> FockOperator:
    """Propagator U_{u,v} of the generator family, as a unitary operator.

    Adaptive fourth-order commutator-free steps; local error controlled by
    step doubling.  The support is the union of the generator supports.
    """
    space = spec.space
    dim = space.dim
    U = np.eye(dim, dtype=complex)
    if v == u:
        return FockOperator(space, U, Region([]), Parity.EVEN, True)

    def g_matrix(t):
        return spec.generator(t).total().dense_matrix()

    sign = 1.0 if v >= u else -1.0
    t = u
    dt = sign * dt0
    total = abs(v - u)
    dt_min = total * 1e-9
    sqrt3 = np.sqrt(3.0)

    def cf4(Ucur, t, dt):
        c1 = t + dt * (0.5 - sqrt3 / 6.0)
        c2 = t + dt * (0.5 + sqrt3 / 6.0)
        g1m = g_matrix(c1)
        g2m = g_matrix(c2)
        a1 = 0.25 - sqrt3 / 6.0
        a2 = 0.25 + sqrt3 / 6.0
        x1 = a1 * g1m + a2 * g2m
        x2 = a2 * g1m + a1 * g2m
        out = _apply_expmh(x2, dt, Ucur)
        return _apply_expmh(x1, dt, out)

    while (v - t) * sign > 1e-14:
        if abs(dt) > abs(v - t):
            dt = v - t
        full = cf4(U, t, dt)
        half = cf4(cf4(U, t, dt / 2.0), t + dt / 2.0, dt / 2.0)
        err = float(np.linalg.norm(full - half, ord="fro")) / np.sqrt(dim)
        if err > tol and abs(dt) > dt_min:
            dt *= 0.5
            continue
        U = half
        t += dt
        if err < tol / 64.0:
            dt *= 2.0
        if abs(dt) < dt_min:
            raise IntegrationError(f"LGA step underflow at v={t}")
    # project accumulated roundoff back onto the unitary group
    w, _, vh = np.linalg.svd(U)
    U = w @ vh
    gauge = all(term.gauge_invariant
                for _, term in spec.generator(u).terms())
    return FockOperator(space, U, space.lat.all_sites(), Parity.EVEN, gauge)


def apply_automorphism(U: FockOperator, A: FockOperator) -> FockOperator:
    """alpha(A) = U* A U."""
    m = U.dense_matrix().conj().T @ A.dense_matrix() @ U.dense_matrix()
    gauge = A.gauge_invariant and U.gauge_invariant
    return FockOperator(A.space, m, U.support.union(A.support), A.parity, gauge)


# -- finite-depth circuits ------------------------------------------------------

def gauge_circuit(space: FockSpace, thetas: dict) -> list:
    """Single layer of on-site gauge rotations exp(i theta_x n_x)."""
    layer = []
    for site, theta in sorted(thetas.items()):
        n = number(space, site)
        vals, vecs = np.linalg.eigh(n.dense_matrix())
        u = vecs @ (np.exp(1j * theta * vals)[:, None] * vecs.conj().T)
        layer.append(FockOperator(space, u, Region([site]), Parity.EVEN, True))
    return [layer]


def random_local_circuit(space: FockSpace, depth: int, rng,
                         strength: float = 0.4) -> list:
    """Brickwork circuit of two-site gauge-invariant gates, ``depth`` layers."""
    lat = space.lat
    layers = []
    bonds = []
    for s in lat.sites():
        for d in ((1, 0), (0, 1)):
            y = (s[0] + d[0], s[1] + d[1])
            if lat.contains(y):
                bonds.append((s, lat.wrap(y)))
    for layer_idx in range(depth):
        used = set()
        layer = []
        order = rng.permutation(len(bonds))
        for b in order:
            s, y = bonds[b]
            if s in used or y in used:
                continue
            used.update((s, y))
            region = Region([s, y])
            gen = random_local(space, region, rng, gauge_invariant=True,
                               hermitian=True)
            vals, vecs = np.linalg.eigh(gen.dense_matrix())
            u = vecs @ (np.exp(-1j * strength * vals)[:, None] * vecs.conj().T)
            layer.append(FockOperator(space, u, region, Parity.EVEN, True))
        layers.append(layer)
    return layers


def circuit_unitary(circuit: list) -> FockOperator:
    """Product of all gates (later layers act last)."""
    space = circuit[0][0].space
    m = np.eye(space.dim, dtype=complex)
    support = Region([])
    gauge = True
    for layer in circuit:
        for gate in layer:
            m = gate.dense_matrix() @ m
            support = support.union(gate.support)
            gauge = gauge and gate.gauge_invariant
    return FockOperator(space, m, support, Parity.EVEN, gauge)


def conjugate_by_circuit(circuit: list, A: FockOperator) -> FockOperator:
    """alpha(A) = U* A U applied gate by gate with exact support tracking.

    Gates whose support is disjoint from the current support commute with the
    operator exactly (everything is gauge-invariant) and are skipped, so the
    resulting support is the true light cone.
    """
    out = A
    for layer in reversed(circuit):
        for gate in reversed(layer):
            if not (set(gate.support.sites) & set(out.support.sites)):
                continue
            u = gate.dense_matrix()
            m = u.conj().T @ out.dense_matrix() @ u
            out = FockOperator(out.space, m, out.support.union(gate.support),
                               out.parity, out.gauge_invariant and gate.gauge_invariant)
    return out


def conjugate_interaction(U, H: Interaction, circuit: list = None) -> Interaction:
    """Termwise conjugated interaction; circuit form keeps terms local."""
    out = Interaction(H.space, f"alpha[{H.name}]")
    for region, op in H.terms():
        if circuit is not None:
            new = conjugate_by_circuit(circuit, op)
        else:
            new = apply_automorphism(U, op)
        out.add_term(new.support if len(new.support) else region, new,
                     validate=False)
    return out


# -- invariance test ---------------------------------------------------------------

def conductance_invariance_test(H: Interaction, W=None, U: FockOperator = None,
                                circuit: list = None, shift=(0, 0),
                                method: str = "spectral") -> dict:
    """Hall conductance of (omega_0, H) against (omega_0 o alpha, alpha(H)).

    The transformed system is diagonalized from scratch and gets its own
    off-diagonal machinery; the report carries both conductances, their
    difference, and the re-verified gap.
    """
    from .conductance import hall_conductance_mb

    gs1 = ground_state(H)
    if W is None:
        W = build_weight(gs1.gap)
    ctx1 = many_body_context(H, gs1, W)
    rep1 = hall_conductance_mb(ctx1, shift=shift, method=method)

    if U is None:
        U = circuit_unitary(circuit)
    H2 = conjugate_interaction(U, H, circuit)
    gs2 = ground_state(H2)
    W2 = W if W.g <= gs2.gap * 1.05 else build_weight(gs2.gap)
    ctx2 = many_body_context(H2, gs2, W2)
    rep2 = hall_conductance_mb(ctx2, shift=shift, method=method)

    return {
        "sigma_original": rep1.extras["double_sum"],
        "sigma_transformed": rep2.extras["double_sum"],
        "difference": abs(rep1.extras["double_sum"] - rep2.extras["double_sum"]),
        "gap_original": gs1.gap,
        "gap_transformed": gs2.gap,
        "reports": (rep1.to_dict(), rep2.to_dict()),
    }
