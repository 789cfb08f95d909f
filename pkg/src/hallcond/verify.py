"""Aggregated property suite: the algebraic identities on a small cluster.

Used by the command-line ``verify-algebra`` experiment and mirrored by the
test suite.  Every check returns its worst residual so reports stay
quantitative; the pass thresholds are the package-wide acceptance values.
"""

from __future__ import annotations

import numpy as np

from .fock import (FockSpace, Parity, conditional_expectation, identity,
                   local_norm, number, random_local, total_number, tracial_state)
from .interactions import builtin, commutator_interaction, liouvillian
from .lattice import Lattice, Region
from .models import build_interaction, interacting_cluster
from .odmap import many_body_context, od_interaction, od_observable
from .spectral import ground_state, verify_gap_inequality
from .weightfn import build_weight


def _random_regions(lat, rng, max_sites=2):
    sites = lat.sites()
    n = rng.integers(1, max_sites + 1)
    picks = rng.choice(len(sites), size=n, replace=False)
    return Region([sites[i] for i in picks])


def check_conditional_expectation(space: FockSpace, rng, n_random: int = 20) -> dict:
    """Unitality, positivity, module property, composition, gauge
    preservation and contraction, all of which must hold to near machine
    precision."""
    lat = space.lat
    checks = {}
    worst = {k: 0.0 for k in ("unital", "positive", "module", "composition",
                              "gauge", "contraction")}
    for _ in range(n_random):
        M = _random_regions(lat, rng, max_sites=2)
        A = random_local(space, lat.all_sites(), rng)
        E = conditional_expectation(M, A)
        one = identity(space)
        worst["unital"] = max(worst["unital"],
                              (conditional_expectation(M, one) - one).norm())
        pos = A.dagger() @ A
        Epos = conditional_expectation(M, pos).dense_matrix()
        ev = np.linalg.eigvalsh(0.5 * (Epos + Epos.conj().T))
        worst["positive"] = max(worst["positive"], max(0.0, -float(ev.min())))
        B = random_local(space, M, rng)
        C = random_local(space, M, rng)
        lhs = conditional_expectation(M, B @ A @ C)
        rhs = B @ conditional_expectation(M, A) @ C
        worst["module"] = max(worst["module"], (lhs - rhs).norm())
        M2 = _random_regions(lat, rng, max_sites=2)
        lhs = conditional_expectation(M, conditional_expectation(M2, A))
        rhs = conditional_expectation(M.intersection(M2), A)
        worst["composition"] = max(worst["composition"], (lhs - rhs).norm())
        N = total_number(space)
        comm = conditional_expectation(M, A).commutator(N)
        worst["gauge"] = max(worst["gauge"], comm.norm())
        worst["contraction"] = max(worst["contraction"],
                                   conditional_expectation(M, A).norm() - A.norm())
    for key, val in worst.items():
        checks[key] = {"residual": float(val), "passed": bool(val <= 1e-12)}
    checks["passed"] = all(c["passed"] for c in checks.values() if isinstance(c, dict))
    return checks


def check_disjoint_commutation(space: FockSpace, rng, n_random: int = 20) -> dict:
    lat = space.lat
    worst = 0.0
    for _ in range(n_random):
        sites = lat.sites()
        k = rng.integers(1, 3)
        picks = rng.choice(len(sites), size=min(2 * k, len(sites)), replace=False)
        M1 = Region([sites[i] for i in picks[:k]])
        M2 = Region([sites[i] for i in picks[k:]])
        A = random_local(space, M1, rng, gauge_invariant=True)
        B = random_local(space, M2, rng, gauge_invariant=False, hermitian=False)
        worst = max(worst, A.commutator(B).norm())
    return {"residual": float(worst), "passed": bool(worst == 0.0)}


def check_commutator_bound(space: FockSpace, rng, n_instances: int = 200) -> dict:
    """Quasi-local norm bound for commutators over (nu, m) in {0,1,2}^2."""
    lat = space.lat
    worst_margin = np.inf
    violations = 0
    sites = lat.sites()
    combos = [(nu, m) for nu in range(3) for m in range(3)]
    per_combo = max(1, n_instances // len(combos))
    count = 0
    def _support_near(z):
        if rng.integers(2):
            return Region([z])
        nbrs = [s for s in sites if max(abs(s[0] - z[0]), abs(s[1] - z[1])) == 1]
        if not nbrs:
            return Region([z])
        return Region([z, nbrs[rng.integers(len(nbrs))]])

    for nu, m in combos:
        for _ in range(per_combo):
            x = sites[rng.integers(len(sites))]
            y = sites[rng.integers(len(sites))]
            A = random_local(space, _support_near(y), rng)
            B = random_local(space, _support_near(x), rng)
            lhs = local_norm(A.commutator(B), nu, x)
            dist = max(abs(x[0] - y[0]), abs(x[1] - y[1]))
            rhs = 4.0 ** (nu + m + 3) * local_norm(A, nu + m, y) * \
                local_norm(B, nu + m, x) / (1.0 + dist) ** m
            margin = rhs - lhs
            worst_margin = min(worst_margin, margin)
            if margin < -1e-10:
                violations += 1
            count += 1
    return {"instances": count, "min_margin": float(worst_margin),
            "violations": violations, "passed": violations == 0}


def check_liouvillian_resummation(H, rng, n_random: int = 10) -> dict:
    """Termwise and center-rule sum representations of the derivation."""
    space = H.space
    lat = space.lat
    locals_ = H.local_terms()
    worst_i = 0.0
    worst_ii = 0.0
    lam = builtin("LAMBDA", space, 1)
    comm = commutator_interaction(H, lam)
    half = [s for s in lat.sites() if s[0] >= 0]
    for _ in range(n_random):
        A = random_local(space, _random_regions(lat, rng), rng)
        direct = liouvillian(H, A)
        by_centers = None
        for x, op in locals_.items():
            term = op.commutator(A)
            by_centers = term if by_centers is None else by_centers + term
        worst_i = max(worst_i, (direct - by_centers).norm())
        lhs = liouvillian(comm, A)
        rhs = None
        for x in half:
            inner = liouvillian(H, number(space, x)) * 1j
            term = inner.commutator(A)
            rhs = term if rhs is None else rhs + term
        worst_ii = max(worst_ii, (lhs - rhs).norm())
    return {"residual_termwise": float(worst_i), "residual_halfplane": float(worst_ii),
            "passed": bool(worst_i <= 1e-12 and worst_ii <= 1e-10)}


def check_gap_inequality(H, rng, n_samples: int = 30) -> dict:
    gs = ground_state(H)
    space = H.space
    samples = [random_local(space, _random_regions(space.lat, rng), rng,
                            gauge_invariant=bool(rng.integers(2)),
                            hermitian=False)
               for _ in range(n_samples)]
    rep = verify_gap_inequality(gs, H, samples)
    return {"min_slack": rep["min_slack"], "passed": rep["passed"]}


def check_od_properties(H, W=None, rng=None) -> dict:
    """Off-diagonal property, diagonal remainder, Liouvillian equality and
    shell closure, spectral path."""
    rng = rng or np.random.default_rng(0)
    gs = ground_state(H)
    if W is None:
        diam = float(gs.eig.energies[-1] - gs.eig.energies[0])
        W = build_weight(gs.gap, ds=min(0.002 / diam, 0.04 / gs.gap))
    ctx = many_body_context(H, gs, W)
    space = H.space
    lat = space.lat
    worst = {"od_property": 0.0, "diagonal_remainder": 0.0,
             "liouville_equality": 0.0, "shell_closure": 0.0,
             "quad_vs_spectral": 0.0}
    lam1 = builtin("LAMBDA", space, 1)
    for _ in range(6):
        A = random_local(space, _random_regions(lat, rng), rng)
        B = random_local(space, _random_regions(lat, rng), rng)
        Aod = od_observable(ctx, A)
        worst["od_property"] = max(
            worst["od_property"],
            abs(ctx.expectation(A.commutator(B)) - ctx.expectation(Aod.commutator(B))))
        Adi = A - Aod
        worst["diagonal_remainder"] = max(
            worst["diagonal_remainder"],
            abs(ctx.expectation(A) - ctx.expectation(Adi)),
            abs(ctx.expectation(Adi.commutator(B))))
        Aq = od_observable(ctx, A, method="quadrature")
        worst["quad_vs_spectral"] = max(worst["quad_vs_spectral"], (Aq - Aod).norm())
    od_lam, pieces = od_interaction(ctx, lam1)
    tot_terms = od_lam.total().dense_matrix()
    tot_pieces = sum(p.dense_matrix() for p in pieces.values())
    worst["shell_closure"] = float(np.max(np.abs(tot_terms - tot_pieces)))
    for _ in range(4):
        A = random_local(space, _random_regions(lat, rng), rng)
        lhs = ctx.expectation(liouvillian(lam1, A))
        rhs = ctx.expectation(liouvillian(od_lam, A))
        worst["liouville_equality"] = max(worst["liouville_equality"], abs(lhs - rhs))
    out = {k: {"residual": float(v)} for k, v in worst.items()}
    out["od_property"]["passed"] = worst["od_property"] <= 1e-12
    out["diagonal_remainder"]["passed"] = worst["diagonal_remainder"] <= 1e-12
    out["liouville_equality"]["passed"] = worst["liouville_equality"] <= 1e-12
    out["shell_closure"]["passed"] = worst["shell_closure"] <= 1e-12
    out["quad_vs_spectral"]["passed"] = worst["quad_vs_spectral"] <= 1e-6
    out["passed"] = all(v["passed"] for v in out.values() if isinstance(v, dict))
    return out


def run_suite(L1: int = 2, L2: int = 3, t: float = 1.0, V: float = 0.6,
              mu: float = 0.4, seed: int = 0) -> dict:
    """All lemma-level checks on one interacting cluster; the report maps
    identity -> status."""
    lat = Lattice(L1, L2, origin=(L1 // 2, L2 // 2))
    space = FockSpace(lat)
    rng = np.random.default_rng(seed)
    H = build_interaction(interacting_cluster(t=t, V=V, mu=mu, seed=seed), lat)
    report = {
        "conditional_expectation": check_conditional_expectation(space, rng),
        "disjoint_commutation": check_disjoint_commutation(space, rng),
        "commutator_bound": check_commutator_bound(space, rng, n_instances=72),
        "liouvillian_resummation": check_liouvillian_resummation(H, rng),
        "gap_inequality": check_gap_inequality(H, rng),
        "tracial_state": {
            "residual": abs(tracial_state(number(space, (0, 0))) - space.lat.n_orb / 2.0),
            "passed": bool(abs(tracial_state(number(space, (0, 0)))
                               - space.lat.n_orb / 2.0) <= 1e-12)},
        "od_properties": check_od_properties(H, rng=rng),
    }
    report["passed"] = all(sec["passed"] for sec in report.values()
                           if isinstance(sec, dict))
    return report
