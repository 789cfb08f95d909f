import math

import numpy as np
import pytest
from scipy.integrate import quad

from hallcond import fock as fk
from hallcond import models as md
from hallcond import neass as ne
from hallcond.interactions import builtin
from hallcond.lattice import Lattice, Region
from hallcond.spectral import fermi_sea, ground_state


def test_switching_invariants():
    f = ne.NE_SWITCH
    assert float(f(0.0)) == 0.0
    assert float(f(1.0)) == 1.0
    assert float(f(-0.5)) == 0.0
    assert float(f(1.5)) == 1.0
    g = ne.CP_SWITCH
    assert float(g(0.0)) == 0.0
    assert float(g(1.0)) == 0.0
    integral, _ = quad(lambda u: float(g(u)), 0.0, 1.0)
    assert integral == pytest.approx(1.0, abs=1e-10)


def test_perturbed_state_eps_zero(cluster6):
    lat, H, gs, W, ctx = cluster6
    again = ne.perturbed_state(H, 0.0)
    assert again.energy == pytest.approx(gs.energy)
    assert abs(abs(np.vdot(again.vector, gs.vector)) - 1.0) < 1e-12


def test_atomic_state_rigid_for_small_eps():
    lat = Lattice(3, 3, origin=(1, 1))
    H = md.build_interaction(md.atomic(), lat)
    gs0 = ground_state(H)
    gse = ne.perturbed_state(H, 0.3)   # below the level spacing
    assert abs(abs(np.vdot(gse.vector, gs0.vector)) - 1.0) < 1e-12


def test_perturbed_sea_gap_bound(qwz32):
    lat, h, sea = qwz32
    eps = 0.1
    sea_e = ne.perturbed_sea(h, lat, eps, 0.0)
    # Weyl: levels move by at most eps, and no crossing through mu occurred
    assert sea_e.one_body_gap > 0.0
    assert sea_e.n_filled == sea.n_filled


def test_delta_current_zero_cases(cluster6):
    lat, H, gs, W, ctx = cluster6
    dc = ne.delta_current_mb(gs, gs, H, R=1)
    assert dc.value == 0.0
    lat_a = Lattice(3, 3, origin=(1, 1))
    Ha = md.build_interaction(md.atomic(), lat_a)
    g0 = ground_state(Ha)
    ge = ne.perturbed_state(Ha, 0.2)
    dca = ne.delta_current_mb(ge, g0, Ha, R=1)
    assert abs(dca.value) < 1e-12


def test_scan_epsilon_zero_exact(cluster6):
    lat, H, gs, W, ctx = cluster6
    scan = ne.linear_response_scan_mb(H, [0.0, 0.05], R=1)
    assert scan.delta_j[0] == 0.0


def test_scan_atomic_floor():
    lat = Lattice(3, 3, origin=(1, 1))
    h = md.build_one_body(md.atomic(), lat)
    scan = ne.linear_response_scan_free(h, lat, [0.05, 0.1], R=1)
    assert scan.slope == pytest.approx(0.0, abs=1e-13)
    assert math.isinf(scan.residual_exponent)


def test_adiabatic_stationary_at_eps_zero(cluster6):
    lat, H, gs, W, ctx = cluster6
    out = ne.adiabatic_evolve(H, 0.0, 0.2)
    assert out["energy_drift"] <= 1e-9
    assert ne.state_fidelity(out["psi"], gs.vector) >= 1.0 - 1e-10


def test_adiabatic_reaches_perturbed_ground_state(cluster6):
    lat, H, gs, W, ctx = cluster6
    eps, eta = 0.05, 0.05
    out = ne.adiabatic_evolve(H, eps, eta)
    gse = ne.perturbed_state(H, eps)
    infid = 1.0 - ne.state_fidelity(out["psi"], gse.vector)
    assert infid <= 10.0 * eta ** 2


def test_heisenberg_current_identity(cluster6):
    """d/dt of the half-plane charge equals the instantaneous current."""
    lat, H, gs, W, ctx = cluster6
    from hallcond.interactions import commutator_interaction
    lam2 = builtin("LAMBDA", H.space, 2)
    q = lam2.total().dense_matrix()
    eps, eta = 0.08, 0.2
    # current of the instantaneous Hamiltonian: i[H, Lambda_2] (the driving
    # term commutes with Lambda_2, both are diagonal)
    j_op = commutator_interaction(H, lam2).total().dense_matrix()
    out = ne.adiabatic_evolve(H, eps, eta, observables={"Q": q, "J": j_op},
                              tol=1e-11)
    ts = np.array(out["samples"]["t"])
    qs = np.array(out["samples"]["Q"]).real
    js = np.array(out["samples"]["J"]).real
    dq = np.gradient(qs, ts)
    interior = slice(2, -2)
    assert np.max(np.abs(dq[interior] - js[interior])) < 5e-3 * max(1.0, np.max(np.abs(js)))


def test_pump_zero_cases(cluster8):
    lat, H, gs, W, ctx = cluster8
    assert ne.charge_pump(H, 0.0, R=1)["delta_q"] == 0.0


def test_neass_residual_cases(cluster6):
    lat, H, gs, W, ctx = cluster6
    eps = 0.05
    gse = ne.perturbed_state(H, eps)
    Heps = H + builtin("LAMBDA", H.space, 1).scaled(eps)
    rng = np.random.default_rng(5)
    samples = [fk.random_local(H.space, Region([(0, 0)]), rng),
               fk.random_local(H.space, Region([(0, 0), (0, 1)]), rng)]
    assert ne.neass_residual(gse.vector, Heps, samples) <= 1e-9
    rng2 = np.random.default_rng(9)
    rand = rng2.normal(size=H.space.dim) + 1j * rng2.normal(size=H.space.dim)
    rand /= np.linalg.norm(rand)
    assert ne.neass_residual(rand, Heps, samples) > 1e-3   # negative control
