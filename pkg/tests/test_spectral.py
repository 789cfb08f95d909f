import numpy as np
import pytest

from hallcond import fock as fk
from hallcond import models as md
from hallcond.errors import DegenerateGroundState, GaplessError
from hallcond.interactions import Interaction, builtin, liouvillian
from hallcond.lattice import Lattice, Region
from hallcond.spectral import (fermi_sea, free_expectation_quadratic,
                               ground_state, state_invariance_residual,
                               verify_gap_inequality)
from hallcond.verify import check_gap_inequality


def test_atomic_ground_state():
    lat = Lattice(3, 3, origin=(1, 1))
    H = md.build_interaction(md.atomic(), lat)
    gs = ground_state(H)
    # product state over occupied negative-energy sites; the full Fock gap is
    # min |eps| = 1 (adding or removing one particle at the band edge)
    n_neg = sum(1 for s in lat.sites() if s[0] % 2 != 0)
    assert gs.energy == pytest.approx(-n_neg)
    assert gs.gap == pytest.approx(1.0)
    assert gs.expectation(H.total()) == pytest.approx(gs.energy, abs=1e-10)


def test_free_oracle_energy():
    lat = Lattice(2, 3, origin=(1, 1))
    spec = md.interacting_cluster(t=1.0, V=0.0, mu=0.35)
    gs = ground_state(md.build_interaction(spec, lat))
    ev = np.linalg.eigvalsh(md.build_one_body(spec, lat))
    assert gs.energy == pytest.approx(ev[ev < 0].sum(), abs=1e-10)


def test_degenerate_rejected():
    lat = Lattice(2, 2, origin=(1, 1))
    space = fk.FockSpace(lat)
    H = Interaction(space, "flat")
    H.add_term(Region([(0, 0)]), fk.number(space, (0, 0)) * 0.0, validate=False)
    with pytest.raises(DegenerateGroundState):
        ground_state(H)


def test_fermi_sea_examples():
    h = np.diag([-1.0, 1.0]).astype(complex)
    sea = fermi_sea(h, 0.0)
    assert np.allclose(sea.projection, np.diag([1.0, 0.0]))
    assert sea.one_body_gap == pytest.approx(2.0)
    assert sea.n_filled == 1
    with pytest.raises(GaplessError):
        fermi_sea(np.diag([0.0, 1.0]).astype(complex), 0.0)
    # projector structure
    lat = Lattice(6, 6, n_orb=2, origin=(3, 3))
    sea2 = fermi_sea(md.build_one_body(md.qwz(1.0), lat), 0.0)
    p = sea2.projection
    assert np.max(np.abs(p @ p - p)) < 1e-10
    assert np.max(np.abs(p - p.conj().T)) < 1e-12
    assert abs(np.trace(p).real - round(np.trace(p).real)) < 1e-10


def test_open_bulk_gap_matches_bloch_trivial_phase():
    """In the trivial phase no edge states fill the gap, so the open-window
    one-body gap approaches the Bloch gap.  (In the topological phase the
    open spectrum is gap-filled by edge modes, so this oracle comparison is
    made at u = 3.)"""
    spec = md.qwz(3.0)
    lat = Lattice(24, 24, n_orb=2, origin=(12, 12))
    sea = fermi_sea(md.build_one_body(spec, lat), 0.0)
    bloch = md.bloch_gap(spec, 0.0, nk=48)
    assert abs(sea.one_body_gap - bloch) <= 0.2 * bloch


def test_gap_inequality_identity_and_creation():
    lat = Lattice(2, 2, origin=(1, 1))
    H = md.build_interaction(md.interacting_cluster(t=0.0, V=0.0, mu=-1.0), lat)
    gs = ground_state(H)
    space = H.space
    one = fk.identity(space)
    rep = verify_gap_inequality(gs, H, [one])
    assert abs(rep["samples"][0]["lhs"]) < 1e-13
    assert abs(rep["samples"][0]["rhs"]) < 1e-13
    # creation operator on an empty mode: closed form, lhs = eps (1 - n),
    # rhs = g * (1 - n)
    c = fk.creation(space, (0, 0))
    rep2 = verify_gap_inequality(gs, H, [c])
    assert rep2["passed"]


def test_gap_inequality_random_cluster(cluster6):
    lat, H, gs, W, ctx = cluster6
    rng = np.random.default_rng(11)
    rep = check_gap_inequality(H, rng, n_samples=40)
    assert rep["passed"], rep


def test_ground_state_invariance(cluster6):
    lat, H, gs, W, ctx = cluster6
    rng = np.random.default_rng(12)
    samples = [fk.random_local(H.space, Region([s]), rng, hermitian=False)
               for s in lat.sites()]
    assert state_invariance_residual(gs, H, samples) < 1e-10


def test_fermi_sea_ground_state_consistency():
    """Quadratic observables agree between the Fock ED state and the
    one-body projection."""
    lat = Lattice(2, 3, origin=(1, 1))
    spec = md.interacting_cluster(t=0.9, V=0.0, mu=0.25)
    h = md.build_one_body(spec, lat)
    sea = fermi_sea(h, 0.0)
    H = md.build_interaction(spec, lat)
    gs = ground_state(H)
    rng = np.random.default_rng(13)
    kernel = rng.normal(size=h.shape) + 1j * rng.normal(size=h.shape)
    kernel = kernel + kernel.conj().T
    obs = md.quadratic_interaction(kernel, lat, space=H.space).total()
    assert abs(gs.expectation(obs) - free_expectation_quadratic(sea, kernel)) < 1e-9
