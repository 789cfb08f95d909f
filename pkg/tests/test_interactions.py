import numpy as np
import pytest

from hallcond import fock as fk
from hallcond import models as md
from hallcond.errors import GeometryError
from hallcond.interactions import (builtin, commutator_interaction,
                                   interaction_norm, interaction_norm_exp,
                                   liouvillian)
from hallcond.lattice import Boundary, Lattice, Region
from hallcond.verify import check_liouvillian_resummation


@pytest.fixture(scope="module")
def space():
    return fk.FockSpace(Lattice(2, 3, origin=(1, 1)))


def test_builtin_lambda_counts():
    lat = Lattice(4, 4, origin=(2, 2))
    space = fk.FockSpace(lat)
    lam1 = builtin("LAMBDA", space, 1)
    assert len(lam1) == 8
    n = builtin("N", space)
    assert len(n) == 16
    for _, op in n.terms():
        assert op.norm() == pytest.approx(lat.n_orb)


def test_builtin_x_skips_zero_column(space):
    x1 = builtin("X", space, 1)
    for region, op in x1.terms():
        assert region.sites[0][0] != 0


def test_builtin_torus_error():
    lat = Lattice(2, 2, boundary=Boundary.TORUS, origin=(0, 0))
    space = fk.FockSpace(lat)
    with pytest.raises(GeometryError):
        builtin("LAMBDA", space, 1)
    with pytest.raises(GeometryError):
        builtin("X", space, 2)
    builtin("N", space)    # fine on the torus


def test_interaction_norms(space):
    n = builtin("N", space)
    for nu in (0, 1, 4):
        assert interaction_norm(n, nu) == pytest.approx(space.lat.n_orb)
    lam = builtin("LAMBDA", space, 1)
    assert interaction_norm(lam, 2) == pytest.approx(space.lat.n_orb)
    assert interaction_norm_exp(n, 1.0) == pytest.approx(space.lat.n_orb)


def test_hopping_norm_bound():
    # enumerate terms of nearest-neighbor hopping on 3x3: per site at most
    # 4 bonds plus the on-site part
    lat = Lattice(3, 3, origin=(1, 1))
    H = md.build_interaction(md.interacting_cluster(t=0.7, V=0.0, mu=0.2), lat)
    bond_norms = [op.norm() for region, op in H.terms() if len(region) == 2]
    onsite = max(op.norm() for region, op in H.terms() if len(region) == 1)
    assert interaction_norm(H, 0) <= 4 * max(bond_norms) + onsite + 1e-12


def test_local_term_resummation(space):
    H = md.build_interaction(md.interacting_cluster(t=1.0, V=0.5, mu=0.3), space.lat)
    total = H.total().dense_matrix()
    by_center = sum(op.dense_matrix() for op in H.local_terms().values())
    # same finite sum, different grouping: only association-order noise
    assert np.max(np.abs(total - by_center)) < 1e-13
    # a bond on {(0,0),(1,0)} resums at (1,0) per the center tie-break
    bond = H.term(Region([(0, 0), (0, 1)]))
    assert bond is not None


def test_local_term_singleton(space):
    n = builtin("N", space)
    op = n.local_term((0, 0))
    assert (op - fk.number(space, (0, 0))).norm() == 0.0


def test_liouvillian_gauge_kernel(space):
    rng = np.random.default_rng(0)
    n = builtin("N", space)
    A = fk.random_local(space, Region([(0, 0), (0, 1)]), rng)
    assert liouvillian(n, A).norm() < 1e-13
    lam = builtin("LAMBDA", space, 1)
    ny = fk.number(space, (0, 1))
    assert liouvillian(lam, ny).norm() == 0.0


def test_liouvillian_position_formula(space):
    # [X_1, a*_x a_y + a*_y a_x] = (x_1 - y_1)(a*_x a_y - a*_y a_x)
    x, y = (0, 0), (-1, 1)
    cx = fk.creation(space, x)
    cy = fk.creation(space, y)
    hop = cx @ cy.dagger() + cy @ cx.dagger()
    x1 = builtin("X", space, 1)
    lhs = liouvillian(x1, hop)
    rhs = (cx @ cy.dagger() - cy @ cx.dagger()) * float(x[0] - y[0])
    assert (lhs - rhs).norm() < 1e-13


def test_commutator_interaction_identities(space):
    lam1 = builtin("LAMBDA", space, 1)
    lam2 = builtin("LAMBDA", space, 2)
    assert len(commutator_interaction(lam1, lam2)) == 0
    H = md.build_interaction(md.interacting_cluster(t=1.0, V=0.4, mu=0.1), space.lat)
    n = builtin("N", space)
    assert len(commutator_interaction(n, H)) == 0   # termwise gauge invariance


def test_current_interaction_matches_liouvillian():
    lat = Lattice(3, 3, origin=(1, 1))
    space = fk.FockSpace(lat)
    H = md.build_interaction(md.interacting_cluster(t=1.0, V=0.3, mu=0.2), lat)
    lam2 = builtin("LAMBDA", space, 2)
    J = commutator_interaction(H, lam2)
    # total of i[H, Lambda_2] equals i L_H applied to the summed switch
    direct = liouvillian(H, lam2.total().with_support(lat.all_sites())) * 1j
    assert np.max(np.abs(J.total().dense_matrix() - direct.dense_matrix())) < 1e-12
    for region, op in J.terms():
        assert op.is_hermitian(1e-10)


def test_lemma_resummation_suite(space):
    H = md.build_interaction(md.interacting_cluster(t=1.0, V=0.6, mu=0.4), space.lat)
    rng = np.random.default_rng(1)
    rep = check_liouvillian_resummation(H, rng, n_random=6)
    assert rep["passed"], rep
