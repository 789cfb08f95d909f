import itertools

import numpy as np
import pytest

from hallcond import fock as fk
from hallcond.errors import SizeError
from hallcond.lattice import Lattice, Region
from hallcond.verify import (check_commutator_bound,
                             check_conditional_expectation,
                             check_disjoint_commutation)


@pytest.fixture(scope="module")
def space():
    return fk.FockSpace(Lattice(2, 3, origin=(1, 1)))


def test_car_relations(space):
    lat = space.lat
    sites = lat.sites()
    a0 = fk.annihilation(space, sites[0])
    c0 = fk.creation(space, sites[0])
    a1 = fk.annihilation(space, sites[3])
    assert (a0 @ c0 + c0 @ a0 - fk.identity(space)).norm() == 0.0
    assert (a0 @ a1 + a1 @ a0).norm() == 0.0
    c1 = fk.creation(space, sites[3])
    assert (a0 @ c1 + c1 @ a0).norm() == 0.0


def test_number_norm():
    lat = Lattice(2, 2, n_orb=2, origin=(1, 1))
    space = fk.FockSpace(lat)
    n = fk.number(space, (0, 0))
    assert n.norm() == pytest.approx(2.0)           # n_orb commuting projections
    assert fk.tracial_state(n) == pytest.approx(1.0)  # n_orb / 2


def test_tracial_examples(space):
    assert fk.tracial_state(fk.identity(space)) == pytest.approx(1.0)
    # one-site occupation average from brute-force enumeration of the
    # one-site Fock basis: mean occupation is n_orb / 2
    n_orb = 3
    states = list(itertools.product([0, 1], repeat=n_orb))
    mean_occ = np.mean([sum(s) for s in states])
    assert mean_occ == pytest.approx(n_orb / 2)
    lat3 = Lattice(1, 2, n_orb=3, origin=(0, 0))
    sp3 = fk.FockSpace(lat3)
    assert fk.tracial_state(fk.number(sp3, (0, 0))) == pytest.approx(mean_occ)
    # cyclicity on random operators
    rng = np.random.default_rng(0)
    A = fk.random_local(space, space.lat.all_sites(), rng, hermitian=False)
    B = fk.random_local(space, space.lat.all_sites(), rng, hermitian=False)
    assert abs(fk.tracial_state(A @ B - B @ A)) < 1e-13


def test_conditional_expectation_fixes_subalgebra(space):
    rng = np.random.default_rng(1)
    M = Region([(0, 0), (0, 1)])
    A = fk.random_local(space, M, rng)
    E = fk.conditional_expectation(M, A)
    assert (E - A).norm() < 1e-12
    assert E.support.issubset(M)


def test_conditional_expectation_empty_region(space):
    rng = np.random.default_rng(2)
    A = fk.random_local(space, space.lat.all_sites(), rng)
    E = fk.conditional_expectation(Region([]), A)
    expect = fk.tracial_state(A)
    resid = np.max(np.abs(E.dense_matrix() - expect * np.eye(space.dim)))
    assert resid < 1e-13


def test_conditional_expectation_number_outside():
    """E_M(n_y) for y outside M, against a brute-force least-squares oracle
    that solves the defining trace property on a two-site space."""
    lat = Lattice(1, 2, origin=(0, 0))
    space = fk.FockSpace(lat)
    y = (0, 1)
    M = Region([(0, 0)])
    ny = fk.number(space, y)
    E = fk.conditional_expectation(M, ny)
    # oracle: expand over the monomial basis {1, a, a*, a* a} of the M mode
    a = fk.annihilation(space, (0, 0))
    c = fk.creation(space, (0, 0))
    basis = [fk.identity(space), a, c, c @ a]
    mats = np.column_stack([b.dense_matrix().ravel() for b in basis])
    coef, *_ = np.linalg.lstsq(mats, ny.dense_matrix().ravel(), rcond=None)
    oracle = (mats @ coef).reshape(space.dim, space.dim)
    assert np.max(np.abs(E.dense_matrix() - oracle)) < 1e-12
    assert np.max(np.abs(E.dense_matrix() - 0.5 * np.eye(space.dim))) < 1e-13


def test_prop_suite(space):
    rng = np.random.default_rng(3)
    rep = check_conditional_expectation(space, rng, n_random=10)
    assert rep["passed"], rep


def test_disjoint_commutation(space):
    rng = np.random.default_rng(4)
    rep = check_disjoint_commutation(space, rng, n_random=15)
    assert rep["passed"] and rep["residual"] == 0.0


def test_commutator_bound_small():
    lat = Lattice(3, 3, origin=(1, 1))
    space = fk.FockSpace(lat)
    rng = np.random.default_rng(5)
    rep = check_commutator_bound(space, rng, n_instances=36)
    assert rep["violations"] == 0


def test_local_norm_examples(space):
    n = fk.number(space, (0, 0))
    for nu in (0, 1, 3):
        assert fk.local_norm(n, nu, (0, 0)) == pytest.approx(space.lat.n_orb)
    one = fk.identity(space)
    assert fk.local_norm(one, 2, (0, 0)) == pytest.approx(1.0)
    rng = np.random.default_rng(6)
    A = fk.random_local(space, Region([(0, 1), (-1, 0)]), rng)
    vals = [fk.local_norm(A, nu, (0, -1)) for nu in range(4)]
    assert all(vals[i + 1] >= vals[i] - 1e-12 for i in range(3))


def test_local_norm_requires_gauge(space):
    rng = np.random.default_rng(7)
    A = fk.random_local(space, Region([(0, 0)]), rng, gauge_invariant=False)
    with pytest.raises(ValueError):
        fk.local_norm(A, 0, (0, 0))


def test_em_cost_guard():
    lat = Lattice(4, 4, origin=(2, 2))
    space = fk.FockSpace(lat)
    rng = np.random.default_rng(8)
    big = lat.box((0, 0), 3)     # 16 sites > 12-mode guard
    A = fk.random_local(space, Region([(0, 0)]), rng)
    with pytest.raises(SizeError):
        fk.conditional_expectation(big, A)


def test_space_cap():
    with pytest.raises(SizeError):
        fk.FockSpace(Lattice(5, 4, origin=(2, 2)))   # 20 modes > 16


def test_support_metadata_propagation(space):
    rng = np.random.default_rng(9)
    A = fk.random_local(space, Region([(0, 0)]), rng)
    B = fk.random_local(space, Region([(0, 1)]), rng)
    C = A @ B
    assert set(C.support.sites) == {(0, 0), (0, 1)}
    assert C.gauge_invariant
    assert (A + B).parity == fk.Parity.EVEN
