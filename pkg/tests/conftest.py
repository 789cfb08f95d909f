"""Shared fixtures; the expensive diagonalizations are session-scoped."""

import numpy as np
import pytest

from hallcond import models as md
from hallcond.lattice import Lattice
from hallcond.odmap import many_body_context
from hallcond.spectral import fermi_sea, ground_state
from hallcond.weightfn import build_weight


@pytest.fixture(scope="session")
def qwz32():
    """32x32 open QWZ at u=1, half filling: the quantitative free system."""
    lat = Lattice(32, 32, n_orb=2, origin=(16, 16))
    h = md.build_one_body(md.qwz(1.0), lat)
    sea = fermi_sea(h, 0.0)
    return lat, h, sea


def _cluster_context(L1, L2, t, V, mu, seed):
    lat = Lattice(L1, L2, origin=(L1 // 2, L2 // 2))
    H = md.build_interaction(md.interacting_cluster(t=t, V=V, mu=mu, seed=seed), lat)
    gs = ground_state(H)
    diam = float(gs.eig.energies[-1] - gs.eig.energies[0])
    W = build_weight(gs.gap, ds=min(0.0019 / diam, 0.04 / gs.gap))
    return lat, H, gs, W, many_body_context(H, gs, W)


@pytest.fixture(scope="session")
def cluster6():
    """2x3 interacting cluster (t-V model) with tuned weight grid."""
    return _cluster_context(2, 3, 1.0, 0.6, 0.4, seed=3)


@pytest.fixture(scope="session")
def cluster8():
    """2x4 interacting cluster used for the 8-site spectral-path checks."""
    return _cluster_context(2, 4, 1.0, 0.5, 0.3, seed=5)


@pytest.fixture(scope="session")
def quad3x3():
    """Gapped 3x3 quadratic model with complex hoppings (time reversal broken)."""
    lat = Lattice(3, 3, origin=(1, 1))
    h = md.build_one_body(md.atomic(), lat) \
        + 0.35 * md.build_one_body(md.interacting_cluster(t=1.0, V=0.0, mu=0.0), lat)
    rng = np.random.default_rng(2)
    for (i, j) in [(0, 1), (3, 4), (4, 5), (1, 4)]:
        ph = np.exp(1j * rng.uniform(0, 2 * np.pi))
        h[i, j] *= ph
        h[j, i] = np.conj(h[i, j])
    H = md.quadratic_interaction(h, lat, name="quad3x3")
    gs = ground_state(H)
    diam = float(gs.eig.energies[-1] - gs.eig.energies[0])
    W = build_weight(gs.gap, ds=min(0.0019 / diam, 0.04 / gs.gap))
    return lat, h, H, gs, W, many_body_context(H, gs, W)
