import numpy as np
import pytest

from hallcond.errors import RegionEmpty
from hallcond.lattice import Boundary, Lattice, Region, center_of


def test_index_roundtrip():
    lat = Lattice(5, 3, n_orb=2, origin=(2, 1))
    seen = set()
    for i in range(lat.n_sites):
        s = lat.site_at(i)
        assert lat.site_index(s) == i
        seen.add(s)
    assert len(seen) == 15


def test_half_plane_4x4():
    lat = Lattice(4, 4, origin=(2, 2))
    hp = lat.half_plane(2, 0)
    assert len(hp) == 8
    assert all(s[1] >= 0 for s in hp)


def test_half_plane_complement_partitions():
    lat = Lattice(4, 4, origin=(2, 2))
    for shift in (-1, 0, 1):
        hp = lat.half_plane(1, shift)
        comp = lat.half_plane_complement(1, shift)
        union = hp.union(comp)
        assert len(union) == lat.n_sites
        assert len(hp.intersection(comp)) == 0


def test_half_plane_empty():
    lat = Lattice(4, 4, origin=(2, 2))
    with pytest.raises(RegionEmpty):
        lat.half_plane(1, 4)


def test_box_examples():
    lat = Lattice(5, 5, origin=(2, 2))
    assert lat.box((0, 0), 0).sites == ((0, 0),)
    assert len(lat.box((0, 0), 1)) == 9
    corner = (-2, -2)
    assert len(lat.box(corner, 1)) == 4


def test_box_monotone():
    lat = Lattice(6, 5, origin=(3, 2))
    for k in range(4):
        assert lat.box((0, 0), k).issubset(lat.box((0, 0), k + 1))


def test_stripe():
    lat = Lattice(5, 5, origin=(2, 2))
    assert len(lat.stripe(0)) == 5
    assert all(s[0] == 0 for s in lat.stripe(0))
    assert len(lat.stripe(1)) == 15
    assert len(lat.stripe(7)) == lat.n_sites


def test_center_rule_examples():
    assert center_of(Region([(0, 0)])) == (0, 0)
    # two-site tie: angles pi and 0, smaller angle wins
    assert center_of(Region([(0, 0), (1, 0)])) == (1, 0)
    # four-way tie: pi/4 is minimal
    assert center_of(Region([(0, 0), (0, 1), (1, 0), (1, 1)])) == (1, 1)


def test_center_in_region_and_translation_covariant():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = rng.integers(1, 6)
        pts = {(int(rng.integers(-3, 4)), int(rng.integers(-3, 4))) for _ in range(n)}
        region = Region(pts)
        c = center_of(region)
        assert c in region
        z = (int(rng.integers(-5, 6)), int(rng.integers(-5, 6)))
        shifted = Region([(p[0] + z[0], p[1] + z[1]) for p in region])
        assert center_of(shifted) == (c[0] + z[0], c[1] + z[1])


def test_center_deterministic():
    region = Region([(0, 0), (2, 1), (-1, 1), (1, -2)])
    first = center_of(region)
    for _ in range(5):
        assert center_of(region) == first


def test_center_of_empty():
    with pytest.raises(RegionEmpty):
        center_of(Region([]))


def test_torus_wraps():
    lat = Lattice(4, 4, boundary=Boundary.TORUS, origin=(0, 0))
    assert lat.contains((5, -3))
    assert lat.site_index((4, 0)) == lat.site_index((0, 0))


def test_origin_validation():
    with pytest.raises(ValueError):
        Lattice(4, 4, origin=(0, 2))   # on the open boundary
    Lattice(3, 3, origin=(1, 1))       # smallest interior origin is fine


def test_region_deduplicates_and_orders():
    r = Region([(1, 0), (0, 0), (1, 0)])
    assert r.sites == ((0, 0), (1, 0))
    assert r.diameter() == 1
