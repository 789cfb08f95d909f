"""Finite 2D lattice geometry: site indexing, regions, and the center rule.

Sites are addressed in coordinates relative to a configurable origin, so the
half-plane, stripe and position constructions read exactly like their
infinite-lattice counterparts.  The linear index used for matrices runs
row-major over the underlying L1 x L2 window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Tuple

from .errors import RegionEmpty

Site = Tuple[int, int]


class Boundary(Enum):
    OPEN = "open"
    TORUS = "torus"


@dataclass(frozen=True)
class Region:
    """Deduplicated, lexicographically ordered set of lattice sites."""

    sites: tuple

    def __init__(self, sites: Iterable[Site]):
        ordered = tuple(sorted({(int(x1), int(x2)) for x1, x2 in sites}))
        object.__setattr__(self, "sites", ordered)

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return tuple(site) in set(self.sites)

    def union(self, other: "Region") -> "Region":
        return Region(self.sites + other.sites)

    def intersection(self, other: "Region") -> "Region":
        s = set(other.sites)
        return Region(x for x in self.sites if x in s)

    def issubset(self, other: "Region") -> bool:
        return set(self.sites) <= set(other.sites)

    def diameter(self) -> int:
        """Maximal pairwise distance in the maximum norm (0 for singletons)."""
        if not self.sites:
            return 0
        x1s = [s[0] for s in self.sites]
        x2s = [s[1] for s in self.sites]
        return max(max(x1s) - min(x1s), max(x2s) - min(x2s))


@dataclass(frozen=True)
class Lattice:
    """L1 x L2 window of the square lattice with a marked origin.

    ``origin`` is given in window coordinates (0-based).  All site coordinates
    exposed by the API are relative to it, i.e. the origin is site (0, 0).
    """

    L1: int
    L2: int
    boundary: Boundary = Boundary.OPEN
    n_orb: int = 1
    origin: Site = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.L1 < 1 or self.L2 < 1 or self.n_orb < 1:
            raise ValueError("L1, L2 and n_orb must be positive")
        origin = self.origin
        if origin is None:
            origin = (self.L1 // 2, self.L2 // 2)
        origin = (int(origin[0]), int(origin[1]))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.boundary is Boundary.OPEN and self.L1 >= 3 and self.L2 >= 3:
            # keep the origin strictly inside the open window
            if not (1 <= origin[0] <= self.L1 - 2 and 1 <= origin[1] <= self.L2 - 2):
                raise ValueError(f"origin {origin} not strictly inside the {self.L1}x{self.L2} window")
        elif not (0 <= origin[0] < self.L1 and 0 <= origin[1] < self.L2):
            raise ValueError(f"origin {origin} outside the {self.L1}x{self.L2} window")

    # -- index maps -------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.L1 * self.L2

    @property
    def n_modes(self) -> int:
        return self.n_sites * self.n_orb

    def site_index(self, site: Site) -> int:
        """Linear index of a site given in origin-relative coordinates."""
        w1 = site[0] + self.origin[0]
        w2 = site[1] + self.origin[1]
        if self.boundary is Boundary.TORUS:
            w1 %= self.L1
            w2 %= self.L2
        if not (0 <= w1 < self.L1 and 0 <= w2 < self.L2):
            raise IndexError(f"site {site} outside lattice")
        return w1 * self.L2 + w2

    def site_at(self, index: int) -> Site:
        if not (0 <= index < self.n_sites):
            raise IndexError(f"site index {index} out of range")
        w1, w2 = divmod(index, self.L2)
        return (w1 - self.origin[0], w2 - self.origin[1])

    def mode_index(self, site: Site, orb: int = 0) -> int:
        if not (0 <= orb < self.n_orb):
            raise IndexError(f"orbital {orb} out of range")
        return self.site_index(site) * self.n_orb + orb

    def contains(self, site: Site) -> bool:
        if self.boundary is Boundary.TORUS:
            return True
        w1 = site[0] + self.origin[0]
        w2 = site[1] + self.origin[1]
        return 0 <= w1 < self.L1 and 0 <= w2 < self.L2

    def sites(self) -> list:
        """All sites in row-major index order, origin-relative coordinates."""
        return [self.site_at(i) for i in range(self.n_sites)]

    def all_sites(self) -> Region:
        return Region(self.sites())

    def wrap(self, site: Site) -> Site:
        """Canonical representative of a site (identity on open lattices)."""
        if self.boundary is Boundary.TORUS:
            return self.site_at(self.site_index(site))
        return site

    # -- regions ----------------------------------------------------------

    def half_plane(self, j: int, shift: int = 0) -> Region:
        """Sites with x_j >= shift (origin-relative coordinates)."""
        if j not in (1, 2):
            raise ValueError("axis j must be 1 or 2")
        sel = [s for s in self.sites() if s[j - 1] >= shift]
        if not sel:
            raise RegionEmpty(f"half-plane x_{j} >= {shift} misses the lattice")
        return Region(sel)

    def half_plane_complement(self, j: int, shift: int = 0) -> Region:
        sel = [s for s in self.sites() if s[j - 1] < shift]
        if not sel:
            raise RegionEmpty(f"complement of x_{j} >= {shift} misses the lattice")
        return Region(sel)

    def box(self, center: Site, k: int) -> Region:
        """Maximum-norm ball of radius k around ``center``, clipped to the lattice."""
        if k < 0:
            raise ValueError("box radius must be >= 0")
        sel = []
        for d1 in range(-k, k + 1):
            for d2 in range(-k, k + 1):
                s = (center[0] + d1, center[1] + d2)
                if self.contains(s):
                    sel.append(self.wrap(s))
        if not sel:
            raise RegionEmpty(f"box({center}, {k}) misses the lattice")
        return Region(sel)

    def stripe(self, k: int) -> Region:
        """Centered vertical stripe |x_1| <= k, clipped to the lattice."""
        if k < 0:
            raise ValueError("stripe half-width must be >= 0")
        return Region(s for s in self.sites() if -k <= s[0] <= k)

    def distance_to_edge(self, site: Site) -> int:
        """Minimum number of lattice steps from a site to any open boundary."""
        if self.boundary is Boundary.TORUS:
            return min(self.L1, self.L2)  # no edge
        w1 = site[0] + self.origin[0]
        w2 = site[1] + self.origin[1]
        return min(w1, self.L1 - 1 - w1, w2, self.L2 - 1 - w2)


def center_of(region: Region) -> Site:
    """Distinguished site of a finite region.

    The site closest (Euclidean) to the center of mass wins; ties are broken
    by the smallest angle in [0, 2*pi) of the offset from the center of mass
    against the first coordinate axis.  A site coinciding with the center of
    mass is assigned angle 0 and therefore wins every tie.  Distances are
    compared in exact rational arithmetic so the rule is deterministic.
    """
    if len(region) == 0:
        raise RegionEmpty("center of empty region")
    n = len(region)
    cm1 = Fraction(sum(s[0] for s in region), n)
    cm2 = Fraction(sum(s[1] for s in region), n)

    best = None
    best_d = None
    candidates = []
    for s in region:
        d = (s[0] - cm1) ** 2 + (s[1] - cm2) ** 2
        if best_d is None or d < best_d:
            best_d = d
            candidates = [s]
        elif d == best_d:
            candidates.append(s)
    if len(candidates) == 1:
        return candidates[0]
    for s in candidates:
        v1 = s[0] - cm1
        v2 = s[1] - cm2
        if v1 == 0 and v2 == 0:
            angle = 0.0
        else:
            angle = math.atan2(float(v2), float(v1)) % (2.0 * math.pi)
        if best is None or angle < best[0]:
            best = (angle, s)
    return best[1]
