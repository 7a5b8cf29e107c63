"""Random point environments on the lattice and in the continuum.

An environment assigns each lattice site an independent Poisson number of
tagged points. The continuum variant samples a homogeneous Poisson point
process on a real box and can be collapsed onto the lattice by counting
points per unit cube.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .boxes import Box, Site, box_contains, box_subset, box_volume, iter_sites, validate_box
from .errors import ConsistencyError, DomainError, ParameterError

# A tagged point: (site, tag) with 1 <= tag <= theta(site).
PointId = tuple[Site, int]


def _entropy(seed: int, *extra: int) -> np.random.SeedSequence:
    """Seed material for derived streams; negative 64-bit seeds are mapped
    to their unsigned representation so any int64 is accepted."""
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *extra])


@dataclass(frozen=True)
class Environment:
    """Per-site point multiplicities on a finite integer box.

    ``multiplicities`` is sparse: sites with no points are absent. ``rho``
    and ``seed`` are metadata recording how the realization was produced;
    loaded environments keep whatever the file says.
    """

    dim: int
    box: Box
    multiplicities: dict[Site, int]
    rho: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "box", validate_box(self.box))
        if self.dim != len(self.box):
            raise ParameterError("dim does not match box")
        for site, theta in self.multiplicities.items():
            if not box_contains(self.box, site):
                raise ConsistencyError(f"site {site} outside box")
            if theta <= 0:
                raise ConsistencyError(f"nonpositive multiplicity at {site}")

    def theta(self, site: Site) -> int:
        return self.multiplicities.get(tuple(site), 0)

    @property
    def n_points(self) -> int:
        return sum(self.multiplicities.values())

    def has_point(self, point: PointId) -> bool:
        site, tag = point
        return 1 <= tag <= self.theta(site)

    def to_json(self) -> str:
        sites = [
            [*site, theta] for site, theta in sorted(self.multiplicities.items())
        ]
        doc = {
            "dim": self.dim,
            "box": [list(ax) for ax in self.box],
            "rho": self.rho,
            "seed": self.seed,
            "sites": sites,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Environment":
        doc = json.loads(text)
        mult = {}
        for row in doc["sites"]:
            *coords, theta = row
            mult[tuple(int(c) for c in coords)] = int(theta)
        return cls(
            dim=int(doc["dim"]),
            box=tuple(tuple(ax) for ax in doc["box"]),
            multiplicities=mult,
            rho=float(doc["rho"]),
            seed=int(doc["seed"]),
        )


def sample_environment(dim: int, box, rho: float, seed: int) -> Environment:
    """Draw i.i.d. Poisson(rho) multiplicities over the box.

    Sites are consumed in lexicographic order, so the realization depends
    only on (dim, box, rho, seed).
    """
    box = validate_box(box)
    if len(box) != dim:
        raise ParameterError("dim does not match box")
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    rng = np.random.default_rng(_entropy(seed))
    thetas = rng.poisson(rho, size=box_volume(box))
    mult = {
        site: int(theta)
        for site, theta in zip(iter_sites(box), thetas)
        if theta > 0
    }
    return Environment(dim=dim, box=box, multiplicities=mult, rho=rho, seed=seed)


def points_of(env: Environment, region=None) -> list[PointId]:
    """All tagged points whose site lies in ``region`` (default: the whole
    box), ordered lexicographically by (site, tag)."""
    if region is None:
        region = env.box
    else:
        region = validate_box(region)
        if not box_subset(region, env.box):
            raise DomainError(f"region {region} not contained in box {env.box}")
    points = []
    for site in sorted(env.multiplicities):
        if box_contains(region, site):
            for tag in range(1, env.multiplicities[site] + 1):
                points.append((site, tag))
    return points


@dataclass(frozen=True)
class ContinuumPointSet:
    """A realization of a Poisson point process on a real box."""

    dim: int
    region: tuple[tuple[float, float], ...]
    points: tuple[tuple[float, ...], ...]
    rho: float
    seed: int

    def __post_init__(self):
        seen = set()
        for p in self.points:
            if len(p) != self.dim:
                raise ConsistencyError(f"point {p} has wrong dimension")
            if p in seen:
                raise ConsistencyError(f"duplicate point {p}")
            seen.add(p)
            for (lo, hi), c in zip(self.region, p):
                if not (lo <= c < hi):
                    raise ConsistencyError(f"point {p} outside region")

    def to_json(self) -> str:
        doc = {
            "dim": self.dim,
            "region": [list(ax) for ax in self.region],
            "rho": self.rho,
            "seed": self.seed,
            "points": [list(p) for p in self.points],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ContinuumPointSet":
        doc = json.loads(text)
        return cls(
            dim=int(doc["dim"]),
            region=tuple(tuple(ax) for ax in doc["region"]),
            points=tuple(tuple(p) for p in doc["points"]),
            rho=float(doc["rho"]),
            seed=int(doc["seed"]),
        )


def sample_continuum(dim: int, region, rho: float, seed: int) -> ContinuumPointSet:
    """Homogeneous Poisson point process of intensity rho on a real box.

    The count is Poisson(rho * volume) and locations are uniform.
    """
    region = tuple((float(lo), float(hi)) for lo, hi in region)
    if len(region) != dim:
        raise ParameterError("dim does not match region")
    vol = 1.0
    for lo, hi in region:
        vol *= hi - lo
    if vol <= 0.0:
        raise ParameterError(f"region must have positive volume, got {vol}")
    if rho <= 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    rng = np.random.default_rng(_entropy(seed))
    n = int(rng.poisson(rho * vol))
    lows = np.array([lo for lo, _ in region])
    highs = np.array([hi for _, hi in region])
    coords = rng.uniform(lows, highs, size=(n, dim))
    points = tuple(tuple(float(c) for c in row) for row in coords)
    return ContinuumPointSet(dim=dim, region=region, points=points, rho=rho, seed=seed)


@dataclass(frozen=True)
class TagMap:
    """Bijection between continuum points and their lattice tags."""

    to_point: dict[tuple[float, ...], PointId] = field(default_factory=dict)
    to_continuum: dict[PointId, tuple[float, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.to_point)


def discretize(pts: ContinuumPointSet) -> tuple[Environment, TagMap]:
    """Collapse a continuum realization onto the lattice.

    Each point lands in the unit cube of its componentwise floor; the cube's
    multiplicity is the number of points it received. Within a cube, tags
    follow increasing Euclidean distance to the cube's corner, ties broken
    lexicographically by coordinates, which fixes a bijection between the
    continuum points and the tagged lattice points.
    """
    by_site: dict[Site, list[tuple[float, ...]]] = {}
    for p in pts.points:
        site = tuple(int(np.floor(c)) for c in p)
        by_site.setdefault(site, []).append(p)

    if by_site:
        lows = [min(s[i] for s in by_site) for i in range(pts.dim)]
        highs = [max(s[i] for s in by_site) for i in range(pts.dim)]
    else:
        lows = [int(np.floor(lo)) for lo, _ in pts.region]
        highs = lows
    box = tuple(zip(lows, highs))

    mult = {}
    to_point: dict[tuple[float, ...], PointId] = {}
    to_continuum: dict[PointId, tuple[float, ...]] = {}
    for site, members in by_site.items():
        mult[site] = len(members)
        members.sort(
            key=lambda p: (sum((c - x) ** 2 for c, x in zip(p, site)), p)
        )
        for tag, p in enumerate(members, start=1):
            to_point[p] = (site, tag)
            to_continuum[(site, tag)] = p

    env = Environment(
        dim=pts.dim, box=box, multiplicities=mult, rho=pts.rho, seed=pts.seed
    )
    return env, TagMap(to_point=to_point, to_continuum=to_continuum)
