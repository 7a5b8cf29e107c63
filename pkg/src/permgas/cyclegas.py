"""Cycles of tagged points, gases of cycles, and the permutation bijection.

A cycle is a cyclic sequence of at least two distinct tagged points; fixed
points are never stored, so the identity permutation is the empty gas. A
gas is a set of pairwise point-disjoint cycles and corresponds one-to-one
to a finite-cycle permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .boxes import Site, box_contains
from .environment import Environment, PointId
from .errors import ConsistencyError, StructureError
from .potential import Potential


def _canonical_rotation(points: tuple[PointId, ...]) -> tuple[PointId, ...]:
    k = points.index(min(points))
    return points[k:] + points[:k]


@dataclass(frozen=True)
class Cycle:
    """A cyclic sequence of distinct tagged points, stored in the canonical
    rotation that starts at the smallest (site, tag)."""

    points: tuple[PointId, ...]

    def __post_init__(self):
        pts = tuple((tuple(site), int(tag)) for site, tag in self.points)
        if len(pts) < 2:
            raise StructureError("a cycle needs at least two points")
        if len(set(pts)) != len(pts):
            raise StructureError(f"cycle with repeated points: {pts}")
        object.__setattr__(self, "points", _canonical_rotation(pts))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @cached_property
    def point_set(self) -> frozenset[PointId]:
        return frozenset(self.points)

    @cached_property
    def site_set(self) -> frozenset[Site]:
        return frozenset(site for site, _ in self.points)

    def is_trivial(self) -> bool:
        """True when every point sits at the same site (zero energy)."""
        return len(self.site_set) == 1

    def successor(self, point: PointId) -> PointId:
        i = self.points.index(point)
        return self.points[(i + 1) % len(self.points)]

    def mapping(self) -> dict[PointId, PointId]:
        n = len(self.points)
        return {self.points[i]: self.points[(i + 1) % n] for i in range(n)}

    def to_jsonable(self) -> list:
        return [[list(site), tag] for site, tag in self.points]

    @classmethod
    def from_jsonable(cls, data) -> "Cycle":
        return cls(tuple((tuple(site), int(tag)) for site, tag in data))


def ordered_support(cycle: Cycle) -> tuple[Site, ...]:
    """Projection of the cycle to sites with consecutive repetitions erased,
    cyclically (the wrap-around repetition is erased too), in the
    lexicographically smallest rotation."""
    sites = [site for site, _ in cycle.points]
    collapsed: list[Site] = []
    for s in sites:
        if not collapsed or collapsed[-1] != s:
            collapsed.append(s)
    while len(collapsed) >= 2 and collapsed[0] == collapsed[-1]:
        collapsed.pop()
    n = len(collapsed)
    rotations = [tuple(collapsed[i:] + collapsed[:i]) for i in range(n)]
    return min(rotations)


def compatible(a: Cycle, b: Cycle) -> bool:
    """True when the two cycles use disjoint point sets. A cycle is never
    compatible with itself."""
    return a.point_set.isdisjoint(b.point_set)


def neighbors(a: Cycle, b: Cycle) -> bool:
    """True when the cycles visit a common site; point-disjoint cycles can
    still be neighbors."""
    return not a.site_set.isdisjoint(b.site_set)


@dataclass(frozen=True)
class GasConfig:
    """A set of pairwise compatible cycles."""

    cycles: frozenset[Cycle]

    def __post_init__(self):
        cycles = frozenset(self.cycles)
        object.__setattr__(self, "cycles", cycles)
        total = sum(len(c) for c in cycles)
        union = set()
        for c in cycles:
            union.update(c.point_set)
        if len(union) != total:
            raise StructureError("gas contains point-sharing cycles")

    @classmethod
    def empty(cls) -> "GasConfig":
        return cls(frozenset())

    def __len__(self) -> int:
        return len(self.cycles)

    def __iter__(self):
        return iter(sorted(self.cycles, key=lambda c: c.points))

    def __contains__(self, cycle: Cycle) -> bool:
        return cycle in self.cycles

    @cached_property
    def point_set(self) -> frozenset[PointId]:
        out = set()
        for c in self.cycles:
            out.update(c.point_set)
        return frozenset(out)

    def add(self, cycle: Cycle) -> "GasConfig":
        return GasConfig(self.cycles | {cycle})

    def union(self, other: "GasConfig") -> "GasConfig":
        return GasConfig(self.cycles | other.cycles)

    def to_jsonable(self) -> list:
        return [c.to_jsonable() for c in self]

    @classmethod
    def from_jsonable(cls, data) -> "GasConfig":
        return cls(frozenset(Cycle.from_jsonable(c) for c in data))

    def sort_key(self) -> tuple:
        return tuple(c.points for c in self)


def gas_compatible(cycle: Cycle, gas: GasConfig) -> bool:
    return cycle.point_set.isdisjoint(gas.point_set)


def _check_points_exist(points, env: Environment) -> None:
    for p in points:
        if not env.has_point(p):
            raise ConsistencyError(f"point {p} does not exist in the environment")


def hamiltonian(obj, potential: Potential, region=None, env: Environment | None = None) -> float:
    """Total jump energy ``sum_s V(X(next(s)) - X(s))`` over the points of a
    cycle or gas; with ``region`` given, only jumps starting inside it count.
    Fixed points contribute nothing because they are not stored.
    """
    cycles = [obj] if isinstance(obj, Cycle) else list(obj.cycles)
    total = 0.0
    for cycle in cycles:
        if env is not None:
            _check_points_exist(cycle.points, env)
        pts = cycle.points
        n = len(pts)
        for i in range(n):
            (site, _), (nxt_site, _) = pts[i], pts[(i + 1) % n]
            if region is not None and not box_contains(region, site):
                continue
            delta = tuple(b - a for a, b in zip(site, nxt_site))
            total += potential.value(delta)
    return total


def cycle_weight(cycle: Cycle, alpha: float, potential: Potential) -> float:
    """exp(-alpha * H(cycle)); equals 1 exactly when every jump has zero
    potential, trivial cycles in particular."""
    return math.exp(-alpha * hamiltonian(cycle, potential))


def gas_from_permutation(table: dict[PointId, PointId]) -> GasConfig:
    """Decompose a finite-support bijection into its gas of cycles.

    The table maps points to their images; fixed points may be listed or
    omitted. The image set must equal the key set.
    """
    table = {
        (tuple(s), int(t)): (tuple(s2), int(t2)) for (s, t), (s2, t2) in table.items()
    }
    if set(table.values()) != set(table.keys()):
        raise StructureError("permutation table is not a bijection on its support")
    cycles = []
    seen: set[PointId] = set()
    for start in sorted(table):
        if start in seen or table[start] == start:
            seen.add(start)
            continue
        orbit = [start]
        cursor = table[start]
        while cursor != start:
            orbit.append(cursor)
            seen.add(cursor)
            cursor = table[cursor]
            if len(orbit) > len(table):
                raise StructureError(f"orbit of {start} does not close")
        seen.add(start)
        cycles.append(Cycle(tuple(orbit)))
    return GasConfig(frozenset(cycles))


def permutation_from_gas(gas: GasConfig) -> dict[PointId, PointId]:
    """Inverse of gas_from_permutation; the identity maps to an empty table."""
    table: dict[PointId, PointId] = {}
    for cycle in gas:
        table.update(cycle.mapping())
    return table
