"""Brute-force ground truth: enumerate compatible permutations and build
the exact finite-volume distribution as an explicit table.

Everything here is exponential in the point count and guarded by hard
caps; the tables serve as verification oracles for the stochastic
samplers, not as a production path.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .boxes import Box, box_contains, box_subset, validate_box
from .cyclegas import Cycle, GasConfig, hamiltonian, cycle_weight
from .environment import Environment, _entropy, points_of
from .errors import (
    BoundaryError,
    CapExceededError,
    InvariantBreachError,
    ParameterError,
)
from .potential import Potential

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class BoundarySpec:
    """A finite-cycle boundary permutation, given as its gas of cycles."""

    gas: GasConfig

    @classmethod
    def identity(cls) -> "BoundarySpec":
        return cls(gas=GasConfig.empty())

    @property
    def is_identity(self) -> bool:
        return not self.gas.cycles

    def digest(self) -> str:
        if self.is_identity:
            return "identity"
        h = hashlib.sha256(json.dumps(self.gas.to_jsonable()).encode())
        return h.hexdigest()[:16]


def boundary_cycles(
    xi: BoundarySpec | GasConfig, lam, env: Environment | None = None
) -> frozenset[Cycle]:
    """Cycles of the boundary permutation that cross the volume: they visit
    a site inside ``lam`` and a site outside it."""
    gas = xi.gas if isinstance(xi, BoundarySpec) else xi
    lam = validate_box(lam)
    if env is not None:
        for cycle in gas:
            for p in cycle.point_set:
                if not env.has_point(p):
                    raise BoundaryError(
                        f"boundary cycle uses point {p} absent from the environment"
                    )
    out = set()
    for cycle in gas:
        inside = any(box_contains(lam, s) for s in cycle.site_set)
        outside = any(not box_contains(lam, s) for s in cycle.site_set)
        if inside and outside:
            out.add(cycle)
    return frozenset(out)


def cycle_count_cap(n: int) -> int:
    """Number of cycles over n points: sum over k of C(n,k)*(k-1)!."""
    return sum(math.comb(n, k) * math.factorial(k - 1) for k in range(2, n + 1))


def enumerate_cycles(env: Environment, lam, max_points: int = 9) -> list[Cycle]:
    """Every cycle whose support lies inside the volume, canonical and
    deduplicated, sorted for reproducibility. Trivial single-site cycles
    are included: they carry weight one but still exclude."""
    lam = validate_box(lam)
    if not box_subset(lam, env.box):
        raise ParameterError(f"volume {lam} not contained in {env.box}")
    points = points_of(env, lam)
    n = len(points)
    if n > max_points:
        raise CapExceededError(
            f"{n} points in the volume exceed max_points={max_points} "
            f"({cycle_count_cap(n)} cycles would be enumerated)"
        )
    cycles = []
    for k in range(2, n + 1):
        for subset in itertools.combinations(points, k):
            first, rest = subset[0], subset[1:]
            for perm in itertools.permutations(rest):
                cycles.append(Cycle((first, *perm)))
    cycles.sort(key=lambda c: c.points)
    return cycles


def enumerate_gases(
    env: Environment,
    lam,
    xi: BoundarySpec | GasConfig | None = None,
    max_points: int = 9,
) -> list[GasConfig]:
    """All gases compatible with the boundary at this volume.

    Each result contains every boundary cycle that crosses the volume,
    plus a set of pairwise compatible cycles supported inside the volume
    and avoiding the crossing cycles' points. With identity boundary the
    results are in bijection with the permutations of the volume's points,
    so there are n! of them.
    """
    lam = validate_box(lam)
    if not box_subset(lam, env.box):
        raise ParameterError(f"volume {lam} not contained in {env.box}")
    if xi is None:
        xi = BoundarySpec.identity()
    if isinstance(xi, GasConfig):
        xi = BoundarySpec(gas=xi)
    crossing = boundary_cycles(xi, lam, env=env)
    blocked = set()
    for b in crossing:
        blocked.update(b.point_set)

    points = points_of(env, lam)
    n = len(points)
    if n > max_points:
        raise CapExceededError(
            f"{n} points in the volume exceed max_points={max_points} "
            f"({math.factorial(n)} permutations would be enumerated)"
        )
    available = [p for p in points if p not in blocked]

    def decompositions(avail: tuple):
        if not avail:
            yield ()
            return
        head, rest = avail[0], avail[1:]
        # head stays fixed
        yield from decompositions(rest)
        # head opens a cycle with a subset of the rest
        for k in range(1, len(rest) + 1):
            for combo in itertools.combinations(rest, k):
                left = tuple(p for p in rest if p not in combo)
                for perm in itertools.permutations(combo):
                    cyc = Cycle((head, *perm))
                    for tail in decompositions(left):
                        yield (cyc, *tail)

    base = frozenset(crossing)
    return [GasConfig(base | frozenset(cs)) for cs in decompositions(tuple(available))]


@dataclass(frozen=True)
class SpecTable:
    """The exact finite-volume distribution as (gas, probability) rows,
    sorted by decreasing probability."""

    entries: tuple[tuple[GasConfig, float], ...]
    partition_value: float
    alpha: float
    potential_digest: str
    lam: Box
    xi_digest: str

    def __post_init__(self):
        total = sum(p for _, p in self.entries)
        if abs(total - 1.0) > _PROB_TOL:
            raise InvariantBreachError(f"probabilities sum to {total}, not 1")
        if any(p <= 0 for _, p in self.entries):
            raise InvariantBreachError("nonpositive probability in table")
        if len({g.sort_key() for g, _ in self.entries}) != len(self.entries):
            raise InvariantBreachError("duplicate gas in table")

    def __len__(self) -> int:
        return len(self.entries)

    def probability(self, gas: GasConfig) -> float:
        for g, p in self.entries:
            if g.sort_key() == gas.sort_key():
                return p
        return 0.0

    def support(self) -> set:
        return {g.sort_key() for g, _ in self.entries}

    def _cumulative(self) -> np.ndarray:
        return np.cumsum([p for _, p in self.entries])

    def sample(self, seed: int) -> GasConfig:
        """Inverse-CDF draw over the rows in table order."""
        rng = np.random.default_rng(_entropy(seed))
        u = rng.random()
        idx = int(np.searchsorted(self._cumulative(), u, side="right"))
        idx = min(idx, len(self.entries) - 1)
        return self.entries[idx][0]

    def sample_many(self, seed: int, n: int) -> list[GasConfig]:
        rng = np.random.default_rng(_entropy(seed))
        us = rng.random(n)
        cum = self._cumulative()
        idxs = np.minimum(
            np.searchsorted(cum, us, side="right"), len(self.entries) - 1
        )
        return [self.entries[int(i)][0] for i in idxs]

    def to_json(self) -> str:
        doc = {
            "alpha": self.alpha,
            "potential": self.potential_digest,
            "lam": [list(ax) for ax in self.lam],
            "xi_digest": self.xi_digest,
            "partition_value": self.partition_value,
            "entries": [
                {"probability": p, "gas": g.to_jsonable()} for g, p in self.entries
            ],
        }
        return json.dumps(doc)


def specification(
    env: Environment,
    lam,
    xi: BoundarySpec | GasConfig | None,
    alpha: float,
    potential: Potential,
    max_points: int = 9,
) -> SpecTable:
    """Build the exact distribution over compatible gases.

    The weight of a gas is the product of its inside-volume cycle weights;
    as a cross-check, probabilities are recomputed from the point-level
    energy of each configuration restricted to the volume (which also sees
    the crossing boundary cycles' jumps) and both forms must agree to
    1e-12. Crossing cycles contribute a constant factor, so the two
    normalized forms coincide.
    """
    lam = validate_box(lam)
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if xi is None:
        xi = BoundarySpec.identity()
    if isinstance(xi, GasConfig):
        xi = BoundarySpec(gas=xi)
    gases = enumerate_gases(env, lam, xi, max_points=max_points)

    def inside(cycle: Cycle) -> bool:
        return all(box_contains(lam, s) for s in cycle.site_set)

    gas_weights = []
    point_weights = []
    for gas in gases:
        w = 1.0
        for cycle in gas.cycles:
            if inside(cycle):
                w *= cycle_weight(cycle, alpha, potential)
        gas_weights.append(w)
        point_weights.append(
            math.exp(-alpha * hamiltonian(gas, potential, region=lam, env=env))
        )

    z_gas = sum(gas_weights)
    z_point = sum(point_weights)
    probs = [w / z_gas for w in gas_weights]
    probs_pt = [w / z_point for w in point_weights]
    for a, b in zip(probs, probs_pt):
        if abs(a - b) > _PROB_TOL * max(a, b) + 1e-300:
            raise InvariantBreachError(
                f"gas-product and point-energy forms disagree: {a} vs {b}"
            )

    rows = sorted(
        zip(gases, probs), key=lambda row: (-row[1], row[0].sort_key())
    )
    return SpecTable(
        entries=tuple(rows),
        partition_value=z_gas,
        alpha=alpha,
        potential_digest=potential.digest(),
        lam=lam,
        xi_digest=xi.digest(),
    )


def sample_exact(table: SpecTable, seed: int) -> GasConfig:
    """Single inverse-CDF draw from an exact table."""
    return table.sample(seed)
