"""Statistics over samples and structural probes on configurations:
energy-threshold events, separating boxes, and site-adjacency paths."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .boxes import Box, Site, box_contains, box_hull, box_subset, centered_box, validate_box
from .cyclegas import Cycle, GasConfig, hamiltonian, neighbors
from .environment import PointId
from .errors import DomainError, InvariantBreachError, ParameterError
from .exactgibbs import SpecTable
from .potential import Potential


def kf_event(
    eta: GasConfig, f: dict[Site, float], potential: Potential, region
) -> tuple[bool, list[tuple[Site, Cycle]]]:
    """Check that every cycle through every site of the region has energy
    at most the site's threshold; returns (holds, violations)."""
    region = validate_box(region)
    violations = []
    for cycle in eta:
        energy = hamiltonian(cycle, potential)
        for site in sorted(cycle.site_set):
            if not box_contains(region, site):
                continue
            if site not in f:
                raise ParameterError(f"threshold function undefined at {site}")
            if energy > f[site]:
                violations.append((site, cycle))
    return (not violations, violations)


def separates(delta, pair: tuple[GasConfig, GasConfig]) -> bool:
    """True when every cycle of both configurations lies wholly inside or
    wholly outside ``delta`` (a box or an explicit site set)."""
    if isinstance(delta, (set, frozenset)):
        member = lambda s: s in delta
    else:
        delta = validate_box(delta)
        member = lambda s: box_contains(delta, s)
    for gas in pair:
        for cycle in gas:
            inside = [member(s) for s in cycle.site_set]
            if any(inside) and not all(inside):
                return False
    return True


def separating_set_search(
    pair: tuple[GasConfig, GasConfig], n: int, search_box
) -> Box | None:
    """Smallest separating box containing [-n, n]^d, grown greedily.

    Starting from the centered box, any straddling cycle forces the box to
    absorb the cycle's sites; the sweep stops at the least box fixed point,
    which is contained in every separating box around the center. Returns
    None when the growth escapes ``search_box``; a non-box separating set
    could still exist, so None means inconclusive rather than impossible.
    """
    search_box = validate_box(search_box)
    dim = len(search_box)
    delta = centered_box(n, dim)
    if not box_subset(delta, search_box):
        raise ParameterError(f"centered box [-{n},{n}]^{dim} exceeds the search box")
    for gas in pair:
        for cycle in gas:
            if not all(box_contains(search_box, s) for s in cycle.site_set):
                raise DomainError(
                    f"cycle with sites {sorted(cycle.site_set)} escapes the search box"
                )
    cycles = [c for gas in pair for c in gas]
    while True:
        grown = delta
        for cycle in cycles:
            inside = [box_contains(delta, s) for s in cycle.site_set]
            if any(inside) and not all(inside):
                grown = box_hull(grown, cycle.site_set)
        if grown == delta:
            return delta
        if not box_subset(grown, search_box):
            return None
        delta = grown


def open_path_exists(
    pair: tuple[GasConfig, GasConfig], x0: Site, n: int
) -> bool:
    """True when n distinct non-trivial cycles, open in either
    configuration, can be chained through shared sites starting from a
    cycle that visits ``x0``."""
    if n < 1:
        raise ParameterError(f"path length must be at least 1, got {n}")
    x0 = tuple(x0)
    open_cycles = list(
        {c for gas in pair for c in gas.cycles if not c.is_trivial()}
    )
    starts = [c for c in open_cycles if x0 in c.site_set]

    def extend(path: list[Cycle], used: set[Cycle]) -> bool:
        if len(path) == n:
            return True
        for nxt in open_cycles:
            if nxt in used or not neighbors(path[-1], nxt):
                continue
            path.append(nxt)
            used.add(nxt)
            if extend(path, used):
                return True
            path.pop()
            used.remove(nxt)
        return False

    for start in starts:
        if extend([start], {start}):
            return True
    return False


def cycle_diameter(cycle: Cycle) -> float:
    """Largest Euclidean distance between two sites the cycle visits."""
    sites = list(cycle.site_set)
    best = 0.0
    for i, a in enumerate(sites):
        for b in sites[i + 1 :]:
            best = max(best, math.dist(a, b))
    return best


def _max_jump(cycle: Cycle) -> float:
    pts = cycle.points
    n = len(pts)
    best = 0.0
    for i in range(n):
        a, b = pts[i][0], pts[(i + 1) % n][0]
        best = max(best, math.dist(a, b))
    return best


@dataclass(frozen=True)
class CycleStats:
    """Aggregate cycle structure over a stream of sampled configurations."""

    histogram: dict[int, int]  # cycle length in points -> count
    site_histogram: dict[int, int]  # distinct sites visited -> count
    max_jump: float
    frac_nontrivial: float
    frac_nonidentity: float
    n_samples: int

    def to_json(self) -> str:
        doc = {
            "n_samples": self.n_samples,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "site_histogram": {
                str(k): v for k, v in sorted(self.site_histogram.items())
            },
            "max_jump": self.max_jump,
            "frac_nontrivial": self.frac_nontrivial,
            "frac_nonidentity": self.frac_nonidentity,
        }
        return json.dumps(doc)

    def histogram_csv(self) -> str:
        lines = ["length,count"]
        lines += [f"{k},{v}" for k, v in sorted(self.histogram.items())]
        return "\n".join(lines) + "\n"


def cycle_stats(samples) -> CycleStats:
    """Fold a stream of configurations into length histograms, the largest
    observed jump, and the fraction of non-trivial cycles."""
    histogram: dict[int, int] = {}
    site_histogram: dict[int, int] = {}
    max_jump = 0.0
    total_cycles = 0
    nontrivial = 0
    nonidentity = 0
    n_samples = 0
    for gas in samples:
        n_samples += 1
        if gas.cycles:
            nonidentity += 1
        for cycle in gas.cycles:
            total_cycles += 1
            histogram[len(cycle)] = histogram.get(len(cycle), 0) + 1
            k = len(cycle.site_set)
            site_histogram[k] = site_histogram.get(k, 0) + 1
            if not cycle.is_trivial():
                nontrivial += 1
            max_jump = max(max_jump, _max_jump(cycle))
    return CycleStats(
        histogram=histogram,
        site_histogram=site_histogram,
        max_jump=max_jump,
        frac_nontrivial=(nontrivial / total_cycles) if total_cycles else 0.0,
        frac_nonidentity=(nonidentity / n_samples) if n_samples else 0.0,
        n_samples=n_samples,
    )


def tv_distance(empirical: dict, exact: SpecTable) -> float:
    """Total variation distance between empirical counts (keyed by
    GasConfig) and an exact table. Mass on a configuration outside the
    table's support means the sampler broke its contract."""
    total = sum(empirical.values())
    if total <= 0:
        raise ParameterError("empirical distribution is empty")
    support = exact.support()
    emp = {}
    for gas, count in empirical.items():
        key = gas.sort_key()
        if key not in support:
            raise InvariantBreachError(
                f"empirical mass on a configuration outside the exact support: {key}"
            )
        emp[key] = emp.get(key, 0) + count
    tv = 0.0
    for gas, p in exact.entries:
        tv += abs(emp.get(gas.sort_key(), 0) / total - p)
    return 0.5 * tv
