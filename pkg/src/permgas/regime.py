"""Named constants, regime conditions, and cycle-counting bounds.

The existence condition compares the per-site counting factor against the
half-temperature weight sum; the uniqueness condition compares it against
the root of ``r/(1-r)^2 - r = 1/2``, the largest per-step ratio for which
the weighted count of site paths stays below one half.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

from .boxes import Site, centered_box, iter_sites
from .cyclegas import Cycle, ordered_support
from .environment import Environment
from .errors import CapExceededError, ParameterError, StructureError
from .potential import Potential, Quadratic, jump_range, weight_sum, weight_sum_closed_bound


def uniqueness_root(tol: float = 1e-10) -> float:
    """Unique root in (0, 1) of r/(1-r)^2 - r = 1/2, by bisection; the
    left side is strictly increasing there."""
    if tol <= 0:
        raise ParameterError("tol must be positive")

    def residual(r: float) -> float:
        return r / (1.0 - r) ** 2 - r - 0.5

    lo, hi = 0.0, 1.0 - 1e-12
    while hi - lo > tol / 4.0:
        mid = (lo + hi) / 2.0
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def site_factor(rho: float) -> float:
    """Per-site counting factor rho * exp(-rho + 1/2) / (1 - 2*rho);
    diverges at rho = 1/2."""
    if not (0.0 < rho < 0.5):
        raise ParameterError(f"rho must lie in (0, 1/2), got {rho}")
    return rho * math.exp(-rho + 0.5) / (1.0 - 2.0 * rho)


def critical_alpha(rho: float, dim: int, tol: float = 1e-10) -> float:
    """Temperature above which the closed-form quadratic weight-sum bound
    satisfies the uniqueness condition: pi / ((root/factor + 1)^(1/dim) - 1)^2."""
    if dim < 1:
        raise ParameterError(f"dim must be at least 1, got {dim}")
    ratio = uniqueness_root(tol) / site_factor(rho)
    return math.pi / ((ratio + 1.0) ** (1.0 / dim) - 1.0) ** 2


def _validate_support_vector(ybar) -> tuple[Site, ...]:
    ybar = tuple(tuple(int(c) for c in site) for site in ybar)
    if not ybar:
        raise StructureError("empty support vector")
    for a, b in zip(ybar, ybar[1:]):
        if a == b:
            raise StructureError(f"support vector repeats consecutively: {ybar}")
    if len(ybar) >= 2 and ybar[-1] == ybar[0]:
        raise StructureError(f"support vector repeats across the wrap: {ybar}")
    return ybar


def _canonical_rotation_sites(ybar: tuple[Site, ...]) -> tuple[Site, ...]:
    n = len(ybar)
    return min(tuple(ybar[i:] + ybar[:i]) for i in range(n))


def count_cycles_with_support(
    ybar, env: Environment, max_points: int = 10
) -> int:
    """Exact number of cycles whose ordered support equals ``ybar``
    (up to rotation), by exhausting every cycle over the points available
    at the support's sites."""
    ybar = _validate_support_vector(ybar)
    target = _canonical_rotation_sites(ybar)
    sites = sorted(set(ybar))
    points = [
        (site, tag) for site in sites for tag in range(1, env.theta(site) + 1)
    ]
    if len(points) > max_points:
        raise CapExceededError(
            f"{len(points)} points at the support sites exceed max_points={max_points}"
        )
    count = 0
    for k in range(2, len(points) + 1):
        for subset in itertools.combinations(points, k):
            first, rest = subset[0], subset[1:]
            for perm in itertools.permutations(rest):
                if ordered_support(Cycle((first, *perm))) == target:
                    count += 1
    return count


def cycle_count_bound(ybar, env: Environment) -> float:
    """Product bound on the number of cycles sharing an ordered support:
    (e^(1/2)/2) * theta! * 2^theta over the support's distinct sites, and
    zero when any site is empty. Depends only on the site set, not on the
    order or repetitions."""
    ybar = _validate_support_vector(ybar)
    bound = 1.0
    for site in set(ybar):
        theta = env.theta(site)
        if theta == 0:
            return 0.0
        bound *= (math.exp(0.5) / 2.0) * math.factorial(theta) * 2.0**theta
    return bound


def expected_count_bound(rho: float, m: int) -> float:
    """Expectation of the counting bound over environments: the per-site
    factor to the power of the support length."""
    if m < 1:
        raise ParameterError(f"support length must be positive, got {m}")
    return site_factor(rho) ** m


def support_weight_sum(
    alpha: float, m: int, dim: int, radius: int, tol: float = 1e-9
) -> tuple[float, float]:
    """Quadratic weights summed over ordered supports of length m anchored
    at the origin, truncated to the sup-norm ball of the given radius.

    Returns (partial_sum, bound) where bound is the m-th power of the full
    displacement weight sum; the partial sum approaches it from below as
    the radius grows but never exceeds it (the closing jump only removes
    terms relative to the unconstrained increment sum).
    """
    if m < 2:
        raise ParameterError(f"support length must be at least 2, got {m}")
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    origin = (0,) * dim
    ball = list(iter_sites(centered_box(radius, dim))) if radius >= 0 else []

    def sq(a: Site, b: Site) -> float:
        return float(sum((x - y) ** 2 for x, y in zip(a, b)))

    partial = 0.0
    for tail in itertools.product(ball, repeat=m - 1):
        path = (origin, *tail)
        if any(a == b for a, b in zip(path, path[1:])):
            continue
        if path[-1] == origin:
            continue
        energy = sum(sq(a, b) for a, b in zip(path, path[1:])) + sq(path[-1], origin)
        partial += math.exp(-alpha * energy)
    full, _ = weight_sum(Quadratic(dim=dim), alpha, tol=tol)
    return partial, full**m


@dataclass(frozen=True)
class GoodDensityResult:
    status: str  # good | not_good | unknown
    provenance: str  # derived | asserted


def good_density(
    potential: Potential, rho: float, override: str | None = None
) -> GoodDensityResult:
    """Good when every zero-potential jump is shorter than one lattice
    step; longer zero-energy jumps would need a percolation threshold we
    do not compute, so the result is unknown unless asserted."""
    if override is not None:
        if override not in ("good", "not_good"):
            raise ParameterError(f"override must be good or not_good, got {override}")
        return GoodDensityResult(status=override, provenance="asserted")
    if jump_range(potential) < 1.0:
        return GoodDensityResult(status="good", provenance="derived")
    return GoodDensityResult(status="unknown", provenance="derived")


@dataclass(frozen=True)
class RegimeReport:
    """All regime constants and condition checks for one parameter set."""

    rho: float
    alpha: float
    dim: int
    potential_digest: str
    root: float
    factor: float
    critical_alpha_quadratic: float | None
    weight_sum_half: float
    weight_sum_full: float
    existence_ok: bool
    uniqueness_ok: bool
    uniqueness_ok_closed_bound: bool | None
    good_density: str
    good_density_provenance: str

    def to_json(self) -> str:
        doc = {
            "rho": self.rho,
            "alpha": self.alpha,
            "dim": self.dim,
            "potential": self.potential_digest,
            "root": self.root,
            "site_factor": self.factor,
            "critical_alpha_quadratic": self.critical_alpha_quadratic,
            "weight_sum_half": self.weight_sum_half,
            "weight_sum_full": self.weight_sum_full,
            "existence_ok": self.existence_ok,
            "uniqueness_ok": self.uniqueness_ok,
            "uniqueness_ok_closed_bound": self.uniqueness_ok_closed_bound,
            "good_density": self.good_density,
            "good_density_provenance": self.good_density_provenance,
        }
        return json.dumps(doc)


def evaluate_regime(
    rho: float,
    alpha: float,
    potential: Potential,
    tol: float = 1e-9,
    good_density_override: str | None = None,
) -> RegimeReport:
    """Evaluate every constant and condition at (rho, alpha, potential).

    existence_ok:  factor * weight_sum(alpha/2) < 1
    uniqueness_ok: factor * weight_sum(alpha)   < root

    For the quadratic potential the closed-form weight-sum bound gives an
    additional uniqueness check whose threshold is exactly the critical
    temperature reported.
    """
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    root = uniqueness_root()
    factor = site_factor(rho)
    ws_half, _ = weight_sum(potential, alpha / 2.0, tol=tol)
    ws_full, _ = weight_sum(potential, alpha, tol=tol)
    quadratic = isinstance(potential, Quadratic)
    closed = None
    crit = None
    if quadratic:
        closed = factor * weight_sum_closed_bound(alpha, potential.dim) < root
        crit = critical_alpha(rho, potential.dim)
    gd = good_density(potential, rho, override=good_density_override)
    return RegimeReport(
        rho=rho,
        alpha=alpha,
        dim=potential.dim,
        potential_digest=potential.digest(),
        root=root,
        factor=factor,
        critical_alpha_quadratic=crit,
        weight_sum_half=ws_half,
        weight_sum_full=ws_full,
        existence_ok=factor * ws_half < 1.0,
        uniqueness_ok=factor * ws_full < root,
        uniqueness_ok_closed_bound=closed,
        good_density=gd.status,
        good_density_provenance=gd.provenance,
    )
