"""Jump potentials and their lattice weight sums.

A potential V assigns a nonnegative energy to a displacement between two
sites. Two built-ins are provided: the quadratic potential ``|x|^2`` and
the continuum comparison potential ``max(|x|^2 - 2*sqrt(d)*|x|, 0)`` that
lower-bounds squared continuum distances after flooring both endpoints to
the lattice. Radial step-table potentials can be loaded from text files.

The central quantity is the weight sum over all nonzero lattice
displacements, ``sum_{x != 0} exp(-alpha * V(x))``. It is evaluated by
direct enumeration inside a sup-norm ball together with a certified upper
bound on the discarded tail, so the returned value is within the requested
tolerance of the full series.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path

from .boxes import centered_box, iter_sites
from .errors import DomainError, ParameterError


def _check_dim(potential: "Potential", delta) -> tuple:
    delta = tuple(delta)
    if len(delta) != potential.dim:
        raise DomainError(
            f"displacement {delta} has dimension {len(delta)}, potential expects {potential.dim}"
        )
    return delta


@dataclass(frozen=True)
class Potential:
    """Base class. Subclasses are immutable and safe to share."""

    dim: int

    def value(self, delta) -> float:
        raise NotImplementedError

    def radial_floor(self, m: int) -> float:
        """Lower bound for V over the sup-norm shell of radius m; must be
        nondecreasing in m with unbounded increments (used to certify tails)."""
        raise NotImplementedError

    def min_sum_radius(self) -> int:
        return 1

    def zero_search_radius(self) -> int | None:
        """A radius guaranteed to contain every zero of V, or None if unknown."""
        return None

    def digest(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Quadratic(Potential):
    """V(x) = |x|^2 (squared Euclidean norm)."""

    def value(self, delta) -> float:
        delta = _check_dim(self, delta)
        return float(sum(c * c for c in delta))

    def radial_floor(self, m: int) -> float:
        return float(m * m)

    def zero_search_radius(self) -> int:
        return 0

    def digest(self) -> str:
        return f"quadratic(d={self.dim})"


@dataclass(frozen=True)
class ContinuumComparison(Potential):
    """V(x) = max(|x|^2 - 2*sqrt(d)*|x|, 0).

    Vanishes on the ball |x| <= 2*sqrt(d), so it admits zero-energy jumps
    of positive length.
    """

    def value(self, delta) -> float:
        delta = _check_dim(self, delta)
        norm = math.sqrt(sum(c * c for c in delta))
        return max(norm * norm - 2.0 * math.sqrt(self.dim) * norm, 0.0)

    def radial_floor(self, m: int) -> float:
        # On the shell |x|_inf = m the Euclidean norm is at least m, and
        # r -> max(r^2 - 2 sqrt(d) r, 0) is nondecreasing for r >= sqrt(d).
        return max(float(m * m) - 2.0 * math.sqrt(self.dim) * m, 0.0)

    def zero_search_radius(self) -> int:
        return int(math.ceil(2.0 * math.sqrt(self.dim)))

    def digest(self) -> str:
        return f"continuum-comparison(d={self.dim})"


@dataclass(frozen=True)
class RadialTable(Potential):
    """Radial step potential from tabulated (radius^2, value) rows.

    The value at displacement x is the row with the largest tabulated
    radius^2 not exceeding |x|^2; no interpolation. Rows must start at
    radius^2 = 0 and be strictly increasing in radius^2.

    Weight sums need a tail certificate: ``envelope_coeff`` asserts that
    the underlying potential satisfies V(x) >= envelope_coeff * |x|^2 for
    every lattice x beyond the last tabulated radius. Without it, weight
    sums refuse to run.
    """

    rows: tuple[tuple[float, float], ...]
    envelope_coeff: float | None = None

    def __post_init__(self):
        if not self.rows:
            raise ParameterError("radial table must have at least one row")
        if self.rows[0][0] != 0.0:
            raise ParameterError("radial table must start at radius^2 = 0")
        r2s = [r2 for r2, _ in self.rows]
        if any(b <= a for a, b in zip(r2s, r2s[1:])):
            raise ParameterError("radial table radii must be strictly increasing")
        if any(v < 0 for _, v in self.rows):
            raise ParameterError("radial table values must be nonnegative")
        if self.envelope_coeff is not None and self.envelope_coeff <= 0:
            raise ParameterError("envelope coefficient must be positive")

    def value(self, delta) -> float:
        delta = _check_dim(self, delta)
        r2 = float(sum(c * c for c in delta))
        idx = bisect.bisect_right([row[0] for row in self.rows], r2) - 1
        return self.rows[idx][1]

    def radial_floor(self, m: int) -> float:
        if self.envelope_coeff is None:
            raise ParameterError(
                "radial table has no quadratic envelope; cannot certify tails"
            )
        return self.envelope_coeff * m * m

    def min_sum_radius(self) -> int:
        # The envelope only covers displacements beyond the table, so the
        # enumerated ball must cover every tabulated radius.
        return max(1, int(math.ceil(math.sqrt(self.rows[-1][0]))))

    def digest(self) -> str:
        body = ";".join(f"{r2}:{v}" for r2, v in self.rows)
        return f"radial-table(d={self.dim},rows={body},env={self.envelope_coeff})"

    @classmethod
    def from_file(cls, path, dim: int, envelope_coeff: float | None = None) -> "RadialTable":
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError(f"radial table line needs two columns: {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
        return cls(dim=dim, rows=tuple(rows), envelope_coeff=envelope_coeff)


def _shell_count(m: int, dim: int) -> int:
    """Number of lattice sites with sup-norm exactly m >= 1."""
    return (2 * m + 1) ** dim - (2 * m - 1) ** dim


def _tail_bound(potential: Potential, alpha: float, radius: int) -> float:
    """Certified upper bound on sum_{|x|_inf > radius} exp(-alpha V(x)).

    Shell m contributes at most shell_count(m) * exp(-alpha * floor(m)).
    Successive shell bounds shrink by at least
    3^d * exp(-alpha * (floor(m+1) - floor(m))); once that factor drops
    below 1/2 the remainder is dominated by a geometric series.
    """
    d = potential.dim
    m = radius + 1
    total = 0.0
    for _ in range(1_000_000):
        term = _shell_count(m, d) * math.exp(-alpha * potential.radial_floor(m))
        inc = potential.radial_floor(m + 1) - potential.radial_floor(m)
        ratio = (3.0**d) * math.exp(-alpha * inc)
        if ratio <= 0.5:
            return total + term / (1.0 - ratio)
        total += term
        m += 1
    raise ParameterError(
        f"tail of the weight series does not certify at alpha={alpha}; "
        "the potential grows too slowly"
    )


def weight_sum(potential: Potential, alpha: float, tol: float = 1e-9) -> tuple[float, int]:
    """Sum of exp(-alpha V(x)) over nonzero lattice displacements x.

    Returns (value, radius): the value enumerates all x with |x|_inf <=
    radius, x != 0, and the discarded tail is certified below tol.
    """
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    radius = potential.min_sum_radius()
    while _tail_bound(potential, alpha, radius) >= tol:
        radius += 1
        if radius > 10_000:
            raise ParameterError(
                f"weight series for {potential.digest()} did not reach tol={tol}"
            )
    value = 0.0
    origin = (0,) * potential.dim
    for site in iter_sites(centered_box(radius, potential.dim)):
        if site != origin:
            value += math.exp(-alpha * potential.value(site))
    return value, radius


def weight_sum_closed_bound(alpha: float, dim: int) -> float:
    """Closed-form upper bound (1 + sqrt(pi/alpha))^dim - 1 for the
    quadratic potential's weight sum."""
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return (1.0 + math.sqrt(math.pi / alpha)) ** dim - 1.0


def jump_range(potential: Potential, search_radius: int | None = None) -> float:
    """Largest Euclidean length of a nonzero lattice displacement with zero
    potential, or 0.0 if there is none.

    ``search_radius`` must cover the whole zero set; the built-ins know
    their own, table potentials derive one from the tabulated radii.
    """
    if search_radius is None:
        search_radius = potential.zero_search_radius()
        if search_radius is None and isinstance(potential, RadialTable):
            search_radius = potential.min_sum_radius()
        if search_radius is None:
            raise ParameterError("search_radius required for this potential")
    best = 0.0
    origin = (0,) * potential.dim
    for site in iter_sites(centered_box(search_radius, potential.dim)):
        if site != origin and potential.value(site) == 0.0:
            best = max(best, math.sqrt(sum(c * c for c in site)))
    return best


def potential_from_name(name: str, dim: int) -> Potential:
    """Resolve a CLI potential spec: 'quadratic', 'continuum-comparison',
    or 'radial-table:PATH[:ENVELOPE]'."""
    if name == "quadratic":
        return Quadratic(dim=dim)
    if name == "continuum-comparison":
        return ContinuumComparison(dim=dim)
    if name.startswith("radial-table:"):
        rest = name.split(":", 1)[1]
        if ":" in rest:
            path, coeff = rest.rsplit(":", 1)
            return RadialTable.from_file(path, dim=dim, envelope_coeff=float(coeff))
        return RadialTable.from_file(rest, dim=dim)
    raise ParameterError(f"unknown potential {name!r}")
