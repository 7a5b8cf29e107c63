"""Birth-and-death machinery for sampling finite-volume specifications.

The free process drops copies of every admissible cycle at rate equal to
the cycle's weight and removes each copy at rate one; its time marginal is
product-Poisson over cycles, shifted by one on every boundary cycle. The
loss network is the thinning of the free process by exclusion: a birth is
effective only when the cycle is point-disjoint from the boundary cycles
and from every effective copy still alive. Its time marginal is exactly
the finite-volume specification, which turns a backward construction of
the thinning into a perfect sampler.

Sampling protocol. Marks are generated on a backward window [-T, 0] from
per-subwindow random streams keyed by (seed, subwindow), so extending the
window never changes marks already drawn. A window is accepted when there
is an idle instant of the generated marks that lies before the birth of
every mark alive at time zero and at least ``guard`` after the left edge,
where guard is sized so that the chance of any pre-window copy surviving
past the idle instant is below 1e-14. Crossing such an instant, no
ancestor chain of any mark alive at zero can reach unseen territory, so
the thinned state at zero is window-independent. Failing windows double
until a configured cap.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .boxes import box_subset, validate_box
from .cyclegas import Cycle, GasConfig, compatible, cycle_weight
from .environment import Environment, _entropy, points_of
from .errors import NonterminationError, ParameterError, WindowTooSmallError
from .exactgibbs import BoundarySpec, boundary_cycles, enumerate_cycles
from .potential import Potential

# Survival probability below which pre-window contamination is ignored.
_TAIL_EPSILON = 1e-14


@dataclass(frozen=True)
class Mark:
    """One birth attempt: a cycle, its birth time, and its lifetime."""

    cycle: Cycle
    birth: float
    lifetime: float

    def __post_init__(self):
        if self.lifetime <= 0:
            raise ParameterError("mark lifetime must be positive")

    @property
    def death(self) -> float:
        return self.birth + self.lifetime

    def alive_at(self, t: float) -> bool:
        return self.birth <= t < self.death


@dataclass(frozen=True)
class MarkSet:
    """Marks on a time window, sorted by birth (ties by cycle order)."""

    window: tuple[float, float]
    marks: tuple[Mark, ...]
    weights_digest: str = ""

    def __post_init__(self):
        lo, hi = self.window
        if hi < lo:
            raise ParameterError("empty mark window")
        ordered = tuple(
            sorted(self.marks, key=lambda m: (m.birth, m.cycle.points))
        )
        object.__setattr__(self, "marks", ordered)
        for m in ordered:
            if not (lo <= m.birth <= hi):
                raise ParameterError(f"mark birth {m.birth} outside window {self.window}")

    def __len__(self) -> int:
        return len(self.marks)

    def __iter__(self):
        return iter(self.marks)


@dataclass(frozen=True)
class ThinningResult:
    """Indices of kept and deleted marks plus the stage at which each mark
    was classified (stage 0 marks clash with the boundary)."""

    kept: frozenset[int]
    deleted: frozenset[int]
    generations: dict[int, int]


def weights_digest(gammas) -> str:
    h = hashlib.sha256()
    for cycle, w in gammas:
        h.update(repr((cycle.points, float(w))).encode())
    return h.hexdigest()[:16]


def _validate_weights(gammas) -> None:
    for _, w in gammas:
        if not (0.0 < w <= 1.0):
            raise ParameterError(f"cycle weight {w} outside (0, 1]")


def sample_free_state(gammas, boundary, seed: int) -> dict[Cycle, int]:
    """One draw from the free process invariant law: independent
    Poisson(weight) copies per cycle, plus one pinned copy per boundary
    cycle."""
    _validate_weights(gammas)
    rng = np.random.default_rng(_entropy(seed))
    state: dict[Cycle, int] = {}
    for cycle, w in gammas:
        n = int(rng.poisson(w))
        if cycle in boundary:
            n += 1
        if n:
            state[cycle] = n
    for cycle in boundary:
        if cycle not in {c for c, _ in gammas}:
            state[cycle] = state.get(cycle, 0) + 1
    return state


def generate_marks(gammas, window, seed: int) -> MarkSet:
    """A realization of the driving mark process on the window: births are
    Poisson with total rate sum(weights), each mark's cycle is chosen
    proportionally to weight, lifetimes are unit-rate exponential."""
    _validate_weights(gammas)
    lo, hi = float(window[0]), float(window[1])
    if hi < lo:
        raise ParameterError("empty mark window")
    cycles = [c for c, _ in gammas]
    weights = np.array([w for _, w in gammas], dtype=float)
    total = float(weights.sum())
    rng = np.random.default_rng(_entropy(seed))
    marks: list[Mark] = []
    if total > 0 and hi > lo:
        n = int(rng.poisson(total * (hi - lo)))
        births = rng.uniform(lo, hi, size=n)
        which = rng.choice(len(cycles), size=n, p=weights / total)
        lifetimes = rng.exponential(1.0, size=n)
        marks = [
            Mark(cycles[k], float(b), float(life))
            for k, b, life in zip(which, births, lifetimes)
        ]
    return MarkSet(window=(lo, hi), marks=tuple(marks), weights_digest=weights_digest(gammas))


def free_state(marks: MarkSet, boundary, t: float) -> dict[Cycle, int]:
    """Counts of marks alive at time t, shifted by one on boundary cycles.
    Exact for the stationary free process once t is far from the window's
    left edge."""
    state: dict[Cycle, int] = {}
    for m in marks:
        if m.alive_at(t):
            state[m.cycle] = state.get(m.cycle, 0) + 1
    for cycle in boundary:
        state[cycle] = state.get(cycle, 0) + 1
    return state


def free_event_trajectory(marks: MarkSet, boundary) -> list[tuple[float, dict[Cycle, int]]]:
    """free_state evaluated just after every birth and death inside the
    window, via a single sweep."""
    lo, hi = marks.window
    events: list[tuple[float, Cycle, int]] = []
    for m in marks:
        events.append((m.birth, m.cycle, +1))
        events.append((m.death, m.cycle, -1))
    events.sort(key=lambda e: e[0])
    base = {cycle: 1 for cycle in boundary}
    alive: dict[Cycle, int] = dict(base)
    out = []
    i = 0
    while i < len(events):
        t = events[i][0]
        while i < len(events) and events[i][0] == t:
            _, cycle, delta = events[i]
            alive[cycle] = alive.get(cycle, 0) + delta
            if alive[cycle] == 0:
                del alive[cycle]
            i += 1
        if lo <= t <= hi:
            out.append((t, dict(alive)))
    return out


def _first_generation(index: int, marks: tuple[Mark, ...]) -> list[int]:
    """Indices of marks with an incompatible cycle whose lifetime covers
    this mark's birth."""
    me = marks[index]
    out = []
    for j, other in enumerate(marks):
        if other.birth >= me.birth:
            break
        if other.death > me.birth and not compatible(other.cycle, me.cycle):
            out.append(j)
    return out


def _idle_gap_exists(intervals, lo: float, hi: float) -> bool:
    """True when [lo, hi) is not fully covered by the union of the
    half-open intervals."""
    if hi <= lo:
        return False
    cursor = lo
    for b, d in sorted(intervals):
        if b > cursor:
            return True
        cursor = max(cursor, d)
        if cursor >= hi:
            return False
    return cursor < hi


def ancestor_set(mark: Mark, marks: MarkSet, guard: float = 0.0) -> frozenset[Mark]:
    """Transitive closure of first-generation ancestors of ``mark``.

    The first generation consists of marks with an incompatible cycle that
    are alive at the mark's birth; later generations iterate the rule.
    With ``guard`` > 0 the leading [t_lo, t_lo + guard) stretch of the
    window counts as contaminated, and the call raises WindowTooSmallError
    unless an idle instant of the mark process separates the contaminated
    stretch from every ancestor birth.
    """
    ordered = marks.marks
    pending = [mark]
    seen: set[int] = set()
    clan: list[Mark] = []
    while pending:
        current = pending.pop()
        for j, other in enumerate(ordered):
            if other.birth >= current.birth:
                break
            if j in seen:
                continue
            if other.death > current.birth and not compatible(other.cycle, current.cycle):
                seen.add(j)
                clan.append(other)
                pending.append(other)
    if guard > 0.0:
        t_lo = marks.window[0]
        root = min([m.birth for m in clan] + [mark.birth])
        intervals = [(m.birth, m.death) for m in ordered if m.birth < root]
        if root <= t_lo + guard or not _idle_gap_exists(intervals, t_lo + guard, root):
            raise WindowTooSmallError(
                f"ancestor set reaching {root:.3f} cannot be certified against "
                f"the window edge at {t_lo:.3f} (guard {guard:.3f})"
            )
    return frozenset(clan)


def thin_marks(marks: MarkSet, boundary) -> ThinningResult:
    """Classify every mark as kept or deleted.

    A mark whose cycle clashes with a boundary cycle is deleted at stage
    zero. Otherwise it is kept exactly when all of its first-generation
    ancestors are deleted; processing marks in birth order makes the
    recursion well-founded. Stages record when the alternating
    kept/deleted construction settles each mark.
    """
    ordered = marks.marks
    boundary = frozenset(boundary)
    kept: set[int] = set()
    deleted: set[int] = set()
    stage: dict[int, int] = {}
    for i, mark in enumerate(ordered):
        if any(not compatible(mark.cycle, b) for b in boundary):
            deleted.add(i)
            stage[i] = 0
            continue
        gen = _first_generation(i, ordered)
        kept_ancestors = [j for j in gen if j in kept]
        if kept_ancestors:
            deleted.add(i)
            stage[i] = min(stage[j] for j in kept_ancestors)
        else:
            kept.add(i)
            stage[i] = 1 + max((stage[j] for j in gen), default=0)
    return ThinningResult(
        kept=frozenset(kept), deleted=frozenset(deleted), generations=stage
    )


def thin_marks_fixed_point(marks: MarkSet, boundary) -> ThinningResult:
    """Literal alternating construction of kept and deleted sets; reference
    implementation for regression against thin_marks."""
    ordered = marks.marks
    boundary = frozenset(boundary)
    first_gen = {i: set(_first_generation(i, ordered)) for i in range(len(ordered))}
    d0 = {
        i
        for i, m in enumerate(ordered)
        if any(not compatible(m.cycle, b) for b in boundary)
    }
    deleted: dict[int, int] = {i: 0 for i in d0}
    kept: dict[int, int] = {}
    n = 0
    while True:
        n += 1
        new_kept = {
            i
            for i in range(len(ordered))
            if i not in d0 and i not in kept and first_gen[i] <= set(deleted)
        }
        for i in new_kept:
            kept[i] = n
        new_deleted = {
            i
            for i in range(len(ordered))
            if i not in deleted and first_gen[i] & set(kept)
        }
        for i in new_deleted:
            deleted[i] = n
        if not new_kept and not new_deleted:
            break
    stage = dict(deleted)
    stage.update(kept)
    return ThinningResult(
        kept=frozenset(kept), deleted=frozenset(deleted), generations=stage
    )


@dataclass(frozen=True)
class PerfectSampleInfo:
    """One perfect sample with the window diagnostics that produced it."""

    gas: GasConfig
    t_final: float
    n_marks: int
    doublings: int


@dataclass(frozen=True)
class CoupledSample:
    """Loss-network states for a boundary condition and for the identity,
    thinned from the identical mark realization."""

    gas_boundary: GasConfig
    gas_identity: GasConfig
    marks: MarkSet
    boundary: frozenset[Cycle]
    t_final: float


class LossNetworkSampler:
    """Perfect sampler for the finite-volume specification of one instance.

    Enumerates the admissible cycles once, then draws independent samples
    via the backward-window construction. Deterministic per seed.
    """

    def __init__(
        self,
        env: Environment,
        lam,
        xi: BoundarySpec | GasConfig | None,
        alpha: float,
        potential: Potential,
        max_points: int = 9,
        max_doublings: int = 10,
    ):
        lam = validate_box(lam)
        if not box_subset(lam, env.box):
            raise ParameterError(f"volume {lam} not contained in {env.box}")
        if alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {alpha}")
        if isinstance(xi, GasConfig):
            xi = BoundarySpec(gas=xi)
        elif xi is None:
            xi = BoundarySpec.identity()
        self.env = env
        self.lam = lam
        self.alpha = alpha
        self.potential = potential
        self.max_doublings = max_doublings
        self.boundary = boundary_cycles(xi, lam, env=env)

        self.gammas = enumerate_cycles(env, lam, max_points=max_points)
        self.weights = np.array(
            [cycle_weight(c, alpha, potential) for c in self.gammas], dtype=float
        )
        self.total_rate = float(self.weights.sum())
        self.digest = weights_digest(list(zip(self.gammas, self.weights)))

        points = points_of(env, lam)
        index = {p: i for i, p in enumerate(points)}
        self._masks = [
            sum(1 << index[p] for p in c.point_set) for c in self.gammas
        ]
        self._boundary_mask = 0
        for b in self.boundary:
            for p in b.point_set:
                if p in index:
                    self._boundary_mask |= 1 << index[p]

        if self.total_rate > 0:
            self._probs = self.weights / self.total_rate
            self._t0 = 4.0 / min(1.0, self.total_rate)
            self._guard = max(
                0.0, math.log(self.total_rate) - math.log(_TAIL_EPSILON)
            )
        else:
            self._probs = None
            self._t0 = 0.0
            self._guard = 0.0

    # -- mark generation -------------------------------------------------

    def _round_bounds(self, r: int) -> tuple[float, float]:
        """Doubling round r covers the window chunk that extends the total
        span from 2^(r-1)*t0 to 2^r*t0 (round 0 covers [-t0, 0])."""
        hi = 0.0 if r == 0 else -(2 ** (r - 1)) * self._t0
        lo = -(2**r) * self._t0
        return lo, hi

    def _round_marks(self, prefix, r: int):
        """Marks of one doubling round, drawn from the stream keyed by
        (prefix, r); earlier rounds stay bitwise stable under extension."""
        rng = np.random.default_rng(np.random.SeedSequence([*prefix, r]))
        lo, hi = self._round_bounds(r)
        n = int(rng.poisson(self.total_rate * (hi - lo)))
        births = rng.uniform(lo, hi, size=n)
        which = rng.choice(len(self.gammas), size=n, p=self._probs)
        lifetimes = rng.exponential(1.0, size=n)
        return births, which, lifetimes

    def _merged_marks(self, cache, prefix, max_round: int):
        for r in range(max_round + 1):
            if r not in cache:
                cache[r] = self._round_marks(prefix, r)
        births = np.concatenate([cache[r][0] for r in range(max_round + 1)])
        which = np.concatenate([cache[r][1] for r in range(max_round + 1)])
        lifetimes = np.concatenate([cache[r][2] for r in range(max_round + 1)])
        order = np.lexsort((which, births))
        return births[order], which[order], lifetimes[order]

    # -- thinning ---------------------------------------------------------

    def _forward_thin(self, births, which, lifetimes):
        """Birth-order pass: a mark is effective iff its cycle's points are
        free of the boundary and of every effective mark alive at its
        birth. Returns indices of kept marks."""
        occupied = 0
        heap: list[tuple[float, int]] = []
        kept = []
        bmask = self._boundary_mask
        masks = self._masks
        for i in range(len(births)):
            b = births[i]
            while heap and heap[0][0] <= b:
                _, mask = heapq.heappop(heap)
                occupied &= ~mask
            m = masks[which[i]]
            if m & bmask or m & occupied:
                continue
            occupied |= m
            heapq.heappush(heap, (b + lifetimes[i], m))
            kept.append(i)
        return kept

    def _window_certified(self, births, deaths, t_lo: float) -> bool:
        """Accept the window when an idle instant separates the guard zone
        from the birth of every mark alive at zero."""
        zone_lo = t_lo + self._guard
        if zone_lo >= 0.0:
            return False
        alive = deaths > 0.0
        hi = float(births[alive].min()) if alive.any() else 0.0
        if hi <= zone_lo:
            return False
        relevant = births < hi
        intervals = list(zip(births[relevant], deaths[relevant]))
        return _idle_gap_exists(intervals, zone_lo, hi)

    # -- sampling ---------------------------------------------------------

    def _run(self, prefix, min_round: int = 0) -> tuple:
        """Returns (births, which, lifetimes, t_final, doublings) for the
        first certified window. Windows too short to clear the guard are
        rejected without generating their marks; that cannot change the
        outcome because certification needs an idle zone of positive
        length."""
        cache: dict[int, tuple] = {}
        for r in range(self.max_doublings + 1):
            t_lo = -(2**r) * self._t0
            if t_lo + self._guard >= 0.0:
                continue
            if r < min_round:
                continue
            births, which, lifetimes = self._merged_marks(cache, prefix, r)
            if self._window_certified(births, births + lifetimes, t_lo):
                return births, which, lifetimes, -t_lo, r
        raise NonterminationError(
            f"no certified window after {self.max_doublings} doublings "
            f"(total rate {self.total_rate:.4g}, t0 {self._t0:.4g})"
        )

    def sample_detailed(self, seed: int, min_round: int = 0) -> PerfectSampleInfo:
        """One draw with window diagnostics. ``min_round`` forces at least
        that many doublings before a window may be accepted (diagnostic;
        a sufficient window yields the same sample either way)."""
        if self.total_rate == 0.0:
            return PerfectSampleInfo(
                gas=GasConfig(frozenset(self.boundary)), t_final=0.0, n_marks=0, doublings=0
            )
        prefix = (seed & 0xFFFFFFFFFFFFFFFF,)
        births, which, lifetimes, t_final, doublings = self._run(prefix, min_round=min_round)
        kept = self._forward_thin(births, which, lifetimes)
        alive = [i for i in kept if births[i] + lifetimes[i] > 0.0]
        cycles = frozenset(self.gammas[which[i]] for i in alive) | self.boundary
        return PerfectSampleInfo(
            gas=GasConfig(cycles),
            t_final=t_final,
            n_marks=len(births),
            doublings=doublings,
        )

    def sample(self, seed: int) -> GasConfig:
        return self.sample_detailed(seed).gas

    def replica_seed(self, seed: int, index: int) -> int:
        """Integer seed reproducing replica ``index`` of a batch run."""
        ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, index])
        return int(ss.generate_state(1, np.uint64)[0])

    def _scale_weights(self, factor: float) -> None:
        """Fault injection for negative-control tests: perturb every cycle
        weight so the sampled law no longer matches the exact table."""
        self.weights = self.weights * factor
        self.total_rate = float(self.weights.sum())
        self._probs = self.weights / self.total_rate
        self._t0 = 4.0 / min(1.0, self.total_rate)
        self._guard = max(0.0, math.log(self.total_rate) - math.log(_TAIL_EPSILON))

    def sample_many(self, seed: int, n: int) -> list[GasConfig]:
        return [self.sample(self.replica_seed(seed, i)) for i in range(n)]

    def markset(self, births, which, lifetimes, t_final: float) -> MarkSet:
        marks = tuple(
            Mark(self.gammas[which[i]], float(births[i]), float(lifetimes[i]))
            for i in range(len(births))
        )
        return MarkSet(window=(-t_final, 0.0), marks=marks, weights_digest=self.digest)

    def coupled_sample(self, seed: int) -> CoupledSample:
        """Thin the identical mark realization once against the boundary
        and once against the identity; the free process dominates both."""
        if self.total_rate == 0.0:
            empty = MarkSet(window=(0.0, 0.0), marks=(), weights_digest=self.digest)
            return CoupledSample(
                gas_boundary=GasConfig(frozenset(self.boundary)),
                gas_identity=GasConfig.empty(),
                marks=empty,
                boundary=frozenset(self.boundary),
                t_final=0.0,
            )
        prefix = (seed & 0xFFFFFFFFFFFFFFFF,)
        births, which, lifetimes, t_final, _ = self._run(prefix)

        kept_b = self._forward_thin(births, which, lifetimes)
        saved_mask = self._boundary_mask
        try:
            self._boundary_mask = 0
            kept_id = self._forward_thin(births, which, lifetimes)
        finally:
            self._boundary_mask = saved_mask

        def state(kept):
            return frozenset(
                self.gammas[which[i]]
                for i in kept
                if births[i] + lifetimes[i] > 0.0
            )

        return CoupledSample(
            gas_boundary=GasConfig(state(kept_b) | self.boundary),
            gas_identity=GasConfig(state(kept_id)),
            marks=self.markset(births, which, lifetimes, t_final),
            boundary=frozenset(self.boundary),
            t_final=t_final,
        )


def perfect_sample(
    env: Environment,
    lam,
    xi,
    alpha: float,
    potential: Potential,
    seed: int,
    max_points: int = 9,
    max_doublings: int = 10,
) -> GasConfig:
    """One exact draw from the finite-volume specification."""
    sampler = LossNetworkSampler(
        env, lam, xi, alpha, potential, max_points=max_points, max_doublings=max_doublings
    )
    return sampler.sample(seed)


def coupled_pair(
    env: Environment,
    lam,
    xi,
    alpha: float,
    potential: Potential,
    seed: int,
    max_points: int = 9,
    max_doublings: int = 10,
) -> CoupledSample:
    """Coupled draw for a boundary condition and the identity, from shared
    randomness."""
    sampler = LossNetworkSampler(
        env, lam, xi, alpha, potential, max_points=max_points, max_doublings=max_doublings
    )
    return sampler.coupled_sample(seed)
