"""Axis-aligned integer boxes on the lattice.

A box is a tuple of per-axis inclusive (lo, hi) integer bounds, e.g.
``((0, 9),)`` in one dimension or ``((-2, 2), (-2, 2))`` in two.
"""

from __future__ import annotations

import itertools
from typing import Iterator

from .errors import ParameterError

Site = tuple[int, ...]
Box = tuple[tuple[int, int], ...]


def validate_box(box) -> Box:
    """Normalize and check a box; raises ParameterError if empty or malformed."""
    try:
        normed = tuple((int(lo), int(hi)) for lo, hi in box)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"malformed box {box!r}") from exc
    if not normed:
        raise ParameterError("box must have at least one axis")
    for lo, hi in normed:
        if hi < lo:
            raise ParameterError(f"empty box axis ({lo}, {hi})")
    return normed


def box_dim(box: Box) -> int:
    return len(box)


def box_volume(box: Box) -> int:
    n = 1
    for lo, hi in box:
        n *= hi - lo + 1
    return n


def box_contains(box: Box, site: Site) -> bool:
    return len(site) == len(box) and all(
        lo <= c <= hi for (lo, hi), c in zip(box, site)
    )


def box_subset(inner: Box, outer: Box) -> bool:
    return len(inner) == len(outer) and all(
        olo <= ilo and ihi <= ohi for (ilo, ihi), (olo, ohi) in zip(inner, outer)
    )


def iter_sites(box: Box) -> Iterator[Site]:
    """Sites of the box in lexicographic order."""
    return itertools.product(*(range(lo, hi + 1) for lo, hi in box))


def box_hull(box: Box, sites) -> Box:
    """Smallest box containing ``box`` and every site in ``sites``."""
    lows = [lo for lo, _ in box]
    highs = [hi for _, hi in box]
    for site in sites:
        for i, c in enumerate(site):
            lows[i] = min(lows[i], c)
            highs[i] = max(highs[i], c)
    return tuple(zip(lows, highs))


def centered_box(n: int, dim: int) -> Box:
    """The box [-n, n]^dim."""
    if n < 0:
        raise ParameterError("centered box radius must be nonnegative")
    return tuple((-n, n) for _ in range(dim))


def parse_box(text: str) -> Box:
    """Parse 'lo:hi,lo:hi,...' into a box."""
    axes = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ParameterError(f"bad box axis {part!r}, expected lo:hi")
        axes.append((int(lo), int(hi)))
    return validate_box(axes)


def format_box(box: Box) -> str:
    return ",".join(f"{lo}:{hi}" for lo, hi in box)
