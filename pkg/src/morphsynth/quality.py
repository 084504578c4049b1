"""Quality vectors, the dominance order and Pareto layering."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import accumulate
from typing import Callable, Hashable, Iterable, Optional, Sequence, TypeVar

from .model import CompatTable, MorphError, Ref, format_ref

T = TypeVar("T")


class MissingCompatError(MorphError):
    def __init__(self, a: Ref, b: Ref):
        self.pair = (a, b)
        super().__init__(f"missing compatibility entry ({format_ref(a)},{format_ref(b)})")


def _trim(n: Sequence[int]) -> tuple[int, ...]:
    n = tuple(n)
    end = len(n)
    while end and n[end - 1] == 0:
        end -= 1
    return n[:end]


@dataclass(frozen=True, eq=False)
class QualityVector:
    """(w; n): minimum compatibility and per-tier counts.

    Equality and hashing ignore trailing zero tiers, so ``(3;2,0)`` equals
    ``(3;2,0,0)``.
    """

    w: int
    n: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", tuple(self.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QualityVector):
            return NotImplemented
        return self.w == other.w and _trim(self.n) == _trim(other.n)

    def __hash__(self) -> int:
        return hash((self.w, _trim(self.n)))

    @property
    def size(self) -> int:
        return sum(self.n)

    def padded(self, length: int) -> "QualityVector":
        """Pad with zero tiers (or drop trailing zero tiers) to ``length``."""
        n = _trim(self.n)
        if len(n) > length:
            raise ValueError(f"{self} has non-zero tiers beyond {length}")
        return QualityVector(self.w, n + (0,) * (length - len(n)))

    def prefix_sums(self, length: Optional[int] = None) -> tuple[int, ...]:
        n = self.n if length is None else self.padded(max(length, len(_trim(self.n)))).n
        return tuple(accumulate(n))

    def __str__(self) -> str:
        return f"({self.w};{','.join(str(c) for c in self.n)})"

    @classmethod
    def parse(cls, text: str) -> "QualityVector":
        """Inverse of ``str``; whitespace is tolerated: ``( 3 ; 4, 0, 0 )``."""
        body = text.strip()
        if not (body.startswith("(") and body.endswith(")")) or ";" not in body:
            raise ValueError(f"not a quality vector: {text!r}")
        w_text, n_text = body[1:-1].split(";", 1)
        counts = [c.strip() for c in n_text.split(",") if c.strip()]
        return cls(int(w_text), tuple(int(c) for c in counts))


class Dominance(enum.Enum):
    STRICTLY_DOMINATES = "strictly-dominates"
    EQUAL = "equal"
    INCOMPARABLE_OR_DOMINATED = "incomparable-or-dominated"


def weakly_dominates(a: QualityVector, b: QualityVector) -> bool:
    if a.w < b.w:
        return False
    length = max(len(a.n), len(b.n))
    pa = a.padded(max(length, len(_trim(a.n)))).n
    pb = b.padded(max(length, len(_trim(b.n)))).n
    sa = sb = 0
    for x, y in zip(pa, pb):
        sa += x
        sb += y
        if sa < sb:
            return False
    return True


def dominates(a: QualityVector, b: QualityVector) -> Dominance:
    if a == b:
        return Dominance.EQUAL
    if weakly_dominates(a, b):
        return Dominance.STRICTLY_DOMINATES
    return Dominance.INCOMPARABLE_OR_DOMINATED


def strictly_dominates(a: QualityVector, b: QualityVector) -> bool:
    return dominates(a, b) is Dominance.STRICTLY_DOMINATES


def ideal_point(m: int, scale: int, depth: int) -> QualityVector:
    return QualityVector(scale, (m,) + (0,) * (depth - 1))


def tier_counts(priorities: Iterable[int], depth: int) -> tuple[int, ...]:
    counts = [0] * depth
    for p in priorities:
        if p < 1:
            raise ValueError(f"priority must be >= 1, got {p}")
        if p > depth:
            counts.extend([0] * (p - depth))
            depth = p
        counts[p - 1] += 1
    return tuple(counts)


def quality_of(
    picks: Sequence[tuple[Ref, int]],
    compat: CompatTable,
    depth: int,
    assume_missing: Optional[int] = None,
    pairs: Optional[Iterable[tuple[int, int]]] = None,
) -> QualityVector:
    """Quality of a selection given as ``(ref, priority)`` picks.

    ``pairs`` restricts the minimum to the listed index pairs (used for
    adjacency-only aggregation); by default every pair of picks with
    different owners counts.  A selection with no counted pair has the
    vacuous minimum ``compat.scale_max``.  Missing entries raise
    ``MissingCompatError`` unless ``assume_missing`` supplies a value.
    """
    if pairs is None:
        pairs = ((i, j) for i in range(len(picks)) for j in range(i + 1, len(picks)))
    w = compat.scale_max
    for i, j in pairs:
        a, b = picks[i][0], picks[j][0]
        if a[0] == b[0]:
            continue
        value = compat.get(a, b)
        if value is None:
            if assume_missing is None:
                raise MissingCompatError(a, b)
            value = assume_missing
        w = min(w, value)
    return QualityVector(w, tier_counts((p for _, p in picks), depth))


def order_key(q: QualityVector, depth: int) -> tuple:
    """Sort key: w descending, then prefix sums descending.

    This is a linear extension of the dominance order, so a dominating
    vector always sorts strictly before every vector it dominates.
    """
    length = max(depth, len(_trim(q.n)))
    return (-q.w,) + tuple(-s for s in q.prefix_sums(length))


def pareto_layers(
    items: Sequence[T],
    depth: Optional[int] = None,
    quality: Callable[[T], QualityVector] = lambda item: item[1],
    ident: Callable[[T], Hashable] = lambda item: item[0],
) -> list[list[T]]:
    """Peel non-dominated layers from ``items``.

    By default items are ``(id, QualityVector)`` pairs; pass ``quality`` and
    ``ident`` accessors for richer records.  At most ``depth`` layers are
    returned (all of them when ``depth`` is None).  Within a layer, items are
    ordered by w descending, prefix sums descending, then id.
    """
    if depth is not None and depth < 1:
        raise ValueError("depth must be >= 1")
    if not items:
        return []
    tiers = max(len(_trim(quality(it).n)) for it in items)
    ranked = sorted(items, key=lambda it: (order_key(quality(it), tiers), ident(it)))

    # Dominance only looks at the vector, so peel the distinct vectors and
    # let every item follow its vector into a layer.
    distinct = list(dict.fromkeys(quality(it) for it in ranked))
    layer_of: dict[QualityVector, int] = {}
    count = 0
    remaining = distinct
    while remaining and (depth is None or count < depth):
        front: list[QualityVector] = []
        rest: list[QualityVector] = []
        # Anything that could dominate a vector precedes it in sorted order,
        # so checking against the front built so far is sufficient.
        for q in remaining:
            if any(strictly_dominates(f, q) for f in front):
                rest.append(q)
            else:
                front.append(q)
        layer_of.update((q, count) for q in front)
        count += 1
        remaining = rest

    layers: list[list[T]] = [[] for _ in range(count)]
    for it in ranked:
        k = layer_of.get(quality(it))
        if k is not None:
            layers[k].append(it)
    return layers
