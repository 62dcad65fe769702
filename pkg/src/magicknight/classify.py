"""Magic / semi-magic / quasi / near classification of tour line-sum profiles."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .board import MagicConstants, magic_constants
from .tour import LineSumProfile, Tour, is_closed, line_sums


class Direction(Enum):
    SHORT = "short"
    LONG = "long"


class Refinement(Enum):
    PLAIN = "plain"
    QUASI = "quasi"
    NEAR = "near"


class ClassKind(Enum):
    MAGIC = "magic"
    SEMI = "semi"
    NONE = "none"


@dataclass(frozen=True)
class MagicClass:
    """Exclusive classification: magic, semi-magic (with the magic direction
    and a plain/quasi/near refinement), or non-magic."""

    kind: ClassKind
    direction: Direction | None = None
    refinement: Refinement | None = None

    @property
    def token(self) -> str:
        """Serialized name: magic, semi_short, quasi_long, near_short, ..., none."""
        if self.kind is ClassKind.MAGIC:
            return "magic"
        if self.kind is ClassKind.NONE:
            return "none"
        assert self.direction is not None and self.refinement is not None
        prefix = "semi" if self.refinement is Refinement.PLAIN else self.refinement.value
        return f"{prefix}_{self.direction.value}"

    @classmethod
    def from_token(cls, token: str) -> MagicClass:
        if token == "magic":
            return cls(ClassKind.MAGIC)
        if token == "none":
            return cls(ClassKind.NONE)
        prefix, _, dir_txt = token.partition("_")
        refinements = {"semi": Refinement.PLAIN, "quasi": Refinement.QUASI, "near": Refinement.NEAR}
        directions = {"short": Direction.SHORT, "long": Direction.LONG}
        if prefix not in refinements or dir_txt not in directions:
            raise ValueError(f"unknown class {token!r}")
        return cls(ClassKind.SEMI, directions[dir_txt], refinements[prefix])


MAGIC = MagicClass(ClassKind.MAGIC)
NON_MAGIC = MagicClass(ClassKind.NONE)


@dataclass(frozen=True)
class ClassificationReport:
    profile: LineSumProfile
    constants: MagicConstants
    magic_class: MagicClass
    off_direction_distinct_values: tuple[int, ...]
    contains_mc: bool


def _all_at_constant(sums: tuple[int, ...], n_lines: int, total: int) -> bool:
    # all lines hit the constant iff each sum * n_lines == total
    return all(s * n_lines == total for s in sums)


def classify(t: Tour) -> ClassificationReport:
    """Classify a tour's line-sum profile.

    On square boards the short/long distinction is presentational (all lines
    have the same length), so the magic direction is reported as SHORT
    whichever physical direction carries the constant; the off-direction
    values always come from the physically non-magic direction.
    """
    prof = line_sums(t)
    consts = magic_constants(t.dims)
    h, w = t.dims.height, t.dims.width
    total = consts.total
    rows_magic = _all_at_constant(prof.short_sums, h, total)
    cols_magic = _all_at_constant(prof.long_sums, w, total)

    if rows_magic and cols_magic:
        return ClassificationReport(prof, consts, MAGIC, (), False)
    if not rows_magic and not cols_magic:
        return ClassificationReport(prof, consts, NON_MAGIC, (), False)

    if rows_magic:
        off_sums, off_mc = prof.long_sums, consts.long_mc
        direction = Direction.SHORT
    else:
        off_sums, off_mc = prof.short_sums, consts.short_mc
        direction = Direction.SHORT if t.dims.is_square else Direction.LONG

    distinct = tuple(sorted(set(off_sums)))
    contains_mc = off_mc is not None and off_mc in distinct
    others = [v for v in distinct if v != off_mc]
    # a single off value, or MC plus exactly one other, would contradict the
    # fixed total N(N+1)/2
    assert len(others) >= 2, f"impossible off-direction profile {distinct}"
    if len(others) == 2:
        refinement = Refinement.NEAR if contains_mc else Refinement.QUASI
    else:
        refinement = Refinement.PLAIN
    cls = MagicClass(ClassKind.SEMI, direction, refinement)
    return ClassificationReport(prof, consts, cls, distinct, contains_mc)


def _direction_sums(t: Tour, direction: Direction) -> tuple[int, ...]:
    prof = line_sums(t)
    return prof.short_sums if direction is Direction.SHORT else prof.long_sums


def distinct_value_count(t: Tour, direction: Direction) -> int:
    """Number of distinct sums among that direction's lines."""
    return len(set(_direction_sums(t, direction)))


def sums_are_consecutive(t: Tour, direction: Direction) -> bool:
    """True iff the sorted distinct sums form a run of consecutive integers."""
    values = set(_direction_sums(t, direction))
    return max(values) - min(values) + 1 == len(values)


def summary_stats(t: Tour) -> tuple[int, int, int, int, int, int, int]:
    """Stats tuple (closed, s_mc, s_distinct, s_consec, l_mc, l_distinct,
    l_consec) as the search kernels compute per leaf: the count of lines at
    the magic constant, the count of distinct sums, and the consecutive-run
    flag, for each direction."""
    prof = line_sums(t)
    h, w = t.dims.height, t.dims.width
    total = t.dims.cells * (t.dims.cells + 1) // 2

    def stats(sums: tuple[int, ...], n_lines: int) -> tuple[int, int, int]:
        at_mc = sum(1 for s in sums if s * n_lines == total)
        distinct = len(set(sums))
        consec = 1 if max(sums) - min(sums) + 1 == distinct else 0
        return at_mc, distinct, consec

    s_mc, s_dist, s_consec = stats(prof.short_sums, h)
    l_mc, l_dist, l_consec = stats(prof.long_sums, w)
    return (1 if is_closed(t) else 0, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec)
