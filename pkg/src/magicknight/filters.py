"""Search filters over per-tour profile summaries.

A filter is a disjunction of conjunctions of atomic constraints on the stats
tuple (closed, s_mc, s_distinct, s_consec, l_mc, l_distinct, l_consec) that
the kernels compute at every search leaf.  The text language supports
`class=<token>`, `mc_lines(short)>=13`, `distinct(long)=2` and conjunction
with `&`; class tokens follow the classification serialization, with the
refinement-inclusive reading (`semi_long` matches plain, quasi and near
tours whose long lines are magic; `semi`, `quasi`, `near` alone match
either direction).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .board import BoardDims

STAT_NAMES = ("closed", "s_mc", "s_dist", "s_consec", "l_mc", "l_dist", "l_consec")
_STAT_INDEX = {name: i for i, name in enumerate(STAT_NAMES)}
_SWAP = {"s_mc": "l_mc", "l_mc": "s_mc", "s_dist": "l_dist", "l_dist": "s_dist",
         "s_consec": "l_consec", "l_consec": "s_consec", "closed": "closed"}
OPS = ("==", ">=", "<=")


@dataclass(frozen=True, order=True)
class Atom:
    stat: str
    op: str
    value: int

    def matches(self, stats: tuple[int, ...]) -> bool:
        v = stats[_STAT_INDEX[self.stat]]
        if self.op == "==":
            return v == self.value
        if self.op == ">=":
            return v >= self.value
        return v <= self.value

    def swapped(self) -> Atom:
        return Atom(_SWAP[self.stat], self.op, self.value)


Clause = tuple[Atom, ...]


def _clause_unsatisfiable(clause: Clause) -> bool:
    lo: dict[str, int] = {}
    hi: dict[str, int] = {}
    for a in clause:
        if a.op in ("==", ">="):
            lo[a.stat] = max(lo.get(a.stat, a.value), a.value)
        if a.op in ("==", "<="):
            hi[a.stat] = min(hi.get(a.stat, a.value), a.value)
    return any(stat in hi and lo[stat] > hi[stat] for stat in lo)


@dataclass(frozen=True)
class Filter:
    """Disjunctive normal form over stats atoms, bound to a board size."""

    clauses: tuple[Clause, ...]
    text: str

    def matches(self, stats: tuple[int, ...]) -> bool:
        return any(all(a.matches(stats) for a in clause) for clause in self.clauses)

    def swapped(self) -> Filter:
        return Filter(
            tuple(tuple(sorted(a.swapped() for a in cl)) for cl in self.clauses),
            f"swap({self.text})",
        )

    def conjoin(self, other: Filter) -> Filter:
        clauses = []
        for c1 in self.clauses:
            for c2 in other.clauses:
                merged = tuple(sorted(set(c1) | set(c2)))
                if not _clause_unsatisfiable(merged):
                    clauses.append(merged)
        return Filter(tuple(clauses), f"({self.text}) & ({other.text})")

    def union(self, other: Filter) -> Filter:
        return Filter(self.clauses + other.clauses, f"({self.text}) | ({other.text})")

    @property
    def unsatisfiable(self) -> bool:
        return not self.clauses

    def is_swap_symmetric(self) -> bool:
        return set(self.clauses) == set(self.swapped().clauses)

    def forces(self, dims: BoardDims) -> tuple[bool, bool]:
        """(force_short, force_long): whether every clause pins that whole
        direction to its magic constant, enabling line-sum pruning."""
        short_atom = Atom("s_mc", "==", dims.height)
        long_atom = Atom("l_mc", "==", dims.width)

        def forced(target: Atom) -> bool:
            return bool(self.clauses) and all(
                any(a == target or (a.stat == target.stat and a.op == ">=" and a.value >= target.value)
                    for a in clause)
                for clause in self.clauses
            )

        return forced(short_atom), forced(long_atom)

    def encode(self) -> list[int]:
        """Flat int encoding for the kernels:
        [n_clauses, len, (stat, op, value)*, len, ...]."""
        out = [len(self.clauses)]
        for clause in self.clauses:
            out.append(len(clause))
            for a in clause:
                out.extend((_STAT_INDEX[a.stat], OPS.index(a.op), a.value))
        return out


def _class_clauses(token: str, dims: BoardDims) -> list[Clause]:
    h, w = dims.height, dims.width
    short_all = Atom("s_mc", "==", h)
    long_all = Atom("l_mc", "==", w)

    def semi_short() -> list[Clause]:
        return [(short_all, Atom("l_mc", "<=", w - 1))]

    def semi_long() -> list[Clause]:
        return [(long_all, Atom("s_mc", "<=", h - 1))]

    table: dict[str, list[Clause]] = {
        "magic": [(short_all, long_all)],
        "none": [(Atom("s_mc", "<=", h - 1), Atom("l_mc", "<=", w - 1))],
        "semi_short": semi_short(),
        "semi_long": semi_long(),
        "semi": semi_short() + semi_long(),
        "quasi_short": [(short_all, Atom("l_mc", "==", 0), Atom("l_dist", "==", 2))],
        "quasi_long": [(long_all, Atom("s_mc", "==", 0), Atom("s_dist", "==", 2))],
        "near_short": [(short_all, Atom("l_mc", ">=", 1), Atom("l_dist", "==", 3),
                        Atom("l_mc", "<=", w - 1))],
        "near_long": [(long_all, Atom("s_mc", ">=", 1), Atom("s_dist", "==", 3),
                       Atom("s_mc", "<=", h - 1))],
    }
    table["quasi"] = table["quasi_short"] + table["quasi_long"]
    table["near"] = table["near_short"] + table["near_long"]
    if token not in table:
        raise ValueError(f"unknown class {token!r}")
    return [tuple(sorted(cl)) for cl in table[token]]


_ATOM_RE = re.compile(
    r"^(?:class\s*=\s*(?P<cls>\w+)"
    r"|(?P<fn>distinct|mc_lines)\s*\(\s*(?P<dir>short|long)\s*\)\s*(?P<op>=|==|>=|<=)\s*(?P<val>\d+)"
    r"|closed\s*=\s*(?P<closed>0|1))$"
)


def compile_filter(expr: str, dims: BoardDims) -> Filter:
    """Compile a filter expression (conjunction of atoms with `&`) for a board."""
    clause_sets: list[list[Clause]] = []
    for part in expr.split("&"):
        part = part.strip()
        m = _ATOM_RE.match(part)
        if not m:
            raise ValueError(f"bad filter term {part!r}")
        if m.group("cls"):
            clause_sets.append(_class_clauses(m.group("cls"), dims))
        elif m.group("fn"):
            prefix = "s" if m.group("dir") == "short" else "l"
            stat = f"{prefix}_dist" if m.group("fn") == "distinct" else f"{prefix}_mc"
            op = "==" if m.group("op") in ("=", "==") else m.group("op")
            clause_sets.append([(Atom(stat, op, int(m.group("val"))),)])
        else:
            clause_sets.append([(Atom("closed", "==", int(m.group("closed"))),)])
    result = Filter(tuple(clause_sets[0]), expr)
    for extra in clause_sets[1:]:
        result = result.conjoin(Filter(tuple(extra), expr))
    return Filter(result.clauses, expr)


def class_filter(token: str, dims: BoardDims) -> Filter:
    return compile_filter(f"class={token}", dims)
