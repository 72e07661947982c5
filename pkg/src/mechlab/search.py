"""Profile enumeration, witness shrinking, and mechanism comparison suites.

The suites pin down the behavioral fingerprints of the built-in
mechanism families on small shared grids: which axiom each mechanism
drops, that every valid uncompromising winner rule yields a clean
strategy-proof mechanism, that the EV/PAB family trades efficiency
against manipulability, and how the pricing variants rank in welfare.
Each suite carries its own expected pattern so a caller can ask whether
reality still matches it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping

from .axioms import (
    CHECKERS,
    GridSpace,
    refresh_witness,
    iter_nom_violations,
    welfare_compare,
    witness_to_json,
)
from .mechanisms import (
    Mechanism,
    PricingRule,
    WinnerRule,
    check_ev_support,
    check_uncompromising,
    ev_pab_mechanism,
    no_trade_mechanism,
    pay_as_bid_mechanism,
    selective_vickrey_mechanism,
    strict_winners,
    validate_winner_rule,
    vickrey_mechanism,
)
from .model import (
    MarketConfig,
    Profile,
    has_uniform_tail,
    rat,
    vickrey_price,
)


@dataclass(frozen=True)
class GridConfig:
    """A declarative grid: explicit values, or the range 0..max in 1/q steps."""

    n: int
    m: int
    values: tuple[Fraction, ...] | None = None
    max_value: Fraction | None = None
    denominator: int = 1

    def __post_init__(self) -> None:
        if (self.values is None) == (self.max_value is None):
            raise ValueError("give either explicit values or a range, not both")
        if self.values is not None:
            vals = sorted({rat(v) for v in self.values})
            if not vals or vals[0] < 0:
                raise ValueError("values must be non-empty and non-negative")
            object.__setattr__(self, "values", tuple(vals))
        else:
            object.__setattr__(self, "max_value", rat(self.max_value))
            if self.max_value < 0:
                raise ValueError("range maximum must be non-negative")
            if self.denominator < 1:
                raise ValueError("denominator must be a positive integer")
            steps = self.max_value * self.denominator
            if steps.denominator != 1:
                raise ValueError(
                    "range maximum must be a multiple of 1/denominator"
                )

    @property
    def value_set(self) -> tuple[Fraction, ...]:
        if self.values is not None:
            return self.values
        steps = int(self.max_value * self.denominator)
        return tuple(
            Fraction(k, self.denominator) for k in range(steps + 1)
        )

    def space(self, **kwargs: Any) -> GridSpace:
        return GridSpace.shared(
            MarketConfig(self.n, self.m), self.value_set, **kwargs
        )


def _as_space(grid: "GridSpace | GridConfig") -> GridSpace:
    if isinstance(grid, GridConfig):
        return grid.space()
    return grid


def enumerate_profiles(grid: "GridSpace | GridConfig") -> Iterator[Profile]:
    """All grid profiles in lexicographic order (or the seeded sample)."""
    return _as_space(grid).profiles()


def enumerate_uniform_tail(
    grid: "GridSpace | GridConfig",
) -> Iterator[Profile]:
    """The grid profiles whose tail of losing ranks is one tie class."""
    return (p for p in _as_space(grid).profiles() if has_uniform_tail(p))


_SHRINKABLE = ("IR", "NS", "SP", "EE", "EFF", "EF", "AIW")


def shrink_witness(
    mechanism: Mechanism,
    axiom: str,
    witness: dict,
    grid: "GridSpace | GridConfig",
) -> dict:
    """Greedily lower a witness's coordinates while the violation persists.

    Coordinates are the profile entries in agent order, then the
    misreport if the witness has one. Each is walked down one grid value
    at a time; a step is kept only when the refreshed witness still
    violates. Passes repeat until nothing moves, so the result is a
    deterministic local minimum (not a global one).
    """
    if axiom not in _SHRINKABLE:
        raise ValueError(f"shrinking is not defined for {axiom} witnesses")
    space = _as_space(grid)
    current = refresh_witness(mechanism, axiom, witness, space)
    if current is None:
        raise ValueError("witness does not replay to a violation")

    identity_keys = ("profile", "agent", "other", "misreport")

    def identity(w: dict) -> dict:
        return {k: w[k] for k in identity_keys if k in w}

    def coordinates(w: dict) -> list[tuple[str, int]]:
        coords = [("profile", k) for k in range(space.config.n)]
        if "misreport" in w:
            coords.append(("misreport", w["agent"]))
        return coords

    def reading(w: dict, kind: str, k: int) -> Fraction:
        return w["profile"][k] if kind == "profile" else w["misreport"]

    def lowered(w: dict, kind: str, k: int, value: Fraction) -> dict:
        ident = identity(w)
        if kind == "profile":
            vals = list(ident["profile"])
            vals[k] = value
            ident["profile"] = tuple(vals)
        else:
            ident["misreport"] = value
        return ident

    moved = True
    while moved:
        moved = False
        for kind, k in coordinates(current):
            while True:
                here = reading(current, kind, k)
                below = [g for g in space.values[k] if g < here]
                if not below:
                    break
                candidate = lowered(current, kind, k, below[-1])
                refreshed = refresh_witness(mechanism, axiom, candidate, space)
                if refreshed is None:
                    break
                current = refreshed
                moved = True
    return current


def find_obvious_manipulation(
    mechanism: Mechanism,
    grid: "GridSpace | GridConfig",
    analytic: bool = True,
) -> dict | None:
    """First misreport that beats truth in best or worst case, or None."""
    return next(iter_nom_violations(mechanism, _as_space(grid), analytic), None)


# ---------------------------------------------------------------------------
# Random winner-rule tables
# ---------------------------------------------------------------------------


def random_winner_rule_table(
    grid: GridSpace, rng: random.Random
) -> dict[tuple[Fraction, ...], frozenset[int]]:
    """A random valid rule table, closed so raising a winner keeps them winning.

    Seeding picks, at a random subset of uniform-tail grid profiles, the
    mandatory strict winners plus a random batch of price-tied agents up
    to capacity. The closure then adds, for every selected agent and
    every grid report above the price, the entry that keeps that agent
    selected; such an agent is a strict winner there, so the additions
    never breach capacity or the selection conditions.
    """
    market = grid.config
    entries: dict[tuple[Fraction, ...], frozenset[int]] = {}
    for profile in grid.profiles():
        if not has_uniform_tail(profile):
            continue
        if rng.random() < 0.5:
            continue
        price = vickrey_price(profile)
        required = strict_winners(profile)
        tied = sorted(
            i
            for i, v in enumerate(profile.values)
            if v >= price and i not in required
        )
        rng.shuffle(tied)
        take = rng.randint(0, min(market.m - len(required), len(tied)))
        chosen = frozenset(required | set(tied[:take]))
        if chosen:
            entries[profile.values] = chosen
    closed = True
    while closed:
        closed = False
        for values in sorted(entries):
            selected = entries[values]
            profile = Profile(market, values)
            price = vickrey_price(profile)
            for i in sorted(selected):
                for alt in grid.values[i]:
                    if alt <= price or alt == values[i]:
                        continue
                    raised = profile.with_value(i, alt)
                    need = frozenset({i}) | strict_winners(raised)
                    have = entries.get(raised.values, frozenset())
                    if not need <= have:
                        entries[raised.values] = have | need
                        closed = True
    return entries


def random_uncompromising_rules(
    grid: GridSpace, count: int, seed: int
) -> list[WinnerRule]:
    """`count` independent random rule tables, one rng stream per index."""
    rules = []
    for index in range(count):
        rng = random.Random(f"{seed}:{index}")
        entries = random_winner_rule_table(grid, rng)
        rules.append(WinnerRule.rule_table(grid.config, entries))
    return rules


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteResult:
    """A (row x column) verdict matrix plus the pattern it is expected to show.

    `expected` maps cells to either the literal verdict ("FAIL", "EQUAL",
    "DOMINATES", ...) or "PASS", which any PASS_* verdict satisfies.
    FAIL cells keep their witnesses so the matrix is replayable.
    """

    name: str
    title: str
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: Mapping[tuple[str, str], str]
    expected: Mapping[tuple[str, str], str]
    witnesses: Mapping[tuple[str, str], dict] = field(default_factory=dict)

    def cell_ok(self, row: str, column: str) -> bool:
        got = self.cells[(row, column)]
        want = self.expected[(row, column)]
        if want == "PASS":
            return got.startswith("PASS")
        return got == want

    @property
    def matched(self) -> bool:
        return all(
            self.cell_ok(row, column)
            for row in self.rows
            for column in self.columns
        )

    def mismatches(self) -> list[tuple[str, str, str, str]]:
        return [
            (row, column, self.expected[(row, column)], self.cells[(row, column)])
            for row in self.rows
            for column in self.columns
            if not self.cell_ok(row, column)
        ]

    def format_table(self) -> str:
        header = ["mechanism / rule", *self.columns]
        body = [
            [row, *(self.cells[(row, column)] for column in self.columns)]
            for row in self.rows
        ]
        widths = [
            max(len(line[k]) for line in [header, *body])
            for k in range(len(header))
        ]
        def render(line: list[str]) -> str:
            return "  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
        rule = "  ".join("-" * w for w in widths)
        return "\n".join([render(header), rule, *(render(line) for line in body)])

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "title": self.title,
            "columns": list(self.columns),
            "rows": list(self.rows),
            "cells": {
                row: {col: self.cells[(row, col)] for col in self.columns}
                for row in self.rows
            },
            "expected": {
                row: {col: self.expected[(row, col)] for col in self.columns}
                for row in self.rows
            },
            "matched": self.matched,
            "witnesses": {
                f"{row} / {col}": witness_to_json(witness)
                for (row, col), witness in self.witnesses.items()
            },
        }


def _run_axiom_cells(
    mechanism: Mechanism,
    grid: GridSpace,
    columns: Iterable[str],
    row: str,
    cells: dict,
    witnesses: dict,
) -> None:
    for axiom in columns:
        report = CHECKERS[axiom](mechanism, grid)
        cells[(row, axiom)] = report.verdict
        if report.witness is not None:
            witnesses[(row, axiom)] = report.witness


def suite_independence(workers: int = 1) -> SuiteResult:
    """Four mechanisms, four axioms: each fails exactly the axiom it drops."""
    grid = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=workers)
    mechanisms = [
        vickrey_mechanism(),
        pay_as_bid_mechanism(),
        no_trade_mechanism(1),
        no_trade_mechanism(-1),
    ]
    dropped = dict(zip((m.name for m in mechanisms), ("EE", "SP", "IR", "NS")))
    columns = ("EE", "SP", "IR", "NS")
    cells: dict = {}
    witnesses: dict = {}
    expected: dict = {}
    for mech in mechanisms:
        _run_axiom_cells(mech, grid, columns, mech.name, cells, witnesses)
        for axiom in columns:
            expected[(mech.name, axiom)] = (
                "FAIL" if dropped[mech.name] == axiom else "PASS"
            )
    return SuiteResult(
        "independence",
        "each mechanism fails exactly the axiom it drops",
        tuple(m.name for m in mechanisms),
        columns,
        cells,
        expected,
        witnesses,
    )


DEFAULT_RANDOM_RULES = 20
DEFAULT_SUITE_SEED = 1729


def suite_sp_class(
    count: int = DEFAULT_RANDOM_RULES,
    seed: int = DEFAULT_SUITE_SEED,
    workers: int = 1,
) -> SuiteResult:
    """Every valid uncompromising winner rule prices clean: EE, SP, IR, NS.

    Runs the named rule families plus `count` random rule tables through
    the structural checks and the four axioms; the expected pattern is
    all-pass across the board.
    """
    grid = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=workers)
    rules: list[tuple[str, WinnerRule]] = [
        ("empty", WinnerRule.empty()),
        ("strict_winners", WinnerRule.strict()),
        ("dictatorial_threshold(0,2)", WinnerRule.dictatorial_threshold(0, 2)),
        ("efficient_winners", WinnerRule.efficient()),
    ]
    for index, rule in enumerate(random_uncompromising_rules(grid, count, seed)):
        rules.append((f"random[{index}] {rule.label}", rule))
    columns = ("VALID", "UNCOMPROMISING", "EE", "SP", "IR", "NS")
    cells: dict = {}
    witnesses: dict = {}
    expected: dict = {}
    for row, rule in rules:
        validity = validate_winner_rule(rule, grid)
        raising = check_uncompromising(rule, grid)
        cells[(row, "VALID")] = validity.verdict
        cells[(row, "UNCOMPROMISING")] = raising.verdict
        for check in (validity, raising):
            if check.witness is not None:
                column = "VALID" if check is validity else "UNCOMPROMISING"
                witnesses[(row, column)] = check.witness
        mech = selective_vickrey_mechanism(rule)
        _run_axiom_cells(mech, grid, ("EE", "SP", "IR", "NS"), row, cells, witnesses)
        for column in columns:
            expected[(row, column)] = "PASS"
    return SuiteResult(
        "sp-class",
        "valid uncompromising winner rules give EE + SP + IR + NS",
        tuple(row for row, _ in rules),
        columns,
        cells,
        expected,
        witnesses,
    )


def suite_nom_class(workers: int = 1) -> SuiteResult:
    """EV/PAB pricing variants: reachability of the EV branch decides NOM.

    Pricing rules that let every positive valuation reach an
    efficient-Vickrey outcome are non-obviously manipulable; the
    always-PAB variant (negative threshold) loses both properties while
    keeping EE, IR and NS.
    """
    grid = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=workers)
    variants = [
        ev_pab_mechanism(PricingRule.always_ev()),
        ev_pab_mechanism(PricingRule.ev_iff_price_zero()),
        ev_pab_mechanism(PricingRule.threshold(1)),
        ev_pab_mechanism(PricingRule.threshold(-1)),
    ]
    columns = ("EV_SUPPORT", "EE", "IR", "NS", "NOM")
    cells: dict = {}
    witnesses: dict = {}
    expected: dict = {}
    for mech in variants:
        support = check_ev_support(mech.params["pricing"], grid)
        cells[(mech.name, "EV_SUPPORT")] = support.verdict
        if support.witness is not None:
            witnesses[(mech.name, "EV_SUPPORT")] = support.witness
        _run_axiom_cells(
            mech, grid, ("EE", "IR", "NS", "NOM"), mech.name, cells, witnesses
        )
        starved = mech.name == "ev_pab(threshold(-1))"
        for column in columns:
            if starved and column in ("EV_SUPPORT", "NOM"):
                expected[(mech.name, column)] = "FAIL"
            else:
                expected[(mech.name, column)] = "PASS"
    return SuiteResult(
        "nom-class",
        "EV-branch support separates NOM from obvious manipulability",
        tuple(m.name for m in variants),
        columns,
        cells,
        expected,
        witnesses,
    )


def suite_welfare(workers: int = 1) -> SuiteResult:
    """The always-EV pricing weakly dominates every other pricing variant."""
    grid = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=workers)
    best = ev_pab_mechanism(PricingRule.always_ev())
    rivals = [
        (ev_pab_mechanism(PricingRule.ev_iff_price_zero()), "DOMINATES"),
        (ev_pab_mechanism(PricingRule.threshold(0)), "DOMINATES"),
        (ev_pab_mechanism(PricingRule.threshold(1)), "DOMINATES"),
        (ev_pab_mechanism(PricingRule.threshold(2)), "EQUAL"),
    ]
    columns = ("RELATION", "NEVER_BEATEN")
    cells: dict = {}
    witnesses: dict = {}
    expected: dict = {}
    rows = []
    for rival, relation in rivals:
        row = f"{best.name} vs {rival.name}"
        rows.append(row)
        outcome = welfare_compare(best, rival, grid)
        cells[(row, "RELATION")] = outcome.relation
        cells[(row, "NEVER_BEATEN")] = (
            "PASS" if outcome.strict_second is None else "FAIL"
        )
        if outcome.strict_first is not None:
            witnesses[(row, "RELATION")] = outcome.strict_first
        if outcome.strict_second is not None:
            witnesses[(row, "NEVER_BEATEN")] = outcome.strict_second
        expected[(row, "RELATION")] = relation
        expected[(row, "NEVER_BEATEN")] = "PASS"
    return SuiteResult(
        "welfare",
        "always-EV pricing is welfare-optimal among the pricing variants",
        tuple(rows),
        columns,
        cells,
        expected,
        witnesses,
    )


def suite_anonymity(workers: int = 1) -> SuiteResult:
    """Name-sensitive winner rules break anonymity in welfare; efficient ones keep it."""
    grid = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=workers)
    dictator = selective_vickrey_mechanism(
        WinnerRule.dictatorial_threshold(0, 2)
    )
    efficient = selective_vickrey_mechanism(WinnerRule.efficient())
    columns = ("AIW", "EE", "SP", "IR", "NS")
    cells: dict = {}
    witnesses: dict = {}
    expected: dict = {}
    for mech in (dictator, efficient):
        _run_axiom_cells(mech, grid, columns, mech.name, cells, witnesses)
        for column in columns:
            expected[(mech.name, column)] = (
                "FAIL" if (mech is dictator and column == "AIW") else "PASS"
            )
    return SuiteResult(
        "anonymity",
        "welfare anonymity separates dictatorial from efficient selection",
        (dictator.name, efficient.name),
        columns,
        cells,
        expected,
        witnesses,
    )


SUITES = {
    "independence": suite_independence,
    "sp-class": suite_sp_class,
    "nom-class": suite_nom_class,
    "welfare": suite_welfare,
    "anonymity": suite_anonymity,
}
