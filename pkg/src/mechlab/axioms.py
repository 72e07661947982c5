"""Axiom checkers over finite valuation grids, with exact verdicts and witnesses.

Each checker sweeps a mechanism over every profile of a `GridSpace` (or a
seeded sample of them) and returns an `AxiomReport`. A report's verdict
says how strong the evidence is:

* PASS_EXHAUSTIVE - every grid profile checked, none violates;
* PASS_ANALYTIC   - a closed-form argument covers all real profiles;
* PASS_SAMPLED    - only a sample (or only grid-relative bounds) checked;
* FAIL            - a concrete violation, recorded as a witness;
* NOT_CERTIFIED   - the question cannot be settled at this scope;
* NOT_APPLICABLE  - a precondition of the check itself failed.

Witnesses always replay: feeding the witness back through the mechanism
reproduces the violating inequality exactly. Scans never early-exit, so
`profiles_checked` and the reported witness (the lexicographically first
violation) do not depend on how the scan is partitioned across workers.
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator

from .mechanisms import (
    FAMILY_EFFICIENT_VICKREY,
    FAMILY_EV_PAB,
    FAMILY_NO_TRADE,
    FAMILY_PAY_AS_BID,
    FAMILY_SELECTIVE_VICKREY,
    FAMILY_VICKREY,
    Mechanism,
    PRICING_ALWAYS_EV,
    PRICING_EV_IFF_PRICE_ZERO,
    PRICING_THRESHOLD,
    RULE_DICTATORIAL_THRESHOLD,
    RULE_EFFICIENT_WINNERS,
    RULE_EMPTY,
    RULE_STRICT_WINNERS,
)
from .model import (
    Bundle,
    MarketConfig,
    Profile,
    RationalLike,
    achieved_surplus,
    optimal_surplus,
    rat,
    rat_str,
    utilities,
    utility,
)

MODE_EXHAUSTIVE = "exhaustive"
MODE_SAMPLED = "sampled"

AXIOMS = ("EE", "SP", "NOM", "EFF", "IR", "NS", "EF", "AIW", "BEST_CASE")


@dataclass(frozen=True)
class GridSpace:
    """A finite set of valuations per agent, plus how to sweep them.

    In exhaustive mode `profiles()` yields the full cartesian product in
    lexicographic order, refusing to start if it exceeds `budget`. In
    sampled mode it yields `samples` profiles drawn uniformly; each draw
    is keyed by `(seed, index)`, so any worker can regenerate any slice
    of the stream independently.
    """

    config: MarketConfig
    values: tuple[tuple[Fraction, ...], ...]
    mode: str = MODE_EXHAUSTIVE
    seed: int = 0
    samples: int = 0
    budget: int = 1_000_000
    workers: int = 1

    def __post_init__(self) -> None:
        if len(self.values) != self.config.n:
            raise ValueError("need one value set per agent")
        normalized = []
        for vals in self.values:
            vs = sorted({rat(v) for v in vals})
            if not vs:
                raise ValueError("value sets must be non-empty")
            if vs[0] < 0:
                raise ValueError("grid valuations must be non-negative")
            normalized.append(tuple(vs))
        object.__setattr__(self, "values", tuple(normalized))
        if self.mode not in (MODE_EXHAUSTIVE, MODE_SAMPLED):
            raise ValueError(f"unknown mode: {self.mode}")
        if self.mode == MODE_SAMPLED and self.samples < 1:
            raise ValueError("sampled mode needs samples >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def shared(
        cls,
        config: MarketConfig,
        values: Iterable[RationalLike],
        **kwargs: Any,
    ) -> "GridSpace":
        vals = tuple(rat(v) for v in values)
        return cls(config, tuple(vals for _ in range(config.n)), **kwargs)

    @property
    def is_shared(self) -> bool:
        return all(vals == self.values[0] for vals in self.values)

    @property
    def shared_values(self) -> tuple[Fraction, ...]:
        if not self.is_shared:
            raise ValueError("agents do not share a common value set")
        return self.values[0]

    @property
    def size(self) -> int:
        out = 1
        for vals in self.values:
            out *= len(vals)
        return out

    @property
    def pass_verdict(self) -> str:
        return "PASS_EXHAUSTIVE" if self.mode == MODE_EXHAUSTIVE else "PASS_SAMPLED"

    def profiles(self) -> Iterator[Profile]:
        if self.mode == MODE_EXHAUSTIVE:
            if self.size > self.budget:
                raise ValueError(
                    f"{self.size} profiles exceed the enumeration budget "
                    f"({self.budget}); switch to sampled mode with a seed"
                )
            for combo in itertools.product(*self.values):
                yield Profile(self.config, combo)
        else:
            for index in range(self.samples):
                rng = random.Random(f"{self.seed}:{index}")
                combo = tuple(rng.choice(vals) for vals in self.values)
                yield Profile(self.config, combo)


@dataclass(frozen=True)
class AxiomReport:
    """One checker's verdict for one mechanism, with the first witness on FAIL."""

    axiom: str
    verdict: str
    witness: dict | None = None
    profiles_checked: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict.startswith("PASS")

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "profiles_checked": self.profiles_checked,
        }
        if self.witness is not None:
            out["witness"] = witness_to_json(self.witness)
        if self.details:
            out["details"] = _jsonify(self.details)
        return out


def _jsonify(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, (frozenset, set)):
        return sorted(_jsonify(v) for v in value)
    return value


_WITNESS_INT_FIELDS = {"agent", "other"}
_WITNESS_STR_FIELDS = {"direction", "scope"}
_WITNESS_INT_LIST_FIELDS = {"winners"}


def witness_to_json(witness: dict) -> dict:
    return {k: _jsonify(v) for k, v in witness.items()}


def witness_from_json(data: dict) -> dict:
    """Parse a serialized witness back into exact rationals."""
    out: dict[str, Any] = {}
    for key, value in data.items():
        if key in _WITNESS_STR_FIELDS:
            out[key] = str(value)
        elif key in _WITNESS_INT_FIELDS:
            out[key] = int(value)
        elif key in _WITNESS_INT_LIST_FIELDS:
            out[key] = [int(v) for v in value]
        elif isinstance(value, list):
            out[key] = tuple(rat(v) for v in value)
        elif isinstance(value, int):
            out[key] = value
        else:
            out[key] = rat(value)
    return out


# ---------------------------------------------------------------------------
# Scan plumbing
# ---------------------------------------------------------------------------

PerProfile = Callable[[Profile], "tuple[tuple, dict] | None"]


def _scan_part(
    profiles: Iterable[Profile], per_profile: PerProfile
) -> tuple["tuple[tuple, dict] | None", int]:
    best: tuple[tuple, dict] | None = None
    count = 0
    for profile in profiles:
        count += 1
        hit = per_profile(profile)
        if hit is not None and (best is None or hit[0] < best[0]):
            best = hit
    return best, count


def _scan_profiles(
    grid: GridSpace, per_profile: PerProfile
) -> tuple["tuple[tuple, dict] | None", int]:
    """Full sweep keeping the lexicographically first violation.

    With several workers the profile stream is split round-robin and the
    partial results merged; because every partition is fully scanned and
    the merge takes the smallest witness key, the outcome is identical
    for any worker count.
    """
    if grid.workers <= 1:
        return _scan_part(grid.profiles(), per_profile)
    profiles = list(grid.profiles())
    parts = [profiles[k :: grid.workers] for k in range(grid.workers)]
    parts = [part for part in parts if part]
    with ThreadPoolExecutor(max_workers=max(1, len(parts))) as pool:
        results = list(
            pool.map(lambda part: _scan_part(part, per_profile), parts)
        )
    best: tuple[tuple, dict] | None = None
    count = 0
    for hit, part_count in results:
        count += part_count
        if hit is not None and (best is None or hit[0] < best[0]):
            best = hit
    return best, count


def _report_from_scan(
    axiom: str,
    grid: GridSpace,
    best: "tuple[tuple, dict] | None",
    count: int,
    details: dict | None = None,
) -> AxiomReport:
    if best is None:
        return AxiomReport(axiom, grid.pass_verdict, None, count, details or {})
    return AxiomReport(axiom, "FAIL", best[1], count, details or {})


def witness_sort_key(axiom: str, witness: dict) -> tuple:
    """Total order on witnesses of one axiom; the scans report the minimum."""
    if axiom in ("IR", "NS"):
        return (witness["profile"], witness["agent"])
    if axiom == "SP":
        return (witness["profile"], witness["agent"], witness["misreport"])
    if axiom in ("EE", "EFF"):
        return (witness["profile"],)
    if axiom in ("EF", "AIW"):
        return (witness["profile"], witness["agent"], witness["other"])
    if axiom == "NOM":
        return (
            witness["agent"],
            witness["true_value"],
            witness["misreport"],
            0 if witness["direction"] == "SUP" else 1,
        )
    if axiom == "BEST_CASE":
        return (witness["agent"], witness["value"])
    raise ValueError(f"unknown axiom: {axiom}")


def merge_reports(a: AxiomReport, b: AxiomReport) -> AxiomReport:
    """Combine two partial scan reports for the same axiom.

    Associative and commutative: FAIL wins over any pass, the smaller
    witness key wins between two FAILs, and PASS_SAMPLED wins over
    PASS_EXHAUSTIVE (a sample taints the whole).
    """
    if a.axiom != b.axiom:
        raise ValueError("cannot merge reports for different axioms")
    count = a.profiles_checked + b.profiles_checked
    details = dict(a.details or b.details)
    fails = [r for r in (a, b) if r.verdict == "FAIL"]
    if fails:
        best = min(
            fails, key=lambda r: witness_sort_key(a.axiom, r.witness or {})
        )
        return AxiomReport(a.axiom, "FAIL", best.witness, count, details)
    verdict = (
        "PASS_SAMPLED"
        if "PASS_SAMPLED" in (a.verdict, b.verdict)
        else a.verdict
    )
    return AxiomReport(a.axiom, verdict, None, count, details)


# ---------------------------------------------------------------------------
# Pointwise axioms
# ---------------------------------------------------------------------------


def check_ir(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """Individual rationality: every agent's utility is non-negative."""

    def per_profile(profile: Profile):
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            u = utility(alloc.bundles[i], profile.values[i])
            if u < 0:
                witness = {"profile": profile.values, "agent": i, "utility": u}
                return (witness_sort_key("IR", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("IR", grid, best, count)


def check_no_subsidy(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """No subsidy: no agent is ever paid money (every transfer is >= 0)."""

    def per_profile(profile: Profile):
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            if alloc.bundles[i].t < 0:
                witness = {
                    "profile": profile.values,
                    "agent": i,
                    "transfer": alloc.bundles[i].t,
                }
                return (witness_sort_key("NS", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("NS", grid, best, count)


def check_sp(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """Strategy-proofness: no single-agent misreport from the grid ever pays.

    Misreports range over the deviator's own value set, so on an
    exhaustive sweep the verdict is exhaustive at grid scope.
    """

    def per_profile(profile: Profile):
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            truth = profile.values[i]
            honest = utility(alloc.bundles[i], truth)
            for report in grid.values[i]:
                if report == truth:
                    continue
                deviated = mechanism.evaluate(profile.with_value(i, report))
                gained = utility(deviated.bundles[i], truth)
                if gained > honest:
                    witness = {
                        "profile": profile.values,
                        "agent": i,
                        "misreport": report,
                        "truthful_utility": honest,
                        "misreport_utility": gained,
                    }
                    return (witness_sort_key("SP", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("SP", grid, best, count)


def find_reference_bundle(mechanism: Mechanism, profile: Profile) -> Bundle | None:
    """A single bundle every agent is exactly indifferent to, if one exists.

    Only two shapes can work: (0, t0), which requires all utilities
    equal (returned first), and (1, p), which requires v_i - u_i to be
    the same for every agent. Anything else makes some agent strictly
    prefer or disprefer it.
    """
    us = utilities(mechanism.evaluate(profile), profile)
    if all(u == us[0] for u in us):
        return Bundle(0, -us[0])
    diffs = [v - u for v, u in zip(profile.values, us)]
    if all(d == diffs[0] for d in diffs):
        return Bundle(1, diffs[0])
    return None


def check_ee(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """Egalitarian-equivalence: a reference bundle exists at every profile."""

    def per_profile(profile: Profile):
        if find_reference_bundle(mechanism, profile) is None:
            witness = {
                "profile": profile.values,
                "utilities": utilities(mechanism.evaluate(profile), profile),
            }
            return (witness_sort_key("EE", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("EE", grid, best, count)


def check_efficiency(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """Decision efficiency: the objects always go to a surplus-maximizing set."""

    def per_profile(profile: Profile):
        achieved = achieved_surplus(mechanism.evaluate(profile), profile)
        optimum = optimal_surplus(profile)
        if achieved != optimum:
            witness = {
                "profile": profile.values,
                "achieved": achieved,
                "optimum": optimum,
            }
            return (witness_sort_key("EFF", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("EFF", grid, best, count)


def check_envy_freeness(mechanism: Mechanism, grid: GridSpace) -> AxiomReport:
    """Envy-freeness: no agent prefers another agent's bundle to their own."""

    def per_profile(profile: Profile):
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            own = utility(alloc.bundles[i], profile.values[i])
            for j in range(profile.config.n):
                if j == i:
                    continue
                envied = utility(alloc.bundles[j], profile.values[i])
                if envied > own:
                    witness = {
                        "profile": profile.values,
                        "agent": i,
                        "other": j,
                        "own_utility": own,
                        "other_bundle_utility": envied,
                    }
                    return (witness_sort_key("EF", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("EF", grid, best, count)


def check_anonymity_in_welfare(
    mechanism: Mechanism, grid: GridSpace
) -> AxiomReport:
    """Anonymity in welfare: swapping two agents' valuations swaps their utilities.

    Needs a shared value set, otherwise the swapped profile can leave the
    grid; heterogeneous grids are a usage error.
    """
    if not grid.is_shared:
        raise ValueError(
            "anonymity in welfare needs a shared value set across agents"
        )

    def per_profile(profile: Profile):
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            for j in range(profile.config.n):
                if j == i:
                    continue
                swapped = profile.swapped(i, j)
                mine = utility(alloc.bundles[i], profile.values[i])
                theirs = utility(
                    mechanism.evaluate(swapped).bundles[j], profile.values[i]
                )
                if mine != theirs:
                    witness = {
                        "profile": profile.values,
                        "agent": i,
                        "other": j,
                        "swapped_profile": swapped.values,
                        "utility": mine,
                        "swapped_utility": theirs,
                    }
                    return (witness_sort_key("AIW", witness), witness)
        return None

    best, count = _scan_profiles(grid, per_profile)
    return _report_from_scan("AIW", grid, best, count)


# ---------------------------------------------------------------------------
# Manipulation bounds (best/worst case over all real opponents)
# ---------------------------------------------------------------------------


def _second_price_bounds(
    agent: int, m: int, report: Fraction, true_value: Fraction
) -> tuple[Fraction, Fraction]:
    """Bounds for families whose winners pay the Vickrey price.

    Best case: opponents all at zero let a positive report win for free,
    so the supremum is the full valuation. A zero report can still win at
    price zero, but only for agents whose index precedes the last m-1
    (the canonical tie-break fills low indices first); for everyone else
    the zero report never trades. Worst case: overbidding can win at any
    price up to the report, so the infimum is min(0, v - r).
    """
    zero = Fraction(0)
    sup = true_value if (report > 0 or agent < m - 1) else zero
    inf = min(zero, true_value - report)
    return (sup, inf)


def _own_bid_bounds(
    agent: int, m: int, report: Fraction, true_value: Fraction
) -> tuple[Fraction, Fraction]:
    """Bounds when winners pay their own report: utility is v - r or 0."""
    zero = Fraction(0)
    winnable = report > 0 or agent < m - 1
    if not winnable:
        return (zero, zero)
    gain = true_value - report
    return (max(gain, zero), min(gain, zero))


def nom_report_bounds(
    mechanism: Mechanism,
    market: MarketConfig,
    agent: int,
    report: RationalLike,
    true_value: RationalLike,
) -> tuple[Fraction, Fraction] | None:
    """Analytic (sup, inf) of the agent's utility over all real opponents.

    The agent reports `report` while valuing the object at `true_value`;
    the bounds range over every non-negative opponent profile, not just a
    grid. Returns None for families without a closed form (rule tables),
    in which case callers fall back to grid-relative bounds.
    """
    r = rat(report)
    v = rat(true_value)
    zero = Fraction(0)
    family = mechanism.family
    if family == FAMILY_NO_TRADE:
        fee = mechanism.params["fee"]
        return (-fee, -fee)
    if family in (FAMILY_VICKREY, FAMILY_EFFICIENT_VICKREY):
        return _second_price_bounds(agent, market.m, r, v)
    if family == FAMILY_PAY_AS_BID:
        return _own_bid_bounds(agent, market.m, r, v)
    if family == FAMILY_SELECTIVE_VICKREY:
        rule = mechanism.params["rule"]
        if rule.family == RULE_EMPTY:
            return (zero, zero)
        if rule.family == RULE_STRICT_WINNERS:
            if r > 0:
                return (v, min(zero, v - r))
            return (zero, zero)
        if rule.family == RULE_EFFICIENT_WINNERS:
            return _second_price_bounds(agent, market.m, r, v)
        if rule.family == RULE_DICTATORIAL_THRESHOLD:
            chosen, threshold = rule.params
            if agent != chosen or r <= threshold:
                return (zero, zero)
            gain = v - threshold
            return (max(gain, zero), min(gain, zero))
        return None
    if family == FAMILY_EV_PAB:
        pricing = mechanism.params["pricing"]
        if pricing.family in (PRICING_ALWAYS_EV, PRICING_EV_IFF_PRICE_ZERO):
            return _second_price_bounds(agent, market.m, r, v)
        if pricing.family == PRICING_THRESHOLD:
            if pricing.params[0] >= 0:
                return _second_price_bounds(agent, market.m, r, v)
            return _own_bid_bounds(agent, market.m, r, v)
        return None
    return None


def nom_truthful_bounds(
    mechanism: Mechanism,
    market: MarketConfig,
    agent: int,
    value: RationalLike,
) -> tuple[Fraction, Fraction] | None:
    """Analytic (sup, inf) of truthful utility over all real opponents."""
    return nom_report_bounds(mechanism, market, agent, value, value)


def has_analytic_bounds(mechanism: Mechanism, market: MarketConfig) -> bool:
    return nom_report_bounds(mechanism, market, 0, 1, 1) is not None


def _analytic_sup_realizer(
    market: MarketConfig, agent: int
) -> tuple[Fraction, ...]:
    """Opponents realizing the best-case bound for a positive report: all zero."""
    return (Fraction(0),) * (market.n - 1)


def _grid_bundle_map(
    mechanism: Mechanism, grid: GridSpace
) -> tuple[dict, int]:
    """For each (agent, report): every bundle seen on the grid, with the
    lexicographically smallest opponent profile that produced it."""
    seen: dict[tuple[int, Fraction], dict[Bundle, tuple[Fraction, ...]]] = {}
    count = 0
    for profile in grid.profiles():
        count += 1
        alloc = mechanism.evaluate(profile)
        for i in range(profile.config.n):
            opponents = tuple(
                v for j, v in enumerate(profile.values) if j != i
            )
            slot = seen.setdefault((i, profile.values[i]), {})
            bundle = alloc.bundles[i]
            if bundle not in slot or opponents < slot[bundle]:
                slot[bundle] = opponents
        # a profile may repeat in sampled mode; the min-merge absorbs it
    return seen, count


def _grid_report_bounds(
    slot: dict[Bundle, tuple[Fraction, ...]], true_value: Fraction
) -> tuple[Fraction, Fraction, tuple[Fraction, ...], tuple[Fraction, ...]]:
    """(sup, inf, sup realizer, inf realizer) over the grid's observed bundles."""
    best = worst = None
    best_opp = worst_opp = None
    for bundle, opponents in slot.items():
        u = utility(bundle, true_value)
        if best is None or u > best or (u == best and opponents < best_opp):
            best, best_opp = u, opponents
        if worst is None or u < worst or (u == worst and opponents < worst_opp):
            worst, worst_opp = u, opponents
    return best, worst, best_opp, worst_opp


def iter_nom_violations(
    mechanism: Mechanism, grid: GridSpace, analytic: bool = True
) -> Iterator[dict]:
    """Obvious manipulations in (agent, true value, misreport) order.

    A misreport is an obvious manipulation when it beats truth-telling in
    the best case (SUP) or the worst case (INF) over opponents. With
    analytic bounds the comparison covers all real opponents; otherwise
    bounds are taken over the grid only and flagged as such.
    """
    market = grid.config
    if analytic and has_analytic_bounds(mechanism, market):
        for i in range(market.n):
            vals = grid.values[i]
            for true_value in vals:
                t_sup, t_inf = nom_report_bounds(
                    mechanism, market, i, true_value, true_value
                )
                for report in vals:
                    if report == true_value:
                        continue
                    r_sup, r_inf = nom_report_bounds(
                        mechanism, market, i, report, true_value
                    )
                    if r_sup > t_sup:
                        yield {
                            "agent": i,
                            "true_value": true_value,
                            "misreport": report,
                            "direction": "SUP",
                            "truthful_bound": t_sup,
                            "misreport_bound": r_sup,
                            "realizing_opponents": _analytic_sup_realizer(
                                market, i
                            ),
                            "scope": "analytic",
                        }
                    if r_inf > t_inf:
                        yield {
                            "agent": i,
                            "true_value": true_value,
                            "misreport": report,
                            "direction": "INF",
                            "truthful_bound": t_inf,
                            "misreport_bound": r_inf,
                            "scope": "analytic",
                        }
        return
    seen, _ = _grid_bundle_map(mechanism, grid)
    yield from _iter_grid_nom(market, grid, seen)


def _iter_grid_nom(
    market: MarketConfig, grid: GridSpace, seen: dict
) -> Iterator[dict]:
    for i in range(market.n):
        vals = grid.values[i]
        for true_value in vals:
            truth_slot = seen.get((i, true_value))
            if truth_slot is None:
                continue  # value never sampled, nothing to compare against
            t_sup, t_inf, _, _ = _grid_report_bounds(truth_slot, true_value)
            for report in vals:
                if report == true_value:
                    continue
                report_slot = seen.get((i, report))
                if report_slot is None:
                    continue
                r_sup, r_inf, sup_opp, inf_opp = _grid_report_bounds(
                    report_slot, true_value
                )
                if r_sup > t_sup:
                    yield {
                        "agent": i,
                        "true_value": true_value,
                        "misreport": report,
                        "direction": "SUP",
                        "truthful_bound": t_sup,
                        "misreport_bound": r_sup,
                        "realizing_opponents": sup_opp,
                        "scope": "grid",
                    }
                if r_inf > t_inf:
                    yield {
                        "agent": i,
                        "true_value": true_value,
                        "misreport": report,
                        "direction": "INF",
                        "truthful_bound": t_inf,
                        "misreport_bound": r_inf,
                        "realizing_opponents": inf_opp,
                        "scope": "grid",
                    }


def check_nom(
    mechanism: Mechanism, grid: GridSpace, analytic: bool = True
) -> AxiomReport:
    """Non-obvious manipulability: no misreport beats truth in best or worst case.

    With analytic bounds (the built-in families) the verdict covers every
    real opponent profile and only the misreport ranges over the grid, so
    a pass is PASS_ANALYTIC and a FAIL is a proof. Without them both
    sides are grid-relative: a pass is only PASS_SAMPLED, and a FAIL is
    evidence at grid scope, not a proof over the reals (flagged in the
    witness and details).
    """
    market = grid.config
    use_analytic = analytic and has_analytic_bounds(mechanism, market)
    details: dict[str, Any] = {"scope": "analytic" if use_analytic else "grid"}
    if use_analytic and grid.is_shared:
        details["truthful_bounds"] = {
            rat_str(v): [
                rat_str(b)
                for b in nom_report_bounds(mechanism, market, 0, v, v)
            ]
            for v in grid.shared_values
        }
    if use_analytic:
        witness = next(iter_nom_violations(mechanism, grid, True), None)
        if witness is not None:
            return AxiomReport("NOM", "FAIL", witness, 0, details)
        return AxiomReport("NOM", "PASS_ANALYTIC", None, 0, details)
    seen, count = _grid_bundle_map(mechanism, grid)
    witness = next(_iter_grid_nom(market, grid, seen), None)
    if witness is not None:
        return AxiomReport("NOM", "FAIL", witness, count, details)
    return AxiomReport("NOM", "PASS_SAMPLED", None, count, details)


def check_best_case_utility(
    mechanism: Mechanism, grid: GridSpace
) -> AxiomReport:
    """Best-case truthful utility equals the full valuation (a free object).

    Meaningful only for mechanisms that are decision-efficient, individually
    rational and subsidy-free on the grid; those are checked first and a
    failure makes this check NOT_APPLICABLE. Transfers being non-negative
    caps utility at v_i, so the question is whether some opponent profile
    attains the cap. For the built-in families the all-zero opponents do,
    analytically; for black-box mechanisms only grid evidence is reported.
    """
    market = grid.config
    pre = {
        "EFF": check_efficiency(mechanism, grid),
        "IR": check_ir(mechanism, grid),
        "NS": check_no_subsidy(mechanism, grid),
    }
    failing = sorted(k for k, r in pre.items() if r.verdict == "FAIL")
    if failing:
        return AxiomReport(
            "BEST_CASE",
            "NOT_APPLICABLE",
            None,
            0,
            {"reason": "precondition failed: " + ", ".join(failing)},
        )
    if has_analytic_bounds(mechanism, market):
        for i in range(market.n):
            for value in grid.values[i]:
                sup = nom_report_bounds(mechanism, market, i, value, value)[0]
                if sup != value:
                    return AxiomReport(
                        "BEST_CASE",
                        "FAIL",
                        {"agent": i, "value": value, "best_case": sup},
                        0,
                        {"scope": "analytic"},
                    )
        return AxiomReport(
            "BEST_CASE",
            "PASS_ANALYTIC",
            None,
            0,
            {
                "scope": "analytic",
                "realizer": "all-zero opponents attain the bound",
            },
        )
    seen, count = _grid_bundle_map(mechanism, grid)
    unsupported: list[dict] = []
    for i in range(market.n):
        for value in grid.values[i]:
            sup, _, _, _ = _grid_report_bounds(seen[(i, value)], value)
            if sup != value:
                unsupported.append({"agent": i, "value": value, "best_case": sup})
    details: dict[str, Any] = {
        "scope": "grid",
        "reason": "grid evidence cannot settle a bound over all real opponents",
    }
    if unsupported:
        details["first_unattained"] = unsupported[0]
    return AxiomReport("BEST_CASE", "NOT_CERTIFIED", None, count, details)


# ---------------------------------------------------------------------------
# Welfare comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WelfareComparison:
    """Pointwise utility comparison of two mechanisms over a grid.

    DOMINATES / DOMINATED mean weakly better / worse for every agent at
    every profile with at least one strict inequality; EQUAL means
    identical utility vectors everywhere. The strict witnesses record the
    first profile (and agent) where each side strictly exceeds the other.
    """

    relation: str  # DOMINATES | DOMINATED | EQUAL | INCOMPARABLE
    strict_first: dict | None
    strict_second: dict | None
    profiles_checked: int

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "relation": self.relation,
            "profiles_checked": self.profiles_checked,
            "strict_first": None,
            "strict_second": None,
        }
        if self.strict_first is not None:
            out["strict_first"] = witness_to_json(self.strict_first)
        if self.strict_second is not None:
            out["strict_second"] = witness_to_json(self.strict_second)
        return out


def welfare_compare(
    first: Mechanism, second: Mechanism, grid: GridSpace
) -> WelfareComparison:
    """Compare two mechanisms agent by agent on every grid profile."""
    first_above: dict | None = None
    second_above: dict | None = None
    first_ge_everywhere = True
    second_ge_everywhere = True
    count = 0
    for profile in grid.profiles():
        count += 1
        us_first = utilities(first.evaluate(profile), profile)
        us_second = utilities(second.evaluate(profile), profile)
        for i, (ua, ub) in enumerate(zip(us_first, us_second)):
            if ua > ub:
                second_ge_everywhere = False
                if first_above is None:
                    first_above = {
                        "profile": profile.values,
                        "agent": i,
                        "first_utility": ua,
                        "second_utility": ub,
                    }
            elif ub > ua:
                first_ge_everywhere = False
                if second_above is None:
                    second_above = {
                        "profile": profile.values,
                        "agent": i,
                        "first_utility": ua,
                        "second_utility": ub,
                    }
    if first_above is None and second_above is None:
        relation = "EQUAL"
    elif first_ge_everywhere:
        relation = "DOMINATES"
    elif second_ge_everywhere:
        relation = "DOMINATED"
    else:
        relation = "INCOMPARABLE"
    return WelfareComparison(relation, first_above, second_above, count)


# ---------------------------------------------------------------------------
# Witness replay
# ---------------------------------------------------------------------------


def refresh_witness(
    mechanism: Mechanism, axiom: str, witness: dict, grid: GridSpace
) -> dict | None:
    """Recompute a witness's derived fields from its identifying fields.

    Returns the refreshed witness if it still demonstrates a violation,
    or None if it no longer does. Only the identifying fields (profile,
    agent, misreport, ...) are trusted; recorded utilities and bounds are
    recomputed from the mechanism.
    """
    market = grid.config
    if axiom == "IR":
        profile = Profile(market, witness["profile"])
        i = witness["agent"]
        u = utility(mechanism.evaluate(profile).bundles[i], profile.values[i])
        if u < 0:
            return {"profile": profile.values, "agent": i, "utility": u}
        return None
    if axiom == "NS":
        profile = Profile(market, witness["profile"])
        i = witness["agent"]
        t = mechanism.evaluate(profile).bundles[i].t
        if t < 0:
            return {"profile": profile.values, "agent": i, "transfer": t}
        return None
    if axiom == "SP":
        profile = Profile(market, witness["profile"])
        i = witness["agent"]
        report = witness["misreport"]
        honest = utility(
            mechanism.evaluate(profile).bundles[i], profile.values[i]
        )
        gained = utility(
            mechanism.evaluate(profile.with_value(i, report)).bundles[i],
            profile.values[i],
        )
        if gained > honest:
            return {
                "profile": profile.values,
                "agent": i,
                "misreport": report,
                "truthful_utility": honest,
                "misreport_utility": gained,
            }
        return None
    if axiom == "EE":
        profile = Profile(market, witness["profile"])
        if find_reference_bundle(mechanism, profile) is None:
            return {
                "profile": profile.values,
                "utilities": utilities(mechanism.evaluate(profile), profile),
            }
        return None
    if axiom == "EFF":
        profile = Profile(market, witness["profile"])
        achieved = achieved_surplus(mechanism.evaluate(profile), profile)
        optimum = optimal_surplus(profile)
        if achieved != optimum:
            return {
                "profile": profile.values,
                "achieved": achieved,
                "optimum": optimum,
            }
        return None
    if axiom == "EF":
        profile = Profile(market, witness["profile"])
        i, j = witness["agent"], witness["other"]
        alloc = mechanism.evaluate(profile)
        own = utility(alloc.bundles[i], profile.values[i])
        envied = utility(alloc.bundles[j], profile.values[i])
        if envied > own:
            return {
                "profile": profile.values,
                "agent": i,
                "other": j,
                "own_utility": own,
                "other_bundle_utility": envied,
            }
        return None
    if axiom == "AIW":
        profile = Profile(market, witness["profile"])
        i, j = witness["agent"], witness["other"]
        swapped = profile.swapped(i, j)
        mine = utility(
            mechanism.evaluate(profile).bundles[i], profile.values[i]
        )
        theirs = utility(
            mechanism.evaluate(swapped).bundles[j], profile.values[i]
        )
        if mine != theirs:
            return {
                "profile": profile.values,
                "agent": i,
                "other": j,
                "swapped_profile": swapped.values,
                "utility": mine,
                "swapped_utility": theirs,
            }
        return None
    if axiom == "NOM":
        i = witness["agent"]
        true_value = witness["true_value"]
        report = witness["misreport"]
        direction = witness["direction"]
        if witness.get("scope") == "analytic":
            truthful = nom_report_bounds(
                mechanism, market, i, true_value, true_value
            )
            misreported = nom_report_bounds(
                mechanism, market, i, report, true_value
            )
            if truthful is None or misreported is None:
                raise ValueError(
                    "analytic witness for a family without analytic bounds"
                )
            pick = 0 if direction == "SUP" else 1
            if misreported[pick] > truthful[pick]:
                out = dict(witness)
                out["truthful_bound"] = truthful[pick]
                out["misreport_bound"] = misreported[pick]
                return out
            return None
        for candidate in iter_nom_violations(mechanism, grid, analytic=False):
            if (
                candidate["agent"] == i
                and candidate["true_value"] == true_value
                and candidate["misreport"] == report
                and candidate["direction"] == direction
            ):
                return candidate
        return None
    if axiom == "BEST_CASE":
        i = witness["agent"]
        value = witness["value"]
        bounds = nom_report_bounds(mechanism, market, i, value, value)
        if bounds is None:
            raise ValueError("best-case replay needs analytic bounds")
        if bounds[0] != value:
            return {"agent": i, "value": value, "best_case": bounds[0]}
        return None
    raise ValueError(f"unknown axiom: {axiom}")


def replay_witness(
    mechanism: Mechanism, axiom: str, witness: dict, grid: GridSpace
) -> bool:
    """True when the witness still reproduces its violation exactly."""
    return refresh_witness(mechanism, axiom, witness, grid) is not None


CHECKERS: dict[str, Callable[[Mechanism, GridSpace], AxiomReport]] = {
    "EE": check_ee,
    "SP": check_sp,
    "NOM": check_nom,
    "EFF": check_efficiency,
    "IR": check_ir,
    "NS": check_no_subsidy,
    "EF": check_envy_freeness,
    "AIW": check_anonymity_in_welfare,
    "BEST_CASE": check_best_case_utility,
}
