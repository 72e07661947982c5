"""Command-line front end: evaluate, audit, run suites, compare welfare.

The audit contract is the JSON report printed to stdout (and optionally
written to a file): schema-versioned, exact rationals as strings, stable
key order, and witnesses that replay. The aligned text table is
advisory and goes to stderr or a file. Exit codes: 0 when every verdict
is a PASS_*, 1 when any check fails or stays uncertified, 2 for config
or usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from . import __version__
from .axioms import (
    CHECKERS,
    GridSpace,
    find_reference_bundle,
    welfare_compare,
    witness_to_json,
)
from .mechanisms import (
    EV,
    FAMILY_EFFICIENT_VICKREY,
    FAMILY_EV_PAB,
    FAMILY_NO_TRADE,
    FAMILY_PAY_AS_BID,
    FAMILY_SELECTIVE_VICKREY,
    FAMILY_VICKREY,
    Mechanism,
    PAB,
    PRICING_ALWAYS_EV,
    PRICING_EV_IFF_PRICE_ZERO,
    PRICING_TABLE,
    PRICING_THRESHOLD,
    PricingRule,
    RULE_DICTATORIAL_THRESHOLD,
    RULE_EFFICIENT_WINNERS,
    RULE_EMPTY,
    RULE_STRICT_WINNERS,
    RULE_TABLE,
    WinnerRule,
    ev_pab_mechanism,
    efficient_vickrey_mechanism,
    no_trade_mechanism,
    pay_as_bid_mechanism,
    selective_vickrey_mechanism,
    vickrey_mechanism,
)
from .model import (
    MarketConfig,
    Profile,
    has_uniform_tail,
    rat,
    rat_str,
    utilities,
)
from .search import SUITES

WORKERS_ENV = "MECHLAB_WORKERS"

AXIOM_CATALOG = (*CHECKERS.keys(), "WELFARE_COMPARE")


class ConfigError(ValueError):
    """Anything wrong with inputs that the user must fix."""


def _workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {workers}")
    return workers


# ---------------------------------------------------------------------------
# Mechanism specs (JSON <-> objects)
# ---------------------------------------------------------------------------


def parse_winner_rule(spec: Any, market: MarketConfig) -> WinnerRule:
    if isinstance(spec, str):
        spec = {"family": spec}
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError(f"winner rule spec needs a family: {spec!r}")
    family = str(spec["family"]).upper()
    if family == RULE_EMPTY:
        return WinnerRule.empty()
    if family == RULE_STRICT_WINNERS:
        return WinnerRule.strict()
    if family == RULE_EFFICIENT_WINNERS:
        return WinnerRule.efficient()
    if family == RULE_DICTATORIAL_THRESHOLD:
        agent = int(spec["agent"])
        if not 0 <= agent < market.n:
            raise ConfigError(f"dictator index out of range: {agent}")
        return WinnerRule.dictatorial_threshold(agent, rat(spec["threshold"]))
    if family == RULE_TABLE:
        entries = {}
        for entry in spec.get("entries", []):
            key = tuple(rat(v) for v in entry["profile"])
            entries[key] = frozenset(int(i) for i in entry["winners"])
        return WinnerRule.rule_table(market, entries)
    raise ConfigError(f"unknown winner rule family: {family}")


def winner_rule_to_spec(rule: WinnerRule) -> dict:
    if rule.family == RULE_DICTATORIAL_THRESHOLD:
        agent, threshold = rule.params
        return {
            "family": rule.family,
            "agent": agent,
            "threshold": rat_str(threshold),
        }
    if rule.family == RULE_TABLE:
        return {
            "family": rule.family,
            "entries": [
                {
                    "profile": [rat_str(v) for v in key],
                    "winners": sorted(rule.table[key]),
                }
                for key in sorted(rule.table or {})
            ],
        }
    return {"family": rule.family}


def parse_pricing_rule(spec: Any) -> PricingRule:
    if isinstance(spec, str):
        spec = {"family": spec}
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError(f"pricing rule spec needs a family: {spec!r}")
    family = str(spec["family"]).upper()
    if family == PRICING_ALWAYS_EV:
        return PricingRule.always_ev()
    if family == PRICING_EV_IFF_PRICE_ZERO:
        return PricingRule.ev_iff_price_zero()
    if family == PRICING_THRESHOLD:
        return PricingRule.threshold(rat(spec["cutoff"]))
    if family == PRICING_TABLE:
        entries = {}
        for entry in spec.get("entries", []):
            key = tuple(rat(v) for v in entry["profile"])
            entries[key] = str(entry["mode"])
        return PricingRule.rule_table(entries)
    raise ConfigError(f"unknown pricing rule family: {family}")


def pricing_rule_to_spec(pricing: PricingRule) -> dict:
    if pricing.family == PRICING_THRESHOLD:
        return {"family": pricing.family, "cutoff": rat_str(pricing.params[0])}
    if pricing.family == PRICING_TABLE:
        return {
            "family": pricing.family,
            "entries": [
                {
                    "profile": [rat_str(v) for v in key],
                    "mode": pricing.table[key],
                }
                for key in sorted(pricing.table or {})
            ],
        }
    return {"family": pricing.family}


def parse_mechanism(spec: Any, market: MarketConfig) -> Mechanism:
    """Build a mechanism from a JSON spec (or a bare family name)."""
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("{"):
            spec = json.loads(text)
        else:
            spec = {"family": text}
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError(f"mechanism spec needs a family: {spec!r}")
    family = str(spec["family"]).upper()
    if family == FAMILY_VICKREY:
        return vickrey_mechanism()
    if family == FAMILY_EFFICIENT_VICKREY:
        return efficient_vickrey_mechanism()
    if family == FAMILY_PAY_AS_BID:
        return pay_as_bid_mechanism()
    if family == FAMILY_NO_TRADE:
        return no_trade_mechanism(rat(spec.get("fee", 0)))
    if family == FAMILY_SELECTIVE_VICKREY:
        if "rule" not in spec:
            raise ConfigError("SELECTIVE_VICKREY needs a winner rule")
        return selective_vickrey_mechanism(
            parse_winner_rule(spec["rule"], market)
        )
    if family == FAMILY_EV_PAB:
        if "pricing" not in spec:
            raise ConfigError("EV_PAB needs a pricing rule")
        return ev_pab_mechanism(parse_pricing_rule(spec["pricing"]))
    raise ConfigError(f"unknown mechanism family: {family}")


def mechanism_to_spec(mechanism: Mechanism) -> dict:
    """Canonical JSON spec for a parsed mechanism, used in config echoes."""
    if mechanism.family == FAMILY_NO_TRADE:
        return {
            "family": mechanism.family,
            "fee": rat_str(mechanism.params["fee"]),
        }
    if mechanism.family == FAMILY_SELECTIVE_VICKREY:
        return {
            "family": mechanism.family,
            "rule": winner_rule_to_spec(mechanism.params["rule"]),
        }
    if mechanism.family == FAMILY_EV_PAB:
        return {
            "family": mechanism.family,
            "pricing": pricing_rule_to_spec(mechanism.params["pricing"]),
        }
    return {"family": mechanism.family}


# ---------------------------------------------------------------------------
# Audit config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditConfig:
    market: MarketConfig
    values: tuple[tuple[Fraction, ...], ...]
    mode: str
    seed: int
    samples: int
    mechanisms: tuple[Mechanism, ...]
    axioms: tuple[str, ...]
    json_path: str | None
    text_path: str | None

    def grid(self, workers: int = 1) -> GridSpace:
        return GridSpace(
            self.market,
            self.values,
            mode=self.mode,
            seed=self.seed,
            samples=self.samples,
            workers=workers,
        )

    def echo(self) -> dict:
        doc: dict[str, Any] = {
            "schema": 1,
            "market": {"agents": self.market.n, "objects": self.market.m},
            "grid": {
                "per_agent": [
                    [rat_str(v) for v in vals] for vals in self.values
                ]
            },
            "mode": {"kind": self.mode},
            "mechanisms": [mechanism_to_spec(m) for m in self.mechanisms],
            "axioms": list(self.axioms),
        }
        if self.mode == "sampled":
            doc["mode"]["seed"] = self.seed
            doc["mode"]["samples"] = self.samples
        return doc


def _parse_grid_values(
    doc: Any, market: MarketConfig
) -> tuple[tuple[Fraction, ...], ...]:
    if not isinstance(doc, dict):
        raise ConfigError("grid section must be an object")
    if "values" in doc:
        shared = tuple(rat(v) for v in doc["values"])
        return tuple(shared for _ in range(market.n))
    if "per_agent" in doc:
        rows = doc["per_agent"]
        if len(rows) != market.n:
            raise ConfigError("per_agent grid needs one value list per agent")
        return tuple(tuple(rat(v) for v in row) for row in rows)
    if "range" in doc:
        rng = doc["range"]
        denominator = int(rng.get("denominator", 1))
        if denominator < 1:
            raise ConfigError("range denominator must be >= 1")
        top = rat(rng["max"])
        steps = top * denominator
        if steps.denominator != 1 or top < 0:
            raise ConfigError("range max must be a non-negative multiple of 1/denominator")
        shared = tuple(
            Fraction(k, denominator) for k in range(int(steps) + 1)
        )
        return tuple(shared for _ in range(market.n))
    raise ConfigError("grid section needs values, per_agent, or range")


def load_config(path: str) -> AuditConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if doc.get("schema", 1) != 1:
        raise ConfigError(f"unsupported config schema: {doc.get('schema')!r}")
    market_doc = doc.get("market")
    if not isinstance(market_doc, dict):
        raise ConfigError("config needs a market section")
    try:
        market = MarketConfig(
            int(market_doc["agents"]), int(market_doc["objects"])
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad market section: {exc}") from exc
    values = _parse_grid_values(doc.get("grid"), market)
    mode_doc = doc.get("mode", {"kind": "exhaustive"})
    kind = mode_doc.get("kind", "exhaustive")
    if kind not in ("exhaustive", "sampled"):
        raise ConfigError(f"unknown mode kind: {kind!r}")
    seed = int(mode_doc.get("seed", 0))
    samples = int(mode_doc.get("samples", 0))
    if kind == "sampled" and samples < 1:
        raise ConfigError("sampled mode needs samples >= 1")
    mech_docs = doc.get("mechanisms")
    if not mech_docs:
        raise ConfigError("config needs at least one mechanism")
    try:
        mechanisms = tuple(parse_mechanism(m, market) for m in mech_docs)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad mechanism spec: {exc}") from exc
    axioms = tuple(doc.get("axioms") or ())
    if not axioms:
        raise ConfigError("config needs at least one axiom")
    for axiom in axioms:
        if axiom not in AXIOM_CATALOG:
            raise ConfigError(
                f"unknown axiom {axiom!r}; known: {', '.join(AXIOM_CATALOG)}"
            )
    if "WELFARE_COMPARE" in axioms and len(mechanisms) < 2:
        raise ConfigError("WELFARE_COMPARE needs at least two mechanisms")
    shared = all(vals == values[0] for vals in values)
    if "AIW" in axioms and not shared:
        raise ConfigError("AIW needs a shared value set across agents")
    output = doc.get("output", {})
    return AuditConfig(
        market=market,
        values=values,
        mode=kind,
        seed=seed,
        samples=samples,
        mechanisms=mechanisms,
        axioms=axioms,
        json_path=output.get("json"),
        text_path=output.get("text"),
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _compact_witness(witness: dict | None) -> str:
    if not witness:
        return "-"
    parts = []
    for key, value in witness_to_json(witness).items():
        if isinstance(value, list):
            rendered = "(" + ",".join(str(v) for v in value) + ")"
        else:
            rendered = str(value)
        parts.append(f"{key}={rendered}")
    return " ".join(parts)


def _format_rows(header: Sequence[str], rows: list[Sequence[str]]) -> str:
    widths = [
        max(len(str(line[k])) for line in [header, *rows])
        for k in range(len(header))
    ]

    def render(line: Sequence[str]) -> str:
        return "  ".join(
            str(cell).ljust(width) for cell, width in zip(line, widths)
        ).rstrip()

    divider = "  ".join("-" * width for width in widths)
    return "\n".join([render(header), divider, *(render(row) for row in rows)])


def _audit_table(report_doc: dict) -> str:
    rows: list[Sequence[str]] = []
    for result in report_doc["results"]:
        for axiom_report in result["reports"]:
            rows.append(
                (
                    result["mechanism"],
                    axiom_report["axiom"],
                    axiom_report["verdict"],
                    str(axiom_report["profiles_checked"]),
                    _compact_witness(axiom_report.get("witness")),
                )
            )
    for comparison in report_doc.get("comparisons", []):
        rows.append(
            (
                f"{comparison['first']} vs {comparison['second']}",
                "WELFARE_COMPARE",
                f"{comparison['verdict']} ({comparison['relation']})",
                str(comparison["profiles_checked"]),
                _compact_witness(comparison.get("strict_first")),
            )
        )
    return _format_rows(
        ("mechanism", "axiom", "verdict", "profiles", "witness"), rows
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    values = tuple(rat(v.strip()) for v in args.profile.split(","))
    market = MarketConfig(len(values), args.m)
    profile = Profile(market, values)
    mechanism = parse_mechanism(args.mech, market)
    allocation = mechanism.evaluate(profile)
    us = utilities(allocation, profile)
    reference = find_reference_bundle(mechanism, profile)
    bundles = ", ".join(
        f"({b.x}, {rat_str(b.t)})" for b in allocation.bundles
    )
    print(f"mechanism: {mechanism.name}")
    print(f"market: n={market.n}, m={market.m}")
    print(f"profile: ({', '.join(rat_str(v) for v in values)})")
    print(f"allocation: [{bundles}]")
    print(f"utilities: ({', '.join(rat_str(u) for u in us)})")
    print(f"uniform tail: {'yes' if has_uniform_tail(profile) else 'no'}")
    if reference is None:
        print("reference bundle: none")
    else:
        print(f"reference bundle: ({reference.x}, {rat_str(reference.t)})")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    workers = _workers_from_env()
    grid = config.grid(workers=workers)
    started = time.monotonic()
    verdicts: list[str] = []
    results = []
    for mechanism in config.mechanisms:
        reports = []
        for axiom in config.axioms:
            if axiom == "WELFARE_COMPARE":
                continue
            report = CHECKERS[axiom](mechanism, grid)
            reports.append(report.to_json())
            verdicts.append(report.verdict)
        results.append(
            {
                "mechanism": mechanism.name,
                "family": mechanism.family,
                "reports": reports,
            }
        )
    comparisons = []
    if "WELFARE_COMPARE" in config.axioms:
        base = config.mechanisms[0]
        for other in config.mechanisms[1:]:
            outcome = welfare_compare(base, other, grid)
            verdict = (
                grid.pass_verdict
                if outcome.relation in ("DOMINATES", "EQUAL")
                else "FAIL"
            )
            verdicts.append(verdict)
            comparisons.append(
                {
                    "first": base.name,
                    "second": other.name,
                    "verdict": verdict,
                    **outcome.to_json(),
                }
            )
    elapsed = time.monotonic() - started
    all_pass = all(v.startswith("PASS") for v in verdicts)
    tally: dict[str, int] = {}
    for verdict in verdicts:
        tally[verdict] = tally.get(verdict, 0) + 1
    report_doc: dict[str, Any] = {
        "schema": 1,
        "tool": {"name": "mechlab", "version": __version__},
        "config": config.echo(),
        "results": results,
        "summary": {"all_pass": all_pass, "verdicts": tally},
        "timing": {"seconds": round(elapsed, 6)},
    }
    if comparisons:
        report_doc["comparisons"] = comparisons
    json_text = json.dumps(report_doc, indent=2, sort_keys=True)
    print(json_text)
    json_path = args.json or config.json_path
    if json_path:
        with open(json_path, "w", encoding="utf-8") as handle:
            handle.write(json_text + "\n")
    table = _audit_table(report_doc)
    print(table, file=sys.stderr)
    text_path = args.text or config.text_path
    if text_path:
        with open(text_path, "w", encoding="utf-8") as handle:
            handle.write(table + "\n")
    return 0 if all_pass else 1


def cmd_suite(args: argparse.Namespace) -> int:
    workers = _workers_from_env()
    result = SUITES[args.name](workers=workers)
    print(result.title)
    print(result.format_table())
    if result.matched:
        print("expected pattern: matched")
        return 0
    print("expected pattern: MISMATCH")
    for row, column, want, got in result.mismatches():
        print(f"  {row} / {column}: expected {want}, got {got}")
    return 1


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    workers = _workers_from_env()
    grid = config.grid(workers=workers)
    first = parse_mechanism(args.a, config.market)
    second = parse_mechanism(args.b, config.market)
    outcome = welfare_compare(first, second, grid)
    print(f"first:  {first.name}")
    print(f"second: {second.name}")
    print(f"relation: {outcome.relation}")
    print(f"profiles checked: {outcome.profiles_checked}")
    for label, witness in (
        ("first strictly above", outcome.strict_first),
        ("second strictly above", outcome.strict_second),
    ):
        if witness is None:
            print(f"{label}: never")
        else:
            print(f"{label}: {_compact_witness(witness)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechlab",
        description=(
            "Exact-arithmetic audit lab for money-augmented allocation "
            "mechanisms over identical indivisible objects."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"mechlab {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser(
        "eval", help="evaluate one mechanism at one profile"
    )
    p_eval.add_argument("--mech", required=True, help="family name or JSON spec")
    p_eval.add_argument(
        "--profile", required=True, help="comma-separated rational values"
    )
    p_eval.add_argument("--m", type=int, default=1, help="number of objects")
    p_eval.set_defaults(handler=cmd_eval)

    p_audit = sub.add_parser(
        "audit", help="run configured axiom checks, emit a JSON report"
    )
    p_audit.add_argument("--config", required=True, help="JSON config path")
    p_audit.add_argument("--json", help="also write the JSON report here")
    p_audit.add_argument("--text", help="also write the text table here")
    p_audit.set_defaults(handler=cmd_audit)

    p_suite = sub.add_parser(
        "suite", help="run a named suite against its expected pattern"
    )
    p_suite.add_argument("name", choices=sorted(SUITES))
    p_suite.set_defaults(handler=cmd_suite)

    p_compare = sub.add_parser(
        "compare", help="welfare-compare two mechanisms over a grid"
    )
    p_compare.add_argument("--a", required=True, help="first mechanism spec")
    p_compare.add_argument("--b", required=True, help="second mechanism spec")
    p_compare.add_argument("--config", required=True, help="JSON config path")
    p_compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
