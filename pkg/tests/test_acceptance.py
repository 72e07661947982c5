"""End-to-end acceptance checks, one printed verdict line per criterion.

Run with -s to see the lines. Default setting throughout: three agents, one
object, shared value grid {0,1,2,3}, exhaustive enumeration.
"""

import json
import random
import time
from fractions import Fraction

from mechlab import (
    Bundle,
    MarketConfig,
    PricingRule,
    WinnerRule,
    builtin_mechanisms,
    check_anonymity_in_welfare,
    check_ee,
    check_efficiency,
    check_ir,
    check_no_subsidy,
    check_nom,
    check_sp,
    check_uncompromising,
    efficient_vickrey_mechanism,
    ev_pab_mechanism,
    find_obvious_manipulation,
    find_reference_bundle,
    make_profile,
    no_trade_mechanism,
    pay_as_bid_mechanism,
    refresh_witness,
    selective_vickrey_mechanism,
    utilities,
    utility,
    validate_winner_rule,
    vickrey_mechanism,
    welfare_compare,
    random_uncompromising_rules,
)
from mechlab.cli import load_config, main
from mechlab.search import GridConfig

GRID = GridConfig(3, 1, values=(0, 1, 2, 3)).space()
GRID5 = GridConfig(3, 1, values=(0, 1, 2, 3, 4)).space()
GRID_M2 = GridConfig(3, 2, values=(0, 1, 2, 3)).space()
CORE_AXIOMS = (check_ee, check_sp, check_ir, check_no_subsidy)


def report(num, ok, text):
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}: {text}")
    assert ok, f"criterion {num}: {text}"


def test_criterion_01_independence_matrix():
    """Each of the four core axioms is broken by exactly one benchmark mechanism."""
    started = time.perf_counter()
    mechanisms = [
        vickrey_mechanism(),
        pay_as_bid_mechanism(),
        no_trade_mechanism(1),
        no_trade_mechanism(-1),
    ]
    expected_fail = {
        "vickrey": "EE",
        "pay_as_bid": "SP",
        "no_trade(fee=1)": "IR",
        "no_trade(fee=-1)": "NS",
    }
    matrix_ok = True
    for mech in mechanisms:
        for check in CORE_AXIOMS:
            verdict = check(mech, GRID).verdict
            axiom = check(mech, GRID).axiom
            if axiom == expected_fail[mech.name]:
                matrix_ok &= verdict == "FAIL"
            else:
                matrix_ok &= verdict == "PASS_EXHAUSTIVE"
    elapsed = time.perf_counter() - started
    report(
        1,
        matrix_ok and elapsed < 1.0,
        f"4x4 independence matrix matches designed pattern in {elapsed:.2f}s",
    )


def test_criterion_02_uncompromising_rules_satisfy_core_axioms():
    """Built-in winner rules plus 20 random uncompromising tables pass EE, SP, IR, NS."""
    started = time.perf_counter()
    rules = [
        WinnerRule.empty(),
        WinnerRule.strict(),
        WinnerRule.dictatorial_threshold(0, 2),
    ]
    rules += random_uncompromising_rules(GRID, count=20, seed=1729)
    ok = len(rules) >= 23
    for rule in rules:
        ok &= validate_winner_rule(rule, GRID).ok
        ok &= check_uncompromising(rule, GRID).ok
        mech = selective_vickrey_mechanism(rule)
        for check in CORE_AXIOMS:
            ok &= check(mech, GRID).verdict == "PASS_EXHAUSTIVE"
    elapsed = time.perf_counter() - started
    report(
        2,
        ok and elapsed < 10.0,
        f"{len(rules)} uncompromising rules pass EE/SP/IR/NS in {elapsed:.2f}s",
    )


def test_criterion_03_uncompromising_equivalence_at_grid_scope():
    """Uncompromising rules are strategyproof; a compromising table turns its
    uncompromisingness violation into the strategyproofness witness."""
    ok = True
    for rule in random_uncompromising_rules(GRID, count=10, seed=42):
        ok &= check_sp(selective_vickrey_mechanism(rule), GRID).verdict == "PASS_EXHAUSTIVE"

    cfg = MarketConfig(3, 1)
    compromising = WinnerRule.rule_table(cfg, {(3, 2, 2): (0,)})
    ok &= validate_winner_rule(compromising, GRID5).ok
    drop = check_uncompromising(compromising, GRID5)
    ok &= drop.verdict == "FAIL"
    ok &= drop.witness["profile"] == (3, 2, 2)
    ok &= drop.witness["agent"] == 0
    ok &= drop.witness["raised_value"] == 4

    sp = check_sp(selective_vickrey_mechanism(compromising), GRID5)
    ok &= sp.verdict == "FAIL"
    # the SP witness is the dropped-winner replay: truth at the raised value,
    # misreport back to the selected entry
    ok &= sp.witness["profile"] == (4, 2, 2)
    ok &= sp.witness["agent"] == 0
    ok &= sp.witness["misreport"] == 3
    ok &= sp.witness["truthful_utility"] == 0
    ok &= sp.witness["misreport_utility"] == 2
    report(3, ok, "uncompromising <=> strategyproof, with witness carried across")


def test_criterion_04_selective_mechanisms_are_inefficient_below_capacity():
    """With m < n-1 every selective no-trade mechanism goes idle at (3,2,1)."""
    rules = [
        WinnerRule.empty(),
        WinnerRule.strict(),
        WinnerRule.dictatorial_threshold(0, 2),
        WinnerRule.efficient(),
    ] + random_uncompromising_rules(GRID, count=3, seed=7)
    ok = True
    for rule in rules:
        mech = selective_vickrey_mechanism(rule)
        ok &= check_efficiency(mech, GRID).verdict == "FAIL"
        replay = refresh_witness(mech, "EFF", {"profile": (3, 2, 1)}, GRID)
        ok &= replay is not None
        ok &= replay["achieved"] == 0 and replay["optimum"] == 3
    report(4, ok, f"{len(rules)} selective rules fail efficiency, witness (3,2,1)")


def test_criterion_05_full_capacity_recovers_efficiency():
    """At m = n-1 the canonical efficient-Vickrey pick satisfies all five axioms
    and coincides in utilities with the strict-winners selective mechanism."""
    ev = efficient_vickrey_mechanism()
    ok = True
    for check in (check_ee, check_sp, check_ir, check_no_subsidy, check_efficiency):
        ok &= check(ev, GRID_M2).verdict == "PASS_EXHAUSTIVE"
    strict = selective_vickrey_mechanism(WinnerRule.strict())
    for p in GRID_M2.profiles():
        ok &= utilities(ev.evaluate(p), p) == utilities(strict.evaluate(p), p)
    report(5, ok, "m=n-1: efficient Vickrey passes EE/SP/IR/NS/EFF, matches strict rule")


def test_criterion_06_ev_pricing_is_not_obviously_manipulable():
    """EV pricing keeps EE/EFF/IR/NS and the best/worst-case report bounds;
    own-bid pricing admits an obvious manipulation."""
    aev = ev_pab_mechanism(PricingRule.always_ev())
    ok = True
    for check in (check_ee, check_efficiency, check_ir, check_no_subsidy):
        ok &= check(aev, GRID).verdict == "PASS_EXHAUSTIVE"
    nom = check_nom(aev, GRID)
    ok &= nom.verdict == "PASS_ANALYTIC"
    ok &= nom.details["truthful_bounds"] == {
        "0": ["0", "0"], "1": ["1", "0"], "2": ["2", "0"], "3": ["3", "0"],
    }
    manipulation = find_obvious_manipulation(pay_as_bid_mechanism(), GRID)
    ok &= manipulation is not None
    ok &= manipulation["direction"] == "SUP"
    ok &= manipulation["truthful_bound"] == 0
    report(6, ok, "always-EV passes EE/EFF/IR/NS/NOM; pay-as-bid is obviously manipulable")


def test_criterion_07_always_ev_maximizes_welfare_in_class():
    """Always-EV pricing dominates the price-zero restriction and is never
    strictly beaten by any built-in pricing variant."""
    first = ev_pab_mechanism(PricingRule.always_ev())
    second = ev_pab_mechanism(PricingRule.ev_iff_price_zero())
    cmp = welfare_compare(first, second, GRID)
    ok = cmp.relation == "DOMINATES"
    p = make_profile(MarketConfig(3, 1), (3, 1, 1))
    ok &= utilities(first.evaluate(p), p)[0] == 2
    ok &= utilities(second.evaluate(p), p)[0] == 0
    rivals = [
        PricingRule.always_ev(),
        PricingRule.ev_iff_price_zero(),
        PricingRule.threshold(-1),
        PricingRule.threshold(0),
        PricingRule.threshold(1),
        PricingRule.threshold(2),
    ]
    for pricing in rivals:
        against = welfare_compare(first, ev_pab_mechanism(pricing), GRID)
        ok &= against.strict_second is None
    report(7, ok, "always-EV dominates price-zero variant; no rival is ever strictly above")


def test_criterion_08_anonymity_in_welfare_split():
    """The dictatorial threshold rule treats swapped agents differently;
    the efficient-winners rule does not."""
    dct = selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2))
    ok = check_anonymity_in_welfare(dct, GRID).verdict == "FAIL"
    replay = refresh_witness(dct, "AIW", {"profile": (3, 2, 2), "agent": 0, "other": 1}, GRID)
    ok &= replay is not None
    ok &= replay["swapped_profile"] == (2, 3, 2)
    ok &= replay["utility"] == 1 and replay["swapped_utility"] == 0
    fair = selective_vickrey_mechanism(WinnerRule.efficient())
    for check in (check_anonymity_in_welfare, check_ee, check_sp, check_ir, check_no_subsidy):
        ok &= check(fair, GRID).verdict == "PASS_EXHAUSTIVE"
    report(8, ok, "dictatorial rule fails anonymity at (3,2,2)~(2,3,2); efficient rule passes all")


def test_criterion_09_reference_bundle_matches_brute_force():
    """find_reference_bundle agrees with trying every candidate bundle."""
    rng = random.Random(90125)
    pool = list(builtin_mechanisms()) + [
        selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2)),
        selective_vickrey_mechanism(WinnerRule.efficient()),
        ev_pab_mechanism(PricingRule.ev_iff_price_zero()),
        ev_pab_mechanism(PricingRule.threshold(1)),
        ev_pab_mechanism(PricingRule.threshold(-1)),
        no_trade_mechanism(Fraction(1, 2)),
    ]
    values = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3), Fraction(4)]
    pairs = 0
    disagreements = 0
    for _ in range(1200):
        mech = rng.choice(pool)
        cfg = MarketConfig(3, rng.choice((1, 2)))
        p = make_profile(cfg, tuple(rng.choice(values) for _ in range(3)))
        outcome = utilities(mech.evaluate(p), p)
        candidates = set()
        for v, u in zip(p.values, outcome):
            candidates.add(Bundle(1, v - u))
            candidates.add(Bundle(0, -u))
        brute = next(
            (z for z in sorted(candidates, key=lambda b: (b.x, b.t))
             if all(utility(z, v) == u for v, u in zip(p.values, outcome))),
            None,
        )
        found = find_reference_bundle(mech, p)
        if (found is None) != (brute is None):
            disagreements += 1
        elif found is not None and not all(
            utility(found, v) == u for v, u in zip(p.values, outcome)
        ):
            disagreements += 1
        pairs += 1
    report(
        9,
        pairs >= 1000 and disagreements == 0,
        f"{pairs} sampled (mechanism, profile) pairs, {disagreements} oracle disagreements",
    )


def test_criterion_10_audit_reports_are_deterministic(tmp_path, capsys, monkeypatch):
    """Identical config and seed give byte-identical reports modulo timing,
    regardless of worker count."""
    cfg = {
        "schema": 1,
        "market": {"agents": 3, "objects": 1},
        "grid": {"values": ["0", "1", "2", "3"]},
        "mode": {"kind": "sampled", "seed": 17, "samples": 60},
        "mechanisms": ["PAY_AS_BID", {"family": "EV_PAB", "pricing": "ALWAYS_EV"}],
        "axioms": ["EE", "SP", "IR", "NS", "NOM"],
    }
    path = tmp_path / "audit.json"
    path.write_text(json.dumps(cfg))

    def run():
        main(["audit", "--config", str(path)])
        raw = capsys.readouterr().out
        data = json.loads(raw)
        data.pop("timing")
        return json.dumps(data, sort_keys=True)

    serial_a = run()
    serial_b = run()
    monkeypatch.setenv("MECHLAB_WORKERS", "4")
    parallel = run()
    ok = serial_a == serial_b == parallel
    report(10, ok, "repeat and 4-worker audits byte-identical once timing is stripped")
