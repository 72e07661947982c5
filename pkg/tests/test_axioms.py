"""Axiom checkers: verdicts, lexicographic witnesses, analytic bounds, replay."""

from fractions import Fraction

import pytest

from mechlab import (
    AxiomReport,
    Bundle,
    GridSpace,
    MarketConfig,
    Mechanism,
    PricingRule,
    WinnerRule,
    ZERO_BUNDLE,
    check_anonymity_in_welfare,
    check_best_case_utility,
    check_ee,
    check_efficiency,
    check_envy_freeness,
    check_ir,
    check_no_subsidy,
    check_nom,
    check_sp,
    efficient_vickrey_mechanism,
    ev_pab_mechanism,
    find_reference_bundle,
    make_profile,
    merge_reports,
    no_trade_mechanism,
    nom_report_bounds,
    nom_truthful_bounds,
    pay_as_bid_mechanism,
    refresh_witness,
    replay_witness,
    selective_vickrey_mechanism,
    vickrey_mechanism,
    vickrey_price,
    welfare_compare,
    witness_from_json,
    witness_to_json,
)
from mechlab.axioms import MODE_SAMPLED
from mechlab.model import Allocation
from mechlab.search import GridConfig

CFG1 = MarketConfig(3, 1)
GRID = GridConfig(3, 1, values=(0, 1, 2, 3)).space()
GRID5 = GridConfig(3, 1, values=(0, 1, 2, 3, 4)).space()
GRID_M2 = GridConfig(3, 2, values=(0, 1, 2, 3)).space()


def grant_first_mechanism():
    """Hands agent 0 the object for free regardless of reports."""

    def fn(profile):
        bundles = [ZERO_BUNDLE] * profile.config.n
        bundles[0] = Bundle(1, 0)
        return Allocation(tuple(bundles))

    return Mechanism("grant_first", "CUSTOM", fn)


def opaque(mechanism):
    """Rewrap a mechanism so no analytic utility bounds apply to it."""
    return Mechanism(f"opaque({mechanism.name})", "CUSTOM", mechanism.evaluate)


# grid spaces


def test_grid_space_shared_basics():
    assert GRID.size == 64
    assert GRID.is_shared
    assert GRID.shared_values == (0, 1, 2, 3)
    profiles = [p.values for p in GRID.profiles()]
    assert profiles[0] == (0, 0, 0)
    assert profiles[1] == (0, 0, 1)
    assert profiles[-1] == (3, 3, 3)
    assert len(profiles) == 64


def test_grid_space_per_agent_values():
    het = GridSpace(CFG1, ((0, 1), (0, 1), (0, 1, 2)))
    assert het.size == 12
    assert not het.is_shared


def test_grid_space_rejects_wrong_arity():
    with pytest.raises(ValueError):
        GridSpace(CFG1, ((0, 1), (0, 1)))


def test_grid_space_budget():
    big = GridSpace.shared(CFG1, tuple(range(101)))
    with pytest.raises(ValueError, match="budget"):
        next(big.profiles())


def test_grid_space_sampling_is_seed_deterministic():
    samp = GridSpace.shared(CFG1, (0, 1, 2, 3), mode=MODE_SAMPLED, seed=5, samples=50)
    first = [p.values for p in samp.profiles()]
    second = [p.values for p in samp.profiles()]
    assert first == second
    assert len(first) == 50
    other = GridSpace.shared(CFG1, (0, 1, 2, 3), mode=MODE_SAMPLED, seed=6, samples=50)
    assert first != [p.values for p in other.profiles()]


def test_sampled_mode_reports_pass_sampled():
    samp = GridSpace.shared(CFG1, (0, 1, 2, 3), mode=MODE_SAMPLED, seed=5, samples=50)
    assert check_ir(vickrey_mechanism(), samp).verdict == "PASS_SAMPLED"


# individual rationality and no subsidy


def test_ir_fee_violates():
    """A positive participation fee drags truthful utility below zero."""
    report = check_ir(no_trade_mechanism(1), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (0, 0, 0)
    assert report.witness["agent"] == 0
    assert report.witness["utility"] == -1
    assert report.profiles_checked == 64


def test_ir_passes_for_price_takers():
    for mech in (vickrey_mechanism(), pay_as_bid_mechanism(), no_trade_mechanism(0)):
        assert check_ir(mech, GRID).verdict == "PASS_EXHAUSTIVE"


def test_no_subsidy_flags_negative_transfer():
    report = check_no_subsidy(no_trade_mechanism(-1), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["transfer"] == -1
    assert check_no_subsidy(vickrey_mechanism(), GRID).verdict == "PASS_EXHAUSTIVE"


# strategyproofness


def test_sp_pay_as_bid_fails_with_lex_first_witness():
    """First violation in scan order: true (0,0,2), agent 2 shades to 1."""
    report = check_sp(pay_as_bid_mechanism(), GRID5)
    assert report.verdict == "FAIL"
    assert report.witness == {
        "profile": (0, 0, 2),
        "agent": 2,
        "misreport": 1,
        "truthful_utility": 0,
        "misreport_utility": 1,
    }


def test_sp_witness_replays_at_other_profiles():
    """Shading 4 down to 2 against (1,0) keeps the win and pockets the gap."""
    fresh = refresh_witness(
        pay_as_bid_mechanism(), "SP", {"profile": (4, 1, 0), "agent": 0, "misreport": 2},
        GRID5,
    )
    assert fresh is not None
    assert fresh["truthful_utility"] == 0
    assert fresh["misreport_utility"] == 2


def test_sp_passes_for_price_based_mechanisms():
    for mech in (
        vickrey_mechanism(),
        efficient_vickrey_mechanism(),
        selective_vickrey_mechanism(WinnerRule.strict()),
        no_trade_mechanism(0),
    ):
        assert check_sp(mech, GRID).verdict == "PASS_EXHAUSTIVE", mech.name


def test_sp_fails_for_always_ev_pricing():
    # efficient and not obviously manipulable, yet a loser can turn winner
    report = check_sp(ev_pab_mechanism(PricingRule.always_ev()), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (0, 1, 3)
    assert report.witness["agent"] == 2
    assert report.witness["misreport"] == 2
    assert report.witness["misreport_utility"] == 1


# reference bundles and equal treatment


def test_find_reference_bundle_examples():
    aev = ev_pab_mechanism(PricingRule.always_ev())
    assert find_reference_bundle(aev, make_profile(CFG1, (3, 2, 2))) == Bundle(1, 2)
    assert find_reference_bundle(vickrey_mechanism(), make_profile(CFG1, (3, 2, 1))) is None
    assert find_reference_bundle(no_trade_mechanism(0), make_profile(CFG1, (3, 2, 1))) == Bundle(0, 0)


def test_ee_vickrey_fails():
    """Canonical Vickrey breaks indifference: at (3,2,1) no single bundle
    leaves the winner and both losers equally well off."""
    report = check_ee(vickrey_mechanism(), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (0, 1, 2)
    fresh = refresh_witness(vickrey_mechanism(), "EE", {"profile": (3, 2, 1)}, GRID)
    assert fresh is not None
    assert fresh["utilities"] == (1, 0, 0)


def test_ee_passes_for_uniform_outcomes():
    assert check_ee(pay_as_bid_mechanism(), GRID).verdict == "PASS_EXHAUSTIVE"
    strict = selective_vickrey_mechanism(WinnerRule.strict())
    assert check_ee(strict, GRID).verdict == "PASS_EXHAUSTIVE"
    assert check_ee(no_trade_mechanism(1), GRID).verdict == "PASS_EXHAUSTIVE"


def test_selective_reference_bundle_is_zero_or_priced_object():
    # the indifference point is either no trade or the object at the price
    for rule in (WinnerRule.strict(), WinnerRule.efficient(),
                 WinnerRule.dictatorial_threshold(0, 2)):
        mech = selective_vickrey_mechanism(rule)
        for p in GRID.profiles():
            ref = find_reference_bundle(mech, p)
            assert ref in (Bundle(0, 0), Bundle(1, vickrey_price(p)))


# efficiency


def test_efficiency_selective_fails_off_tail():
    report = check_efficiency(selective_vickrey_mechanism(WinnerRule.strict()), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (0, 1, 1)
    fresh = refresh_witness(
        selective_vickrey_mechanism(WinnerRule.strict()), "EFF", {"profile": (3, 2, 1)},
        GRID,
    )
    assert fresh["achieved"] == 0
    assert fresh["optimum"] == 3


def test_efficiency_passes_for_surplus_maximizers():
    assert check_efficiency(efficient_vickrey_mechanism(), GRID).verdict == "PASS_EXHAUSTIVE"
    assert check_efficiency(pay_as_bid_mechanism(), GRID).verdict == "PASS_EXHAUSTIVE"
    assert check_efficiency(ev_pab_mechanism(PricingRule.always_ev()), GRID).verdict == "PASS_EXHAUSTIVE"


# obvious manipulability


def test_nom_truthful_bounds_examples():
    """Best case equals the valuation under EV pricing, zero under own-bid."""
    aev = ev_pab_mechanism(PricingRule.always_ev())
    assert nom_truthful_bounds(aev, CFG1, 0, 3) == (3, 0)
    assert nom_truthful_bounds(pay_as_bid_mechanism(), CFG1, 0, 4) == (0, 0)
    assert nom_truthful_bounds(no_trade_mechanism(0), CFG1, 0, 2) == (0, 0)
    assert nom_truthful_bounds(vickrey_mechanism(), CFG1, 0, 2) == (2, 0)


def test_nom_report_bounds_own_bid_shading():
    # reporting 2 with value 4 can win at price 2, never lose money
    assert nom_report_bounds(pay_as_bid_mechanism(), CFG1, 0, 2, 4) == (2, 0)
    # overbidding with value 0 risks paying the bid
    assert nom_report_bounds(pay_as_bid_mechanism(), CFG1, 0, 2, 0) == (0, -2)


def test_nom_pay_as_bid_obviously_manipulable():
    report = check_nom(pay_as_bid_mechanism(), GRID)
    assert report.verdict == "FAIL"
    assert report.details["scope"] == "analytic"
    assert report.profiles_checked == 0
    w = report.witness
    assert (w["agent"], w["true_value"], w["misreport"]) == (0, 2, 1)
    assert w["direction"] == "SUP"
    assert w["truthful_bound"] == 0
    assert w["misreport_bound"] == 1
    assert w["realizing_opponents"] == (0, 0)


def test_nom_always_ev_passes_with_bounds_table():
    report = check_nom(ev_pab_mechanism(PricingRule.always_ev()), GRID)
    assert report.verdict == "PASS_ANALYTIC"
    assert report.details["truthful_bounds"] == {
        "0": ["0", "0"],
        "1": ["1", "0"],
        "2": ["2", "0"],
        "3": ["3", "0"],
    }


def test_nom_grid_route_matches_analytic_identity():
    report = check_nom(pay_as_bid_mechanism(), GRID, analytic=False)
    assert report.verdict == "FAIL"
    assert report.details["scope"] == "grid"
    w = report.witness
    assert (w["agent"], w["true_value"], w["misreport"]) == (0, 2, 1)


def test_sp_implies_nom_at_grid_scope():
    for mech in (
        vickrey_mechanism(),
        efficient_vickrey_mechanism(),
        selective_vickrey_mechanism(WinnerRule.strict()),
        no_trade_mechanism(0),
    ):
        assert check_nom(mech, GRID, analytic=False).verdict == "PASS_SAMPLED", mech.name


def test_nom_custom_mechanism_takes_grid_route():
    report = check_nom(grant_first_mechanism(), GRID)
    assert report.details["scope"] == "grid"


# best-case utility


def test_best_case_always_ev_attains_valuation():
    report = check_best_case_utility(ev_pab_mechanism(PricingRule.always_ev()), GRID)
    assert report.verdict == "PASS_ANALYTIC"
    assert report.details["realizer"] == "all-zero opponents attain the bound"


def test_best_case_pay_as_bid_fails():
    """Own-bid pricing caps the truthful best case at zero, not the valuation."""
    report = check_best_case_utility(pay_as_bid_mechanism(), GRID)
    assert report.verdict == "FAIL"
    assert report.witness == {"agent": 0, "value": 1, "best_case": 0}


def test_best_case_requires_preconditions():
    report = check_best_case_utility(grant_first_mechanism(), GRID)
    assert report.verdict == "NOT_APPLICABLE"
    assert "EFF" in report.details["reason"]


def test_best_case_black_box_not_certified():
    # grid evidence alone cannot bound utilities over all real opponents
    report = check_best_case_utility(opaque(efficient_vickrey_mechanism()), GRID)
    assert report.verdict == "NOT_CERTIFIED"
    assert "reason" in report.details


# envy-freeness


def test_envy_freeness_passes_for_uniform_price():
    assert check_envy_freeness(
        selective_vickrey_mechanism(WinnerRule.strict()), GRID
    ).verdict == "PASS_EXHAUSTIVE"
    assert check_envy_freeness(
        ev_pab_mechanism(PricingRule.always_ev()), GRID
    ).verdict == "PASS_EXHAUSTIVE"


def test_envy_freeness_flags_free_grant():
    report = check_envy_freeness(grant_first_mechanism(), GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (0, 0, 1)
    assert report.witness["agent"] == 2
    assert report.witness["other"] == 0
    assert report.witness["other_bundle_utility"] == 1


def test_envy_freeness_own_bid_two_objects():
    """With two objects at own-bid prices the high bidder envies the low one."""
    neg = ev_pab_mechanism(PricingRule.threshold(-1))
    report = check_envy_freeness(neg, GRID_M2)
    assert report.verdict == "FAIL"
    fresh = refresh_witness(neg, "EF", {"profile": (3, 2, 0), "agent": 0, "other": 1}, GRID_M2)
    assert fresh["own_utility"] == 0
    assert fresh["other_bundle_utility"] == 1


# anonymity in welfare


def test_anonymity_dictatorial_rule_fails():
    dct = selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2))
    report = check_anonymity_in_welfare(dct, GRID)
    assert report.verdict == "FAIL"
    assert report.witness["profile"] == (2, 2, 3)
    fresh = refresh_witness(dct, "AIW", {"profile": (3, 2, 2), "agent": 0, "other": 1}, GRID)
    assert fresh["utility"] == 1
    assert fresh["swapped_utility"] == 0
    assert fresh["swapped_profile"] == (2, 3, 2)


def test_anonymity_symmetric_rules_pass():
    for mech in (
        selective_vickrey_mechanism(WinnerRule.efficient()),
        selective_vickrey_mechanism(WinnerRule.strict()),
        no_trade_mechanism(1),
    ):
        assert check_anonymity_in_welfare(mech, GRID).verdict == "PASS_EXHAUSTIVE"


def test_anonymity_needs_shared_grid():
    het = GridSpace(CFG1, ((0, 1), (0, 1), (0, 1, 2)))
    with pytest.raises(ValueError, match="shared value set"):
        check_anonymity_in_welfare(vickrey_mechanism(), het)


# welfare comparison


def test_welfare_compare_self_is_equal():
    aev = ev_pab_mechanism(PricingRule.always_ev())
    cmp = welfare_compare(aev, aev, GRID)
    assert cmp.relation == "EQUAL"
    assert cmp.strict_first is None and cmp.strict_second is None


def test_welfare_always_ev_dominates_iff_zero():
    """EV pricing forgives the price whenever possible; restricting it to the
    free case can only lower someone's utility."""
    first = ev_pab_mechanism(PricingRule.always_ev())
    second = ev_pab_mechanism(PricingRule.ev_iff_price_zero())
    cmp = welfare_compare(first, second, GRID)
    assert cmp.relation == "DOMINATES"
    assert cmp.strict_second is None
    assert cmp.profiles_checked == 64
    p = make_profile(CFG1, (3, 1, 1))
    u_first = first.evaluate(p)
    u_second = second.evaluate(p)
    assert u_first.bundles[0] == Bundle(1, 1)
    assert u_second.bundles[0] == Bundle(1, 3)


def test_welfare_vickrey_dominates_no_trade():
    cmp = welfare_compare(vickrey_mechanism(), no_trade_mechanism(0), GRID)
    assert cmp.relation == "DOMINATES"


def test_welfare_incomparable_dictators():
    first = selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2))
    second = selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(1, 2))
    cmp = welfare_compare(first, second, GRID)
    assert cmp.relation == "INCOMPARABLE"
    assert cmp.strict_first["profile"] == (3, 2, 2)
    assert cmp.strict_second["profile"] == (2, 3, 2)


# report plumbing


def test_merge_reports_counts_and_fail_precedence():
    a = AxiomReport("IR", "PASS_EXHAUSTIVE", None, 10)
    b = AxiomReport("IR", "FAIL", {"profile": (2, 0, 0), "agent": 0, "utility": -1}, 10)
    c = AxiomReport("IR", "FAIL", {"profile": (1, 0, 0), "agent": 0, "utility": -1}, 10)
    merged = merge_reports(merge_reports(a, b), c)
    assert merged.verdict == "FAIL"
    assert merged.profiles_checked == 30
    assert merged.witness["profile"] == (1, 0, 0), "earliest witness wins"
    assert merge_reports(b, c) == merge_reports(c, b)


def test_merge_reports_keeps_weakest_pass():
    a = AxiomReport("IR", "PASS_EXHAUSTIVE", None, 10)
    b = AxiomReport("IR", "PASS_SAMPLED", None, 5)
    assert merge_reports(a, b).verdict == "PASS_SAMPLED"


def test_workers_do_not_change_reports():
    serial = GridConfig(3, 1, values=(0, 1, 2, 3)).space()
    parallel = GridConfig(3, 1, values=(0, 1, 2, 3)).space(workers=3)
    for check in (check_sp, check_ee, check_ir):
        assert check(pay_as_bid_mechanism(), serial) == check(
            pay_as_bid_mechanism(), parallel
        )


def test_witness_json_round_trip():
    cases = [
        ("SP", check_sp(pay_as_bid_mechanism(), GRID5).witness),
        ("EE", check_ee(vickrey_mechanism(), GRID).witness),
        ("NOM", check_nom(pay_as_bid_mechanism(), GRID).witness),
        ("AIW", check_anonymity_in_welfare(
            selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2)), GRID
        ).witness),
    ]
    for axiom, witness in cases:
        encoded = witness_to_json(witness)
        assert witness_from_json(encoded) == witness, axiom


def test_report_to_json_shape():
    report = check_ir(no_trade_mechanism(1), GRID)
    data = report.to_json()
    assert data["axiom"] == "IR"
    assert data["verdict"] == "FAIL"
    assert data["profiles_checked"] == 64
    assert data["witness"]["utility"] == "-1"


def test_replay_witness_accepts_real_and_rejects_doctored():
    witness = check_sp(pay_as_bid_mechanism(), GRID5).witness
    assert replay_witness(pay_as_bid_mechanism(), "SP", witness, GRID5)
    fake = dict(witness, misreport=Fraction(4))
    assert not replay_witness(pay_as_bid_mechanism(), "SP", fake, GRID5)
