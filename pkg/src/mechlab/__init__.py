"""Exact-arithmetic audit lab for money-augmented allocation mechanisms.

Agents with quasi-linear utilities compete for identical indivisible
objects; mechanisms assign (object, transfer) bundles. Everything runs
on `fractions.Fraction`, so every verdict, witness, and report is exact
and replayable.
"""

__version__ = "0.1.0"

from .model import (
    Allocation,
    Bundle,
    MarketConfig,
    Profile,
    ZERO_BUNDLE,
    achieved_surplus,
    all_zero_allocation,
    has_uniform_tail,
    is_feasible,
    kth_highest,
    make_profile,
    optimal_surplus,
    rat,
    rat_str,
    utilities,
    utility,
    vickrey_price,
)
from .mechanisms import (
    Mechanism,
    PricingRule,
    ValidityReport,
    WinnerRule,
    builtin_mechanisms,
    check_ev_support,
    check_uncompromising,
    efficient_vickrey_mechanism,
    efficient_vickrey_set,
    ev_pab_mechanism,
    no_trade_mechanism,
    pay_as_bid_mechanism,
    pay_as_bid_set,
    select_canonical,
    selective_vickrey_mechanism,
    strict_winners,
    validate_winner_rule,
    vickrey_mechanism,
    vickrey_set,
)
from .axioms import (
    AxiomReport,
    CHECKERS,
    GridSpace,
    WelfareComparison,
    check_anonymity_in_welfare,
    check_best_case_utility,
    check_ee,
    check_efficiency,
    check_envy_freeness,
    check_ir,
    check_no_subsidy,
    check_nom,
    check_sp,
    find_reference_bundle,
    merge_reports,
    nom_report_bounds,
    nom_truthful_bounds,
    refresh_witness,
    replay_witness,
    welfare_compare,
    witness_from_json,
    witness_to_json,
)
from .search import (
    GridConfig,
    SUITES,
    SuiteResult,
    enumerate_profiles,
    enumerate_uniform_tail,
    find_obvious_manipulation,
    random_uncompromising_rules,
    random_winner_rule_table,
    shrink_witness,
    suite_anonymity,
    suite_independence,
    suite_nom_class,
    suite_sp_class,
    suite_welfare,
)

__all__ = [name for name in dir() if not name.startswith("_")]
