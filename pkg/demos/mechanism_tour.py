"""Tour of the built-in mechanism families on a few hand-picked profiles.

Run: python3 demos/mechanism_tour.py
"""

from mechlab import (
    MarketConfig,
    PricingRule,
    WinnerRule,
    efficient_vickrey_set,
    ev_pab_mechanism,
    make_profile,
    pay_as_bid_mechanism,
    select_canonical,
    selective_vickrey_mechanism,
    utilities,
    vickrey_mechanism,
    vickrey_set,
)

cfg = MarketConfig(3, 1)


def show(mech, values):
    p = make_profile(cfg, values)
    alloc = mech.evaluate(p)
    print(f"  {mech.name:34s} {str(values):12s} -> winners={alloc.winners} "
          f"transfers={tuple(str(t) for t in alloc.transfers)} "
          f"utilities={tuple(str(u) for u in utilities(alloc, p))}")


print("Allocation sets before canonical selection")
for values in ((5, 3, 2), (3, 3, 2)):
    p = make_profile(cfg, values)
    zs = vickrey_set(p)
    print(f"  vickrey set at {values}: "
          f"{sorted(tuple(sorted(a.winners)) for a in zs)} "
          f"-> canonical winners {select_canonical(zs).winners}")
    es = efficient_vickrey_set(p)
    print(f"  efficient subset:       "
          f"{sorted(tuple(sorted(a.winners)) for a in es)} "
          f"-> canonical winners {select_canonical(es).winners}")

print()
print("Canonical mechanisms on (3,2,2): uniform tail at price 2")
for mech in (
    vickrey_mechanism(),
    pay_as_bid_mechanism(),
    selective_vickrey_mechanism(WinnerRule.strict()),
    selective_vickrey_mechanism(WinnerRule.dictatorial_threshold(0, 2)),
    ev_pab_mechanism(PricingRule.always_ev()),
):
    show(mech, (3, 2, 2))

print()
print("Same mechanisms off the tail, on (3,2,1)")
for mech in (
    vickrey_mechanism(),
    pay_as_bid_mechanism(),
    selective_vickrey_mechanism(WinnerRule.strict()),
    ev_pab_mechanism(PricingRule.always_ev()),
):
    show(mech, (3, 2, 1))

print()
print("EV pricing hands over the whole surplus when opponents bid zero")
show(ev_pab_mechanism(PricingRule.always_ev()), (3, 0, 0))
show(ev_pab_mechanism(PricingRule.ev_iff_price_zero()), (3, 0, 0))
show(ev_pab_mechanism(PricingRule.ev_iff_price_zero()), (3, 2, 2))
