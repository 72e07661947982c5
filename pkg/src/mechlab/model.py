"""Exact domain model for allocating identical indivisible objects with money.

A market has n agents and m < n identical objects; each agent consumes at
most one object. A bundle is a pair (x, t) of an object indicator and a
money transfer, and utility is quasi-linear: v * x - t. Every quantity is
an exact rational; floats are rejected at the boundary so no rounding can
creep into a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

RationalLike = Union[int, str, Fraction]


def rat(value: RationalLike) -> Fraction:
    """Parse an exact rational from an int, a "p/q" string, or a Fraction.

    Floats are rejected: exactness is the point of this package, and a
    float that survived this far is already a bug.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rational values")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected int, str or Fraction, got {type(value).__name__}")


def rat_str(value: RationalLike) -> str:
    """Canonical "p/q" form (the "/q" is omitted when q is 1)."""
    return str(rat(value))


@dataclass(frozen=True)
class MarketConfig:
    """n agents, m identical objects, with n > m >= 1."""

    n: int
    m: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not isinstance(self.m, int):
            raise TypeError("agent and object counts must be ints")
        if self.m < 1:
            raise ValueError("need at least one object (m >= 1)")
        if self.n <= self.m:
            raise ValueError("need more agents than objects (n > m)")

    @property
    def agents(self) -> range:
        return range(self.n)


@dataclass(frozen=True)
class Bundle:
    """An object indicator x in {0, 1} and a money transfer t paid by the agent.

    Negative t is money received (a subsidy).
    """

    x: int
    t: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.x not in (0, 1):
            raise ValueError("object indicator must be 0 or 1")
        object.__setattr__(self, "t", rat(self.t))


ZERO_BUNDLE = Bundle(0, Fraction(0))


def utility(bundle: Bundle, value: RationalLike) -> Fraction:
    """Quasi-linear utility of holding `bundle` when the object is worth `value`."""
    return rat(value) * bundle.x - bundle.t


@dataclass(frozen=True)
class Profile:
    """A valuation profile: one non-negative rational per agent."""

    config: MarketConfig
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        vals = tuple(rat(v) for v in self.values)
        if len(vals) != self.config.n:
            raise ValueError(f"expected {self.config.n} values, got {len(vals)}")
        if any(v < 0 for v in vals):
            raise ValueError("valuations must be non-negative")
        object.__setattr__(self, "values", vals)

    def with_value(self, agent: int, value: RationalLike) -> "Profile":
        """Copy of this profile with one agent's valuation replaced."""
        vals = list(self.values)
        vals[agent] = rat(value)
        return Profile(self.config, tuple(vals))

    def swapped(self, i: int, j: int) -> "Profile":
        """Copy of this profile with the valuations of agents i and j exchanged."""
        vals = list(self.values)
        vals[i], vals[j] = vals[j], vals[i]
        return Profile(self.config, tuple(vals))


def make_profile(config: MarketConfig, values: Iterable[RationalLike]) -> Profile:
    return Profile(config, tuple(rat(v) for v in values))


def kth_highest(profile: Profile, k: int) -> Fraction:
    """The k-th highest valuation, 1-indexed (k=1 is the maximum)."""
    if not 1 <= k <= profile.config.n:
        raise ValueError(f"k must be in 1..{profile.config.n}, got {k}")
    return sorted(profile.values, reverse=True)[k - 1]


def vickrey_price(profile: Profile) -> Fraction:
    """The (m+1)-th highest valuation: the price a winner pays under Vickrey rules."""
    return kth_highest(profile, profile.config.m + 1)


def has_uniform_tail(profile: Profile) -> bool:
    """Whether all valuations ranked (m+1)-th or lower are equal.

    On these profiles every losing agent values the object identically,
    so a single Vickrey price clears the market. Trivially true when
    m = n - 1 (only one rank is in the tail).
    """
    ordered = sorted(profile.values, reverse=True)
    tail = ordered[profile.config.m :]
    return all(v == tail[0] for v in tail)


@dataclass(frozen=True)
class Allocation:
    """One bundle per agent."""

    bundles: tuple[Bundle, ...]

    @property
    def winners(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bundles) if b.x == 1)

    @property
    def transfers(self) -> tuple[Fraction, ...]:
        return tuple(b.t for b in self.bundles)


def all_zero_allocation(config: MarketConfig) -> Allocation:
    return Allocation((ZERO_BUNDLE,) * config.n)


def is_feasible(allocation: Allocation, config: MarketConfig) -> bool:
    """Feasibility: one bundle per agent and at most m objects handed out."""
    if len(allocation.bundles) != config.n:
        return False
    return sum(b.x for b in allocation.bundles) <= config.m


def utilities(allocation: Allocation, profile: Profile) -> tuple[Fraction, ...]:
    """Per-agent utilities of an allocation under a profile."""
    return tuple(
        utility(b, v) for b, v in zip(allocation.bundles, profile.values)
    )


def optimal_surplus(profile: Profile) -> Fraction:
    """The largest achievable total valuation: the sum of the m highest values."""
    ordered = sorted(profile.values, reverse=True)
    return sum(ordered[: profile.config.m], Fraction(0))


def achieved_surplus(allocation: Allocation, profile: Profile) -> Fraction:
    """Total valuation realized by an allocation's object assignment."""
    return sum(
        (v for b, v in zip(allocation.bundles, profile.values) if b.x == 1),
        Fraction(0),
    )
