"""FIFO soybean stock with age-based expiry to waste."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exceptions import NegativeMass

EXPIRY_YEARS = 3


@dataclass
class Stock:
    """Yearly deposit buckets drained oldest first.

    Required imports are tallied here for bookkeeping only; they never enter
    the buckets. The ledger identity is therefore
    ``total_deposited == total_withdrawn + level + cumulative_waste``.
    """

    expiry_years: int = EXPIRY_YEARS
    buckets: list[list] = field(default_factory=list)
    cumulative_waste: float = 0.0
    cumulative_imports: float = 0.0
    import_event_count: int = 0
    total_deposited: float = 0.0
    total_withdrawn: float = 0.0

    @property
    def level(self) -> float:
        return float(sum(m for _, m in self.buckets))

    def deposit(self, year: int, mass: float) -> None:
        if not mass >= 0:
            raise NegativeMass(f"cannot deposit {mass} Mg")
        self.total_deposited += mass
        if self.buckets and self.buckets[-1][0] == year:
            self.buckets[-1][1] += mass
        else:
            self.buckets.append([int(year), float(mass)])

    def withdraw(self, mass: float) -> tuple[float, float]:
        """Take up to ``mass`` oldest-first; returns (withdrawn, shortfall)."""
        if not mass >= 0:
            raise NegativeMass(f"cannot withdraw {mass} Mg")
        remaining = mass
        while remaining > 0 and self.buckets:
            bucket = self.buckets[0]
            take = min(bucket[1], remaining)
            bucket[1] -= take
            remaining -= take
            if bucket[1] <= 0:
                self.buckets.pop(0)
        withdrawn = mass - remaining
        self.total_withdrawn += withdrawn
        return withdrawn, remaining

    def expire(self, current_year: int) -> float:
        """Move every bucket at least ``expiry_years`` old to waste; returns the waste increment."""
        waste = 0.0
        kept = []
        for year, mass in self.buckets:
            if current_year - year >= self.expiry_years:
                waste += mass
            else:
                kept.append([year, mass])
        self.buckets = kept
        self.cumulative_waste += waste
        return waste

    def record_import(self, mass: float) -> None:
        if not mass >= 0:
            raise NegativeMass(f"cannot import {mass} Mg")
        if mass > 0:
            self.cumulative_imports += mass
            self.import_event_count += 1

    def max_age(self, current_year: int) -> int:
        return max((current_year - y for y, m in self.buckets), default=0)


def stock_deposit(stock: Stock, year: int, mass: float) -> Stock:
    stock.deposit(year, mass)
    return stock


def stock_withdraw(stock: Stock, mass_requested: float) -> tuple[float, float]:
    return stock.withdraw(mass_requested)


def stock_expire(stock: Stock, current_year: int) -> float:
    return stock.expire(current_year)
