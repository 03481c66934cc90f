"""Fabric resource vectors and capacity arithmetic.

All resource math is done on exact integers (counts of LUTs, FFs, BRAM36
blocks, DSP slices); percentages are exact rationals so that utilization
rounding is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ZeroPercent

RESOURCE_COMPONENTS = ("lut", "ff", "bram", "dsp")


@dataclass(frozen=True)
class ResourceVector:
    lut: int = 0
    ff: int = 0
    bram: int = 0
    dsp: int = 0

    def __post_init__(self):
        for name in RESOURCE_COMPONENTS:
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"resource component {name!r} must be a non-negative int")

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.lut + other.lut,
            self.ff + other.ff,
            self.bram + other.bram,
            self.dsp + other.dsp,
        )

    def fits_within(self, budget: "ResourceVector") -> bool:
        return not self.exceeded_components(budget)

    def exceeded_components(self, budget: "ResourceVector") -> list[str]:
        """Names of components where self > budget, in canonical order."""
        return [
            name
            for name in RESOURCE_COMPONENTS
            if getattr(self, name) > getattr(budget, name)
        ]

    def is_zero(self) -> bool:
        return all(getattr(self, name) == 0 for name in RESOURCE_COMPONENTS)

    def as_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in RESOURCE_COMPONENTS}

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> "ResourceVector":
        unknown = set(mapping) - set(RESOURCE_COMPONENTS)
        if unknown:
            raise ValueError(f"unknown resource components: {sorted(unknown)}")
        return cls(**{name: int(mapping.get(name, 0)) for name in RESOURCE_COMPONENTS})

    @staticmethod
    def total(vectors: Iterable["ResourceVector"]) -> "ResourceVector":
        acc = ResourceVector()
        for vec in vectors:
            acc = acc + vec
        return acc


def round_half_up(value: Fraction) -> int:
    """Decimal-style rounding; banker's rounding would misplace .5 boundaries."""
    return math.floor(value + Fraction(1, 2))


def exact_fraction(value) -> Fraction:
    """Exact rational from an int, a decimal string, or a float literal.

    Floats go through str() so 14.1 means the decimal 141/10, not the
    binary float closest to it.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def derive_component_capacity(absolute: int, percent) -> int:
    """Total component count implied by an absolute usage and its printed percentage."""
    pct = exact_fraction(percent)
    if pct <= 0:
        raise ZeroPercent(f"percentage must be > 0, got {percent}")
    return round_half_up(Fraction(absolute * 100) / pct)


def derive_capacity(
    absolute: ResourceVector, percent: Mapping[str, object]
) -> ResourceVector:
    """Componentwise capacity derivation; every component needs a positive percentage."""
    return ResourceVector.from_mapping(
        {
            name: derive_component_capacity(getattr(absolute, name), percent[name])
            for name in RESOURCE_COMPONENTS
        }
    )


def utilization_percent(used: int, capacity: int) -> Fraction:
    if capacity <= 0:
        raise ZeroPercent("capacity must be > 0 to compute utilization")
    return Fraction(used * 100, capacity)


def format_percent(value: Fraction) -> str:
    """One decimal place, half-up, e.g. Fraction(1405, 100) -> '14.1'."""
    tenths = round_half_up(value * 10)
    return f"{tenths // 10}.{tenths % 10}"
