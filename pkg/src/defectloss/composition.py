"""Chemical formula parsing and average atomic masses.

Standard atomic weights come from the bundled IUPAC-2021 table
(conventional values for interval elements). All masses returned in kg.
"""

from __future__ import annotations

import csv
import re
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .constants import AMU


class FormulaError(ValueError):
    """Raised for formulas that cannot be resolved against the mass table."""


_TOKEN = re.compile(r"([A-Z][a-z]?)(\d*)")


@lru_cache(maxsize=1)
def atomic_masses_amu() -> Mapping[str, float]:
    """The bundled symbol -> standard atomic weight table."""
    path = resources.files("defectloss").joinpath("data/atomic_masses.csv")
    reader = csv.DictReader(path.read_text(encoding="utf-8").splitlines())
    return {row["symbol"]: float(row["standard_atomic_weight_amu"])
            for row in reader}


def parse_formula(text: str) -> dict[str, int]:
    """Parse a plain chemical formula ("Al2O3") into element counts.

    Only element symbols with optional positive integer counts are
    supported; parenthesized groups are rejected.
    """
    if not text or not text.strip():
        raise FormulaError("empty formula")
    text = text.strip()
    if "(" in text or ")" in text:
        raise FormulaError(f"parenthesized groups are not supported: {text!r}")

    known = atomic_masses_amu()
    counts: dict[str, int] = {}
    pos = 0
    for match in _TOKEN.finditer(text):
        if match.start() != pos:
            raise FormulaError(f"unparseable formula {text!r} at {text[pos:]!r}")
        pos = match.end()
        symbol, digits = match.groups()
        if not symbol:
            continue
        if symbol not in known:
            raise FormulaError(f"unknown element symbol {symbol!r} in {text!r}")
        n = int(digits) if digits else 1
        if n <= 0:
            raise FormulaError(f"non-positive count for {symbol!r} in {text!r}")
        counts[symbol] = counts.get(symbol, 0) + n
    if pos != len(text) or not counts:
        raise FormulaError(f"unparseable formula {text!r}")
    return counts


def average_atomic_mass(composition: Mapping[str, int]) -> float:
    """Count-weighted mean atomic mass of a composition, in kg."""
    if not composition:
        raise FormulaError("empty composition")
    masses = atomic_masses_amu()
    total = 0.0
    atoms = 0
    for symbol, count in composition.items():
        if symbol not in masses:
            raise FormulaError(f"unknown element symbol {symbol!r}")
        if count <= 0:
            raise FormulaError(f"non-positive count for {symbol!r}")
        total += masses[symbol] * count
        atoms += count
    return total / atoms * AMU


@lru_cache(maxsize=4096)
def composition_of(formula: str) -> dict[str, int]:
    """Cached parse for the screening hot path; treat the result as
    read-only."""
    return parse_formula(formula)


@lru_cache(maxsize=4096)
def average_mass_of(formula: str) -> float:
    """Cached formula-string shortcut for the screening hot path (kg)."""
    return average_atomic_mass(composition_of(formula))
