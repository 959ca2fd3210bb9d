"""Seven-step resilience assessment of a simulation trace.

1. thresholds for the soybean stock
2. yearly threshold crossings (deviations)
3. buffer classification
4. production consistency
5. required imports
6. tipping points
7. waste trend and plateau

Every function is a pure function of its arguments.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .coupling.simulate import SimulationTrace

SCHEMA_VERSION = "1.0"
STOCK = "soybean"


@dataclass(frozen=True)
class Thresholds:
    min_threshold: float
    max_threshold: float

    def __post_init__(self):
        if not 0 <= self.min_threshold < self.max_threshold:
            raise ValueError("thresholds need 0 <= min < max")


def mean_annual_requirement(trace: SimulationTrace) -> float:
    """Mean yearly soybean mass the feedstock plan asks for, in Mg."""
    return float(trace.period_required.sum(axis=1).mean())


def default_thresholds(trace: SimulationTrace, min_fraction: float = 0.1, max_fraction: float = 3.0) -> Thresholds:
    """Bounds as fractions of the mean annual soybean requirement."""
    req = mean_annual_requirement(trace)
    return Thresholds(min_fraction * req, max_fraction * req)


# -- step 2 --------------------------------------------------------------------


def track_deviations(trace: SimulationTrace, thresholds: Thresholds) -> list[dict]:
    """One event per year whose post-expiry stock snapshot lies outside [min, max]."""
    events = []
    for year, level in zip(trace.years, trace.stock_level):
        if level < thresholds.min_threshold:
            events.append({"year": int(year), "stock": STOCK, "direction": "below", "level_Mg": float(level)})
        elif level > thresholds.max_threshold:
            events.append({"year": int(year), "stock": STOCK, "direction": "above", "level_Mg": float(level)})
    return events


# -- step 3 --------------------------------------------------------------------


def classify_buffers(trace: SimulationTrace, thresholds: Thresholds | None = None) -> dict:
    """A stock is robust when it absorbed every disruption, i.e. production never failed.

    ``wastage_note`` is raised whenever any stock expired to waste.
    """
    n_fail = int(trace.failures.sum())
    waste = float(trace.waste_increment.sum())
    return {
        STOCK: {
            "class": "robust" if n_fail == 0 else "non-robust",
            "wastage_note": waste > 0,
            "failures": n_fail,
            "waste_Mg": waste,
        }
    }


# -- step 4 --------------------------------------------------------------------


def assess_production(trace: SimulationTrace) -> dict:
    rows, cols = np.nonzero(trace.failures)
    failures = [[int(trace.start_year + r), int(c + 1)] for r, c in zip(rows, cols)]
    return {
        "verdict": "strong" if not failures else "flagged",
        "failures": failures,
        "failure_count": len(failures),
        "first_failure_year": trace.first_failure_year,
    }


# -- step 5 --------------------------------------------------------------------


def _decade_bins(years, values) -> list[dict]:
    decades = (np.asarray(years) // 10) * 10
    out = []
    running = 0.0
    for dec in np.unique(decades):
        inc = float(np.asarray(values)[decades == dec].sum())
        running += inc
        out.append({"decade": int(dec), "increment_Mg": inc, "cumulative_Mg": running})
    return out


def measure_imports(trace: SimulationTrace) -> dict:
    total = float(trace.import_increment.sum())
    return {
        "total_Mg": total,
        "event_count": int((trace.period_shortfall > 0).sum()),
        "years_with_imports": int((trace.import_increment > 0).sum()),
        "per_decade": _decade_bins(trace.years, trace.import_increment),
        "vulnerable": total > 0,
    }


# -- step 6 --------------------------------------------------------------------


def _first_run(flags, length: int):
    """Index of the first run of at least ``length`` consecutive True values."""
    run = 0
    for k, f in enumerate(flags):
        run = run + 1 if f else 0
        if run >= length:
            return k - length + 1
    return None


def find_tipping_points(trace: SimulationTrace, thresholds: Thresholds, persistence_years: int = 3) -> list[dict]:
    """Stock-critical: stock below min for ``persistence_years`` consecutive years.

    Production-critical: more than half of a year's periods failed, for
    ``persistence_years`` consecutive years. Each kind is reported at its
    first occurrence.
    """
    if persistence_years < 1:
        raise ValueError("persistence_years must be >= 1")
    points = []
    k = _first_run(trace.stock_level < thresholds.min_threshold, persistence_years)
    if k is not None:
        points.append({"year": int(trace.start_year + k), "kind": "stock-critical"})
    half = trace.failures.shape[1] / 2
    k = _first_run(trace.failures_per_year > half, persistence_years)
    if k is not None:
        points.append({"year": int(trace.start_year + k), "kind": "production-critical"})
    return sorted(points, key=lambda p: (p["year"], p["kind"]))


# -- step 7 --------------------------------------------------------------------


def plateau_index(increments, eps: float = 0.01):
    """First index after which every increment stays below ``eps`` x the largest one, or None."""
    inc = np.asarray(increments, dtype=np.float64)
    if inc.size == 0:
        return None
    peak = inc.max()
    if peak <= 0:
        return 0
    small = inc < eps * peak
    if not small[-1]:
        return None
    # last index that is not small; the plateau starts right after it
    big = np.flatnonzero(~small)
    return int(big[-1] + 1) if big.size else 0


def waste_trend(trace: SimulationTrace, plateau_eps: float = 0.01) -> dict:
    k = plateau_index(trace.waste_increment, plateau_eps)
    return {
        "per_decade": _decade_bins(trace.years, trace.waste_increment),
        "total_Mg": float(trace.waste_increment.sum()),
        "plateau_index": k,
        "plateau_year": None if k is None else int(trace.start_year + k),
    }


# -- composition ---------------------------------------------------------------


@dataclass
class ResilienceReport:
    thresholds: dict
    deviations: list
    buffers: dict
    production: dict
    imports: dict
    tipping_points: list
    waste: dict
    run: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ResilienceReport":
        return cls(**d)

    def summary_table(self) -> str:
        buf = self.buffers[STOCK]
        rows = [
            ("run", self.run.get("name", "")),
            ("min / max threshold (Mg)", f"{self.thresholds['min_threshold']:.1f} / {self.thresholds['max_threshold']:.1f}"),
            ("deviation events", str(len(self.deviations))),
            ("buffer class", buf["class"] + (" (wastage noted)" if buf["wastage_note"] else "")),
            ("production", self.production["verdict"]),
            ("failed periods", str(self.production["failure_count"])),
            ("first failure year", str(self.production["first_failure_year"] or "-")),
            ("required imports (Mg)", f"{self.imports['total_Mg']:.1f}"),
            ("import events", str(self.imports["event_count"])),
            ("tipping points", ", ".join(f"{p['kind']}@{p['year']}" for p in self.tipping_points) or "-"),
            ("total waste (Mg)", f"{self.waste['total_Mg']:.1f}"),
            ("waste plateau year", str(self.waste["plateau_year"] or "-")),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def assess(trace: SimulationTrace, thresholds: Thresholds, persistence_years: int = 3,
           plateau_eps: float = 0.01, name: str = "") -> ResilienceReport:
    return ResilienceReport(
        thresholds={"min_threshold": float(thresholds.min_threshold), "max_threshold": float(thresholds.max_threshold),
                    "persistence_years": int(persistence_years), "plateau_eps": float(plateau_eps)},
        deviations=track_deviations(trace, thresholds),
        buffers=classify_buffers(trace, thresholds),
        production=assess_production(trace),
        imports=measure_imports(trace),
        tipping_points=find_tipping_points(trace, thresholds, persistence_years),
        waste=waste_trend(trace, plateau_eps),
        run={"name": name, "farm_ha": float(trace.farm_ha), "start_year": int(trace.start_year),
             "end_year": int(trace.end_year), "preset": trace.meta.get("preset", trace.meta.get("climate_scenario"))},
    )
