"""Static SVG figures of simulation traces.

Output is byte-for-byte reproducible: the SVG hash salt is fixed and the
date metadata is dropped.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .coupling.simulate import SimulationTrace  # noqa: E402

FIGURES = ("production", "waste_stock", "imports")
_STYLES = ("-", "--", ":", "-.")


def _setup():
    matplotlib.rcParams["svg.hashsalt"] = "ecoltc"
    matplotlib.rcParams["svg.fonttype"] = "path"
    matplotlib.rcParams["path.simplify"] = True


def _label(tr: SimulationTrace) -> str:
    preset = tr.meta.get("preset", tr.meta.get("climate_scenario", ""))
    return f"{preset} {tr.farm_ha:g} ha"


def _gid(kind: str, tr: SimulationTrace) -> str:
    """SVG group id of one plotted series, so figures can be inspected without rendering."""
    preset = tr.meta.get("preset", tr.meta.get("climate_scenario", ""))
    return f"series-{kind}-{preset}-{tr.farm_ha:g}ha"


def _ordered(traces):
    return sorted(traces, key=lambda t: (str(t.meta.get("preset", "")), t.farm_ha))


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_production(traces, path) -> Path:
    """Weekly mean diesel production; failed weeks drop to zero."""
    fig, ax = plt.subplots(figsize=(9, 4))
    for k, tr in enumerate(_ordered(traces)):
        weekly = tr.weekly_production()
        t = tr.start_year + (np.arange(weekly.size) % weekly.shape[1]) / weekly.shape[1] \
            + np.repeat(np.arange(tr.n_years), weekly.shape[1])
        ax.plot(t, weekly.reshape(-1), _STYLES[k % len(_STYLES)], lw=0.8, label=_label(tr), gid=_gid("production", tr))
    ax.set_xlabel("year")
    ax.set_ylabel("diesel production (Mg/h, weekly mean)")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_waste_stock(traces, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for k, tr in enumerate(_ordered(traces)):
        style = _STYLES[k % len(_STYLES)]
        ax1.plot(tr.years, tr.waste_cumulative, style, lw=1.0, label=_label(tr), gid=_gid("waste", tr))
        ax2.plot(tr.years, tr.stock_level, style, lw=1.0, label=_label(tr), gid=_gid("stock", tr))
    ax1.set_ylabel("cumulative waste (Mg)")
    ax2.set_ylabel("stock (Mg)")
    ax2.set_xlabel("year")
    ax1.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_imports(traces, path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 4))
    for k, tr in enumerate(_ordered(traces)):
        ax.plot(tr.years, tr.import_cumulative, _STYLES[k % len(_STYLES)], lw=1.0, label=_label(tr),
                gid=_gid("imports", tr))
    ax.set_xlabel("year")
    ax.set_ylabel("cumulative required imports (Mg)")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_traces(traces, out_dir) -> list[Path]:
    """Write the three comparison figures overlaying every trace."""
    _setup()
    out_dir = Path(out_dir)
    traces = list(traces)
    return [
        plot_production(traces, out_dir / "production.svg"),
        plot_waste_stock(traces, out_dir / "waste_stock.svg"),
        plot_imports(traces, out_dir / "imports.svg"),
    ]

