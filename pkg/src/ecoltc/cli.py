"""Command-line front end.

    ecoltc gen-data  [--config PATH] [--seed N] [--out DIR] [--set key=value ...]
    ecoltc train     ...
    ecoltc simulate  ... [--preset NAME ...] [--farm HA ...]
    ecoltc sweep     ...
    ecoltc assess    ... [TRACE_DIR ...] [--min MG] [--max MG]
    ecoltc plot      ... [TRACE_DIR ...]
    ecoltc run       ...   (every stage in order)

Failures exit nonzero after printing ``error: code=<Code> message=<text>``
to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .coupling import read_trace
from .exceptions import EcoltcError
from .plotting import plot_traces
from .resilience import Thresholds, assess, default_thresholds

log = logging.getLogger("ecoltc")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="scenario YAML file")
    p.add_argument("--seed", type=int, default=None, help="use this seed for data, training and simulation")
    p.add_argument("--out", type=Path, default=None, help="run output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value (dotted keys, YAML values); repeatable")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecoltc", description="LTC surrogate ecosystem simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("gen-data", "write synthetic plant, climate, growth and demand datasets"),
        ("train", "train node surrogates and controllers"),
        ("sweep", "simulate every farm size x climate preset and write a comparison table"),
        ("run", "gen-data, train, sweep, assess and plot in one go"),
    ]:
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("simulate", help="simulate selected presets and farm sizes")
    _common(p)
    p.add_argument("--preset", action="append", default=None)
    p.add_argument("--farm", type=float, action="append", default=None)
    p = sub.add_parser("assess", help="resilience reports for traces")
    _common(p)
    p.add_argument("traces", nargs="*", type=Path)
    p.add_argument("--min", dest="min_Mg", type=float, default=None)
    p.add_argument("--max", dest="max_Mg", type=float, default=None)
    p = sub.add_parser("plot", help="SVG figures overlaying traces")
    _common(p)
    p.add_argument("traces", nargs="*", type=Path)
    return parser


def _config(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides += [f"seeds.data={args.seed}", f"seeds.training={args.seed}", f"seeds.simulation={args.seed}"]
    if args.out is not None:
        overrides.append(f"output_dir={args.out}")
    return load_config(args.config, overrides)


def cmd_gen_data(cfg, args=None):
    for path in pipeline.gen_data(cfg):
        print(f"wrote {path}")


def cmd_train(cfg, args=None):
    metrics = pipeline.train(cfg)
    for name, values in metrics["test_rmse"].items():
        print(f"{name}: hidden={metrics['hidden'][name]} test_rmse={', '.join(f'{v:.4f}' for v in values)}")
    print(f"cascade tracking rmse: {metrics['cascade_tracking_rmse']:.4f}")


def cmd_simulate(cfg, args=None):
    presets = getattr(args, "preset", None)
    farms = getattr(args, "farm", None)
    for path in pipeline.simulate(cfg, presets=presets, farm_sizes=farms):
        print(f"wrote {path}")


def cmd_sweep(cfg, args=None):
    dirs, table = pipeline.sweep(cfg)
    for path in dirs:
        print(f"wrote {path}")
    print(Path(table).read_text(encoding="utf-8"), end="")


def _traces(cfg, args):
    given = getattr(args, "traces", None)
    return list(given) if given else pipeline.trace_dirs(cfg.output_dir)


def cmd_assess(cfg, args=None):
    th = cfg.thresholds
    out = Path(cfg.output_dir) / "reports"
    out.mkdir(parents=True, exist_ok=True)
    min_Mg = getattr(args, "min_Mg", None)
    max_Mg = getattr(args, "max_Mg", None)
    min_Mg = th.min_Mg if min_Mg is None else min_Mg
    max_Mg = th.max_Mg if max_Mg is None else max_Mg
    for tdir in _traces(cfg, args):
        trace = read_trace(tdir)
        auto = default_thresholds(trace, th.min_fraction, th.max_fraction)
        thresholds = Thresholds(auto.min_threshold if min_Mg is None else min_Mg,
                                auto.max_threshold if max_Mg is None else max_Mg)
        report = assess(trace, thresholds, th.persistence_years, th.plateau_eps, name=Path(tdir).name)
        (out / f"{Path(tdir).name}.json").write_text(report.to_json(), encoding="utf-8")
        table = report.summary_table()
        (out / f"{Path(tdir).name}.txt").write_text(table, encoding="utf-8")
        print(table)


def cmd_plot(cfg, args=None):
    traces = [read_trace(t) for t in _traces(cfg, args)]
    for path in plot_traces(traces, Path(cfg.output_dir) / "plots"):
        print(f"wrote {path}")


def cmd_run(cfg, args=None):
    cmd_gen_data(cfg)
    cmd_train(cfg)
    cmd_sweep(cfg)
    cmd_assess(cfg)
    cmd_plot(cfg)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "assess": cmd_assess,
    "plot": cmd_plot,
    "run": cmd_run,
}


def _fail(code: str, message) -> int:
    text = " ".join(str(message).split())
    print(f"error: code={code} message={json.dumps(text)}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
    except EcoltcError as exc:
        return _fail(exc.code, exc)
    except OSError as exc:
        return _fail("IoError", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
