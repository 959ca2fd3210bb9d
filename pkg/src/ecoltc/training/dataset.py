"""Segmented multichannel time series and their CSV interchange format.

CSV layout: one row per timestep, first column ``t_hours``, an optional
``segment_id`` column, then one column per named channel. A JSON sidecar
(``<file>.meta.json``) records which columns are model inputs and which are
targets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import MissingDataset, SchemaMismatch, TooFewSegments
from .preprocessing import Normalizer


@dataclass
class Dataset:
    inputs: list[np.ndarray]
    targets: list[np.ndarray]
    t_hours: list[np.ndarray] | None = None
    input_names: list[str] = field(default_factory=list)
    target_names: list[str] = field(default_factory=list)
    seasonal: bool = False
    segment_ids: list[int] | None = None

    def __post_init__(self):
        self.inputs = [np.atleast_2d(np.asarray(u, dtype=np.float64).T).T for u in self.inputs]
        self.targets = [np.atleast_2d(np.asarray(y, dtype=np.float64).T).T for y in self.targets]
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must have the same number of segments")
        for u, y in zip(self.inputs, self.targets):
            if len(u) != len(y):
                raise ValueError("inputs and targets must share timestamps within each segment")
        if self.t_hours is None:
            self.t_hours = []
            start = 0.0
            for u in self.inputs:
                self.t_hours.append(start + np.arange(len(u), dtype=np.float64))
                start += len(u)
        if self.segment_ids is None:
            self.segment_ids = list(range(len(self.inputs)))
        if not self.input_names:
            self.input_names = [f"u{k}" for k in range(self.n_inputs)]
        if not self.target_names:
            self.target_names = [f"y{k}" for k in range(self.n_targets)]

    @property
    def n_segments(self) -> int:
        return len(self.inputs)

    @property
    def n_inputs(self) -> int:
        return self.inputs[0].shape[1] if self.inputs else 0

    @property
    def n_targets(self) -> int:
        return self.targets[0].shape[1] if self.targets else 0

    @property
    def n_samples(self) -> int:
        return sum(len(u) for u in self.inputs)

    def stacked_inputs(self) -> np.ndarray:
        return np.concatenate(self.inputs, axis=0)

    def stacked_targets(self) -> np.ndarray:
        return np.concatenate(self.targets, axis=0)

    def take_segments(self, idx) -> "Dataset":
        idx = list(idx)
        return Dataset(
            [self.inputs[k] for k in idx],
            [self.targets[k] for k in idx],
            [self.t_hours[k] for k in idx],
            list(self.input_names),
            list(self.target_names),
            self.seasonal,
            [self.segment_ids[k] for k in idx],
        )

    def slice_samples(self, start: int, stop: int) -> "Dataset":
        """Contiguous sample range of a single-segment dataset."""
        if self.n_segments != 1:
            raise ValueError("sample slicing applies to continuous single-segment data")
        return Dataset(
            [self.inputs[0][start:stop]],
            [self.targets[0][start:stop]],
            [self.t_hours[0][start:stop]],
            list(self.input_names),
            list(self.target_names),
            False,
            list(self.segment_ids),
        )

    def select_inputs(self, channels) -> "Dataset":
        channels = list(channels)
        return Dataset(
            [u[:, channels] for u in self.inputs],
            list(self.targets),
            list(self.t_hours),
            [self.input_names[c] for c in channels],
            list(self.target_names),
            self.seasonal,
            list(self.segment_ids),
        )

    def normalized(self, input_norm: Normalizer, target_norm: Normalizer) -> "Dataset":
        return Dataset(
            [input_norm.transform(u) for u in self.inputs],
            [target_norm.transform(y) for y in self.targets],
            list(self.t_hours),
            list(self.input_names),
            list(self.target_names),
            self.seasonal,
            list(self.segment_ids),
        )


def split_dataset(ds: Dataset, train_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Temporal split without shuffling.

    Seasonal data is split by whole segments (earliest segments train);
    continuous data is split by contiguous samples.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    if ds.seasonal or ds.n_segments > 1:
        if ds.n_segments < 2:
            raise TooFewSegments(f"need at least 2 segments, got {ds.n_segments}")
        n_train = min(max(int(round(train_fraction * ds.n_segments)), 1), ds.n_segments - 1)
        return ds.take_segments(range(n_train)), ds.take_segments(range(n_train, ds.n_segments))
    if ds.n_segments == 0 or ds.n_samples < 10:
        raise TooFewSegments(f"need at least 10 contiguous samples, got {ds.n_samples}")
    n_train = int(np.floor(train_fraction * ds.n_samples))
    return ds.slice_samples(0, n_train), ds.slice_samples(n_train, ds.n_samples)


def carve_validation(ds: Dataset, fraction: float = 0.1) -> tuple[Dataset, Dataset | None]:
    """Hold out the last ``fraction`` of a training set for model selection."""
    if fraction <= 0:
        return ds, None
    if ds.seasonal or ds.n_segments > 1:
        if ds.n_segments < 2:
            return ds, None
        n_val = min(max(int(round(fraction * ds.n_segments)), 1), ds.n_segments - 1)
        n_fit = ds.n_segments - n_val
        return ds.take_segments(range(n_fit)), ds.take_segments(range(n_fit, ds.n_segments))
    n_val = int(round(fraction * ds.n_samples))
    if n_val < 2 or ds.n_samples - n_val < 2:
        return ds, None
    n_fit = ds.n_samples - n_val
    return ds.slice_samples(0, n_fit), ds.slice_samples(n_fit, ds.n_samples)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dataset_csv(ds: Dataset, path, extra_meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["t_hours"] + (["segment_id"] if ds.seasonal else []) + ds.input_names + ds.target_names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for seg, t, u, y in zip(ds.segment_ids, ds.t_hours, ds.inputs, ds.targets):
            for k in range(len(t)):
                row = [_fmt(t[k])]
                if ds.seasonal:
                    row.append(str(int(seg)))
                row.extend(_fmt(v) for v in u[k])
                row.extend(_fmt(v) for v in y[k])
                writer.writerow(row)
    meta = {"inputs": ds.input_names, "targets": ds.target_names, "seasonal": ds.seasonal}
    if extra_meta:
        meta.update(extra_meta)
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def read_dataset_csv(path, input_names=None, target_names=None) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise MissingDataset(f"dataset not found: {path}")
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    input_names = list(input_names or meta.get("inputs", []))
    target_names = list(target_names or meta.get("targets", []))
    with open(path, encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    if not header or header[0] != "t_hours":
        raise SchemaMismatch(f"{path}: first column must be t_hours")
    missing = [n for n in input_names + target_names if n not in header]
    if missing or not input_names or not target_names:
        raise SchemaMismatch(f"{path}: missing or unspecified channels {missing}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    col = {name: k for k, name in enumerate(header)}
    t = data[:, 0]
    U = data[:, [col[n] for n in input_names]]
    Y = data[:, [col[n] for n in target_names]]
    if "segment_id" in col:
        seg = data[:, col["segment_id"]].astype(int)
        breaks = np.flatnonzero(np.diff(seg)) + 1
        bounds = np.concatenate([[0], breaks, [len(seg)]])
        parts = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        return Dataset(
            [U[p] for p in parts], [Y[p] for p in parts], [t[p] for p in parts],
            input_names, target_names, True, [int(seg[p.start]) for p in parts],
        )
    return Dataset([U], [Y], [t], input_names, target_names, False, [0])
