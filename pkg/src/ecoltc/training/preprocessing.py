"""Per-channel scaling and smoothing."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import DegenerateChannel

KINDS = ("zscore", "minmax")


def _as_2d(series) -> np.ndarray:
    X = np.asarray(series, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a (samples, channels) array, got shape {X.shape}")
    return X


class Normalizer(TransformerMixin, BaseEstimator):
    """Affine per-channel scaling, ``(x - offset_) / scale_``.

    ``kind="zscore"`` uses the mean and population standard deviation;
    ``kind="minmax"`` maps the fitted range onto [0, 1]. Constant channels are
    rejected rather than silently passed through.
    """

    def __init__(self, kind: str = "zscore"):
        self.kind = kind

    def fit(self, X, y=None):
        if self.kind not in KINDS:
            raise ValueError(f"unknown normalizer kind {self.kind!r}; choose from {KINDS}")
        X = _as_2d(X)
        if X.shape[0] < 2:
            raise ValueError("need at least two samples per channel")
        if self.kind == "zscore":
            offset = X.mean(axis=0)
            scale = X.std(axis=0)
        else:
            offset = X.min(axis=0)
            scale = X.max(axis=0) - offset
        bad = np.flatnonzero(~(scale > 0))
        if bad.size:
            raise DegenerateChannel(f"channel(s) {bad.tolist()} are constant")
        self.offset_ = offset
        self.scale_ = scale
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = np.asarray(X, dtype=np.float64)
        return (X - self.offset_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X = np.asarray(X, dtype=np.float64)
        return X * self.scale_ + self.offset_

    def subset(self, channels) -> "Normalizer":
        """A normalizer restricted to the given channel indices."""
        check_is_fitted(self, "scale_")
        out = Normalizer(self.kind)
        out.offset_ = self.offset_[list(channels)].copy()
        out.scale_ = self.scale_[list(channels)].copy()
        out.n_features_in_ = len(out.scale_)
        return out

    def to_dict(self) -> dict:
        check_is_fitted(self, "scale_")
        return {"kind": self.kind, "offset": self.offset_.tolist(), "scale": self.scale_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        out = cls(d["kind"])
        out.offset_ = np.asarray(d["offset"], dtype=np.float64)
        out.scale_ = np.asarray(d["scale"], dtype=np.float64)
        out.n_features_in_ = len(out.scale_)
        return out


def fit_normalizer(series, kind: str = "zscore") -> Normalizer:
    return Normalizer(kind).fit(series)


def apply(normalizer: Normalizer, series) -> np.ndarray:
    return normalizer.transform(series)


def invert(normalizer: Normalizer, series) -> np.ndarray:
    return normalizer.inverse_transform(series)


def rolling_average(series, window: int) -> np.ndarray:
    """Centered moving mean along the first axis with truncated edge windows.

    For even windows the extra sample is taken from the past.
    """
    X = np.asarray(series, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= window <= n:
        raise ValueError(f"window must be in [1, {n}], got {window}")
    before = window // 2
    after = window - 1 - before
    pad = [(before, after)] + [(0, 0)] * (X.ndim - 1)
    padded = np.pad(X, pad, constant_values=np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(padded, window, axis=0)
    return np.nanmean(windows, axis=-1)
