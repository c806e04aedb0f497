"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np


def check_feature_array(x, n_features: int) -> np.ndarray:
    """Coerce to a finite 2D float64 array with the expected column count."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise ValueError(f"expected shape (n, {n_features}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite values in feature array")
    return arr


def check_labels(y, classes: tuple) -> np.ndarray:
    """Map labels (enum members or their values) to integer class indices."""
    index = {c: i for i, c in enumerate(classes)}
    index.update({c.value: i for i, c in enumerate(classes)})
    try:
        return np.asarray([index[v] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"unknown label {exc.args[0]!r}") from exc
