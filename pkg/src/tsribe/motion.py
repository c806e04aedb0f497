"""Fingertip trajectory classification: static, up, or down.

The window holds the last 16 index-fingertip positions (one per frame);
inference flattens them to 32 values after subtracting the first position
and max-abs scaling, the same scheme as the gesture features.
"""

from __future__ import annotations

from collections import deque
from enum import Enum
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .core import Landmark
from .mlp import MLP, TrainConfig, train_mlp
from .validation import check_feature_array, check_labels

WINDOW_LEN = 16
N_FEATURES = 2 * WINDOW_LEN  # 32

# Net y-displacement smaller than this (normalized units) counts as static.
STATIC_DEAD_ZONE = 0.03


class MotionClass(str, Enum):
    STATIC = "static"
    UP = "up"
    DOWN = "down"


MOTION_CLASSES = (MotionClass.STATIC, MotionClass.UP, MotionClass.DOWN)


class InsufficientHistoryError(ValueError):
    """Classification requested before the trajectory window is full."""


class TrajectoryWindow:
    """Ring buffer of the last WINDOW_LEN fingertip positions."""

    def __init__(self):
        self._points: deque[tuple[float, float]] = deque(maxlen=WINDOW_LEN)

    def push(self, fingertip: Landmark) -> "TrajectoryWindow":
        self._points.append((fingertip.x, fingertip.y))
        return self

    def __len__(self) -> int:
        return len(self._points)

    @property
    def full(self) -> bool:
        return len(self._points) == WINDOW_LEN

    def points(self) -> list[tuple[float, float]]:
        return list(self._points)

    def clear(self) -> None:
        self._points.clear()

    def features(self) -> np.ndarray:
        if not self.full:
            raise InsufficientHistoryError(
                f"window has {len(self._points)} of {WINDOW_LEN} positions")
        return preprocess_trajectory(self._points)


def preprocess_trajectory(points) -> np.ndarray:
    """Flatten a 16-point trajectory: first point at origin, max-abs scaled."""
    pts = np.asarray(points, dtype=np.float64)
    pts = pts - pts[0]
    scale = np.abs(pts).max()
    if scale > 0:
        pts = pts / scale
    return pts.reshape(-1)


def oracle_motion(points) -> MotionClass:
    """Label a trajectory by the sign of its net y-displacement.

    Used both to label synthetic training data and as the rule-based
    fallback when no trained motion model is configured. y grows downward,
    so a negative net displacement is an upward motion.
    """
    pts = np.asarray(points, dtype=np.float64)
    dy = pts[-1, 1] - pts[0, 1]
    if abs(dy) < STATIC_DEAD_ZONE:
        return MotionClass.STATIC
    return MotionClass.UP if dy < 0 else MotionClass.DOWN


class MotionClassifier(ClassifierMixin, BaseEstimator):
    """MLP over flattened 32-dim trajectory features."""

    def __init__(self, hidden: int = 20, lr: float = 0.05, epochs: int = 200,
                 batch: int = 32, seed: int = 0, shuffle: bool = True):
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.seed = seed
        self.shuffle = shuffle

    def fit(self, X, y) -> "MotionClassifier":
        X = check_feature_array(X, N_FEATURES)
        yi = check_labels(y, MOTION_CLASSES)
        cfg = TrainConfig(lr=self.lr, epochs=self.epochs, batch=self.batch,
                          seed=self.seed, hidden=self.hidden, shuffle=self.shuffle)
        self.model_, self.loss_history_ = train_mlp(X, yi, len(MOTION_CLASSES), cfg)
        self.classes_ = np.array([c.value for c in MOTION_CLASSES])
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_array(X, N_FEATURES)
        return self.model_.forward(X)

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        # tie-break order static < up < down via argmax over fixed columns
        return self.classes_[p.argmax(axis=1)]

    def classify(self, window: TrajectoryWindow) -> MotionClass:
        p = self.model_.forward(window.features())
        return MOTION_CLASSES[int(p.argmax())]

    def save(self, path) -> None:
        self.model_.save(path)

    @classmethod
    def from_model(cls, model: MLP) -> "MotionClassifier":
        clf = cls(hidden=model.dims[1])
        clf.model_ = model
        clf.classes_ = np.array([c.value for c in MOTION_CLASSES])
        return clf

    @classmethod
    def load(cls, path) -> "MotionClassifier":
        return cls.from_model(MLP.load(path))


class OracleMotionClassifier:
    """Rule-based stand-in with the same classify() surface."""

    def classify(self, window: TrajectoryWindow) -> MotionClass:
        if not window.full:
            raise InsufficientHistoryError("window not full")
        return oracle_motion(window.points())
