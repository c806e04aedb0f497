"""Single-hand gesture classification from 21 landmarks.

The feature vector is wrist-relative and max-abs scale-normalized, making
classification invariant to translation and uniform scaling about the wrist.
An absent hand is always classified out-of-view by rule, never learned.
"""

from __future__ import annotations

import json
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .core import Gesture, HandFrame, LEARNED_CLASSES, N_LANDMARKS
from .mlp import MLP, TrainConfig, train_mlp
from .validation import check_feature_array, check_labels

N_FEATURES = 2 * N_LANDMARKS  # 42


def preprocess(hand: HandFrame) -> np.ndarray:
    """Flatten landmarks to a 42-vector: wrist at origin, max-abs scaled to [-1, 1]."""
    pts = np.array([[lm.x, lm.y] for lm in hand.landmarks], dtype=np.float64)
    pts -= pts[0]
    scale = np.abs(pts).max()
    if scale > 0:
        pts /= scale
    return pts.reshape(-1)


class GestureClassifier(ClassifierMixin, BaseEstimator):
    """MLP classifier over preprocessed keypoint vectors.

    fit/predict operate on 42-dim feature arrays (sklearn convention);
    classify() is the pipeline-facing entry point taking an optional HandFrame.
    """

    def __init__(self, hidden: int = 20, lr: float = 0.05, epochs: int = 200,
                 batch: int = 32, seed: int = 0, shuffle: bool = True):
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.seed = seed
        self.shuffle = shuffle

    def fit(self, X, y) -> "GestureClassifier":
        X = check_feature_array(X, N_FEATURES)
        yi = check_labels(y, LEARNED_CLASSES)
        cfg = TrainConfig(lr=self.lr, epochs=self.epochs, batch=self.batch,
                          seed=self.seed, hidden=self.hidden, shuffle=self.shuffle)
        self.model_, self.loss_history_ = train_mlp(X, yi, len(LEARNED_CLASSES), cfg)
        self.classes_ = np.array([c.value for c in LEARNED_CLASSES])
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_array(X, N_FEATURES)
        return self.model_.forward(X)

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        # argmax with ties broken by fixed class order touch < hold < point
        return self.classes_[p.argmax(axis=1)]

    def classify(self, hand: Optional[HandFrame]) -> tuple[Gesture, float]:
        """Classify one hand; absent hand is out-of-view with confidence 1."""
        if hand is None:
            return Gesture.OUT_OF_VIEW, 1.0
        p = self.model_.forward(preprocess(hand))
        idx = int(p.argmax())
        return LEARNED_CLASSES[idx], float(p[idx])

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        self.model_.save(path)

    @classmethod
    def from_model(cls, model: MLP) -> "GestureClassifier":
        clf = cls(hidden=model.dims[1])
        clf.model_ = model
        clf.classes_ = np.array([c.value for c in LEARNED_CLASSES])
        return clf

    @classmethod
    def load(cls, path) -> "GestureClassifier":
        return cls.from_model(MLP.load(path))


def load_training_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Load one-JSON-object-per-line training data.

    Records carry either a precomputed "features" 42-vector or raw
    "landmarks" (preprocessed on load), plus a "label".
    """
    feats, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "features" in rec:
                feats.append(rec["features"])
            elif "landmarks" in rec:
                from .core import Hand, Landmark
                hand = HandFrame(Hand.LEFT, tuple(
                    Landmark(float(p[0]), float(p[1])) for p in rec["landmarks"]))
                feats.append(preprocess(hand))
            else:
                raise ValueError(f"line {line_no}: no features or landmarks")
            labels.append(rec["label"])
    return np.asarray(feats, dtype=np.float64), np.asarray(labels)
