"""Hand-landmark extractors behind a minimal interface.

An extractor maps one RGB frame (HxWx3 uint8 numpy array) to per-hand
landmark lists: ``{"left": [(x, y), ...21 points...] | None, "right": ...}``
with coordinates normalized to [0, 1]. The adapter never invents landmarks;
whatever the extractor reports as absent stays null in the output.
"""

from __future__ import annotations

import importlib
from typing import Optional, Protocol

import numpy as np

N_LANDMARKS = 21

HandPoints = Optional[list[tuple[float, float]]]


class HandLandmarkExtractor(Protocol):
    def extract(self, frame_rgb: np.ndarray) -> dict[str, HandPoints]:
        """Return 21 normalized (x, y) points per detected hand, else None."""
        ...


class MediaPipeHandsExtractor:
    """Adapter over MediaPipe Hands (21-point convention: wrist=0,
    thumb tip=4, index tip=8 — the same indexing the pipeline expects)."""

    def __init__(self, max_hands: int = 2, detection_confidence: float = 0.5,
                 tracking_confidence: float = 0.5):
        try:
            mediapipe = importlib.import_module("mediapipe")
        except ImportError as exc:
            raise RuntimeError(
                "mediapipe is not installed; install it or pass a custom "
                "extractor via --extractor module:attribute") from exc
        self._hands = mediapipe.solutions.hands.Hands(
            static_image_mode=False,
            max_num_hands=max_hands,
            min_detection_confidence=detection_confidence,
            min_tracking_confidence=tracking_confidence)

    def extract(self, frame_rgb: np.ndarray) -> dict[str, HandPoints]:
        result = self._hands.process(frame_rgb)
        out: dict[str, HandPoints] = {"left": None, "right": None}
        if not result.multi_hand_landmarks:
            return out
        for landmarks, handedness in zip(result.multi_hand_landmarks,
                                         result.multi_handedness):
            label = handedness.classification[0].label.lower()
            if label not in out:
                continue
            out[label] = [(lm.x, lm.y) for lm in landmarks.landmark]
        return out

    def close(self) -> None:
        self._hands.close()


def load_extractor(spec: str) -> HandLandmarkExtractor:
    """Resolve an extractor spec: "mediapipe" or "module:attribute".

    A dotted attribute may be an extractor instance, an extractor class,
    or a zero-argument factory.
    """
    if spec == "mediapipe":
        return MediaPipeHandsExtractor()
    if ":" not in spec:
        raise ValueError(
            f"unknown extractor {spec!r}; expected 'mediapipe' or 'module:attr'")
    module_name, attr = spec.split(":", 1)
    obj = getattr(importlib.import_module(module_name), attr)
    if isinstance(obj, type) or (callable(obj) and not hasattr(obj, "extract")):
        obj = obj()
    if not hasattr(obj, "extract"):
        raise ValueError(f"extractor {spec!r} has no extract() method")
    return obj
