"""tsribe: hand-landmark streams to stabilized gestures and spoken-style descriptions."""

from .core import (Description, DescriptionKind, Frame, Gesture, Hand,
                   HandFrame, Landmark, Session, parse_events, parse_session,
                   serialize_events, serialize_session)
from .gesture import GestureClassifier, preprocess
from .motion import MotionClassifier, TrajectoryWindow
from .pipeline import ReplayConfig, ReplayEngine, replay
from .stabilizer import HandStabilizer, SmoothingParams, stable_of

__version__ = "0.1.0"

__all__ = [
    "Description", "DescriptionKind", "Frame", "Gesture", "Hand", "HandFrame",
    "Landmark", "Session", "parse_events", "parse_session", "serialize_events",
    "serialize_session", "GestureClassifier", "preprocess", "MotionClassifier",
    "TrajectoryWindow", "ReplayConfig", "ReplayEngine", "replay",
    "HandStabilizer", "SmoothingParams", "stable_of", "__version__",
]
