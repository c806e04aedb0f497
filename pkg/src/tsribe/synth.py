"""Synthetic data generators: hand poses, fingertip trajectories, sessions.

The generators are the labeling oracle for classifier training and tests:
poses are built from per-class joint layouts (fist-around-cylinder = hold,
extended index = point, two extended fingers = touch) and trajectories are
labeled by the sign of their net vertical displacement.
"""

from __future__ import annotations

import numpy as np

from .core import (Frame, Gesture, Hand, HandFrame, Landmark, N_LANDMARKS,
                   Session)
from .gesture import preprocess
from .motion import WINDOW_LEN, oracle_motion, preprocess_trajectory

# Finger chains in the 21-point convention: wrist = 0, then 4 joints per
# finger ending at the tip (thumb tip = 4, index tip = 8).
FINGERS = {
    "thumb": (1, 2, 3, 4),
    "index": (5, 6, 7, 8),
    "middle": (9, 10, 11, 12),
    "ring": (13, 14, 15, 16),
    "pinky": (17, 18, 19, 20),
}

_BASE_X = {"thumb": 0.38, "index": 0.44, "middle": 0.50, "ring": 0.56, "pinky": 0.62}

WRIST_POS = (0.5, 0.80)
KNUCKLE_Y = 0.62
JOINT_STEP = 0.055

# Which fingers are extended per class; the rest curl back toward the palm.
_EXTENDED = {
    Gesture.HOLD: (),
    Gesture.POINT: ("index",),
    Gesture.TOUCH: ("index", "middle"),
}


def _finger_joints(name: str, extended: bool) -> list[tuple[float, float]]:
    bx = _BASE_X[name]
    base = (bx, KNUCKLE_Y)
    if extended:
        return [base] + [(bx, KNUCKLE_Y - JOINT_STEP * i) for i in (1, 2, 3)]
    # Curled: first joint rises slightly, then folds back down toward the palm.
    return [base,
            (bx, KNUCKLE_Y - 0.03),
            (bx + 0.015, KNUCKLE_Y + 0.02),
            (bx + 0.02, KNUCKLE_Y + 0.06)]


def synth_hand(gesture: Gesture, rng: np.random.Generator,
               noise: float = 0.01, side: Hand = Hand.RIGHT) -> HandFrame:
    """One synthetic hand pose for a learned gesture class."""
    if gesture is Gesture.OUT_OF_VIEW:
        raise ValueError("out-of-view has no pose; omit the hand instead")
    pts = np.zeros((N_LANDMARKS, 2))
    pts[0] = WRIST_POS
    extended = _EXTENDED[gesture]
    for name, chain in FINGERS.items():
        for joint_idx, lm_idx in enumerate(chain):
            pts[lm_idx] = _finger_joints(name, name in extended)[joint_idx]
    if noise > 0:
        pts += rng.normal(0.0, noise, size=pts.shape)
    pts = np.clip(pts, 0.0, 1.0)
    return HandFrame(side, tuple(Landmark(float(x), float(y)) for x, y in pts))


def synth_gesture_dataset(n_per_class: int = 300, noise: float = 0.01,
                          seed: int = 7):
    """Preprocessed 42-dim features plus labels, deterministic per seed."""
    rng = np.random.default_rng(seed)
    feats, labels = [], []
    for gesture in (Gesture.TOUCH, Gesture.HOLD, Gesture.POINT):
        for _ in range(n_per_class):
            feats.append(preprocess(synth_hand(gesture, rng, noise)))
            labels.append(gesture)
    return np.asarray(feats), np.asarray([g.value for g in labels])


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def synth_trajectory(kind: str, rng: np.random.Generator,
                     noise: float = 0.003) -> np.ndarray:
    """One 16-point fingertip trajectory; kind in {static, up, down}."""
    x0 = rng.uniform(0.3, 0.7)
    y0 = rng.uniform(0.3, 0.7)
    steps = np.arange(WINDOW_LEN, dtype=np.float64)
    if kind == "static":
        ys = np.full(WINDOW_LEN, y0)
    else:
        slope = rng.uniform(0.006, 0.02)
        if kind == "up":
            slope = -slope  # y decreases upward
        ys = y0 + slope * steps
    xs = x0 + rng.normal(0.0, noise, WINDOW_LEN).cumsum() * 0.2
    pts = np.stack([xs, ys + rng.normal(0.0, noise, WINDOW_LEN)], axis=1)
    return np.clip(pts, 0.0, 1.0)


def synth_motion_dataset(n_per_class: int = 300, noise: float = 0.003,
                         seed: int = 7):
    """Trajectories labeled by the net-displacement oracle."""
    rng = np.random.default_rng(seed)
    feats, labels = [], []
    for kind in ("static", "up", "down"):
        made = 0
        while made < n_per_class:
            pts = synth_trajectory(kind, rng, noise)
            label = oracle_motion(pts)
            if label.value != kind:
                continue  # jitter pushed it across the dead zone; resample
            feats.append(preprocess_trajectory(pts))
            labels.append(label.value)
            made += 1
    return np.asarray(feats), np.asarray(labels)


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

FRAME_INTERVAL_MS = 167  # ~6 FPS

_SEGMENT_CLASSES = (Gesture.HOLD, Gesture.TOUCH, Gesture.POINT, Gesture.OUT_OF_VIEW)


def synth_session(n_frames: int, noise: float = 0.01, dropout: float = 0.0,
                  seed: int = 0) -> Session:
    """Ground-truth labeled session of per-hand gesture segments.

    Each hand independently runs through random-length gesture segments;
    dropout removes a frame's hand landmarks to simulate occlusion (the
    ground truth then records out-of-view).
    """
    rng = np.random.default_rng(seed)

    def hand_track():
        track = []
        while len(track) < n_frames:
            g = _SEGMENT_CLASSES[rng.integers(len(_SEGMENT_CLASSES))]
            track += [g] * int(rng.integers(20, 60))
        return track[:n_frames]

    tracks = {Hand.LEFT: hand_track(), Hand.RIGHT: hand_track()}
    frames = []
    for i in range(n_frames):
        hands: dict[Hand, HandFrame | None] = {}
        gt: dict[Hand, Gesture] = {}
        for side in Hand:
            g = tracks[side][i]
            dropped = dropout > 0 and rng.random() < dropout
            if g is Gesture.OUT_OF_VIEW or dropped:
                hands[side] = None
                gt[side] = Gesture.OUT_OF_VIEW
            else:
                hands[side] = synth_hand(g, rng, noise, side)
                gt[side] = g
        frames.append(Frame(frame_id=i, t_ms=i * FRAME_INTERVAL_MS,
                            left=hands[Hand.LEFT], right=hands[Hand.RIGHT],
                            gt=gt))
    return Session(frames)
