"""Temporal smoothing of per-frame gesture predictions into stable states.

Cascade, evaluated over a ring buffer of the last x raw predictions:
  (1) if the most recent t predictions are identical, that class wins;
  (2) else if the previous stable state occurs in the last n predictions,
      it is retained;
  (3) else the mode of the last n predictions wins, ties broken by the
      most recently observed among the tied classes.

A hand not yet observed counts as out-of-view: each window starts seeded
with x out-of-view entries, so the first grasp stabilizes exactly when
rule (1) first fires (t identical predictions) rather than on the very
first frame via rule (3).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Optional

from .core import (GRASPING, Gesture, Hand, HandContact, HandStateChanged,
                   Keyframe, KeyframeKind, PipelineEvent, StableState)


@dataclass(frozen=True)
class SmoothingParams:
    x: int = 12
    n: int = 6
    t: int = 4

    def __post_init__(self):
        if not (1 <= self.t <= self.x and 1 <= self.n <= self.x):
            raise ValueError(f"invalid smoothing params: {self}")


def stable_of(window: list[Gesture], prev: Optional[Gesture],
              p: SmoothingParams = SmoothingParams()) -> Gesture:
    """Apply the smoothing cascade to an explicit prediction window.

    The window is ordered oldest-first and may be shorter than x at stream
    start; rule (1) requires at least t samples.
    """
    if not window:
        raise ValueError("empty prediction window")
    window = window[-p.x:]
    if len(window) >= p.t:
        tail = window[-p.t:]
        if all(g == tail[0] for g in tail):
            return tail[0]
    recent = window[-p.n:]
    if prev is not None and prev in recent:
        return prev
    counts = Counter(recent)
    best = max(counts.values())
    tied = {g for g, c in counts.items() if c == best}
    for g in reversed(recent):
        if g in tied:
            return g
    raise AssertionError("unreachable")


class HandStabilizer:
    """Incremental per-hand stabilizer; O(1) amortized per prediction.

    Maintains the suffix run length for rule (1) and a bounded last-n deque
    for rules (2)/(3), so per-frame cost is independent of session length.
    """

    def __init__(self, hand: Hand, params: SmoothingParams = SmoothingParams()):
        self.hand = hand
        self.params = params
        # Seed with out-of-view history (hand unseen so far).
        self._window: deque[Gesture] = deque(
            [Gesture.OUT_OF_VIEW] * params.x, maxlen=params.x)
        self._run_class: Gesture = Gesture.OUT_OF_VIEW
        self._run_len: int = params.x
        self._state = StableState(Gesture.OUT_OF_VIEW, since_frame=-1)
        self._last_frame_id: Optional[int] = None

    @property
    def state(self) -> StableState:
        return self._state

    def push_prediction(self, pred: Gesture, frame_id: int,
                        t_ms: int = 0) -> list[PipelineEvent]:
        """Ingest one raw prediction; emit state-change and keyframe events."""
        if self._last_frame_id is not None and frame_id <= self._last_frame_id:
            raise ValueError(
                f"non-monotonic frame_id: {frame_id} after {self._last_frame_id}")
        self._last_frame_id = frame_id

        self._window.append(pred)
        if pred == self._run_class:
            self._run_len += 1
        else:
            self._run_class, self._run_len = pred, 1

        p = self.params
        if self._run_len >= p.t:
            new = self._run_class
        else:
            recent = list(self._window)[-p.n:]
            prev = self._state.gesture
            if prev in recent:
                new = prev
            else:
                counts = Counter(recent)
                best = max(counts.values())
                tied = {g for g, c in counts.items() if c == best}
                new = next(g for g in reversed(recent) if g in tied)

        events: list[PipelineEvent] = []
        if new != self._state.gesture:
            old = self._state.gesture
            self._state = StableState(new, since_frame=frame_id, previous=old)
            events.append(HandStateChanged(self.hand, old, new, frame_id, t_ms))
            if new in GRASPING:
                events.append(Keyframe(
                    KeyframeKind.NEW_GRASP, frame_id,
                    hands_in_contact=(HandContact(self.hand, new),), t_ms=t_ms))
        return events


def replay_oracle(predictions: list[Gesture],
                  params: SmoothingParams = SmoothingParams()) -> list[Gesture]:
    """From-scratch recomputation of the stable state after each prediction.

    Independent of the incremental path: re-applies stable_of over the
    stored (seeded) window at every step.
    """
    states: list[Gesture] = []
    prev = Gesture.OUT_OF_VIEW
    history = [Gesture.OUT_OF_VIEW] * params.x
    for pred in predictions:
        history.append(pred)
        prev = stable_of(history[-params.x:], prev, params)
        states.append(prev)
    return states
