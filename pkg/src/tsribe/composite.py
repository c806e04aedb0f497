"""Two-hand composite gesture detection from stable states plus geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core import (GRASPING, CompositeGesture, CompositeKind, ContactSide,
                   Gesture, Hand, HandFrame, INDEX_TIP, Landmark,
                   PipelineEvent, StableState, THUMB_TIP)
from .motion import MotionClass, TrajectoryWindow

# Hold-hand bbox inflation for swipe containment: landmarks hug the skeleton
# while the held object extends beyond it.
BBOX_MARGIN = 0.05

# Minimum fingertip travel (normalized units) before a hold+point re-emits.
POINT_MOVE_THRESHOLD = 0.02

SAME_OBJECT_IOU = 0.3


class ConfigKind(str, Enum):
    NONE = "none"
    HOLD_POINT = "hold_point"
    SWIPE_CONTEXT = "swipe_context"
    SAME_OBJECT = "same_object"
    DIFFERENT_OBJECTS = "different_objects"


@dataclass(frozen=True)
class BimanualConfig:
    kind: ConfigKind
    hold_hand: Optional[Hand] = None
    other_hand: Optional[Hand] = None  # pointing or touching hand


NONE_CONFIG = BimanualConfig(ConfigKind.NONE)


def hand_bbox(hand: HandFrame) -> tuple[float, float, float, float]:
    """Axis-aligned (x0, y0, x1, y1) over all 21 landmarks."""
    xs = [lm.x for lm in hand.landmarks]
    ys = [lm.y for lm in hand.landmarks]
    return min(xs), min(ys), max(xs), max(ys)


def _inside(pt: Landmark, box, margin: float) -> bool:
    x0, y0, x1, y1 = box
    return (x0 - margin <= pt.x <= x1 + margin
            and y0 - margin <= pt.y <= y1 + margin)


def box_iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    ix = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    iy = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = ix * iy
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def detect_config(states: dict[Hand, StableState],
                  frames: dict[Hand, Optional[HandFrame]],
                  contact: Optional[dict[Hand, Optional[ContactSide]]] = None,
                  margin: float = BBOX_MARGIN) -> BimanualConfig:
    left = states[Hand.LEFT].gesture
    right = states[Hand.RIGHT].gesture
    if Gesture.OUT_OF_VIEW in (left, right):
        return NONE_CONFIG

    by_gesture = {Hand.LEFT: left, Hand.RIGHT: right}
    holds = [h for h, g in by_gesture.items() if g is Gesture.HOLD]
    points = [h for h, g in by_gesture.items() if g is Gesture.POINT]
    touches = [h for h, g in by_gesture.items() if g is Gesture.TOUCH]

    if len(holds) == 1 and len(points) == 1:
        return BimanualConfig(ConfigKind.HOLD_POINT,
                              hold_hand=holds[0], other_hand=points[0])

    if len(holds) == 1 and len(touches) == 1:
        hold_frame = frames.get(holds[0])
        touch_frame = frames.get(touches[0])
        if hold_frame is not None and touch_frame is not None:
            box = hand_bbox(hold_frame)
            index = touch_frame.landmarks[INDEX_TIP]
            thumb = touch_frame.landmarks[THUMB_TIP]
            if _inside(index, box, margin) and _inside(thumb, box, margin):
                return BimanualConfig(ConfigKind.SWIPE_CONTEXT,
                                      hold_hand=holds[0], other_hand=touches[0])
        return NONE_CONFIG

    if left in GRASPING and right in GRASPING and contact is not None:
        cl = contact.get(Hand.LEFT)
        cr = contact.get(Hand.RIGHT)
        if (cl is not None and cr is not None
                and cl.box is not None and cr.box is not None):
            same = (cl.tag is not None and cl.tag == cr.tag) \
                or box_iou(cl.box, cr.box) >= SAME_OBJECT_IOU
            kind = ConfigKind.SAME_OBJECT if same else ConfigKind.DIFFERENT_OBJECTS
            return BimanualConfig(kind)
    return NONE_CONFIG


class CompositeTracker:
    """Edge-trigger state for composite events, owned by the pipeline loop."""

    def __init__(self, motion_classifier=None):
        self.motion_classifier = motion_classifier
        self._last_kind = ConfigKind.NONE
        self._swipe_fired = False
        self._last_point: Optional[tuple[float, float]] = None

    def step(self, config: BimanualConfig,
             frames: dict[Hand, Optional[HandFrame]],
             windows: dict[Hand, TrajectoryWindow],
             frame_id: int, t_ms: int = 0) -> list[PipelineEvent]:
        events: list[PipelineEvent] = []
        entered = config.kind != self._last_kind

        if config.kind is ConfigKind.HOLD_POINT:
            point_frame = frames.get(config.other_hand)
            fingertip = (point_frame.landmarks[INDEX_TIP]
                         if point_frame is not None else None)
            if fingertip is not None:
                moved = (entered or self._last_point is None
                         or math.dist(self._last_point,
                                      (fingertip.x, fingertip.y))
                         >= POINT_MOVE_THRESHOLD)
                if moved:
                    self._last_point = (fingertip.x, fingertip.y)
                    events.append(CompositeGesture(
                        CompositeKind.HOLD_POINT, frame_id,
                        detail={"hold_hand": config.hold_hand.value,
                                "point_hand": config.other_hand.value,
                                "fingertip": [fingertip.x, fingertip.y]},
                        t_ms=t_ms))
        else:
            self._last_point = None

        if config.kind is ConfigKind.SWIPE_CONTEXT:
            if entered:
                self._swipe_fired = False
            window = windows.get(config.other_hand)
            if (not self._swipe_fired and self.motion_classifier is not None
                    and window is not None and window.full):
                if self.motion_classifier.classify(window) is MotionClass.UP:
                    self._swipe_fired = True
                    events.append(CompositeGesture(
                        CompositeKind.HOLD_SWIPE_UP, frame_id,
                        detail={"hold_hand": config.hold_hand.value,
                                "touch_hand": config.other_hand.value},
                        t_ms=t_ms))
        else:
            self._swipe_fired = False

        if entered and config.kind is ConfigKind.SAME_OBJECT:
            events.append(CompositeGesture(CompositeKind.BIMANUAL_SAME,
                                           frame_id, detail={}, t_ms=t_ms))
        if entered and config.kind is ConfigKind.DIFFERENT_OBJECTS:
            events.append(CompositeGesture(CompositeKind.BIMANUAL_DIFFERENT,
                                           frame_id, detail={}, t_ms=t_ms))

        self._last_kind = config.kind
        return events
