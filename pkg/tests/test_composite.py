"""Two-hand configuration detection and composite event edge-triggering."""

import numpy as np
import pytest

from tsribe.core import (CompositeGesture, CompositeKind, ContactSide,
                         Gesture, Hand, HandFrame, INDEX_TIP, Landmark,
                         N_LANDMARKS, StableState, THUMB_TIP)
from tsribe.composite import (BimanualConfig, CompositeTracker, ConfigKind,
                              NONE_CONFIG, box_iou, detect_config, hand_bbox)
from tsribe.motion import OracleMotionClassifier, TrajectoryWindow, WINDOW_LEN
from tsribe.synth import synth_hand

G = Gesture


def hand_at(side, cx, cy, spread=0.08, tips=None):
    """A hand whose landmarks cluster around (cx, cy); tips overrides
    specific landmark positions."""
    pts = [(cx + spread * np.cos(i), cy + spread * np.sin(i))
           for i in range(N_LANDMARKS)]
    if tips:
        for idx, (x, y) in tips.items():
            pts[idx] = (x, y)
    return HandFrame(side, tuple(Landmark(float(np.clip(x, 0, 1)),
                                          float(np.clip(y, 0, 1)))
                                 for x, y in pts))


def states(left, right):
    return {Hand.LEFT: StableState(left, 0), Hand.RIGHT: StableState(right, 0)}


class TestGeometry:
    def test_hand_bbox(self):
        hand = hand_at(Hand.LEFT, 0.5, 0.5, spread=0.1)
        x0, y0, x1, y1 = hand_bbox(hand)
        assert x0 <= 0.5 <= x1 and y0 <= 0.5 <= y1

    def test_box_iou(self):
        assert box_iou((0, 0, 1, 1), (0, 0, 1, 1)) == pytest.approx(1.0)
        assert box_iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0
        assert box_iou((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(1 / 3)
        assert box_iou((0, 0, 0, 0), (0, 0, 0, 0)) == 0.0


class TestDetectConfig:
    def test_out_of_view_blocks_everything(self):
        frames = {Hand.LEFT: None, Hand.RIGHT: hand_at(Hand.RIGHT, 0.5, 0.5)}
        assert detect_config(states(G.OUT_OF_VIEW, G.POINT), frames) == NONE_CONFIG

    def test_hold_point(self):
        frames = {Hand.LEFT: hand_at(Hand.LEFT, 0.3, 0.5),
                  Hand.RIGHT: hand_at(Hand.RIGHT, 0.7, 0.5)}
        cfg = detect_config(states(G.HOLD, G.POINT), frames)
        assert cfg.kind is ConfigKind.HOLD_POINT
        assert cfg.hold_hand is Hand.LEFT and cfg.other_hand is Hand.RIGHT

    def test_swipe_context_requires_tips_inside_hold_bbox(self):
        hold = hand_at(Hand.LEFT, 0.4, 0.5, spread=0.15)
        inside = hand_at(Hand.RIGHT, 0.8, 0.5,
                         tips={INDEX_TIP: (0.42, 0.5), THUMB_TIP: (0.45, 0.52)})
        outside = hand_at(Hand.RIGHT, 0.8, 0.5,
                          tips={INDEX_TIP: (0.9, 0.5), THUMB_TIP: (0.95, 0.5)})
        frames_in = {Hand.LEFT: hold, Hand.RIGHT: inside}
        frames_out = {Hand.LEFT: hold, Hand.RIGHT: outside}
        assert detect_config(states(G.HOLD, G.TOUCH), frames_in).kind \
            is ConfigKind.SWIPE_CONTEXT
        assert detect_config(states(G.HOLD, G.TOUCH), frames_out) == NONE_CONFIG

    def test_swipe_context_one_tip_out(self):
        hold = hand_at(Hand.LEFT, 0.4, 0.5, spread=0.1)
        half = hand_at(Hand.RIGHT, 0.8, 0.5,
                       tips={INDEX_TIP: (0.42, 0.5), THUMB_TIP: (0.95, 0.5)})
        frames = {Hand.LEFT: hold, Hand.RIGHT: half}
        assert detect_config(states(G.HOLD, G.TOUCH), frames) == NONE_CONFIG

    def test_same_object_by_tag(self):
        frames = {Hand.LEFT: hand_at(Hand.LEFT, 0.3, 0.5),
                  Hand.RIGHT: hand_at(Hand.RIGHT, 0.7, 0.5)}
        contact = {Hand.LEFT: ContactSide(True, (0.0, 0.0, 0.2, 0.2), tag="tray"),
                   Hand.RIGHT: ContactSide(True, (0.8, 0.8, 1.0, 1.0), tag="tray")}
        cfg = detect_config(states(G.HOLD, G.HOLD), frames, contact)
        assert cfg.kind is ConfigKind.SAME_OBJECT

    def test_same_object_by_iou(self):
        frames = {Hand.LEFT: hand_at(Hand.LEFT, 0.4, 0.5),
                  Hand.RIGHT: hand_at(Hand.RIGHT, 0.6, 0.5)}
        contact = {Hand.LEFT: ContactSide(True, (0.2, 0.2, 0.6, 0.6)),
                   Hand.RIGHT: ContactSide(True, (0.25, 0.2, 0.65, 0.6))}
        cfg = detect_config(states(G.HOLD, G.TOUCH), frames, contact)
        # hold+touch with tips outside the bbox falls through to object
        # comparison only when both classes grasp; touch tips are far away.
        assert cfg.kind in (ConfigKind.NONE, ConfigKind.SAME_OBJECT)

    def test_different_objects(self):
        frames = {Hand.LEFT: hand_at(Hand.LEFT, 0.2, 0.5),
                  Hand.RIGHT: hand_at(Hand.RIGHT, 0.8, 0.5)}
        contact = {Hand.LEFT: ContactSide(True, (0.0, 0.3, 0.3, 0.7), tag="cup"),
                   Hand.RIGHT: ContactSide(True, (0.7, 0.3, 1.0, 0.7), tag="can")}
        cfg = detect_config(states(G.HOLD, G.HOLD), frames, contact)
        assert cfg.kind is ConfigKind.DIFFERENT_OBJECTS

    def test_bimanual_needs_boxes(self):
        frames = {Hand.LEFT: hand_at(Hand.LEFT, 0.2, 0.5),
                  Hand.RIGHT: hand_at(Hand.RIGHT, 0.8, 0.5)}
        contact = {Hand.LEFT: ContactSide(True), Hand.RIGHT: ContactSide(True)}
        assert detect_config(states(G.HOLD, G.HOLD), frames, contact) == NONE_CONFIG


class TestTracker:
    def _frames(self, fingertip):
        point = hand_at(Hand.RIGHT, 0.7, 0.5, tips={INDEX_TIP: fingertip})
        return {Hand.LEFT: hand_at(Hand.LEFT, 0.3, 0.5), Hand.RIGHT: point}

    def test_hold_point_emits_then_rearms_on_motion(self):
        tracker = CompositeTracker()
        cfg = BimanualConfig(ConfigKind.HOLD_POINT, Hand.LEFT, Hand.RIGHT)
        windows = {h: TrajectoryWindow() for h in Hand}
        ev1 = tracker.step(cfg, self._frames((0.7, 0.5)), windows, 0)
        assert [e.kind for e in ev1] == [CompositeKind.HOLD_POINT]
        # Tiny jitter: below the movement threshold, no re-emit.
        assert tracker.step(cfg, self._frames((0.705, 0.5)), windows, 1) == []
        # Larger move re-emits with the new fingertip.
        ev3 = tracker.step(cfg, self._frames((0.76, 0.5)), windows, 2)
        assert len(ev3) == 1
        assert ev3[0].detail["fingertip"] == [0.76, 0.5]

    def test_swipe_up_fires_once_per_entry(self):
        tracker = CompositeTracker(OracleMotionClassifier())
        cfg = BimanualConfig(ConfigKind.SWIPE_CONTEXT, Hand.LEFT, Hand.RIGHT)
        window = TrajectoryWindow()
        for i in range(WINDOW_LEN):
            window.push(Landmark(0.5, 0.6 - i * 0.01))  # upward sweep
        windows = {Hand.RIGHT: window, Hand.LEFT: TrajectoryWindow()}
        frames = self._frames((0.5, 0.45))
        ev = tracker.step(cfg, frames, windows, 0)
        assert [e.kind for e in ev] == [CompositeKind.HOLD_SWIPE_UP]
        # Still swiping in the same entry: no duplicate.
        assert tracker.step(cfg, frames, windows, 1) == []
        # Leave and re-enter: re-armed.
        tracker.step(NONE_CONFIG, frames, windows, 2)
        assert len(tracker.step(cfg, frames, windows, 3)) == 1

    def test_swipe_needs_full_window(self):
        tracker = CompositeTracker(OracleMotionClassifier())
        cfg = BimanualConfig(ConfigKind.SWIPE_CONTEXT, Hand.LEFT, Hand.RIGHT)
        windows = {Hand.RIGHT: TrajectoryWindow(), Hand.LEFT: TrajectoryWindow()}
        assert tracker.step(cfg, self._frames((0.5, 0.5)), windows, 0) == []

    def test_bimanual_edge_triggered(self):
        tracker = CompositeTracker()
        cfg = BimanualConfig(ConfigKind.SAME_OBJECT)
        windows = {h: TrajectoryWindow() for h in Hand}
        frames = self._frames((0.5, 0.5))
        ev = tracker.step(cfg, frames, windows, 0)
        assert [e.kind for e in ev] == [CompositeKind.BIMANUAL_SAME]
        assert tracker.step(cfg, frames, windows, 1) == []
        tracker.step(NONE_CONFIG, frames, windows, 2)
        cfg2 = BimanualConfig(ConfigKind.DIFFERENT_OBJECTS)
        ev2 = tracker.step(cfg2, frames, windows, 3)
        assert [e.kind for e in ev2] == [CompositeKind.BIMANUAL_DIFFERENT]
