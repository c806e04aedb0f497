"""Shared domain model: frames, gestures, events, descriptions, sessions.

All coordinates are normalized to [0, 1] with the origin at the top-left
corner; y increases downward, so "up" motion means decreasing y.
frame_id is the authoritative ordering key; t_ms is used only for latency
accounting and merge windows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Optional, Union

N_LANDMARKS = 21
WRIST = 0
THUMB_TIP = 4
INDEX_TIP = 8


class SessionParseError(ValueError):
    """Malformed or invariant-violating session/trace input."""


class Hand(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Gesture(str, Enum):
    TOUCH = "touch"
    HOLD = "hold"
    POINT = "point"
    OUT_OF_VIEW = "out"

    @property
    def verb(self) -> str:
        # "hold" -> "holding", "touch" -> "touching", "point" -> "pointing"
        return self.value + "ing"


# Fixed class order used for argmax tie-breaking and model output columns.
LEARNED_CLASSES = (Gesture.TOUCH, Gesture.HOLD, Gesture.POINT)

GRASPING = frozenset({Gesture.HOLD, Gesture.TOUCH})


@dataclass(frozen=True)
class Landmark:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"landmark out of [0,1] range: ({self.x}, {self.y})")


@dataclass(frozen=True)
class HandFrame:
    side: Hand
    landmarks: tuple[Landmark, ...]

    def __post_init__(self):
        if len(self.landmarks) != N_LANDMARKS:
            raise ValueError(f"landmark count != {N_LANDMARKS}: got {len(self.landmarks)}")


@dataclass(frozen=True)
class InjectedEvent:
    type: str
    text: str = ""


@dataclass(frozen=True)
class ContactSide:
    in_contact: bool
    box: Optional[tuple[float, float, float, float]] = None  # x0, y0, x1, y1
    crop: Optional[str] = None
    tag: Optional[str] = None

    def __post_init__(self):
        if self.box is not None and not self.in_contact:
            raise ValueError("object box present without contact")


@dataclass(frozen=True)
class Frame:
    frame_id: int
    t_ms: int
    left: Optional[HandFrame] = None
    right: Optional[HandFrame] = None
    image_ref: Optional[str] = None
    injected: tuple[InjectedEvent, ...] = ()
    gt: Optional[dict[Hand, Gesture]] = None
    contact: Optional[dict[Hand, Optional[ContactSide]]] = None
    embedding: Optional[tuple[float, ...]] = None

    def hand(self, side: Hand) -> Optional[HandFrame]:
        return self.left if side is Hand.LEFT else self.right


@dataclass
class Session:
    frames: list[Frame] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class StableState:
    gesture: Gesture
    since_frame: int
    previous: Optional[Gesture] = None


# ---------------------------------------------------------------------------
# Pipeline events
# ---------------------------------------------------------------------------

class KeyframeKind(str, Enum):
    NEW_GRASP = "new_grasp"
    OBJECT_CHANGED = "object_changed"


class CompositeKind(str, Enum):
    HOLD_POINT = "hold_point"
    HOLD_SWIPE_UP = "hold_swipe_up"
    BIMANUAL_SAME = "bimanual_same"
    BIMANUAL_DIFFERENT = "bimanual_different"


@dataclass(frozen=True)
class HandStateChanged:
    hand: Hand
    from_gesture: Gesture
    to_gesture: Gesture
    frame_id: int
    t_ms: int = 0


@dataclass(frozen=True)
class HandContact:
    hand: Hand
    gesture: Gesture


@dataclass(frozen=True)
class Keyframe:
    kind: KeyframeKind
    frame_id: int
    hands_in_contact: tuple[HandContact, ...] = ()
    t_ms: int = 0


@dataclass(frozen=True)
class CompositeGesture:
    kind: CompositeKind
    frame_id: int
    detail: dict = field(default_factory=dict)
    t_ms: int = 0

    def __hash__(self):  # detail dict excluded
        return hash((self.kind, self.frame_id, self.t_ms))


@dataclass(frozen=True)
class QueryIssued:
    text: str
    frame_id: int
    t_ms: int = 0


PipelineEvent = Union[HandStateChanged, Keyframe, CompositeGesture, QueryIssued]


class DescriptionKind(str, Enum):
    HAND_STATE = "hand_state"
    BRIEF = "brief"
    DETAILED = "detailed"
    TEXTS = "texts"
    COMPARATIVE = "comparative"
    COLOR_LABEL = "color_label"
    QUERY_ANSWER = "query_answer"
    STATUS = "status"


@dataclass
class Description:
    kind: DescriptionKind
    text: str
    created_t_ms: int
    keyframe_id: Optional[int] = None
    priority: int = 0
    spoken_start_t_ms: Optional[int] = None
    spoken_end_t_ms: Optional[int] = None
    interrupted: bool = False
    origin_t_ms: Optional[int] = None  # event time used for latency accounting

    @property
    def latency_ms(self) -> Optional[int]:
        if self.spoken_start_t_ms is None or self.origin_t_ms is None:
            return None
        return self.spoken_start_t_ms - self.origin_t_ms


# ---------------------------------------------------------------------------
# Session parsing / serialization (UTF-8, one JSON object per line)
# ---------------------------------------------------------------------------

def _parse_hand(side: Hand, obj: Optional[dict], line_no: int) -> Optional[HandFrame]:
    if obj is None:
        return None
    pts = obj.get("landmarks")
    if not isinstance(pts, list) or len(pts) != N_LANDMARKS:
        n = len(pts) if isinstance(pts, list) else "missing"
        raise SessionParseError(f"line {line_no}: landmark count != {N_LANDMARKS} ({n})")
    try:
        landmarks = tuple(Landmark(float(p[0]), float(p[1])) for p in pts)
    except (ValueError, TypeError, IndexError) as exc:
        raise SessionParseError(f"line {line_no}: bad landmark: {exc}") from exc
    return HandFrame(side, landmarks)


def _parse_contact(obj: Optional[dict], line_no: int) -> Optional[dict]:
    if obj is None:
        return None
    out = {}
    for hand in Hand:
        side = obj.get(hand.value)
        if side is None:
            out[hand] = None
            continue
        box = side.get("box")
        try:
            out[hand] = ContactSide(
                in_contact=bool(side.get("in_contact", False)),
                box=tuple(float(v) for v in box) if box is not None else None,
                crop=side.get("crop"),
                tag=side.get("tag"),
            )
        except ValueError as exc:
            raise SessionParseError(f"line {line_no}: bad contact: {exc}") from exc
    return out


def parse_session(stream: Union[bytes, str, IO]) -> Session:
    """Parse line-delimited frame records, validating all session invariants."""
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    frames: list[Frame] = []
    last_t = None
    last_id = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SessionParseError(f"line {line_no}: malformed JSON: {exc}") from exc
        try:
            frame_id = int(rec["frame_id"])
            t_ms = int(rec["t_ms"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionParseError(f"line {line_no}: missing frame_id/t_ms") from exc
        if last_t is not None and t_ms <= last_t:
            raise SessionParseError(f"line {line_no}: non-monotonic t_ms ({t_ms} <= {last_t})")
        if last_id is not None and frame_id <= last_id:
            raise SessionParseError(f"line {line_no}: non-monotonic frame_id")
        last_t, last_id = t_ms, frame_id

        gt_rec = rec.get("gt")
        gt = None
        if gt_rec is not None:
            try:
                gt = {h: Gesture(gt_rec[h.value]) for h in Hand if h.value in gt_rec}
            except ValueError as exc:
                raise SessionParseError(f"line {line_no}: bad gt label: {exc}") from exc

        injected = tuple(
            InjectedEvent(type=e.get("type", ""), text=e.get("text", ""))
            for e in rec.get("events", []) or []
        )
        emb = rec.get("embedding")
        frames.append(Frame(
            frame_id=frame_id,
            t_ms=t_ms,
            left=_parse_hand(Hand.LEFT, rec.get("left"), line_no),
            right=_parse_hand(Hand.RIGHT, rec.get("right"), line_no),
            image_ref=rec.get("image"),
            injected=injected,
            gt=gt,
            contact=_parse_contact(rec.get("contact"), line_no),
            embedding=tuple(float(v) for v in emb) if emb is not None else None,
        ))
    return Session(frames)


def _hand_record(hand: Optional[HandFrame]) -> Optional[dict]:
    if hand is None:
        return None
    return {"landmarks": [[lm.x, lm.y] for lm in hand.landmarks]}


def serialize_session(session: Session) -> str:
    lines = []
    for f in session.frames:
        rec = {"frame_id": f.frame_id, "t_ms": f.t_ms,
               "left": _hand_record(f.left), "right": _hand_record(f.right),
               "image": f.image_ref}
        if f.injected:
            rec["events"] = [{"type": e.type, "text": e.text} for e in f.injected]
        if f.gt is not None:
            rec["gt"] = {h.value: g.value for h, g in f.gt.items()}
        if f.contact is not None:
            rec["contact"] = {
                h.value: None if (c := f.contact.get(h)) is None else {
                    "in_contact": c.in_contact,
                    "box": list(c.box) if c.box else None,
                    "crop": c.crop, "tag": c.tag,
                }
                for h in Hand
            }
        if f.embedding is not None:
            rec["embedding"] = list(f.embedding)
        lines.append(json.dumps(rec))
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Event trace serialization
# ---------------------------------------------------------------------------

def event_to_record(ev: Union[PipelineEvent, Description]) -> dict:
    if isinstance(ev, HandStateChanged):
        return {"t_ms": ev.t_ms, "type": "hand_state", "hand": ev.hand.value,
                "from": ev.from_gesture.value, "to": ev.to_gesture.value,
                "frame_id": ev.frame_id}
    if isinstance(ev, Keyframe):
        return {"t_ms": ev.t_ms, "type": "keyframe", "kind": ev.kind.value,
                "frame_id": ev.frame_id,
                "hands": [{"hand": c.hand.value, "gesture": c.gesture.value}
                          for c in ev.hands_in_contact]}
    if isinstance(ev, CompositeGesture):
        return {"t_ms": ev.t_ms, "type": "composite", "kind": ev.kind.value,
                "frame_id": ev.frame_id, "detail": ev.detail}
    if isinstance(ev, QueryIssued):
        return {"t_ms": ev.t_ms, "type": "query", "text": ev.text,
                "frame_id": ev.frame_id}
    if isinstance(ev, Description):
        return {"t_ms": ev.spoken_start_t_ms if ev.spoken_start_t_ms is not None
                else ev.created_t_ms,
                "type": "description", "kind": ev.kind.value, "text": ev.text,
                "keyframe": ev.keyframe_id, "latency_ms": ev.latency_ms,
                "interrupted": ev.interrupted,
                "spoken_start": ev.spoken_start_t_ms,
                "spoken_end": ev.spoken_end_t_ms,
                "created_t_ms": ev.created_t_ms,
                "origin_t_ms": ev.origin_t_ms,
                "priority": ev.priority}
    raise TypeError(f"unknown event type: {type(ev)!r}")


def record_to_event(rec: dict) -> Union[PipelineEvent, Description]:
    t = rec.get("type")
    if t == "hand_state":
        return HandStateChanged(Hand(rec["hand"]), Gesture(rec["from"]),
                                Gesture(rec["to"]), int(rec["frame_id"]),
                                int(rec["t_ms"]))
    if t == "keyframe":
        return Keyframe(KeyframeKind(rec["kind"]), int(rec["frame_id"]),
                        tuple(HandContact(Hand(c["hand"]), Gesture(c["gesture"]))
                              for c in rec.get("hands", [])),
                        int(rec["t_ms"]))
    if t == "composite":
        return CompositeGesture(CompositeKind(rec["kind"]), int(rec["frame_id"]),
                                rec.get("detail", {}), int(rec["t_ms"]))
    if t == "query":
        return QueryIssued(rec["text"], int(rec["frame_id"]), int(rec["t_ms"]))
    if t == "description":
        d = Description(DescriptionKind(rec["kind"]), rec["text"],
                        created_t_ms=int(rec["created_t_ms"]),
                        keyframe_id=rec.get("keyframe"),
                        priority=int(rec.get("priority", 0)),
                        spoken_start_t_ms=rec.get("spoken_start"),
                        spoken_end_t_ms=rec.get("spoken_end"),
                        interrupted=bool(rec.get("interrupted", False)),
                        origin_t_ms=rec.get("origin_t_ms"))
        return d
    raise SessionParseError(f"unknown event record type: {t!r}")


def serialize_events(events: Iterable[Union[PipelineEvent, Description]]) -> str:
    return "".join(json.dumps(event_to_record(e)) + "\n" for e in events)


def parse_events(stream: Union[bytes, str, IO]) -> list[Union[PipelineEvent, Description]]:
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    events = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(record_to_event(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise SessionParseError(f"line {line_no}: malformed JSON: {exc}") from exc
    return events
