"""Turns pipeline events into prioritized, interruptible narration.

A single logical event loop owns all state here. Generation requests are
handed back to the caller as IssueGeneration actions; their results come
back through on_generation_result tagged (keyframe_id, kind) and are never
applied out of loop.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .core import (CompositeGesture, CompositeKind, ContactSide, Description,
                   DescriptionKind, Gesture, Hand, HandStateChanged, Keyframe,
                   KeyframeKind, PipelineEvent, QueryIssued)
from .backends import DescriptionRequest

log = logging.getLogger(__name__)

# Queue rank, high priority first. Color labels and object texts sit above
# hand state because their discrete gestures may interrupt ongoing narration;
# they can never collide with each other (mutually exclusive configurations).
PRIORITY = {
    DescriptionKind.QUERY_ANSWER: 0,
    DescriptionKind.COLOR_LABEL: 1,
    DescriptionKind.TEXTS: 1,
    DescriptionKind.STATUS: 1,
    DescriptionKind.HAND_STATE: 2,
    DescriptionKind.BRIEF: 3,
    DescriptionKind.DETAILED: 4,
    DescriptionKind.COMPARATIVE: 5,
}

INTERRUPTING = {DescriptionKind.QUERY_ANSWER, DescriptionKind.COLOR_LABEL,
                DescriptionKind.TEXTS, DescriptionKind.STATUS}

STILL_PROCESSING_TEXT = "Still processing the text, please try again later."
QUERY_FAILED_TEXT = "I could not answer that."
FLIP_TEXT = "You flipped or changed the object."

MERGE_WINDOW_MS = 1000
DEFAULT_RATE_CPS = 15.0


# -- actions ------------------------------------------------------------------

@dataclass(frozen=True)
class Speak:
    description: Description


@dataclass(frozen=True)
class Interrupt:
    description: Description


@dataclass(frozen=True)
class IssueGeneration:
    request: DescriptionRequest
    origin_t_ms: int


@dataclass(frozen=True)
class DropPending:
    keyframe_id: Optional[int]
    kind: DescriptionKind


@dataclass(frozen=True)
class Ignore:
    reason: str


Action = Union[Speak, Interrupt, IssueGeneration, DropPending, Ignore]


# -- templates ----------------------------------------------------------------

def hand_state_text(hand: Hand, from_gesture: Gesture, to_gesture: Gesture) -> str:
    if to_gesture is Gesture.OUT_OF_VIEW:
        return f"Your {hand.value} hand is out of view."
    if from_gesture is Gesture.OUT_OF_VIEW:
        # Presence and gesture are simultaneous here; merged form.
        return f"I see your {hand.value} hand is {to_gesture.verb}."
    return f"Your {hand.value} hand is {to_gesture.verb}."


def both_hands_text(gesture: Gesture) -> str:
    return f"I see your both hands are {gesture.verb}."


def build_prompt(kind: DescriptionKind, which_hand: str = "left",
                 gesture: str = "hold", object_name: str = "object",
                 two_objects: bool = False,
                 question: str = "") -> tuple[str, str]:
    """Prompt template plus image selection ("crop", "crops", or "frame")."""
    if kind is DescriptionKind.BRIEF:
        return f"What is my {which_hand} hand touching?", "crop"
    if kind is DescriptionKind.DETAILED:
        return (f"Can you describe the object I am {gesture}ing "
                f"with my {which_hand} hand in detail?", "crop")
    if kind is DescriptionKind.TEXTS:
        return (f"I am holding the object with my {which_hand} hand. "
                f"Please describe the text line by line. If there is no text, "
                f"can you just return 'no text on the {object_name} your "
                f"{which_hand} hand is {gesture}ing.", "crop")
    if kind is DescriptionKind.COMPARATIVE:
        if two_objects:
            return ("Can you describe the object I am holding with my left hand "
                    "and the one with my right hand? What are the differences "
                    "or similarities between them?", "crops")
        return ("Can you describe the spatial and visual relationship between "
                "the points I am touching, and highlight any visual "
                "similarities or differences between them?", "frame")
    if kind is DescriptionKind.QUERY_ANSWER:
        return question, "frame"
    raise ValueError(f"no prompt template for kind {kind!r}")


# -- event context ------------------------------------------------------------

@dataclass
class EventContext:
    """Per-frame facts the orchestrator needs but events do not carry."""
    contact: Optional[dict[Hand, Optional[ContactSide]]] = None
    frame_image: Optional[str] = None
    color_name: Optional[str] = None


@dataclass
class _QueueEntry:
    priority: int
    created: int
    seq: int
    desc: Description

    def __lt__(self, other):
        return (self.priority, self.created, self.seq) < \
            (other.priority, other.created, other.seq)


@dataclass
class _MergeInfo:
    hand: Hand
    gesture: Gesture
    fresh_presence: bool


class Orchestrator:
    def __init__(self, rate_cps: float = DEFAULT_RATE_CPS,
                 merge_window_ms: int = MERGE_WINDOW_MS):
        self.rate_cps = rate_cps
        self.merge_window_ms = merge_window_ms
        self.speaking: Optional[Description] = None
        self.speaking_end: Optional[int] = None
        self.transcript: list[Description] = []
        self._queue: list[_QueueEntry] = []
        self._seq = 0
        self._dropped: set[int] = set()  # id()s of lazily removed queue items
        self._merge_info: dict[int, _MergeInfo] = {}
        self._pending: dict[tuple[Optional[int], DescriptionKind], int] = {}
        self._texts_ready: dict[int, str] = {}
        self._waiting_detailed: dict[int, Description] = {}
        self._brief_started: set[int] = set()
        self._latest_kf: int = -1
        self._last_color: Optional[str] = None
        self._query_locked = False
        self._lock_release: Optional[Description] = None

    # -- narration channel -----------------------------------------------

    def _duration_ms(self, text: str) -> int:
        return int(math.ceil(len(text) / self.rate_cps)) * 1000

    def _start(self, desc: Description, now: int) -> None:
        desc.spoken_start_t_ms = now
        self.speaking = desc
        self.speaking_end = now + self._duration_ms(desc.text)
        self._merge_info.pop(id(desc), None)
        if desc.kind is DescriptionKind.BRIEF and desc.keyframe_id is not None:
            self._brief_started.add(desc.keyframe_id)
            waiting = self._waiting_detailed.pop(desc.keyframe_id, None)
            if waiting is not None:
                heapq.heappush(self._queue, self._entry(waiting))

    def _entry(self, desc: Description) -> _QueueEntry:
        self._seq += 1
        return _QueueEntry(desc.priority, desc.created_t_ms, self._seq, desc)

    def _finish(self, now: int) -> Description:
        desc = self.speaking
        assert desc is not None
        desc.spoken_end_t_ms = now
        self.transcript.append(desc)
        self.speaking = None
        self.speaking_end = None
        if desc is self._lock_release:
            self._query_locked = False
            self._lock_release = None
        self._start_next(now)
        return desc

    def _interrupt(self, now: int) -> Optional[Description]:
        desc = self.speaking
        if desc is None:
            return None
        desc.spoken_end_t_ms = now
        desc.interrupted = True
        self.transcript.append(desc)
        if desc is self._lock_release:
            # Only a new query interrupts an answer; its own lock takes over.
            self._query_locked = False
            self._lock_release = None
        self.speaking = None
        self.speaking_end = None
        return desc

    def _start_next(self, now: int) -> None:
        # While a query lock is held, only the answer (or its failure status)
        # may take the channel; everything else stays queued until release.
        skipped: list[_QueueEntry] = []
        started: Optional[_QueueEntry] = None
        while self._queue:
            entry = heapq.heappop(self._queue)
            if id(entry.desc) in self._dropped:
                self._dropped.discard(id(entry.desc))
                continue
            if self._query_locked and entry.desc is not self._lock_release:
                skipped.append(entry)
                continue
            started = entry
            break
        for entry in skipped:
            heapq.heappush(self._queue, entry)
        if started is not None:
            self._start(started.desc, now)

    def _enqueue(self, desc: Description, now: int,
                 interrupting: bool = False) -> list[Action]:
        actions: list[Action] = []
        if interrupting and self.speaking is not None \
                and desc.priority < self.speaking.priority:
            actions.append(Interrupt(self._interrupt(now)))
        heapq.heappush(self._queue, self._entry(desc))
        if self.speaking is None:
            self._start_next(now)
        actions.append(Speak(desc))
        return actions

    def tick(self, now: int) -> list[Description]:
        """Advance the narration channel up to now; returns completions."""
        done: list[Description] = []
        while self.speaking is not None and self.speaking_end is not None \
                and self.speaking_end <= now:
            end = self.speaking_end
            done.append(self._finish(end))
        return done

    def next_wakeup(self) -> Optional[int]:
        return self.speaking_end

    def flush(self, now: int) -> Optional[Description]:
        """Cut off narration at end of input: the current utterance is
        interrupted and everything still queued goes unspoken."""
        interrupted = self._interrupt(now)
        self._queue.clear()
        self._dropped.clear()
        self._pending.clear()
        return interrupted

    def idle(self) -> bool:
        return self.speaking is None and not self._queue and not self._pending

    # -- staleness ---------------------------------------------------------

    def _purge_older_than(self, kf: int) -> list[Action]:
        actions: list[Action] = []
        for key in [k for k in self._pending
                    if k[0] is not None and k[0] < kf]:
            del self._pending[key]
            actions.append(DropPending(key[0], key[1]))
        for entry in self._queue:
            d = entry.desc
            if d.keyframe_id is not None and d.keyframe_id < kf:
                self._dropped.add(id(d))
        for old in [k for k in self._waiting_detailed if k < kf]:
            del self._waiting_detailed[old]
        for old in [k for k in self._texts_ready if k < kf]:
            del self._texts_ready[old]
        return actions

    def _interrupt_stale(self, kf: int, now: int) -> list[Action]:
        d = self.speaking
        if d is None or d.kind is DescriptionKind.QUERY_ANSWER:
            return []
        if d.created_t_ms >= now:
            return []  # produced by this same frame
        if d.keyframe_id is None or d.keyframe_id < kf:
            interrupted = self._interrupt(now)
            self._start_next(now)
            return [Interrupt(interrupted)] if interrupted else []
        return []

    # -- descriptions --------------------------------------------------------

    def _make(self, kind: DescriptionKind, text: str, now: int,
              keyframe_id: Optional[int] = None,
              origin_t_ms: Optional[int] = None) -> Description:
        return Description(kind=kind, text=text, created_t_ms=now,
                           keyframe_id=keyframe_id, priority=PRIORITY[kind],
                           origin_t_ms=now if origin_t_ms is None else origin_t_ms)

    # -- generation plumbing ---------------------------------------------

    def _issue(self, kind: DescriptionKind, prompt: str, images: tuple[str, ...],
               kf: Optional[int], now: int) -> IssueGeneration:
        self._pending[(kf, kind)] = now
        req = DescriptionRequest(kind=kind, prompt=prompt, images=images,
                                 keyframe_id=kf, issued_t_ms=now)
        return IssueGeneration(req, origin_t_ms=now)

    @staticmethod
    def _crop_handle(contact: Optional[ContactSide], kf: int,
                     frame_image: Optional[str]) -> str:
        if contact is not None:
            if contact.crop:
                return contact.crop
            if contact.tag:
                return contact.tag
        return frame_image or f"frame-{kf}"

    def _issue_keyframe_generations(self, ev: Keyframe, ctx: EventContext,
                                    now: int) -> list[Action]:
        if not ev.hands_in_contact:
            return []
        hc = ev.hands_in_contact[0]
        which = hc.hand.value if len(ev.hands_in_contact) == 1 else "both"
        gesture = hc.gesture.value
        contact = ctx.contact.get(hc.hand) if ctx.contact else None
        crop = self._crop_handle(contact, ev.frame_id, ctx.frame_image)
        actions: list[Action] = []
        for kind in (DescriptionKind.BRIEF, DescriptionKind.DETAILED,
                     DescriptionKind.TEXTS):
            prompt, _sel = build_prompt(kind, which_hand=which, gesture=gesture)
            actions.append(self._issue(kind, prompt, (crop,), ev.frame_id, now))
        return actions

    # -- event entry point -------------------------------------------------

    def on_event(self, event: PipelineEvent, now: int,
                 ctx: Optional[EventContext] = None) -> list[Action]:
        ctx = ctx or EventContext()
        self.tick(now)

        if isinstance(event, QueryIssued):
            return self._on_query(event, ctx, now)
        if self._query_locked:
            actions: list[Action] = []
            if isinstance(event, Keyframe):
                # The lock suppresses narration and generation, but a newer
                # grasp still supersedes anything staged for older keyframes.
                self._latest_kf = max(self._latest_kf, event.frame_id)
                actions += self._purge_older_than(event.frame_id)
            actions.append(Ignore(f"query-locked: {type(event).__name__}"))
            return actions
        if isinstance(event, HandStateChanged):
            return self._on_hand_state(event, now)
        if isinstance(event, Keyframe):
            return self._on_keyframe(event, ctx, now)
        if isinstance(event, CompositeGesture):
            return self._on_composite(event, ctx, now)
        log.warning("ignoring unknown event: %r", event)
        return [Ignore("unknown event")]

    def _on_hand_state(self, ev: HandStateChanged, now: int) -> list[Action]:
        fresh = ev.from_gesture is Gesture.OUT_OF_VIEW
        # Merge with a queued fresh-presence message for the other hand when
        # both report the same gesture within the merge window.
        if fresh and ev.to_gesture is not Gesture.OUT_OF_VIEW:
            for entry in self._queue:
                info = self._merge_info.get(id(entry.desc))
                if (info is not None and info.fresh_presence
                        and info.hand != ev.hand
                        and info.gesture == ev.to_gesture
                        and id(entry.desc) not in self._dropped
                        and now - entry.desc.created_t_ms <= self.merge_window_ms):
                    entry.desc.text = both_hands_text(ev.to_gesture)
                    del self._merge_info[id(entry.desc)]
                    return [Speak(entry.desc)]
        desc = self._make(DescriptionKind.HAND_STATE,
                          hand_state_text(ev.hand, ev.from_gesture, ev.to_gesture),
                          now, origin_t_ms=ev.t_ms)
        self._merge_info[id(desc)] = _MergeInfo(ev.hand, ev.to_gesture, fresh)
        return self._enqueue(desc, now)

    def _on_keyframe(self, ev: Keyframe, ctx: EventContext, now: int) -> list[Action]:
        actions: list[Action] = []
        kf = ev.frame_id
        self._latest_kf = max(self._latest_kf, kf)
        actions += self._purge_older_than(kf)
        actions += self._interrupt_stale(kf, now)
        if ev.kind is KeyframeKind.OBJECT_CHANGED:
            desc = self._make(DescriptionKind.HAND_STATE, FLIP_TEXT, now,
                              origin_t_ms=ev.t_ms)
            actions += self._enqueue(desc, now)
        actions += self._issue_keyframe_generations(ev, ctx, now)
        return actions

    def _on_composite(self, ev: CompositeGesture, ctx: EventContext,
                      now: int) -> list[Action]:
        if ev.kind is CompositeKind.HOLD_POINT:
            color = ctx.color_name
            if color is None:
                return [Ignore("hold+point without a sampled color")]
            if color == self._last_color:
                return [Ignore("duplicate color label")]
            self._last_color = color
            desc = self._make(DescriptionKind.COLOR_LABEL, color, now,
                              origin_t_ms=ev.t_ms)
            return self._enqueue(desc, now, interrupting=True)

        if ev.kind is CompositeKind.HOLD_SWIPE_UP:
            kf = self._latest_kf
            text = self._texts_ready.get(kf)
            if text is not None:
                desc = self._make(DescriptionKind.TEXTS, text, now,
                                  keyframe_id=kf, origin_t_ms=ev.t_ms)
            else:
                desc = self._make(DescriptionKind.STATUS, STILL_PROCESSING_TEXT,
                                  now, origin_t_ms=ev.t_ms)
            return self._enqueue(desc, now, interrupting=True)

        if ev.kind in (CompositeKind.BIMANUAL_SAME, CompositeKind.BIMANUAL_DIFFERENT):
            two = ev.kind is CompositeKind.BIMANUAL_DIFFERENT
            prompt, _sel = build_prompt(DescriptionKind.COMPARATIVE, two_objects=two)
            if two:
                crops = []
                for hand in (Hand.LEFT, Hand.RIGHT):
                    contact = ctx.contact.get(hand) if ctx.contact else None
                    crops.append(self._crop_handle(contact, ev.frame_id,
                                                   ctx.frame_image))
                images = tuple(crops)
            else:
                images = (ctx.frame_image or f"frame-{ev.frame_id}",)
            kf = self._latest_kf if self._latest_kf >= 0 else ev.frame_id
            return [self._issue(DescriptionKind.COMPARATIVE, prompt, images,
                                kf, now)]
        return [Ignore(f"unhandled composite {ev.kind}")]

    def _on_query(self, ev: QueryIssued, ctx: EventContext, now: int) -> list[Action]:
        actions: list[Action] = []
        interrupted = self._interrupt(now)
        if interrupted is not None:
            actions.append(Interrupt(interrupted))
        self._query_locked = True
        self._lock_release = None
        prompt, _sel = build_prompt(DescriptionKind.QUERY_ANSWER, question=ev.text)
        image = ctx.frame_image or f"frame-{ev.frame_id}"
        actions.append(self._issue(DescriptionKind.QUERY_ANSWER, prompt,
                                   (image,), None, now))
        return actions

    # -- generation results ------------------------------------------------

    def on_generation_result(self, keyframe_id: Optional[int],
                             kind: DescriptionKind, text: Optional[str],
                             now: int, error: bool = False) -> list[Action]:
        self.tick(now)
        key = (keyframe_id, kind)
        origin = self._pending.pop(key, None)
        if origin is None:
            return [DropPending(keyframe_id, kind)]

        if kind is DescriptionKind.QUERY_ANSWER:
            if error or text is None:
                desc = self._make(DescriptionKind.STATUS, QUERY_FAILED_TEXT,
                                  now, origin_t_ms=origin)
            else:
                desc = self._make(DescriptionKind.QUERY_ANSWER, text, now,
                                  origin_t_ms=origin)
            self._lock_release = desc
            return self._enqueue(desc, now, interrupting=True)

        if keyframe_id is not None and keyframe_id < self._latest_kf:
            return [DropPending(keyframe_id, kind)]
        if error or text is None:
            if kind is DescriptionKind.BRIEF and keyframe_id is not None:
                waiting = self._waiting_detailed.pop(keyframe_id, None)
                if waiting is not None:
                    return self._enqueue(waiting, now)
            return [DropPending(keyframe_id, kind)]

        if kind is DescriptionKind.TEXTS:
            assert keyframe_id is not None
            self._texts_ready[keyframe_id] = text
            return []
        if kind is DescriptionKind.BRIEF:
            desc = self._make(kind, text, now, keyframe_id, origin_t_ms=origin)
            return self._enqueue(desc, now)
        if kind is DescriptionKind.DETAILED:
            desc = self._make(kind, text, now, keyframe_id, origin_t_ms=origin)
            if keyframe_id is not None and keyframe_id not in self._brief_started \
                    and (keyframe_id, DescriptionKind.BRIEF) in self._pending:
                self._waiting_detailed[keyframe_id] = desc
                return []
            return self._enqueue(desc, now)
        if kind is DescriptionKind.COMPARATIVE:
            desc = self._make(kind, text, now, keyframe_id, origin_t_ms=origin)
            return self._enqueue(desc, now)
        log.warning("unexpected generation kind: %s", kind)
        return []
