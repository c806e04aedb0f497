"""Replay engine: drives a session through the full pipeline.

Virtual-time replay (the default) advances a simulated clock through frame
timestamps, backend completions, and narration endpoints, so runs are
deterministic and byte-identical. Wall-clock mode uses the monotonic clock
instead and never blocks the loop on a backend.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .backends import BackendProfile, DescriptionRequest, MockBackend
from .colors import nearest_named_color, sample_region
from .composite import CompositeTracker, detect_config
from .core import (GRASPING, CompositeGesture, CompositeKind, Description,
                   DescriptionKind, Frame, Gesture, Hand, HandContact,
                   Keyframe, KeyframeKind, PipelineEvent, QueryIssued,
                   Session)
from .gesture import GestureClassifier
from .metrics import EvalReport, evaluate, latency_stats
from .motion import OracleMotionClassifier, TrajectoryWindow
from .object_change import (AnnotationContactDetector, ContactDetector,
                            CropHistory, Embedding, builtin_embed)
from .orchestrator import (EventContext, IssueGeneration, Orchestrator)
from .stabilizer import HandStabilizer, SmoothingParams


@dataclass
class ReplayConfig:
    smoothing: SmoothingParams = SmoothingParams()
    flip_s: int = 4
    flip_u: float = 0.85
    flip_cadence: int = 6
    contact_detector: ContactDetector = field(default_factory=AnnotationContactDetector)
    classifier: Union[str, GestureClassifier] = "gt"  # "gt" or a trained model
    motion_classifier: object = field(default_factory=OracleMotionClassifier)
    backend: Optional[MockBackend] = None
    profile: BackendProfile = BackendProfile()
    seed: int = 0
    rate_cps: float = 15.0
    wall_clock: bool = False
    max_inflight: int = 4
    asset_dir: Optional[Path] = None  # base for image_ref paths


@dataclass
class ReplayResult:
    trace: list[PipelineEvent]
    transcript: list[Description]
    report: EvalReport


class ReplayEngine:
    def __init__(self, session: Session, config: Optional[ReplayConfig] = None):
        self.session = session
        self.cfg = config or ReplayConfig()
        if self.cfg.backend is None:
            self.cfg.backend = MockBackend(profile=self.cfg.profile,
                                           seed=self.cfg.seed)
        self.orch = Orchestrator(rate_cps=self.cfg.rate_cps)
        self.stabilizers = {h: HandStabilizer(h, self.cfg.smoothing) for h in Hand}
        self.crop_histories = {
            h: CropHistory(self.cfg.flip_s, self.cfg.flip_u, self.cfg.flip_cadence)
            for h in Hand}
        self.grasp_frames = {h: -1 for h in Hand}  # frames since grasp start
        self.windows = {h: TrajectoryWindow() for h in Hand}
        self.tracker = CompositeTracker(self.cfg.motion_classifier)
        self.trace: list[PipelineEvent] = []
        self._heap: list = []
        self._heap_seq = 0
        self._inflight = 0
        self._waitq: deque = deque()
        self._contact_delay_ms: dict[int, int] = {}
        self._model_latency: dict[str, list[float]] = {
            "fast": [], "rich": [], "contact": []}
        self._image_cache: dict[str, object] = {}
        self.predictions: dict[Hand, list[Gesture]] = {h: [] for h in Hand}

    # -- timed event plumbing ------------------------------------------------

    def _push(self, t: int, kind: str, payload) -> None:
        self._heap_seq += 1
        heapq.heappush(self._heap, (t, self._heap_seq, kind, payload))

    def _drain(self, until: Optional[int]) -> None:
        while True:
            t_next = self._heap[0][0] if self._heap else None
            wake = self.orch.next_wakeup()
            if wake is not None and (t_next is None or wake < t_next):
                t_next = wake
            if t_next is None or (until is not None and t_next > until):
                break
            self.orch.tick(t_next)
            while self._heap and self._heap[0][0] <= t_next:
                _t, _s, kind, payload = heapq.heappop(self._heap)
                if kind == "ready":
                    self._maybe_start(_t, payload)
                elif kind == "done":
                    self._deliver(_t, payload)

    # -- generation scheduling ------------------------------------------------

    def _handle_issue(self, action: IssueGeneration, now: int) -> None:
        req = action.request
        ready_t = now
        if req.kind in (DescriptionKind.BRIEF, DescriptionKind.DETAILED,
                        DescriptionKind.TEXTS) and req.keyframe_id is not None:
            kf = req.keyframe_id
            if kf not in self._contact_delay_ms:
                delay_s = self.cfg.backend.contact_delay_s(kf)
                self._contact_delay_ms[kf] = int(round(delay_s * 1000))
                self._model_latency["contact"].append(delay_s)
            ready_t = now + self._contact_delay_ms[kf]
        self._push(ready_t, "ready", req)

    def _maybe_start(self, now: int, req: DescriptionRequest) -> None:
        if self._inflight >= self.cfg.max_inflight:
            self._waitq.append(req)
            return
        self._start_request(now, req)

    def _start_request(self, now: int, req: DescriptionRequest) -> None:
        self._inflight += 1
        backend = self.cfg.backend
        delay_s = backend.request_delay_s(req)
        self._model_latency[BackendProfile.profile_of(req.kind)].append(delay_s)
        try:
            if req.kind is DescriptionKind.QUERY_ANSWER:
                text = backend.answer_query(req.images[0] if req.images else None,
                                            req.prompt, req.keyframe_id,
                                            req.issued_t_ms)
            else:
                text = backend.generate(req)
            error = False
        except Exception:
            text, error = None, True
        self._push(now + int(round(delay_s * 1000)), "done",
                   (req.keyframe_id, req.kind, text, error))

    def _deliver(self, now: int, payload) -> None:
        kf, kind, text, error = payload
        self._inflight -= 1
        if self._waitq:
            self._start_request(now, self._waitq.popleft())
        actions = self.orch.on_generation_result(kf, kind, text, now, error=error)
        for action in actions:
            if isinstance(action, IssueGeneration):
                self._handle_issue(action, now)

    # -- per-frame processing --------------------------------------------

    def _raw_prediction(self, frame: Frame, side: Hand) -> Gesture:
        clf = self.cfg.classifier
        if clf == "gt":
            if frame.gt is not None and side in frame.gt:
                return frame.gt[side]
            if frame.hand(side) is None:
                return Gesture.OUT_OF_VIEW
            raise ValueError(
                f"frame {frame.frame_id}: gt classifier mode requires gt labels")
        return clf.classify(frame.hand(side))[0]

    def _load_image(self, ref: str):
        if ref not in self._image_cache:
            from PIL import Image
            path = Path(ref)
            if self.cfg.asset_dir is not None and not path.is_absolute():
                path = self.cfg.asset_dir / path
            self._image_cache[ref] = Image.open(path).convert("RGB")
        return self._image_cache[ref]

    def _color_for(self, frame: Frame, event: CompositeGesture) -> Optional[str]:
        if frame.image_ref is None:
            return None
        fingertip = event.detail.get("fingertip")
        if fingertip is None:
            return None
        img = self._load_image(frame.image_ref)
        w, h = img.size
        px = (min(int(fingertip[0] * w), w - 1), min(int(fingertip[1] * h), h - 1))
        side = Hand(event.detail["point_hand"])
        try:
            rgb = sample_region(img, px, side)
        except ValueError:
            return None
        return nearest_named_color(rgb)

    def _object_change_events(self, frame: Frame) -> list[PipelineEvent]:
        events: list[PipelineEvent] = []
        fired = False
        for side in Hand:
            state = self.stabilizers[side].state
            if state.gesture in GRASPING:
                self.grasp_frames[side] += 1
                if self.grasp_frames[side] % self.cfg.flip_cadence == 0:
                    emb = None
                    if frame.embedding is not None:
                        emb = Embedding(frame.embedding, frame.frame_id)
                    elif frame.image_ref is not None:
                        emb = builtin_embed(self._load_image(frame.image_ref),
                                            frame.frame_id)
                    if emb is not None:
                        changed = self.crop_histories[side].observe(emb)
                        if changed and not fired:
                            fired = True
                            events.append(Keyframe(
                                KeyframeKind.OBJECT_CHANGED, frame.frame_id,
                                (HandContact(side, state.gesture),),
                                t_ms=frame.t_ms))
            else:
                self.grasp_frames[side] = -1
                self.crop_histories[side].reset()
        return events

    def _process_frame(self, frame: Frame) -> None:
        t = frame.t_ms
        events: list[PipelineEvent] = []
        for side in Hand:
            pred = self._raw_prediction(frame, side)
            self.predictions[side].append(pred)
            events += self.stabilizers[side].push_prediction(pred, frame.frame_id, t)

        events += self._object_change_events(frame)

        contact = {side: self.cfg.contact_detector.detect(frame, side)
                   for side in Hand}
        states = {side: self.stabilizers[side].state for side in Hand}
        hands = {side: frame.hand(side) for side in Hand}
        for side in Hand:
            hand = hands[side]
            if hand is None:
                self.windows[side].clear()
            else:
                self.windows[side].push(hand.landmarks[8])
        config = detect_config(states, hands, contact)
        events += self.tracker.step(config, hands, self.windows,
                                    frame.frame_id, t)

        for inj in frame.injected:
            if inj.type == "query":
                events.append(QueryIssued(inj.text, frame.frame_id, t))

        ctx = EventContext(contact=contact, frame_image=frame.image_ref)
        for ev in events:
            self.trace.append(ev)
            if isinstance(ev, CompositeGesture) and ev.kind is CompositeKind.HOLD_POINT:
                ctx.color_name = self._color_for(frame, ev)
            actions = self.orch.on_event(ev, t, ctx)
            for action in actions:
                if isinstance(action, IssueGeneration):
                    self._handle_issue(action, t)

    # -- top level -------------------------------------------------------

    def run(self) -> ReplayResult:
        if self.cfg.wall_clock:
            return self._run_wall_clock()
        t0 = time.monotonic()
        for frame in self.session.frames:
            self._drain(until=frame.t_ms)
            self._process_frame(frame)
        self._drain(until=None)
        elapsed = time.monotonic() - t0
        return self._result(elapsed)

    def _run_wall_clock(self) -> ReplayResult:
        t0 = time.monotonic()

        def now_ms() -> int:
            return int((time.monotonic() - t0) * 1000)

        for frame in self.session.frames:
            t = now_ms()
            self._drain(until=t)
            # Re-stamp the frame onto the wall clock so latency accounting
            # reflects real elapsed time.
            frame = Frame(frame.frame_id, t, frame.left, frame.right,
                          frame.image_ref, frame.injected, frame.gt,
                          frame.contact, frame.embedding)
            self._process_frame(frame)
        frame_elapsed = time.monotonic() - t0
        # Live mode ends with the stream: whatever is still speaking is cut
        # off and outstanding generations are abandoned.
        self.orch.flush(now_ms())
        self._heap.clear()
        self._waitq.clear()
        return self._result(frame_elapsed)

    def _result(self, elapsed_s: float) -> ReplayResult:
        report = EvalReport()
        if self.cfg.classifier != "gt":
            gts, preds = [], []
            for i, frame in enumerate(self.session.frames):
                if frame.gt is None:
                    continue
                for side in Hand:
                    if side in frame.gt:
                        gts.append(frame.gt[side])
                        preds.append(self.predictions[side][i])
            if gts:
                gesture_report = evaluate(preds, gts)
                report.accuracy = gesture_report.accuracy
                report.per_class = gesture_report.per_class
                report.macro_f1 = gesture_report.macro_f1
                report.confusion_pct = gesture_report.confusion_pct
                report.confusion_counts = gesture_report.confusion_counts

        transcript = self.orch.transcript
        by_kind: dict[str, list[float]] = {}
        for d in transcript:
            if d.latency_ms is not None:
                by_kind.setdefault(d.kind.value, []).append(float(d.latency_ms))
        report.latency_by_kind = {k: latency_stats(v) for k, v in by_kind.items()}
        report.model_latency = {
            k: latency_stats([s * 1000.0 for s in v])
            for k, v in self._model_latency.items() if v}
        report.n_frames = len(self.session.frames)
        report.n_trace_events = len(self.trace)
        report.n_descriptions = len(transcript)
        report.throughput_fps = (len(self.session.frames) / elapsed_s
                                 if elapsed_s > 0 else None)
        return ReplayResult(self.trace, transcript, report)


def replay(session: Session, config: Optional[ReplayConfig] = None) -> ReplayResult:
    return ReplayEngine(session, config).run()
