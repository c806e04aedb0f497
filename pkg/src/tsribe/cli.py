"""Command-line entry point: replay, eval, train, synth, live."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backends import BackendProfile, HTTPBackend, LatencySpec, MockBackend
from .core import (Gesture, Hand, HandStateChanged, Session, parse_events,
                   parse_session, serialize_events)
from .gesture import GestureClassifier, load_training_file
from .metrics import evaluate
from .motion import (MotionClassifier, OracleMotionClassifier,
                     preprocess_trajectory)
from .object_change import make_contact_detector
from .pipeline import ReplayConfig, ReplayEngine
from .stabilizer import SmoothingParams
from .synth import (synth_gesture_dataset, synth_motion_dataset, synth_session)


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--smooth-x", type=int, default=12)
    p.add_argument("--smooth-n", type=int, default=6)
    p.add_argument("--smooth-t", type=int, default=4)
    p.add_argument("--flip-s", type=int, default=4)
    p.add_argument("--flip-u", type=float, default=0.85)
    p.add_argument("--flip-cadence", type=int, default=6)
    p.add_argument("--contact", default="annot",
                   help="annot | heuristic | http:<url>")
    p.add_argument("--classifier", default="gt",
                   help="'gt' (use session labels) or a gesture model file")
    p.add_argument("--motion", default="oracle",
                   help="'oracle' (rule-based) or a motion model file")
    p.add_argument("--backend", default="mock", choices=["mock", "http"])
    p.add_argument("--backend-url")
    p.add_argument("--backend-model", default="")
    p.add_argument("--backend-key-env",
                   help="environment variable holding the API key")
    p.add_argument("--timeout-s", type=float, default=30.0)
    p.add_argument("--latency-fast", default="0.48,0.62",
                   help="mock fast-captioner latency mean,sd seconds")
    p.add_argument("--latency-rich", default="3.07,3.08")
    p.add_argument("--latency-contact", default="0.87,0.86")
    p.add_argument("--rate", type=float, default=15.0,
                   help="narration speed, characters per second")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wall-clock", action="store_true",
                   help="run against the real clock instead of virtual time")


def _latency(spec: str) -> LatencySpec:
    mean, sd = (float(v) for v in spec.split(","))
    return LatencySpec(mean, sd)


def _build_config(args, session_path: Path) -> ReplayConfig:
    profile = BackendProfile(fast=_latency(args.latency_fast),
                             rich=_latency(args.latency_rich),
                             contact=_latency(args.latency_contact))
    if args.backend == "http":
        if not args.backend_url:
            raise SystemExit("--backend-url required with --backend http")
        key = os.environ.get(args.backend_key_env) if args.backend_key_env else None
        backend = HTTPBackend(args.backend_url, model=args.backend_model,
                              api_key=key, timeout_s=args.timeout_s)
    else:
        backend = MockBackend(profile=profile, seed=args.seed)
    classifier = args.classifier
    if classifier != "gt":
        classifier = GestureClassifier.load(classifier)
    motion = (OracleMotionClassifier() if args.motion == "oracle"
              else MotionClassifier.load(args.motion))
    return ReplayConfig(
        smoothing=SmoothingParams(args.smooth_x, args.smooth_n, args.smooth_t),
        flip_s=args.flip_s, flip_u=args.flip_u, flip_cadence=args.flip_cadence,
        contact_detector=make_contact_detector(args.contact),
        classifier=classifier, motion_classifier=motion,
        backend=backend, profile=profile, seed=args.seed, rate_cps=args.rate,
        wall_clock=args.wall_clock, asset_dir=session_path.parent)


def cmd_replay(args) -> int:
    session_path = Path(args.session)
    with open(session_path, "rb") as fh:
        session = parse_session(fh)
    engine = ReplayEngine(session, _build_config(args, session_path))
    result = engine.run()
    if args.out:
        Path(args.out).write_text(serialize_events(result.trace))
    if args.transcript:
        Path(args.transcript).write_text(serialize_events(result.transcript))
    if args.report:
        Path(args.report).write_text(json.dumps(result.report.to_dict(), indent=2))
    print(f"{len(session)} frames -> {len(result.trace)} events, "
          f"{len(result.transcript)} descriptions", file=sys.stderr)
    return 0


def _stable_predictions(trace, session: Session) -> dict[Hand, list[Gesture]]:
    changes: dict[Hand, dict[int, Gesture]] = {h: {} for h in Hand}
    for ev in trace:
        if isinstance(ev, HandStateChanged):
            changes[ev.hand][ev.frame_id] = ev.to_gesture
    preds: dict[Hand, list[Gesture]] = {h: [] for h in Hand}
    current = {h: Gesture.OUT_OF_VIEW for h in Hand}
    for frame in session.frames:
        for h in Hand:
            if frame.frame_id in changes[h]:
                current[h] = changes[h][frame.frame_id]
            preds[h].append(current[h])
    return preds


def cmd_eval(args) -> int:
    with open(args.session, "rb") as fh:
        session = parse_session(fh)
    with open(args.trace, "rb") as fh:
        trace = parse_events(fh)
    preds_by_hand = _stable_predictions(trace, session)
    gts, preds = [], []
    for i, frame in enumerate(session.frames):
        if frame.gt is None:
            continue
        for h in Hand:
            if h in frame.gt:
                gts.append(frame.gt[h])
                preds.append(preds_by_hand[h][i])
    if not gts:
        raise SystemExit("session carries no ground-truth labels")
    report = evaluate(preds, gts)
    report.n_frames = len(session)
    report.n_trace_events = len(trace)
    out = json.dumps(report.to_dict(), indent=2)
    if args.report:
        Path(args.report).write_text(out)
    else:
        print(out)
    return 0


def cmd_train_gesture(args) -> int:
    if args.data:
        x, y = load_training_file(args.data)
    else:
        x, y = synth_gesture_dataset(args.synthetic, noise=args.noise,
                                     seed=args.seed)
    clf = GestureClassifier(hidden=args.hidden, lr=args.lr, epochs=args.epochs,
                            batch=args.batch, seed=args.seed)
    clf.fit(x, y)
    clf.save(args.out)
    print(f"trained on {len(x)} samples, final loss "
          f"{clf.loss_history_[-1]:.4f} -> {args.out}", file=sys.stderr)
    return 0


def _load_motion_file(path):
    feats, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "features" in rec:
                feats.append(rec["features"])
            else:
                feats.append(preprocess_trajectory(rec["trajectory"]))
            labels.append(rec["label"])
    return np.asarray(feats, dtype=np.float64), np.asarray(labels)


def cmd_train_motion(args) -> int:
    if args.data:
        x, y = _load_motion_file(args.data)
    else:
        x, y = synth_motion_dataset(args.synthetic, seed=args.seed)
    clf = MotionClassifier(hidden=args.hidden, lr=args.lr, epochs=args.epochs,
                           batch=args.batch, seed=args.seed)
    clf.fit(x, y)
    clf.save(args.out)
    print(f"trained on {len(x)} samples, final loss "
          f"{clf.loss_history_[-1]:.4f} -> {args.out}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    from .core import serialize_session

    if args.kind == "session":
        session = synth_session(args.frames, noise=args.noise,
                                dropout=args.dropout, seed=args.seed)
        text = serialize_session(session)
    elif args.kind == "gesture-data":
        x, y = synth_gesture_dataset(args.n, noise=args.noise, seed=args.seed)
        text = "".join(json.dumps({"features": list(f), "label": str(l)}) + "\n"
                       for f, l in zip(x.tolist(), y))
    else:
        x, y = synth_motion_dataset(args.n, seed=args.seed)
        text = "".join(json.dumps({"features": list(f), "label": str(l)}) + "\n"
                       for f, l in zip(x.tolist(), y))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_live(args) -> int:
    """Consume session records from stdin, stream events/descriptions to stdout."""
    args.wall_clock = True
    cfg = _build_config(args, Path("."))
    engine = ReplayEngine(Session([]), cfg)
    import time
    t0 = time.monotonic()
    seen_trace = seen_spoken = 0

    def flush() -> None:
        nonlocal seen_trace, seen_spoken
        for ev in engine.trace[seen_trace:]:
            sys.stdout.write(serialize_events([ev]))
        seen_trace = len(engine.trace)
        for d in engine.orch.transcript[seen_spoken:]:
            sys.stdout.write(serialize_events([d]))
        seen_spoken = len(engine.orch.transcript)
        sys.stdout.flush()

    for line in sys.stdin:
        if not line.strip():
            continue
        session = parse_session(line)
        if not session.frames:
            continue
        frame = session.frames[0]
        now = int((time.monotonic() - t0) * 1000)
        engine._drain(until=now)
        engine._process_frame(frame)
        flush()
    while engine._heap or engine.orch.next_wakeup() is not None:
        now = int((time.monotonic() - t0) * 1000)
        engine._drain(until=now)
        flush()
        time.sleep(0.01)
    flush()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tsribe",
        description="Hand-landmark stream to stabilized gestures and narration")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="run a recorded session through the pipeline")
    p.add_argument("--session", required=True)
    p.add_argument("--out", help="event trace output (jsonl)")
    p.add_argument("--transcript", help="narration transcript output (jsonl)")
    p.add_argument("--report", help="evaluation report output (json)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("eval", help="score a trace against session ground truth")
    p.add_argument("--trace", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    for name, fn in (("train-gesture", cmd_train_gesture),
                     ("train-motion", cmd_train_motion)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} classifier")
        p.add_argument("--data", help="jsonl training file (default: synthetic)")
        p.add_argument("--synthetic", type=int, default=300,
                       help="samples per class when --data is omitted")
        p.add_argument("--noise", type=float, default=0.01)
        p.add_argument("--epochs", type=int, default=200)
        p.add_argument("--lr", type=float, default=0.05)
        p.add_argument("--batch", type=int, default=32)
        p.add_argument("--hidden", type=int, default=20)
        p.add_argument("--seed", type=int, default=7)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("synth", help="generate synthetic sessions or training data")
    p.add_argument("--kind", default="session",
                   choices=["session", "gesture-data", "motion-data"])
    p.add_argument("--frames", type=int, default=600)
    p.add_argument("--n", type=int, default=300, help="samples per class")
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("live", help="process session records streamed on stdin")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_live)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
