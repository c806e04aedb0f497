"""Command line for the ingestion adapter.

    python3 ingest.py --source video.mp4 --dump-images frames/ --out session.jsonl

The output is the exact session format the tsribe pipeline reads; dump the
images next to the session file so the relative references resolve.
"""

from __future__ import annotations

import argparse
import sys

from .adapter import IngestConfig, ingest
from .extractors import load_extractor


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ingest",
        description="Convert video/camera/frame-directory input to session JSONL")
    parser.add_argument("--source", required=True,
                        help="video file, camera index, or directory of frames")
    parser.add_argument("--out", help="output session file (default: stdout)")
    parser.add_argument("--dump-images", dest="dump_dir",
                        help="directory for per-frame image dumps")
    parser.add_argument("--width", type=int, default=720)
    parser.add_argument("--height", type=int, default=960)
    parser.add_argument("--stride", type=int, default=1,
                        help="keep every Nth frame")
    parser.add_argument("--image-format", choices=["png", "jpg"], default="png")
    parser.add_argument("--quality", type=int, default=70,
                        help="JPEG quality for --image-format jpg")
    parser.add_argument("--fps", type=float, default=30.0,
                        help="assumed rate when the source has no clock")
    parser.add_argument("--max-frames", type=int)
    parser.add_argument("--extractor", default="mediapipe",
                        help="'mediapipe' or module:attribute")
    args = parser.parse_args(argv)

    cfg = IngestConfig(source=args.source, width=args.width, height=args.height,
                       stride=args.stride, dump_dir=args.dump_dir,
                       image_format=args.image_format, quality=args.quality,
                       fps_fallback=args.fps, max_frames=args.max_frames)
    try:
        extractor = load_extractor(args.extractor)
    except (RuntimeError, ValueError, ImportError) as exc:
        raise SystemExit(str(exc))

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            n = ingest(cfg, extractor, fh)
    else:
        n = ingest(cfg, extractor, sys.stdout)
    print(f"wrote {n} frame records", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
