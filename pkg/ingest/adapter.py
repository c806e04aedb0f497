"""Frame sources and the session-record writer.

Single-pass streaming: frames are decoded, optionally strided and resized,
run through the extractor, and emitted as one JSON record per frame in
input order. Timestamps come from the video clock when the container
provides one and are forced strictly monotonic either way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Optional

import numpy as np

from .extractors import HandLandmarkExtractor, N_LANDMARKS

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass
class IngestConfig:
    source: str  # video path, camera index (digits), or frame directory
    width: int = 720
    height: int = 960
    stride: int = 1
    dump_dir: Optional[str] = None
    image_format: str = "png"  # "png" or "jpg"
    quality: int = 70  # JPEG quality when image_format == "jpg"
    fps_fallback: float = 30.0  # when the source carries no clock
    max_frames: Optional[int] = None

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.width < 1 or self.height < 1:
            raise ValueError("target resolution must be positive")
        if self.image_format not in ("png", "jpg"):
            raise ValueError("image format must be png or jpg")
        if not (1 <= self.quality <= 100):
            raise ValueError("quality must be in [1, 100]")


def _iter_video(cfg: IngestConfig) -> Iterator[tuple[np.ndarray, Optional[float]]]:
    import cv2

    src = cfg.source
    cap = cv2.VideoCapture(int(src) if src.isdigit() else src)
    if not cap.isOpened():
        raise RuntimeError(f"cannot open source: {src!r}")
    try:
        while True:
            ok, bgr = cap.read()
            if not ok:
                break
            t_ms = cap.get(cv2.CAP_PROP_POS_MSEC)
            yield cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB), (t_ms if t_ms > 0 else None)
    finally:
        cap.release()


def _iter_directory(cfg: IngestConfig) -> Iterator[tuple[np.ndarray, Optional[float]]]:
    from PIL import Image

    paths = sorted(p for p in Path(cfg.source).iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise RuntimeError(f"no image frames found in {cfg.source!r}")
    for p in paths:
        yield np.asarray(Image.open(p).convert("RGB")), None


def iter_frames(cfg: IngestConfig) -> Iterator[tuple[np.ndarray, Optional[float]]]:
    """Decoded RGB frames plus the container timestamp when available."""
    if not cfg.source.isdigit() and Path(cfg.source).is_dir():
        return _iter_directory(cfg)
    return _iter_video(cfg)


def _resize(frame: np.ndarray, cfg: IngestConfig) -> np.ndarray:
    if frame.shape[1] == cfg.width and frame.shape[0] == cfg.height:
        return frame
    from PIL import Image

    return np.asarray(Image.fromarray(frame).resize((cfg.width, cfg.height)))


def _hand_record(points) -> Optional[dict]:
    if points is None:
        return None
    if len(points) != N_LANDMARKS:
        raise ValueError(f"extractor returned {len(points)} landmarks, "
                         f"expected {N_LANDMARKS}")
    return {"landmarks": [[round(min(max(float(x), 0.0), 1.0), 6),
                           round(min(max(float(y), 0.0), 1.0), 6)]
                          for x, y in points]}


def _dump_image(frame: np.ndarray, frame_id: int, cfg: IngestConfig,
                out_dir: Path) -> str:
    from PIL import Image

    name = f"frame-{frame_id:06d}.{cfg.image_format}"
    path = out_dir / name
    img = Image.fromarray(frame)
    if cfg.image_format == "jpg":
        img.save(path, quality=cfg.quality)
    else:
        img.save(path)
    return str(Path(out_dir.name) / name)


def ingest(cfg: IngestConfig, extractor: HandLandmarkExtractor,
           out: IO[str]) -> int:
    """Stream session records for every processed frame; returns the count."""
    dump_dir: Optional[Path] = None
    if cfg.dump_dir is not None:
        dump_dir = Path(cfg.dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)

    n_out = 0
    last_t = -1
    for idx, (frame, clock_ms) in enumerate(iter_frames(cfg)):
        if cfg.max_frames is not None and n_out >= cfg.max_frames:
            break
        if idx % cfg.stride != 0:
            continue
        frame = _resize(frame, cfg)
        if clock_ms is not None:
            t_ms = int(round(clock_ms))
        else:
            t_ms = int(round(idx * 1000.0 / cfg.fps_fallback))
        t_ms = max(t_ms, last_t + 1)  # the parser requires strict monotonicity
        last_t = t_ms

        hands = extractor.extract(frame)
        rec = {
            "frame_id": idx,
            "t_ms": t_ms,
            "left": _hand_record(hands.get("left")),
            "right": _hand_record(hands.get("right")),
        }
        if dump_dir is not None:
            rec["image"] = _dump_image(frame, idx, cfg, dump_dir)
        out.write(json.dumps(rec) + "\n")
        n_out += 1
    return n_out
