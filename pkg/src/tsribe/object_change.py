"""Object flip/change detection while a grasp persists.

Every K frames during a grasp the current object crop's embedding is
compared (cosine similarity) against the last s samples; a change fires
only when it is dissimilar to every one of them. The history resets when
the grasp ends so a new object never gets compared against the old one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ContactSide, Hand, HandFrame


@dataclass(frozen=True)
class Embedding:
    vector: tuple[float, ...]
    frame_id: int = -1

    def __post_init__(self):
        arr = np.asarray(self.vector, dtype=np.float64)
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("embedding must be non-empty and finite")
        if float(np.linalg.norm(arr)) == 0.0:
            raise ValueError("zero-norm embedding")


def cosine(a: Embedding, b: Embedding) -> float:
    va = np.asarray(a.vector, dtype=np.float64)
    vb = np.asarray(b.vector, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"embedding dimension mismatch: {va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm embedding")
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


class CropHistory:
    """Ring buffer of the last s crop embeddings with change detection."""

    def __init__(self, s: int = 4, u: float = 0.85, cadence: int = 6):
        if s < 1:
            raise ValueError("history size s must be >= 1")
        if not (0.0 < u < 1.0):
            raise ValueError("threshold u must be in (0, 1)")
        if cadence < 1:
            raise ValueError("cadence must be >= 1")
        self.s = s
        self.u = u
        self.cadence = cadence
        self._buf: deque[Embedding] = deque(maxlen=s)

    def __len__(self) -> int:
        return len(self._buf)

    def observe(self, e: Embedding) -> bool:
        """Record one sample; True when it differs from every prior sample.

        The sample is appended regardless of the outcome, so the first crop
        of a grasp never fires.
        """
        changed = len(self._buf) > 0 and all(
            cosine(e, h) < self.u for h in self._buf)
        self._buf.append(e)
        return changed

    def reset(self) -> None:
        self._buf.clear()


def builtin_embed(image, frame_id: int = -1) -> Embedding:
    """Deterministic stand-in for an embedding backend.

    Downscales to 16x16 luminance, flattens to 256 values, L2-normalizes.
    Accepts a path or a PIL image.
    """
    from PIL import Image

    if isinstance(image, (str, bytes)) or hasattr(image, "__fspath__"):
        try:
            img = Image.open(image)
        except Exception as exc:
            raise ValueError(f"undecodable image: {exc}") from exc
    else:
        img = image
    gray = img.convert("L").resize((16, 16), Image.BILINEAR)
    vec = np.asarray(gray, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # All-black image: use a uniform unit vector so the invariant holds.
        vec = np.full(vec.size, 1.0 / np.sqrt(vec.size))
    else:
        vec = vec / norm
    return Embedding(tuple(vec), frame_id)


# ---------------------------------------------------------------------------
# Contact detection (abstracted backend)
# ---------------------------------------------------------------------------

class ContactDetector:
    """Reports whether each visible hand touches an object, plus its crop."""

    def detect(self, frame, side: Hand) -> Optional[ContactSide]:
        raise NotImplementedError


class AnnotationContactDetector(ContactDetector):
    """Reads contact fields straight from the session frames (test/replay)."""

    def detect(self, frame, side: Hand) -> Optional[ContactSide]:
        if frame.contact is None:
            return None
        return frame.contact.get(side)


class HeuristicContactDetector(ContactDetector):
    """Assumes contact whenever a hand is visible; object box = hand bbox
    inflated by 40% (objects extend beyond the skeleton)."""

    INFLATE = 0.4

    def detect(self, frame, side: Hand) -> Optional[ContactSide]:
        hand: Optional[HandFrame] = frame.hand(side)
        if hand is None:
            return None
        xs = [lm.x for lm in hand.landmarks]
        ys = [lm.y for lm in hand.landmarks]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        dx, dy = (x1 - x0) * self.INFLATE / 2, (y1 - y0) * self.INFLATE / 2
        box = (max(0.0, x0 - dx), max(0.0, y0 - dy),
               min(1.0, x1 + dx), min(1.0, y1 + dy))
        return ContactSide(in_contact=True, box=box, crop=frame.image_ref, tag=None)


class HTTPContactDetector(ContactDetector):
    """Remote contact service speaking the session-file contact schema.

    POSTs {"frame_id": int, "image": path-or-null} and expects
    {"left": {...}|null, "right": {...}|null} back.
    """

    def __init__(self, url: str, timeout_s: float = 30.0):
        self.url = url
        self.timeout_s = timeout_s

    def detect(self, frame, side: Hand) -> Optional[ContactSide]:
        import requests

        resp = requests.post(self.url,
                             json={"frame_id": frame.frame_id,
                                   "image": frame.image_ref},
                             timeout=self.timeout_s)
        resp.raise_for_status()
        obj = resp.json().get(side.value)
        if obj is None:
            return None
        box = obj.get("box")
        return ContactSide(in_contact=bool(obj.get("in_contact", False)),
                           box=tuple(box) if box else None,
                           crop=obj.get("crop"), tag=obj.get("tag"))


def make_contact_detector(spec: str) -> ContactDetector:
    if spec == "annot":
        return AnnotationContactDetector()
    if spec == "heuristic":
        return HeuristicContactDetector()
    if spec.startswith("http:"):
        return HTTPContactDetector(spec[len("http:"):])
    raise ValueError(f"unknown contact detector: {spec!r}")
