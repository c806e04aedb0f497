"""Pluggable caption/query providers: a deterministic mock and an HTTP client.

The mock backend returns canned strings keyed by (kind, image tag) and
simulates latency with a clamped-normal delay whose parameters come from a
BackendProfile. Delays are a pure function of the seed and the request
content, so identical requests always get identical delays.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .core import DescriptionKind

# Which latency profile serves each description kind. Brief descriptions come
# from the fast captioner; everything richer from the slow one.
FAST_KINDS = {DescriptionKind.BRIEF}
CONTACT_PROFILE = "contact"


class BackendError(RuntimeError):
    pass


class BackendTimeout(BackendError):
    pass


@dataclass(frozen=True)
class DescriptionRequest:
    kind: DescriptionKind
    prompt: str
    images: tuple[str, ...]
    keyframe_id: Optional[int]
    issued_t_ms: int

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("empty prompt")
        if self.kind in (DescriptionKind.BRIEF, DescriptionKind.DETAILED,
                         DescriptionKind.TEXTS) and len(self.images) != 1:
            raise ValueError(f"{self.kind.value} request must carry exactly 1 image")


@dataclass(frozen=True)
class LatencySpec:
    mean: float
    sd: float

    def __post_init__(self):
        if self.mean < 0:
            raise ValueError("latency mean must be >= 0")


@dataclass(frozen=True)
class BackendProfile:
    """Simulated latency (seconds) per component class."""
    fast: LatencySpec = LatencySpec(0.48, 0.62)
    rich: LatencySpec = LatencySpec(3.07, 3.08)
    contact: LatencySpec = LatencySpec(0.87, 0.86)

    def spec_for(self, profile: str) -> LatencySpec:
        return getattr(self, profile)

    @staticmethod
    def profile_of(kind: DescriptionKind) -> str:
        return "fast" if kind in FAST_KINDS else "rich"


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _clamped_mean(loc: float, sd: float) -> float:
    """E[max(N(loc, sd), 0)]."""
    z = loc / sd
    return loc * _norm_cdf(z) + sd * _norm_pdf(z)


def clamped_normal_location(mean: float, sd: float) -> float:
    """Location parameter so that clamping at zero preserves the target mean.

    Clamping a normal at zero shifts its mean upward; naively using the
    target mean as the location would overshoot it by well over 10% when
    sd is comparable to the mean.
    """
    if sd <= 0 or mean <= 0:
        return mean
    lo, hi = mean - 6 * sd, mean
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _clamped_mean(mid, sd) < mean:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class MockBackend:
    """Deterministic canned-answer backend with simulated latency."""

    def __init__(self, profile: BackendProfile = BackendProfile(), seed: int = 0,
                 answers: Optional[dict] = None):
        self.profile = profile
        self.seed = seed
        if answers is None:
            text = resources.files("tsribe.data").joinpath("mock_answers.json").read_text()
            answers = json.loads(text)
        self.answers = answers
        self._locations = {
            name: clamped_normal_location(spec.mean, spec.sd)
            for name, spec in (("fast", profile.fast), ("rich", profile.rich),
                               ("contact", profile.contact))
        }

    # -- latency -------------------------------------------------------------

    def delay_s(self, profile: str, key) -> float:
        """Simulated latency draw, a pure function of (seed, profile, key)."""
        spec = self.profile.spec_for(profile)
        if spec.sd == 0:
            return spec.mean
        digest = hashlib.sha256(
            json.dumps([self.seed, profile, key], sort_keys=True).encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return max(0.0, float(rng.normal(self._locations[profile], spec.sd)))

    def request_delay_s(self, req: DescriptionRequest) -> float:
        key = [req.kind.value, req.prompt, list(req.images), req.keyframe_id]
        return self.delay_s(BackendProfile.profile_of(req.kind), key)

    def contact_delay_s(self, keyframe_id: int) -> float:
        return self.delay_s("contact", keyframe_id)

    # -- text ----------------------------------------------------------------

    @staticmethod
    def _tag_of(image: str) -> str:
        # Image handles look like "crops/spice-red.png" or plain tags.
        name = image.rsplit("/", 1)[-1]
        return name.rsplit(".", 1)[0]

    def generate(self, req: DescriptionRequest) -> str:
        table = self.answers.get(req.kind.value, {})
        tags = [self._tag_of(img) for img in req.images]
        for key in ("|".join(tags), *tags):
            if key in table:
                return table[key]
        return self._fallback(req.kind)

    @staticmethod
    def _fallback(kind: DescriptionKind) -> str:
        if kind is DescriptionKind.BRIEF:
            return "Your hand is touching an object."
        if kind is DescriptionKind.DETAILED:
            return "You are interacting with an object; I cannot make out more detail."
        if kind is DescriptionKind.TEXTS:
            return "No readable text on the object."
        if kind is DescriptionKind.COMPARATIVE:
            return "Both hands are on objects; I cannot tell them apart."
        return "I am not sure about that."

    def answer_query(self, image: Optional[str], question: str,
                     keyframe_id: Optional[int] = None, issued_t_ms: int = 0) -> str:
        if not question:
            raise ValueError("empty question")
        table = self.answers.get(DescriptionKind.QUERY_ANSWER.value, {})
        if image is not None and self._tag_of(image) in table:
            return table[self._tag_of(image)]
        return self._fallback(DescriptionKind.QUERY_ANSWER)


class HTTPBackend:
    """Generic chat-completions-style JSON client."""

    def __init__(self, url: str, model: str = "", api_key: Optional[str] = None,
                 timeout_s: float = 30.0, max_tokens: int = 512, retries: int = 1):
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_tokens = max_tokens
        self.retries = retries

    def _image_content(self, image: str) -> dict:
        with open(image, "rb") as fh:
            b64 = base64.b64encode(fh.read()).decode("ascii")
        return {"type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{b64}"}}

    def _post(self, prompt: str, images) -> str:
        import requests

        content = [{"type": "text", "text": prompt}]
        content += [self._image_content(img) for img in images]
        payload = {"model": self.model,
                   "messages": [{"role": "user", "content": content}],
                   "max_tokens": self.max_tokens}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_exc: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json=payload, headers=headers,
                                     timeout=self.timeout_s)
            except requests.Timeout as exc:
                last_exc = BackendTimeout(str(exc))
                continue
            except requests.RequestException as exc:
                last_exc = BackendError(str(exc))
                continue
            if resp.status_code // 100 != 2:
                last_exc = BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                continue
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                last_exc = BackendError(f"malformed response: {exc}")
        raise last_exc  # type: ignore[misc]

    def generate(self, req: DescriptionRequest) -> str:
        return self._post(req.prompt, req.images)

    def answer_query(self, image: Optional[str], question: str,
                     keyframe_id: Optional[int] = None, issued_t_ms: int = 0) -> str:
        if not question:
            raise ValueError("empty question")
        return self._post(question, [image] if image else [])
