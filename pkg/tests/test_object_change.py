"""Embedding similarity and object-change detection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from tsribe.core import ContactSide, Frame, Gesture, Hand
from tsribe.object_change import (AnnotationContactDetector, CropHistory,
                                  Embedding, HeuristicContactDetector, cosine,
                                  builtin_embed, make_contact_detector)
from tsribe.synth import synth_hand


def e(*v):
    return Embedding(tuple(float(x) for x in v))


class TestEmbedding:
    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            Embedding(())
        with pytest.raises(ValueError):
            Embedding((1.0, float("nan")))
        with pytest.raises(ValueError):
            Embedding((0.0, 0.0))

    def test_cosine_basics(self):
        assert cosine(e(1, 0), e(1, 0)) == pytest.approx(1.0)
        assert cosine(e(1, 0), e(0, 1)) == pytest.approx(0.0)
        assert cosine(e(1, 0), e(-1, 0)) == pytest.approx(-1.0)

    def test_cosine_scale_invariant(self):
        assert cosine(e(2, 3), e(4, 6)) == pytest.approx(1.0)

    def test_cosine_dim_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            cosine(e(1, 0), e(1, 0, 0))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
           st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    def test_cosine_bounded(self, a, b):
        if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
            return
        assert -1.0 <= cosine(e(*a), e(*b)) <= 1.0


class TestCropHistory:
    def test_first_sample_never_fires(self):
        assert CropHistory().observe(e(1, 0)) is False

    def test_similar_then_dissimilar(self):
        h = CropHistory(s=4, u=0.85)
        assert h.observe(e(1, 0)) is False
        assert h.observe(e(1, 0.05)) is False  # cos ~ 0.9988
        assert h.observe(e(0, 1)) is True      # orthogonal to both

    def test_requires_dissimilar_to_all(self):
        h = CropHistory(s=4, u=0.85)
        h.observe(e(1, 0))
        h.observe(e(0, 1))
        # Similar to the second sample -> no change even though far from first.
        assert h.observe(e(0.05, 1)) is False

    def test_ring_buffer_evicts_oldest(self):
        h = CropHistory(s=2, u=0.85)
        h.observe(e(1, 0))
        h.observe(e(0, 1))
        h.observe(e(0, 1))
        # (1,0) has been evicted; the remaining two are both (0,1).
        assert h.observe(e(1, 0)) is True

    def test_reset(self):
        h = CropHistory()
        h.observe(e(1, 0))
        h.reset()
        assert len(h) == 0
        assert h.observe(e(0, 1)) is False

    def test_param_validation(self):
        with pytest.raises(ValueError):
            CropHistory(s=0)
        with pytest.raises(ValueError):
            CropHistory(u=1.0)
        with pytest.raises(ValueError):
            CropHistory(cadence=0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 0.95), st.integers(1, 6),
           st.lists(st.integers(0, 3), min_size=1, max_size=20))
    def test_threshold_monotonicity(self, u, s, seq):
        """A stricter (higher) threshold can only fire more often."""
        basis = [e(1, 0, 0, 0), e(0.9, 0.43589, 0, 0),
                 e(0.5, 0.5, 0.5, 0.5), e(0, 0, 0, 1)]
        lo, hi = CropHistory(s=s, u=u), CropHistory(s=s, u=min(u + 0.04, 0.99))
        for i in seq:
            fired_lo = lo.observe(basis[i])
            fired_hi = hi.observe(basis[i])
            assert fired_hi or not fired_lo


class TestBuiltinEmbed:
    def test_unit_norm(self, tmp_path):
        img = Image.new("RGB", (64, 48), (120, 30, 200))
        v = np.asarray(builtin_embed(img).vector)
        assert v.shape == (256,)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_all_black_valid(self):
        v = np.asarray(builtin_embed(Image.new("RGB", (8, 8), 0)).vector)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_same_image_identical(self):
        img = Image.new("RGB", (32, 32), (10, 200, 40))
        assert builtin_embed(img).vector == builtin_embed(img.copy()).vector

    def test_different_images_change(self):
        a = builtin_embed(Image.new("RGB", (32, 32), (255, 0, 0)))
        b = Image.new("RGB", (32, 32), (0, 0, 255))
        # Flat images of any hue embed identically in luminance space, so
        # use a structured second image.
        px = b.load()
        for i in range(32):
            px[i, i] = (255, 255, 255)
        assert cosine(a, builtin_embed(b)) < 1.0

    def test_undecodable_path(self, tmp_path):
        p = tmp_path / "bad.png"
        p.write_bytes(b"not an image")
        with pytest.raises(ValueError, match="undecodable"):
            builtin_embed(str(p))


class TestContactDetectors:
    def test_annotation_detector(self):
        cs = ContactSide(True, (0.1, 0.1, 0.5, 0.5), tag="cup")
        frame = Frame(0, 0, contact={Hand.RIGHT: cs, Hand.LEFT: None})
        det = AnnotationContactDetector()
        assert det.detect(frame, Hand.RIGHT) == cs
        assert det.detect(frame, Hand.LEFT) is None
        assert det.detect(Frame(1, 1), Hand.RIGHT) is None

    def test_heuristic_detector(self):
        rng = np.random.default_rng(0)
        hand = synth_hand(Gesture.HOLD, rng)
        frame = Frame(0, 0, right=hand, image_ref="img.png")
        det = HeuristicContactDetector()
        cs = det.detect(frame, Hand.RIGHT)
        assert cs.in_contact and cs.box is not None
        x0, y0, x1, y1 = cs.box
        assert 0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0
        assert det.detect(frame, Hand.LEFT) is None

    def test_factory(self):
        assert isinstance(make_contact_detector("annot"), AnnotationContactDetector)
        assert isinstance(make_contact_detector("heuristic"), HeuristicContactDetector)
        det = make_contact_detector("http:https://svc/contact")
        assert det.url == "https://svc/contact"
        with pytest.raises(ValueError):
            make_contact_detector("nope")
