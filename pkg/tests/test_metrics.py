"""Evaluation metrics: per-class P/R/F1, macro-F1, confusion matrix."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsribe.core import Gesture
from tsribe.metrics import CLASS_ORDER, evaluate, latency_stats

G = Gesture
H, T, P, O = G.HOLD, G.TOUCH, G.POINT, G.OUT_OF_VIEW


class TestEvaluate:
    def test_perfect_predictions(self):
        labels = [H, T, P, O, H]
        rep = evaluate(labels, labels)
        assert rep.accuracy == 1.0
        assert rep.macro_f1 == 1.0
        for cls in (H, T, P, O):
            m = rep.per_class[cls.value]
            assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_small_worked_example(self):
        # 4 samples: hold->hold, hold->touch, touch->touch, point->point.
        gt = [H, H, T, P]
        pred = [H, T, T, P]
        rep = evaluate(pred, gt)
        assert rep.accuracy == 0.75
        hold = rep.per_class["hold"]
        assert hold.precision == 1.0 and hold.recall == 0.5
        assert hold.f1 == pytest.approx(2 / 3)
        touch = rep.per_class["touch"]
        assert touch.precision == 0.5 and touch.recall == 1.0
        assert touch.f1 == pytest.approx(2 / 3)
        point = rep.per_class["point"]
        assert point.f1 == 1.0
        # out-of-view absent everywhere: undefined and excluded from macro.
        assert rep.per_class["out"].f1 is None
        assert rep.macro_f1 == pytest.approx((2 / 3 + 2 / 3 + 1.0) / 3)

    def test_confusion_rows_are_percentages(self):
        gt = [H, H, H, H, T]
        pred = [H, H, T, P, T]
        rep = evaluate(pred, gt)
        i = CLASS_ORDER.index(H)
        assert rep.confusion_pct[i][CLASS_ORDER.index(H)] == 50.0
        assert rep.confusion_pct[i][CLASS_ORDER.index(T)] == 25.0
        assert rep.confusion_pct[i][CLASS_ORDER.index(P)] == 25.0
        assert sum(rep.confusion_pct[i]) == pytest.approx(100.0)

    def test_zero_support_row_is_zero(self):
        rep = evaluate([H], [H])
        j = CLASS_ORDER.index(P)
        assert rep.confusion_pct[j] == [0.0, 0.0, 0.0, 0.0]

    def test_predicted_but_never_true(self):
        # Class predicted without support: precision 0, recall 0 -> f1 0,
        # included in the macro average.
        rep = evaluate([P, H], [H, H])
        m = rep.per_class["point"]
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
        assert rep.macro_f1 == pytest.approx((2 / 3 + 0.0) / 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            evaluate([H], [H, T])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from([H, T, P, O]), min_size=1, max_size=50),
           st.data())
    def test_against_brute_force(self, gt, data):
        pred = [data.draw(st.sampled_from([H, T, P, O])) for _ in gt]
        rep = evaluate(pred, gt)
        assert rep.accuracy == pytest.approx(
            sum(p == g for p, g in zip(pred, gt)) / len(gt))
        for cls in CLASS_ORDER:
            tp = sum(1 for p, g in zip(pred, gt) if p == g == cls)
            fp = sum(1 for p, g in zip(pred, gt) if p == cls and g != cls)
            fn = sum(1 for p, g in zip(pred, gt) if p != cls and g == cls)
            m = rep.per_class[cls.value]
            if tp + fp + fn == 0:
                assert m.f1 is None
                continue
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            assert m.precision == pytest.approx(prec)
            assert m.recall == pytest.approx(rec)
            f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            assert m.f1 == pytest.approx(f1)

    def test_to_dict_shape(self):
        d = evaluate([H, T], [H, T]).to_dict()
        assert d["class_order"] == ["hold", "touch", "point", "out"]
        assert set(d["per_class"]) == {"hold", "touch", "point", "out"}
        assert len(d["confusion_counts"]) == 4


class TestLatencyStats:
    def test_basic(self):
        s = latency_stats([100.0, 200.0, 300.0])
        assert s.count == 3
        assert s.mean_ms == 200.0
        assert s.sd_ms == pytest.approx(np.std([100, 200, 300]))

    def test_empty(self):
        s = latency_stats([])
        assert (s.count, s.mean_ms, s.sd_ms) == (0, 0.0, 0.0)
