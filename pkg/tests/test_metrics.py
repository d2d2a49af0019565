from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from evpipe.ingest import label_from_name
from evpipe.metrics import (ConfusionMatrix, MetricsError, compute_metrics, confusion_from_pairs,
                            parse_predictions, render_report, reports_to_json)

FALL, SIT = label_from_name("falling-down").id, label_from_name("sit-down").id


def one_error_pairs():
    pairs = [(c, c) for c in range(12) for _ in range(2)]
    pairs[2 * FALL] = (FALL, SIT)
    return pairs


class TestConfusion:
    def test_empty(self):
        assert confusion_from_pairs([]) == ConfusionMatrix.zeros()

    def test_single(self):
        cm = confusion_from_pairs([(3, 3)])
        assert cm.counts[3, 3] == 1 and cm.total == 1

    def test_conservation(self, rng):
        pairs = rng.integers(0, 12, (24, 2)).tolist()
        assert confusion_from_pairs(pairs).total == 24

    @pytest.mark.parametrize("pair", [(12, 0), (0, -1)])
    def test_out_of_range(self, pair):
        with pytest.raises(MetricsError, match="out of range"):
            confusion_from_pairs([pair])

    def test_rejects_negative(self):
        with pytest.raises(MetricsError):
            ConfusionMatrix(-np.eye(3, dtype=int))


class TestCompute:
    @pytest.mark.parametrize("diag", [[2] * 12, [1, 5, 0, 3, 0, 0, 9, 1, 1, 1, 1, 1], [0] * 11 + [7]])
    def test_perfect(self, diag):
        r = compute_metrics(ConfusionMatrix(np.diag(diag)))
        assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_empty_is_error(self):
        with pytest.raises(MetricsError):
            compute_metrics(ConfusionMatrix.zeros())

    def test_one_error_in_24(self):
        r = compute_metrics(confusion_from_pairs(one_error_pairs()))
        assert abs(r.accuracy - 23 / 24) < 1e-4
        assert f"{r.accuracy:.3f}" == "0.958"
        # falling-down: P=1, R=1/2; sit-down: P=2/3, R=1; other ten classes perfect
        p = (10 + 1 + Fraction(2, 3)) / 12
        rc = (11 + Fraction(1, 2)) / 12
        f1 = (10 + Fraction(2, 3) + Fraction(4, 5)) / 12
        assert r.precision == pytest.approx(float(p), abs=1e-12)
        assert r.recall == pytest.approx(float(rc), abs=1e-12)
        assert r.f1 == pytest.approx(float(f1), abs=1e-12)

    def test_embedded_binary_class(self):
        cm = np.zeros((12, 12), int)
        cm[0, 0] = 2
        cm[0, 1] = 1  # FN
        cm[2, 0] = 1  # FP
        cm[3, 3] = 20
        r = compute_metrics(ConfusionMatrix(cm))
        c = r.per_class[0]
        assert (c.tp, c.fp, c.fn, c.tn) == (2, 1, 1, 20)
        assert round(c.precision, 3) == round(c.recall, 3) == round(c.f1, 3) == 0.667

    def test_zero_division_cells_are_zero(self):
        cm = np.zeros((12, 12), int)
        cm[0, 1] = 3
        r = compute_metrics(ConfusionMatrix(cm))
        assert r.per_class[0].precision == 0.0 and r.per_class[1].recall == 0.0
        assert r.per_class[0].f1 == 0.0
        assert (r.accuracy, r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0, 0.0)

    def test_single_class_matches_scalar_formulas(self):
        cm = np.zeros((12, 12), int)
        cm[4, 4] = 9
        r = compute_metrics(ConfusionMatrix(cm))
        tp, fp, fn, tn = 9, 0, 0, 0
        assert r.accuracy == (tp + tn) / (tp + fp + fn + tn)
        assert r.precision == tp / (tp + fp) and r.recall == tp / (tp + fn)
        assert r.f1 == 2 * r.recall * r.precision / (r.recall + r.precision)


matrices = st.lists(st.lists(st.integers(0, 6), min_size=12, max_size=12), min_size=12, max_size=12) \
    .filter(lambda m: sum(map(sum, m)) > 0)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_agrees_with_recount(m):
    r = compute_metrics(ConfusionMatrix(np.array(m)))
    acc, per = oracles.per_class_recount(m)
    assert abs(r.accuracy - acc) <= 1e-12
    for got, want in zip(r.per_class, per):
        assert (got.tp, got.fp, got.fn, got.tn) == (want["tp"], want["fp"], want["fn"], want["tn"])
        for k in ("precision", "recall", "f1"):
            assert abs(getattr(got, k) - want[k]) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(matrices, st.permutations(list(range(12))))
def test_permutation_invariance_and_bounds(m, perm):
    a = np.array(m)
    p = np.array(perm)
    r1 = compute_metrics(ConfusionMatrix(a))
    r2 = compute_metrics(ConfusionMatrix(a[np.ix_(p, p)]))
    for k in ("accuracy", "precision", "recall", "f1"):
        assert getattr(r1, k) == pytest.approx(getattr(r2, k), abs=1e-12)
    assert 0.0 <= r1.accuracy <= 1.0
    active = [c.f1 for c in r1.per_class if c.tp + c.fp + c.fn]
    assert min(active) - 1e-12 <= r1.f1 <= max(active) + 1e-12


class TestReport:
    def test_single_perfect_row(self):
        r = compute_metrics(ConfusionMatrix(np.eye(12, dtype=int)))
        lines = render_report({"m": r}).splitlines()
        assert lines[0].split() == ["Model", "Precision", "Recall", "F1", "ACC"]
        assert lines[1].split() == ["m", "1.000", "1.000", "1.000", "1.000"]

    def test_sorted_by_accuracy(self):
        best = compute_metrics(confusion_from_pairs(one_error_pairs()))
        pairs = one_error_pairs()
        pairs[0] = (0, 5)
        second = compute_metrics(confusion_from_pairs(pairs[:12] + pairs[12:]))
        assert second.accuracy < best.accuracy
        lines = render_report({"DVS-C2D": second, "DVS-MViT": best}).splitlines()
        assert lines[1].startswith("DVS-MViT") and lines[1].split()[-1] == "0.958"
        assert lines[2].startswith("DVS-C2D")

    def test_empty(self):
        assert len(render_report({}).splitlines()) == 1

    def test_json(self):
        import json
        r = compute_metrics(confusion_from_pairs(one_error_pairs()))
        data = json.loads(reports_to_json({"x": r}))
        assert data["x"]["accuracy"] == pytest.approx(23 / 24)
        assert len(data["x"]["per_class"]) == 12


class TestPredictionFile:
    def test_parse(self):
        assert parse_predictions("# header\n0 0\n\n3 4\n") == [(0, 0), (3, 4)]

    @pytest.mark.parametrize("text,line", [("0 0\n1\n", 2), ("0 0\nx 1\n", 2), ("1 2 3\n", 1)])
    def test_malformed(self, text, line):
        with pytest.raises(MetricsError, match=f"line {line}"):
            parse_predictions(text)

    def test_out_of_range(self):
        with pytest.raises(MetricsError, match="line 2: label out of range"):
            parse_predictions("0 0\n12 1\n")
