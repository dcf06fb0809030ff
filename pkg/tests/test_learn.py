"""Split, normalization, training, prediction, and evaluation metrics."""

import math
import random

import numpy as np
import pytest

from socialcred import learn
from socialcred.features import FEATURE_COLUMNS, FeatureVector
from socialcred.learn import (
    INFLUENCER,
    NON_INFLUENCER,
    LabeledExample,
    Model,
    Normalization,
    TrainingDivergedError,
    auc_trapezoid,
    evaluate,
    label_examples,
    load_labels_csv,
    logistic_gradient,
    logistic_loss,
    normalize_apply,
    normalize_fit,
    predict,
    roc_curve,
    split,
    train_baseline,
    train_logistic,
    train_logistic_with_history,
)

_DIM = len(FEATURE_COLUMNS)


def example(a, b, label, user="u", domain="/d"):
    """15-dim example whose informative features sit in the first two slots."""
    values = [a, b] + [0.0] * (_DIM - 2)
    return LabeledExample(
        vector=FeatureVector(window="2017-01", domain=domain, user_id=user,
                             values=tuple(values)),
        label=label,
    )


def separable_set(n=40, margin=1.0, seed=0):
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        if i % 2 == 0:
            examples.append(example(rng.uniform(margin, 2 * margin),
                                    rng.uniform(0, 1), INFLUENCER, user=f"u{i}"))
        else:
            examples.append(example(rng.uniform(-2 * margin, -margin),
                                    rng.uniform(0, 1), NON_INFLUENCER, user=f"u{i}"))
    return examples


class TestSplit:
    def test_stratified_small(self):
        examples = [example(i, 0, INFLUENCER, user=f"p{i}") for i in range(5)]
        examples += [example(i, 0, NON_INFLUENCER, user=f"n{i}") for i in range(5)]
        train, test = split(examples, 0.2, seed=1)
        assert len(test) == 2
        assert sum(e.target for e in test) == 1

    def test_same_seed_identical(self):
        examples = separable_set(30)
        assert split(examples, 0.3, seed=9) == split(examples, 0.3, seed=9)

    def test_rounding_rule(self):
        examples = separable_set(100)
        train, test = split(examples, 0.3, seed=4)
        assert len(test) == 30
        assert len(train) == 70
        assert not set(id(e) for e in train) & set(id(e) for e in test)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            split([example(1, 0, INFLUENCER)] * 4, 0.5, seed=0)

    def test_fraction_validated(self):
        with pytest.raises(ValueError):
            split(separable_set(10), 1.0, seed=0)


class TestNormalization:
    def test_midpoint(self):
        norm = Normalization(mins=(2.0,), maxs=(4.0,))
        assert normalize_apply(norm, [3.0])[0] == pytest.approx(0.5)

    def test_constant_feature_maps_to_half(self):
        norm = normalize_fit([[7.0], [7.0], [7.0]])
        assert normalize_apply(norm, [7.0])[0] == 0.5
        assert normalize_apply(norm, [123.0])[0] == 0.5

    def test_clamped(self):
        norm = Normalization(mins=(0.0,), maxs=(5.0,))
        assert normalize_apply(norm, [10.0])[0] == 1.0
        assert normalize_apply(norm, [-3.0])[0] == 0.0

    def test_dimension_mismatch(self):
        norm = Normalization(mins=(0.0, 0.0), maxs=(1.0, 1.0))
        with pytest.raises(ValueError):
            normalize_apply(norm, [1.0])


class TestTrainLogistic:
    def test_separable_fixture_reaches_full_training_accuracy(self):
        examples = separable_set(40, margin=1.0)
        model = train_logistic(examples, lr=0.5, epochs=2000)
        correct = sum(
            (predict(model, e.vector) >= 0.5) == bool(e.target) for e in examples
        )
        assert correct == len(examples)

    def test_identical_features_balanced_labels_predict_half(self):
        examples = [example(1.0, 1.0, INFLUENCER if i % 2 else NON_INFLUENCER,
                            user=f"u{i}") for i in range(20)]
        model = train_logistic(examples, lr=0.5, epochs=3000, l2=0.01)
        assert predict(model, examples[0].vector) == pytest.approx(0.5, abs=1e-6)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n, d = int(rng.integers(3, 12)), int(rng.integers(1, 6))
            x = rng.normal(size=(n, d))
            y = rng.integers(0, 2, size=n).astype(float)
            theta = rng.normal(size=d + 1)
            l2 = float(rng.uniform(0, 0.1))
            analytic = logistic_gradient(theta, x, y, l2)
            h = 1e-5
            fd = np.empty_like(theta)
            for j in range(len(theta)):
                up, down = theta.copy(), theta.copy()
                up[j] += h
                down[j] -= h
                fd[j] = (logistic_loss(up, x, y, l2) - logistic_loss(down, x, y, l2)) / (2 * h)
            denom = max(np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(analytic - fd) / denom < 1e-6

    def test_loss_non_increasing_at_stable_rate(self):
        examples = separable_set(30)
        _, losses = train_logistic_with_history(examples, lr=0.1, epochs=300)
        for a, b in zip(losses, losses[1:]):
            assert b <= a + 1e-12

    def test_divergence_raises_naming_lr(self):
        with pytest.raises(TrainingDivergedError, match="1e\\+30"):
            train_logistic(separable_set(20), lr=1e30, epochs=50)

    def test_final_loss_recorded(self):
        model = train_logistic(separable_set(20), epochs=50)
        assert math.isfinite(model.config["final_loss"])


class TestBaselines:
    def test_stump_picks_separating_feature(self):
        examples = separable_set(30)
        model = train_baseline(examples, "decision_stump")
        assert model.params["feature"] == 0

    def test_stump_accuracy_at_least_majority_prior(self):
        rng = random.Random(2)
        for trial in range(10):
            examples = [
                example(rng.uniform(0, 1), rng.uniform(0, 1),
                        INFLUENCER if rng.random() < 0.3 else NON_INFLUENCER,
                        user=f"u{trial}-{i}")
                for i in range(25)
            ]
            if len({e.label for e in examples}) < 2:
                continue
            model = train_baseline(examples, "decision_stump")
            correct = sum((predict(model, e.vector) >= 0.5) == bool(e.target)
                          for e in examples)
            prior = max(sum(e.target for e in examples),
                        len(examples) - sum(e.target for e in examples))
            assert correct >= prior

    def test_naive_bayes_equal_conditionals_prior_only(self):
        # one positive and three negatives with identical features: the
        # prediction collapses to the class prior
        examples = [example(1.0, 1.0, INFLUENCER, user="a")]
        examples += [example(1.0, 1.0, NON_INFLUENCER, user=f"b{i}") for i in range(3)]
        model = train_baseline(examples, "naive_bayes")
        assert predict(model, examples[0].vector) == pytest.approx(0.25, abs=1e-9)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            train_baseline(separable_set(10), "svm")


class TestPredict:
    def test_zero_weight_logistic_gives_half(self):
        model = Model(
            kind="logistic",
            normalization=Normalization(mins=(0.0,) * _DIM, maxs=(1.0,) * _DIM),
            params={"weights": [0.0] * _DIM, "bias": 0.0},
            config={},
        )
        assert predict(model, example(0.3, 0.7, INFLUENCER).vector) == 0.5

    def test_monotone_in_positive_weight(self):
        weights = [10.0] + [0.0] * (_DIM - 1)
        model = Model(
            kind="logistic",
            normalization=Normalization(mins=(0.0,) * _DIM, maxs=(1.0,) * _DIM),
            params={"weights": weights, "bias": 0.0},
            config={},
        )
        low = predict(model, example(0.0, 0.0, INFLUENCER).vector)
        high = predict(model, example(1.0, 0.0, INFLUENCER).vector)
        assert high > low

    def test_stump_reports_side_probability(self):
        model = Model(
            kind="decision_stump",
            normalization=Normalization(mins=(0.0,) * _DIM, maxs=(1.0,) * _DIM),
            params={"feature": 0, "threshold": 0.5, "prob_above": 0.8, "prob_below": 0.1},
            config={},
        )
        assert predict(model, example(0.9, 0.0, INFLUENCER).vector) == 0.8
        assert predict(model, example(0.1, 0.0, INFLUENCER).vector) == 0.1

    def test_dimension_mismatch(self):
        model = Model(
            kind="logistic",
            normalization=Normalization(mins=(0.0,), maxs=(1.0,)),
            params={"weights": [0.0], "bias": 0.0},
            config={},
        )
        with pytest.raises(ValueError):
            predict(model, example(1.0, 2.0, INFLUENCER).vector)


def mann_whitney(scores, targets):
    s = np.asarray(scores)
    y = np.asarray(targets)
    pos, neg = s[y == 1], s[y == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestEvaluate:
    def test_perfect_scores(self):
        examples = separable_set(20)
        model = train_logistic(examples, epochs=2000)
        report = evaluate(model, examples)
        assert report.accuracy == 1.0
        assert report.auc == 1.0
        assert report.tp + report.fp + report.tn + report.fn == len(examples)

    def test_majority_prediction_accuracy(self):
        test = [example(0.5, 0.5, NON_INFLUENCER, user=f"n{i}") for i in range(7)]
        test += [example(0.5, 0.5, INFLUENCER, user=f"p{i}") for i in range(3)]
        model = Model(
            kind="logistic",
            normalization=Normalization(mins=(0.0,) * _DIM, maxs=(1.0,) * _DIM),
            params={"weights": [0.0] * _DIM, "bias": -10.0},
            config={},
        )
        report = evaluate(model, test)
        assert report.accuracy == pytest.approx(0.7)
        assert report.classification_error == pytest.approx(0.3)

    def test_accuracy_plus_error_is_one_exactly(self):
        examples = separable_set(17)
        report = evaluate(train_logistic(examples, epochs=100), examples)
        assert report.accuracy + report.classification_error == 1.0

    def test_auc_matches_pairwise_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(4, 80))
            scores = np.round(rng.uniform(0, 1, size=n), 2)  # rounding forces ties
            targets = rng.integers(0, 2, size=n)
            if targets.sum() in (0, n):
                continue
            points = roc_curve(scores, targets)
            assert abs(auc_trapezoid(points) - mann_whitney(scores, targets)) < 1e-9

    def test_roc_monotone_and_anchored(self):
        rng = np.random.default_rng(3)
        scores = rng.uniform(0, 1, size=50)
        targets = rng.integers(0, 2, size=50)
        points = roc_curve(scores, targets)
        assert points[0] == (0.0, 0.0)
        assert points[-1] == (1.0, 1.0)
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            assert x1 >= x0 and y1 >= y0

    def test_auc_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(11)
        scores = rng.uniform(0.01, 0.99, size=60)
        targets = rng.integers(0, 2, size=60)
        base = auc_trapezoid(roc_curve(scores, targets))
        squashed = auc_trapezoid(roc_curve(np.tanh(3 * scores), targets))
        assert base == pytest.approx(squashed, abs=1e-12)

    def test_single_class_test_set_degrades_gracefully(self):
        model = train_logistic(separable_set(10), epochs=50)
        only_pos = [e for e in separable_set(10) if e.label == INFLUENCER]
        report = evaluate(model, only_pos)
        assert report.roc_points == ((0.0, 0.0), (1.0, 1.0))
        assert report.auc == 0.5


class TestDeterminismAndSerialization:
    def test_same_seed_identical_model_bytes_and_report(self):
        examples = separable_set(30)
        m1 = train_logistic(examples, seed=5, epochs=200)
        m2 = train_logistic(examples, seed=5, epochs=200)
        assert m1.to_json() == m2.to_json()
        assert evaluate(m1, examples).to_json() == evaluate(m2, examples).to_json()

    def test_model_round_trip(self):
        model = train_baseline(separable_set(20), "naive_bayes")
        restored = Model.from_json(model.to_json())
        assert restored.to_json() == model.to_json()
        vector = separable_set(20)[0].vector
        assert predict(restored, vector) == predict(model, vector)

    def test_labels_csv_and_join(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("user_id,domain,label\nu1,/d,influencer\nu2,/d,non_influencer\n", "utf-8")
        labels = load_labels_csv(path)
        vectors = [example(0, 0, INFLUENCER, user=u).vector for u in ("u1", "u2", "u3")]
        joined = label_examples(vectors, labels)
        assert [e.label for e in joined] == [INFLUENCER, NON_INFLUENCER, NON_INFLUENCER]

    def test_labels_csv_rejects_unknown_label(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("user_id,domain,label\nu1,/d,guru\n", "utf-8")
        with pytest.raises(ValueError):
            load_labels_csv(path)
