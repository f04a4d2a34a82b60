"""Linear classifiers: determinism, separability, tie-breaking."""

import numpy as np
import pytest

from netwalk.classifier import (
    LinearGroupClassifier,
    LogisticBinaryClassifier,
    standardize_fit,
)


def test_standardize_fit_constant_column():
    x = np.array([[1.0, 5.0], [1.0, 7.0], [1.0, 9.0]])
    mean, scale = standardize_fit(x)
    assert mean[0] == 1.0
    assert scale[0] == 1.0
    assert scale[1] > 0.0


def test_logistic_separable():
    rng = np.random.default_rng(3)
    x = np.concatenate([
        rng.normal(loc=-2.0, scale=0.3, size=(40, 2)),
        rng.normal(loc=2.0, scale=0.3, size=(40, 2)),
    ])
    y = np.concatenate([np.zeros(40, dtype=bool), np.ones(40, dtype=bool)])
    clf = LogisticBinaryClassifier().fit(x, y)
    labels, confidence = clf.predict(x)
    assert np.array_equal(labels, y)
    # confidence reports the predicted side, so it never drops below half
    assert np.all(confidence >= 0.5)
    assert np.all(confidence <= 1.0)


def test_logistic_deterministic():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(30, 3))
    y = x[:, 0] > 0.2
    a = LogisticBinaryClassifier().fit(x, y)
    b = LogisticBinaryClassifier().fit(x, y)
    assert np.array_equal(a.weights, b.weights)
    assert a.bias == b.bias


def test_logistic_validation():
    clf = LogisticBinaryClassifier()
    with pytest.raises(ValueError, match="not fitted"):
        clf.predict(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        clf.fit(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        clf.fit(np.zeros((3, 2)), np.zeros(4))


def test_group_classifier_sorted_classes_and_separable():
    rng = np.random.default_rng(13)
    centers = {"walk": (0.0, 0.0), "run": (6.0, 0.0), "stand": (0.0, 6.0)}
    rows, labels = [], []
    for name, (cx, cy) in centers.items():
        rows.append(rng.normal(loc=(cx, cy), scale=0.4, size=(30, 2)))
        labels += [name] * 30
    x = np.concatenate(rows)
    clf = LinearGroupClassifier().fit(x, labels)
    assert clf.classes == ["run", "stand", "walk"]
    predicted, scores = clf.predict(x)
    assert predicted == labels
    assert scores.shape == (90, 3)


def test_group_classifier_deterministic():
    rng = np.random.default_rng(17)
    x = rng.normal(size=(40, 4))
    labels = ["a" if v > 0 else "b" for v in x[:, 1]]
    a = LinearGroupClassifier().fit(x, labels)
    b = LinearGroupClassifier().fit(x, labels)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.biases, b.biases)


def test_group_classifier_tie_resolves_to_first_class():
    clf = LinearGroupClassifier(
        classes=["alpha", "beta"],
        weights=np.zeros((2, 3)),
        biases=np.zeros(2),
        mean=np.zeros(3),
        scale=np.ones(3),
    )
    predicted, _ = clf.predict(np.ones((1, 3)))
    assert predicted == ["alpha"]


def test_group_classifier_validation():
    clf = LinearGroupClassifier()
    with pytest.raises(ValueError, match="not fitted"):
        clf.scores(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        clf.fit(np.zeros((3, 2)), ["a", "b"])
