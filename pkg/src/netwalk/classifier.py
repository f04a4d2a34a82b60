"""Small linear classifiers used by the training loop and group recognition.

Both are deliberately simple, deterministic, dependency-free models:
full-batch gradient descent from zero-initialized weights on standardized
features, so repeated runs on the same data produce identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def standardize_fit(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and scales; constant columns get scale 1 to stay finite."""
    x = np.asarray(features, dtype=float)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0.0] = 1.0
    return mean, scale


@dataclass
class LogisticBinaryClassifier:
    """Regularized linear model on a logistic-type loss.

    ``predict`` returns, per row, the predicted boolean label and the
    model's confidence in that label (the squashed margin, folded so the
    reported probability is always that of the predicted side).
    """

    learning_rate: float = 0.5
    epochs: int = 400
    l2: float = 1.0e-3
    weights: np.ndarray | None = None
    bias: float = 0.0
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "LogisticBinaryClassifier":
        x = np.asarray(features, dtype=float)
        y = np.asarray(labels, dtype=float)
        if x.ndim != 2 or len(x) != len(y):
            raise ValueError("features must be 2-D with one label per row")
        self.mean, self.scale = standardize_fit(x)
        z = (x - self.mean) / self.scale
        n, d = z.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.epochs):
            p = _sigmoid(z @ w + b)
            grad_w = z.T @ (p - y) / n + self.l2 * w
            grad_b = float(np.mean(p - y))
            w -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
        self.weights = w
        self.bias = b
        return self

    def predict(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.weights is None:
            raise ValueError("classifier is not fitted")
        x = np.asarray(features, dtype=float)
        z = (x - self.mean) / self.scale
        p = _sigmoid(z @ self.weights + self.bias)
        labels = p > 0.5
        confidence = np.where(labels, p, 1.0 - p)
        return labels, confidence


@dataclass
class LinearGroupClassifier:
    """One-vs-rest linear classifier on a margin-type (squared hinge) loss.

    Classes are kept in sorted label order; prediction is the argmax of the
    per-class scores, so exact score ties resolve to the first label.
    """

    learning_rate: float = 0.1
    epochs: int = 600
    l2: float = 1.0e-3
    classes: list[str] = field(default_factory=list)
    weights: np.ndarray | None = None   # (n_classes, n_features)
    biases: np.ndarray | None = None
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels: list[str]) -> "LinearGroupClassifier":
        x = np.asarray(features, dtype=float)
        if x.ndim != 2 or len(x) != len(labels):
            raise ValueError("features must be 2-D with one label per row")
        self.classes = sorted(set(labels))
        self.mean, self.scale = standardize_fit(x)
        z = (x - self.mean) / self.scale
        n, d = z.shape
        self.weights = np.zeros((len(self.classes), d))
        self.biases = np.zeros(len(self.classes))
        for c, name in enumerate(self.classes):
            y = np.where(np.asarray(labels) == name, 1.0, -1.0)
            w = np.zeros(d)
            b = 0.0
            for _ in range(self.epochs):
                margin = y * (z @ w + b)
                slack = np.maximum(0.0, 1.0 - margin)
                grad_w = -(z.T @ (y * slack)) * (2.0 / n) + self.l2 * w
                grad_b = -float(np.mean(y * slack)) * 2.0
                w -= self.learning_rate * grad_w
                b -= self.learning_rate * grad_b
            self.weights[c] = w
            self.biases[c] = b
        return self

    def scores(self, features: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ValueError("classifier is not fitted")
        x = np.asarray(features, dtype=float)
        z = (x - self.mean) / self.scale
        return z @ self.weights.T + self.biases

    def predict(self, features: np.ndarray) -> tuple[list[str], np.ndarray]:
        s = self.scores(features)
        picks = np.argmax(s, axis=1)
        return [self.classes[i] for i in picks], s


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v, dtype=float)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out
