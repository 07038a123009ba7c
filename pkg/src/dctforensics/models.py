"""Classifiers over beta features.

Two models: a one-feature logistic probe (enough to separate two image sets
once their discriminating frequency is known) and the production multi-class
gradient-boosted tree ensemble over all 63 betas.  Both are written against
plain numpy and train deterministically, so serialized models are
byte-reproducible.

The boosting scheme is softmax one-vs-rest: each round fits one depth-limited
regression tree per class to that class's negative log-loss gradient and adds
it with a shrinkage factor.  Split search is an exact scan over sorted unique
feature values; equal-gain ties keep the lowest threshold (and lowest feature
index), which pins the trained trees down to the bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, FormatError, ShapeError

MODEL_FORMAT = "dctforensics-model"
MODEL_VERSION = 1

N_FEATURES_DEFAULT = 63


# ---------------------------------------------------------------------------
# logistic probe


@dataclass(frozen=True)
class LogisticModel:
    weight: float
    bias: float
    feature_index: int
    class_labels: tuple[str, str]

    def predict_proba(self, values: np.ndarray) -> np.ndarray:
        """P(positive class) for scalar feature values."""
        x = np.asarray(values, dtype=np.float64)
        return 1.0 / (1.0 + np.exp(-(self.weight * x + self.bias)))


def train_logistic(
    values: np.ndarray,
    labels: Sequence[str],
    feature_index: int = 0,
    max_iter: int = 10_000,
    tol: float = 1e-8,
    learning_rate: float = 1.0,
) -> LogisticModel:
    """Fit log-loss by batch gradient descent on one scalar feature.

    The feature is standardized internally for conditioning; the returned
    weight/bias are folded back to the raw scale.  Negative class is the
    lexicographically smaller label.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise DataError(f"logistic probe needs exactly 2 classes, got {classes}")
    y = np.array([classes.index(l) for l in labels], dtype=np.float64)
    if len(y) != len(x):
        raise ShapeError("one label per value required")

    mean = x.mean()
    std = x.std()
    if std == 0.0:
        std = 1.0
    z = (x - mean) / std

    w = b = 0.0
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(w * z + b)))
        grad_w = float(((p - y) * z).mean())
        grad_b = float((p - y).mean())
        if max(abs(grad_w), abs(grad_b)) <= tol:
            break
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b

    return LogisticModel(
        weight=w / std,
        bias=b - w * mean / std,
        feature_index=feature_index,
        class_labels=(classes[0], classes[1]),
    )


# ---------------------------------------------------------------------------
# gradient boosting


@dataclass(frozen=True)
class BoostConfig:
    n_estimators: int = 100
    learning_rate: float = 0.6
    max_depth: int = 2
    n_features: int = N_FEATURES_DEFAULT


@dataclass
class BoostedEnsemble:
    """Per-round, per-class regression trees with shrinkage."""

    class_labels: tuple
    config: BoostConfig
    trees: list = field(default_factory=list)  # rounds x classes, nested dicts
    train_losses: list = field(default_factory=list)

    def decision_scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.n_features:
            raise ShapeError(f"expected (n, {self.config.n_features}) features, got {x.shape}")
        scores = np.zeros((x.shape[0], len(self.class_labels)))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += self.config.learning_rate * _tree_predict(tree, x)
        return scores


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _best_split(x: np.ndarray, g: np.ndarray):
    """Exact scan for the SSE-minimizing split; returns (feature, threshold) or None."""
    n, d = x.shape
    total = g.sum()
    base = total * total / n
    # floor relative to the residual energy: rounding-level "gains" on
    # constant-residual leaves must not trigger splits on noise features
    best_gain = 1e-9 * float((g * g).sum()) + 1e-12
    best = None
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        prefix = np.cumsum(g[order])
        cut = np.flatnonzero(xs[:-1] < xs[1:])  # split between distinct values
        if cut.size == 0:
            continue
        n_left = cut + 1
        s_left = prefix[cut]
        gain = s_left**2 / n_left + (total - s_left) ** 2 / (n - n_left) - base
        i = int(np.argmax(gain))  # first max: lowest threshold wins ties
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            pos = cut[i]
            best = (j, float((xs[pos] + xs[pos + 1]) / 2.0))
    return best


def _fit_tree(x: np.ndarray, g: np.ndarray, max_depth: int) -> dict:
    if max_depth <= 0 or len(g) < 2:
        return {"value": float(g.mean())}
    split = _best_split(x, g)
    if split is None:
        return {"value": float(g.mean())}
    j, thr = split
    mask = x[:, j] <= thr
    return {
        "feature": j,
        "threshold": thr,
        "left": _fit_tree(x[mask], g[mask], max_depth - 1),
        "right": _fit_tree(x[~mask], g[~mask], max_depth - 1),
    }


def _tree_predict(tree: dict, x: np.ndarray) -> np.ndarray:
    if "value" in tree:
        return np.full(x.shape[0], tree["value"])
    out = np.empty(x.shape[0])
    mask = x[:, tree["feature"]] <= tree["threshold"]
    out[mask] = _tree_predict(tree["left"], x[mask])
    out[~mask] = _tree_predict(tree["right"], x[~mask])
    return out


def train_boosted(
    x: np.ndarray,
    labels: Sequence[str],
    config: BoostConfig = BoostConfig(),
) -> BoostedEnsemble:
    """Multi-class softmax gradient boosting on (n, n_features) data."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != config.n_features:
        raise ShapeError(f"expected (n, {config.n_features}) features, got {x.shape}")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DataError(f"need at least 2 classes, got {classes}")
    y = np.zeros((x.shape[0], len(classes)))
    index = {c: k for k, c in enumerate(classes)}
    for i, lab in enumerate(labels):
        y[i, index[lab]] = 1.0

    model = BoostedEnsemble(class_labels=classes, config=config)
    scores = np.zeros_like(y)
    model.train_losses.append(_deviance(scores, y))
    for _ in range(config.n_estimators):
        probs = _softmax(scores)
        round_trees = []
        for k in range(len(classes)):
            g = y[:, k] - probs[:, k]  # negative gradient of the log loss
            tree = _fit_tree(x, g, config.max_depth)
            scores[:, k] += config.learning_rate * _tree_predict(tree, x)
            round_trees.append(tree)
        model.trees.append(round_trees)
        model.train_losses.append(_deviance(scores, y))
    return model


def _deviance(scores: np.ndarray, y: np.ndarray) -> float:
    probs = _softmax(scores)
    return float(-(y * np.log(np.maximum(probs, 1e-300))).sum(axis=1).mean())


# ---------------------------------------------------------------------------
# prediction and evaluation


def predict(model, x: np.ndarray) -> tuple[list[str], np.ndarray]:
    """(labels, class-probability matrix); probabilities sum to 1 per row."""
    if isinstance(model, LogisticModel):
        x = np.asarray(x, dtype=np.float64)
        col = x[:, model.feature_index] if x.ndim == 2 else x.ravel()
        p = model.predict_proba(col)
        probs = np.column_stack([1.0 - p, p])
        classes = model.class_labels
    elif isinstance(model, BoostedEnsemble):
        probs = _softmax(model.decision_scores(x))
        classes = model.class_labels
    else:
        raise TypeError(f"unknown model type {type(model)!r}")
    winners = [classes[i] for i in probs.argmax(axis=1)]
    return winners, probs


@dataclass
class EvalReport:
    """Per-class precision/recall/F1 (percent), overall accuracy, confusion counts."""

    class_labels: tuple
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float
    confusion: np.ndarray  # rows true, cols predicted
    fold_count: int = 1

    @property
    def support(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.class_labels),
            "precision": [float(p) for p in self.precision],
            "recall": [float(r) for r in self.recall],
            "f1": [float(f) for f in self.f1],
            "accuracy": float(self.accuracy),
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "fold_count": self.fold_count,
        }

    def to_text(self) -> str:
        lines = [f"{'class':>12}  {'Prec':>6}  {'Rec':>6}  {'F1':>6}"]
        for k, name in enumerate(self.class_labels):
            lines.append(
                f"{name:>12}  {self.precision[k]:6.1f}  {self.recall[k]:6.1f}  {self.f1[k]:6.1f}"
            )
        lines.append(f"{'accuracy':>12}  {self.accuracy:6.1f}")
        return "\n".join(lines)


def evaluate_predictions(
    y_true: Sequence[str], y_pred: Sequence[str], class_labels: Sequence[str]
) -> EvalReport:
    if len(y_true) == 0:
        raise DataError("empty test set")
    classes = tuple(class_labels)
    index = {c: k for k, c in enumerate(classes)}
    unknown = set(y_true) - set(classes)
    if unknown:
        raise DataError(f"labels outside the model's class set: {sorted(unknown)}")
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[index[t], index[p]] += 1
    tp = np.diag(confusion).astype(np.float64)
    pred_totals = confusion.sum(axis=0).astype(np.float64)
    true_totals = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_totals > 0, tp / pred_totals, 0.0) * 100.0
        recall = np.where(true_totals > 0, tp / true_totals, 0.0) * 100.0
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    accuracy = 100.0 * tp.sum() / confusion.sum()
    return EvalReport(
        class_labels=classes,
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=float(accuracy),
        confusion=confusion,
    )


def evaluate(model, x: np.ndarray, labels: Sequence[str]) -> EvalReport:
    winners, _ = predict(model, x)
    return evaluate_predictions(labels, winners, _model_classes(model))


def _model_classes(model) -> tuple:
    return tuple(model.class_labels)


# ---------------------------------------------------------------------------
# stratified splitting


def stratified_fold_split(
    labels: Sequence[str], train_fraction: float, seed: int, fold: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint stratified train slices: fold f trains on slice f, tests on the rest.

    Each class's indices are shuffled once (seeded), then fold f takes the
    f-th contiguous block of round(n_class * train_fraction) indices as its
    training set.  Folds therefore have pairwise-disjoint training sets.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0, 1), got {train_fraction}")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    by_class: dict[str, np.ndarray] = {}
    for c in sorted(set(labels)):
        idx = np.flatnonzero(np.array([l == c for l in labels]))
        by_class[c] = rng.permutation(idx)
    train: list[np.ndarray] = []
    for c, idx in by_class.items():
        t = max(1, int(round(len(idx) * train_fraction)))
        start = fold * t
        if start + t > len(idx):
            raise DataError(
                f"fold {fold} exceeds class {c!r}: {len(idx)} samples cannot cover {fold + 1} folds of {t}"
            )
        train.append(idx[start : start + t])
    train_idx = np.sort(np.concatenate(train))
    mask = np.ones(len(labels), dtype=bool)
    mask[train_idx] = False
    return train_idx, np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# serialization


def _model_payload(model) -> dict:
    if isinstance(model, LogisticModel):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "logistic",
            "weight": model.weight,
            "bias": model.bias,
            "feature_index": model.feature_index,
            "classes": list(model.class_labels),
        }
    if isinstance(model, BoostedEnsemble):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "boosted",
            "classes": list(model.class_labels),
            "n_estimators": model.config.n_estimators,
            "learning_rate": model.config.learning_rate,
            "max_depth": model.config.max_depth,
            "n_features": model.config.n_features,
            "trees": model.trees,
            "train_losses": model.train_losses,
        }
    raise TypeError(f"unknown model type {type(model)!r}")


def dumps_model(model) -> str:
    return json.dumps(_model_payload(model), sort_keys=True, indent=1)


def save_model(path, model) -> None:
    Path(path).write_text(dumps_model(model) + "\n")


def load_model(path):
    data = json.loads(Path(path).read_text())
    if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
        raise FormatError(f"{path}: not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    if data["kind"] == "logistic":
        return LogisticModel(
            weight=data["weight"],
            bias=data["bias"],
            feature_index=data["feature_index"],
            class_labels=tuple(data["classes"]),
        )
    if data["kind"] == "boosted":
        config = BoostConfig(
            n_estimators=data["n_estimators"],
            learning_rate=data["learning_rate"],
            max_depth=data["max_depth"],
            n_features=data["n_features"],
        )
        model = BoostedEnsemble(class_labels=tuple(data["classes"]), config=config)
        model.trees = data["trees"]
        model.train_losses = data.get("train_losses", [])
        return model
    raise FormatError(f"{path}: unknown model kind {data['kind']!r}")
