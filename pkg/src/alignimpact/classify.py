"""Classifiers over change embeddings, and evaluation metrics.

Eight classifier families are implemented directly so that fitting is
fully deterministic and independent of row order: training rows are
sorted canonically (by feature bytes, then label) before any estimator
sees them, every random draw comes from the seed carried by each
ClassifierSpec, and all tie-breaking rules are fixed:

* a tied score, vote, or posterior always predicts affects-alignment;
* tree splits break ties toward the lowest feature index, then the
  lowest threshold;
* nearest-neighbor distance ties resolve in canonical row order.

Training data with only one class yields a constant model. Identical
feature rows carrying conflicting labels are refused, since no
deterministic decision rule can separate them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Protocol, Sequence

import numpy as np

from .changes import ImpactLabel, LabeledChange, Side
from .errors import (
    DegenerateData,
    DimensionMismatch,
    InvalidConfig,
    MalformedLine,
    OutOfVocabulary,
)
from .rdf import Term
from .seeding import derive_seed
from .walks import token_of


class ClassifierKind(str, Enum):
    LOGISTIC_REGRESSION = "lr"
    GAUSSIAN_NB = "gaussian-nb"
    KNN = "knn"
    CART = "cart"
    RANDOM_FOREST = "random-forest"
    SVM_LINEAR = "svm-linear"
    SVM_RBF = "svm-rbf"
    MLP = "mlp"


_DEFAULTS: dict[ClassifierKind, dict[str, object]] = {
    ClassifierKind.LOGISTIC_REGRESSION: {"lam": 1e-4, "tol": 1e-6, "max_iter": 10000},
    ClassifierKind.GAUSSIAN_NB: {"var_smoothing": 1e-9},
    ClassifierKind.KNN: {"k": 5},
    ClassifierKind.CART: {"max_depth": 20},
    ClassifierKind.RANDOM_FOREST: {"trees": 100, "max_depth": 20},
    ClassifierKind.SVM_LINEAR: {"lam": 1e-4, "epochs": 200},
    ClassifierKind.SVM_RBF: {"lam": 1e-4, "epochs": 200, "gamma": None},
    ClassifierKind.MLP: {"hidden": (500,), "batch": 32, "lr": 1e-3, "epochs": 200},
}


@dataclass(frozen=True, slots=True)
class ClassifierSpec:
    """One classifier kind plus hyperparameter overrides and a seed."""

    kind: ClassifierKind
    params: tuple[tuple[str, object], ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        allowed = _DEFAULTS[self.kind]
        for key, _ in self.params:
            if key not in allowed:
                raise InvalidConfig(
                    f"unknown hyperparameter {key!r} for {self.kind.value}; "
                    f"expected one of {sorted(allowed)}"
                )

    def resolved(self) -> dict[str, object]:
        merged = dict(_DEFAULTS[self.kind])
        merged.update(dict(self.params))
        if self.kind is ClassifierKind.MLP and isinstance(merged["hidden"], int):
            merged["hidden"] = (merged["hidden"],)
        return merged

    def label(self) -> str:
        if not self.params:
            return self.kind.value
        parts = ",".join(f"{k}={_format_param(v)}" for k, v in sorted(self.params))
        return f"{self.kind.value}:{parts}"


def _format_param(value: object) -> str:
    if isinstance(value, tuple):
        return "x".join(str(v) for v in value)
    return str(value)


def parse_classifier_spec(text: str, seed: int = 0) -> ClassifierSpec:
    """Parse ``kind`` or ``kind:key=value,...``; list values use ``x``."""
    kind_text, _, rest = text.partition(":")
    try:
        kind = ClassifierKind(kind_text.strip())
    except ValueError:
        known = ", ".join(k.value for k in ClassifierKind)
        raise InvalidConfig(f"unknown classifier {kind_text!r}; expected one of {known}") from None
    params: list[tuple[str, object]] = []
    if rest:
        for item in rest.split(","):
            key, sep, raw = item.partition("=")
            if not sep or not key.strip() or not raw.strip():
                raise InvalidConfig(f"bad hyperparameter {item!r}; expected key=value")
            params.append((key.strip(), _coerce_param(raw.strip())))
    return ClassifierSpec(kind, tuple(sorted(params)), seed)


def _coerce_param(raw: str):
    if "x" in raw:
        parts = raw.split("x")
        if all(p.lstrip("-").isdigit() for p in parts):
            return tuple(int(p) for p in parts)
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise InvalidConfig(f"cannot interpret hyperparameter value {raw!r}") from None


DEFAULT_CLASSIFIERS: tuple[ClassifierKind, ...] = (
    ClassifierKind.LOGISTIC_REGRESSION,
    ClassifierKind.GAUSSIAN_NB,
    ClassifierKind.KNN,
    ClassifierKind.CART,
    ClassifierKind.RANDOM_FOREST,
    ClassifierKind.SVM_RBF,
    ClassifierKind.SVM_LINEAR,
    ClassifierKind.MLP,
)


# ------------------------------------------------------------------ data

class VectorSource(Protocol):
    def vector(self, token: str) -> np.ndarray: ...


@dataclass(frozen=True, slots=True)
class Dataset:
    """Feature rows with binary labels (1 = affects-alignment)."""

    features: np.ndarray
    labels: np.ndarray
    keys: tuple[tuple[Term, Side], ...]

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise InvalidConfig("features must be a 2-d array")
        n = self.features.shape[0]
        if self.labels.shape != (n,) or len(self.keys) != n:
            raise InvalidConfig("features, labels, and keys must agree in length")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dims(self) -> int:
        return self.features.shape[1]

    def positives(self) -> int:
        return int(self.labels.sum())


def featurize(
    labeled: Iterable[LabeledChange], vectors: VectorSource, dims: int | None = None
) -> tuple[Dataset, int]:
    """Embed each labeled change by its resource vector.

    Changes whose resource has no vector are skipped; the count of
    skipped rows is returned alongside the dataset.
    """
    rows: list[np.ndarray] = []
    labels: list[int] = []
    keys: list[tuple[Term, Side]] = []
    skipped = 0
    for change in labeled:
        token = token_of(change.resource)
        try:
            vec = vectors.vector(token)
        except OutOfVocabulary:
            skipped += 1
            continue
        rows.append(np.asarray(vec, dtype=np.float64))
        labels.append(1 if change.label is ImpactLabel.AFFECTS else 0)
        keys.append((change.resource, change.side))
    if rows:
        features = np.vstack(rows)
    else:
        features = np.zeros((0, dims if dims is not None else 0), dtype=np.float64)
    return (
        Dataset(features, np.asarray(labels, dtype=np.int8), tuple(keys)),
        skipped,
    )


def _fmt17(x: float) -> str:
    return "%.17g" % x


def write_dataset_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["resource", "side", "label"] + [f"f{i}" for i in range(dataset.dims)]
    )
    for i, (term, side) in enumerate(dataset.keys):
        writer.writerow(
            [term.lexical, side.value, int(dataset.labels[i])]
            + [_fmt17(float(v)) for v in dataset.features[i]]
        )
    return buf.getvalue()


def read_dataset_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0][:3] != ["resource", "side", "label"]:
        raise MalformedLine(1, "expected header resource,side,label,f0,...")
    dims = len(rows[0]) - 3
    feats: list[list[float]] = []
    labels: list[int] = []
    keys: list[tuple[Term, Side]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dims + 3:
            raise MalformedLine(lineno, f"expected {dims + 3} fields, got {len(row)}")
        try:
            keys.append((Term.iri(row[0]), Side(row[1])))
            label = int(row[2])
            if label not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {label}")
            labels.append(label)
            feats.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise MalformedLine(lineno, str(exc)) from None
    features = (
        np.asarray(feats, dtype=np.float64) if feats else np.zeros((0, dims), np.float64)
    )
    return Dataset(features, np.asarray(labels, dtype=np.int8), tuple(keys))


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = [(X[i].tobytes(), int(y[i])) for i in range(X.shape[0])]
    return np.asarray(sorted(range(len(keys)), key=keys.__getitem__), dtype=np.int64)


def _check_degenerate(X: np.ndarray, y: np.ndarray) -> None:
    # only hopeless data is refused: every row identical yet labels conflict
    if np.unique(y).shape[0] < 2:
        return
    first = X[0].tobytes()
    if all(X[i].tobytes() == first for i in range(1, X.shape[0])):
        raise DegenerateData(
            "every feature row is identical but labels conflict; "
            "no classifier can separate them"
        )


# ---------------------------------------------------------------- models

class ConstantModel:
    """Returned when training data contains a single class."""

    __slots__ = ("dims", "label")

    def __init__(self, dims: int, label: int):
        self.dims = dims
        self.label = label

    def predict_one(self, x: np.ndarray) -> int:
        return self.label


class LogisticRegressionModel:
    __slots__ = ("dims", "weights", "bias")

    def __init__(self, weights: np.ndarray, bias: float):
        self.dims = weights.shape[0]
        self.weights = weights
        self.bias = bias

    def predict_one(self, x: np.ndarray) -> int:
        return 1 if float(x @ self.weights) + self.bias >= 0.0 else 0


def _power_iteration_lmax(M: np.ndarray, iters: int = 100) -> float:
    v = np.ones(M.shape[0], dtype=np.float64) / math.sqrt(M.shape[0])
    lmax = 0.0
    for _ in range(iters):
        w = M @ v
        norm = float(np.linalg.norm(w))
        if norm <= 1e-300:
            return 0.0
        v = w / norm
        lmax = float(v @ (M @ v))
    return lmax


def _fit_lr(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> LogisticRegressionModel:
    p = spec.resolved()
    lam, tol, max_iter = float(p["lam"]), float(p["tol"]), int(p["max_iter"])
    n, d = X.shape
    aug = np.hstack([X, np.ones((n, 1))])
    lmax = _power_iteration_lmax(aug.T @ aug / n)
    step = 1.0 / (0.25 * lmax + lam)
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    yf = y.astype(np.float64)
    for _ in range(max_iter):
        z = X @ w + b
        prob = 1.0 / (1.0 + np.exp(-z))
        err = prob - yf
        grad_w = X.T @ err / n + lam * w
        grad_b = float(err.mean())
        if math.sqrt(float(grad_w @ grad_w) + grad_b * grad_b) < tol:
            break
        w -= step * grad_w
        b -= step * grad_b
    return LogisticRegressionModel(w, b)


class GaussianNBModel:
    __slots__ = ("dims", "log_priors", "means", "variances")

    def __init__(self, log_priors, means, variances):
        self.dims = means.shape[1]
        self.log_priors = log_priors  # index 0: no-effect, 1: affects
        self.means = means
        self.variances = variances

    def _joint_log_likelihood(self, x: np.ndarray) -> np.ndarray:
        diff = x[None, :] - self.means
        return self.log_priors - 0.5 * np.sum(
            np.log(2.0 * math.pi * self.variances) + diff * diff / self.variances, axis=1
        )

    def predict_one(self, x: np.ndarray) -> int:
        jll = self._joint_log_likelihood(x)
        return 1 if jll[1] >= jll[0] else 0


def _fit_gaussian_nb(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> GaussianNBModel:
    smoothing = float(spec.resolved()["var_smoothing"])
    n = X.shape[0]
    floor = smoothing * float(X.var(axis=0).max(initial=0.0))
    means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.vstack([X[y == c].var(axis=0) for c in (0, 1)])
    variances = np.maximum(variances, floor)
    log_priors = np.array(
        [math.log((y == c).sum() / n) for c in (0, 1)], dtype=np.float64
    )
    return GaussianNBModel(log_priors, means, variances)


class KnnModel:
    __slots__ = ("dims", "X", "y", "k")

    def __init__(self, X: np.ndarray, y: np.ndarray, k: int):
        self.dims = X.shape[1]
        self.X = X
        self.y = y
        self.k = min(k, X.shape[0])

    def predict_one(self, x: np.ndarray) -> int:
        diff = self.X - x[None, :]
        d2 = np.einsum("ij,ij->i", diff, diff)
        order = np.argsort(d2, kind="stable")
        votes = int(self.y[order[: self.k]].sum())
        return 1 if 2 * votes >= self.k else 0


def _fit_knn(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> KnnModel:
    k = int(spec.resolved()["k"])
    if k < 1:
        raise InvalidConfig(f"k must be >= 1, got {k}")
    return KnnModel(X, y, k)


@dataclass(slots=True)
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    label: int = 1

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _leaf(y: np.ndarray) -> _TreeNode:
    return _TreeNode(label=1 if 2 * int(y.sum()) >= y.shape[0] else 0)


def _best_split(
    X: np.ndarray, y: np.ndarray, features: Sequence[int]
) -> tuple[int, float] | None:
    """Minimum weighted child Gini; ties favor low feature, low threshold."""
    n = X.shape[0]
    total_pos = int(y.sum())
    best: tuple[float, int, float] | None = None
    for f in features:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[order].astype(np.float64)
        cuts = np.nonzero(sv[:-1] < sv[1:])[0]
        if cuts.size == 0:
            continue
        cum_pos = np.cumsum(sy)
        n_l = (cuts + 1).astype(np.float64)
        n_r = n - n_l
        pos_l = cum_pos[cuts]
        pos_r = total_pos - pos_l
        weighted = 2.0 / n * (
            pos_l * (n_l - pos_l) / n_l + pos_r * (n_r - pos_r) / n_r
        )
        i = int(np.argmin(weighted))
        cand = float(weighted[i])
        if best is None or cand < best[0]:
            threshold = float((sv[cuts[i]] + sv[cuts[i] + 1]) / 2.0)
            best = (cand, f, threshold)
    if best is None:
        return None
    return best[1], best[2]


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int,
    rng: np.random.Generator | None = None,
    features_per_split: int | None = None,
) -> _TreeNode:
    n = y.shape[0]
    pos = int(y.sum())
    if n < 2 or pos == 0 or pos == n or depth >= max_depth:
        return _leaf(y)
    if rng is None:
        candidates: Sequence[int] = range(X.shape[1])
    else:
        candidates = np.sort(
            rng.choice(X.shape[1], size=features_per_split, replace=False)
        )
    split = _best_split(X, y, candidates)
    if split is None:
        return _leaf(y)
    f, threshold = split
    mask = X[:, f] <= threshold
    left = _grow_tree(X[mask], y[mask], depth + 1, max_depth, rng, features_per_split)
    right = _grow_tree(X[~mask], y[~mask], depth + 1, max_depth, rng, features_per_split)
    return _TreeNode(feature=f, threshold=threshold, left=left, right=right)


class CartModel:
    __slots__ = ("dims", "root")

    def __init__(self, dims: int, root: _TreeNode):
        self.dims = dims
        self.root = root

    def predict_one(self, x: np.ndarray) -> int:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.label


def _fit_cart(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> CartModel:
    max_depth = int(spec.resolved()["max_depth"])
    if max_depth < 1:
        raise InvalidConfig(f"max_depth must be >= 1, got {max_depth}")
    return CartModel(X.shape[1], _grow_tree(X, y, 0, max_depth))


class RandomForestModel:
    __slots__ = ("dims", "trees")

    def __init__(self, dims: int, trees: Sequence[_TreeNode]):
        self.dims = dims
        self.trees = tuple(trees)

    def predict_one(self, x: np.ndarray) -> int:
        votes = 0
        for node in self.trees:
            while not node.is_leaf:
                node = node.left if x[node.feature] <= node.threshold else node.right
            votes += node.label
        return 1 if 2 * votes >= len(self.trees) else 0


def _fit_random_forest(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> RandomForestModel:
    p = spec.resolved()
    n_trees, max_depth = int(p["trees"]), int(p["max_depth"])
    if n_trees < 1:
        raise InvalidConfig(f"trees must be >= 1, got {n_trees}")
    n, d = X.shape
    m = min(d, max(1, math.isqrt(d) + (0 if math.isqrt(d) ** 2 == d else 1)))
    trees: list[_TreeNode] = []
    for t in range(n_trees):
        rng = np.random.default_rng(derive_seed(spec.seed, "tree", t))
        rows = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[rows], y[rows], 0, max_depth, rng, m))
    return RandomForestModel(d, trees)


class LinearSvmModel:
    __slots__ = ("dims", "weights")

    def __init__(self, weights: np.ndarray):
        self.dims = weights.shape[0] - 1
        self.weights = weights  # last entry multiplies the constant 1

    def predict_one(self, x: np.ndarray) -> int:
        score = float(x @ self.weights[:-1]) + float(self.weights[-1])
        return 1 if score >= 0.0 else 0


def _fit_svm_linear(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> LinearSvmModel:
    p = spec.resolved()
    lam, epochs = float(p["lam"]), int(p["epochs"])
    n = X.shape[0]
    aug = np.hstack([X, np.ones((n, 1))])
    ysign = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(aug.shape[1], dtype=np.float64)
    for t in range(1, epochs + 1):
        margins = ysign * (aug @ w)
        viol = margins < 1.0
        grad = lam * w - (ysign[viol, None] * aug[viol]).sum(axis=0) / n
        w -= grad / (lam * t)
    return LinearSvmModel(w)


class RbfSvmModel:
    __slots__ = ("dims", "support", "coef", "gamma")

    def __init__(self, support: np.ndarray, coef: np.ndarray, gamma: float):
        self.dims = support.shape[1]
        self.support = support
        self.coef = coef
        self.gamma = gamma

    def decision(self, x: np.ndarray) -> float:
        diff = self.support - x[None, :]
        d2 = np.einsum("ij,ij->i", diff, diff)
        return float(self.coef @ np.exp(-self.gamma * d2))

    def predict_one(self, x: np.ndarray) -> int:
        return 1 if self.decision(x) >= 0.0 else 0


def _fit_svm_rbf(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> RbfSvmModel:
    p = spec.resolved()
    lam, epochs = float(p["lam"]), int(p["epochs"])
    gamma = p["gamma"]
    gamma = 1.0 / X.shape[1] if gamma is None else float(gamma)
    if gamma <= 0:
        raise InvalidConfig(f"gamma must be > 0, got {gamma}")
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    gram = np.exp(-gamma * (sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)))
    ysign = np.where(y == 1, 1.0, -1.0)
    alpha = np.zeros(n, dtype=np.float64)
    t = 0
    for _ in range(epochs):
        for i in range(n):
            t += 1
            score = float((alpha * ysign) @ gram[:, i]) / (lam * t)
            if ysign[i] * score < 1.0:
                alpha[i] += 1.0
    total = lam * t
    coef = alpha * ysign / total
    keep = alpha > 0
    return RbfSvmModel(X[keep], coef[keep], gamma)


class MlpModel:
    __slots__ = ("dims", "weights", "biases")

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        self.dims = weights[0].shape[0]
        self.weights = tuple(weights)
        self.biases = tuple(biases)

    def decision(self, X: np.ndarray) -> np.ndarray:
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1]).ravel()

    def predict_one(self, x: np.ndarray) -> int:
        return 1 if float(self.decision(x[None, :])[0]) >= 0.0 else 0


def _mlp_loss_and_grads(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean cross-entropy of the logistic output, with exact gradients."""
    n = X.shape[0]
    acts = [X]
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        a = np.maximum(a @ W + b, 0.0)
        acts.append(a)
    z = (a @ weights[-1] + biases[-1]).ravel()
    yf = y.astype(np.float64)
    loss = float(np.mean(np.logaddexp(0.0, z) - yf * z))
    prob = 1.0 / (1.0 + np.exp(-z))
    delta = ((prob - yf) / n)[:, None]
    grads_w: list[np.ndarray] = [None] * len(weights)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(biases)  # type: ignore[list-item]
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (acts[layer] > 0.0)
    return loss, grads_w, grads_b


def _fit_mlp(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec) -> MlpModel:
    p = spec.resolved()
    hidden = tuple(int(h) for h in p["hidden"])
    batch, lr, epochs = int(p["batch"]), float(p["lr"]), int(p["epochs"])
    if any(h < 1 for h in hidden) or not hidden:
        raise InvalidConfig(f"hidden layer sizes must be >= 1, got {hidden}")
    if batch < 1 or lr <= 0 or epochs < 1:
        raise InvalidConfig("mlp needs batch >= 1, lr > 0, epochs >= 1")
    rng = np.random.default_rng(derive_seed(spec.seed, "mlp"))
    sizes = (X.shape[1],) + hidden + (1,)
    weights = [
        rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, fan_out))
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    ]
    biases = [np.zeros(fan_out, dtype=np.float64) for fan_out in sizes[1:]]
    n = X.shape[0]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, batch):
            idx = perm[lo : lo + batch]
            _, gw, gb = _mlp_loss_and_grads(weights, biases, X[idx], y[idx])
            for layer in range(len(weights)):
                weights[layer] -= lr * gw[layer]
                biases[layer] -= lr * gb[layer]
    return MlpModel(weights, biases)


_FITTERS = {
    ClassifierKind.LOGISTIC_REGRESSION: _fit_lr,
    ClassifierKind.GAUSSIAN_NB: _fit_gaussian_nb,
    ClassifierKind.KNN: _fit_knn,
    ClassifierKind.CART: _fit_cart,
    ClassifierKind.RANDOM_FOREST: _fit_random_forest,
    ClassifierKind.SVM_LINEAR: _fit_svm_linear,
    ClassifierKind.SVM_RBF: _fit_svm_rbf,
    ClassifierKind.MLP: _fit_mlp,
}


def fit(dataset: Dataset, spec: ClassifierSpec):
    """Train one classifier on the dataset under deterministic rules."""
    if len(dataset) == 0:
        raise DegenerateData("cannot fit a classifier on an empty dataset")
    X = np.ascontiguousarray(dataset.features, dtype=np.float64)
    y = dataset.labels.astype(np.int8)
    order = _canonical_order(X, y)
    X = np.ascontiguousarray(X[order])
    y = y[order]
    _check_degenerate(X, y)
    classes = np.unique(y)
    if classes.shape[0] == 1:
        return ConstantModel(X.shape[1], int(classes[0]))
    return _FITTERS[spec.kind](X, y, spec)


def predict(model, x: np.ndarray) -> ImpactLabel:
    vec = np.asarray(x, dtype=np.float64)
    if vec.shape != (model.dims,):
        raise DimensionMismatch(
            f"expected feature vector of shape ({model.dims},), got {vec.shape}"
        )
    return ImpactLabel.AFFECTS if model.predict_one(vec) == 1 else ImpactLabel.NO_EFFECT


def predict_batch(model, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dims:
        raise DimensionMismatch(
            f"expected feature matrix with {model.dims} columns, got {X.shape}"
        )
    return np.asarray([model.predict_one(X[i]) for i in range(X.shape[0])], dtype=np.int8)


# --------------------------------------------------------------- metrics

@dataclass(frozen=True, slots=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, slots=True)
class Metrics:
    """Binary metrics with affects-alignment as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    macro_f1: float
    affects: ClassMetrics
    no_effect: ClassMetrics
    degenerate: bool

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        degenerate = False

        def ratio(num: int, den: int) -> float:
            nonlocal degenerate
            if den == 0:
                degenerate = True
                return 0.0
            return num / den

        def f1_of(prec: float, rec: float) -> float:
            nonlocal degenerate
            if prec + rec == 0.0:
                degenerate = True
                return 0.0
            return 2.0 * prec * rec / (prec + rec)

        pos = ClassMetrics(
            precision=(p := ratio(tp, tp + fp)),
            recall=(r := ratio(tp, tp + fn)),
            f1=f1_of(p, r),
            support=tp + fn,
        )
        neg = ClassMetrics(
            precision=(pn := ratio(tn, tn + fn)),
            recall=(rn := ratio(tn, tn + fp)),
            f1=f1_of(pn, rn),
            support=tn + fp,
        )
        accuracy = ratio(tp + tn, tp + fp + fn + tn)
        return cls(
            tp=tp, fp=fp, fn=fn, tn=tn,
            accuracy=accuracy,
            macro_f1=(pos.f1 + neg.f1) / 2.0,
            affects=pos,
            no_effect=neg,
            degenerate=degenerate,
        )

    @classmethod
    def from_predictions(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "Metrics":
        y_true = np.asarray(y_true).astype(np.int8)
        y_pred = np.asarray(y_pred).astype(np.int8)
        if y_true.shape != y_pred.shape:
            raise DimensionMismatch("labels and predictions differ in length")
        tp = int(((y_true == 1) & (y_pred == 1)).sum())
        fp = int(((y_true == 0) & (y_pred == 1)).sum())
        fn = int(((y_true == 1) & (y_pred == 0)).sum())
        tn = int(((y_true == 0) & (y_pred == 0)).sum())
        return cls.from_counts(tp, fp, fn, tn)


def evaluate(model, dataset: Dataset) -> Metrics:
    preds = predict_batch(model, dataset.features)
    return Metrics.from_predictions(dataset.labels, preds)


_METRICS_HEADER = [
    "classifier", "tp", "fp", "fn", "tn", "accuracy", "macro_f1",
    "affects_precision", "affects_recall", "affects_f1", "affects_support",
    "no_effect_precision", "no_effect_recall", "no_effect_f1", "no_effect_support",
    "degenerate",
]


def write_metrics_csv(rows: Sequence[tuple[str, Metrics]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_METRICS_HEADER)
    for name, m in rows:
        writer.writerow(
            [
                name, m.tp, m.fp, m.fn, m.tn,
                _fmt17(m.accuracy), _fmt17(m.macro_f1),
                _fmt17(m.affects.precision), _fmt17(m.affects.recall),
                _fmt17(m.affects.f1), m.affects.support,
                _fmt17(m.no_effect.precision), _fmt17(m.no_effect.recall),
                _fmt17(m.no_effect.f1), m.no_effect.support,
                "true" if m.degenerate else "false",
            ]
        )
    return buf.getvalue()


def read_metrics_csv(text: str) -> list[tuple[str, Metrics]]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != _METRICS_HEADER:
        raise MalformedLine(1, "unexpected metrics header")
    out: list[tuple[str, Metrics]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(_METRICS_HEADER):
            raise MalformedLine(lineno, f"expected {len(_METRICS_HEADER)} fields")
        try:
            recomputed = Metrics.from_counts(int(row[1]), int(row[2]), int(row[3]), int(row[4]))
        except ValueError as exc:
            raise MalformedLine(lineno, str(exc)) from None
        out.append((row[0], recomputed))
    return out


def format_metrics_table(rows: Sequence[tuple[str, Metrics]]) -> str:
    """Aligned text table, one classifier per row, both classes reported."""
    headers = [
        "classifier", "acc", "macroF1",
        "P(affects)", "R(affects)", "F1(affects)",
        "P(no-effect)", "R(no-effect)", "F1(no-effect)",
    ]
    body = [
        [
            name,
            f"{m.accuracy:.2f}", f"{m.macro_f1:.2f}",
            f"{m.affects.precision:.2f}", f"{m.affects.recall:.2f}", f"{m.affects.f1:.2f}",
            f"{m.no_effect.precision:.2f}", f"{m.no_effect.recall:.2f}", f"{m.no_effect.f1:.2f}",
        ]
        for name, m in rows
    ]
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(headers)]
    def fmt_row(cells):
        return "  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)).rstrip()
    lines = [fmt_row(headers), fmt_row(["-" * w for w in widths])]
    lines.extend(fmt_row(r) for r in body)
    return "\n".join(lines) + "\n"
