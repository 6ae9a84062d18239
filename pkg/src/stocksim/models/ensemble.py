"""Random forest and gradient boosted trees, classifier and regressor flavours."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from stocksim.errors import ConfigError
from stocksim.models.tree import Tree, fit_tree, presort
from stocksim.preprocess import DECREASE, INCREASE, Instance, Normalizer

KINDS = ("random_forest", "gradient_boosting")
MODES = ("classifier", "regressor")


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble settings. ``None`` fields take the per-kind default:

    =====================  =============  =================
    field                  random forest  gradient boosting
    =====================  =============  =================
    n_trees                100            100
    max_depth              unlimited      3
    min_samples_leaf       2              1
    max_features           sqrt(p)        p
    =====================  =============  =================
    """

    kind: str = "random_forest"
    mode: str = "classifier"
    n_trees: int = 100
    learning_rate: float = 0.02
    max_depth: int | None = None
    min_samples_leaf: int | None = None
    max_features: str | int | None = None
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown model mode {self.mode!r}")
        if self.n_trees < 0 or (self.kind == "random_forest" and self.n_trees < 1):
            raise ConfigError("tree count must be positive")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning rate must be in (0, 1]")

    @property
    def classifier(self) -> bool:
        return self.mode == "classifier"

    @property
    def short_name(self) -> str:
        return ("rf" if self.kind == "random_forest" else "gbt") + "_" + self.mode

    def resolved_depth(self) -> int | None:
        if self.max_depth is not None:
            return self.max_depth if self.max_depth >= 0 else None
        return None if self.kind == "random_forest" else 3

    def resolved_min_leaf(self) -> int:
        if self.min_samples_leaf is not None:
            return self.min_samples_leaf
        return 2 if self.kind == "random_forest" else 1

    def resolved_max_features(self, p: int) -> int:
        mf = self.max_features
        if mf is None:
            mf = "sqrt" if self.kind == "random_forest" else "all"
        if mf == "sqrt":
            return max(1, int(np.sqrt(p)))
        if mf == "all":
            return p
        return max(1, min(int(mf), p))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    config: EnsembleConfig
    trees: tuple[Tree, ...]
    n_features: int
    base_score: float = 0.0
    feature_names: tuple[str, ...] = ()
    predict_value: str = "proc"
    close_ref: Normalizer | None = None
    loss_curve: tuple[float, ...] = field(default=())

    def dump(self) -> str:
        blocks = [f"# {self.config.short_name} trees={len(self.trees)} base={self.base_score!r}"]
        for i, t in enumerate(self.trees):
            blocks.append(f"tree {i}\n{t.dump()}")
        return "\n".join(blocks)


def _tree_seeds(seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(max(n, 1), dtype=np.uint32)[:n]


def _check(X, y, w):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    return X, y, w


def fit_random_forest(X, y, config: EnsembleConfig, weights=None, **meta) -> TrainedModel:
    """Bagged trees; each tree sees a weighted bootstrap resample and
    ``max_features`` candidate features per split."""
    if config.kind != "random_forest":
        raise ConfigError("config is not a random forest")
    X, y, w = _check(X, y, weights)
    n, p = X.shape
    mf = config.resolved_max_features(p)
    rng = np.random.default_rng(config.seed)
    prob = w / w.sum()
    seeds = _tree_seeds(config.seed, config.n_trees)
    trees = []
    for s in seeds:
        counts = np.bincount(rng.choice(n, size=n, p=prob), minlength=n)
        rows = np.flatnonzero(counts)
        trees.append(
            fit_tree(X[rows], y[rows], counts[rows].astype(float), config.classifier,
                     config.resolved_depth(), config.resolved_min_leaf(), mf, int(s))
        )
    return TrainedModel(config, tuple(trees), p, **meta)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35, 35)))


def _weighted_sse(y, f, w) -> float:
    r = y - f
    return float(np.sum(w * r * r))


def fit_gradient_boosting(X, y, config: EnsembleConfig, weights=None, **meta) -> TrainedModel:
    """Stagewise boosting of regression trees.

    Regression fits the residuals directly; classification boosts log-odds
    with a Newton step per leaf.
    """
    if config.kind != "gradient_boosting":
        raise ConfigError("config is not gradient boosting")
    X, y, w = _check(X, y, weights)
    n, p = X.shape
    lr = config.learning_rate
    depth, leaf = config.resolved_depth(), config.resolved_min_leaf()
    mf = config.resolved_max_features(p)
    seeds = _tree_seeds(config.seed, config.n_trees)
    order = presort(X)
    trees = []
    if config.classifier:
        pos = np.clip(np.sum(w * y) / w.sum(), 1e-6, 1 - 1e-6)
        base = float(np.log(pos / (1 - pos)))
        F = np.full(n, base)
        losses = []
        for s in seeds:
            prob = _sigmoid(F)
            resid = y - prob
            tree = fit_tree(X, resid, w, False, depth, leaf, mf, int(s), order)
            leaves = tree.apply(X)
            num = np.bincount(leaves, weights=w * resid, minlength=tree.n_nodes)
            den = np.bincount(leaves, weights=w * prob * (1 - prob), minlength=tree.n_nodes)
            vals = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
            tree = tree.with_values(vals)
            F = F + lr * vals[leaves]
            trees.append(tree)
            pr = np.clip(_sigmoid(F), 1e-12, 1 - 1e-12)
            losses.append(float(-np.sum(w * (y * np.log(pr) + (1 - y) * np.log(1 - pr)))))
    else:
        base = float(np.sum(w * y) / w.sum())
        F = np.full(n, base)
        losses = [_weighted_sse(y, F, w)]
        for s in seeds:
            tree = fit_tree(X, y - F, w, False, depth, leaf, mf, int(s), order)
            F = F + lr * tree.predict(X)
            trees.append(tree)
            losses.append(_weighted_sse(y, F, w))
    return TrainedModel(config, tuple(trees), p, base, loss_curve=tuple(losses), **meta)


def fit_model(X, y, config: EnsembleConfig, weights=None, **meta) -> TrainedModel:
    if config.kind == "random_forest":
        return fit_random_forest(X, y, config, weights, **meta)
    return fit_gradient_boosting(X, y, config, weights, **meta)


def raw_score(m: TrainedModel, X) -> np.ndarray:
    """Regressor output, class-1 vote share (forest) or log-odds (boosting)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got shape {X.shape}")
    if m.config.kind == "random_forest":
        preds = np.array([t.predict(X) for t in m.trees])
        if m.config.classifier:
            return (preds > 0.5).mean(axis=0)
        return preds.mean(axis=0)
    F = np.full(X.shape[0], m.base_score)
    for t in m.trees:
        F += m.config.learning_rate * t.predict(X)
    return F


def predict(m: TrainedModel, X) -> np.ndarray:
    """Numeric predictions for regressors; INCREASE/DECREASE for classifiers.

    Forest votes that split evenly, and probabilities at the threshold, map
    to DECREASE.
    """
    score = raw_score(m, X)
    if not m.config.classifier:
        return score
    if m.config.kind == "gradient_boosting":
        score = _sigmoid(score)
        return np.where(score > m.config.threshold, INCREASE, DECREASE)
    return np.where(score > 0.5, INCREASE, DECREASE)


def direction_from_prediction(m: TrainedModel, instance: Instance, predicted: float) -> int:
    return int(directions(m, np.array([instance.close]), np.array([predicted]))[0])


def directions(m: TrainedModel, current_close, predicted) -> np.ndarray:
    """Turn regressor outputs into INCREASE/DECREASE (a flat forecast is DECREASE)."""
    predicted = np.asarray(predicted, dtype=float)
    if m.predict_value == "proc":
        return np.where(predicted > 0, INCREASE, DECREASE)
    if m.predict_value == "close":
        if m.close_ref is None:
            raise ConfigError("close-price model has no close normalizer")
        level = m.close_ref.invert(predicted)
        return np.where(level > np.asarray(current_close, dtype=float), INCREASE, DECREASE)
    raise ConfigError(f"unknown predict value {m.predict_value!r}")


def with_seed(config: EnsembleConfig, seed: int) -> EnsembleConfig:
    return replace(config, seed=int(seed))
