"""Experiment configuration tree and its plain-text config file.

A config file holds ``key = value[, value ...]`` lines; ``#`` starts a
comment. Every key is optional and unknown keys are rejected.

========================  ==========================================  =========================
key                       values                                      default
========================  ==========================================  =========================
stocks                    ticker list (empty: the universe targets)   (empty)
folds                     int                                         5
feature_mode              univariate, multivariate                    univariate
transform                 raw, sax, pca                               sax
temporal                  timepoint, window<N>                        timepoint
predict_value             close, proc                                 proc
horizon                   ints (trading days)                         1
model                     rf_classifier, rf_regressor,                gbt_regressor
                          gbt_classifier, gbt_regressor
similarity_fn             none, euclidean, pearson, dtw, mindist,     none
                          cointegration
similarity_value          close, proc                                 proc
fixer                     time_join, delayed_time_join, padding, pip  time_join
k                         ints                                        10
weighted                  false, true (only used with euclidean)      false
random_count              ints (random-peer baselines)                (none)
delay                     int                                         1
pip_fraction              float                                       0.1
alphabet_size             int                                         8
rf_trees                  int                                         100
rf_max_depth              int or none                                 none
rf_min_leaf               int                                         2
gbt_stages                int                                         100
gbt_learning_rate         float                                       0.02
gbt_depth                 int                                         3
classifier_threshold      float                                       0.5
seed                      int                                         0
========================  ==========================================  =========================

``window`` temporal modes are skipped for multivariate features.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from stocksim.errors import ConfigError
from stocksim.models.ensemble import EnsembleConfig
from stocksim.preprocess import ProcessingConfig, parse_temporal
from stocksim.similarity.rank import SimilarityConfig

MODEL_TOKENS = {
    "rf_classifier": ("random_forest", "classifier"),
    "rf_regressor": ("random_forest", "regressor"),
    "gbt_classifier": ("gradient_boosting", "classifier"),
    "gbt_regressor": ("gradient_boosting", "regressor"),
}

DEFAULTS = {
    "stocks": "",
    "folds": "5",
    "feature_mode": "univariate",
    "transform": "sax",
    "temporal": "timepoint",
    "predict_value": "proc",
    "horizon": "1",
    "model": "gbt_regressor",
    "similarity_fn": "none",
    "similarity_value": "proc",
    "fixer": "time_join",
    "k": "10",
    "weighted": "false",
    "random_count": "",
    "delay": "1",
    "pip_fraction": "0.1",
    "alphabet_size": "8",
    "rf_trees": "100",
    "rf_max_depth": "none",
    "rf_min_leaf": "2",
    "gbt_stages": "100",
    "gbt_learning_rate": "0.02",
    "gbt_depth": "3",
    "classifier_threshold": "0.5",
    "seed": "0",
}


@dataclass(frozen=True)
class Enrichment:
    """How a target's training data is extended: not at all, with ranked
    similar stocks, or with a random sample."""

    kind: str = "none"
    similarity: SimilarityConfig | None = None
    weighted: bool = False
    random_count: int = 0

    @property
    def label(self) -> str:
        if self.kind == "similar":
            s = self.similarity
            w = "_w" if self.weighted else ""
            return f"{s.function}_{s.value_field}_{s.fixer}_k{s.k}{w}"
        if self.kind == "random":
            return f"random{self.random_count}"
        return "none"


@dataclass(frozen=True)
class GridCell:
    processing: ProcessingConfig
    model: EnsembleConfig
    enrichment: Enrichment


@dataclass(frozen=True)
class ExperimentGrid:
    processing: tuple[ProcessingConfig, ...]
    enrichments: tuple[Enrichment, ...]
    models: tuple[EnsembleConfig, ...]
    folds: int = 5
    stocks: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if not (self.processing and self.enrichments and self.models):
            raise ConfigError("experiment grid is empty")
        if self.folds < 1:
            raise ConfigError("folds must be >= 1")

    def cells(self) -> list[GridCell]:
        return [
            GridCell(p, m, e)
            for p, e, m in itertools.product(self.processing, self.enrichments, self.models)
        ]

    def __len__(self) -> int:
        return len(self.processing) * len(self.enrichments) * len(self.models)


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _ints(value: str, key: str) -> list[int]:
    try:
        return [int(v) for v in _split(value)]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected integers, got {value!r}") from exc


def _bools(value: str, key: str) -> list[bool]:
    out = []
    for v in _split(value):
        if v.lower() in ("true", "yes", "1"):
            out.append(True)
        elif v.lower() in ("false", "no", "0"):
            out.append(False)
        else:
            raise ConfigError(f"{key}: expected true/false, got {v!r}")
    return out


def _one(value: str, key: str, cast):
    items = _split(value)
    if len(items) != 1:
        raise ConfigError(f"{key}: expected a single value")
    try:
        return cast(items[0])
    except ValueError as exc:
        raise ConfigError(f"{key}: bad value {items[0]!r}") from exc


def grid_from_mapping(values: dict[str, str]) -> ExperimentGrid:
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    v = {**DEFAULTS, **values}
    alphabet = _one(v["alphabet_size"], "alphabet_size", int)

    processing = []
    for fm, tr, tm, pv, h in itertools.product(
        _split(v["feature_mode"]),
        _split(v["transform"]),
        _split(v["temporal"]),
        _split(v["predict_value"]),
        _ints(v["horizon"], "horizon"),
    ):
        window = parse_temporal(tm)
        if window is not None and fm != "univariate":
            continue
        processing.append(ProcessingConfig(fm, tr, window, pv, h, alphabet))

    delay = _one(v["delay"], "delay", int)
    pip_fraction = _one(v["pip_fraction"], "pip_fraction", float)
    weighted_values = sorted(set(_bools(v["weighted"], "weighted")))
    enrichments = []
    for fn in _split(v["similarity_fn"]):
        if fn == "none":
            enrichments.append(Enrichment())
            continue
        weights = weighted_values if fn == "euclidean" else [False]
        for val, fixer, k, weighted in itertools.product(
            _split(v["similarity_value"]), _split(v["fixer"]), _ints(v["k"], "k"),
            weights,
        ):
            sim = SimilarityConfig(fn, val, fixer, k, delay, pip_fraction, alphabet)
            enrichments.append(Enrichment("similar", sim, weighted))
    for count in _ints(v["random_count"], "random_count"):
        enrichments.append(Enrichment("random", random_count=count))

    depth_token = _one(v["rf_max_depth"], "rf_max_depth", str)
    rf_depth = None if depth_token.lower() == "none" else int(depth_token)
    threshold = _one(v["classifier_threshold"], "classifier_threshold", float)
    models = []
    for token in _split(v["model"]):
        if token not in MODEL_TOKENS:
            raise ConfigError(f"unknown model {token!r}")
        kind, mode = MODEL_TOKENS[token]
        if kind == "random_forest":
            models.append(EnsembleConfig(
                kind, mode, _one(v["rf_trees"], "rf_trees", int), max_depth=rf_depth,
                min_samples_leaf=_one(v["rf_min_leaf"], "rf_min_leaf", int), threshold=threshold,
            ))
        else:
            models.append(EnsembleConfig(
                kind, mode, _one(v["gbt_stages"], "gbt_stages", int),
                learning_rate=_one(v["gbt_learning_rate"], "gbt_learning_rate", float),
                max_depth=_one(v["gbt_depth"], "gbt_depth", int), threshold=threshold,
            ))

    return ExperimentGrid(
        tuple(processing),
        tuple(enrichments),
        tuple(models),
        folds=_one(v["folds"], "folds", int),
        stocks=tuple(_split(v["stocks"])),
        seed=_one(v["seed"], "seed", int),
    )


def parse_config_text(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True,
    )
    try:
        parser.read_string("[grid]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return dict(parser["grid"])


def load_grid(path) -> ExperimentGrid:
    return grid_from_mapping(parse_config_text(Path(path).read_text()))
