"""Walk-forward evaluation of every (stock, fold, grid cell) combination."""

from __future__ import annotations

import hashlib
import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from stocksim.backtest.grid import ExperimentGrid, GridCell
from stocksim.backtest.metrics import evaluate_classification, sharpe_ratio, trade_returns
from stocksim.errors import (
    ConfigError,
    InsufficientDataError,
    InsufficientSymbolsError,
    StockSimError,
)
from stocksim.market_data import FoldPlan, StockSeries, Universe, partition_folds
from stocksim.models.ensemble import TrainedModel, directions, fit_model, predict, with_seed
from stocksim.preprocess import FeatureMatrix, FittedProcessing, build_instances
from stocksim.similarity.rank import instance_weights, rank_top_k

logger = logging.getLogger(__name__)

ENRICHMENT_FAILED = "enrichment_failed"


@dataclass(frozen=True)
class EvaluationRow:
    stock: str
    fold: int
    feature_mode: str
    transform: str
    temporal: str
    predict_value: str
    horizon: int
    model: str
    mode: str
    similarity_fn: str
    similarity_value: str
    fixer: str
    k: int
    weighted: bool
    random_count: int
    seed: int
    accuracy: float = float("nan")
    f1_macro: float = float("nan")
    profit: float = float("nan")
    sharpe: float = float("nan")
    n_train: int = 0
    n_test: int = 0
    error_tag: str = ""

    @property
    def ok(self) -> bool:
        return self.error_tag in ("", ENRICHMENT_FAILED)


def _key_fields(stock: str, fold: int, cell: GridCell, seed: int) -> dict:
    p, m, e = cell.processing, cell.model, cell.enrichment
    sim = e.similarity
    return dict(
        stock=stock,
        fold=fold,
        feature_mode=p.feature_mode,
        transform=p.transform,
        temporal=p.temporal,
        predict_value=p.predict_value,
        horizon=p.horizon,
        model="rf" if m.kind == "random_forest" else "gbt",
        mode=m.mode,
        similarity_fn=sim.function if sim else e.kind,
        similarity_value=sim.value_field if sim else "",
        fixer=sim.fixer if sim else "",
        k=sim.k if sim else 0,
        weighted=e.weighted,
        random_count=e.random_count,
        seed=seed,
    )


def derive_seed(master: int, *parts) -> int:
    """Stable 32-bit seed from a master seed and any printable labels."""
    text = "|".join([str(int(master))] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "little")


def select_random_stocks(universe: Universe, target: str, count: int, seed: int) -> list[str]:
    """Uniform sample of ``count`` symbols other than ``target``, without replacement."""
    candidates = [s for s in universe.symbols if s != target]
    if count < 1:
        raise ConfigError("random peer count must be >= 1")
    if count > len(candidates):
        raise InsufficientSymbolsError(
            f"asked for {count} random peers, only {len(candidates)} available"
        )
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[i] for i in picked]


# ------------------------------------------------------------------ one cell


@dataclass
class _FoldContext:
    universe: Universe
    stock: str
    plan: FoldPlan
    master_seed: int
    rank_cache: dict = field(default_factory=dict)
    # cells that differ only in how peers were found often end up with the
    # same peer set; these caches make such cells cost a lookup
    instance_cache: dict = field(default_factory=dict)
    metric_cache: dict = field(default_factory=dict)
    fit_cache: OrderedDict = field(default_factory=OrderedDict)
    fit_cache_size: int = 64


@dataclass
class CellArtifacts:
    """Everything derived from the train range for one cell."""

    peers: list[str]
    weights: dict[str, float] | None
    train: FeatureMatrix
    test: FeatureMatrix
    fitted: FittedProcessing
    model: TrainedModel
    enrichment_failed: bool = False
    instance_key: tuple = ()


def _model_seed(ctx: _FoldContext, cell: GridCell) -> int:
    # enrichment is left out on purpose: baseline and enriched runs of the
    # same cell share random streams, so differences come from the data
    p, m = cell.processing, cell.model
    return derive_seed(ctx.master_seed, ctx.stock, ctx.plan.fold_index, p.feature_mode,
                       p.transform, p.temporal, p.predict_value, p.horizon, m.short_name)


def _peers_for(ctx: _FoldContext, cell: GridCell):
    e = cell.enrichment
    if e.kind == "none":
        return [], None, False
    if e.kind == "random":
        seed = derive_seed(ctx.master_seed, ctx.stock, ctx.plan.fold_index, "random", e.random_count)
        return select_random_stocks(ctx.universe, ctx.stock, e.random_count, seed), None, False
    ranked = rank_top_k(ctx.stock, ctx.universe, e.similarity, ctx.plan.train_range, ctx.rank_cache)
    if not ranked.peers:
        return [], None, True
    return ranked.symbols, (instance_weights(ranked) if e.weighted else None), False


def _fit_cached(ctx: _FoldContext, cell: GridCell, ikey, train: FeatureMatrix,
                fitted: FittedProcessing):
    p = cell.processing
    config = with_seed(cell.model, _model_seed(ctx, cell))
    key = (ikey, config)
    hit = ctx.fit_cache.get(key)
    if hit is not None:
        ctx.fit_cache.move_to_end(key)
        return hit
    y = train.target_class if config.classifier else train.target_value
    close_ref = fitted.target_normalizers.get(ctx.stock) if p.predict_value == "close" else None
    model = fit_model(train.X, y, config, train.weight, feature_names=train.feature_names,
                      predict_value=p.predict_value, close_ref=close_ref)
    ctx.fit_cache[key] = model
    if len(ctx.fit_cache) > ctx.fit_cache_size:
        ctx.fit_cache.popitem(last=False)
    return model


def train_cell(ctx: _FoldContext, cell: GridCell) -> CellArtifacts:
    peers, weights, failed = _peers_for(ctx, cell)
    # peer order does not matter to build_instances, so key on the sorted set
    key = (cell.processing, tuple(sorted(peers)),
           tuple(sorted(weights.items())) if weights else None)
    built = ctx.instance_cache.get(key)
    if built is None:
        built = build_instances(
            ctx.universe[ctx.stock], [ctx.universe[s] for s in peers], cell.processing,
            ctx.plan.train_range, ctx.plan.test_range, weights,
        )
        ctx.instance_cache[key] = built
    train, test, fitted = built
    model = _fit_cached(ctx, cell, key, train, fitted)
    return CellArtifacts(peers, weights, train, test, fitted, model, failed, key)


def _exit_closes(target: StockSeries, as_of: np.ndarray, horizon: int):
    pos = np.searchsorted(target.dates, as_of)
    return target.close[pos].astype(float), target.close[pos + horizon].astype(float)


def _metrics(ctx: _FoldContext, cell: GridCell, art: CellArtifacts) -> dict:
    test = art.test
    if len(test) < 2:
        raise InsufficientDataError(f"{ctx.stock}: only {len(test)} test instances")
    raw = predict(art.model, test.X)
    pred = raw if art.model.config.classifier else directions(art.model, test.close, raw)
    acc, f1 = evaluate_classification(pred, test.target_class)
    entry, exit_ = _exit_closes(ctx.universe[ctx.stock], test.as_of, cell.processing.horizon)
    rets = trade_returns(pred, entry, exit_)
    return dict(
        accuracy=acc,
        f1_macro=f1,
        profit=100.0 * float(rets.sum()),
        sharpe=sharpe_ratio(rets).value,
        n_train=len(art.train),
        n_test=len(test),
    )


def evaluate_cell(ctx: _FoldContext, cell: GridCell) -> dict:
    art = train_cell(ctx, cell)
    key = (art.instance_key, art.model.config)
    if key not in ctx.metric_cache:
        ctx.metric_cache[key] = _metrics(ctx, cell, art)
    out = dict(ctx.metric_cache[key])
    out["error_tag"] = ENRICHMENT_FAILED if art.enrichment_failed else ""
    return out


# ------------------------------------------------------------------ the grid


def _error_tag(exc: Exception) -> str:
    return getattr(exc, "tag", None) or type(exc).__name__


def run_stock_fold(universe: Universe, grid: ExperimentGrid, stock: str, fold: int) -> list[EvaluationRow]:
    cells = grid.cells()
    try:
        plan = partition_folds(universe[stock], grid.folds)[fold - 1]
    except Exception as exc:  # every cell of this fold fails the same way
        tag = _error_tag(exc)
        return [EvaluationRow(**_key_fields(stock, fold, c, grid.seed), error_tag=tag) for c in cells]
    ctx = _FoldContext(universe, stock, plan, grid.seed)
    rows = []
    for cell in cells:
        keys = _key_fields(stock, fold, cell, grid.seed)
        try:
            rows.append(EvaluationRow(**keys, **evaluate_cell(ctx, cell)))
        except Exception as exc:
            logger.debug("%s fold %d %s failed: %s", stock, fold, cell, exc)
            rows.append(EvaluationRow(**keys, error_tag=_error_tag(exc)))
    return rows


def _targets(universe: Universe, grid: ExperimentGrid) -> list[str]:
    stocks = list(grid.stocks) or list(universe.target_symbols) or universe.symbols
    missing = [s for s in stocks if s not in universe.symbols]
    if missing:
        raise ConfigError(f"target stocks not in data: {', '.join(missing)}")
    return stocks


def _run_task(args):
    return run_stock_fold(*args)


def run_grid(universe: Universe, grid: ExperimentGrid, jobs: int = 1, progress=None) -> list[EvaluationRow]:
    """One row per (target stock, fold, grid cell), error rows included,
    in report order."""
    if len(universe) == 0:
        raise ConfigError("empty universe")
    if len(grid) == 0:
        raise ConfigError("empty grid")
    tasks = [(universe, grid, s, f) for s in _targets(universe, grid) for f in range(1, grid.folds + 1)]
    rows: list[EvaluationRow] = []
    if jobs <= 1:
        for i, t in enumerate(tasks):
            rows.extend(_run_task(t))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, part in enumerate(pool.map(_run_task, tasks)):
                rows.extend(part)
                if progress:
                    progress(i + 1, len(tasks))
    return sort_rows(rows)


KEY_COLUMNS = (
    "stock", "fold", "feature_mode", "transform", "temporal", "predict_value", "horizon",
    "model", "mode", "similarity_fn", "similarity_value", "fixer", "k", "weighted",
    "random_count", "seed",
)


def sort_rows(rows) -> list[EvaluationRow]:
    return sorted(rows, key=lambda r: tuple(getattr(r, c) for c in KEY_COLUMNS))


# ------------------------------------------------------------------ leakage


def perturb_after(universe: Universe, cutoff, seed: int = 0) -> Universe:
    """Copy of ``universe`` with every bar after ``cutoff`` rescaled by a random
    factor (all four prices together, so bars stay valid) and volume shuffled."""
    rng = np.random.default_rng(seed)
    cutoff = np.datetime64(cutoff, "D")
    out = universe
    for s in universe:
        late = s.dates > cutoff
        if not late.any():
            continue
        f = np.ones(len(s))
        f[late] = rng.uniform(0.5, 1.5, late.sum())
        vol = s.volume.astype(float).copy()
        vol[late] = rng.permutation(vol[late]) * rng.uniform(0.5, 2.0)
        out = out.replace(StockSeries(s.symbol, s.dates, s.open * f, s.high * f, s.low * f,
                                      s.close * f, vol))
    return out


def check_leakage(universe: Universe, grid: ExperimentGrid, stock: str, fold: int,
                  cells=None, seed: int = 0) -> list[str]:
    """Rebuild train artifacts after perturbing every bar past the train range
    and list whatever changed (an empty list means no leakage)."""
    plan = partition_folds(universe[stock], grid.folds)[fold - 1]
    changed = perturb_after(universe, plan.train_range[1], seed)
    # one context per universe, so its caches are shared across cells
    a_ctx = _FoldContext(universe, stock, plan, grid.seed)
    b_ctx = _FoldContext(changed, stock, plan, grid.seed)
    problems = []
    same_model = {}  # fitted models are shared between cells; compare each pair once
    for cell in cells if cells is not None else grid.cells():
        label = f"{stock}/{fold}/{cell.processing.temporal}/{cell.enrichment.label}/{cell.model.short_name}"
        try:
            a = train_cell(a_ctx, cell)
        except StockSimError:
            continue
        b = train_cell(b_ctx, cell)
        if a.peers != b.peers:
            problems.append(f"{label}: peers differ")
        if a.weights != b.weights:
            problems.append(f"{label}: instance weights differ")
        for name in ("X", "target_value", "target_class", "weight"):
            if not np.array_equal(getattr(a.train, name), getattr(b.train, name), equal_nan=True):
                problems.append(f"{label}: train {name} differs")
        for sym, n in a.fitted.normalizers.items():
            m = b.fitted.normalizers.get(sym)
            if m is None or not (np.array_equal(n.mean, m.mean) and np.array_equal(n.std, m.std)):
                problems.append(f"{label}: normalizer of {sym} differs")
        if a.fitted.pca is not None and not np.array_equal(a.fitted.pca.components, b.fitted.pca.components):
            problems.append(f"{label}: PCA differs")
        pair = (id(a.model), id(b.model))
        if pair not in same_model:
            # the models are kept alive so their ids cannot be reused
            same_model[pair] = (a.model.dump() == b.model.dump(), a.model, b.model)
        if not same_model[pair][0]:
            problems.append(f"{label}: fitted model differs")
    return problems
