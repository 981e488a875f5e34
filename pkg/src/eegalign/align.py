"""Design matrices, cross-validated ridge regression, layer sweeps, retrieval."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import FEATURE_SHAPE, EmbeddingStack, FeatureTensor, ModelId
from .report import channel_weight_map

#: Default regularization grid: 10 log-spaced values spanning 1e-3 .. 1e6.
DEFAULT_ALPHAS: tuple[float, ...] = tuple(float(a) for a in np.logspace(-3, 6, 10))

STRATEGY_FAMILIES = ("single", "concat", "sum")


class SweepError(RuntimeError):
    """A sweep position failed; the message carries the configuration label."""


@dataclass(frozen=True)
class Strategy:
    """Layer aggregation rule: one layer, or the first ``position + 1`` of the order."""

    kind: str  # 'single' | 'concat' | 'sum'
    position: int

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_FAMILIES:
            raise ValueError(f"unknown strategy kind '{self.kind}'")
        if self.position < 0:
            raise ValueError("strategy position must be >= 0")


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    label: str


@dataclass(frozen=True)
class RidgeModel:
    """Multi-target ridge solution with mean-restoring intercept."""

    weights: np.ndarray  # (p, q)
    intercept: np.ndarray  # (q,)
    alpha: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.weights + self.intercept


@dataclass
class SweepResult:
    label: str
    train_r2: float
    test_r2: float
    train_corr: float
    test_corr: float
    alpha: float
    channel_scores: np.ndarray


@dataclass(frozen=True)
class CvRecord:
    alpha: float
    fold: int
    r2: float


@dataclass(frozen=True)
class CvTable:
    """Per-(fold, alpha) validation scores plus per-alpha mean and sd."""

    records: tuple[CvRecord, ...]
    summary: tuple[tuple[float, float, float], ...]  # (alpha, mean, sd)


@dataclass(frozen=True)
class SweepConfig:
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    folds: int = 5
    seed: int = 42
    ratio: float = 0.8
    method: str = "pca"
    positions: tuple[int, ...] | None = None


def split_train_test(n: int, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split into disjoint, exhaustive sorted index arrays."""
    if n < 5:
        raise ValueError(f"need at least 5 items to split, got {n}")
    if not 0 < ratio < 1:
        raise ValueError(f"split ratio must lie in (0, 1), got {ratio}")
    n_train = int(np.floor(ratio * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def flatten_tensors(tensors: Sequence[FeatureTensor]) -> np.ndarray:
    """Stack per-word feature tensors into a (n_words, 60*14*159) target matrix."""
    if len(tensors) == 0:
        raise ValueError("no tensors given")
    return np.stack([t.data.ravel() for t in tensors])


def default_order(
    stacks: Mapping[ModelId, Sequence[EmbeddingStack]],
) -> list[tuple[ModelId, int]]:
    """Sweep order: every wav2vec2 layer first, then every clip layer."""
    order: list[tuple[ModelId, int]] = []
    for model in (ModelId.WAV2VEC2, ModelId.CLIP):
        if model in stacks and len(stacks[model]) > 0:
            n_layers = stacks[model][0].layers.shape[0]
            order.extend((model, layer) for layer in range(n_layers))
    if not order:
        raise ValueError("no embedding stacks given")
    return order


def _stack_matrix(stacks: Sequence[EmbeddingStack]) -> np.ndarray:
    dims = {s.layers.shape for s in stacks}
    if len(dims) != 1:
        raise ValueError(f"inconsistent stack shapes across words: {sorted(dims)}")
    return np.stack([s.layers for s in stacks])  # (n_words, layers, k)


def _range_label(entries: Sequence[tuple[ModelId, int]]) -> str:
    parts: list[str] = []
    run_model, run_first, run_last = entries[0][0], entries[0][1], entries[0][1]
    for model, layer in entries[1:]:
        if model is run_model:
            run_last = layer
        else:
            parts.append(f"{run_model.value}_{run_first}-{run_last}")
            run_model, run_first, run_last = model, layer, layer
    parts.append(f"{run_model.value}_{run_first}-{run_last}")
    return "_".join(parts)


def build_design(
    stacks: Mapping[ModelId, Sequence[EmbeddingStack]],
    strategy: Strategy,
    order: Sequence[tuple[ModelId, int]],
    method: str = "pca",
) -> DesignMatrix:
    """Assemble the predictor matrix for one sweep position.

    'single' uses the one layer at ``order[position]``; 'concat' stacks the
    first position+1 layers side by side (10 columns per layer); 'sum' adds
    them elementwise, keeping 10 columns.
    """
    if strategy.position >= len(order):
        raise ValueError(
            f"strategy position {strategy.position} beyond order length {len(order)}"
        )
    matrices = {model: _stack_matrix(words) for model, words in stacks.items()}
    n_words = {m.shape[0] for m in matrices.values()}
    if len(n_words) != 1:
        raise ValueError(f"models disagree on word count: {sorted(n_words)}")

    def layer_scores(entry: tuple[ModelId, int]) -> np.ndarray:
        model, layer = entry
        if model not in matrices:
            raise ValueError(f"no stacks for model '{model.value}'")
        mat = matrices[model]
        if layer >= mat.shape[1]:
            raise ValueError(f"layer {layer} out of range for model '{model.value}'")
        return mat[:, layer, :]

    if strategy.kind == "single":
        model, layer = order[strategy.position]
        X = layer_scores(order[strategy.position])
        label = f"{model.value}_{layer}_{method}_single"
    else:
        entries = list(order[: strategy.position + 1])
        blocks = [layer_scores(e) for e in entries]
        if strategy.kind == "concat":
            X = np.hstack(blocks)
        else:
            X = blocks[0].copy()
            for b in blocks[1:]:
                X = X + b
        label = f"{_range_label(entries)}_{method}_{strategy.kind}"
    return DesignMatrix(X=X, label=label)


def ridge_fit(X: np.ndarray, Y: np.ndarray, alpha: float) -> RidgeModel:
    """Closed-form ridge on centered data via a Cholesky solve.

    Solves (X'X + alpha I) W = X'Y with columns of X and Y centered; the
    intercept restores the target means.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("X and Y must be 2-D")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row mismatch: X has {X.shape[0]}, Y has {Y.shape[0]}")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise ValueError("non-finite values in regression inputs")
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    xc = X - x_mean
    gram = xc.T @ xc
    gram[np.diag_indices_from(gram)] += alpha
    weights = cho_solve(cho_factor(gram, lower=True), xc.T @ (Y - y_mean))
    intercept = y_mean - x_mean @ weights
    return RidgeModel(weights=weights, intercept=intercept, alpha=float(alpha))


def _varying_targets(y_centered: np.ndarray, y_raw: np.ndarray) -> np.ndarray:
    """Mask of targets with real variance.

    Quantized features (e.g. zero-crossing rates) can make several words'
    values mathematically equal while their floats differ in the last ulp;
    the resulting rounding-dust variance (~1e-32 of the signal power) must
    count as zero or 1 - SSE/SST explodes. The cutoff sits many orders
    above ulp dust and many below any real variation.
    """
    sst = (y_centered**2).sum(axis=0)
    return sst > 1e-24 * (y_raw**2).sum(axis=0)


def regression_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float]:
    """Mean per-target R-squared and Pearson correlation.

    Targets whose true values have zero variance (up to floating-point
    rounding) are excluded from both means; a prediction column with zero
    variance contributes r = 0.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim == 1:
        y_true = y_true[:, None]
        y_pred = y_pred[:, None]
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    tc = y_true - y_true.mean(axis=0)
    pc = y_pred - y_pred.mean(axis=0)
    sst = (tc**2).sum(axis=0)
    valid = _varying_targets(tc, y_true)
    if not valid.any():
        raise ValueError("every target has zero variance")
    sse = ((y_true - y_pred) ** 2).sum(axis=0)[valid]
    r2 = float(np.mean(1.0 - sse / sst[valid]))
    pred_ss = (pc**2).sum(axis=0)[valid]
    cov = (tc * pc).sum(axis=0)[valid]
    denom = np.sqrt(sst[valid] * pred_ss)
    corr_terms = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    return r2, float(np.mean(corr_terms))


def score(model: RidgeModel, X: np.ndarray, Y: np.ndarray) -> tuple[float, float]:
    """Evaluate a fitted model: mean per-target R² and correlation on (X, Y)."""
    return regression_metrics(Y, model.predict(X))


def _fold_slices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, folds)
    for part in parts:
        if part.size < 2:
            raise ValueError(
                f"{folds}-fold split of {n} rows leaves a fold with {part.size} row(s)"
            )
    return parts


def ridge_cv(
    X: np.ndarray,
    Y: np.ndarray,
    alphas: Sequence[float],
    folds: int,
    seed: int,
) -> tuple[RidgeModel, float, CvTable]:
    """Pick alpha by k-fold validation R² on the given rows, then refit on all.

    Alphas are scored by mean per-target R² averaged over folds; ties take
    the smallest alpha. Each fold reuses one eigendecomposition of its Gram
    matrix across the grid, which matches a per-alpha refit to rounding.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if len(alphas) == 0:
        raise ValueError("alpha grid is empty")
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    grid = sorted(float(a) for a in alphas)
    if any(a <= 0 for a in grid):
        raise ValueError("all alphas must be positive")
    n = X.shape[0]
    parts = _fold_slices(n, folds, seed)

    fold_scores = np.zeros((folds, len(grid)))
    records: list[CvRecord] = []
    for fold, val_idx in enumerate(parts):
        train_idx = np.concatenate([p for j, p in enumerate(parts) if j != fold])
        xt, yt = X[train_idx], Y[train_idx]
        x_mean = xt.mean(axis=0)
        y_mean = yt.mean(axis=0)
        xc = xt - x_mean
        lam, q = np.linalg.eigh(xc.T @ xc)
        lam = np.clip(lam, 0.0, None)
        b = (xc @ q).T @ (yt - y_mean)  # (p, q_targets), cheap association for n << p
        a_val = (X[val_idx] - x_mean) @ q
        y_val = Y[val_idx]
        vc = y_val - y_val.mean(axis=0)
        sst = (vc**2).sum(axis=0)
        valid = _varying_targets(vc, y_val)
        if not valid.any():
            raise ValueError(f"fold {fold}: every validation target has zero variance")
        for ai, alpha in enumerate(grid):
            preds = (a_val / (lam + alpha)) @ b + y_mean
            sse = ((y_val - preds) ** 2).sum(axis=0)[valid]
            r2 = float(np.mean(1.0 - sse / sst[valid]))
            fold_scores[fold, ai] = r2
            records.append(CvRecord(alpha=alpha, fold=fold, r2=r2))

    means = fold_scores.mean(axis=0)
    sds = fold_scores.std(axis=0)
    best = int(np.argmax(means))  # argmax keeps the first (smallest) alpha on ties
    summary = tuple(
        (grid[ai], float(means[ai]), float(sds[ai])) for ai in range(len(grid))
    )
    model = ridge_fit(X, Y, grid[best])
    return model, grid[best], CvTable(records=tuple(records), summary=summary)


def layer_sweep(
    stacks: Mapping[ModelId, Sequence[EmbeddingStack]],
    tensors: Sequence[FeatureTensor],
    family: str,
    cfg: SweepConfig = SweepConfig(),
) -> list[SweepResult]:
    """Run one aggregation family across every sweep position.

    For each position the design is built, alpha is chosen by CV on the
    training words only, and the refit model is scored on the train and the
    held-out split. Results keep sweep order.
    """
    if family not in STRATEGY_FAMILIES:
        raise ValueError(f"unknown strategy family '{family}'")
    order = default_order(stacks)
    Y = flatten_tensors(tensors)
    n = Y.shape[0]
    first_model = next(iter(stacks.values()))
    if len(first_model) != n:
        raise ValueError(
            f"stacks cover {len(first_model)} words but tensors cover {n}"
        )
    train_idx, test_idx = split_train_test(n, cfg.ratio, cfg.seed)
    positions = cfg.positions if cfg.positions is not None else tuple(range(len(order)))

    results: list[SweepResult] = []
    for pos in positions:
        try:
            design = build_design(stacks, Strategy(family, pos), order, method=cfg.method)
        except Exception as exc:
            raise SweepError(f"sweep position {pos} ({family}) failed: {exc}") from exc
        try:
            model, alpha, _ = ridge_cv(
                design.X[train_idx], Y[train_idx], cfg.alphas, cfg.folds, cfg.seed
            )
            train_r2, train_corr = score(model, design.X[train_idx], Y[train_idx])
            test_r2, test_corr = score(model, design.X[test_idx], Y[test_idx])
            channel_scores = channel_weight_map(model, FEATURE_SHAPE)
        except SweepError:
            raise
        except Exception as exc:
            raise SweepError(f"sweep position '{design.label}' failed: {exc}") from exc
        results.append(
            SweepResult(
                label=design.label,
                train_r2=train_r2,
                test_r2=test_r2,
                train_corr=train_corr,
                test_corr=test_corr,
                alpha=alpha,
                channel_scores=channel_scores,
            )
        )
    return results


def best_result(results: Sequence[SweepResult]) -> SweepResult:
    """Best configuration: max test R², ties broken by test correlation."""
    if len(results) == 0:
        raise ValueError("no results")
    return max(results, key=lambda r: (r.test_r2, r.test_corr))


@dataclass(frozen=True)
class RetrievalResult:
    rank: int
    hit: bool


def contrastive_retrieval(
    model: RidgeModel,
    X_candidates: np.ndarray,
    y_true: np.ndarray,
    true_index: int,
    k: int,
) -> RetrievalResult:
    """Rank candidate stimuli by cosine similarity of predicted vs observed features.

    Returns the 1-based rank of the true candidate (candidates with strictly
    greater similarity count ahead of it) and whether it lands in the top k.
    """
    X_candidates = np.asarray(X_candidates, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    m = X_candidates.shape[0]
    if m < 2:
        raise ValueError("need at least 2 candidates")
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in 1..{m}, got {k}")
    if not 0 <= true_index < m:
        raise ValueError(f"true_index must lie in 0..{m - 1}")
    preds = model.predict(X_candidates)
    pred_norms = np.linalg.norm(preds, axis=1)
    y_norm = np.linalg.norm(y_true)
    if y_norm == 0:
        raise ValueError("observed feature vector has zero norm")
    if np.any(pred_norms == 0):
        raise ValueError("a candidate prediction has zero norm")
    sims = (preds @ y_true) / (pred_norms * y_norm)
    rank = int(1 + np.sum(sims > sims[true_index]))
    return RetrievalResult(rank=rank, hit=rank <= k)
