"""PCA and FastICA reduction of embedding layers to low-dimensional codes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    """FastICA failed to converge within the iteration budget."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class PcaModel:
    """Centered SVD principal components.

    ``components`` rows are orthonormal; the sign convention makes the
    largest-magnitude coordinate of each component positive. A layer with
    zero variance yields an all-zero model with ``degenerate`` set instead
    of an error, so sweeps over every layer run to completion.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray
    degenerate: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True)
class IcaModel:
    """Whitening plus orthonormal unmixing learned by FastICA."""

    whitening: np.ndarray  # (k, D): PCA whitening of centered data
    unmixing: np.ndarray  # (k, k): rotation of whitened data
    mean: np.ndarray
    iterations: int = 0

    @property
    def n_components(self) -> int:
        return self.unmixing.shape[0]

    @property
    def dim(self) -> int:
        return self.whitening.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    lead = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), lead])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(X: np.ndarray, k: int) -> PcaModel:
    """Fit a top-``k`` PCA to rows of ``X`` via SVD of the centered matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (observations, dimensions)")
    n, d = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(n, d):
        raise ValueError(f"k={k} exceeds min(n_observations, dim) = {min(n, d)}")
    if n < k:
        raise ValueError(f"need at least k={k} observations, got {n}")
    mean = X.mean(axis=0)
    centered = X - mean
    total_var = float((centered**2).sum()) / (n - 1) if n > 1 else 0.0
    if total_var == 0.0:
        return PcaModel(
            mean=mean,
            components=np.zeros((k, d)),
            explained_variance_ratio=np.zeros(k),
            degenerate=True,
        )
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    components = _fix_signs(vt[:k].copy())
    ratios = (svals[:k] ** 2 / (n - 1)) / total_var
    return PcaModel(mean=mean, components=components, explained_variance_ratio=ratios)


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of ``X`` onto the principal components."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(
            f"expected (n, {model.dim}) input, got {X.shape}"
        )
    return (X - model.mean) @ model.components.T


def _symmetric_decorrelation(w: np.ndarray) -> np.ndarray:
    # W <- (W W^T)^(-1/2) W
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.clip(vals, 1e-12, None)
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T @ w


def ica_fit(
    X: np.ndarray,
    k: int,
    seed: int,
    tol: float = 1e-4,
    max_iter: int = 500,
) -> IcaModel:
    """FastICA with a logcosh contrast and symmetric decorrelation.

    The data are PCA-whitened to ``k`` dimensions first; the unmixing
    rotation starts from a seeded random orthonormal matrix. Raises
    ConvergenceError (carrying the iteration count) if the rotation has
    not stabilized within ``max_iter`` sweeps.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (observations, dimensions)")
    n, d = X.shape
    if not n > k:
        raise ValueError(f"need more than k={k} observations, got {n}")
    if k < 1 or k > d:
        raise ValueError(f"k must lie in 1..{d}, got {k}")

    mean = X.mean(axis=0)
    centered = X - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    scale = svals[:k] / np.sqrt(n - 1)
    if np.any(scale <= 0):
        raise ValueError("data has zero variance in the requested component space")
    whitening = vt[:k] / scale[:, None]
    z = centered @ whitening.T  # (n, k), identity covariance

    rng = np.random.default_rng(seed)
    w = _symmetric_decorrelation(rng.standard_normal((k, k)))
    for iteration in range(1, max_iter + 1):
        s = z @ w.T
        g = np.tanh(s)
        g_prime = 1.0 - g**2
        w_new = (g.T @ z) / n - g_prime.mean(axis=0)[:, None] * w
        w_new = _symmetric_decorrelation(w_new)
        delta = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", w_new, w)) - 1.0)))
        w = w_new
        if delta < tol:
            return IcaModel(whitening=whitening, unmixing=w, mean=mean, iterations=iteration)
    raise ConvergenceError(
        f"FastICA did not converge within {max_iter} iterations "
        f"(last rotation change {delta:.3e}, tolerance {tol:g})",
        iterations=max_iter,
    )


def ica_transform(model: IcaModel, X: np.ndarray) -> np.ndarray:
    """Apply whitening then unmixing to rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"expected (n, {model.dim}) input, got {X.shape}")
    return (X - model.mean) @ (model.unmixing @ model.whitening).T


def save_pca_model(model: PcaModel, prefix) -> None:
    """Write mean/components/ratios as tensor container files under ``prefix``."""
    from . import io as eio

    eio.write_tensor(f"{prefix}_mean.ltns", model.mean)
    eio.write_tensor(f"{prefix}_components.ltns", model.components)
    eio.write_tensor(f"{prefix}_ratios.ltns", model.explained_variance_ratio)


def load_pca_model(prefix) -> PcaModel:
    from . import io as eio

    ratios = eio.read_tensor(f"{prefix}_ratios.ltns")
    return PcaModel(
        mean=eio.read_tensor(f"{prefix}_mean.ltns"),
        components=eio.read_tensor(f"{prefix}_components.ltns"),
        explained_variance_ratio=ratios,
        degenerate=not bool(np.any(ratios)),  # all-zero ratios mark a flagged fit
    )


def save_ica_model(model: IcaModel, prefix) -> None:
    """Write whitening/unmixing/mean as tensor container files under ``prefix``."""
    from . import io as eio

    eio.write_tensor(f"{prefix}_whitening.ltns", model.whitening)
    eio.write_tensor(f"{prefix}_unmixing.ltns", model.unmixing)
    eio.write_tensor(f"{prefix}_mean.ltns", model.mean)


def load_ica_model(prefix) -> IcaModel:
    from . import io as eio

    return IcaModel(
        whitening=eio.read_tensor(f"{prefix}_whitening.ltns"),
        unmixing=eio.read_tensor(f"{prefix}_unmixing.ltns"),
        mean=eio.read_tensor(f"{prefix}_mean.ltns"),
    )
