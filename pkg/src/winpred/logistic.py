"""Ridge-penalized binary logistic regression.

Training maximizes the penalized log-likelihood

    L(w, b) = sum_i log p(y_i | x_i) - ridge * ||w||^2

(the bias is not penalized) with deterministic batch ascent from a zero
start along the diagonally preconditioned gradient, using backtracking line
search on the Armijo condition. The preconditioner is the per-coordinate
curvature upper bound (0.25 * sum_i x_ij^2 + 2 * ridge for weights,
0.25 * n for the bias), which keeps steps sane when the ridge dwarfs the
data term. The positive class is RadiantWin (y = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFiniteFeature, SingleClassData
from .matchdata import MatchOutcome

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-18
_MAX_STEP = 1e8

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LrConfig:
    ridge: float = 1e-8
    max_iterations: int = 500
    convergence_tolerance: float = 1e-9
    standardize: bool = False

    def validate(self) -> None:
        if self.ridge < 0:
            raise InvalidConfig(f"ridge must be >= 0, got {self.ridge}")
        if self.convergence_tolerance <= 0:
            raise InvalidConfig("convergence_tolerance must be > 0")
        if self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be >= 1")


@dataclass
class LrModel:
    weights: np.ndarray
    bias: float
    feature_names: list[str]
    config: LrConfig
    means: np.ndarray | None = None  # standardization parameters, when enabled
    stds: np.ndarray | None = None

    def predict_proba(self, x) -> float | np.ndarray:
        return predict_proba(self, x)

    def predict_label(self, x):
        return predict_label(self, x)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def penalized_log_likelihood(theta: np.ndarray, X: np.ndarray, y: np.ndarray,
                             ridge: float) -> float:
    """L at theta = [weights..., bias]; larger is better."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # log sigma(z) = -log(1 + exp(-z)); per-row sign picks the y-correct branch
    ll = -np.logaddexp(0.0, np.where(y == 1, -z, z)).sum()
    return float(ll - ridge * (w @ w))


def penalized_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray,
                       ridge: float) -> np.ndarray:
    """Analytic gradient of the penalized log-likelihood, bias coordinate last."""
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains non-finite values")
    w, b = theta[:-1], theta[-1]
    residual = y - _sigmoid(X @ w + b)
    grad = np.empty(theta.shape[0])
    grad[:-1] = X.T @ residual - 2.0 * ridge * w
    grad[-1] = residual.sum()
    return grad


def _check_training_data(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains non-finite values")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassData("training data contains a single class")


def train_lr(X, y, config: LrConfig = LrConfig(),
             feature_names: list[str] | None = None) -> LrModel:
    """Fit the model. Deterministic: identical inputs give identical weights."""
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_data(X, y)
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise DimensionMismatch(
            f"{len(feature_names)} feature names for {X.shape[1]} columns"
        )

    means = stds = None
    if config.standardize:
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds == 0.0, 1.0, stds)
        X = (X - means) / stds

    d = X.shape[1]
    theta = np.zeros(d + 1)
    curvature = np.empty(d + 1)
    curvature[:-1] = 0.25 * (X * X).sum(axis=0) + 2.0 * config.ridge
    curvature[-1] = 0.25 * X.shape[0]
    curvature[curvature == 0.0] = 1.0  # all-zero columns
    ll = penalized_log_likelihood(theta, X, y, config.ridge)
    step = 1.0
    for _ in range(config.max_iterations):
        grad = penalized_gradient(theta, X, y, config.ridge)
        direction = grad / curvature
        slope = float(grad @ direction)
        if slope == 0.0:
            break
        t = step
        accepted = None
        while t >= _MIN_STEP:
            candidate = theta + t * direction
            ll_new = penalized_log_likelihood(candidate, X, y, config.ridge)
            if ll_new >= ll + _ARMIJO_C * t * slope:
                accepted = (candidate, ll_new, t)
                break
            t *= 0.5
        if accepted is None:
            break  # no step along the ascent direction improves: converged
        theta, ll_new, t = accepted
        improvement = ll_new - ll
        ll = ll_new
        step = min(t * 2.0, _MAX_STEP)
        if improvement < config.convergence_tolerance:
            break

    if feature_names is None:
        feature_names = [f"x{i}" for i in range(d)]
    return LrModel(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        feature_names=list(feature_names),
        config=config,
        means=means,
        stds=stds,
    )


def _prepare_input(model: LrModel, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != model.weights.shape[0]:
        raise DimensionMismatch(
            f"expected {model.weights.shape[0]} features, got shape {np.asarray(x).shape}"
        )
    if model.means is not None:
        arr = (arr - model.means) / model.stds
    return arr, single


def predict_proba(model: LrModel, x) -> float | np.ndarray:
    """P(RadiantWin); scalar for a single vector, array for a matrix."""
    arr, single = _prepare_input(model, x)
    p = _sigmoid(arr @ model.weights + model.bias)
    return float(p[0]) if single else p


def predict_label(model: LrModel, x):
    """RadiantWin iff predicted probability >= 0.5 (exact ties go Radiant)."""
    arr, single = _prepare_input(model, x)
    p = _sigmoid(arr @ model.weights + model.bias)
    labels = [MatchOutcome.from_int(int(v)) for v in (p >= 0.5)]
    return labels[0] if single else labels


# -- persistence ---------------------------------------------------------------

def save_lr(model: LrModel, path) -> None:
    """Versioned text format; floats use 17 significant digits (exact round trip)."""
    cfg = model.config
    lines = [
        f"winpred-lr {FORMAT_VERSION}",
        f"ridge={float(cfg.ridge)!r}",
        f"max_iterations={cfg.max_iterations}",
        f"convergence_tolerance={float(cfg.convergence_tolerance)!r}",
        f"standardize={'true' if cfg.standardize else 'false'}",
        f"features={len(model.feature_names)}",
    ]
    for i, name in enumerate(model.feature_names):
        row = f"{name},{model.weights[i]:.17g}"
        if model.means is not None:
            row += f",{model.means[i]:.17g},{model.stds[i]:.17g}"
        lines.append(row)
    lines.append(f"__bias__,{model.bias:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def load_lr(path) -> LrModel:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].startswith("winpred-lr "):
        raise InvalidConfig(f"{path} is not a winpred-lr model file")
    header = dict(line.split("=", 1) for line in lines[1:6])
    config = LrConfig(
        ridge=float(header["ridge"]),
        max_iterations=int(header["max_iterations"]),
        convergence_tolerance=float(header["convergence_tolerance"]),
        standardize=header["standardize"] == "true",
    )
    n = int(header["features"])
    names: list[str] = []
    weights = np.empty(n)
    means = np.empty(n) if config.standardize else None
    stds = np.empty(n) if config.standardize else None
    for i, line in enumerate(lines[6:6 + n]):
        parts = line.split(",")
        names.append(parts[0])
        weights[i] = float(parts[1])
        if config.standardize:
            means[i] = float(parts[2])
            stds[i] = float(parts[3])
    bias_parts = lines[6 + n].split(",")
    if bias_parts[0] != "__bias__":
        raise InvalidConfig(f"{path}: missing bias row")
    return LrModel(
        weights=weights,
        bias=float(bias_parts[1]),
        feature_names=names,
        config=config,
        means=means,
        stds=stds,
    )
