"""Small native classifiers behind a shared train/predict contract.

Three stand-ins for the usual library models: logistic regression trained by
batch gradient descent, a linear SVM trained by batch sub-gradient descent on
the regularized hinge loss, and gradient-boosted depth-1 trees ("stumps") on
the logistic loss.  All of them standardize features with statistics captured
at fit time and are fully deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from fairsel.errors import ConfigError


class ModelKind(str, enum.Enum):
    LOGISTIC_REGRESSION = "LogisticRegression"
    LINEAR_SVM = "LinearSVM"
    BOOSTED_STUMPS = "BoostedStumps"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "lr": cls.LOGISTIC_REGRESSION,
            "logistic": cls.LOGISTIC_REGRESSION,
            "svm": cls.LINEAR_SVM,
            "stumps": cls.BOOSTED_STUMPS,
            "xgboost": cls.BOOSTED_STUMPS,
        }
        key = str(value)
        for kind in cls:
            if kind.value.lower() == key.lower():
                return kind
        try:
            return aliases[key.lower()]
        except KeyError:
            raise ConfigError(f"unknown model kind {value!r}") from None


@dataclass(frozen=True)
class TrainConfig:
    kind: ModelKind = ModelKind.LOGISTIC_REGRESSION
    learning_rate: float = 0.1
    epochs: int = 200
    l2_penalty: float = 1e-3
    n_rounds: int = 50
    shrinkage: float = 0.3
    stump_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        if self.learning_rate <= 0 or self.shrinkage <= 0:
            raise ConfigError("learning_rate and shrinkage must be positive")
        if self.epochs < 1 or self.n_rounds < 1:
            raise ConfigError("epochs and n_rounds must be positive")
        if self.l2_penalty < 0 or self.stump_lambda < 0:
            raise ConfigError("penalties must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2_penalty": self.l2_penalty,
            "n_rounds": self.n_rounds,
            "shrinkage": self.shrinkage,
            "stump_lambda": self.stump_lambda,
            "seed": self.seed,
        }


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: ModelKind
    mean: np.ndarray
    scale: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.mean.size

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = self.transform(X)
        if self.kind is ModelKind.BOOSTED_STUMPS:
            p = self.params
            left = Z[:, p["feature"]] <= p["threshold"]
            return p["base"] + np.where(left, p["left"], p["right"]).sum(axis=1)
        return Z @ self.params["w"] + self.params["b"]


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z)))


def logistic_loss(w, b, X, y, l2=0.0) -> float:
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))


def logistic_grad(w, b, X, y, l2=0.0) -> tuple[np.ndarray, float]:
    r = sigmoid(X @ w + b) - y
    return X.T @ r / len(y) + l2 * w, float(r.mean())


def hinge_loss(w, b, X, y, l2=0.0) -> float:
    s = 2.0 * y - 1.0
    return float(np.mean(np.maximum(0.0, 1.0 - s * (X @ w + b))) + 0.5 * l2 * (w @ w))


def hinge_grad(w, b, X, y, l2=0.0) -> tuple[np.ndarray, float]:
    """Sub-gradient; at a margin of exactly 1 the hinge term contributes 0."""
    s = 2.0 * y - 1.0
    active = (s * (X @ w + b) < 1.0) * s
    return -(X.T @ active) / len(y) + l2 * w, float(-active.mean())


def standardization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _fit_linear(grad, Z, y, cfg: TrainConfig) -> dict:
    w = np.zeros(Z.shape[1])
    b = 0.0
    for _ in range(cfg.epochs):
        gw, gb = grad(w, b, Z, y, cfg.l2_penalty)
        w -= cfg.learning_rate * gw
        b -= cfg.learning_rate * gb
    return {"w": w, "b": b}


def _fit_stumps(Z, y, cfg: TrainConfig) -> dict:
    lam, eta = cfg.stump_lambda, cfg.shrinkage
    n, k = Z.shape
    columns = [np.unique(Z[:, j], return_inverse=True) for j in range(k)]
    prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    base = float(np.log(prior / (1 - prior)))
    F = np.full(n, base)

    feats, thrs, lefts, rights = [], [], [], []
    for _ in range(cfg.n_rounds):
        p = sigmoid(F)
        g = p - y
        h = p * (1.0 - p)
        G, H = g.sum(), h.sum()
        parent = G * G / (H + lam)
        best = (-np.inf, -1, -1)
        for j, (uniq, inv) in enumerate(columns):
            if uniq.size < 2:
                continue
            GL = np.cumsum(np.bincount(inv, weights=g, minlength=uniq.size))[:-1]
            HL = np.cumsum(np.bincount(inv, weights=h, minlength=uniq.size))[:-1]
            gain = GL**2 / (HL + lam) + (G - GL) ** 2 / (H - HL + lam) - parent
            t = int(np.argmax(gain))
            if gain[t] > best[0]:
                best = (gain[t], j, t)

        _, j, t = best
        if j < 0:
            # every column is constant: a single-leaf update
            feats.append(0)
            thrs.append(np.inf)
            lv = -eta * G / (H + lam)
            lefts.append(lv)
            rights.append(lv)
            F += lv
            continue
        uniq, inv = columns[j]
        left = inv <= t
        GL, HL = g[left].sum(), h[left].sum()
        lv = -eta * GL / (HL + lam)
        rv = -eta * (G - GL) / (H - HL + lam)
        feats.append(j)
        thrs.append(0.5 * (uniq[t] + uniq[t + 1]))
        lefts.append(lv)
        rights.append(rv)
        F += np.where(left, lv, rv)

    return {
        "base": base,
        "feature": np.array(feats, dtype=np.intp),
        "threshold": np.array(thrs),
        "left": np.array(lefts),
        "right": np.array(rights),
    }


def train(config: TrainConfig, view) -> TrainedModel:
    """Fit a classifier of ``config.kind`` on an :class:`EncodedDataset` view."""
    X = np.asarray(view.features, dtype=float)
    y = np.asarray(view.labels, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise TrainingError("cannot train on zero features")
    if X.shape[0] < 2 or np.unique(y).size < 2:
        raise TrainingError("training labels must contain both classes")

    mean, scale = standardization(X)
    Z = (X - mean) / scale
    if config.kind is ModelKind.LOGISTIC_REGRESSION:
        params = _fit_linear(logistic_grad, Z, y, config)
    elif config.kind is ModelKind.LINEAR_SVM:
        params = _fit_linear(hinge_grad, Z, y, config)
    else:
        params = _fit_stumps(Z, y, config)
    for v in params.values():
        if isinstance(v, np.ndarray):
            v.flags.writeable = False
    return TrainedModel(kind=config.kind, mean=mean, scale=scale, params=params)


def predict(model: TrainedModel, view) -> np.ndarray:
    """Binary predictions; a score exactly on the decision boundary is positive."""
    X = np.asarray(getattr(view, "features", view), dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, view has {X.shape[-1] if X.ndim else 0}"
        )
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int8)
    # margin >= 0 is the same rule as sigmoid(margin) >= 0.5
    return (model.decision_function(X) >= 0.0).astype(np.int8)


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
