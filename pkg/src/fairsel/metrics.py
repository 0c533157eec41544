"""Classification and group-fairness metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class GroupRates:
    rate_group1: float
    rate_group0: float
    n_group1: int
    n_group0: int


@dataclass(frozen=True)
class EvaluationRecord:
    """Holdout scores of one trained model, optionally tagged with its feature mask."""

    accuracy: float
    f1: float
    spd_signed: float
    spd_abs: float
    mask: str = ""
    n_selected: int = 0
    train_time: float = field(default=0.0, compare=False)
    failed: bool = False

    @property
    def f1_loss(self) -> float:
        return 1.0 - self.f1

    @property
    def objectives(self) -> tuple[float, float]:
        return (1.0 - self.f1, self.spd_abs)


def _binary(name: str, v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if v.size and not np.isin(v, (0, 1)).all():
        raise ValueError(f"{name} must be binary")
    return v.astype(bool)


def confusion(predictions, labels) -> ConfusionCounts:
    pred = _binary("predictions", predictions)
    true = _binary("labels", labels)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise ValueError("empty prediction vector")
    tp = int(np.count_nonzero(pred & true))
    fp = int(np.count_nonzero(pred & ~true))
    fn = int(np.count_nonzero(~pred & true))
    return ConfusionCounts(tp=tp, tn=pred.size - tp - fp - fn, fp=fp, fn=fn)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ValueError("accuracy of zero samples is undefined")
    return (c.tp + c.tn) / c.total


def f1_score(c: ConfusionCounts) -> float:
    """``2tp / (2tp + fp + fn)``; 0 when there are no positives predicted or present."""
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 0.0


def group_rates(predictions, protected) -> GroupRates:
    pred = _binary("predictions", predictions)
    group = _binary("protected", protected)
    if pred.shape != group.shape:
        raise ValueError("predictions and protected differ in length")
    n1 = int(np.count_nonzero(group))
    n0 = group.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("statistical parity needs members in both protected groups")
    return GroupRates(
        rate_group1=np.count_nonzero(pred & group) / n1,
        rate_group0=np.count_nonzero(pred & ~group) / n0,
        n_group1=n1,
        n_group0=n0,
    )


def statistical_parity_difference(predictions, protected) -> float:
    """Selection rate of group 1 minus selection rate of group 0 (signed)."""
    r = group_rates(predictions, protected)
    return r.rate_group1 - r.rate_group0


def score(predictions, labels, protected) -> EvaluationRecord:
    c = confusion(predictions, labels)
    spd = statistical_parity_difference(predictions, protected)
    return EvaluationRecord(accuracy=accuracy(c), f1=f1_score(c), spd_signed=spd, spd_abs=abs(spd))


def evaluate_all(model, holdout) -> EvaluationRecord:
    """Score ``model`` on ``holdout``; SPD uses the view's full protected vector."""
    from fairsel.models import predict

    pred = predict(model, holdout)
    rec = score(pred, holdout.labels, holdout.protected_values)
    if holdout.mask is None:
        return rec
    mask = np.asarray(holdout.mask, dtype=bool)
    return EvaluationRecord(
        accuracy=rec.accuracy,
        f1=rec.f1,
        spd_signed=rec.spd_signed,
        spd_abs=rec.spd_abs,
        mask="".join("1" if b else "0" for b in mask),
        n_selected=int(mask.sum()),
    )
