"""Logistic classifiers trained with in-processing equalized-odds regularizers.

All three penalties are functions of the per-row margin ``m = w.x + b`` and
return their gradient with respect to that margin, so the full parameter
gradient is ``X.T @ g`` (weights) and ``g.sum()`` (bias).

- ``FDIVERGENCE`` (C1): per label, TV between the two groups' soft score
  histograms (linear binning onto ``n_bins`` centres in [0, 1]), summed
  over labels.  With two bins this is the TV between the groups' Bernoulli
  prediction distributions.
- ``FNR_FPR_GAP`` (C2): ``|FNR_a - FNR_b| + |FPR_a - FPR_b|`` with soft rates.
- ``COVARIANCE`` (C3): per label, squared covariance between the centred
  group indicator and the margin weighted by its misclassification
  probability, summed over labels.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import GROUPS, EmptyCellError, FairboundError, LabeledDataset, Prediction, accuracy, delta_eo

logger = logging.getLogger(__name__)


class RegularizerKind(enum.Enum):
    FDIVERGENCE = "c1"
    FNR_FPR_GAP = "c2"
    COVARIANCE = "c3"

    @classmethod
    def parse(cls, name: str) -> "RegularizerKind":
        key = name.strip().lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise FairboundError(f"unknown regularizer {name!r}; choose from c1, c2, c3")


class TrainingError(FairboundError):
    pass


@dataclass(frozen=True)
class ClassifierModel:
    weights: np.ndarray
    bias: float
    threshold: float = 0.5

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not (np.isfinite(w).all() and np.isfinite(self.bias)):
            raise FairboundError("model parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    def margin(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.weights.shape[0]:
            raise FairboundError(f"input dimension {x.shape[-1]} does not match model dimension {self.weights.shape[0]}")
        return x @ self.weights + self.bias

    def predict(self, data: LabeledDataset) -> Prediction:
        return Prediction.from_scores(score(self, data.features), self.threshold)


@dataclass(frozen=True)
class TrainConfig:
    regularizer: RegularizerKind = RegularizerKind.FNR_FPR_GAP
    lam: float = 0.0
    learning_rate: float = 0.05
    epochs: int = 2000
    seed: int = 0
    n_bins: int = 5

    def __post_init__(self):
        if self.lam < 0:
            raise FairboundError("regularization weight must be nonnegative")
        if self.learning_rate <= 0 or self.epochs <= 0:
            raise FairboundError("learning_rate and epochs must be positive")
        if self.n_bins < 2:
            raise FairboundError("n_bins must be at least 2")


@dataclass(frozen=True)
class TradeoffPoint:
    lam: float
    train_accuracy: float
    test_accuracy: float
    train_delta_eo: float
    test_delta_eo: float
    seed: int = 0
    regularizer: str = ""


def score(model: ClassifierModel, x) -> np.ndarray | float:
    s = expit(model.margin(x))
    return float(s) if np.ndim(s) == 0 else s


class _Cells:
    """Row masks and sizes for the four (y, z) cells; rejects empty cells."""

    def __init__(self, data: LabeledDataset):
        self.masks = {}
        self.sizes = {}
        for y in (0, 1):
            for z in (0, 1):
                mask = data.cell_mask(y, z)
                if not mask.any():
                    raise EmptyCellError(y, GROUPS[z])
                self.masks[y, z] = mask
                self.sizes[y, z] = int(mask.sum())
        self.labels = data.labels.astype(float)
        self.in_a = data.in_group_a.astype(float)


def _fnr_fpr_gap(margin: np.ndarray, cells: _Cells):
    s = expit(margin)
    ds = np.zeros_like(s)
    mean = {k: s[m].mean() for k, m in cells.masks.items()}
    # FNR gap: (1 - mean_1a) - (1 - mean_1b); FPR gap: mean_0a - mean_0b
    fnr_gap = mean[1, 1] - mean[1, 0]
    fpr_gap = mean[0, 0] - mean[0, 1]
    sg1, sg0 = np.sign(fnr_gap), np.sign(fpr_gap)
    ds[cells.masks[1, 0]] = -sg1 / cells.sizes[1, 0]
    ds[cells.masks[1, 1]] = sg1 / cells.sizes[1, 1]
    ds[cells.masks[0, 0]] = sg0 / cells.sizes[0, 0]
    ds[cells.masks[0, 1]] = -sg0 / cells.sizes[0, 1]
    return abs(fnr_gap) + abs(fpr_gap), ds * s * (1.0 - s)


def _soft_bins(s: np.ndarray, n_bins: int):
    """Linear-interpolation bin weights (n, n_bins) and their derivative in s."""
    width = 1.0 / (n_bins - 1)
    centres = np.linspace(0.0, 1.0, n_bins)
    offset = s[:, None] - centres[None, :]
    inside = np.abs(offset) < width
    weights = np.where(inside, 1.0 - np.abs(offset) / width, 0.0)
    dweights = np.where(inside, -np.sign(offset) / width, 0.0)
    return weights, dweights


def _binned_tv(margin: np.ndarray, cells: _Cells, n_bins: int):
    s = expit(margin)
    w, dw = _soft_bins(s, n_bins)
    ds = np.zeros_like(s)
    total = 0.0
    for y in (0, 1):
        ma, mb = cells.masks[y, 0], cells.masks[y, 1]
        diff = w[ma].mean(axis=0) - w[mb].mean(axis=0)
        total += 0.5 * np.abs(diff).sum()
        sg = 0.5 * np.sign(diff)
        ds[ma] = dw[ma] @ sg / cells.sizes[y, 0]
        ds[mb] = -(dw[mb] @ sg) / cells.sizes[y, 1]
    return total, ds * s * (1.0 - s)


def _mistreatment_covariance(margin: np.ndarray, cells: _Cells):
    grad = np.zeros_like(margin)
    total = 0.0
    for y in (0, 1):
        rows = cells.labels == y
        n_y = rows.sum()
        zc = cells.in_a[rows] - cells.in_a[rows].mean()
        sign = 2.0 * y - 1.0
        m = margin[rows]
        p_wrong = expit(-sign * m)
        cov = np.mean(zc * p_wrong * m)
        total += cov * cov
        dterm = p_wrong - sign * m * p_wrong * (1.0 - p_wrong)
        grad[rows] = 2.0 * cov * zc * dterm / n_y
    return total, grad


def _regularizer_with_margin_grad(kind: RegularizerKind, margin: np.ndarray, cells: _Cells, n_bins: int):
    if kind is RegularizerKind.FNR_FPR_GAP:
        return _fnr_fpr_gap(margin, cells)
    if kind is RegularizerKind.FDIVERGENCE:
        return _binned_tv(margin, cells, n_bins)
    if kind is RegularizerKind.COVARIANCE:
        return _mistreatment_covariance(margin, cells)
    raise FairboundError(f"unknown regularizer {kind!r}")


def regularizer_value(kind: RegularizerKind, model: ClassifierModel, data: LabeledDataset,
                      n_bins: int = 5) -> float:
    cells = _Cells(data)
    value, _ = _regularizer_with_margin_grad(kind, model.margin(data.features), cells, n_bins)
    return float(value)


def logistic_loss(margin: np.ndarray, labels: np.ndarray):
    """Mean binary cross-entropy from margins, and its gradient per margin."""
    loss = np.mean(labels * np.logaddexp(0.0, -margin) + (1.0 - labels) * np.logaddexp(0.0, margin))
    return float(loss), (expit(margin) - labels) / margin.shape[0]


def total_loss(model: ClassifierModel, data: LabeledDataset, cfg: TrainConfig,
               cells: _Cells | None = None):
    """Regularized objective and its gradient as ``(loss, grad_weights, grad_bias)``."""
    cells = cells or _Cells(data)
    x = data.features
    margin = model.margin(x)
    loss, g = logistic_loss(margin, cells.labels)
    if cfg.lam != 0.0:
        reg, g_reg = _regularizer_with_margin_grad(cfg.regularizer, margin, cells, cfg.n_bins)
        loss += cfg.lam * reg
        g = g + cfg.lam * g_reg
    return loss, x.T @ g, float(g.sum())


def initial_model(d: int, seed: int) -> ClassifierModel:
    rng = np.random.default_rng(seed)
    return ClassifierModel(rng.normal(0.0, 0.01, d), 0.0)


def train(data: LabeledDataset, cfg: TrainConfig) -> ClassifierModel:
    """Full-batch gradient descent on logistic loss plus ``cfg.lam`` times the penalty.

    The absolute-value penalties are not smooth, so a fixed step oscillates
    across their kinks.  A step that raises the total loss is rejected and the
    learning rate halved; the loss sequence is therefore non-increasing.
    """
    cells = _Cells(data)
    model = initial_model(data.n_features, cfg.seed)
    loss, gw, gb = total_loss(model, data, cfg, cells)
    if not np.isfinite(loss):
        raise TrainingError("non-finite loss at epoch 0")
    initial = loss
    lr = cfg.learning_rate
    for epoch in range(1, cfg.epochs + 1):
        new_w, new_b = model.weights - lr * gw, model.bias - lr * gb
        if not (np.isfinite(new_w).all() and np.isfinite(new_b)):
            raise TrainingError(f"non-finite parameters at epoch {epoch}")
        trial = ClassifierModel(new_w, new_b)
        t_loss, t_gw, t_gb = total_loss(trial, data, cfg, cells)
        if not np.isfinite(t_loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        if t_loss <= loss:
            model, loss, gw, gb = trial, t_loss, t_gw, t_gb
        else:
            lr *= 0.5
    if loss > initial:
        raise TrainingError(f"loss increased from {initial:.6g} to {loss:.6g}")
    logger.debug("trained %s lam=%g seed=%d: loss %.5f -> %.5f (final lr %.3g)",
                 cfg.regularizer.value, cfg.lam, cfg.seed, initial, loss, lr)
    return model


def evaluate(model: ClassifierModel, data: LabeledDataset) -> tuple[float, float]:
    pred = model.predict(data)
    return accuracy(pred, data), delta_eo(pred, data)


def sweep(data_train: LabeledDataset, data_test: LabeledDataset, kind: RegularizerKind,
          lambdas, base_cfg: TrainConfig | None = None) -> list[TradeoffPoint]:
    lambdas = sorted(float(v) for v in lambdas)
    if not lambdas:
        raise FairboundError("empty lambda grid")
    base = base_cfg or TrainConfig()
    points = []
    for lam in lambdas:
        cfg = TrainConfig(kind, lam, base.learning_rate, base.epochs, base.seed, base.n_bins)
        model = train(data_train, cfg)
        tr_acc, tr_deo = evaluate(model, data_train)
        te_acc, te_deo = evaluate(model, data_test)
        points.append(TradeoffPoint(lam, tr_acc, te_acc, tr_deo, te_deo, cfg.seed, kind.value))
    return points
