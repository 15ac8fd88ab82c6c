"""Total variation distance: exact on finite supports, variational from samples.

The sample-based estimator maximizes ``mean_P T(x) - mean_Q T(x)`` over a
one-hidden-layer critic ``T(x) = sigmoid(w2 . sigmoid(W1 x + b1) + b2) - 1/2``.
The shifted output keeps ``T`` inside (-1/2, 1/2), which is exactly the
domain on which the TV conjugate is the identity, so every critic gives a
valid lower bound on the divergence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import FairboundError

logger = logging.getLogger(__name__)

HIDDEN_UNITS = 10


class EstimatorDiverged(FairboundError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"estimator diverged at iteration {iteration}")


@dataclass(frozen=True)
class DiscretePmf:
    masses: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != 1 or (masses < 0).any() or abs(masses.sum() - 1.0) > 1e-12:
            raise FairboundError("pmf masses must be nonnegative and sum to 1")
        object.__setattr__(self, "masses", masses)

    def __len__(self):
        return self.masses.shape[0]


def exact_tv_discrete(p, q) -> float:
    """Half the L1 distance between two pmfs on the same finite support."""
    p = p.masses if isinstance(p, DiscretePmf) else np.asarray(p, dtype=float)
    q = q.masses if isinstance(q, DiscretePmf) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise FairboundError(f"support size mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


@dataclass
class CriticNetwork:
    """Two-layer sigmoid critic; ``w1`` has shape (hidden, d)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    output_map: str = field(default="shifted sigmoid onto (-1/2, 1/2)", repr=False)

    @classmethod
    def zeros(cls, d: int, hidden: int = HIDDEN_UNITS) -> "CriticNetwork":
        return cls(np.zeros((hidden, d)), np.zeros(hidden), np.zeros(hidden), 0.0)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, scale: float = 0.1,
               hidden: int = HIDDEN_UNITS) -> "CriticNetwork":
        w1 = rng.uniform(-scale, scale, (hidden, d))
        b1 = rng.uniform(-scale, scale, hidden)
        w2 = rng.uniform(-scale, scale, hidden)
        b2 = float(rng.uniform(-scale, scale))
        return cls(w1, b1, w2, b2)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, np.array(self.b2)]

    def with_params(self, params) -> "CriticNetwork":
        w1, b1, w2, b2 = params
        return CriticNetwork(np.array(w1, dtype=float), np.array(b1, dtype=float),
                             np.array(w2, dtype=float), float(b2))

    def copy(self) -> "CriticNetwork":
        return self.with_params(self.params())


@dataclass(frozen=True)
class CriticGradient:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def blocks(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, np.array(self.b2)]


@dataclass(frozen=True)
class EstimatorConfig:
    learning_rate: float = 1.0
    max_iters: int = 5000
    seed: int = 0
    batch: str = "full-batch"
    init_scale: float = 0.1
    standardize: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_iters <= 0 or self.init_scale <= 0:
            raise FairboundError("learning_rate, max_iters and init_scale must be positive")
        if self.batch != "full-batch":
            raise FairboundError("only full-batch optimization is supported")


@dataclass(frozen=True)
class TvEstimate:
    value: float
    iterations_run: int
    final_objective_trace: tuple[float, ...]
    seed: int
    sample_sizes: tuple[int, int]


def _as_samples(samples, name: str) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise FairboundError(f"{name}: empty sample set")
    return arr


def _check_dim(net: CriticNetwork, x: np.ndarray) -> None:
    if x.shape[-1] != net.input_dim:
        raise FairboundError(f"input dimension {x.shape[-1]} does not match critic dimension {net.input_dim}")


def _forward(net: CriticNetwork, x: np.ndarray):
    hidden = expit(x @ net.w1.T + net.b1)
    out = expit(hidden @ net.w2 + net.b2)
    return hidden, out


def critic_forward(net: CriticNetwork, x) -> np.ndarray | float:
    """Critic output in (-1/2, 1/2) for one point or a batch of rows."""
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise FairboundError("critic input must be finite")
    _check_dim(net, x)
    _, out = _forward(net, x)
    res = out - 0.5
    return float(res) if np.ndim(res) == 0 else res


def tv_conjugate(t):
    """Convex conjugate of f(u) = |u - 1| / 2, restricted to its domain |t| <= 1/2."""
    t = np.asarray(t, dtype=float)
    if (np.abs(t) > 0.5).any():
        raise FairboundError("TV conjugate is infinite outside [-1/2, 1/2]")
    return t


def tv_objective(net: CriticNetwork, samples_p, samples_q) -> float:
    p = _as_samples(samples_p, "samples_p")
    q = _as_samples(samples_q, "samples_q")
    _check_dim(net, p)
    _check_dim(net, q)
    return float(np.mean(critic_forward(net, p)) - np.mean(tv_conjugate(critic_forward(net, q))))


def _pooled_gradient(net: CriticNetwork, x: np.ndarray, weights: np.ndarray):
    """Objective ``weights @ T(x)`` and its gradient, by manual backprop."""
    hidden, out = _forward(net, x)
    value = float(weights @ (out - 0.5))
    d_out = weights * out * (1.0 - out)
    g_w2 = hidden.T @ d_out
    g_b2 = float(d_out.sum())
    d_hidden = np.outer(d_out, net.w2)
    d_hidden *= hidden
    d_hidden *= 1.0 - hidden
    g_w1 = d_hidden.T @ x
    g_b1 = d_hidden.sum(axis=0)
    return value, CriticGradient(g_w1, g_b1, g_w2, g_b2)


def _pool(p: np.ndarray, q: np.ndarray):
    x = np.vstack([p, q])
    weights = np.concatenate([np.full(len(p), 1.0 / len(p)), np.full(len(q), -1.0 / len(q))])
    return x, weights


def critic_gradient(net: CriticNetwork, samples_p, samples_q) -> CriticGradient:
    """Exact gradient of ``tv_objective`` with respect to every critic parameter."""
    p = _as_samples(samples_p, "samples_p")
    q = _as_samples(samples_q, "samples_q")
    _check_dim(net, p)
    _check_dim(net, q)
    x, weights = _pool(p, q)
    return _pooled_gradient(net, x, weights)[1]


def standardize_pooled(p: np.ndarray, q: np.ndarray):
    """Scale both sample sets by the mean and std of their union (constant columns untouched)."""
    pooled = np.vstack([p, q])
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    sd[sd == 0] = 1.0
    return (p - mu) / sd, (q - mu) / sd


def estimate_tv_variational(samples_p, samples_q, cfg: EstimatorConfig | None = None,
                            return_critic: bool = False):
    """Lower-bound estimate of d_TV(P, Q) by full-batch gradient ascent on the critic.

    The returned value is the best objective seen over ``cfg.max_iters``
    iterations, clamped to [0, 1].  Deterministic for fixed inputs and seed.
    """
    cfg = cfg or EstimatorConfig()
    p = _as_samples(samples_p, "samples_p")
    q = _as_samples(samples_q, "samples_q")
    if p.shape[1] != q.shape[1]:
        raise FairboundError(f"dimension mismatch: {p.shape[1]} vs {q.shape[1]}")
    if cfg.standardize:
        p, q = standardize_pooled(p, q)
    x, weights = _pool(p, q)

    rng = np.random.default_rng(cfg.seed)
    net = CriticNetwork.random(p.shape[1], rng, cfg.init_scale)
    best_net = net.copy()
    trace = []
    best = -np.inf
    lr = cfg.learning_rate
    for it in range(cfg.max_iters):
        value, grad = _pooled_gradient(net, x, weights)
        if not np.isfinite(value):
            raise EstimatorDiverged(it)
        trace.append(value)
        if value > best:
            best = value
            if return_critic:
                best_net = net.copy()
        net = CriticNetwork(net.w1 + lr * grad.w1, net.b1 + lr * grad.b1,
                            net.w2 + lr * grad.w2, net.b2 + lr * grad.b2)

    logger.debug("tv estimate %.6f after %d iterations", best, cfg.max_iters)
    est = TvEstimate(
        value=float(min(max(best, 0.0), 1.0)),
        iterations_run=cfg.max_iters,
        final_objective_trace=tuple(trace),
        seed=cfg.seed,
        sample_sizes=(len(p), len(q)),
    )
    return (est, best_net) if return_critic else est
