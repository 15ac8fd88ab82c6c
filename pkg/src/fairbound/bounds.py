"""Classifier-independent accuracy ceilings, with and without an equalized-odds budget.

The unconstrained ceiling is
``max(1-a, a) + min(1-a, a) * dtv(P1, P0)``.  Under a budget ``eps`` on the
equalized-odds gap the ceiling becomes
``max(1-a, a) + min(T1, T2)`` with

    T1 = min(1-a, a) * dtv(P1^b, P0^b) + beta * eps
    T2 = min(1-a, a) * dtv(P1^a, P0^a) + (1 - beta) * eps

where ``beta = P(Z=a)``; each branch conditions on one group and pays the
other's proportion per unit of budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FairboundError

T1, T2 = "T1", "T2"


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or not np.isfinite(value):
        raise FairboundError(f"{name}={value!r} outside [0, 1]")


@dataclass(frozen=True)
class BoundParams:
    alpha: float
    beta: float
    dtv_global: float
    dtv_a: float
    dtv_b: float

    def __post_init__(self):
        for name in ("alpha", "beta", "dtv_global", "dtv_a", "dtv_b"):
            _check_unit(name, getattr(self, name))

    @property
    def minority_label_mass(self) -> float:
        return min(1.0 - self.alpha, self.alpha)

    @property
    def majority_label_mass(self) -> float:
        return max(1.0 - self.alpha, self.alpha)


@dataclass(frozen=True)
class BoundCurve:
    epsilons: np.ndarray
    eo_bound_values: np.ndarray
    active_branch: tuple[str, ...]
    unconstrained_value: float

    @property
    def effective_values(self) -> np.ndarray:
        return np.minimum(self.eo_bound_values, self.unconstrained_value)


def unconstrained_bound(alpha: float, dtv_global: float) -> float:
    _check_unit("alpha", alpha)
    _check_unit("dtv_global", dtv_global)
    return max(1.0 - alpha, alpha) + min(1.0 - alpha, alpha) * dtv_global


def branch_terms(params: BoundParams, eps: float) -> tuple[float, float]:
    m = params.minority_label_mass
    t1 = m * params.dtv_b + params.beta * eps
    t2 = m * params.dtv_a + (1.0 - params.beta) * eps
    return t1, t2


def eo_bound(params: BoundParams, eps: float) -> tuple[float, str]:
    """Accuracy ceiling at EO budget ``eps``, capped at 1, and the binding branch."""
    _check_unit("eps", eps)
    t1, t2 = branch_terms(params, eps)
    branch = T1 if t1 <= t2 else T2
    return min(1.0, params.majority_label_mass + min(t1, t2)), branch


def effective_bound(params: BoundParams, eps: float) -> float:
    """The tighter of the EO ceiling and the unconstrained ceiling."""
    value, _ = eo_bound(params, eps)
    return min(unconstrained_bound(params.alpha, params.dtv_global), value)


def crossing_epsilon(params: BoundParams) -> float | None:
    """Budget at which T1 = T2, or None when the branches are parallel or never meet in eps >= 0."""
    slope_gap = 1.0 - 2.0 * params.beta
    if slope_gap == 0.0:
        return None
    eps = params.minority_label_mass * (params.dtv_b - params.dtv_a) / slope_gap
    return eps if eps >= 0.0 else None


def bound_curve(params: BoundParams, eps_grid) -> BoundCurve:
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise FairboundError("epsilon grid must be a non-empty 1-D sequence")
    if (np.diff(eps) <= 0).any():
        raise FairboundError("epsilon grid must be strictly ascending")
    values, branches = zip(*(eo_bound(params, float(e)) for e in eps))
    return BoundCurve(
        epsilons=eps,
        eo_bound_values=np.array(values),
        active_branch=tuple(branches),
        unconstrained_value=unconstrained_bound(params.alpha, params.dtv_global),
    )


def parse_grid(text: str) -> np.ndarray:
    """Parse ``"start:step:stop"`` (inclusive stop) into an ascending grid."""
    try:
        start, step, stop = (float(s) for s in text.split(":"))
    except ValueError:
        raise FairboundError(f"bad grid {text!r}; expected start:step:stop") from None
    if step <= 0 or stop < start:
        raise FairboundError(f"bad grid {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)
