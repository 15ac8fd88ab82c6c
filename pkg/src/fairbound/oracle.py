"""Exact verification world on finite joint distributions P(x, y, z).

Every quantity the bounds speak about is computable in closed form here:
the group/label marginals, the three TV distances, the Bayes classifier,
and (via a small LP over randomized classifiers ``q(x) = P(f=1 | x)``)
the best accuracy any classifier can reach under an EO budget.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import BoundParams
from .core import GROUPS, EmptyCellError, FairboundError
from .divergence import exact_tv_discrete
from .simplex import simplex_max


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint pmf over (x, y, z); ``mass[x, y, z]`` with z index 0 = group a."""

    mass: np.ndarray

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.ndim != 3 or mass.shape[1:] != (2, 2) or mass.shape[0] < 1:
            raise FairboundError(f"joint mass must have shape (K, 2, 2), got {mass.shape}")
        if (mass < 0).any() or not np.isfinite(mass).all():
            raise FairboundError("joint masses must be finite and nonnegative")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise FairboundError(f"joint masses sum to {mass.sum()!r}, not 1")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def support_size(self) -> int:
        return self.mass.shape[0]

    @property
    def cell_mass(self) -> np.ndarray:
        """P(Y=y, Z=z) indexed [y, z]."""
        return self.mass.sum(axis=0)

    @property
    def alpha(self) -> float:
        return float(self.mass[:, 1, :].sum())

    @property
    def beta(self) -> float:
        return float(self.mass[:, :, 0].sum())

    @property
    def eta(self) -> float:
        py1 = self.alpha
        return float(self.mass[:, 1, 0].sum() / py1) if py1 > 0 else 0.0

    @property
    def gamma(self) -> float:
        py0 = 1.0 - self.alpha
        return float(self.mass[:, 0, 0].sum() / py0) if py0 > 0 else 0.0

    @property
    def marginal_x(self) -> np.ndarray:
        return self.mass.sum(axis=(1, 2))

    @property
    def xy(self) -> np.ndarray:
        """P(X=x, Y=y) with shape (K, 2)."""
        return self.mass.sum(axis=2)

    def posterior(self) -> np.ndarray:
        """P(Y=1 | x); points with zero mass get 1/2."""
        px = self.marginal_x
        safe = np.where(px > 0, px, 1.0)
        return np.where(px > 0, self.xy[:, 1] / safe, 0.5)

    def class_conditional(self, y: int) -> np.ndarray:
        py = self.xy[:, y].sum()
        if py <= 0:
            raise EmptyCellError(y, "a+b", "zero-mass label")
        return self.xy[:, y] / py

    def cell_conditional(self, y: int, z: int) -> np.ndarray:
        pyz = self.cell_mass[y, z]
        if pyz <= 0:
            raise EmptyCellError(y, GROUPS[z], "zero-mass cell")
        return self.mass[:, y, z] / pyz


@dataclass(frozen=True)
class RandomizedClassifier:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or (q < -1e-9).any() or (q > 1 + 1e-9).any():
            raise FairboundError("decision probabilities must lie in [0, 1]")
        object.__setattr__(self, "q", np.clip(q, 0.0, 1.0))


@dataclass(frozen=True)
class LpInstance:
    objective: np.ndarray
    constraint_rows: tuple[tuple[np.ndarray, str, float], ...]
    offset: float = 0.0
    box: tuple[float, float] = (0.0, 1.0)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    def standard_form(self):
        """(c, A_ub, b_ub) for max c.q, A q <= b, q >= 0 with the box's upper side as rows."""
        rows, rhs = [], []
        for coeffs, relation, b in self.constraint_rows:
            coeffs = np.asarray(coeffs, dtype=float)
            if relation == "<=":
                rows.append(coeffs)
                rhs.append(b)
            elif relation == ">=":
                rows.append(-coeffs)
                rhs.append(-b)
            else:
                raise FairboundError(f"unknown relation {relation!r}")
        if self.box[0] != 0.0:
            raise FairboundError("only box lower bound 0 is supported")
        rows.extend(np.eye(self.n_vars))
        rhs.extend([self.box[1]] * self.n_vars)
        return self.objective, np.array(rows), np.array(rhs, dtype=float)


def _check_dims(joint: DiscreteJoint, clf: RandomizedClassifier) -> None:
    if clf.q.shape[0] != joint.support_size:
        raise FairboundError(f"classifier has {clf.q.shape[0]} entries, joint has support {joint.support_size}")


def _require_cells(joint: DiscreteJoint) -> None:
    cells = joint.cell_mass
    for y in (0, 1):
        for z in (0, 1):
            if cells[y, z] <= 0:
                raise EmptyCellError(y, GROUPS[z], "zero-mass cell")


def exact_params(joint: DiscreteJoint) -> BoundParams:
    _require_cells(joint)
    return BoundParams(
        alpha=joint.alpha,
        beta=joint.beta,
        dtv_global=exact_tv_discrete(joint.class_conditional(1), joint.class_conditional(0)),
        dtv_a=exact_tv_discrete(joint.cell_conditional(1, 0), joint.cell_conditional(0, 0)),
        dtv_b=exact_tv_discrete(joint.cell_conditional(1, 1), joint.cell_conditional(0, 1)),
    )


def bayes_classifier(joint: DiscreteJoint) -> tuple[RandomizedClassifier, float]:
    """Deterministic Bayes rule (decide 1 iff P(Y=1|x) >= 1/2) and its accuracy."""
    phi = joint.posterior()
    q = (phi >= 0.5).astype(float)
    acc = float(np.sum(joint.marginal_x * np.maximum(phi, 1.0 - phi)))
    return RandomizedClassifier(q), acc


def bayes_accuracy_l1(joint: DiscreteJoint) -> float:
    """Bayes accuracy as 1/2 + 1/2 * sum_x |alpha P1(x) - (1 - alpha) P0(x)|."""
    weighted = joint.xy  # alpha * P1(x) and (1 - alpha) * P0(x), defined even when a class is empty
    return float(0.5 + 0.5 * np.abs(weighted[:, 1] - weighted[:, 0]).sum())


def classifier_accuracy(joint: DiscreteJoint, clf: RandomizedClassifier) -> float:
    _check_dims(joint, clf)
    xy = joint.xy
    return float(xy[:, 1] @ clf.q + xy[:, 0] @ (1.0 - clf.q))


def classifier_rates(joint: DiscreteJoint, clf: RandomizedClassifier) -> np.ndarray:
    """P(f=1 | Y=y, Z=z) indexed [y, z]."""
    _check_dims(joint, clf)
    _require_cells(joint)
    return np.einsum("kyz,k->yz", joint.mass, clf.q) / joint.cell_mass


def classifier_delta_eo(joint: DiscreteJoint, clf: RandomizedClassifier) -> float:
    rates = classifier_rates(joint, clf)
    return float(np.max(np.abs(rates[:, 0] - rates[:, 1])))


def fair_lp(joint: DiscreteJoint, eps: float) -> LpInstance:
    """Accuracy-maximization LP over q in [0,1]^K with both EO gaps bounded by ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise FairboundError(f"eps={eps!r} outside [0, 1]")
    _require_cells(joint)
    xy = joint.xy
    rows = []
    for y in (0, 1):
        gap = joint.cell_conditional(y, 0) - joint.cell_conditional(y, 1)
        rows.append((gap, "<=", eps))
        rows.append((-gap, "<=", eps))
    return LpInstance(objective=xy[:, 1] - xy[:, 0], constraint_rows=tuple(rows),
                      offset=float(xy[:, 0].sum()))


def optimal_fair_accuracy(joint: DiscreteJoint, eps: float, tol: float = 1e-10,
                          max_iter: int = 10_000) -> tuple[float, RandomizedClassifier]:
    lp = fair_lp(joint, eps)
    c, a_ub, b_ub = lp.standard_form()
    res = simplex_max(c, a_ub, b_ub, tol=tol, max_iter=max_iter)
    clf = RandomizedClassifier(res.x)
    return classifier_accuracy(joint, clf), clf


@dataclass(frozen=True)
class SkewControls:
    """Knobs for :func:`random_joint`.

    ``alpha`` fixes P(Y=1); ``eta``/``gamma`` fix P(Z=a | Y=1) and P(Z=a | Y=0)
    (``beta`` alone sets both).  ``disparity`` in [0, 1] blends group b's
    conditionals away from group a's; 0 mirrors the groups exactly.
    """

    alpha: float | None = None
    beta: float | None = None
    eta: float | None = None
    gamma: float | None = None
    disparity: float = 1.0
    concentration: float = 1.0


SYMMETRIC = SkewControls(disparity=0.0)


def random_joint(seed: int, K: int, skew_controls: SkewControls | str | None = None) -> DiscreteJoint:
    if K < 2:
        raise FairboundError("support size K must be at least 2")
    if skew_controls == "symmetric":
        ctl = SYMMETRIC
    elif skew_controls is None:
        ctl = SkewControls()
    elif isinstance(skew_controls, SkewControls):
        ctl = skew_controls
    else:
        raise FairboundError(f"unknown skew controls {skew_controls!r}")
    rng = np.random.default_rng(seed)
    alpha = ctl.alpha if ctl.alpha is not None else rng.uniform(0.15, 0.85)
    eta = ctl.eta if ctl.eta is not None else (ctl.beta if ctl.beta is not None else rng.uniform(0.1, 0.9))
    gamma = ctl.gamma if ctl.gamma is not None else (ctl.beta if ctl.beta is not None else rng.uniform(0.1, 0.9))

    conc = np.full(K, ctl.concentration)
    mass = np.empty((K, 2, 2))
    for y, py in ((0, 1.0 - alpha), (1, alpha)):
        pa = eta if y == 1 else gamma
        cond_a = rng.dirichlet(conc)
        cond_b = (1.0 - ctl.disparity) * cond_a + ctl.disparity * rng.dirichlet(conc)
        mass[:, y, 0] = py * pa * cond_a
        mass[:, y, 1] = py * (1.0 - pa) * cond_b
    mass /= mass.sum()
    return DiscreteJoint(mass)


JOINT_HEADER = "x,y,z,mass"


def dump_joint(joint: DiscreteJoint) -> str:
    """Plain-text table, one (x, y, z) row per line; masses round-trip exactly."""
    out = io.StringIO()
    out.write(JOINT_HEADER + "\n")
    K = joint.support_size
    for x in range(K):
        for y in (0, 1):
            for z in (0, 1):
                out.write(f"{x},{y},{GROUPS[z]},{float(joint.mass[x, y, z])!r}\n")
    return out.getvalue()


def parse_joint(text: str) -> DiscreteJoint:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != JOINT_HEADER:
        raise FairboundError(f"joint table must start with header {JOINT_HEADER!r}")
    entries = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            xs, ys, zs, ms = line.split(",")
            key = (int(xs), int(ys), GROUPS.index(zs))
            entries[key] = float(ms)
        except ValueError:
            raise FairboundError(f"line {lineno}: cannot parse {line!r}") from None
    K = max(k[0] for k in entries) + 1
    mass = np.zeros((K, 2, 2))
    for (x, y, z), m in entries.items():
        mass[x, y, z] = m
    return DiscreteJoint(mass)


def save_joint(joint: DiscreteJoint, path) -> None:
    Path(path).write_text(dump_joint(joint))


def load_joint(path) -> DiscreteJoint:
    return parse_joint(Path(path).read_text())
