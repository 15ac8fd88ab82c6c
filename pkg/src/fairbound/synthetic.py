"""Seeded synthetic generators: skewed Gaussian groups, discrete joints, TV fixtures."""

from __future__ import annotations

import csv

import numpy as np
from scipy.stats import norm

from .core import GROUPS, LabeledDataset
from .oracle import DiscreteJoint


def make_skewed_synthetic(n: int, seed: int, beta: float = 0.3,
                          base_rate_a: float = 0.6, base_rate_b: float = 0.35,
                          separation_a: float = 2.5, separation_b: float = 1.0,
                          group_shift: float = 1.0, d: int = 3) -> LabeledDataset:
    """Two groups whose labels are easier to predict in group a than in group b.

    Labels correlate with group membership and one feature carries a group
    shift, so an unconstrained linear classifier violates equalized odds.
    """
    rng = np.random.default_rng(seed)
    in_a = rng.random(n) < beta
    y = (rng.random(n) < np.where(in_a, base_rate_a, base_rate_b)).astype(int)
    x = rng.normal(size=(n, d))
    sep = np.where(in_a, separation_a, separation_b)
    x[:, 0] += (y - 0.5) * sep
    if d > 1:
        x[:, 1] += group_shift * in_a + 0.5 * (y - 0.5)
    groups = np.where(in_a, "a", "b")
    return LabeledDataset(x, y, groups, tuple(f"x{j}" for j in range(d)))


def sample_joint(joint: DiscreteJoint, n: int, seed: int):
    """Draw n i.i.d. (x, y, z) triples; returns integer arrays (x, y, z_index)."""
    rng = np.random.default_rng(seed)
    flat = joint.mass.reshape(-1)
    draws = rng.choice(flat.size, size=n, p=flat / flat.sum())
    x, rest = np.divmod(draws, 4)
    y, z = np.divmod(rest, 2)
    return x, y, z


def one_hot(codes: np.ndarray, K: int) -> np.ndarray:
    return np.eye(K)[codes]


def joint_dataset(joint: DiscreteJoint, n: int, seed: int) -> LabeledDataset:
    """Samples of a discrete joint with x one-hot encoded."""
    x, y, z = sample_joint(joint, n, seed)
    K = joint.support_size
    return LabeledDataset(one_hot(x, K), y, np.array(GROUPS)[z], tuple(f"x={k}" for k in range(K)))


def write_joint_csv(joint: DiscreteJoint, n: int, seed: int, path) -> None:
    """Write joint samples as a raw CSV with columns x (categorical), label, group."""
    x, y, z = sample_joint(joint, n, seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "label", "group"])
        for xi, yi, zi in zip(x, y, z):
            w.writerow([f"v{xi}", int(yi), GROUPS[zi]])


JOINT_SCHEMA = """\
[dataset]
name = discrete
label_column = label
label_positive_value = 1
label_negative_value = 0
group_column = group
group_a_value = a

[features]
x = categorical
"""


def write_skewed_csv(data: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.feature_names) + ["label", "group"])
        for i in range(len(data)):
            w.writerow([repr(float(v)) for v in data.features[i]] + [int(data.labels[i]), data.groups[i]])


def skewed_schema(d: int = 3) -> str:
    feats = "\n".join(f"x{j} = numeric" for j in range(d))
    return JOINT_SCHEMA.replace("name = discrete", "name = skewed").replace("x = categorical", feats)


def gaussian_pair(n: int, seed: int, mean_p: float = 0.0, mean_q: float = 2.0):
    rng = np.random.default_rng(seed)
    return rng.normal(mean_p, 1.0, (n, 1)), rng.normal(mean_q, 1.0, (n, 1))


def gaussian_tv(mean_gap: float) -> float:
    """Closed-form TV between unit-variance Gaussians whose means differ by ``mean_gap``."""
    return float(2.0 * norm.cdf(abs(mean_gap) / 2.0) - 1.0)
