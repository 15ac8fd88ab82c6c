"""Exhaustive grid search for the best EO-constrained accuracy on a K=4 joint.

Independent of the package: works straight from the (K, 2, 2) mass array.
A grid point is accepted when each EO gap is within eps plus half a grid
step times the row's coefficient mass, so the point nearest the true
optimum is never filtered out by rounding to the grid.

Run as a script to regenerate the frozen table in tests/data/grid_oracle.csv.
"""

import sys
from pathlib import Path

import numpy as np

STEP = 0.01


def _rows(mass):
    cell = mass.sum(axis=0)
    xy = mass.sum(axis=2)
    objective = xy[:, 1] - xy[:, 0]
    offset = xy[:, 0].sum()
    gaps = [mass[:, y, 0] / cell[y, 0] - mass[:, y, 1] / cell[y, 1] for y in (0, 1)]
    return objective, offset, gaps


def grid_optimum(mass, eps_values, step=STEP):
    mass = np.asarray(mass, float)
    assert mass.shape == (4, 2, 2)
    objective, offset, gaps = _rows(mass)
    g = np.round(np.arange(0, 1 + step / 2, step), 12)
    tau = [0.5 * step * np.abs(a).sum() for a in gaps]

    def tail(v):
        return v[1] * g[:, None, None] + v[2] * g[None, :, None] + v[3] * g[None, None, :]

    obj_tail, gap_tails = tail(objective), [tail(a) for a in gaps]
    best = {e: -np.inf for e in eps_values}
    for q0 in g:
        obj = obj_tail + objective[0] * q0
        gap = [t + a[0] * q0 for t, a in zip(gap_tails, gaps)]
        for e in eps_values:
            ok = (np.abs(gap[0]) <= e + tau[0]) & (np.abs(gap[1]) <= e + tau[1])
            if ok.any():
                best[e] = max(best[e], float(obj[ok].max()))
    return {e: float(offset + v) for e, v in best.items()}


def main(out):
    sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))
    from fairbound.oracle import random_joint

    lines = ["seed,eps,grid_value"]
    for seed in range(20):
        mass = random_joint(seed, 4).mass
        for e, v in grid_optimum(mass, (0.0, 0.1)).items():
            lines.append(f"{seed},{e},{v!r}")
    Path(out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data" / "grid_oracle.csv")
