"""Command-line entry point: ``fairbound <command> [flags]``.

Every command writes its outputs into ``--out`` only after all work has
finished, and leaves a ``<command>.manifest`` key-value sidecar recording the
resolved configuration, seeds, input digests and tool version.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundParams, bound_curve, eo_bound, parse_grid, unconstrained_bound
from .core import FairboundError, compute_group_stats
from .data import group_conditional_samples, load_split, read_samples, resolve_schema
from .divergence import EstimatorConfig, estimate_tv_variational
from .fairtrain import RegularizerKind, TrainConfig, sweep
from .oracle import bayes_classifier, exact_params, optimal_fair_accuracy, random_joint, save_joint
from . import synthetic

log = logging.getLogger("fairbound")

PARAM_FIELDS = ("alpha", "beta", "dtv_P0_P1", "dtv_P0a_P1a", "dtv_P0b_P1b", "bound_eps_0", "bound_eps_0.05")
CURVE_HEADER = ("epsilon", "thm2_value", "active_branch", "thm1_value", "effective_value")
SWEEP_HEADER = ("regularizer", "lambda", "seed", "train_acc", "test_acc", "train_deo", "test_deo")
VERIFY_HEADER = ("seed", "K", "epsilon", "lp_accuracy", "bayes_accuracy", "thm1_value",
                 "thm2_value", "effective_value", "gap", "status")
VIOLATION_TOL = 1e-9


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def kv_text(pairs) -> str:
    return "".join(f"{k} = {fmt(v)}\n" for k, v in pairs)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects outputs in memory and commits them atomically with a manifest."""

    def __init__(self, command: str, args: argparse.Namespace, inputs=()):
        self.command = command
        self.args = args
        self.inputs = [p for p in inputs if p]
        self.outputs: dict[str, str] = {}
        self.started = time.perf_counter()
        self.out_dir = Path(args.out)

    def add(self, name: str, text: str) -> None:
        self.outputs[name] = text

    def manifest(self) -> str:
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "verbose")}
        pairs = [("command", self.command), ("tool_version", __version__)]
        pairs += [(f"config.{k}", v) for k, v in config.items()]
        seeds = _seeds_of(self.args)
        pairs += [("seeds", f"{seeds[0]}..{seeds[-1]}" if len(seeds) > 3 else ",".join(map(str, seeds)))]
        pairs += [(f"input_sha256.{Path(p).name}", file_digest(p)) for p in self.inputs]
        pairs += [(f"output_sha256.{name}", hashlib.sha256(text.encode()).hexdigest())
                  for name, text in sorted(self.outputs.items())]
        pairs += [("duration_seconds", f"{time.perf_counter() - self.started:.3f}")]
        return kv_text(pairs)

    def commit(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        files = dict(self.outputs)
        files[f"{self.command}.manifest"] = self.manifest()
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, self.out_dir / name)


def _seeds_of(args) -> list[int]:
    if hasattr(args, "n_seeds"):
        return list(range(args.seed, args.seed + args.n_seeds))
    if hasattr(args, "seeds"):
        return _int_list(args.seeds)
    return [args.seed]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _estimator_cfg(args, offset: int = 0) -> EstimatorConfig:
    return EstimatorConfig(learning_rate=args.lr, max_iters=args.iters, seed=args.seed + offset)


def _split_kwargs(args) -> dict:
    if args.counts:
        n_train, n_test = _int_list(args.counts)
        return {"counts": (n_train, n_test)}
    return {"train_fraction": args.train_fraction}


def estimate_params(train, cfg_for) -> BoundParams:
    """α, β from counts and the three TVs from the variational estimator."""
    stats = compute_group_stats(train)
    samples = group_conditional_samples(train)
    tv = [estimate_tv_variational(p, q, cfg_for(i)).value
          for i, (p, q) in enumerate((samples.pair_global(), samples.pair_group("a"), samples.pair_group("b")))]
    return BoundParams(stats.alpha, stats.beta, *tv)


def params_pairs(params: BoundParams) -> list[tuple[str, float]]:
    return list(zip(PARAM_FIELDS, (
        params.alpha, params.beta, params.dtv_global, params.dtv_a, params.dtv_b,
        eo_bound(params, 0.0)[0], eo_bound(params, 0.05)[0],
    )))


def read_params(path) -> BoundParams:
    values = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            values[k.strip()] = float(v)
    try:
        return BoundParams(values["alpha"], values["beta"], values["dtv_P0_P1"],
                           values["dtv_P0a_P1a"], values["dtv_P0b_P1b"])
    except KeyError as exc:
        raise FairboundError(f"{path}: missing parameter {exc.args[0]!r}") from None


def cmd_params(args) -> int:
    schema = resolve_schema(args.schema)
    train, _, report = load_split(args.data, schema, seed=args.split_seed, **_split_kwargs(args))
    log.info("loaded %d rows (%d dropped), %d features", report.rows_kept, report.rows_dropped,
             report.n_features_after_encoding)
    params = estimate_params(train, lambda i: _estimator_cfg(args, i))
    pairs = params_pairs(params)
    name = args.name or schema.name or Path(args.data).stem

    run = Run("params", args, [args.data, args.schema if Path(args.schema).is_file() else None])
    run.add("params.txt", kv_text(pairs))
    # summary.csv accumulates one row per dataset name across runs into the same --out
    summary_path = Path(args.out) / "summary.csv"
    rows = {}
    if summary_path.is_file():
        with open(summary_path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows[row["dataset"]] = [row["dataset"]] + [row[f] for f in PARAM_FIELDS]
    rows[name] = [name] + [fmt(v) for _, v in pairs]
    run.add("summary.csv", csv_text(("dataset",) + PARAM_FIELDS, [rows[k] for k in sorted(rows)]))
    run.commit()
    sys.stdout.write(kv_text(pairs))
    return 0


def cmd_bounds(args) -> int:
    inputs = []
    if args.params:
        params = read_params(args.params)
        inputs.append(args.params)
    elif args.data:
        if not args.schema:
            raise FairboundError("--data needs --schema")
        train, _, _ = load_split(args.data, args.schema, seed=args.split_seed, **_split_kwargs(args))
        params = estimate_params(train, lambda i: _estimator_cfg(args, i))
        inputs.append(args.data)
    else:
        try:
            params = BoundParams(args.alpha, args.beta, args.dtv_global, args.dtv_a, args.dtv_b)
        except TypeError:
            raise FairboundError("give --params, --data/--schema, or all of --alpha --beta "
                                 "--dtv-global --dtv-a --dtv-b") from None
    curve = bound_curve(params, parse_grid(args.eps_grid))
    ceiling = curve.unconstrained_value
    rows = [(e, v, br, ceiling, min(v, ceiling))
            for e, v, br in zip(curve.epsilons, curve.eo_bound_values, curve.active_branch)]
    run = Run("bounds", args, inputs)
    run.add("curve.csv", csv_text(CURVE_HEADER, rows))
    run.commit()
    log.info("wrote %d curve rows", len(rows))
    return 0


def cmd_sweep(args) -> int:
    kinds = [RegularizerKind.parse(k) for k in args.regularizer.split(",")]
    lambdas = _float_list(args.lambdas)
    train, test, _ = load_split(args.data, args.schema, seed=args.split_seed, **_split_kwargs(args))
    rows = []
    for kind in kinds:
        for seed in _int_list(args.seeds):
            base = TrainConfig(kind, 0.0, args.lr, args.epochs, seed)
            for pt in sweep(train, test, kind, lambdas, base):
                rows.append((kind.value, pt.lam, seed, pt.train_accuracy, pt.test_accuracy,
                             pt.train_delta_eo, pt.test_delta_eo))
    run = Run("sweep", args, [args.data])
    run.add("tradeoff.csv", csv_text(SWEEP_HEADER, rows))
    run.commit()
    log.info("wrote %d tradeoff rows", len(rows))
    return 0


def verify_rows(seeds, K: int, eps_grid, symmetric: bool = False, lp_tol: float = 1e-10):
    rows, violations = [], 0
    for seed in seeds:
        joint = random_joint(seed, K, "symmetric" if symmetric else None)
        params = exact_params(joint)
        _, bayes_acc = bayes_classifier(joint)
        ceiling = unconstrained_bound(params.alpha, params.dtv_global)
        for eps in eps_grid:
            acc, _ = optimal_fair_accuracy(joint, float(eps), tol=lp_tol)
            eo_value, _ = eo_bound(params, float(eps))
            eff = min(ceiling, eo_value)
            ok = acc <= eff + VIOLATION_TOL
            violations += not ok
            rows.append((seed, K, float(eps), acc, bayes_acc, ceiling, eo_value, eff, eff - acc,
                         "pass" if ok else "FAIL"))
    return rows, violations


def cmd_verify(args) -> int:
    seeds = range(args.seed, args.seed + args.n_seeds)
    rows, violations = verify_rows(seeds, args.K, parse_grid(args.eps_grid), args.symmetric, args.lp_tol)
    summary = (f"{len(rows)} comparisons, {violations} violations beyond {VIOLATION_TOL:g}, "
               f"min gap {min(r[8] for r in rows):.3g}\n")
    run = Run("verify", args)
    run.add("verify.csv", csv_text(VERIFY_HEADER, rows))
    run.add("verify_summary.txt", summary)
    run.commit()
    sys.stdout.write(summary)
    return 0 if violations == 0 else 1


def cmd_estimate_tv(args) -> int:
    p, q = read_samples(args.p), read_samples(args.q)
    est = estimate_tv_variational(p, q, _estimator_cfg(args))
    run = Run("estimate-tv", args, [args.p, args.q])
    run.add("tv_trace.csv", csv_text(("iteration", "objective"), enumerate(est.final_objective_trace)))
    run.add("tv_estimate.txt", kv_text([("value", est.value), ("iterations", est.iterations_run),
                                        ("seed", est.seed), ("samples_p", est.sample_sizes[0]),
                                        ("samples_q", est.sample_sizes[1])]))
    run.commit()
    sys.stdout.write(f"value = {fmt(est.value)}\niterations = {est.iterations_run}\nseed = {est.seed}\n")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "gaussian":
        from .data import write_samples
        p, q = synthetic.gaussian_pair(args.n, args.seed, 0.0, args.mean_gap)
        write_samples(p, out / "p.csv")
        write_samples(q, out / "q.csv")
    elif args.kind == "skewed":
        data = synthetic.make_skewed_synthetic(args.n, args.seed)
        synthetic.write_skewed_csv(data, out / "data.csv")
        (out / "schema.ini").write_text(synthetic.skewed_schema(data.n_features))
    else:
        joint = random_joint(args.seed, args.K, "symmetric" if args.symmetric else None)
        synthetic.write_joint_csv(joint, args.n, args.seed, out / "data.csv")
        (out / "schema.ini").write_text(synthetic.JOINT_SCHEMA)
        save_joint(joint, out / "joint.txt")
    return 0


def _add_estimator_flags(p) -> None:
    p.add_argument("--seed", type=int, default=0, help="estimator seed (default 0)")
    p.add_argument("--lr", type=float, default=EstimatorConfig.learning_rate)
    p.add_argument("--iters", type=int, default=EstimatorConfig.max_iters)


def _add_data_flags(p, required: bool) -> None:
    p.add_argument("--data", required=required, help="comma-delimited input file with header")
    p.add_argument("--schema", required=required, help="schema INI path or bundled name (compas, adult, lawschool)")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--counts", help="explicit split sizes 'n_train,n_test'")
    p.add_argument("--split-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="estimate alpha, beta, the three TVs and bounds at eps 0 and 0.05")
    _add_data_flags(p, required=True)
    _add_estimator_flags(p)
    p.add_argument("--name", help="row key in the summary CSV (default: schema name)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bounds", help="evaluate both bounds over an eps grid")
    p.add_argument("--params", help="key-value file written by 'params'")
    for flag in ("--alpha", "--beta", "--dtv-global", "--dtv-a", "--dtv-b"):
        p.add_argument(flag, type=float)
    _add_data_flags(p, required=False)
    _add_estimator_flags(p)
    p.add_argument("--eps-grid", default="0:0.01:0.3", help="start:step:stop (inclusive)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="train fair classifiers over a lambda grid")
    _add_data_flags(p, required=True)
    p.add_argument("--regularizer", default="c1,c2,c3", help="comma list from c1, c2, c3")
    p.add_argument("--lambdas", default="0,0.5,1,2,5,10")
    p.add_argument("--seeds", default="0", help="comma list of training seeds")
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check LP-optimal fair accuracy against the bounds on random joints")
    p.add_argument("--seed", type=int, default=0, help="first joint seed")
    p.add_argument("--n-seeds", type=int, default=200)
    p.add_argument("--K", type=int, default=6)
    p.add_argument("--eps-grid", default="0:0.05:0.5")
    p.add_argument("--symmetric", action="store_true", help="mirror group conditionals")
    p.add_argument("--lp-tol", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate-tv", help="variational TV estimate between two sample files")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    _add_estimator_flags(p)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_estimate_tv)

    p = sub.add_parser("synth", help="write seeded synthetic fixture files")
    p.add_argument("kind", choices=("gaussian", "skewed", "discrete"))
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=int, default=6)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--mean-gap", type=float, default=2.0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FairboundError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
