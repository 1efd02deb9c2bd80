"""Command-line entry point: ``fcmad {synth,detect,tune,eval,baseline}``.

Failures print one line ``error: <kind>: <message>`` on stderr. Usage
problems, bad specs and unreadable files exit with 2, other pipeline
errors with 1.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .detector import DetectorConfig, detect, tune_parameters
from .errors import FcmadError, InvalidSpecError
from .evaluation import best_threshold, binarize, detect_standard_fcm, knn_detect, metrics
from .io import (
    RunManifest,
    file_digest,
    parse_csv,
    read_labels,
    read_scores,
    write_fgrid,
    write_labels,
    write_scores,
    write_series,
    write_subsequence_scores,
)
from .pso import PsoConfig
from .series import WindowSpec
from . import synthetic

USAGE_KINDS = {"usage", "invalid-spec", "invalid-config", "io-error"}


class UsageError(FcmadError):
    kind = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def worker_count() -> int:
    raw = os.environ.get("MTS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"MTS_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("MTS_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _int_range(text: str) -> list[int]:
    """``a:b`` or ``a:b:step`` (inclusive), or a comma list."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use a:b, a:b:step or a,b,c") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _add_model_flags(p, grid=False):
    p.add_argument("--input", required=True, help="series CSV (header, one row per timestamp)")
    if grid:
        p.add_argument("--stride", type=int, default=1, help="window step r for every grid cell")
    else:
        p.add_argument("--window", type=int, default=5, help="subsequence length q")
        p.add_argument("--stride", type=int, default=None, help="window step r (default 1)")
        p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--fuzzifier", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", default="fcmad")


def _add_pso_flags(p):
    p.add_argument("--mode", choices=("amplitude", "shape"), default="amplitude")
    p.add_argument("--pso-particles", type=int, default=30)
    p.add_argument("--pso-iters", type=int, default=50)
    p.add_argument("--weights", type=_floats, default=None, help="fixed variable weights; skips the swarm search")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcmad", description="Fuzzy-clustering anomaly detection for multivariate time series.")
    parser.add_argument("--version", action="version", version=f"fcmad {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic series and its labels")
    p.add_argument("--kind", choices=("ecg", "relational", "regime"), default="ecg")
    p.add_argument("--length", type=int, default=500)
    p.add_argument("--rates", type=_floats, default=(60.0, 80.0, 90.0), help="heart rates in bpm, one per variable")
    p.add_argument("--injection", choices=("amplitude", "shape", "none"), default="amplitude")
    p.add_argument("--count", type=int, default=3, help="number of injected intervals")
    p.add_argument("--interval-length", type=int, default=5)
    p.add_argument("--factor-range", type=_floats, default=None, help="lo,hi (default 0,3 amplitude; 1,3 shape)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", default="synthetic")

    p = sub.add_parser("detect", help="score a series")
    _add_model_flags(p)
    _add_pso_flags(p)
    p.add_argument("--manifest", default=None, help="reuse the configuration recorded in a previous run")

    p = sub.add_parser("tune", help="confidence-index grid over clusters and window lengths")
    _add_model_flags(p, grid=True)
    _add_pso_flags(p)
    p.add_argument("--labels", required=True, help="ground-truth CSV with columns t,label")
    p.add_argument("--clusters-range", type=_int_range, default=[2, 3, 4, 5, 6])
    p.add_argument("--window-range", type=_int_range, default=[5, 10, 15, 20])

    p = sub.add_parser("eval", help="metrics of thresholded scores against labels")
    p.add_argument("--scores", required=True, help="per-timestamp scores CSV (t,point_score)")
    p.add_argument("--truth", required=True, help="labels CSV (t,label)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--threshold", type=float)
    g.add_argument("--best-threshold", action="store_true")

    p = sub.add_parser("baseline", help="score a series with a reference detector")
    _add_model_flags(p)
    p.add_argument("--method", choices=("knn", "fcm"), required=True)
    p.add_argument("--exclusion", type=int, default=None, help="knn trivial-match zone (default: window length)")
    return parser


def _window(args, fallback_stride=1) -> WindowSpec:
    return WindowSpec(args.window, fallback_stride if args.stride is None else args.stride)


def _detector_config(args, c=None, window=None) -> DetectorConfig:
    return DetectorConfig(
        mode=args.mode,
        c=args.clusters if c is None else c,
        m=args.fuzzifier,
        window=_window(args) if window is None else window,
        pso=PsoConfig.desk(particles=args.pso_particles, max_iter=args.pso_iters, seed=args.seed),
        seed=args.seed,
        weights=args.weights,
    )


def _write_outputs(prefix, scores) -> dict:
    out = {"point_scores": f"{prefix}_scores.csv", "subsequence_scores": f"{prefix}_subsequences.csv"}
    write_scores(scores, out["point_scores"])
    write_subsequence_scores(scores, out["subsequence_scores"])
    return out


def _manifest(command, config, args, outputs, results, t0) -> None:
    m = RunManifest(
        command=command,
        config=config,
        input_sha256=file_digest(args.input),
        input_path=str(args.input),
        outputs=outputs,
        results=results,
        duration_s=round(time.perf_counter() - t0, 3),
    )
    path = f"{args.out_prefix}_manifest.json"
    m.write(path)
    outputs["manifest"] = path


def cmd_detect(args) -> int:
    t0 = time.perf_counter()
    series = parse_csv(args.input)
    if args.manifest:
        recorded = RunManifest.read(args.manifest)
        config = DetectorConfig.from_dict(recorded.config)
        if recorded.input_sha256 and recorded.input_sha256 != file_digest(args.input):
            logging.getLogger("fcmad").warning("input differs from the one recorded in %s", args.manifest)
    else:
        config = _detector_config(args)
    res = detect(series, config, workers=worker_count())
    outputs = _write_outputs(args.out_prefix, res)
    results = {
        "weights": res.weights_used.tolist(),
        "objective": res.model.objective,
        "iterations": res.model.iterations_run,
        "converged": res.model.converged,
        "max_score_start": int(res.starts[int(np.argmax(res.per_subsequence))]),
    }
    if res.pso is not None:
        results["pso_best_fitness"] = res.pso.best_fitness
        results["pso_evaluations"] = res.pso.evaluations
    _manifest("detect", config.to_dict(), args, outputs, results, t0)
    print("weights " + " ".join(f"{w:.4f}" for w in res.weights_used))
    print(f"windows {len(res.starts)}  top window starts at t={results['max_score_start']}")
    for name in ("point_scores", "subsequence_scores", "manifest"):
        print(f"wrote {outputs[name]}")
    return 0


def cmd_tune(args) -> int:
    t0 = time.perf_counter()
    series = parse_csv(args.input)
    labels = read_labels(args.labels)
    if labels.size != series.p:
        raise InvalidSpecError(f"labels have {labels.size} rows, series has {series.p}")
    # the grid overrides clusters and window; these only need to be valid
    base = _detector_config(args, c=2, window=WindowSpec(max(3, min(args.window_range)), 1))
    res = tune_parameters(
        series, args.mode, args.clusters_range, args.window_range, labels, base, stride=args.stride, workers=worker_count()
    )
    path = f"{args.out_prefix}_fgrid.csv"
    write_fgrid(res.rows(), path)
    outputs = {"fgrid": path}
    outputs.update(_write_outputs(args.out_prefix, res.best))
    config = base.to_dict()
    config["clusters_range"] = list(args.clusters_range)
    config["window_range"] = list(args.window_range)
    config["stride"] = args.stride
    _manifest("tune", config, args, outputs, {"clusters": res.c, "window": res.q, "confidence_index": res.grid[(res.c, res.q)]}, t0)
    print(f"best clusters={res.c} window={res.q} f={res.grid[(res.c, res.q)]:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_eval(args) -> int:
    scores = read_scores(args.scores)
    truth = read_labels(args.truth)
    if scores.size != truth.size:
        raise InvalidSpecError(f"{args.scores} has {scores.size} rows, {args.truth} has {truth.size}")
    if args.best_threshold:
        _, report = best_threshold(scores, truth)
    else:
        report = metrics(binarize(scores, args.threshold), truth, threshold=args.threshold)
    print(report.table())
    return 0


def cmd_baseline(args) -> int:
    t0 = time.perf_counter()
    series = parse_csv(args.input)
    window = _window(args)
    if args.method == "knn":
        starts, sub, per_point = knn_detect(series, window, args.exclusion)
        res = argparse.Namespace(starts=starts, per_subsequence=sub, per_point=per_point)
        config = {"method": "knn", "window": {"q": window.q, "r": window.r}, "exclusion": args.exclusion}
    else:
        cfg = DetectorConfig(c=args.clusters, m=args.fuzzifier, window=window, seed=args.seed)
        res = detect_standard_fcm(series, cfg)
        config = {"method": "fcm", **cfg.to_dict()}
    outputs = _write_outputs(args.out_prefix, res)
    _manifest("baseline", config, args, outputs, {}, t0)
    for name in ("point_scores", "subsequence_scores", "manifest"):
        print(f"wrote {outputs[name]}")
    return 0


def cmd_synth(args) -> int:
    if args.kind == "relational":
        series, log = synthetic.gen_relational(seed=args.seed)
    elif args.kind == "regime":
        series, log = synthetic.gen_regime_pair(seed=args.seed)
    else:
        series, log = synthetic.gen_ecg_experiment(
            args.injection,
            seed=args.seed,
            p=args.length,
            rates=args.rates,
            count=args.count,
            length=args.interval_length,
            factor_range=args.factor_range,
        )
    data_path = f"{args.out_prefix}.csv"
    label_path = f"{args.out_prefix}_labels.csv"
    write_series(series, data_path)
    write_labels(log.labels(series.p), label_path)
    for r in log:
        var = "" if r.variable is None else f" variable {series.variable_names[r.variable]}"
        factor = "" if r.factor is None else f" factor {r.factor:.4g}"
        print(f"{r.kind} [{r.start}, {r.end}){var}{factor}")
    print(f"wrote {data_path}")
    print(f"wrote {label_path}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "detect": cmd_detect,
    "tune": cmd_tune,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except FcmadError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 2 if exc.kind in USAGE_KINDS else 1


if __name__ == "__main__":
    sys.exit(main())
