"""``nnlms-lab`` command line: run manifests, print predictions, solve the constrained Wiener problem."""

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigError, EnsembleFailureError, NNLMSLabError, PredictedInstabilityError
from .manifest import bundled_manifest, parse_config
from .montecarlo import compare, run_ensemble, to_db
from .signal import Ar1Process, SystemModel
from .theory import build_correlation, emse_bias_term, kkt_residuals, predict, solve_constrained_wiener

# exit codes
OK, COMPARISON_FAILED, USAGE_ERROR, IO_ERROR = 0, 1, 2, 3


def _clean(obj):
    """Make ``obj`` strict-JSON serialisable: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def trajectory_csv(trajectory):
    """CSV text with columns ``iteration,emse,emse_db``; floats use shortest round-trip repr."""
    lines = ["iteration,emse,emse_db"]
    for n, value in enumerate(trajectory.tolist()):
        lines.append(f"{n},{value!r},{to_db(value)!r}")
    return "\n".join(lines) + "\n"


def _config_dict(config):
    alg = config.algorithm
    return {
        "kind": alg.kind.value,
        "step_size": alg.step_size,
        "regularizer": alg.regularizer,
        "exponent": alg.exponent,
        "true_weights": config.system.true_weights.tolist(),
        "noise_variance": config.system.noise_variance,
        "pole": config.process.pole,
        "innovation_variance": config.process.innovation_variance,
        "initial_weights": config.initial_weights.tolist(),
        "iterations": config.iterations,
        "runs": config.runs,
        "base_seed": config.base_seed,
        "steady_window_fraction": config.steady_window_fraction,
        "divergence_bound": config.weight_bound,
    }


def run_entry(entry, mean_weights="nnls", tolerance_db=1.0, backend=None):
    """Theory, simulation and comparison for one manifest entry.

    Returns ``(report, trajectory)``; ``trajectory`` is ``None`` when the
    ensemble failed. Predicted instability and ensemble failure are recorded
    in the report rather than raised.
    """
    config = entry.config
    corr = build_correlation(config.process, config.system.order)
    report = {
        "name": entry.name,
        "config": _config_dict(config),
        "mean_weights_source": mean_weights,
        "backend": backend or _kernels.backend(),
        "prediction": None,
        "ensemble": None,
        "comparison": None,
        "errors": [],
    }
    result = None
    try:
        result = run_ensemble(config, backend=backend)
        report["ensemble"] = result.summary()
    except EnsembleFailureError as exc:
        report["errors"].append({"type": "ensemble-failure", "message": str(exc)})

    prediction = None
    try:
        if mean_weights == "empirical":
            if result is None:
                raise EnsembleFailureError("empirical mean weights need a completed ensemble")
            prediction = predict(config.algorithm, config.system, corr, mean_weights=result.final_mean_weights)
        else:
            prediction = predict(config.algorithm, config.system, corr)
        report["prediction"] = prediction.to_dict()
    except PredictedInstabilityError as exc:
        report["errors"].append(
            {"type": "predicted-instability", "message": str(exc), "step_size": exc.step_size, "trace": exc.trace}
        )
    except EnsembleFailureError as exc:
        report["errors"].append({"type": "prediction-unavailable", "message": str(exc)})

    if result is not None and prediction is not None:
        report["comparison"] = compare(result, prediction, tolerance_db).to_dict()
    report["passed"] = bool(report["comparison"] and report["comparison"]["passed"] and not report["errors"])
    trajectory = result.emse_trajectory if result is not None else None
    return report, trajectory


def run_manifest(manifest, out_dir=None, tolerance_db=None, seed=None, backend=None, log=None):
    """Run every manifest entry and write its artifacts.

    Writes ``<name>-trajectory.csv`` and ``<name>-report.json`` per entry
    (as selected by ``manifest.emit``). Returns the exit status: 0 iff every
    comparison passed and no ensemble failed.
    """
    out = Path(out_dir) if out_dir is not None else manifest.outputs
    tol = manifest.tolerance_db if tolerance_db is None else float(tolerance_db)
    out.mkdir(parents=True, exist_ok=True)
    status = OK
    for entry in manifest.entries:
        if seed is not None:
            entry = replace(entry, config=replace(entry.config, base_seed=int(seed)))
        report, trajectory = run_entry(entry, manifest.mean_weights, tol, backend)
        if "trajectory-csv" in manifest.emit and trajectory is not None:
            write_atomic(out / f"{entry.name}-trajectory.csv", trajectory_csv(trajectory))
        if "report-json" in manifest.emit:
            write_atomic(out / f"{entry.name}-report.json", dumps(report))
        if not report["passed"]:
            status = COMPARISON_FAILED
        if log is not None:
            log(_summary_line(report))
    return status


def _summary_line(report):
    comp = report["comparison"]
    if comp is None:
        kinds = ", ".join(e["type"] for e in report["errors"])
        return f"{report['name']}: FAIL ({kinds})"
    verdict = "PASS" if report["passed"] else "FAIL"
    return (
        f"{report['name']}: {verdict} simulated={comp['simulated']:.6g} predicted={comp['predicted']:.6g} "
        f"diff={comp['difference_db']:+.3f} dB stderr={comp['stderr']:.3g}"
    )


def _resolve_manifest(path):
    p = Path(path)
    if not p.exists() and bundled_manifest(p.name).exists() and p.parent == Path("."):
        return bundled_manifest(p.name)
    return p


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _cmd_run(args):
    manifest = parse_config(_resolve_manifest(args.manifest))
    return run_manifest(
        manifest, out_dir=args.out, tolerance_db=args.tolerance_db, seed=args.seed,
        log=lambda line: print(line, flush=True),
    )


def _cmd_predict(args):
    manifest = parse_config(_resolve_manifest(args.manifest))
    status = OK
    out = {"manifest": manifest.name, "mean_weights_source": "nnls", "predictions": {}}
    for entry in manifest.entries:
        cfg = entry.config
        corr = build_correlation(cfg.process, cfg.system.order)
        try:
            out["predictions"][entry.name] = predict(cfg.algorithm, cfg.system, corr).to_dict()
        except PredictedInstabilityError as exc:
            out["predictions"][entry.name] = {"error": "predicted-instability", "message": str(exc)}
            status = COMPARISON_FAILED
    sys.stdout.write(dumps(out))
    return status


def _cmd_nnls(args):
    model = SystemModel(args.weights, args.noise)
    process = Ar1Process(args.pole, args.var)
    corr = build_correlation(process, model.order)
    solution = solve_constrained_wiener(model, corr)
    out = {
        "constrained_weights": solution.tolist(),
        "kkt_residuals": kkt_residuals(solution, model.true_weights, corr),
        "emse_bias": emse_bias_term(solution - model.true_weights, corr),
        "input_variance": corr.input_variance,
    }
    sys.stdout.write(dumps(out))
    return OK


def build_parser():
    parser = argparse.ArgumentParser(prog="nnlms-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate every manifest entry and compare with theory")
    run.add_argument("manifest", help="manifest JSON (the bundled 'paper-fig1.json' is found by name)")
    run.add_argument("--out", type=Path, default=None, help="output directory (overrides the manifest)")
    run.add_argument("--tolerance-db", type=float, default=None)
    run.add_argument("--seed", type=int, default=None, help="base seed (overrides the manifest)")
    run.set_defaults(func=_cmd_run)

    pred = sub.add_parser("predict", help="print steady-state predictions without simulating")
    pred.add_argument("manifest")
    pred.set_defaults(func=_cmd_predict)

    nnls = sub.add_parser("nnls", help="constrained Wiener solution for an AR(1) input")
    nnls.add_argument("--weights", type=_floats, required=True, help="true weights, comma separated")
    nnls.add_argument("--pole", type=float, required=True)
    nnls.add_argument("--var", type=float, required=True, help="innovation variance")
    nnls.add_argument("--noise", type=float, default=0.0, help="noise variance")
    nnls.set_defaults(func=_cmd_nnls)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"nnlms-lab: config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"nnlms-lab: I/O error: {exc}", file=sys.stderr)
        return IO_ERROR
    except NNLMSLabError as exc:
        print(f"nnlms-lab: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
