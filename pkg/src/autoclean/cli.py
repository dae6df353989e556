"""Command-line entry points: fit / transform / simulate / baseline /
bench / evaluate / review.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical error.
Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, methods, review, synth
from .core import (
    _canon_dumps,
    load_epochs,
    load_reject_log,
    save_epochs,
    save_reject_log,
)
from .errors import (
    AutocleanError,
    ContractError,
    NumericalError,
    ObjectiveError,
    ResampleError,
)
from .metrics import eval_l2, eval_linf, trial_mean
from .reject_global import (
    apply_global,
    fit_global,
    load_threshold_model,
    save_threshold_model,
)
from .reject_local import (
    LocalFitConfig,
    fit_local,
    load_local_model,
    save_local_model,
    transform,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (NumericalError, ObjectiveError, ResampleError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("AUTOCLEAN_SEED", "0"))


def _parse_budget(text: str):
    """'10+40' = initial+iterations; a bare int sets iterations."""
    if "+" in text:
        a, b = text.split("+", 1)
        return int(a), int(b)
    return 10, int(text)


def _parse_grid(text: str):
    return tuple(int(v) for v in text.split(",") if v)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="autoclean")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a synthetic bundle")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--sensors", type=int, default=32)
    sp.add_argument("--times", type=int, default=200)
    sp.add_argument("--sfreq", type=float, default=200.0)
    sp.add_argument("--artifact-amplitude", type=float, default=1e-4)
    sp.add_argument("--p-cell-artifact", type=float, default=0.0016)
    sp.add_argument("--global-bad-sensors", type=int, default=0)
    sp.add_argument("--blink-rate", type=float, default=0.0)
    sp.add_argument("--out", required=True)

    fg = sub.add_parser("fit-global", help="learn the global threshold")
    fg.add_argument("input")
    fg.add_argument("--k", type=int, default=5)
    fg.add_argument("--seed", type=int, default=None)
    fg.add_argument("--budget", default="10+40")
    fg.add_argument("--out", required=True)

    fl = sub.add_parser("fit-local", help="learn per-sensor thresholds")
    fl.add_argument("input")
    fl.add_argument("--k", type=int, default=5)
    fl.add_argument("--seed", type=int, default=None)
    fl.add_argument("--budget", default="10+40")
    fl.add_argument("--rho-grid", default=None)
    fl.add_argument("--kappa-grid", default=None)
    fl.add_argument("--out", required=True)

    tr = sub.add_parser("transform", help="apply a fitted local model")
    tr.add_argument("input")
    tr.add_argument("--model", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--log", required=True)

    ag = sub.add_parser("apply-global", help="apply a global threshold")
    ag.add_argument("input")
    ag.add_argument("--tau", type=float, required=True)
    ag.add_argument("--log", required=True)

    bl = sub.add_parser("baseline", help="run a competing method")
    bl.add_argument("method", choices=["faster", "sns", "ransac"])
    bl.add_argument("input")
    bl.add_argument("--mains-hz", type=float, default=50.0)
    bl.add_argument("--n-neighbors", type=int,
                    default=baselines.SNS_N_NEIGHBORS)
    bl.add_argument("--n-resamples", type=int,
                    default=baselines.RANSAC_N_RESAMPLES)
    bl.add_argument("--fraction", type=float,
                    default=baselines.RANSAC_FRACTION)
    bl.add_argument("--corr-threshold", type=float,
                    default=baselines.RANSAC_CORR_THRESHOLD)
    bl.add_argument("--unbroken-time", type=float,
                    default=baselines.RANSAC_UNBROKEN_TIME)
    bl.add_argument("--seed", type=int, default=None)
    bl.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", help="compare two bundles' evokeds")
    ev.add_argument("--metric", choices=["linf", "l2"], default="linf")
    ev.add_argument("a")
    ev.add_argument("b")

    be = sub.add_parser("bench", help="run the method comparison harness")
    be.add_argument("--config", default=None)
    be.add_argument("--methods", default="autoreject-local")
    be.add_argument("--metric", choices=["linf", "l2"], default="linf")
    be.add_argument("--seed", type=int, default=None)
    be.add_argument("--out", required=True)

    rv = sub.add_parser("review", help="human review loop")
    rvsub = rv.add_subparsers(dest="review_command", required=True)
    rs = rvsub.add_parser("serve")
    rs.add_argument("input")
    rs.add_argument("--log", required=True)
    rs.add_argument("--overrides", required=True)
    rs.add_argument("--port", type=int, default=8712)
    rs.add_argument("--host", default="127.0.0.1")
    rs.add_argument("--decimate", type=int, default=None)
    rs.add_argument("--static-dir", default=None)
    ra = rvsub.add_parser("apply")
    ra.add_argument("--log", required=True)
    ra.add_argument("--overrides", required=True)
    ra.add_argument("--names", default=None,
                    help="ERB file supplying sensor names")
    ra.add_argument("--out", required=True)
    return p


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _cmd_simulate(args) -> int:
    config = synth.SimConfig(
        n_trials=args.trials,
        n_sensors=args.sensors,
        n_times=args.times,
        sfreq_hz=args.sfreq,
        artifact_amplitude=args.artifact_amplitude,
        p_cell_artifact=args.p_cell_artifact,
        global_bad_sensors=args.global_bad_sensors,
        blink_rate=args.blink_rate,
        seed=_seed_of(args),
    )
    epochs, layout, _truth = synth.simulate(config)
    events = np.zeros(epochs.n_trials, dtype=np.int64)
    save_epochs(epochs, layout, events, args.out)
    return EXIT_OK


def _cmd_fit_global(args) -> int:
    epochs, _layout, _events = load_epochs(args.input)
    model, _ = fit_global(epochs, K=args.k, seed=_seed_of(args),
                          budget=_parse_budget(args.budget))
    save_threshold_model(model, args.out)
    print(f"{model.global_tau:.9e}")
    return EXIT_OK


def _cmd_fit_local(args) -> int:
    epochs, layout, _events = load_epochs(args.input)
    config = LocalFitConfig(
        K=args.k,
        seed=_seed_of(args),
        budget=_parse_budget(args.budget),
        rho_candidates=_parse_grid(args.rho_grid) if args.rho_grid else None,
        kappa_candidates=(_parse_grid(args.kappa_grid)
                          if args.kappa_grid else None),
    )
    model = fit_local(epochs, layout, config)
    save_local_model(model, args.out)
    print(f"rho_star={model.rho_star} kappa_star={model.kappa_star}")
    return EXIT_OK


def _cmd_transform(args) -> int:
    epochs, layout, events = load_epochs(args.input)
    model = load_local_model(args.model)
    cleaned, log = transform(epochs, layout, model)
    retained = ~log.rejected_mask
    save_epochs(cleaned, layout, events[retained], args.out)
    save_reject_log(log, args.log)
    return EXIT_OK


def _cmd_apply_global(args) -> int:
    epochs, _layout, _events = load_epochs(args.input)
    log = apply_global(epochs, args.tau)
    save_reject_log(log, args.log)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    epochs, layout, events = load_epochs(args.input)
    if args.method == "faster":
        report = baselines.faster_bad_sensors(epochs, layout,
                                              mains_hz=args.mains_hz)
        doc = {
            "version": 1,
            "method": "faster",
            "flagged": {name: sorted(s)
                        for name, s in report.flagged.items()},
            "union": sorted(report.union),
            "zscores": [[float(v) for v in row] for row in report.zscores],
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(doc))
    elif args.method == "sns":
        cleaned = baselines.sns_clean(epochs, n_neighbors=args.n_neighbors)
        save_epochs(cleaned, layout, events, args.out)
    else:
        per_trial, global_bad = baselines.ransac_bad_sensors(
            epochs, layout,
            n_resamples=args.n_resamples,
            fraction=args.fraction,
            corr_threshold=args.corr_threshold,
            unbroken_time=args.unbroken_time,
            seed=_seed_of(args),
        )
        doc = {
            "version": 1,
            "method": "ransac",
            "per_trial_bad": ["".join("1" if b else "0" for b in row)
                              for row in per_trial],
            "global_bad": sorted(global_bad),
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(doc))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    ea, _la, _ev = load_epochs(args.a)
    eb, _lb, _eb = load_epochs(args.b)
    fa = trial_mean(ea, range(ea.n_trials))
    fb = trial_mean(eb, range(eb.n_trials))
    fn = eval_linf if args.metric == "linf" else eval_l2
    print(f"{fn(fa, fb):.12e}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    seed = _seed_of(args)
    overrides = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    overrides.setdefault("seed", seed)
    config = synth.SimConfig(**overrides)
    dataset = synth.simulate(config)
    names = [m for m in args.methods.split(",") if m]
    report = synth.benchmark(dataset, methods.standard_methods(names, seed),
                             metric=args.metric)
    synth.save_bench_report(report, args.out)
    print(report.to_text())
    return EXIT_OK


def _cmd_review(args) -> int:
    if args.review_command == "serve":
        epochs, layout, events = load_epochs(args.input)
        log = load_reject_log(args.log)
        decimate = args.decimate or review.default_decimate(
            epochs.n_trials, epochs.n_sensors, epochs.n_times
        )
        bundle = review.make_review_bundle(epochs, layout, log,
                                           decimate=decimate,
                                           event_codes=events)
        server = review.serve_review(bundle, (args.host, args.port),
                                     args.overrides,
                                     static_dir=args.static_dir)
        print(f"serving on http://{args.host}:{server.address[1]}",
              file=sys.stderr)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            server.stop()
        return EXIT_OK
    log = load_reject_log(args.log)
    overrides = review.load_overrides(args.overrides)
    if args.names:
        _epochs, layout, _events = load_epochs(args.names)
        names = layout.names
    else:
        names = [str(j) for j in range(log.cell_state.shape[1])]
    updated = review.apply_overrides(log, overrides, names)
    save_reject_log(updated, args.out)
    return EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "fit-global": _cmd_fit_global,
    "fit-local": _cmd_fit_local,
    "transform": _cmd_transform,
    "apply-global": _cmd_apply_global,
    "baseline": _cmd_baseline,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
    "review": _cmd_review,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _DISPATCH[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContractError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AutocleanError, OSError, json.JSONDecodeError, KeyError,
            IndexError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
