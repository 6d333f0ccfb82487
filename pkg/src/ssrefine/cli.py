"""Command-line interface: fit, refine, bench, verify, compare.

Exit codes: 0 on success, 1 on usage or file-format errors, 2 on
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
import numpy as np

from . import bench as bench_mod
from . import fileio
from .fileio import FileFormatError
from .refine import (
    RefineOptions,
    bcd_iterate,
    compare_optimizers,
    gauss_newton_bcd,
    gauss_newton_full,
    trajectory_table,
)
from .subspace import SubspaceOptions, subspace_freq, subspace_time
from .verify import PROPERTY_NAMES, run_property_check

__all__ = ["cli_main", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="ssrefine",
                description="Estimate and refine linear state-space models")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate a model from data")
    fit.add_argument("--data", help="time-series CSV")
    fit.add_argument("--frf", help="frequency-response CSV")
    fit.add_argument("--ts", type=float, default=None,
                     help="sampling time; 0 marks continuous (frequency data)")
    fit.add_argument("--order", type=int, required=True)
    fit.add_argument("--horizon", type=int, default=None)
    fit.add_argument("--refine", dest="refine_method", default="none",
                     choices=["none", "bcd", "gn-bcd", "gn-full"])
    fit.add_argument("--max-sweeps", type=int, default=50)
    fit.add_argument("--tol", type=float, default=1e-9)
    fit.add_argument("--out", required=True, help="output model JSON")

    ref = sub.add_parser("refine", help="refine an existing model against data")
    ref.add_argument("--model", required=True)
    ref.add_argument("--data", help="time-series CSV")
    ref.add_argument("--frf", help="frequency-response CSV")
    ref.add_argument("--ts", type=float, default=None)
    ref.add_argument("--method", default="bcd", choices=["bcd", "gn-bcd", "gn-full"])
    ref.add_argument("--fix", action="append", default=[],
                     choices=["A", "B", "C", "D"])
    ref.add_argument("--max-sweeps", type=int, default=50)
    ref.add_argument("--tol", type=float, default=1e-9)
    ref.add_argument("--damping", type=float, default=1e-3)
    ref.add_argument("--out", required=True)
    ref.add_argument("--report", default=None, help="refinement report JSON")

    ben = sub.add_parser("bench", help="Monte Carlo comparison of the three models")
    ben.add_argument("mode", choices=["td", "fd"])
    ben.add_argument("--config", default=None, help="JSON file with config fields")
    ben.add_argument("--trials", type=int, default=None)
    ben.add_argument("--order", type=int, default=None)
    ben.add_argument("--nu", type=int, default=None)
    ben.add_argument("--ny", type=int, default=None)
    ben.add_argument("--n-samples", type=int, default=None)
    ben.add_argument("--n-freqs", type=int, default=None)
    ben.add_argument("--noise-std", type=float, default=None)
    ben.add_argument("--noise-frac", type=float, default=None)
    ben.add_argument("--seed", type=int, default=None)
    ben.add_argument("--out", required=True, help="results CSV")
    ben.add_argument("--summary", default=None, help="summary JSON")
    ben.add_argument("--figdir", default=None,
                     help="directory for figures rendered next to the CSV")

    ver = sub.add_parser("verify", help="run a seeded property suite")
    ver.add_argument("--property", required=True, choices=list(PROPERTY_NAMES))
    ver.add_argument("--trials", type=int, default=100)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", default=None, help="verdict JSON")

    cmp_ = sub.add_parser("compare", help="cost trajectories of the three optimizers")
    cmp_.add_argument("--model", required=True)
    cmp_.add_argument("--data", help="time-series CSV")
    cmp_.add_argument("--frf", help="frequency-response CSV")
    cmp_.add_argument("--ts", type=float, default=None)
    cmp_.add_argument("--steps", type=int, default=5)
    cmp_.add_argument("--tol", type=float, default=1e-9)
    cmp_.add_argument("--out", required=True, help="trajectory CSV")
    return p


def _load_data(args, model_ts=None):
    if (args.data is None) == (args.frf is None):
        raise _UsageError("exactly one of --data and --frf is required")
    ts = args.ts
    if args.data is not None:
        return fileio.load_timeseries(args.data, ts=ts)
    if ts is None:
        ts = model_ts
    return fileio.load_frequency_data(args.frf, ts=ts)


def _cmd_fit(args) -> int:
    opts = SubspaceOptions(order=args.order, horizon=args.horizon)
    data = _load_data(args)
    if args.data is not None:
        model = subspace_time(data, opts)
    else:
        model = subspace_freq(data, opts)
    if args.refine_method != "none":
        ropts = RefineOptions(max_sweeps=args.max_sweeps, rel_tol=args.tol)
        runner = {"bcd": bcd_iterate, "gn-bcd": gauss_newton_bcd,
                  "gn-full": gauss_newton_full}[args.refine_method]
        model, _ = runner(model, data, ropts)
    fileio.save_model(args.out, model)
    print(f"wrote {args.out} (n={model.n}, nu={model.nu}, ny={model.ny})")
    return 0


def _cmd_refine(args) -> int:
    model = fileio.load_model(args.model)
    data = _load_data(args, model_ts=model.ts)
    opts = RefineOptions(max_sweeps=args.max_sweeps, rel_tol=args.tol,
                         damping_init=args.damping,
                         fixed=frozenset(args.fix))
    runner = {"bcd": bcd_iterate, "gn-bcd": gauss_newton_bcd,
              "gn-full": gauss_newton_full}[args.method]
    refined, report = runner(model, data, opts)
    fileio.save_model(args.out, refined)
    if args.report:
        fileio.save_report(args.report, report)
    traj = report.cost_trajectory
    print(f"{report.method}: cost {traj[0]:.6g} -> {traj[-1]:.6g} in "
          f"{report.sweeps} sweeps (converged={report.converged})")
    return 0


def _bench_config(args) -> bench_mod.BenchConfig:
    fields = {}
    if args.config:
        from pathlib import Path

        try:
            fields.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise FileFormatError(f"{args.config}: cannot read config ({exc})") from None
    domain = "time_discrete" if args.mode == "td" else "freq_continuous"
    fields["domain"] = domain
    overrides = {
        "trials": args.trials, "order": args.order, "nu": args.nu, "ny": args.ny,
        "n_samples": args.n_samples, "n_freqs": args.n_freqs, "seed": args.seed,
    }
    for key, val in overrides.items():
        if val is not None:
            fields[key] = val
    if args.noise_std is not None:
        fields["noise_kind"] = "additive"
        fields["noise_level"] = args.noise_std
    if args.noise_frac is not None:
        fields["noise_kind"] = "multiplicative"
        fields["noise_level"] = args.noise_frac
    if domain == "freq_continuous" and "noise_kind" not in fields:
        fields["noise_kind"] = "multiplicative"
        fields["noise_level"] = 0.2
    defaults = {"trials": 50, "order": 7, "nu": 4, "ny": 4, "seed": 0}
    for key, val in defaults.items():
        fields.setdefault(key, val)
    try:
        return bench_mod.BenchConfig(**fields)
    except TypeError as exc:
        raise _UsageError(f"invalid bench config field: {exc}") from None


def _cmd_bench(args) -> int:
    cfg = _bench_config(args)
    records = bench_mod.run_bench(cfg)
    fileio.save_records_csv(args.out, records)
    print(f"wrote {args.out} ({len(records)} trials)")
    summary = bench_mod.summarize(records)
    if args.summary:
        fileio.save_summary(args.summary, summary)
        print(f"wrote {args.summary}")
    med = summary["medians"]
    print(f"medians: mn={med['mn']:.6g} mpBC={med['mpBC']:.6g} mp={med['mp']:.6g}")
    if args.figdir:
        for path in bench_mod.render_quick_figures(records, args.figdir):
            print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    verdict = run_property_check(args.property, args.trials, args.seed)
    text = json.dumps(verdict, indent=2, sort_keys=True)
    print(text)
    if args.out:
        open(args.out, "w").write(text + "\n")
    return 0 if verdict["pass"] else 2


def _cmd_compare(args) -> int:
    model = fileio.load_model(args.model)
    data = _load_data(args, model_ts=model.ts)
    opts = RefineOptions(max_sweeps=args.steps, rel_tol=args.tol)
    reports = compare_optimizers(model, data, opts)
    steps, table = trajectory_table(reports)
    fileio.save_trajectory_csv(args.out, steps, table)
    print(f"wrote {args.out} ({len(steps)} steps)")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "refine":
            return _cmd_refine(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "compare":
            return _cmd_compare(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
