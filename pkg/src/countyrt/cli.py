"""Command-line interface: simulate | fit | naive.

All commands write plot-ready CSV plus a meta.json recording the resolved
options, so a run can be reproduced exactly. A simple key=value config
file can supply any long option; explicit flags win.

Exit codes: 0 success, 1 usage error, 2 IO/parse error, 3 internal
numeric failure that prevented any output.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .inference import FitConfig, backdate, county_estimates, fit_panel
from .ingest import PanelFormatError, load_panel, write_panel
from .model import GenerationTimePmf, naive_r_hat, trapezoid_pmf
from .simulator import SimConfig, simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

DEFAULT_GEN_TIME = "trapezoid:1,3,4,3"
DEFAULT_SCHEDULE = "20:2.5,40:0.7,40:1.2"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_gen_time(spec: str) -> GenerationTimePmf:
    """"trapezoid:start,up,plateau,down" or "weights:<csv with tau,weight>"."""
    kind, _, rest = spec.partition(":")
    if kind == "trapezoid":
        try:
            start, up, flat, down = (int(x) for x in rest.split(","))
        except ValueError:
            raise UsageError(f"bad trapezoid spec {spec!r}") from None
        return trapezoid_pmf(start, up, flat, down)
    if kind == "weights":
        rows = []
        with open(rest, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "tau":
                    continue
                rows.append((int(row[0]), float(row[1])))
        if not rows:
            raise PanelFormatError(f"{rest}: no weights found")
        rows.sort()
        taus = [t for t, _ in rows]
        if taus != list(range(taus[0], taus[0] + len(taus))):
            raise PanelFormatError(f"{rest}: weight days must be consecutive")
        w = np.array([v for _, v in rows])
        return GenerationTimePmf(taus[0], w / w.sum())
    raise UsageError(f"unknown generation-time spec {spec!r}")


def parse_schedule(spec: str) -> tuple:
    """"20:2.5,40:0.7" -> ((20, 2.5), (40, 0.7))."""
    out = []
    try:
        for part in spec.split(","):
            days, r = part.split(":")
            out.append((int(days), float(r)))
    except ValueError:
        raise UsageError(f"bad schedule spec {spec!r}") from None
    return tuple(out)


def _read_config(path) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PanelFormatError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _resolve(args, spec: dict) -> dict:
    """Merge CLI flags (highest), config file, and defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, (convert, default) in spec.items():
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = cfg[key]
        if val is None:
            out[key] = default
        elif isinstance(val, str):
            try:
                out[key] = convert(val)
            except ValueError:
                raise UsageError(f"invalid value for --{key.replace('_', '-')}: {val!r}") from None
        else:
            out[key] = val
    return out


def _fmt(x) -> str:
    return "" if x is None else f"{x:.10g}"


def _write_meta(outdir: Path, command: str, options: dict) -> None:
    meta = {
        "tool": "countyrt",
        "version": __version__,
        "command": command,
        "options": {
            k: (v.isoformat() if isinstance(v, datetime.date) else v)
            for k, v in options.items()
        },
    }
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _parse_date(s: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(s)
    except ValueError:
        raise UsageError(f"invalid date {s!r}") from None


SIMULATE_SPEC = {
    "k": (int, 20),
    "sigma": (float, 0.14),
    "initial_cases": (int, 400),
    "schedule": (str, DEFAULT_SCHEDULE),
    "gen_time": (str, DEFAULT_GEN_TIME),
    "seed": (int, 0),
    "replicates": (int, 1),
    "start_date": (str, "2020-03-01"),
    "county_r_scale": (float, None),
}

FIT_SPEC = {
    "gen_time": (str, DEFAULT_GEN_TIME),
    "backdate_days": (int, 7),
    "level": (float, 0.95),
    "quantiles": (str, "0.05,0.5,0.95"),
    "threads": (int, 1),
}

NAIVE_SPEC = {
    "gen_time": (str, DEFAULT_GEN_TIME),
    "backdate_days": (int, 7),
}


def _run_one_simulation(config: SimConfig, outdir: Path) -> None:
    result = simulate(config)
    outdir.mkdir(parents=True, exist_ok=True)
    write_panel(result.panel, outdir / "panel.csv")
    with open(outdir / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "true_r"])
        for day, r in zip(result.truth_dates, result.true_r):
            writer.writerow([day.isoformat(), _fmt(float(r))])


def cmd_simulate(args) -> int:
    opts = _resolve(args, SIMULATE_SPEC)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = SimConfig(
        k=opts["k"],
        sigma=opts["sigma"],
        schedule=parse_schedule(opts["schedule"]),
        initial_cases=opts["initial_cases"],
        w=parse_gen_time(opts["gen_time"]),
        seed=opts["seed"],
        start_date=_parse_date(opts["start_date"]),
        county_r_scale=opts["county_r_scale"],
    )
    if opts["replicates"] <= 1:
        _run_one_simulation(base, outdir)
    else:
        seeds = np.random.SeedSequence(opts["seed"]).generate_state(opts["replicates"])
        for i, seed in enumerate(seeds):
            rep = SimConfig(
                k=base.k,
                sigma=base.sigma,
                schedule=base.schedule,
                initial_cases=base.initial_cases,
                w=base.w,
                seed=int(seed),
                start_date=base.start_date,
                county_r_scale=base.county_r_scale,
            )
            _run_one_simulation(rep, outdir / f"rep{i:03d}")
    _write_meta(outdir, "simulate", {**opts, "output_dir": str(outdir)})
    return EXIT_OK


def cmd_fit(args) -> int:
    opts = _resolve(args, FIT_SPEC)
    if not 0.0 < opts["level"] < 1.0:
        raise UsageError("--level must be in (0, 1)")
    if opts["backdate_days"] < 0:
        raise UsageError("--backdate-days must be >= 0")
    quantile_probs = tuple(float(q) for q in opts["quantiles"].split(","))
    w = parse_gen_time(opts["gen_time"])
    panel, _ = load_panel(args.input)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    config = FitConfig(
        level=opts["level"], quantile_probs=quantile_probs, threads=opts["threads"]
    )
    fits = fit_panel(panel, w, config)
    counties = county_estimates(panel, w, fits, config)
    shift = datetime.timedelta(days=opts["backdate_days"])
    fits = backdate(fits, opts["backdate_days"])

    with open(outdir / "country_estimates.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "date",
                "a_hat",
                "s_hat",
                "p_hat",
                "r_tilde",
                "ci_lower",
                "ci_upper",
                "converged",
                "skipped_reason",
            ]
        )
        for fit in fits:
            if fit.skipped or fit.params is None:
                writer.writerow(
                    [fit.date.isoformat(), "", "", "", "", "", "", "", fit.skip_reason]
                )
            else:
                lo, hi = fit.ci if fit.ci is not None else (None, None)
                writer.writerow(
                    [
                        fit.date.isoformat(),
                        _fmt(fit.params.a),
                        _fmt(fit.params.s),
                        _fmt(fit.params.p),
                        _fmt(fit.r_tilde),
                        _fmt(lo),
                        _fmt(hi),
                        "true" if fit.params.converged else "false",
                        "",
                    ]
                )

    q_names = [f"q{int(round(q * 100)):02d}" for q in quantile_probs]
    with open(outdir / "county_estimates.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "region_id", "lambda", "cases", "post_mean"] + q_names)
        for est in counties:
            writer.writerow(
                [
                    (est.date - shift).isoformat(),
                    est.region_id,
                    _fmt(est.lambda_c),
                    est.i_c,
                    _fmt(est.posterior_mean),
                ]
                + [_fmt(est.quantiles[q]) for q in quantile_probs]
            )
    _write_meta(
        outdir,
        "fit",
        {**opts, "input": str(args.input), "output_dir": str(outdir)},
    )
    return EXIT_OK


def cmd_naive(args) -> int:
    opts = _resolve(args, NAIVE_SPEC)
    if opts["backdate_days"] < 0:
        raise UsageError("--backdate-days must be >= 0")
    w = parse_gen_time(opts["gen_time"])
    panel, _ = load_panel(args.input)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    shift = datetime.timedelta(days=opts["backdate_days"])

    country = panel.counts.sum(axis=0)
    with open(outdir / "naive_estimates.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "i_t", "phi_t", "r_hat"])
        for t, day in enumerate(panel.dates):
            phi = 0.0
            for tau, wt in zip(w.days, w.weights):
                if t - tau >= 0:
                    phi += country[t - tau] * wt
            r_hat = naive_r_hat(panel, w, t)
            writer.writerow(
                [
                    (day - shift).isoformat(),
                    int(country[t]),
                    _fmt(phi),
                    _fmt(r_hat),
                ]
            )
    _write_meta(
        outdir,
        "naive",
        {**opts, "input": str(args.input), "output_dir": str(outdir)},
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="countyrt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"countyrt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the torus outbreak simulator")
    sim.add_argument("--output-dir", required=True)
    sim.add_argument("--config")
    for flag in ("--k", "--initial-cases", "--seed", "--replicates"):
        sim.add_argument(flag, type=str)
    sim.add_argument("--sigma", type=str)
    sim.add_argument("--schedule", type=str)
    sim.add_argument("--gen-time", type=str)
    sim.add_argument("--start-date", type=str)
    sim.add_argument("--county-r-scale", type=str)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit daily (a, s, p) and county posteriors")
    fit.add_argument("--input", required=True)
    fit.add_argument("--output-dir", required=True)
    fit.add_argument("--config")
    fit.add_argument("--gen-time", type=str)
    fit.add_argument("--backdate-days", type=str)
    fit.add_argument("--level", type=str)
    fit.add_argument("--quantiles", type=str)
    fit.add_argument("--threads", type=str)
    fit.set_defaults(func=cmd_fit)

    naive = sub.add_parser("naive", help="country-level ratio estimator")
    naive.add_argument("--input", required=True)
    naive.add_argument("--output-dir", required=True)
    naive.add_argument("--config")
    naive.add_argument("--gen-time", type=str)
    naive.add_argument("--backdate-days", type=str)
    naive.set_defaults(func=cmd_naive)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"countyrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PanelFormatError) as exc:
        print(f"countyrt: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # numeric failure that prevented output
        print(f"countyrt: internal error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
