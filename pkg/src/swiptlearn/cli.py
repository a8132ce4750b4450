"""Command-line front end.

Subcommands: check-oracles, train, sweep, eval, plot.  Exit codes: 0 success,
1 oracle/eval failure, 2 usage or configuration error, 3 runtime/training
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .autoencoder import (
    DegenerateConstellationError,
    constellation_from_csv,
    constellation_to_csv,
    estimate_ser,
    load_system,
    save_system,
    train,
)
from .bessel import QuadratureSpec, bessel_i0, bessel_i1, time_average_exponential
from .config import (
    ConfigError,
    apply_overrides,
    build_sweep_config,
    build_train_config,
    load_config_file,
)
from .experiment import (
    SweepError,
    best_record_per_lambda,
    noisy_delivered_power,
    rate_power_curve,
    records_from_csv,
    records_to_csv,
    run_sweep,
)
from .nn import TrainingError
from .rectenna import (
    RectennaParams,
    delivered_power_metric,
    delivered_power_metric_gradient,
    invert_power_threshold,
    power_threshold,
)
from .svgplot import svg_constellation, svg_rate_power

_SER_STREAM = 929
_SQRT2 = math.sqrt(2.0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swiptlearn",
        description="Jointly learned modulation and detection for wireless information and power transfer.",
    )
    parser.add_argument("--version", action="version", version=f"swiptlearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-oracles", help="run the numerical oracle suites")
    p.add_argument("--points", type=int, default=4096, help="quadrature panels (default 4096)")
    p.add_argument("--perturb-i0", type=float, default=0.0, metavar="EPS",
                   help="fault injection: scale closed-form I0 by (1+EPS)")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_check_oracles)

    p = sub.add_parser("train", help="run one training configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--samples", type=int, default=100000, help="SER test symbols")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run the lambda ladder protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="re-score a stored system manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="emit an SVG figure from CSV outputs")
    p.add_argument("--kind", required=True, choices=("constellation", "rate-power"))
    p.add_argument("--out", required=True)
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, DegenerateConstellationError, SweepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


# --- check-oracles --------------------------------------------------------

def _check_quadrature(points: int, perturb: float, rng) -> tuple[bool, str]:
    spec = QuadratureSpec(num_points=points)
    tol = 1e-8 if points >= 1024 else 1e-6
    branch = "standard" if points >= 1024 else "coarse"
    worst, worst_case = 0.0, None
    u = rng.uniform(0.0, 1.0, size=100)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=100)
    symbols = 5.0 * np.sqrt(u) * np.exp(1j * theta)
    for b in (0.5, 1.0, 2.0):
        for z in symbols:
            closed = bessel_i0(_SQRT2 * b * abs(z)) * (1.0 + perturb)
            quad = time_average_exponential(z, b, spec)
            rel = abs(quad - closed) / closed
            if rel > worst:
                worst, worst_case = rel, (z, b)
    detail = (f"quadrature identity, 300 cases, {branch} tolerance {tol:g} "
              f"at {points} points, max rel err {worst:.3g}")
    if worst > tol:
        z, b = worst_case
        detail += f"; worst case symbol={z:.6g} B={b:g}"
    return worst <= tol, detail


def _check_i1_derivative() -> tuple[bool, str]:
    h = 1e-6
    worst, at = 0.0, None
    for x in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
        fd = (bessel_i0(x + h) - bessel_i0(x - h)) / (2.0 * h)
        rel = abs(fd - bessel_i1(x)) / bessel_i1(x)
        if rel > worst:
            worst, at = rel, x
    ok = worst <= 1e-6
    detail = f"dI0/dx vs I1 on 6-point grid, max rel err {worst:.3g} (at x={at:g}), tolerance 1e-06"
    return ok, detail


def _check_metric_gradient(rng) -> tuple[bool, str]:
    params = RectennaParams()
    symbols = (rng.standard_normal(8) + 1j * rng.standard_normal(8)) * 0.8
    grad = delivered_power_metric_gradient(symbols, params)
    h = 1e-6
    worst = 0.0
    for i in range(8):
        for part in (1.0, 1j):
            hi = delivered_power_metric(symbols + part * h * (np.arange(8) == i), params)
            lo = delivered_power_metric(symbols - part * h * (np.arange(8) == i), params)
            fd = (hi - lo) / (2.0 * h)
            an = grad[i].real if part == 1.0 else grad[i].imag
            worst = max(worst, abs(fd - an) / max(abs(an), 1e-12))
    ok = worst <= 1e-7
    return ok, f"metric gradient vs central differences, 16 partials, max rel err {worst:.3g}, tolerance 1e-07"


def _check_threshold_roundtrip() -> tuple[bool, str]:
    params = RectennaParams()
    worst, at = 0.0, None
    for p_d in (1e-12, 1e-9, 1e-6):
        back = invert_power_threshold(power_threshold(p_d, params), params)
        rel = abs(back - p_d) / p_d
        if rel > worst:
            worst, at = rel, p_d
    ok = worst <= 1e-9
    return ok, f"threshold round trip on {{1e-12, 1e-9, 1e-6}} W, max rel err {worst:.3g} (at {at:g} W), tolerance 1e-09"


def cmd_check_oracles(args) -> int:
    if args.points < 64:
        print("error: --points must be >= 64", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    results = [
        _check_quadrature(args.points, args.perturb_i0, rng),
        _check_i1_derivative(),
        _check_metric_gradient(rng),
        _check_threshold_roundtrip(),
    ]
    all_ok = True
    for ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {detail}")
        all_ok &= ok
    print("all oracle checks passed" if all_ok else "oracle checks FAILED")
    return 0 if all_ok else 1


# --- train / sweep / eval / plot -------------------------------------------

def _load_sections(args):
    return apply_overrides(load_config_file(args.config), args.set)


def cmd_train(args) -> int:
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return 2
    config = build_train_config(_load_sections(args))
    system = train(config)
    rng = np.random.default_rng((config.seed, _SER_STREAM))
    ser, ser_ci = estimate_ser(system, args.samples, rng)
    p_del = delivered_power_metric(system.constellation.symbols, config.rectenna)
    os.makedirs(args.out, exist_ok=True)
    manifest_path = os.path.join(args.out, "system_manifest.json")
    csv_path = os.path.join(args.out, "constellation.csv")
    save_system(system, manifest_path, ser=ser, ser_ci=ser_ci)
    with open(csv_path, "w") as fh:
        fh.write(constellation_to_csv(system.constellation))
    print(f"final_loss={system.final_loss:.6g} ser={ser:.6g} ser_ci={ser_ci:.6g} p_del={p_del:.6g}")
    print(f"wrote {manifest_path} and {csv_path}")
    return 0


def cmd_sweep(args) -> int:
    if args.parallel < 1:
        print("error: --parallel must be >= 1", file=sys.stderr)
        return 2
    sweep_cfg = build_sweep_config(_load_sections(args))
    os.makedirs(args.out, exist_ok=True)

    def progress(lam, batch):
        accepted = [r for r in batch if r.accepted]
        top = max((r.p_del for r in accepted), default=float("nan"))
        print(f"lambda={lam:g}: {len(batch)} runs, {len(accepted)} accepted, best p_del={top:.6g}")

    records = run_sweep(sweep_cfg, workers=args.parallel, progress=progress)
    with open(os.path.join(args.out, "records.csv"), "w") as fh:
        fh.write(records_to_csv(records))
    best = best_record_per_lambda(records)
    for lam in sorted(best):
        r = best[lam]
        path = os.path.join(args.out, f"constellation_lambda{lam:g}.csv")
        with open(path, "w") as fh:
            fh.write(constellation_to_csv(r.constellation))
    manifest = {
        "format": "swiptlearn-sweep-v1",
        "base_seed": sweep_cfg.base.seed,
        "m_messages": sweep_cfg.base.m_messages,
        "lambda_grid": list(sweep_cfg.lambda_grid),
        "ser_max": sweep_cfg.ser_max,
        "num_seeds": sweep_cfg.num_seeds,
        "ser_samples": sweep_cfg.ser_samples,
        "records_written": len(records),
    }
    with open(os.path.join(args.out, "sweep_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print("lambda    seed  ser         p_del")
    for lam in sorted(best):
        r = best[lam]
        print(f"{lam:<9g} {r.seed:<5d} {r.ser:<11.6g} {r.p_del:.6g}")
    print(f"wrote records.csv and {len(best)} constellation CSVs to {args.out}")
    return 0


def cmd_eval(args) -> int:
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return 2
    system = load_system(args.manifest)
    rng = np.random.default_rng((args.seed, _SER_STREAM))
    ser, ser_ci = estimate_ser(system, args.samples, rng, snr_db=args.snr_db)
    p_del = delivered_power_metric(system.constellation.symbols, system.config.rectenna)
    noisy = noisy_delivered_power(system, min(args.samples, 10000), rng, snr_db=args.snr_db)
    snr = system.config.snr_db if args.snr_db is None else args.snr_db
    print(f"snr_db={snr:g} ser={ser:.6g} ser_ci={ser_ci:.6g}")
    print(f"p_del={p_del:.6g} (constellation metric)")
    print(f"noisy_received_metric={noisy:.6g} (diagnostic; not used in training)")
    return 0


def cmd_plot(args) -> int:
    if args.kind == "constellation":
        if len(args.inputs) != 1:
            print("error: constellation plots take exactly one CSV input", file=sys.stderr)
            return 2
        with open(args.inputs[0]) as fh:
            symbols = constellation_from_csv(fh.read())
        name = os.path.splitext(os.path.basename(args.inputs[0]))[0]
        svg = svg_constellation(symbols, title=name)
    else:
        series = []
        for path in args.inputs:
            with open(path) as fh:
                records = records_from_csv(fh.read())
            label = os.path.splitext(os.path.basename(path))[0]
            series.append((label, rate_power_curve(records)))
        svg = svg_rate_power(series)
    with open(args.out, "w") as fh:
        fh.write(svg)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    entry()
