"""Command-line pipeline: sample, train, store weights, evaluate encrypted.

Subcommands: ``train``, ``eval``, ``extract``, ``fourier``, ``baseline`` and
``report``. Exit codes: 0 success, 2 usage or input errors, 3 training
diverged, 4 level budget exhausted, 5 degree cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import extract, fourier, henc
from .errors import DegreeLimitExceeded, Diverged, HenetError, LevelExhausted
from .funcspec import SampleSet, TargetFunction, grid, sample, split_train_validation
from .netcore import NetworkConfig, forward, load_weights_csv, save_weights_csv, train
from .poly import fit_least_squares
from .quant import quantize_uniform
from .report import EvalReport

log = logging.getLogger("henet")

EXIT_USAGE, EXIT_DIVERGED, EXIT_LEVELS, EXIT_DEGREE = 2, 3, 4, 5

REPORT_COLUMNS = [
    "radius",
    "method",
    "max_abs_error",
    "mse",
    "levels_consumed",
    "ct_mults",
    "scalar_mults",
    "bootstraps",
]


def _sidecar(path: str, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _write_json(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def make_datasets(target: TargetFunction, train_step: float, precision: float):
    """Training grid at ``train_step``; validation from the remaining points.

    When the training step is a multiple of the evaluation precision, the
    precision grid is split and the leftover points validate. Otherwise
    validation uses the midpoints of the training grid.
    """
    ratio = train_step / precision
    keep = int(round(ratio))
    if keep > 1 and abs(ratio - keep) < 1e-9 * ratio:
        fine = sample(TargetFunction(target.source, target.radius, precision))
        return split_train_validation(fine, keep)
    tr = sample(TargetFunction(target.source, target.radius, train_step))
    mids = (tr.xs[:-1] + tr.xs[1:]) / 2
    return tr, SampleSet(mids, np.asarray(target(mids), dtype=float))


def _context(args, seed=0) -> henc.Context:
    return henc.Context(
        slot_count=args.slots,
        max_level=args.max_level,
        noise_sigma=args.noise_sigma,
        auto_bootstrap=args.auto_bootstrap,
        seed=seed,
    )


def _chunks(n: int, size: int):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    target = TargetFunction(args.function, args.radius, args.precision)
    train_set, val_set = make_datasets(target, args.train_step, args.precision)
    cfg = NetworkConfig(
        hidden_layers=args.layers,
        width=args.width,
        activation_degree=args.degree,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        batch_size=args.batch,
        l2_lambda=args.l2,
        patience=args.patience,
        seed=args.seed,
        input_scale=1.0 / args.radius,
    )
    net, rep = train(cfg, train_set, val_set)
    if args.quantize_bits:
        net = quantize_uniform(net, args.quantize_bits)
    save_weights_csv(net, args.out)
    payload = rep.to_dict()
    payload["config"] = cfg.to_dict()
    payload["function"] = args.function
    payload["radius"] = args.radius
    payload["train_points"] = len(train_set)
    payload["validation_points"] = len(val_set)
    _write_json(args.report or _sidecar(args.out, ".train.json"), payload)
    print(
        f"epochs={rep.epochs_run} best_epoch={rep.best_epoch} "
        f"train_mse={rep.final_train_mse:.3e} validation_mse={rep.final_validation_mse:.3e}"
    )
    return 0


def cmd_eval(args) -> int:
    net = load_weights_csv(args.weights)
    if args.quantize_bits:
        net = quantize_uniform(net, args.quantize_bits)
    target = TargetFunction(args.function, args.radius, args.precision)
    xs = grid(args.radius, args.precision)
    y_true = np.asarray(target(xs), dtype=float)
    t0 = time.perf_counter()
    y_pred = np.empty_like(xs)
    counters = {"ct_mults": 0, "scalar_mults": 0, "bootstraps": 0}
    depth = 0
    for idx, (lo, hi) in enumerate(_chunks(len(xs), args.slots)):
        ctx = _context(args, seed=args.seed + idx)
        out = henc.forward_encrypted(ctx, net, ctx.encrypt(xs[lo:hi]))
        y_pred[lo:hi] = ctx.decrypt(out)[: hi - lo].real
        for k, v in ctx.counters().items():
            counters[k] += v
        depth = max(depth, out.depth)
    wall = time.perf_counter() - t0
    report = EvalReport.from_errors(
        "nn",
        args.radius,
        y_true,
        y_pred,
        levels_consumed=depth,
        **counters,
        config={
            "function": args.function,
            "weights": str(args.weights),
            "hidden_layers": net.hidden_layers,
            "width": int(net.weights[0].shape[0]),
            "degree": net.degree,
            "precision": args.precision,
            "slots": args.slots,
            "max_level": args.max_level,
            "noise_sigma": args.noise_sigma,
            "auto_bootstrap": args.auto_bootstrap,
            "quantize_bits": args.quantize_bits,
            "points": len(xs),
        },
        wall_time_seconds=wall,
    )
    with open(args.out, "w", newline="") as fh:
        fh.write("x,y_true,y_pred,abs_err\n")
        for x, yt, yp in zip(xs, y_true, y_pred):
            fh.write(f"{x:.17g},{yt:.17g},{yp:.17g},{abs(yp - yt):.17g}\n")
    Path(args.report or _sidecar(args.out, ".json")).write_text(report.to_json())
    print(
        f"points={len(xs)} max_abs_error={report.max_abs_error:.3e} mse={report.mse:.3e} "
        f"levels={depth} ct_mults={report.ct_mults} bootstraps={report.bootstraps}"
    )
    return 0


def cmd_extract(args) -> int:
    net = load_weights_csv(args.weights)
    p = extract.extract_polynomial(net, cap=args.cap)
    text = p.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    plan = extract.plan_depth(net.config)
    print(f"degree={p.degree} plan_depth={plan.depth}", file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_fourier(args) -> int:
    target = TargetFunction(args.function, args.radius, args.precision)
    ell = args.fourier_l if args.fourier_l is not None else args.radius + 10.0
    offset = float(target(0.0))
    shifted = fourier.odd_shift(target, offset)
    series = fourier.fourier_sine_coeffs(shifted, ell, args.fourier_n, args.fourier_m)
    params = henc.SineParams(t=args.sine_t, k=args.sine_k)
    xs = grid(args.radius, args.precision)
    y_true = np.asarray(target(xs), dtype=float)
    y_plain = fourier.eval_series_plain(series, xs) + offset
    t0 = time.perf_counter()
    y_enc = np.empty_like(xs)
    counters = {"ct_mults": 0, "scalar_mults": 0, "bootstraps": 0}
    depth = 0
    for idx, (lo, hi) in enumerate(_chunks(len(xs), args.slots)):
        ctx = _context(args, seed=args.seed + idx)
        out = ctx.cadd(fourier.eval_series_encrypted(ctx, series, ctx.encrypt(xs[lo:hi]), params), offset)
        y_enc[lo:hi] = ctx.decrypt(out)[: hi - lo].real
        for k, v in ctx.counters().items():
            counters[k] += v
        depth = max(depth, out.depth)
    wall = time.perf_counter() - t0
    plain_err = float(np.max(np.abs(y_plain - y_true)))
    report = EvalReport.from_errors(
        "fourier",
        args.radius,
        y_true,
        y_enc,
        levels_consumed=depth,
        **counters,
        config={
            "function": args.function,
            "N": args.fourier_n,
            "l": ell,
            "offset": offset,
            "sine_t": args.sine_t,
            "sine_k": args.sine_k,
            "precision": args.precision,
            "plain_max_abs_error": plain_err,
            "encrypted_vs_plain_max": float(np.max(np.abs(y_enc - y_plain))),
            "max_level": args.max_level,
            "auto_bootstrap": args.auto_bootstrap,
            "points": len(xs),
        },
        wall_time_seconds=wall,
    )
    Path(args.out).write_text(series.to_text())
    Path(args.report or _sidecar(args.out, ".json")).write_text(report.to_json())
    print(
        f"N={args.fourier_n} l={ell:g} plain_max_abs_error={plain_err:.3e} "
        f"encrypted_max_abs_error={report.max_abs_error:.3e} levels={depth}"
    )
    return 0


def cmd_baseline(args) -> int:
    """Least-squares fit in u = x/R, evaluated on ciphertexts by Horner or Paterson-Stockmeyer."""
    target = TargetFunction(args.function, args.radius, args.precision)
    data = sample(target)
    p = fit_least_squares(data.xs / args.radius, data.ys, args.poly_degree)
    t0 = time.perf_counter()
    y_pred = np.empty_like(data.xs)
    counters = {"ct_mults": 0, "scalar_mults": 0, "bootstraps": 0}
    depth = 0
    for idx, (lo, hi) in enumerate(_chunks(len(data), args.slots)):
        ctx = _context(args, seed=args.seed + idx)
        u = ctx.cmul(ctx.encrypt(data.xs[lo:hi]), 1.0 / args.radius)
        out = henc.eval_polynomial_encrypted(ctx, p.coeffs, u, args.method)
        y_pred[lo:hi] = ctx.decrypt(out)[: hi - lo].real
        for k, v in ctx.counters().items():
            counters[k] += v
        depth = max(depth, out.depth)
    report = EvalReport.from_errors(
        f"lsq-{args.method}",
        args.radius,
        data.ys,
        y_pred,
        levels_consumed=depth,
        **counters,
        config={"function": args.function, "poly_degree": args.poly_degree, "precision": args.precision},
        wall_time_seconds=time.perf_counter() - t0,
    )
    Path(args.out).write_text(p.to_text())
    Path(args.report or _sidecar(args.out, ".json")).write_text(report.to_json())
    print(f"degree={p.degree} max_abs_error={report.max_abs_error:.3e} levels={depth} ct_mults={report.ct_mults}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        try:
            rows.append(EvalReport.from_dict(json.loads(Path(path).read_text())))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            print(f"error: {path}: malformed report ({exc})", file=sys.stderr)
            return EXIT_USAGE
    rows.sort(key=lambda r: (r.radius, r.method))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([repr(r.radius), r.method] + [repr(getattr(r, c)) for c in REPORT_COLUMNS[2:]])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="henet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def target_flags(p, required=True):
        p.add_argument("--function", required=required, help="builtin name or expression in x")
        p.add_argument("--radius", type=float, default=30.0, help="interval half-width R (default 30)")
        p.add_argument("--precision", type=float, default=0.01, help="evaluation grid step (default 0.01)")
        p.add_argument("--seed", type=int, default=0)

    def he_flags(p):
        p.add_argument("--slots", type=int, default=8192, help="slots per ciphertext (default 8192)")
        p.add_argument("--max-level", type=int, default=40, help="level budget (default 40)")
        p.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian noise per multiplication")
        p.add_argument("--auto-bootstrap", action="store_true", help="bootstrap instead of failing")

    p = sub.add_parser("train", help="sample the target, train a network, store weights")
    target_flags(p)
    p.add_argument("--train-step", type=float, default=0.1, help="training grid step (default 0.1)")
    p.add_argument("--layers", type=int, default=6)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--patience", type=int, default=200)
    p.add_argument("--quantize-bits", type=int, default=None)
    p.add_argument("--out", required=True, help="weights CSV path")
    p.add_argument("--report", help="train report JSON (default <out>.train.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate stored weights on ciphertexts")
    target_flags(p)
    he_flags(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--quantize-bits", type=int, default=None)
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.add_argument("--report", help="report JSON (default <out>.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("extract", help="expand stored weights into a polynomial")
    p.add_argument("--weights", required=True)
    p.add_argument("--cap", type=int, default=4096, help="degree cap (default 4096)")
    p.add_argument("--out", help="polynomial text file (default stdout)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fourier", help="Fourier sine-series baseline")
    target_flags(p)
    he_flags(p)
    p.add_argument("--fourier-n", type=int, default=16, help="number of harmonics N (default 16)")
    p.add_argument("--fourier-l", type=float, default=None, help="half period l (default R + 10)")
    p.add_argument("--fourier-m", type=int, default=fourier.DEFAULT_SUBINTERVALS, help="Simpson subintervals")
    p.add_argument("--sine-t", type=int, default=10)
    p.add_argument("--sine-k", type=int, default=7)
    p.add_argument("--out", required=True, help="series text file")
    p.add_argument("--report", help="report JSON (default <out>.json)")
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("baseline", help="least-squares polynomial baseline")
    target_flags(p)
    he_flags(p)
    p.add_argument("--poly-degree", type=int, default=15)
    p.add_argument("--method", choices=["horner", "ps"], default="ps")
    p.add_argument("--out", required=True, help="polynomial text file")
    p.add_argument("--report", help="report JSON (default <out>.json)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="merge report JSONs into a comparison CSV")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except Diverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except LevelExhausted as exc:
        print(f"error: {exc} (try --auto-bootstrap or a larger --max-level)", file=sys.stderr)
        return EXIT_LEVELS
    except DegreeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGREE
    except (HenetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
