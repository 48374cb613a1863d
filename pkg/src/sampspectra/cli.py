"""Command-line front end for moments, volumes, MP formulas, and simulations.

Subcommands
    moments    exact eigenvalue-moment expansion, evaluated over d and beta
    volume     reduction trace and exact volume of one partition path
    mse        seeded reconstruction-error sweep: MP closed form vs simulation
    spectrum   pooled eigenvalue histogram with the MP density for overlay
    mp         closed-form MP quantities (limit moments, LMMSE error)

Every run is fully determined by the printed configuration: CSV output
starts with a ``#``-prefixed JSON line carrying exactly the parameters that
determine the numbers (thread count and output destination are excluded on
purpose; they never change the data). Repeating a run with a different
``--threads`` value yields byte-identical output.

Exit codes: 0 success, 2 argument error, 3 capacity error, 4 numerical
integrity failure.
"""

import os

# Trial-level parallelism only: library BLAS threading is pinned before
# numpy first loads, which also keeps results machine-independent.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from .combinatorics import PartitionPath, reduction_trace
from .errors import CapacityError, IntegrityError
from .field_sim import (
    _check_budget, collect_spectra, empirical_lmmse, estimate_bytes,
)
from .marchenko_pastur import MPParams, mp_lmmse, mp_moment, mp_pdf
from .moments import moment_eval, moment_expansion, moment_limit, symbolic_expansion
from .volumes import volume_exact, volume_quadrature


# --- serialization helpers ----------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not np.isfinite(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _config_line(config: dict) -> str:
    clean = {k: _jsonable(v) for k, v in config.items()}
    return "# " + json.dumps(clean, sort_keys=True)


def _emit_table(args, config, columns, rows, extra_comments=()):
    if args.format == "json":
        doc = {
            "config": {k: _jsonable(v) for k, v in config.items()},
            "columns": list(columns),
            "rows": [[_jsonable(v) for v in row] for row in rows],
        }
        for key, value in extra_comments:
            doc[key] = _jsonable(value)
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        lines = [_config_line(config)]
        lines.extend(f"# {key}: {value}" for key, value in extra_comments)
        lines.append(",".join(columns))
        lines.extend(",".join(_cell(v) for v in row) for row in rows)
        text = "\n".join(lines) + "\n"
    _write_out(args.out, text)


def _write_out(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# --- argument parsing ----------------------------------------------------------


def _int_list(text: str) -> list:
    return [int(part) for part in text.split(",") if part != ""]


def _float_list(text: str) -> list:
    return [float(part) for part in text.split(",") if part != ""]


def _snr_list(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "":
            continue
        out.append(float("inf") if part.lower() == "inf" else float(part))
    return out


def _snr_grid(text: str) -> list:
    pieces = text.split(":")
    if len(pieces) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in pieces)
    if step <= 0:
        raise argparse.ArgumentTypeError(f"step must be positive, got {step}")
    grid = []
    k = 0
    while True:
        value = start + k * step
        if value > stop + 1e-9:
            break
        grid.append(value)
        k += 1
    return grid


def _resolve_snrs(args) -> list:
    if args.snr is not None and args.snr_grid is not None:
        raise ValueError("give either --snr or --snr-grid, not both")
    if args.snr is not None:
        return args.snr
    if args.snr_grid is not None:
        return args.snr_grid
    raise ValueError("an SNR grid is required (--snr or --snr-grid)")


def _alpha_of(snr_db: float) -> float:
    return 0.0 if np.isinf(snr_db) else 10.0 ** (-snr_db / 10.0)


# --- subcommands ----------------------------------------------------------------


def cmd_moments(args):
    expansion = moment_expansion(args.p)
    symbolic = symbolic_expansion(expansion)
    config = {
        "command": "moments", "p": args.p, "d": args.d, "beta": args.beta,
        "format": args.format,
    }
    rows = []
    for d in args.d:
        for beta in args.beta:
            rows.append((
                args.p, d, float(beta),
                float(moment_eval(expansion, d, beta)),
                float(moment_limit(args.p, beta)),
            ))
    columns = ("p", "d", "beta", "moment", "limit_moment")
    _emit_table(args, config, columns, rows,
                extra_comments=((f"symbolic p={args.p}", symbolic),))


def _parse_path(text: str) -> PartitionPath:
    labels = []
    for pos, part in enumerate(text.split(","), start=1):
        part = part.strip()
        try:
            labels.append(int(part))
        except ValueError:
            raise ValueError(f"position {pos}: {part!r} is not an integer") from None
    return PartitionPath.of(labels)


def cmd_volume(args):
    path = _parse_path(args.path)
    trace = reduction_trace(path)
    reduced = trace[-1].path
    volume = volume_exact(reduced).exact
    quadrature = None
    if 1 <= reduced.k - 1 <= 3:
        quadrature = volume_quadrature(reduced, tolerance=1e-6)

    if args.format == "json":
        doc = {
            "config": {"command": "volume", "path": list(path.labels)},
            "trace": [
                {"path": list(step.path.labels), "rule": step.rule, "index": step.index}
                for step in trace
            ],
            "volume": str(volume),
            "volume_float": float(volume),
            "quadrature": quadrature,
        }
        _write_out(args.out, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return

    width = max(len(str(step.path)) for step in trace)
    lines = [f"path {path}"]
    for step in trace:
        shown = str(step.path).ljust(width)
        if step.rule is None:
            lines.append(f"  {shown}  (fully reduced)")
        else:
            lines.append(f"  {shown}  rule {step.rule}, i = {step.index}")
    lines.append(f"volume = {volume}" + (f" = {float(volume)!r}" if volume.denominator != 1 else ""))
    if quadrature is not None:
        lines.append(f"quadrature = {quadrature!r}")
    _write_out(args.out, "\n".join(lines) + "\n")


def cmd_mse(args):
    snrs = _resolve_snrs(args)
    for beta in args.beta:
        if not 0 < beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
    # Reject any over-budget combination before the first trial runs.
    for d in args.d:
        for beta in args.beta:
            _check_budget(estimate_bytes(d, args.M, beta), args.max_mem,
                          f"mse at d={d}, M={args.M}")
    config = {
        "command": "mse", "d": args.d, "M": args.M, "beta": args.beta,
        "snr_db": snrs, "trials": args.trials, "seed": args.seed,
        "format": args.format,
    }
    columns = ("d", "M", "r", "beta", "snr_db", "mse_mp", "mse_empirical",
               "stderr", "trials", "seed")
    rows = []
    for i_d, d in enumerate(args.d):
        for i_b, beta in enumerate(args.beta):
            samples = collect_spectra(
                d, args.M, beta, args.trials, (args.seed, i_d, i_b),
                threads=args.threads, max_bytes=args.max_mem,
            )
            actual = samples[0].beta
            for snr_db in snrs:
                alpha = _alpha_of(snr_db)
                per_trial = np.array([empirical_lmmse(s, alpha) for s in samples])
                stderr = 0.0
                if len(per_trial) > 1:
                    stderr = float(per_trial.std(ddof=1) / np.sqrt(len(per_trial)))
                rows.append((
                    d, args.M, samples[0].r, float(actual),
                    float(snr_db), float(mp_lmmse(actual, alpha)),
                    float(per_trial.mean()), stderr, args.trials, args.seed,
                ))
    _emit_table(args, config, columns, rows)


def cmd_spectrum(args):
    if args.bins < 1:
        raise ValueError(f"bins must be positive, got {args.bins}")
    if not 0 < args.beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {args.beta}")
    config = {
        "command": "spectrum", "d": args.d, "M": args.M, "beta": args.beta,
        "trials": args.trials, "seed": args.seed, "bins": args.bins,
        "format": args.format,
    }
    samples = collect_spectra(args.d, args.M, args.beta, args.trials, args.seed,
                              threads=args.threads, max_bytes=args.max_mem)
    pooled = np.concatenate([s.eigenvalues for s in samples])
    counts, edges = np.histogram(pooled, bins=args.bins)
    mass = counts / counts.sum()
    centers = (edges[:-1] + edges[1:]) / 2
    density = mp_pdf(centers, MPParams(samples[0].beta))
    columns = ("bin_left", "bin_right", "bin_center", "mass", "mp_pdf")
    rows = [
        (float(edges[i]), float(edges[i + 1]), float(centers[i]),
         float(mass[i]), float(density[i]))
        for i in range(args.bins)
    ]
    _emit_table(args, config, columns, rows)


def cmd_mp(args):
    wants_moments = args.p is not None
    wants_mse = args.snr is not None or args.snr_grid is not None
    if wants_moments == wants_mse:
        raise ValueError("give exactly one of --p (limit moments) or an SNR grid (LMMSE)")
    config = {"command": "mp", "beta": args.beta, "format": args.format}
    if wants_moments:
        config["p"] = args.p
        columns = ("beta", "p", "moment_mp")
        rows = [
            (float(beta), p, float(mp_moment(p, beta)))
            for beta in args.beta for p in range(1, args.p + 1)
        ]
    else:
        snrs = _resolve_snrs(args)
        config["snr_db"] = snrs
        columns = ("beta", "snr_db", "alpha", "mse_mp")
        rows = []
        for beta in args.beta:
            for snr_db in snrs:
                alpha = _alpha_of(snr_db)
                rows.append((float(beta), float(snr_db), alpha,
                             float(mp_lmmse(beta, alpha))))
    _emit_table(args, config, columns, rows)


# --- parser wiring ---------------------------------------------------------------


def _add_output_flags(sub):
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_sim_flags(sub):
    sub.add_argument("--trials", type=int, default=50)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1,
                     help="trial-level worker threads; never affects the output")
    sub.add_argument("--max-mem", type=int, default=None,
                     help="memory budget in bytes (default 2 GiB or "
                          "SAMPSPECTRA_MAX_MEM)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sampspectra",
        description="Eigenvalue moments and reconstruction error for "
                    "irregularly sampled multidimensional fields.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("moments", help="exact moment expansion over d and beta")
    sub.add_argument("--p", type=int, required=True)
    sub.add_argument("--d", type=_int_list, required=True, help="comma list")
    sub.add_argument("--beta", type=_float_list, required=True, help="comma list")
    _add_output_flags(sub)
    sub.set_defaults(func=cmd_moments)

    sub = subs.add_parser("volume", help="reduction trace and exact volume")
    sub.add_argument("path", help="partition path as a comma list, e.g. 1,2,1,2")
    _add_output_flags(sub)
    sub.set_defaults(func=cmd_volume)

    sub = subs.add_parser("mse", help="MP closed form vs seeded simulation")
    sub.add_argument("--d", type=_int_list, required=True, help="comma list")
    sub.add_argument("--M", type=int, required=True)
    sub.add_argument("--beta", type=_float_list, required=True, help="comma list")
    sub.add_argument("--snr", type=_snr_list, default=None,
                     help="comma list of SNRs in dB; 'inf' for noiseless")
    sub.add_argument("--snr-grid", type=_snr_grid, default=None,
                     help="start:stop:step in dB, inclusive")
    _add_sim_flags(sub)
    _add_output_flags(sub)
    sub.set_defaults(func=cmd_mse)

    sub = subs.add_parser("spectrum", help="pooled eigenvalue histogram vs MP pdf")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--M", type=int, required=True)
    sub.add_argument("--beta", type=float, required=True)
    sub.add_argument("--bins", type=int, default=50)
    _add_sim_flags(sub)
    _add_output_flags(sub)
    sub.set_defaults(func=cmd_spectrum)

    sub = subs.add_parser("mp", help="closed-form MP moments or LMMSE error")
    sub.add_argument("--beta", type=_float_list, required=True, help="comma list")
    sub.add_argument("--p", type=int, default=None,
                     help="emit limit moments for orders 1..p")
    sub.add_argument("--snr", type=_snr_list, default=None)
    sub.add_argument("--snr-grid", type=_snr_grid, default=None)
    _add_output_flags(sub)
    sub.set_defaults(func=cmd_mp)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except IntegrityError as exc:
        print(f"numerical integrity error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
