"""Benchmark command line.

Subcommands
-----------
fused       denoising with the half-power fused regularizer
slr         simultaneously sparse and low-rank approximation
moreau-fig  tabulate/plot the envelope of |x|^{1/2} against its bounds

Options resolve in the order: built-in scale preset, then the optional
--config key=value file, then explicitly passed flags.  Every subcommand
writes delimited output into --out and, unless --no-figures is given,
renders PNG figures alongside it.  The exit code is nonzero when any
(size, seed, solver) cell fails.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .bench import (
    ExperimentConfig,
    emit_moreau_figure,
    run_fused,
    run_slr,
    write_rows_csv,
    write_summary_csv,
)

_PRESETS = {
    ("fused", "paper"): dict(sizes="2000", sigma=0.1, seeds="0-9", solvers="sdcam,snpg7,snpg8"),
    ("fused", "desk"): dict(sizes="500", sigma=0.1, seeds="0-2", solvers="sdcam,snpg7,snpg8"),
    ("slr", "paper"): dict(sizes="1000", sigma=0.005, seeds="0-9", solvers="sdcam_r,sdcam_s", n=500, k=10),
    ("slr", "desk"): dict(sizes="200", sigma=0.005, seeds="0-2", solvers="sdcam_r,sdcam_s", n=100, k=5),
}


def _parse_int_list(text: str) -> list:
    """Accepts '1,2,3' and ranges 'a-b' (inclusive), or a mix."""
    out = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "-" in piece[1:]:
            a, b = piece.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(piece))
    if not out:
        raise ValueError(f"empty integer list: {text!r}")
    return out


def _load_config(path: str) -> dict:
    """Plain key=value file; '#' starts a comment; keys use - or _."""
    cfg = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (expected key=value): {line!r}")
        key, value = line.split("=", 1)
        cfg[key.strip().lower().replace("-", "_")] = value.strip()
    return cfg


def _resolve(args, key, cfg, preset, cast=str):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    if key in preset:
        return preset[key]
    return None


def _add_common(sub):
    sub.add_argument("--sizes", help="comma list of problem sizes (fused: n, slr: m)")
    sub.add_argument("--sigma", type=float, help="noise level")
    sub.add_argument("--seeds", help="comma list / a-b range of seeds")
    sub.add_argument("--solvers", help="comma list of solver names")
    sub.add_argument("--scale", choices=["paper", "desk"], help="preset (default desk)")
    sub.add_argument("--out", help="output directory (default ./sdcam_out)")
    sub.add_argument("--config", help="key=value file; flags still win")
    sub.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _experiment_config(args, experiment: str) -> tuple:
    cfg = _load_config(args.config) if args.config else {}
    scale = args.scale or cfg.get("scale") or "desk"
    preset = _PRESETS[(experiment, scale)]
    sizes = _parse_int_list(_resolve(args, "sizes", cfg, preset))
    seeds = _parse_int_list(_resolve(args, "seeds", cfg, preset))
    solvers = [s.strip() for s in str(_resolve(args, "solvers", cfg, preset)).split(",") if s.strip()]
    sigma = float(_resolve(args, "sigma", cfg, preset, cast=float))
    out = Path(_resolve(args, "out", cfg, {"out": "sdcam_out"}))
    figures = not args.no_figures and cfg.get("figures", "true").lower() != "false"
    kwargs = dict(
        experiment=experiment,
        sizes=sizes,
        sigma=sigma,
        seeds=seeds,
        solvers=solvers,
        scale=scale,
    )
    if experiment == "slr":
        kwargs["n"] = int(_resolve(args, "n", cfg, preset, cast=int))
        kwargs["k"] = int(_resolve(args, "k", cfg, preset, cast=int))
        s = _resolve(args, "s", cfg, {}, cast=int)
        kwargs["s"] = None if s is None else int(s)
    return ExperimentConfig(**kwargs), out, figures


def _report_errors(errors) -> None:
    for size, seed, solver, msg in errors:
        print(f"error: size={size} seed={seed} solver={solver}: {msg}", file=sys.stderr)


def _cmd_fused(args) -> int:
    config, out, figures = _experiment_config(args, "fused")
    out.mkdir(parents=True, exist_ok=True)
    rows, payload, errors = run_fused(config)
    write_rows_csv(rows, out / "fused_results.csv")
    write_summary_csv(rows, out / "fused_summary.csv")
    if figures and payload:
        from .plots import render_fused_recovery

        for size, data in payload.items():
            if data["recovered"]:
                render_fused_recovery(
                    data["x_true"], data["b"], data["recovered"], out / f"fused_recovery_n{size}.png"
                )
    _report_errors(errors)
    print(f"wrote {len(rows)} rows to {out / 'fused_results.csv'}")
    return 1 if errors else 0


def _cmd_slr(args) -> int:
    config, out, figures = _experiment_config(args, "slr")
    out.mkdir(parents=True, exist_ok=True)
    rows, payload, errors = run_slr(config)
    write_rows_csv(rows, out / "slr_results.csv")
    write_summary_csv(rows, out / "slr_summary.csv")
    if figures and payload:
        from .plots import render_slr_convergence

        for m, traces in payload.items():
            if traces:
                render_slr_convergence(traces, out / f"slr_convergence_m{m}.png")
    _report_errors(errors)
    print(f"wrote {len(rows)} rows to {out / 'slr_results.csv'}")
    return 1 if errors else 0


def _cmd_moreau_fig(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    lam = float(args.lam if args.lam is not None else cfg.get("lam", 0.1))
    lo = float(args.lo if args.lo is not None else cfg.get("lo", -2.0))
    hi = float(args.hi if args.hi is not None else cfg.get("hi", 2.0))
    num = int(args.num if args.num is not None else cfg.get("num", 401))
    out = Path(args.out or cfg.get("out", "sdcam_out"))
    out.mkdir(parents=True, exist_ok=True)
    rows = emit_moreau_figure(lam=lam, lo=lo, hi=hi, num=num)
    path = out / "moreau_figure.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f", "envelope", "smoothing", "prox_fixes"])
        for r in rows:
            w.writerow(
                [
                    f"{r['x']:.10g}",
                    f"{r['f']:.10e}",
                    f"{r['envelope']:.10e}",
                    f"{r['smoothing']:.10e}",
                    int(r["prox_fixes"]),
                ]
            )
    if not args.no_figures:
        from .plots import render_moreau_figure

        render_moreau_figure(rows, out / "moreau_envelope.png")
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdcam", description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p_fused = subs.add_parser("fused", help="fused half-power denoising benchmark")
    _add_common(p_fused)
    p_fused.set_defaults(func=_cmd_fused)

    p_slr = subs.add_parser("slr", help="sparse/low-rank approximation benchmark")
    _add_common(p_slr)
    p_slr.add_argument("--n", type=int, help="column count")
    p_slr.add_argument("--k", type=int, help="rank bound")
    p_slr.add_argument("--s", type=int, help="sparsity budget (default m*n/10)")
    p_slr.set_defaults(func=_cmd_slr)

    p_fig = subs.add_parser("moreau-fig", help="envelope/surrogate comparison table")
    p_fig.add_argument("--lam", type=float, help="smoothing level (default 0.1)")
    p_fig.add_argument("--lo", type=float, help="grid start (default -2)")
    p_fig.add_argument("--hi", type=float, help="grid end (default 2)")
    p_fig.add_argument("--num", type=int, help="grid points (default 401)")
    p_fig.add_argument("--out", help="output directory (default ./sdcam_out)")
    p_fig.add_argument("--config", help="key=value file; flags still win")
    p_fig.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_fig.set_defaults(func=_cmd_moreau_fig)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
