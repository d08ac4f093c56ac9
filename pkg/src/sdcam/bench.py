"""Benchmark experiments: data generation, runners, and report emission.

Runners sweep (size, seed, solver) cells, time each solve, and emit rows
with the schema

    experiment,size,sigma,seed,solver,iter,cpu_seconds,fval,vio

where ``iter`` counts inner prox-gradient iterations summed over all
smoothing stages, ``fval`` is the terminal objective (for the constrained
matrix experiment, its smooth part) and ``vio`` is the terminal distance
to the envelope-smoothed constraint (empty for the fused experiment).
Everything except cpu_seconds is deterministic for fixed seeds.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .model import eval_F
from .moreau import moreau_value
from .problems import FusedConfig, SlrConfig, build_fused, build_slr
from .prox import HalfPower, prox_half
from .solver import SdcamParams, sdcam_run, snpg_run

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "gen_fused_signal",
    "gen_slr",
    "run_fused",
    "run_slr",
    "emit_moreau_figure",
    "write_rows_csv",
    "write_summary_csv",
    "CSV_HEADER",
]

CSV_HEADER = ["experiment", "size", "sigma", "seed", "solver", "iter", "cpu_seconds", "fval", "vio"]

FUSED_SOLVERS = ("sdcam", "snpg7", "snpg8")
SLR_SOLVERS = ("sdcam_r", "sdcam_s")


@dataclass
class ExperimentConfig:
    """One sweep of an experiment over sizes, seeds and solvers."""

    experiment: str
    sizes: list
    sigma: float
    seeds: list
    solvers: list
    scale: str = "desk"
    n: int = 500
    k: int = 10
    s: int | None = None

    def __post_init__(self):
        if self.experiment not in ("fused", "slr"):
            raise ValueError("experiment must be 'fused' or 'slr'")
        if not self.sizes or not self.seeds or not self.solvers:
            raise ValueError("sizes, seeds and solvers must be nonempty")
        known = FUSED_SOLVERS if self.experiment == "fused" else SLR_SOLVERS
        for sv in self.solvers:
            if sv not in known:
                raise ValueError(f"unknown solver '{sv}' for {self.experiment}")
        if self.scale not in ("paper", "desk"):
            raise ValueError("scale must be 'paper' or 'desk'")


@dataclass
class ResultRow:
    experiment: str
    size: int
    sigma: float
    seed: int
    solver: str
    iter: int
    cpu_seconds: float
    fval: float
    vio: float | None = None

    def as_csv(self) -> list:
        return [
            self.experiment,
            self.size,
            f"{self.sigma:.6g}",
            self.seed,
            self.solver,
            self.iter,
            f"{self.cpu_seconds:.3f}",
            f"{self.fval:.10e}",
            "" if self.vio is None else f"{self.vio:.10e}",
        ]


def gen_fused_signal(config: FusedConfig, seed: int):
    """Blocky ground truth plus Gaussian noise.

    Picks 6 of the 10 anchor positions i*n/10, lays a constant block of
    random sign and level in {1, 2, 3} over the 1-based index range
    [i*n/10 - 3n/50 - u, i*n/10] with u drawn from {1, 2, 3} (clamped at
    the first index), then adds sigma-scaled white noise.  Returns
    (x_true, b).
    """
    n = config.n
    rng = np.random.default_rng(seed)
    anchors = np.sort(rng.permutation(np.arange(1, 11))[:6])
    x = np.zeros(n)
    for a in anchors:
        sign = 1.0 if rng.standard_normal() > 0 else -1.0
        u = int(rng.integers(1, 4))
        v = float(rng.integers(1, 4))
        end = n * int(a) // 10          # 1-based inclusive end
        start = max(end - 3 * n // 50 - u, 1)  # 1-based inclusive start
        x[start - 1 : end] = sign * v
    b = x + config.sigma * rng.standard_normal(n)
    return x, b


def gen_slr(config: SlrConfig, seed: int) -> np.ndarray:
    """Noisy product of Gaussian factors with a tenth of the rows zeroed."""
    rng = np.random.default_rng(seed)
    M1 = rng.standard_normal((config.m, config.k))
    M2 = rng.standard_normal((config.k, config.n))
    dead = rng.choice(config.m, size=config.m // 10, replace=False)
    M1[dead, :] = 0.0
    return M1 @ M2 + config.sigma * rng.standard_normal((config.m, config.n))


def _fused_solve(solver: str, problem, b, c1: float, c2: float):
    if solver == "sdcam":
        return sdcam_run(problem)
    stop = 1e-7 if solver == "snpg7" else 1e-8
    return snpg_run(b, c1, c2, p=0.5, params=SdcamParams(lambda_stop=stop))


def run_fused(config: ExperimentConfig):
    """Sweep the fused experiment.

    Returns (rows, payload, errors): payload holds, per size, the first
    seed's signal and recoveries for plotting; errors lists
    (size, seed, solver, message) for cells that raised.
    """
    rows: list[ResultRow] = []
    payload: dict = {}
    errors: list = []
    for size in config.sizes:
        fcfg = FusedConfig(int(size), config.sigma)
        for seed in config.seeds:
            x_true, b = gen_fused_signal(fcfg, int(seed))
            problem = build_fused(b, fcfg.c1, fcfg.c2)
            first_cell = seed == config.seeds[0]
            if first_cell:
                payload[int(size)] = {"x_true": x_true, "b": b, "recovered": {}}
            for solver in config.solvers:
                try:
                    t0 = time.perf_counter()
                    rep = _fused_solve(solver, problem, b, fcfg.c1, fcfg.c2)
                    cpu = time.perf_counter() - t0
                except Exception as exc:  # cell failures poison the exit code, not the sweep
                    errors.append((int(size), int(seed), solver, str(exc)))
                    continue
                rows.append(
                    ResultRow(
                        experiment="fused",
                        size=int(size),
                        sigma=config.sigma,
                        seed=int(seed),
                        solver=solver,
                        iter=rep.total_inner_iterations,
                        cpu_seconds=cpu,
                        fval=eval_F(problem, rep.x_final),
                    )
                )
                if first_cell:
                    payload[int(size)]["recovered"][solver] = rep.x_final
    return rows, payload, errors


def _slr_solve(solver: str, M, k: int, s: int):
    split = "rank" if solver == "sdcam_r" else "sparse"
    problem = build_slr(M, k, s, split)

    def stop(x, record):
        return record.feas_distances[0] <= 1e-6 * float(np.linalg.norm(x))

    report = sdcam_run(problem, custom_stop=stop)
    return problem, report


def run_slr(config: ExperimentConfig):
    """Sweep the sparse/low-rank experiment (sizes are row counts m)."""
    rows: list[ResultRow] = []
    payload: dict = {}
    errors: list = []
    for m in config.sizes:
        scfg = SlrConfig(int(m), n=config.n, k=config.k, s=config.s, sigma=config.sigma)
        for seed in config.seeds:
            M = gen_slr(scfg, int(seed))
            first_cell = seed == config.seeds[0]
            if first_cell:
                payload[int(m)] = {}
            for solver in config.solvers:
                try:
                    t0 = time.perf_counter()
                    problem, rep = _slr_solve(solver, M, scfg.k, scfg.s)
                    cpu = time.perf_counter() - t0
                except Exception as exc:
                    errors.append((int(m), int(seed), solver, str(exc)))
                    continue
                X = rep.x_final
                vio = rep.per_outer[-1].feas_distances[0]
                rows.append(
                    ResultRow(
                        experiment="slr",
                        size=int(m),
                        sigma=config.sigma,
                        seed=int(seed),
                        solver=solver,
                        iter=rep.total_inner_iterations,
                        cpu_seconds=cpu,
                        fval=problem.f.value(X),
                        vio=vio,
                    )
                )
                if first_cell:
                    payload[int(m)][solver] = [
                        (rec.lam, rec.feas_distances[0]) for rec in rep.per_outer
                    ]
    return rows, payload, errors


def emit_moreau_figure(lam: float = 0.1, lo: float = -2.0, hi: float = 2.0, num: int = 401):
    """Tabulate |x|^{1/2}, its Moreau envelope, and the smooth surrogate.

    Returns a list of dicts with keys x, f, envelope, smoothing.  The
    envelope never exceeds f, the surrogate (x^2 + lam^2)^{1/4} never
    falls below it, and envelope == f exactly where the prox fixes x.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if num < 2 or hi <= lo:
        raise ValueError("need an increasing grid with at least 2 points")
    grid = np.linspace(lo, hi, num)
    P = HalfPower(1.0)
    rows = []
    for t in grid:
        point = np.array([t])
        rows.append(
            {
                "x": float(t),
                "f": float(np.sqrt(abs(t))),
                "envelope": moreau_value(P, lam, point),
                "smoothing": float((t * t + lam * lam) ** 0.25),
                "prox_fixes": bool(prox_half(point, lam)[0] == t),
            }
        )
    return rows


def write_rows_csv(rows, path) -> None:
    """Write result rows under the fixed header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.as_csv())


def write_summary_csv(rows, path) -> None:
    """Per-(size, solver) means of iterations, time, objective, violation."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.experiment, row.size, row.solver), []).append(row)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["experiment", "size", "solver", "cells", "mean_iter", "mean_cpu_seconds", "mean_fval", "mean_vio"]
        )
        for (exp, size, solver) in sorted(groups):
            g = groups[(exp, size, solver)]
            vios = [r.vio for r in g if r.vio is not None]
            w.writerow(
                [
                    exp,
                    size,
                    solver,
                    len(g),
                    f"{np.mean([r.iter for r in g]):.1f}",
                    f"{np.mean([r.cpu_seconds for r in g]):.3f}",
                    f"{np.mean([r.fval for r in g]):.10e}",
                    f"{np.mean(vios):.10e}" if vios else "",
                ]
            )
