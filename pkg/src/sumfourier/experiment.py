"""Reproducible experiment harness: cells, trials, sweeps and reports.

A cell is one parameter tuple (L, s, n) under a shared (N, eta). Each trial
derives its own counter-based stream from the master seed and the cell
coordinates, draws a fresh signal and a fresh ensemble, certifies the
signal's support, measures with noise of norm exactly eta, solves, and
checks the recovery error against the guarantee bound. Records are sorted
before writing, so outputs are byte-deterministic regardless of scheduling
(timing columns excepted).
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import rng
from .certificate import certify
from .ensemble import entropy_bits, sample_ensemble
from .kvformat import dumps_kv, loads_kv
from .operator import MeasurementData, apply_forward
from .solver import SolverConfig, recovery_error_bound, solve_bpdn
from .verifiers import wilson_bounds

__all__ = [
    "ExperimentConfig",
    "Cell",
    "TrialRecord",
    "TRIAL_COLUMNS",
    "TIMING_COLUMNS",
    "run_cell",
    "sweep",
    "SweepResult",
    "aggregate_records",
    "n_star_table",
    "run_violations",
    "report",
    "parse_trials_csv",
    "default_desk_config",
    "config_to_text",
    "config_from_text",
]

CONFIG_SCHEMA_VERSION = 1


class Cell(NamedTuple):
    L: int
    s: int
    n: int


@dataclass
class ExperimentConfig:
    N: int = 509
    L_values: tuple[int, ...] = (1, 2)
    s_values: tuple[int, ...] = (5,)
    n_grid: tuple[int, ...] = (10, 20, 40)
    eta: float = 0.0
    signal_model: str = "unimodular"
    trials_per_cell: int = 25
    master_seed: int = 20260809
    output_dir: str = "sweep_out"
    measurement_mode: str = "reduced"
    success_tol: float = 1e-4
    workers: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def cells(self) -> list[Cell]:
        return [Cell(L, s, n) for L in self.L_values for s in self.s_values
                for n in self.n_grid]

    def validate(self) -> "ExperimentConfig":
        from .validation import check_prime_modulus

        check_prime_modulus(self.N)
        if not (self.L_values and self.s_values and self.n_grid):
            raise ValueError("L_values, s_values and n_grid must be non-empty")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.measurement_mode not in ("explicit", "reduced"):
            raise ValueError("measurement_mode must be 'explicit' or 'reduced'")
        if not (self.signal_model in ("unimodular", "gaussian")
                or self.signal_model.startswith("file:")):
            raise ValueError(
                "signal_model must be 'unimodular', 'gaussian' or 'file:<path>'"
            )
        return self


def default_desk_config() -> ExperimentConfig:
    """Desk-scale sweep used by the reproducibility gate; a few minutes total."""
    return ExperimentConfig(solver=SolverConfig(max_iters=6000))


def config_to_text(cfg: ExperimentConfig) -> str:
    pairs = {
        "schema_version": str(CONFIG_SCHEMA_VERSION),
        "N": str(cfg.N),
        "L_values": ",".join(str(v) for v in cfg.L_values),
        "s_values": ",".join(str(v) for v in cfg.s_values),
        "n_grid": ",".join(str(v) for v in cfg.n_grid),
        "eta": repr(float(cfg.eta)),
        "signal_model": cfg.signal_model,
        "trials_per_cell": str(cfg.trials_per_cell),
        "master_seed": str(cfg.master_seed),
        "output_dir": cfg.output_dir,
        "measurement_mode": cfg.measurement_mode,
        "success_tol": repr(float(cfg.success_tol)),
        "workers": str(cfg.workers),
        "solver_max_iters": str(cfg.solver.max_iters),
        "solver_primal_tol": repr(float(cfg.solver.primal_tol)),
        "solver_feasibility_tol": repr(float(cfg.solver.feasibility_tol)),
        "solver_step_scale": repr(float(cfg.solver.step_scale)),
    }
    return dumps_kv(pairs)


def config_from_text(text: str) -> ExperimentConfig:
    pairs = loads_kv(text)
    version = int(pairs.get("schema_version", "-1"))
    if version != CONFIG_SCHEMA_VERSION:
        raise ValueError(f"unsupported config schema_version {version}")

    def ints(key, default):
        if key not in pairs:
            return default
        return tuple(int(tok) for tok in pairs[key].split(",") if tok.strip())

    base = ExperimentConfig()
    cfg = ExperimentConfig(
        N=int(pairs.get("N", base.N)),
        L_values=ints("L_values", base.L_values),
        s_values=ints("s_values", base.s_values),
        n_grid=ints("n_grid", base.n_grid),
        eta=float(pairs.get("eta", base.eta)),
        signal_model=pairs.get("signal_model", base.signal_model),
        trials_per_cell=int(pairs.get("trials_per_cell", base.trials_per_cell)),
        master_seed=int(pairs.get("master_seed", base.master_seed)),
        output_dir=pairs.get("output_dir", base.output_dir),
        measurement_mode=pairs.get("measurement_mode", base.measurement_mode),
        success_tol=float(pairs.get("success_tol", base.success_tol)),
        workers=int(pairs.get("workers", base.workers)),
        solver=SolverConfig(
            max_iters=int(pairs.get("solver_max_iters", base.solver.max_iters)),
            primal_tol=float(pairs.get("solver_primal_tol", base.solver.primal_tol)),
            feasibility_tol=float(
                pairs.get("solver_feasibility_tol", base.solver.feasibility_tol)
            ),
            step_scale=float(pairs.get("solver_step_scale", base.solver.step_scale)),
        ),
    )
    return cfg.validate()


@dataclass
class TrialRecord:
    N: int
    L: int
    s: int
    n: int
    eta: float
    trial_index: int
    stream_id: int
    entropy_bits: float
    cert_gram_norm: float
    cert_v_norm: float
    cert_u_inf: float
    cert_pass_conditioning: bool
    cert_pass_v: bool
    cert_pass_u: bool
    cert_pass_all: bool
    solver_iterations: int
    solver_converged: bool
    residual: float
    l1_value: float
    err_l2: float
    error_bound: float
    bound_satisfied: bool
    success: bool
    time_ms_sample: float
    time_ms_certify: float
    time_ms_measure: float
    time_ms_solve: float


TRIAL_COLUMNS = [f.name for f in TrialRecord.__dataclass_fields__.values()]
TIMING_COLUMNS = ["time_ms_sample", "time_ms_certify", "time_ms_measure", "time_ms_solve"]

_INT_COLUMNS = {"N", "L", "s", "n", "trial_index", "stream_id", "solver_iterations"}
_BOOL_COLUMNS = {
    "cert_pass_conditioning", "cert_pass_v", "cert_pass_u", "cert_pass_all",
    "solver_converged", "bound_satisfied", "success",
}


def _format_value(name: str, value) -> str:
    if name in _INT_COLUMNS:
        return str(int(value))
    if name in _BOOL_COLUMNS:
        return "1" if value else "0"
    return repr(float(value))


def _parse_value(name: str, text: str):
    if name in _INT_COLUMNS:
        return int(text)
    if name in _BOOL_COLUMNS:
        return text == "1"
    return float(text)


def _draw_signal(cfg: ExperimentConfig, gen: np.random.Generator, s: int) -> np.ndarray:
    N = cfg.N
    if cfg.signal_model.startswith("file:"):
        path = cfg.signal_model[len("file:"):]
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2 or data.shape[0] != N:
            raise ValueError(
                f"signal file must have {N} rows of 're im', got shape {data.shape}"
            )
        return data[:, 0] + 1j * data[:, 1]
    support = gen.choice(N, size=s, replace=False)
    x = np.zeros(N, dtype=np.complex128)
    if cfg.signal_model == "unimodular":
        x[support] = np.exp(2j * np.pi * gen.random(s))
    else:  # gaussian
        x[support] = (gen.standard_normal(s) + 1j * gen.standard_normal(s)) / math.sqrt(2)
    return x


def _draw_noise(cfg: ExperimentConfig, gen: np.random.Generator, e_ens,
                n_samples: int) -> np.ndarray:
    """Noise of norm exactly eta on the explicit sphere; its orthogonal
    projection onto the occupied-frequency coordinates in reduced mode."""
    eta = cfg.eta
    if eta == 0.0:
        return np.zeros(n_samples, dtype=np.complex128)
    if cfg.measurement_mode == "explicit":
        d = gen.standard_normal(n_samples) + 1j * gen.standard_normal(n_samples)
        return eta * d / np.linalg.norm(d)
    # Projection of a uniform eta-sphere point in C^m onto K coordinates:
    # eta * g / sqrt(||g||^2 + R) with g ~ CN(0, I_K), R ~ Gamma(m - K, 1).
    m = e_ens.num_rows
    K = n_samples
    g = (gen.standard_normal(K) + 1j * gen.standard_normal(K)) / math.sqrt(2)
    rest = gen.standard_gamma(float(m - K)) if m > K else 0.0
    return eta * g / math.sqrt(float(np.sum(np.abs(g) ** 2)) + rest)


def _support_and_signs(x: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((np.arange(x.shape[0]), -np.abs(x)))
    T = np.sort(order[:s])
    vals = x[T]
    mags = np.abs(vals)
    signs = np.where(mags > 0, vals / np.maximum(mags, 1e-300), 1.0 + 0j)
    return T, signs


def run_trial(cfg: ExperimentConfig, cell: Cell, trial_index: int) -> TrialRecord:
    L, s, n = cell
    stream_id = rng.derive_stream(
        cfg.master_seed, "trial", cfg.N, L, s, n, float(cfg.eta), trial_index
    )

    t0 = time.perf_counter()
    ensemble_seed = rng.derive_stream(stream_id, "ensemble")
    e = sample_ensemble(cfg.N, n, L, ensemble_seed)
    t1 = time.perf_counter()

    signal_gen = rng.generator(stream_id, stream=1)
    x = _draw_signal(cfg, signal_gen, s)
    T, signs = _support_and_signs(x, s)
    cert = certify(e, T, signs)
    t2 = time.perf_counter()

    clean = apply_forward(e, x, mode=cfg.measurement_mode)
    noise_gen = rng.generator(stream_id, stream=2)
    noise = _draw_noise(cfg, noise_gen, e, clean.samples.shape[0])
    y = MeasurementData(
        mode=clean.mode,
        samples=clean.samples + noise,
        eta=cfg.eta,
        frequencies=clean.frequencies,
    )
    t3 = time.perf_counter()

    result = solve_bpdn(e, y, cfg.eta, cfg.solver)
    t4 = time.perf_counter()

    err, bound, satisfied = recovery_error_bound(s, cfg.eta, x, result.x_hat)
    v_norm = cert.v_norm if not math.isnan(cert.v_norm) else math.nan
    return TrialRecord(
        N=cfg.N, L=L, s=s, n=n, eta=cfg.eta,
        trial_index=trial_index,
        stream_id=stream_id,
        entropy_bits=entropy_bits(e),
        cert_gram_norm=cert.gram_norm,
        cert_v_norm=v_norm,
        cert_u_inf=cert.u_inf_offsupport,
        cert_pass_conditioning=cert.passes_conditioning,
        cert_pass_v=cert.passes_v,
        cert_pass_u=cert.passes_u,
        cert_pass_all=cert.passes_all,
        solver_iterations=result.iterations,
        solver_converged=result.converged,
        residual=result.residual,
        l1_value=result.l1_value,
        err_l2=err,
        error_bound=bound,
        bound_satisfied=satisfied,
        success=err <= cfg.success_tol,
        time_ms_sample=(t1 - t0) * 1e3,
        time_ms_certify=(t2 - t1) * 1e3,
        time_ms_measure=(t3 - t2) * 1e3,
        time_ms_solve=(t4 - t3) * 1e3,
    )


def run_cell(cfg: ExperimentConfig, cell: Cell) -> list[TrialRecord]:
    return [run_trial(cfg, cell, t) for t in range(cfg.trials_per_cell)]


def _run_cell_worker(args) -> list[TrialRecord]:
    cfg, cell = args
    return run_cell(cfg, cell)


@dataclass
class SweepResult:
    records: list[TrialRecord]
    cells: list[dict]
    n_star: dict


def sweep(cfg: ExperimentConfig) -> SweepResult:
    cfg.validate()
    cells = cfg.cells()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_cell_worker, [(cfg, c) for c in cells]))
        records = [r for chunk in chunks for r in chunk]
    else:
        records = [r for c in cells for r in run_cell(cfg, c)]
    records.sort(key=lambda r: (r.N, r.L, r.s, r.n, r.eta, r.trial_index))
    cell_rows = aggregate_records(records)
    return SweepResult(records=records, cells=cell_rows,
                       n_star=n_star_table(cell_rows))


CELL_COLUMNS = [
    "N", "L", "s", "n", "eta", "trials",
    "success_count", "success_rate", "success_wilson_lo", "success_wilson_hi",
    "cert_pass_count", "cert_pass_rate", "cert_wilson_lo", "cert_wilson_hi",
    "certified_noiseless_count", "certified_noiseless_success_count",
    "certified_noisy_count", "certified_bound_ok_count",
    "entropy_bits",
]


def aggregate_records(records: list[TrialRecord]) -> list[dict]:
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.N, r.L, r.s, r.n, r.eta), []).append(r)
    rows = []
    for key in sorted(groups):
        N, L, s, n, eta = key
        rs = groups[key]
        trials = len(rs)
        succ = sum(r.success for r in rs)
        cert = sum(r.cert_pass_all for r in rs)
        s_lo, s_hi = wilson_bounds(succ, trials)
        c_lo, c_hi = wilson_bounds(cert, trials)
        cert_clean = [r for r in rs if r.cert_pass_all and r.eta == 0.0]
        cert_noisy = [r for r in rs if r.cert_pass_all and r.eta > 0.0]
        rows.append({
            "N": N, "L": L, "s": s, "n": n, "eta": eta, "trials": trials,
            "success_count": succ,
            "success_rate": succ / trials,
            "success_wilson_lo": s_lo,
            "success_wilson_hi": s_hi,
            "cert_pass_count": cert,
            "cert_pass_rate": cert / trials,
            "cert_wilson_lo": c_lo,
            "cert_wilson_hi": c_hi,
            "certified_noiseless_count": len(cert_clean),
            "certified_noiseless_success_count": sum(r.success for r in cert_clean),
            "certified_noisy_count": len(cert_noisy),
            "certified_bound_ok_count": sum(r.bound_satisfied for r in cert_noisy),
            "entropy_bits": rs[0].entropy_bits,
        })
    return rows


def n_star_table(cell_rows: list[dict], target: float = 0.9) -> dict:
    """Smallest grid n per (L, s) whose Wilson lower success bound reaches target."""
    table: dict[tuple[int, int], dict | None] = {}
    for row in cell_rows:
        key = (row["L"], row["s"])
        table.setdefault(key, None)
        if row["success_wilson_lo"] >= target:
            cur = table[key]
            if cur is None or row["n"] < cur["n"]:
                table[key] = {"n": row["n"], "entropy_bits": row["entropy_bits"]}
    return table


def run_violations(records: list[TrialRecord]) -> list[str]:
    """Asserted pipeline invariants; any message here fails the run."""
    out = []
    for r in records:
        tag = f"(L={r.L}, s={r.s}, n={r.n}, trial={r.trial_index})"
        if r.cert_pass_all and r.eta == 0.0 and not r.success:
            out.append(f"certified noiseless trial did not recover {tag}")
        if r.cert_pass_all and r.eta > 0.0 and not r.bound_satisfied:
            out.append(f"certified noisy trial violated the error bound {tag}")
        expected_bits = r.n * math.log2(r.N)
        if abs(r.entropy_bits - expected_bits) > 1e-9 * max(1.0, expected_bits):
            out.append(f"entropy accounting mismatch {tag}")
    return out


def _records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for r in records:
        writer.writerow([_format_value(c, getattr(r, c)) for c in TRIAL_COLUMNS])
    return buf.getvalue()


def parse_trials_csv(text: str) -> list[TrialRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != TRIAL_COLUMNS:
        raise ValueError("trials.csv header does not match the documented columns")
    records = []
    for row in reader:
        kwargs = {c: _parse_value(c, v) for c, v in zip(TRIAL_COLUMNS, row)}
        records.append(TrialRecord(**kwargs))
    return records


def _cells_to_csv(cell_rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CELL_COLUMNS)
    for row in cell_rows:
        out = []
        for c in CELL_COLUMNS:
            v = row[c]
            out.append(str(v) if isinstance(v, (int, np.integer)) else repr(float(v)))
        writer.writerow(out)
    return buf.getvalue()


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render success-vs-n curves from cells.csv (written next to this script).\"\"\"
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = list(csv.DictReader(open(here / "cells.csv")))
by_cell = defaultdict(list)
for r in rows:
    by_cell[(int(r["L"]), int(r["s"]))].append(r)

for (L, s), cell_rows in sorted(by_cell.items()):
    cell_rows.sort(key=lambda r: int(r["n"]))
    ns = [int(r["n"]) for r in cell_rows]
    succ = [float(r["success_rate"]) for r in cell_rows]
    lo = [float(r["success_rate"]) - float(r["success_wilson_lo"]) for r in cell_rows]
    hi = [float(r["success_wilson_hi"]) - float(r["success_rate"]) for r in cell_rows]
    cert = [float(r["cert_pass_rate"]) for r in cell_rows]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.errorbar(ns, succ, yerr=[lo, hi], marker="o", label="recovery success")
    ax.plot(ns, cert, marker="s", linestyle="--", label="certificate pass")
    ax.set_xlabel("n (seeds)")
    ax.set_ylabel("frequency")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"L={L}, s={s}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(here / f"success_vs_n_L{L}_s{s}.png", dpi=150)
    plt.close(fig)
print("plots written to", here)
"""


def report(records: list[TrialRecord], cfg: ExperimentConfig, out_dir) -> dict:
    """Write trials.csv, cells.csv, summary.txt and a plot script.

    Returns the paths written. Everything except the timing columns of
    trials.csv is a pure function of the records.
    """
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    probe.write_text("")  # fail on unwritable directories before any computation
    probe.unlink()

    records = sorted(records, key=lambda r: (r.N, r.L, r.s, r.n, r.eta, r.trial_index))
    cell_rows = aggregate_records(records)
    nstar = n_star_table(cell_rows)

    (out / "trials.csv").write_text(_records_to_csv(records))
    (out / "cells.csv").write_text(_cells_to_csv(cell_rows))
    (out / "plot_success.py").write_text(_PLOT_SCRIPT)

    lines = ["sweep summary", ""]
    lines.append(
        f"config: N={cfg.N} eta={cfg.eta!r} trials_per_cell={cfg.trials_per_cell} "
        f"master_seed={cfg.master_seed} signal_model={cfg.signal_model}"
    )
    lines.append("")
    lines.append("cells:")
    for row in cell_rows:
        lines.append(
            "  L={L} s={s} n={n}: success {sc}/{t} (wilson [{slo:.3f}, {shi:.3f}]) "
            "cert {cc}/{t} entropy_bits={eb:.3f}".format(
                L=row["L"], s=row["s"], n=row["n"], t=row["trials"],
                sc=row["success_count"], slo=row["success_wilson_lo"],
                shi=row["success_wilson_hi"], cc=row["cert_pass_count"],
                eb=row["entropy_bits"],
            )
        )
    lines.append("")
    lines.append("n_star (smallest n with Wilson-lower success >= 0.9):")
    for (L, s), info in sorted(nstar.items()):
        if info is None:
            lines.append(f"  L={L} s={s}: not reached on this grid")
        else:
            lines.append(
                f"  L={L} s={s}: n*={info['n']} entropy_bits={info['entropy_bits']:.3f}"
            )
    noisy = [r for r in records if r.cert_pass_all and r.eta > 0.0]
    ok = sum(r.bound_satisfied for r in noisy)
    lines.append("")
    lines.append(f"bound conformance among certified noisy trials: {ok}/{len(noisy)}")
    clean = [r for r in records if r.cert_pass_all and r.eta == 0.0]
    okc = sum(r.success for r in clean)
    lines.append(f"exact recovery among certified noiseless trials: {okc}/{len(clean)}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")

    return {
        "trials": out / "trials.csv",
        "cells": out / "cells.csv",
        "summary": out / "summary.txt",
        "plot_script": out / "plot_success.py",
    }
