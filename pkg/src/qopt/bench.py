"""Metrics, experiment orchestration, and report emission.

A benchmark run is a matrix of (instance entry) x (solver entry) cells, each
aggregating a number of seeded repetitions into one record. Records carry a
fixed runtime breakdown and range-normalized approximation ratios; reports
render them as CSV (fixed column schema), JSON, or a JUnit-style XML
summary. All randomness derives from the master seed, and the clock is
injectable so replayed runs can produce byte-identical reports.
"""

from __future__ import annotations

import csv
import functools
import inspect
import io
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence
from xml.etree import ElementTree

import numpy as np

from qopt._rng import derive_seed
from qopt.model import DiagonalObjective, IsingModel, QuboModel, density, ising_to_qubo
from qopt.problems import (
    ProblemInstance,
    gen_ev_parking,
    gen_labs,
    gen_market_share,
    gen_maxcut_r3r,
    gen_mis,
    gen_portfolio,
    gen_qap,
    gen_spin_glass,
)
from qopt.simulator import energy_table, statevector_cap
from qopt.solvers import (
    SolveResult,
    brute_force,
    grover_adaptive_search,
    qaoa_solve,
    recursive_qaoa,
    simulated_annealing,
)

__all__ = [
    "ApproximationRatio",
    "approximation_ratio",
    "success_metrics",
    "BenchmarkRecord",
    "BenchmarkConfig",
    "TIME_LIMIT_LADDER",
    "GENERATORS",
    "SOLVERS",
    "run_benchmark",
    "emit_report",
    "emit_junit",
    "CSV_HEADER",
]

# Per-cell wall-clock budgets offered by the harness; explicit limits are
# also accepted.
TIME_LIMIT_LADDER = (1.0, 10.0, 60.0, 600.0, 3600.0, 10000.0)

CSV_HEADER = (
    "problem,algorithm,variables,density,ar_mean,ar_best,depth,shots,seed,"
    "t_generate,t_preprocess,t_compile,t_execute,t_post,t_total"
)

GENERATORS: dict[str, Callable[..., ProblemInstance]] = {
    "maxcut-r3r": gen_maxcut_r3r,
    "mis": gen_mis,
    "udmis": functools.partial(gen_mis, unit_disc=True),
    "market-share": gen_market_share,
    "labs": gen_labs,
    "qap": gen_qap,
    "spin-glass": gen_spin_glass,
    "ev-parking": gen_ev_parking,
    "portfolio": gen_portfolio,
}

SOLVERS: dict[str, Callable[..., SolveResult]] = {
    "brute-force": brute_force,
    "annealing": simulated_annealing,
    "grover": grover_adaptive_search,
    "qaoa": qaoa_solve,
    "rqaoa": recursive_qaoa,
}


class ApproximationRatio(NamedTuple):
    """Range-normalized solution quality plus an out-of-range warning flag."""

    ratio: float
    clamped: bool


def approximation_ratio(value: float, c_min: float, c_max: float) -> ApproximationRatio:
    """(c_max - value) / (c_max - c_min), clamped into [0, 1].

    The problem must already be oriented as minimization; the optimum maps
    to 1 and the worst state to 0. ``clamped`` flags values outside the
    [c_min, c_max] range (possible for mean energies of weighted mixtures
    only through rounding, but common for misreported references).
    """
    if not c_max > c_min:
        raise ValueError(f"degenerate range: c_max={c_max} must exceed c_min={c_min}")
    raw = (c_max - value) / (c_max - c_min)
    if raw < 0.0:
        return ApproximationRatio(0.0, True)
    if raw > 1.0:
        return ApproximationRatio(1.0, True)
    return ApproximationRatio(float(raw), False)


def _wall_time(result: SolveResult) -> float:
    timings = result.timings
    if "total" in timings:
        return float(timings["total"])
    return float(sum(timings.values()))


def success_metrics(
    results: Sequence[SolveResult],
    target="optimal",
    time_limit: float = 60.0,
    c_min: float | None = None,
    c_max: float | None = None,
) -> dict:
    """Success rate and median time-to-target over repeated runs.

    ``target`` is either ``"optimal"`` (hit the certified optimum; needs a
    certificate on the result or an explicit ``c_min``) or ``("ar", theta)``
    with theta in (0, 1], judged on the best-sample AR and requiring both
    range edges. A repetition succeeds when it hits the target within
    ``time_limit`` seconds of solver wall time. ``time_to_target`` is the
    median wall time among successes, None when there are none.
    """
    if not results:
        raise ValueError("need at least one repetition")
    if target != "optimal":
        kind, theta = target
        if kind != "ar":
            raise ValueError(f"unknown target {target!r}")
        if not 0.0 < theta <= 1.0:
            raise ValueError(f"target AR must lie in (0, 1], got {theta}")
        if c_min is None or c_max is None:
            raise ValueError("AR targets need both c_min and c_max")

    hits = []
    for res in results:
        if target == "optimal":
            if res.certificate:
                hit = True
            elif c_min is not None:
                hit = abs(res.best_energy - c_min) <= 1e-9
            else:
                hit = False
        else:
            hit = approximation_ratio(res.best_energy, c_min, c_max).ratio >= theta
        if hit and _wall_time(res) <= time_limit:
            hits.append(_wall_time(res))
    return {
        "success_rate": len(hits) / len(results),
        "time_to_target": statistics.median(hits) if hits else None,
    }


@dataclass(frozen=True)
class BenchmarkRecord:
    """One benchmark cell: an instance/solver pair aggregated over reps.

    ``density`` is the fraction of present couplings; ``ar_mean`` judges
    each repetition's mean sampled energy and ``ar_best`` its best sample,
    both None when the instance is too large to enumerate. The transpile
    and embed fields exist for schema compatibility with hardware report
    rows and are always zero here; they appear in JSON but not CSV.
    """

    problem: str
    algorithm: str
    variables: int
    density: float | None
    ar_mean: float | None
    ar_best: float | None
    depth: int | None
    shots: int | None
    seed: int
    t_generate: float
    t_preprocess: float
    t_compile: float
    t_execute: float
    t_post: float
    t_total: float
    t_transpile: float = 0.0
    t_embed: float = 0.0
    success: bool | None = None
    extras: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("ar_mean", "ar_best"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Declarative run matrix.

    ``instances`` and ``solvers`` are mappings like
    ``{"family": "maxcut-r3r", "params": {"n": 16}}`` and
    ``{"algorithm": "qaoa", "params": {"p": 1}}``. Instance seeds default to
    values derived from the master seed when the generator takes one and the
    params leave it out; solver seeds are always derived per repetition.
    """

    instances: tuple[Mapping, ...] = ()
    solvers: tuple[Mapping, ...] = ()
    repetitions: int = 1
    time_limit: float = 60.0
    target: object = None
    master_seed: int = 0
    jobs: int = 1
    csv_path: str | None = None
    json_path: str | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError(f"need at least one repetition, got {self.repetitions}")
        if self.time_limit <= 0:
            raise ValueError(f"time limit must be positive, got {self.time_limit}")
        if self.jobs < 1:
            raise ValueError(f"need at least one worker, got {self.jobs}")
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "solvers", tuple(self.solvers))


def _cell_label(kind: str, params: Mapping) -> str:
    # Semicolon separator keeps labels comma-free so CSV rows stay unquoted.
    if not params:
        return kind
    inner = ";".join(f"{k}={params[k]}" for k in sorted(params))
    return f"{kind}[{inner}]"


def _density_of(obj: DiagonalObjective) -> float | None:
    src = obj.source
    if isinstance(src, IsingModel):
        src = ising_to_qubo(src)
    if isinstance(src, QuboModel) and src.n >= 2:
        return density(src)
    return None


def _accepts(fn: Callable, name: str) -> bool:
    return name in inspect.signature(fn).parameters


def _run_cell(config: BenchmarkConfig, inst_entry: Mapping, solver_entry: Mapping, clock) -> BenchmarkRecord:
    family = inst_entry.get("family", "?")
    inst_params = dict(inst_entry.get("params", {}))
    algorithm = solver_entry.get("algorithm", "?")
    solver_params = dict(solver_entry.get("params", {}))
    problem_label = _cell_label(family, inst_params)
    algorithm_label = _cell_label(algorithm, solver_params)
    cell_seed = derive_seed(config.master_seed, problem_label, algorithm_label)

    cell_start = clock()
    try:
        generator = GENERATORS[family]
        solver = SOLVERS[algorithm]
        if _accepts(generator, "seed"):
            inst_params.setdefault("seed", derive_seed(config.master_seed, problem_label) % (1 << 32))

        t0 = clock()
        instance = generator(**inst_params)
        t_generate = clock() - t0
        obj = instance.objective
        enumerable = obj.n <= statevector_cap()

        t0 = clock()
        if enumerable:
            energy_table(obj)
        t_compile = clock() - t0

        effective = dict(solver_params)
        for pname, p in inspect.signature(solver).parameters.items():
            if pname not in effective and p.default is not inspect.Parameter.empty:
                effective[pname] = p.default

        t0 = clock()
        results = []
        for rep in range(config.repetitions):
            run_params = dict(solver_params)
            if _accepts(solver, "seed"):
                run_params.setdefault(
                    "seed", derive_seed(config.master_seed, problem_label, algorithm_label, rep)
                )
            results.append(solver(instance, **run_params))
        t_execute = clock() - t0

        t0 = clock()
        ar_mean = ar_best = None
        success = None
        c_min = c_max = None
        mean_energies = [float(r.extras.get("mean_energy", r.best_energy)) for r in results]
        if enumerable:
            reference = brute_force(obj)
            c_min, c_max = reference.c_min, reference.c_max
            if c_max > c_min:
                mean_ars = [approximation_ratio(e, c_min, c_max).ratio for e in mean_energies]
                best_ars = [approximation_ratio(r.best_energy, c_min, c_max).ratio for r in results]
                ar_mean = sum(mean_ars) / len(mean_ars)
                ar_best = max(best_ars)
        if config.target is not None:
            metrics = success_metrics(results, config.target, config.time_limit, c_min, c_max)
            success = metrics["success_rate"] == 1.0
        t_post = clock() - t0

        return BenchmarkRecord(
            problem=problem_label,
            algorithm=algorithm_label,
            variables=obj.n,
            density=_density_of(obj),
            ar_mean=ar_mean,
            ar_best=ar_best,
            depth=effective.get("p") if _accepts(solver, "p") else None,
            shots=effective.get("shots") if _accepts(solver, "shots") else None,
            seed=cell_seed,
            t_generate=t_generate,
            t_preprocess=0.0,
            t_compile=t_compile,
            t_execute=t_execute,
            t_post=t_post,
            t_total=clock() - cell_start,
            success=success,
            extras={
                "repetitions": config.repetitions,
                "best_energies": [r.best_energy for r in results],
                "mean_energies": mean_energies,
                "c_min": c_min,
                "c_max": c_max,
            },
        )
    except Exception as exc:  # noqa: BLE001 - cell failures must not abort the matrix
        return BenchmarkRecord(
            problem=problem_label,
            algorithm=algorithm_label,
            variables=0,
            density=None,
            ar_mean=None,
            ar_best=None,
            depth=None,
            shots=None,
            seed=cell_seed,
            t_generate=0.0,
            t_preprocess=0.0,
            t_compile=0.0,
            t_execute=0.0,
            t_post=0.0,
            t_total=clock() - cell_start,
            success=False if config.target is not None else None,
            extras={"error": f"{type(exc).__name__}: {exc}"},
        )


def run_benchmark(config: BenchmarkConfig, clock: Callable[[], float] = time.perf_counter) -> list[BenchmarkRecord]:
    """Execute the full matrix; one record per (instance, solver) cell.

    Cells run in a thread pool of ``config.jobs`` workers but records come
    back in config order regardless of completion order. Failures are
    captured inside their cell's record. Deterministic given the master
    seed (and byte-identical in reports under an injected constant clock).
    """
    cells = [(inst, solver) for inst in config.instances for solver in config.solvers]
    if not cells:
        return []
    if config.jobs == 1:
        return [_run_cell(config, inst, solver, clock) for inst, solver in cells]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        futures = [pool.submit(_run_cell, config, inst, solver, clock) for inst, solver in cells]
        return [f.result() for f in futures]


def _format_percent(value: float) -> str:
    # Two significant digits, positional (never scientific), no trailing dot.
    return np.format_float_positional(value * 100.0, precision=2, fractional=False, trim="-") + "%"


def _csv_cell(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def _record_row(record: BenchmarkRecord) -> list[str]:
    return [
        record.problem,
        record.algorithm,
        str(record.variables),
        "n/a" if record.density is None else _format_percent(record.density),
        _csv_cell(record.ar_mean),
        _csv_cell(record.ar_best),
        _csv_cell(record.depth),
        _csv_cell(record.shots),
        str(record.seed),
        str(record.t_generate),
        str(record.t_preprocess),
        str(record.t_compile),
        str(record.t_execute),
        str(record.t_post),
        str(record.t_total),
    ]


def record_to_json(record: BenchmarkRecord) -> dict:
    return {
        "problem": record.problem,
        "algorithm": record.algorithm,
        "variables": record.variables,
        "density": record.density,
        "ar_mean": record.ar_mean,
        "ar_best": record.ar_best,
        "depth": record.depth,
        "shots": record.shots,
        "seed": record.seed,
        "t_generate": record.t_generate,
        "t_preprocess": record.t_preprocess,
        "t_compile": record.t_compile,
        "t_execute": record.t_execute,
        "t_post": record.t_post,
        "t_total": record.t_total,
        "t_transpile": record.t_transpile,
        "t_embed": record.t_embed,
        "success": record.success,
        "extras": dict(record.extras),
    }


def emit_report(records: Sequence[BenchmarkRecord], format: str = "csv", path=None) -> str:
    """Render records as CSV or JSON; write to ``path`` when given.

    The CSV column set is fixed (see :data:`CSV_HEADER`); missing values
    print as ``n/a`` and densities as two-significant-digit percentages.
    Returns the rendered text either way.
    """
    if format == "csv":
        lines = [CSV_HEADER]
        for record in records:
            row = _record_row(record)
            if any("," in cell or '"' in cell or "\n" in cell for cell in row):
                buf = io.StringIO()
                csv.writer(buf, lineterminator="").writerow(row)
                lines.append(buf.getvalue())
            else:
                lines.append(",".join(row))
        text = "\n".join(lines) + "\n"
    elif format == "json":
        text = json.dumps({"records": [record_to_json(r) for r in records]}, indent=2) + "\n"
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def emit_junit(records: Sequence[BenchmarkRecord], path=None) -> str:
    """JUnit-style XML summary: one testcase per record.

    A record fails its testcase when its success flag is False or its cell
    recorded an error; records without a target count as passing.
    """
    suite = ElementTree.Element("testsuite", name="qopt-bench", tests=str(len(records)))
    failures = 0
    for record in records:
        case = ElementTree.SubElement(
            suite,
            "testcase",
            classname=record.problem,
            name=record.algorithm,
            time=str(record.t_total),
        )
        error = record.extras.get("error")
        if record.success is False or error is not None:
            failures += 1
            failure = ElementTree.SubElement(case, "failure", message=str(error or "target missed"))
            failure.text = str(error or f"ar_best={record.ar_best}")
    suite.set("failures", str(failures))
    text = ElementTree.tostring(suite, encoding="unicode", xml_declaration=True) + "\n"
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text
