"""Solvers: exact enumeration, classical heuristics, simulated-quantum loops.

Every solver takes a :class:`~qopt.model.DiagonalObjective` (or a
:class:`~qopt.problems.ProblemInstance`) and returns a :class:`SolveResult`
whose best energy always equals re-evaluating its best assignment. All
solvers are replay-deterministic: the same configuration and seed reproduce
the same result. ``certificate`` is set only by exhaustive enumeration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from qopt._rng import derive_seed
from qopt.model import (
    DiagonalObjective,
    IsingModel,
    QuboModel,
    index_to_bits,
    ising_to_qubo,
    qubo_to_ising,
)
from qopt.problems import ProblemInstance
from qopt.simulator import (
    CapacityError,
    QaoaParams,
    SampleSet,
    Statevector,
    WarmStart,
    cvar,
    energy_table,
    expectation,
    qaoa_state,
    sample,
    statevector_cap,
)

__all__ = [
    "SolveResult",
    "solve_result_to_json",
    "brute_force",
    "simulated_annealing",
    "grover_adaptive_search",
    "qaoa_solve",
    "recursive_qaoa",
    "transfer_parameters",
]

# Streaming enumeration tolerates a few qubits beyond the statevector cap
# since it never materializes amplitudes, only fixed-size energy chunks.
_STREAM_EXTRA = 4
_CHUNK_BITS = 20


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of one solver run.

    ``certificate`` is True only when the result came from exhaustive
    enumeration, in which case ``c_min``/``c_max``/``argmin`` describe the
    exact spectrum edges and the complete optimum set. ``samples`` is set by
    sampling-based solvers, ``params`` by variational ones. ``timings`` maps
    phase names to wall seconds; ``trace`` is the solver's iteration log.
    """

    best_assignment: tuple[int, ...]
    best_energy: float
    certificate: bool = False
    c_min: float | None = None
    c_max: float | None = None
    argmin: tuple[tuple[int, ...], ...] | None = None
    samples: SampleSet | None = None
    params: QaoaParams | None = None
    timings: Mapping[str, float] = field(default_factory=dict)
    trace: tuple = ()
    extras: Mapping = field(default_factory=dict)


def solve_result_to_json(result: SolveResult) -> dict:
    """JSON-safe view of a result (patterns rendered as bit strings)."""

    def pattern_str(bits):
        return "".join(str(b) for b in bits)

    data = {
        "best_assignment": pattern_str(result.best_assignment),
        "best_energy": result.best_energy,
        "certificate": result.certificate,
        "c_min": result.c_min,
        "c_max": result.c_max,
        "argmin": None if result.argmin is None else [pattern_str(b) for b in result.argmin],
        "params": None
        if result.params is None
        else {"p": result.params.p, "gammas": list(result.params.gammas), "betas": list(result.params.betas)},
        "timings": dict(result.timings),
        "trace": [list(t) if isinstance(t, tuple) else t for t in result.trace],
        "extras": {k: v for k, v in dict(result.extras).items()},
    }
    if result.samples is not None:
        data["samples"] = {
            "shots": result.samples.shots,
            "seed": result.samples.seed,
            "counts": {pattern_str(k): v for k, v in sorted(result.samples.counts.items())},
        }
    return data


def _objective_of(problem) -> DiagonalObjective:
    if isinstance(problem, ProblemInstance):
        return problem.objective
    if isinstance(problem, DiagonalObjective):
        return problem
    raise TypeError(f"expected a problem instance or diagonal objective, got {type(problem).__name__}")


def brute_force(problem) -> SolveResult:
    """Exact enumeration: spectrum edges and the complete argmin set.

    Works in memory up to the statevector cap and in fixed-size streaming
    chunks for a few qubits beyond it. This is the reference oracle every
    other solver is tested against.
    """
    obj = _objective_of(problem)
    limit = statevector_cap() + _STREAM_EXTRA
    if obj.n > limit:
        raise CapacityError(f"{obj.n} variables exceed the enumeration limit of {limit}")
    started = time.perf_counter()
    total = 1 << obj.n
    chunk = 1 << min(obj.n, _CHUNK_BITS)
    c_min = math.inf
    c_max = -math.inf
    argmin_idx: list[int] = []
    for start in range(0, total, chunk):
        table = obj.energies_at(np.arange(start, min(start + chunk, total), dtype=np.int64))
        lo = float(table.min())
        hi = float(table.max())
        if hi > c_max:
            c_max = hi
        if lo < c_min:
            c_min = lo
            argmin_idx = []
        if lo == c_min:
            argmin_idx.extend(int(start + k) for k in np.flatnonzero(table == c_min))
    argmin = tuple(index_to_bits(idx, obj.n) for idx in argmin_idx)
    return SolveResult(
        best_assignment=argmin[0],
        best_energy=c_min,
        certificate=True,
        c_min=c_min,
        c_max=c_max,
        argmin=argmin,
        timings={"enumerate": time.perf_counter() - started},
        extras={"states": total},
    )


def _geometric_temperatures(t_hot: float, t_cold: float, sweeps: int) -> np.ndarray:
    if sweeps == 1:
        return np.array([t_hot])
    ratio = (t_cold / t_hot) ** (1.0 / (sweeps - 1))
    return t_hot * ratio ** np.arange(sweeps)


def _probe_temperature(obj: DiagonalObjective, rng: np.random.Generator) -> float:
    # Hot end sized from observed flip magnitudes on random states.
    probes = min(256, 1 << min(obj.n, 16))
    idx = rng.integers(0, 1 << obj.n, size=probes, dtype=np.int64)
    flips = rng.integers(0, obj.n, size=probes)
    deltas = np.abs(obj.energies_at(idx ^ (np.int64(1) << flips)) - obj.energies_at(idx))
    scale = float(deltas.mean())
    return scale if scale > 0 else 1.0


def _coupling_matrix(obj: DiagonalObjective) -> tuple[np.ndarray, np.ndarray, float] | None:
    src = obj.source
    if isinstance(src, IsingModel):
        src = ising_to_qubo(src)
    if not isinstance(src, QuboModel):
        return None
    return src.linear_vector(), src.pair_matrix(), src.offset


def simulated_annealing(
    problem,
    sweeps: int = 1000,
    temperatures: Sequence[float] | None = None,
    restarts: int = 1,
    seed: int = 0,
) -> SolveResult:
    """Single-flip Metropolis annealing with restarts, geometric schedule.

    One sweep proposes one flip per variable. The default schedule runs
    geometrically from a probed hot temperature down to a thousandth of it;
    pass ``temperatures`` (one entry per sweep) to override. All restarts
    advance in lockstep on a shared proposal order but accept independently,
    which keeps the run deterministic for a given seed.
    """
    obj = _objective_of(problem)
    if sweeps < 1:
        raise ValueError(f"need at least one sweep, got {sweeps}")
    if restarts < 1:
        raise ValueError(f"need at least one restart, got {restarts}")
    if obj.n == 0:
        return SolveResult(best_assignment=(), best_energy=obj.value(()), timings={"anneal": 0.0})
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    if temperatures is None:
        t_hot = _probe_temperature(obj, rng)
        temps = _geometric_temperatures(t_hot, max(t_hot * 1e-3, 1e-12), sweeps)
    else:
        temps = np.asarray([float(t) for t in temperatures], dtype=np.float64)
        if temps.shape != (sweeps,) or (temps <= 0).any():
            raise ValueError("temperature schedule needs one positive entry per sweep")

    n = obj.n
    use_table = n <= _CHUNK_BITS
    quad = None if use_table else _coupling_matrix(obj)

    if use_table:
        table = energy_table(obj)
        state = rng.integers(0, 1 << n, size=restarts, dtype=np.int64)
        energy = table[state]
        best_e = energy.copy()
        best_s = state.copy()
        for t in temps:
            for v in rng.permutation(n):
                proposal = state ^ (np.int64(1) << int(v))
                delta = table[proposal] - energy
                accept = (delta <= 0) | (rng.random(restarts) < np.exp(-delta / t))
                state = np.where(accept, proposal, state)
                energy = np.where(accept, table[proposal], energy)
                improved = energy < best_e
                best_e = np.where(improved, energy, best_e)
                best_s = np.where(improved, state, best_s)
        winner = int(best_e.argmin())
        best_bits = index_to_bits(int(best_s[winner]), n)
        best_energy = float(best_e[winner])
        per_restart = [float(e) for e in best_e]
    elif quad is not None:
        lin, pairs, offset = quad
        x = rng.integers(0, 2, size=(restarts, n)).astype(np.float64)
        # Local fields g[r, i] give the energy change of flipping bit i as
        # (1 - 2 x_i) g_i; they are updated incrementally on each accept.
        g = x @ pairs + lin
        energy = offset + x @ lin + 0.5 * np.einsum("ri,ri->r", x @ pairs, x)
        best_e = energy.copy()
        best_x = x.copy()
        for t in temps:
            for v in rng.permutation(n):
                delta = (1.0 - 2.0 * x[:, v]) * g[:, v]
                accept = (delta <= 0) | (rng.random(restarts) < np.exp(-delta / t))
                sign = np.where(accept, 1.0 - 2.0 * x[:, v], 0.0)
                x[accept, v] = 1.0 - x[accept, v]
                g += np.outer(sign, pairs[v])
                energy = energy + np.where(accept, delta, 0.0)
                improved = energy < best_e
                best_e = np.where(improved, energy, best_e)
                best_x[improved] = x[improved]
        winner = int(best_e.argmin())
        best_bits = tuple(int(b) for b in best_x[winner])
        # Recompute exactly: the incremental energies carry rounding.
        best_energy = obj.value(best_bits)
        per_restart = [float(e) for e in best_e]
    else:
        # Generic fallback for large non-quadratic objectives.
        best_bits = None
        best_energy = math.inf
        per_restart = []
        for _ in range(restarts):
            bits = [int(b) for b in rng.integers(0, 2, size=n)]
            current = obj.value(bits)
            local_best, local_bits = current, tuple(bits)
            for t in temps:
                for v in rng.permutation(n):
                    bits[v] ^= 1
                    candidate = obj.value(bits)
                    delta = candidate - current
                    if delta <= 0 or rng.random() < math.exp(-delta / t):
                        current = candidate
                        if current < local_best:
                            local_best, local_bits = current, tuple(bits)
                    else:
                        bits[v] ^= 1
            per_restart.append(local_best)
            if local_best < best_energy:
                best_energy, best_bits = local_best, local_bits

    return SolveResult(
        best_assignment=tuple(int(b) for b in best_bits),
        best_energy=float(best_energy),
        timings={"anneal": time.perf_counter() - started},
        trace=tuple(per_restart),
        extras={"sweeps": sweeps, "restarts": restarts, "t_hot": float(temps[0]), "t_cold": float(temps[-1])},
    )


def grover_adaptive_search(problem, max_rounds: int = 128, seed: int = 0) -> SolveResult:
    """Threshold-descent amplitude amplification, simulated exactly.

    Maintains a threshold (initialized from one uniform sample) and each
    round amplifies the states strictly below it with a randomized iteration
    count drawn uniformly from [0, m]; on a failed measurement m grows by
    8/7 up to sqrt(N), on success the measured energy becomes the new
    threshold and m resets. Stops when the marked set is empty (the
    threshold then certifiably equals the minimum) or the round budget runs
    out. The threshold trace is strictly decreasing.
    """
    obj = _objective_of(problem)
    if max_rounds < 1:
        raise ValueError(f"need at least one round, got {max_rounds}")
    started = time.perf_counter()
    table = energy_table(obj)
    n_states = table.shape[0]
    order = np.argsort(table, kind="stable")
    sorted_e = table[order]
    rng = np.random.default_rng(seed)

    first = int(rng.integers(0, n_states))
    threshold = float(table[first])
    best_idx = first
    thresholds = [threshold]
    m = 1.0
    m_cap = math.sqrt(n_states)
    marked_empty = False
    rounds_used = 0
    iterations_total = 0

    for _ in range(max_rounds):
        rounds_used += 1
        count = int(np.searchsorted(sorted_e, threshold, side="left"))
        if count == 0:
            marked_empty = True
            break
        theta = math.asin(math.sqrt(count / n_states))
        r = int(rng.integers(0, int(m) + 1))
        iterations_total += r
        p_success = math.sin((2 * r + 1) * theta) ** 2
        if rng.random() < p_success:
            pick = int(rng.integers(0, count))
            best_idx = int(order[pick])
            threshold = float(table[best_idx])
            thresholds.append(threshold)
            m = 1.0
        else:
            m = min(m * 8.0 / 7.0, m_cap)

    best_bits = index_to_bits(best_idx, obj.n)
    return SolveResult(
        best_assignment=best_bits,
        best_energy=float(table[best_idx]),
        timings={"search": time.perf_counter() - started},
        trace=tuple(thresholds),
        extras={
            "rounds_used": rounds_used,
            "marked_set_empty": marked_empty,
            "grover_iterations": iterations_total,
        },
    )


def _grid_axis(points: int, upper: float) -> np.ndarray:
    return np.linspace(0.0, upper, points, endpoint=False)


def _grid_points(p: int) -> int:
    if p <= 1:
        return 8
    if p == 2:
        return 4
    return 2


def qaoa_solve(
    problem,
    p: int = 1,
    objective_mode: str = "mean",
    alpha: float = 0.25,
    initial: str | WarmStart = "plus",
    optimizer_budget: int = 1000,
    shots: int = 2048,
    seed: int = 0,
) -> SolveResult:
    """Variational solve: coarse grid over the angle box, simplex refinement.

    The grid covers ``[0, pi)^p x [0, pi/2)^p`` at 8 points per parameter
    for p=1, 4 for p=2, and 2 beyond; the best grid points seed Nelder-Mead
    refinements. ``objective_mode`` is ``mean`` (exact expectation) or
    ``cvar`` (tail mean of seeded samples; every evaluation reuses one
    derived seed so the optimizer sees a fixed landscape). Evaluations stop
    at ``optimizer_budget``; exhausting it flags the result instead of
    raising. ``p = 0`` just samples the initial state.
    """
    obj = _objective_of(problem)
    if p < 0:
        raise ValueError(f"layer count must be non-negative, got {p}")
    if optimizer_budget < 1:
        raise ValueError(f"optimizer budget must be positive, got {optimizer_budget}")
    if shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    if objective_mode not in ("mean", "cvar"):
        raise ValueError(f"unknown objective mode {objective_mode!r}")
    if objective_mode == "cvar" and not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")

    started = time.perf_counter()
    eval_seed = derive_seed(seed, "cvar-eval")
    evaluations = 0
    budget_exhausted = False
    trace: list[tuple[int, float]] = []
    best_value = math.inf
    best_vec: np.ndarray | None = None

    def objective_value(vec: np.ndarray) -> float:
        nonlocal evaluations, best_value, best_vec
        if evaluations >= optimizer_budget:
            raise _BudgetDone
        evaluations += 1
        params = QaoaParams(p=p, gammas=tuple(vec[:p]), betas=tuple(vec[p:]))
        sv = qaoa_state(obj, params, initial=initial)
        if objective_mode == "mean":
            value = expectation(sv, obj)
        else:
            value = cvar(sample(sv, shots=shots, seed=eval_seed, obj=obj), alpha)
        if value < best_value:
            best_value = value
            best_vec = vec.copy()
            trace.append((evaluations, value))
        return value

    if p == 0:
        final_params = QaoaParams(p=0, gammas=(), betas=())
        optimize_time = 0.0
    else:
        scored: list[tuple[float, np.ndarray]] = []
        axis_g = _grid_axis(_grid_points(p), math.pi)
        axis_b = _grid_axis(_grid_points(p), math.pi / 2)
        grids = np.meshgrid(*([axis_g] * p + [axis_b] * p), indexing="ij")
        candidates = np.stack([g.ravel() for g in grids], axis=1)
        try:
            for vec in candidates:
                scored.append((objective_value(vec), vec))
            # Refine from the best few grid points; spend what remains.
            scored.sort(key=lambda sv_: sv_[0])
            starts = min(3 if p == 1 else 2, len(scored))
            for _, start_vec in scored[:starts]:
                left = optimizer_budget - evaluations
                if left < 8:
                    break
                minimize(
                    objective_value,
                    start_vec,
                    method="Nelder-Mead",
                    options={
                        "maxfev": left if start_vec is scored[0][1] else max(left // 2, 8),
                        "xatol": 1e-10,
                        "fatol": 1e-12,
                    },
                )
        except _BudgetDone:
            budget_exhausted = True
        final_params = QaoaParams(p=p, gammas=tuple(best_vec[:p]), betas=tuple(best_vec[p:]))
        optimize_time = time.perf_counter() - started

    sv = qaoa_state(obj, final_params, initial=initial)
    mean_energy = expectation(sv, obj)
    samples = sample(sv, shots=shots, seed=derive_seed(seed, "final-sample"), obj=obj)
    best_pattern, best_energy = samples.best()
    return SolveResult(
        best_assignment=best_pattern,
        best_energy=best_energy,
        samples=samples,
        params=final_params,
        timings={"optimize": optimize_time, "total": time.perf_counter() - started},
        trace=tuple(trace),
        extras={
            "mode": objective_mode,
            "alpha": alpha if objective_mode == "cvar" else None,
            "objective_value": best_value if p > 0 else mean_energy,
            "mean_energy": mean_energy,
            "evaluations": evaluations,
            "budget_exhausted": budget_exhausted,
            "warm_start": isinstance(initial, WarmStart),
        },
    )


class _BudgetDone(Exception):
    """Internal: the evaluation budget ran out mid-optimization."""


def _ising_of(obj: DiagonalObjective) -> IsingModel:
    src = obj.source
    if isinstance(src, IsingModel):
        return src
    if isinstance(src, QuboModel):
        return qubo_to_ising(src)
    raise TypeError("recursive reduction needs a quadratic model behind the objective")


def _pair_correlations(sv: Statevector, ising: IsingModel) -> dict[tuple[int, int], float]:
    probs = sv.probabilities()
    idx = np.arange(probs.shape[0], dtype=np.int64)
    out = {}
    for (i, j) in ising.J:
        zi = 1.0 - 2.0 * ((idx >> i) & 1)
        zj = 1.0 - 2.0 * ((idx >> j) & 1)
        out[(i, j)] = float(probs @ (zi * zj))
    return out


def _substitute_spin(ising: IsingModel, i: int, j: int, sign: int) -> IsingModel:
    """Eliminate spin j by the relation z_j = sign * z_i, reindexing above j."""

    def remap(v: int) -> int:
        return v - 1 if v > j else v

    h = list(ising.h)
    offset = ising.offset
    new_h = [0.0] * (ising.n - 1)
    couplings: dict[tuple[int, int], float] = {}

    def add_pair(a: int, b: int, c: float) -> None:
        if a == b:
            nonlocal offset
            offset += c
            return
        key = (min(a, b), max(a, b))
        couplings[key] = couplings.get(key, 0.0) + c

    for v, hv in enumerate(h):
        if hv == 0.0:
            continue
        if v == j:
            new_h[remap(i)] += sign * hv
        else:
            new_h[remap(v)] += hv
    for (a, b), c in ising.J.items():
        if c == 0.0:
            continue
        if a == j and b == j:
            offset += c
        elif a == j:
            add_pair(remap(i), remap(b), sign * c)
        elif b == j:
            add_pair(remap(a), remap(i), sign * c)
        else:
            add_pair(remap(a), remap(b), c)
    couplings = {k: v for k, v in couplings.items() if v != 0.0}
    return IsingModel(n=ising.n - 1, h=tuple(new_h), J=couplings, offset=offset)


def recursive_qaoa(
    problem,
    cutoff: int = 8,
    p: int = 1,
    objective_mode: str = "mean",
    alpha: float = 0.25,
    optimizer_budget: int = 200,
    shots: int = 1024,
    seed: int = 0,
) -> SolveResult:
    """Iterative variable elimination driven by measured pair correlations.

    Each level optimizes a small ansatz on the current spin model, computes
    exact pair correlations over its couplings, and freezes the relation of
    the strongest pair (aligned for non-negative correlation, anti-aligned
    otherwise; ties resolve to the lowest index pair). Eliminations repeat
    until the model reaches ``cutoff`` variables, which are enumerated
    exactly; substitutions then unwind to a full assignment. With
    ``cutoff >= n`` this degenerates to plain enumeration and keeps its
    certificate.
    """
    obj = _objective_of(problem)
    if cutoff < 1:
        raise ValueError(f"cutoff must be at least 1, got {cutoff}")
    started = time.perf_counter()
    if obj.n <= cutoff:
        inner = brute_force(obj)
        return SolveResult(
            best_assignment=inner.best_assignment,
            best_energy=inner.best_energy,
            certificate=True,
            c_min=inner.c_min,
            c_max=inner.c_max,
            argmin=inner.argmin,
            timings={"total": time.perf_counter() - started},
            extras={"substitutions": (), "levels": 0},
        )

    ising = _ising_of(obj)
    # original_of[v] maps a current variable index back to the input index.
    original_of = list(range(obj.n))
    substitutions: list[tuple[int, int, int]] = []
    trace = []
    level = 0
    while ising.n > cutoff and ising.J:
        level += 1
        view = ising.as_objective()
        inner = qaoa_solve(
            view,
            p=p,
            objective_mode=objective_mode,
            alpha=alpha,
            optimizer_budget=optimizer_budget,
            shots=shots,
            seed=derive_seed(seed, "rqaoa-level", level),
        )
        sv = qaoa_state(view, inner.params)
        correlations = _pair_correlations(sv, ising)
        (i, j), corr = max(
            correlations.items(), key=lambda kv: (abs(kv[1]), (-kv[0][0], -kv[0][1]))
        )
        sign = 1 if corr >= 0 else -1
        substitutions.append((original_of[j], original_of[i], sign))
        trace.append((ising.n, original_of[i], original_of[j], corr))
        ising = _substitute_spin(ising, i, j, sign)
        del original_of[j]

    remainder = brute_force(ising.as_objective())
    spin_of = {original_of[k]: 1 - 2 * remainder.best_assignment[k] for k in range(ising.n)}
    for orig_j, orig_i, sign in reversed(substitutions):
        spin_of[orig_j] = sign * spin_of[orig_i]
    best_bits = tuple((1 - spin_of[v]) // 2 for v in range(obj.n))
    return SolveResult(
        best_assignment=best_bits,
        best_energy=obj.value(best_bits),
        timings={"total": time.perf_counter() - started},
        trace=tuple(trace),
        extras={"substitutions": tuple(substitutions), "levels": level, "cutoff": cutoff},
    )


def transfer_parameters(
    source: SolveResult,
    target,
    shots: int = 2048,
    seed: int = 0,
) -> SolveResult:
    """Re-use trained angles on another instance without re-optimizing.

    Prepares the target's ansatz state at the source's parameters (plain
    mixer) and samples it. When the target is small enough to enumerate,
    the extras report the transferred approximation ratio next to a freshly
    optimized baseline and their gap; these are reported metrics only.
    """
    if source.params is None:
        raise ValueError("source result carries no trained parameters")
    obj = _objective_of(target)
    started = time.perf_counter()
    sv = qaoa_state(obj, source.params)
    mean_energy = expectation(sv, obj)
    samples = sample(sv, shots=shots, seed=derive_seed(seed, "transfer-sample"), obj=obj)
    best_pattern, best_energy = samples.best()
    extras = {"mean_energy": mean_energy, "source_params": True}

    if obj.n <= statevector_cap():
        from qopt.bench import approximation_ratio

        exact = brute_force(obj)
        baseline = qaoa_solve(
            obj,
            p=source.params.p,
            objective_mode="mean",
            optimizer_budget=400,
            shots=shots,
            seed=derive_seed(seed, "transfer-baseline"),
        )
        if exact.c_max > exact.c_min:
            ar_t = approximation_ratio(mean_energy, exact.c_min, exact.c_max).ratio
            ar_o = approximation_ratio(
                baseline.extras["mean_energy"], exact.c_min, exact.c_max
            ).ratio
            extras.update(ar_transferred=ar_t, ar_optimized=ar_o, ar_gap=ar_o - ar_t)

    return SolveResult(
        best_assignment=best_pattern,
        best_energy=best_energy,
        samples=samples,
        params=source.params,
        timings={"total": time.perf_counter() - started},
        extras=extras,
    )
