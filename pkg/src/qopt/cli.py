"""Command-line entry point: generate, solve, bench, report, verify.

Every invocation either parses into a valid command or exits with a usage
error (status 2). Runtime failures print a diagnostic and exit 1; success
exits 0. All randomness flows from ``--seed`` (default 0), and
``--cap``/``QOPT_STATEVECTOR_CAP`` bound the exact-simulation size.
"""

from __future__ import annotations

import argparse
import inspect
import json
import math
import os
import sys
from dataclasses import dataclass
from xml.etree import ElementTree

import numpy as np

from qopt import problems as problems_mod
from qopt.bench import (
    SOLVERS,
    BenchmarkConfig,
    BenchmarkRecord,
    emit_junit,
    emit_report,
    run_benchmark,
)
from qopt.problems import instance_from_json, instance_to_json
from qopt.solvers import solve_result_to_json

__all__ = ["CliConfig", "build_parser", "run_cli", "main", "run_verify_checks"]


@dataclass(frozen=True)
class CliConfig:
    """Parsed global invocation state."""

    command: str
    seed: int
    cap: int | None
    output: str | None


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qopt",
        description="Benchmarking harness for quantum optimization heuristics.",
    )
    parser.add_argument(
        "--cap",
        type=int,
        default=None,
        help="override the statevector qubit cap (QOPT_STATEVECTOR_CAP)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # Shared by every generate leaf so the flag can follow the family name.
    out_parent = argparse.ArgumentParser(add_help=False)
    out_parent.add_argument("--output", "-o", default=None, help="write to file instead of stdout")

    gen = sub.add_parser("generate", help="generate a benchmark instance as JSON")
    fam = gen.add_subparsers(dest="family", required=True)

    p = fam.add_parser("maxcut-r3r", parents=[out_parent], help="random 3-regular MAXCUT")
    p.add_argument("--n", type=int, required=True)
    _add_seed(p)

    p = fam.add_parser("mis", parents=[out_parent], help="maximum independent set on G(n, p)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--edge-prob", type=float, default=0.3)
    _add_seed(p)

    p = fam.add_parser("udmis", parents=[out_parent], help="unit-disc maximum independent set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--side", type=float, default=None)
    _add_seed(p)

    p = fam.add_parser("market-share", parents=[out_parent], help="market-sharing exact-fit instance")
    p.add_argument("--m", type=int, required=True, help="number of retailers")
    _add_seed(p)

    p = fam.add_parser("labs", parents=[out_parent], help="low-autocorrelation binary sequence")
    p.add_argument("--k", type=int, required=True, help="sequence length")

    p = fam.add_parser("qap", parents=[out_parent], help="quadratic assignment problem")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--penalty", type=float, default=None)
    _add_seed(p)

    p = fam.add_parser("spin-glass", parents=[out_parent], help="seeded spin glass")
    p.add_argument("--topology", choices=("complete", "grid", "heavy-hex"), default="complete")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dist", choices=("pm1", "gaussian"), default="pm1")
    p.add_argument("--cubic-terms", type=int, default=0)
    _add_seed(p)

    p = fam.add_parser("ev-parking", parents=[out_parent], help="EV charging/parking scheduling")
    p.add_argument("--sessions", type=int, required=True, help="number of charging requests")
    p.add_argument("--intervals", type=int, required=True, help="number of time intervals")
    p.add_argument("--spaces", type=int, required=True, help="parking space capacity")
    p.add_argument("--energy", type=int, required=True, help="per-interval power cap")
    _add_seed(p)

    p = fam.add_parser("portfolio", parents=[out_parent], help="mean-variance portfolio selection")
    p.add_argument("--assets", type=int, required=True)
    p.add_argument("--budget", type=int, required=True, help="number of assets to pick")
    p.add_argument("--lam", type=float, default=1.0)
    _add_seed(p)

    slv = sub.add_parser("solve", help="run one solver on an instance file")
    slv.add_argument("instance", help="instance JSON produced by generate")
    slv.add_argument("--solver", choices=sorted(SOLVERS), required=True)
    slv.add_argument("--output", "-o", default=None)
    _add_seed(slv)
    slv.add_argument("--p", type=int, default=None, help="ansatz layers (qaoa, rqaoa)")
    slv.add_argument("--shots", type=int, default=None)
    slv.add_argument("--mode", choices=("mean", "cvar"), default=None, help="training objective")
    slv.add_argument("--alpha", type=float, default=None, help="CVaR tail fraction")
    slv.add_argument("--budget", type=int, default=None, help="optimizer evaluation budget")
    slv.add_argument("--sweeps", type=int, default=None, help="annealing sweeps")
    slv.add_argument("--restarts", type=int, default=None, help="annealing restarts")
    slv.add_argument("--max-rounds", type=int, default=None, help="Grover round budget")
    slv.add_argument("--cutoff", type=int, default=None, help="rqaoa enumeration cutoff")

    ben = sub.add_parser("bench", help="run a benchmark matrix from a config file")
    ben.add_argument("config", help="declarative JSON config")
    ben.add_argument("--csv", default=None, help="CSV report path")
    ben.add_argument("--json", dest="json_out", default=None, help="JSON report path")
    ben.add_argument("--junit", default=None, help="JUnit XML summary path")
    ben.add_argument("--jobs", type=int, default=None, help="parallel worker count")
    ben.add_argument(
        "--deterministic-clock",
        action="store_true",
        help="zero all timing columns so replayed reports are byte-identical",
    )
    ben.add_argument("--seed", type=int, default=None, help="override the config master seed")

    rep = sub.add_parser("report", help="re-render records from a JSON report")
    rep.add_argument("records", help="JSON report produced by bench --json")
    rep.add_argument("--format", choices=("csv", "json"), default="csv")
    rep.add_argument("--output", "-o", default=None)
    rep.add_argument("--junit", default=None, help="also emit a JUnit XML summary")

    ver = sub.add_parser("verify", help="run the invariant checks")
    ver.add_argument("--junit", default=None, help="JUnit XML summary path")
    _add_seed(ver)

    return parser


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_generate(args: argparse.Namespace) -> int:
    family = args.family
    if family == "maxcut-r3r":
        inst = problems_mod.gen_maxcut_r3r(args.n, seed=args.seed)
    elif family == "mis":
        inst = problems_mod.gen_mis(args.n, edge_prob=args.edge_prob, seed=args.seed)
    elif family == "udmis":
        inst = problems_mod.gen_mis(args.n, unit_disc=True, side=args.side, seed=args.seed)
    elif family == "market-share":
        inst = problems_mod.gen_market_share(args.m, seed=args.seed)
    elif family == "labs":
        inst = problems_mod.gen_labs(args.k)
    elif family == "qap":
        inst = problems_mod.gen_qap(args.n, seed=args.seed, penalty=args.penalty)
    elif family == "spin-glass":
        inst = problems_mod.gen_spin_glass(
            args.topology, args.n, dist=args.dist, seed=args.seed, cubic_terms=args.cubic_terms
        )
    elif family == "ev-parking":
        inst = problems_mod.gen_ev_parking(
            args.sessions, args.intervals, args.spaces, args.energy, seed=args.seed
        )
    else:
        inst = problems_mod.gen_portfolio(args.assets, args.budget, seed=args.seed, lam=args.lam)
    _write_or_print(json.dumps(instance_to_json(inst), indent=2), args.output)
    return 0


_SOLVER_FLAGS = {
    "p": "p",
    "shots": "shots",
    "mode": "objective_mode",
    "alpha": "alpha",
    "budget": "optimizer_budget",
    "sweeps": "sweeps",
    "restarts": "restarts",
    "max_rounds": "max_rounds",
    "cutoff": "cutoff",
}


def _cmd_solve(args: argparse.Namespace) -> int:
    with open(args.instance, encoding="utf-8") as fh:
        inst = instance_from_json(json.load(fh))
    solver = SOLVERS[args.solver]
    accepted = inspect.signature(solver).parameters
    kwargs = {}
    for flag, kw in _SOLVER_FLAGS.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if kw not in accepted:
            raise ValueError(f"solver {args.solver!r} does not take --{flag.replace('_', '-')}")
        kwargs[kw] = value
    if "seed" in accepted:
        kwargs["seed"] = args.seed
    result = solver(inst, **kwargs)
    _write_or_print(json.dumps(solve_result_to_json(result), indent=2), args.output)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    target = raw.get("target")
    if isinstance(target, list):
        target = (target[0], float(target[1]))
    if args.seed is not None:
        master_seed = args.seed
    else:
        master_seed = int(raw.get("master_seed", 0))
    config = BenchmarkConfig(
        instances=tuple(raw.get("instances", ())),
        solvers=tuple(raw.get("solvers", ())),
        repetitions=int(raw.get("repetitions", 1)),
        time_limit=float(raw.get("time_limit", 60.0)),
        target=target,
        master_seed=master_seed,
        jobs=args.jobs if args.jobs is not None else int(raw.get("jobs", 1)),
        csv_path=args.csv if args.csv is not None else raw.get("csv_path"),
        json_path=args.json_out if args.json_out is not None else raw.get("json_path"),
    )
    if args.deterministic_clock:
        records = run_benchmark(config, clock=lambda: 0.0)
    else:
        records = run_benchmark(config)
    csv_text = emit_report(records, "csv", config.csv_path)
    if config.json_path:
        emit_report(records, "json", config.json_path)
    if args.junit:
        emit_junit(records, args.junit)
    if config.csv_path is None:
        sys.stdout.write(csv_text)
    return 0


def _records_from_json(payload: dict) -> list:
    return [BenchmarkRecord(**data) for data in payload["records"]]


def _cmd_report(args: argparse.Namespace) -> int:
    with open(args.records, encoding="utf-8") as fh:
        records = _records_from_json(json.load(fh))
    text = emit_report(records, args.format, args.output)
    if args.junit:
        emit_junit(records, args.junit)
    if args.output is None:
        sys.stdout.write(text)
    return 0


def run_verify_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Fast self-contained invariant checks; returns (name, ok, detail) rows.

    These re-derive expected values on the spot (closed forms, second
    formulas, replay comparisons) rather than trusting cached constants.
    """
    from qopt.model import (
        QuboModel,
        evaluate,
        ising_to_qubo,
        penalty_encode,
        qubo_to_ising,
    )
    from qopt.preprocess import decompose_components, fix_variables
    from qopt.problems import gen_labs, gen_spin_glass, labs_energy
    from qopt.simulator import (
        QaoaParams,
        anneal_trotter,
        cvar,
        expectation,
        gibbs_distribution,
        ground_state_overlap,
        qaoa_state,
        sample,
    )
    from qopt.solvers import brute_force, grover_adaptive_search
    from qopt.bench import approximation_ratio

    checks: list[tuple[str, bool, str]] = []

    def check(name: str, fn) -> None:
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report, do not crash the suite
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))

    def random_qubo(n, rng):
        terms = {}
        for i in range(n):
            for j in range(i, n):
                if rng.random() < 0.6:
                    terms[(i, j)] = float(rng.normal())
        return QuboModel(n=n, terms=terms)

    def conversions():
        rng = np.random.default_rng(seed)
        for _ in range(20):
            q = random_qubo(7, rng)
            back = ising_to_qubo(qubo_to_ising(q))
            for idx in range(1 << q.n):
                bits = tuple((idx >> i) & 1 for i in range(q.n))
                if abs(q.energy(bits) - back.energy(bits)) > 1e-9:
                    raise AssertionError(f"round trip drift at {bits}")

    check("qubo-ising round trip (20 models, 1e-9)", conversions)

    def penalty():
        from qopt.model import ConstrainedModel, LinearConstraint

        rng = np.random.default_rng(seed + 1)
        for _ in range(10):
            q = random_qubo(4, rng)
            cm = ConstrainedModel(
                objective=q,
                equalities=(LinearConstraint(coeffs=(1.0, 1.0, 0.0, 0.0), bound=1.0),),
                inequalities=(LinearConstraint(coeffs=(0.0, 0.0, 1.0, 1.0), bound=1.0),),
            )
            compiled = penalty_encode(cm)
            best = brute_force(compiled.as_objective()).c_min
            feasible = [
                q.energy(b)
                for b in (
                    (a, 1 - a, c, d)
                    for a in (0, 1)
                    for c in (0, 1)
                    for d in (0, 1)
                    if c + d <= 1
                )
            ]
            if abs(best - min(feasible)) > 1e-9:
                raise AssertionError("penalty optimum drifted from constrained optimum")

    check("penalty compilation vs constrained enumeration", penalty)

    def single_spin():
        from qopt.model import IsingModel

        obj = IsingModel(n=1, h=(1.0,)).as_objective()
        for g in np.linspace(0, math.pi, 5):
            for b in np.linspace(0, math.pi / 2, 5):
                got = expectation(qaoa_state(obj, QaoaParams(p=1, gammas=(g,), betas=(b,))), obj)
                want = -math.sin(2 * g) * math.sin(2 * b)
                if abs(got - want) > 1e-9:
                    raise AssertionError(f"landscape mismatch at {(g, b)}")
        at_quarter = expectation(
            qaoa_state(obj, QaoaParams(p=1, gammas=(math.pi / 4,), betas=(math.pi / 4,))), obj
        )
        if abs(at_quarter + 1.0) > 1e-9:
            raise AssertionError(f"expected -1 at (pi/4, pi/4), got {at_quarter}")

    check("single-qubit ansatz matches closed form", single_spin)

    def gibbs():
        rng = np.random.default_rng(seed + 2)
        q = random_qubo(6, rng)
        obj = q.as_objective()
        table = np.array([obj.value(tuple((i >> k) & 1 for k in range(6))) for i in range(64)])
        for beta in (0.0, 2.0):
            dist = gibbs_distribution(obj, beta)
            weights = np.exp(-beta * (table - table.min()))
            direct = weights / weights.sum()
            if np.max(np.abs(dist.probabilities - direct)) > 1e-12:
                raise AssertionError(f"Gibbs drift at beta={beta}")

    check("Gibbs reweighting exact (beta 0 and 2, 1e-12)", gibbs)

    def cvar_contract():
        from qopt.simulator import Statevector

        rng = np.random.default_rng(seed + 3)
        q = random_qubo(5, rng)
        obj = q.as_objective()
        sv = Statevector.plus(5)
        shots = 300
        samples = sample(sv, shots=shots, seed=seed, obj=obj)
        mean = float(np.mean(samples.energy_values()))
        if abs(cvar(samples, 1.0) - mean) > 1e-12:
            raise AssertionError("cvar(1) differs from sample mean")
        last = np.inf
        for alpha in (1.0, 0.7, 0.4, 0.1, 1.0 / shots):
            value = cvar(samples, alpha)
            if value > last + 1e-12:
                raise AssertionError("cvar not monotone under shrinking alpha")
            last = value
        if cvar(samples, 1e-9) != samples.best()[1]:
            raise AssertionError("single-sample limit is not the best energy")

    check("CVaR mean/monotone/best-sample contract", cvar_contract)

    def grover():
        rng = np.random.default_rng(seed + 4)
        for trial in range(5):
            obj = random_qubo(6, rng).as_objective()
            ref = brute_force(obj)
            res = grover_adaptive_search(obj, seed=seed + trial)
            tr = res.trace
            if not all(tr[k + 1] < tr[k] for k in range(len(tr) - 1)):
                raise AssertionError("thresholds not strictly decreasing")
            if res.extras["marked_set_empty"] and res.best_energy != ref.c_min:
                raise AssertionError("certified-empty search missed the optimum")

    check("Grover threshold descent", grover)

    def anneal():
        inst = gen_spin_glass("complete", 6, dist="pm1", seed=seed)
        sv = anneal_trotter(inst.objective, T=50.0, steps=500)
        overlap = ground_state_overlap(sv, inst.objective)
        if overlap < 0.9:
            raise AssertionError(f"slow-anneal overlap {overlap:.4f} < 0.9")

    check("Trotterized anneal reaches the ground state", anneal)

    def labs():
        inst = gen_labs(10)
        res = brute_force(inst)
        best = math.inf
        for idx in range(1 << 10):
            s = [1 - 2 * ((idx >> i) & 1) for i in range(10)]
            corr = np.correlate(s, s, mode="full")[10:]
            best = min(best, float(np.sum(corr.astype(float) ** 2)))
        if res.c_min != best:
            raise AssertionError(f"sidelobe enumerators disagree: {res.c_min} vs {best}")
        if labs_energy([1] * 10) != float(sum(k * k for k in range(1, 10))):
            raise AssertionError("constant sequence energy wrong")

    check("LABS enumerator agreement (k=10)", labs)

    def preprocess():
        rng = np.random.default_rng(seed + 5)
        q = random_qubo(5, rng)
        shifted = QuboModel(
            n=10, terms={(i + 5, j + 5): c for (i, j), c in q.terms.items()}, offset=q.offset
        )
        joined = QuboModel(
            n=10, terms={**{k: v for k, v in random_qubo(5, rng).terms.items()}, **shifted.terms}
        )
        dec = decompose_components(joined)
        merged_best = 0.0
        assignment: dict[int, int] = {}
        for comp, index_map in dec.components:
            res = brute_force(comp.as_objective())
            merged_best += res.c_min
            assignment.update(dict(zip(index_map, res.best_assignment)))
        bits = tuple(assignment[i] for i in range(10))
        if abs(joined.energy(bits) - merged_best) > 1e-9:
            raise AssertionError("component optima do not concatenate")
        fixed = fix_variables(joined, {0: 1, 3: 0})
        for idx in range(1 << 8):
            free = [(idx >> k) & 1 for k in range(8)]
            full = [1, free[0], free[1], 0, *free[2:]]
            sub = free
            if abs(joined.energy(full) - fixed.energy(sub)) > 1e-9:
                raise AssertionError("fix_variables energy inconsistency")

    check("decomposition and variable fixing soundness", preprocess)

    def metrics():
        rng = np.random.default_rng(seed + 6)
        for _ in range(50):
            c_min = rng.normal()
            c_max = c_min + abs(rng.normal()) + 0.1
            v = rng.uniform(c_min, c_max)
            base = approximation_ratio(v, c_min, c_max).ratio
            off, scale = rng.normal(), rng.uniform(0.5, 3.0)
            if abs(approximation_ratio(v + off, c_min + off, c_max + off).ratio - base) > 1e-12:
                raise AssertionError("AR not offset invariant")
            if abs(approximation_ratio(v * scale, c_min * scale, c_max * scale).ratio - base) > 1e-12:
                raise AssertionError("AR not scale invariant")

    check("approximation ratio invariances", metrics)

    def replay():
        config = BenchmarkConfig(
            instances=({"family": "maxcut-r3r", "params": {"n": 8, "seed": 1}},),
            solvers=({"algorithm": "annealing", "params": {"sweeps": 30}},),
            repetitions=2,
            master_seed=seed,
        )
        first = emit_report(run_benchmark(config, clock=lambda: 0.0), "csv")
        second = emit_report(run_benchmark(config, clock=lambda: 0.0), "csv")
        if first != second:
            raise AssertionError("replayed report differs")

    check("benchmark replay is byte-identical", replay)

    return checks


def _cmd_verify(args: argparse.Namespace) -> int:
    checks = run_verify_checks(seed=args.seed)
    failures = 0
    for name, ok, detail in checks:
        if ok:
            print(f"ok   {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {detail}")
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    if args.junit:
        root = ElementTree.Element(
            "testsuite", name="qopt-verify", tests=str(len(checks)), failures=str(failures)
        )
        for name, ok, detail in checks:
            case = ElementTree.SubElement(root, "testcase", name=name)
            if not ok:
                ElementTree.SubElement(case, "failure", message=detail)
        with open(args.junit, "w", encoding="utf-8") as fh:
            fh.write(ElementTree.tostring(root, encoding="unicode", xml_declaration=True) + "\n")
    return 0 if failures == 0 else 1


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; 2 for bad invocations, 0 for --help.
        return int(exc.code or 0)
    config = CliConfig(
        command=args.command,
        seed=getattr(args, "seed", 0) or 0,
        cap=args.cap,
        output=getattr(args, "output", None),
    )
    if config.cap is not None:
        os.environ["QOPT_STATEVECTOR_CAP"] = str(config.cap)
    handlers = {
        "generate": _cmd_generate,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "report": _cmd_report,
        "verify": _cmd_verify,
    }
    try:
        return handlers[config.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary turns failures into exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
