"""Seeded generators for the benchmark problem families.

Each generator returns a :class:`ProblemInstance` bundling the raw
family-specific data, a compiled :class:`~qopt.model.DiagonalObjective`
(always a minimization), the pre-penalty constrained form when the family
has one, and metadata sufficient to regenerate the instance bit-identically.

Families
--------
``maxcut-r3r``
    Max-cut on uniform random 3-regular graphs, minimized as the negated
    cut value.
``mis`` / ``udmis``
    (Weighted) maximum independent set on a random graph, or on a unit-disc
    graph over random points; compiled with the standard edge penalty
    ``P = 1 + sum(weights)``.
``market-share``
    Exact-split multi-row knapsack: minimize the summed squared deviation of
    each row's selected weight from half its total.
``labs``
    Low-autocorrelation binary sequences; the native quartic energy is kept
    as-is (one canonical instance per length).
``qap``
    Quadratic assignment with random integer flow/distance matrices and
    penalty-encoded row/column assignment equalities.
``spin-glass``
    Random couplings on a complete graph, a square grid, or a heavy-hex-like
    lattice; optional experimental cubic terms.
``ev-parking``
    Charging-station admission: accept vehicles to maximize value subject to
    per-interval space and power caps (two knapsack rows per interval).
``portfolio``
    Equal-weight mean-variance asset selection with a cardinality equality.

All generators draw exclusively from ``numpy.random.default_rng(seed)`` in a
fixed order, so identical (family, params, seed) reproduce bit-identical raw
payloads. Distribution choices not pinned down by the problem definitions
(weight ranges, covariance synthesis, demand ranges) are fixed here and
recorded in instance metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from qopt.model import (
    ConstrainedModel,
    DiagonalObjective,
    IsingModel,
    LinearConstraint,
    QuboModel,
    ising_to_qubo,
    model_to_json,
    penalty_encode,
)

__all__ = [
    "ProblemInstance",
    "LabsSequence",
    "FAMILIES",
    "gen_maxcut_r3r",
    "gen_mis",
    "gen_market_share",
    "labs_energy",
    "gen_labs",
    "gen_qap",
    "qap_from_data",
    "gen_spin_glass",
    "gen_ev_parking",
    "ev_parking_from_data",
    "gen_portfolio",
    "portfolio_from_data",
    "labs_to_string",
    "labs_from_string",
    "instance_to_json",
    "instance_from_json",
]

FAMILIES = (
    "maxcut-r3r",
    "mis",
    "udmis",
    "market-share",
    "labs",
    "qap",
    "spin-glass",
    "ev-parking",
    "portfolio",
)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One benchmark instance: raw data, compiled objective, metadata.

    ``raw`` holds JSON-native family data (the payload compared for
    bit-identical regeneration). ``constrained`` is the pre-penalty form for
    families that have one. ``meta`` records the seed, generator parameters,
    and creation timestamp.
    """

    family: str
    raw: Mapping
    objective: DiagonalObjective
    constrained: ConstrainedModel | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown problem family {self.family!r}")

    @property
    def n(self) -> int:
        return self.objective.n


def _meta(seed, params: dict, **extra) -> dict:
    out = {
        "seed": seed,
        "params": params,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Max-cut on random 3-regular graphs


def _maxcut_model(n: int, edges: Sequence[tuple[int, int]]) -> QuboModel:
    # Cut value of edge (u, v) is x_u + x_v - 2 x_u x_v; minimize its negation.
    entries = []
    for u, v in edges:
        entries.append((u, u, -1.0))
        entries.append((v, v, -1.0))
        entries.append((u, v, 2.0))
    return QuboModel.from_entries(n, entries)


def gen_maxcut_r3r(n: int, seed: int = 0) -> ProblemInstance:
    """Max-cut on a uniform random 3-regular graph with ``n`` vertices.

    The objective minimizes ``-C(x)`` where ``C`` counts cut edges, so the
    worst assignment (the empty cut) has energy exactly 0; metadata records
    ``cut_min = 0`` for ratio normalization. ``n`` must be even and at least
    4, otherwise no 3-regular graph exists.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError(f"3-regular graphs need an even vertex count >= 4, got {n}")
    graph = nx.random_regular_graph(3, n, seed=seed)
    edges = sorted((min(u, v), max(u, v)) for u, v in graph.edges())
    model = _maxcut_model(n, edges)
    return ProblemInstance(
        family="maxcut-r3r",
        raw={"n": n, "edges": [[u, v] for u, v in edges]},
        objective=model.as_objective(),
        meta=_meta(seed, {"n": n}, cut_min=0),
    )


# ---------------------------------------------------------------------------
# (Weighted) maximum independent set


def _mis_build(
    n: int,
    edges: list[tuple[int, int]],
    weights: tuple[float, ...],
) -> tuple[QuboModel, ConstrainedModel, float]:
    penalty = 1.0 + sum(weights)
    base = QuboModel(n=n, terms={(v, v): -w for v, w in enumerate(weights) if w != 0.0})
    entries = [(v, v, -w) for v, w in enumerate(weights)]
    entries += [(u, v, penalty) for u, v in edges]
    compiled = QuboModel.from_entries(n, entries)
    rows = []
    for u, v in edges:
        coeffs = [0.0] * n
        coeffs[u] = 1.0
        coeffs[v] = 1.0
        rows.append(LinearConstraint(tuple(coeffs), 1.0))
    constrained = ConstrainedModel(objective=base, inequalities=tuple(rows))
    return compiled, constrained, penalty


def gen_mis(
    n: int,
    edge_prob: float = 0.3,
    points: Sequence[tuple[float, float]] | None = None,
    weights: Sequence[float] | None = None,
    unit_disc: bool = False,
    side: float | None = None,
    seed: int = 0,
) -> ProblemInstance:
    """Weighted maximum independent set, random graph or unit-disc variant.

    The compiled objective is ``-sum(c_v x_v) + P sum(x_u x_v over edges)``
    with ``P = 1 + sum(c_v)``, which makes every optimum an independent set.
    With ``unit_disc`` the graph connects point pairs at distance <= 1;
    points default to uniform draws in a square of side ``sqrt(n)`` (or
    ``side``), and may be supplied explicitly. The pre-penalty form keeps one
    ``x_u + x_v <= 1`` row per edge.
    """
    if n < 1:
        raise ValueError(f"need at least one vertex, got n={n}")
    rng = np.random.default_rng(seed)
    pts = None
    if unit_disc:
        box = math.sqrt(n) if side is None else float(side)
        if box <= 0:
            raise ValueError(f"square side must be positive, got {side}")
        if points is None:
            pts = [(float(x), float(y)) for x, y in rng.uniform(0.0, box, size=(n, 2))]
        else:
            pts = [(float(x), float(y)) for x, y in points]
            if len(pts) != n:
                raise ValueError(f"got {len(pts)} points for n={n} vertices")
        edges = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if math.dist(pts[u], pts[v]) <= 1.0
        ]
    else:
        if points is not None:
            raise ValueError("points are only meaningful with unit_disc=True")
        if not 0.0 <= edge_prob <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {edge_prob}")
        draws = rng.random(size=(n, n))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if draws[u, v] < edge_prob]
    if weights is None:
        w = tuple(1.0 for _ in range(n))
    else:
        w = tuple(float(c) for c in weights)
        if len(w) != n:
            raise ValueError(f"got {len(w)} weights for n={n} vertices")
        if any(c <= 0.0 for c in w):
            raise ValueError("vertex weights must be positive")
    compiled, constrained, penalty = _mis_build(n, edges, w)
    raw: dict = {"n": n, "edges": [[u, v] for u, v in edges], "weights": list(w)}
    params: dict = {"n": n, "unit_disc": unit_disc}
    if unit_disc:
        raw["points"] = [[x, y] for x, y in pts]
        params["side"] = math.sqrt(n) if side is None else float(side)
    else:
        params["edge_prob"] = edge_prob
    return ProblemInstance(
        family="udmis" if unit_disc else "mis",
        raw=raw,
        objective=compiled.as_objective(),
        constrained=constrained,
        meta=_meta(seed, params, penalty=penalty),
    )


# ---------------------------------------------------------------------------
# Market-share splitting


def _market_share_model(weights: np.ndarray, targets: np.ndarray) -> QuboModel:
    # sum_j (w_j . x - C_j)^2, expanded with x_i^2 = x_i.
    m, n = weights.shape
    entries = []
    offset = 0.0
    for j in range(m):
        w = weights[j]
        c = float(targets[j])
        offset += c * c
        for i in range(n):
            if w[i] == 0:
                continue
            entries.append((i, i, float(w[i] * w[i] - 2.0 * c * w[i])))
            for i2 in range(i + 1, n):
                if w[i2] != 0:
                    entries.append((i, i2, float(2.0 * w[i] * w[i2])))
    return QuboModel.from_entries(n, entries, offset=offset)


def gen_market_share(m: int, seed: int = 0) -> ProblemInstance:
    """Exact-split market-share instance with ``m`` rows and ``10(m-1)`` items.

    Row weights are uniform in {0..99} and each target is half the row sum
    (floored). The objective is the summed squared row deviation, so value 0
    means a perfect split. The reference form with signed slacks minimizing
    ``sum |s_j|`` is not linear-quadratic, so only the compiled quadratic is
    carried.
    """
    if m < 2:
        raise ValueError(f"need at least two rows, got m={m}")
    n = 10 * (m - 1)
    rng = np.random.default_rng(seed)
    weights = rng.integers(0, 100, size=(m, n))
    targets = weights.sum(axis=1) // 2
    model = _market_share_model(weights, targets)
    return ProblemInstance(
        family="market-share",
        raw={
            "m": m,
            "n": n,
            "weights": weights.tolist(),
            "targets": targets.tolist(),
        },
        objective=model.as_objective(),
        meta=_meta(seed, {"m": m}),
    )


# ---------------------------------------------------------------------------
# Low-autocorrelation binary sequences


@dataclass(frozen=True)
class LabsSequence:
    """A +/-1 sequence of length ``k``."""

    k: int
    s: tuple[int, ...]

    def __post_init__(self) -> None:
        s = tuple(int(v) for v in self.s)
        if len(s) != self.k:
            raise ValueError(f"sequence has length {len(s)}, declared k={self.k}")
        if any(v not in (-1, 1) for v in s):
            raise ValueError("sequence entries must be -1 or +1")
        object.__setattr__(self, "s", s)


def labs_energy(s: LabsSequence | Sequence[int]) -> float:
    """Sidelobe energy ``sum_{j=1}^{k-1} A_j^2`` with ``A_j = sum_i s_i s_{i+j}``."""
    seq = s.s if isinstance(s, LabsSequence) else tuple(int(v) for v in s)
    k = len(seq)
    if k < 2:
        raise ValueError(f"sequence length must be at least 2, got {k}")
    if any(v not in (-1, 1) for v in seq):
        raise ValueError("sequence entries must be -1 or +1")
    total = 0.0
    for j in range(1, k):
        a = sum(seq[i] * seq[i + j] for i in range(k - j))
        total += float(a * a)
    return total


def labs_to_string(s: LabsSequence | Sequence[int]) -> str:
    """Render a sequence in the plain-text sign format, e.g. ``++-+-``."""
    seq = s.s if isinstance(s, LabsSequence) else tuple(int(v) for v in s)
    if any(v not in (-1, 1) for v in seq):
        raise ValueError("sequence entries must be -1 or +1")
    return "".join("+" if v == 1 else "-" for v in seq)


def labs_from_string(text: str) -> LabsSequence:
    """Parse the plain-text sign format; whitespace is ignored."""
    chars = [c for c in text if not c.isspace()]
    values = []
    for c in chars:
        if c == "+":
            values.append(1)
        elif c == "-":
            values.append(-1)
        else:
            raise ValueError(f"unexpected character {c!r} in sequence text")
    return LabsSequence(k=len(values), s=tuple(values))


def _labs_table_fn(k: int):
    def table(indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        flat = idx.ravel()
        bits = (flat[:, None] >> np.arange(k)) & 1
        spins = 1.0 - 2.0 * bits
        energy = np.zeros(flat.shape[0], dtype=np.float64)
        for j in range(1, k):
            a = np.einsum("mi,mi->m", spins[:, : k - j], spins[:, j:])
            energy += a * a
        return energy.reshape(idx.shape)

    return table


def gen_labs(k: int) -> ProblemInstance:
    """The canonical length-``k`` sequence-energy instance (one per length).

    The quartic energy is kept native rather than quadratized: solvers here
    only ever need assignment energies, and quadratization would inflate the
    variable count. Bit ``i`` maps to spin ``1 - 2 x_i``.
    """
    if k < 2:
        raise ValueError(f"sequence length must be at least 2, got {k}")

    def _eval(bits: tuple[int, ...]) -> float:
        return labs_energy(tuple(1 - 2 * b for b in bits))

    objective = DiagonalObjective(n=k, evaluator=_eval, kind="native", table_fn=_labs_table_fn(k))
    return ProblemInstance(
        family="labs",
        raw={"k": k},
        objective=objective,
        meta=_meta(0, {"k": k}),
    )


# ---------------------------------------------------------------------------
# Quadratic assignment


def qap_from_data(a, b, penalty: float | None = None) -> ProblemInstance:
    """Assignment instance from explicit flow/distance matrices.

    Variables are ``x[i, k] = 1`` iff facility ``i`` sits at location ``k``
    (flattened as ``i * n + k``); the cost sums ``a[i, j] b[k, l]`` over
    placed pairs, and the one-facility-per-location equalities are
    penalty-encoded.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError(f"flow and distance matrices must both be square, got {a.shape} and {b.shape}")
    if n < 2:
        raise ValueError(f"need at least two facilities, got n={n}")

    def var(i: int, k: int) -> int:
        return i * n + k

    entries = []
    for i in range(n):
        for k in range(n):
            if a[i, i] * b[k, k] != 0.0:
                entries.append((var(i, k), var(i, k), float(a[i, i] * b[k, k])))
            for j in range(n):
                for l in range(n):
                    if (i, k) < (j, l) and (a[i, j] * b[k, l] + a[j, i] * b[l, k]) != 0.0:
                        entries.append(
                            (var(i, k), var(j, l), float(a[i, j] * b[k, l] + a[j, i] * b[l, k]))
                        )
    cost = QuboModel.from_entries(n * n, entries)

    rows = []
    for i in range(n):
        coeffs = [0.0] * (n * n)
        for k in range(n):
            coeffs[var(i, k)] = 1.0
        rows.append(LinearConstraint(tuple(coeffs), 1.0))
    for k in range(n):
        coeffs = [0.0] * (n * n)
        for i in range(n):
            coeffs[var(i, k)] = 1.0
        rows.append(LinearConstraint(tuple(coeffs), 1.0))
    constrained = ConstrainedModel(objective=cost, equalities=tuple(rows))
    compiled = penalty_encode(constrained, penalty)
    return ProblemInstance(
        family="qap",
        raw={"n": n, "a": a.tolist(), "b": b.tolist()},
        objective=compiled.as_objective(),
        constrained=constrained,
        meta=_meta(None, {"n": n, "penalty": penalty}, crafted=True),
    )


def gen_qap(n: int, seed: int = 0, penalty: float | None = None) -> ProblemInstance:
    """Random assignment instance: integer matrices uniform in {0..9}."""
    if n < 2:
        raise ValueError(f"need at least two facilities, got n={n}")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 10, size=(n, n))
    b = rng.integers(0, 10, size=(n, n))
    inst = qap_from_data(a, b, penalty)
    return ProblemInstance(
        family="qap",
        raw=inst.raw,
        objective=inst.objective,
        constrained=inst.constrained,
        meta=_meta(seed, {"n": n, "penalty": penalty}),
    )


# ---------------------------------------------------------------------------
# Spin glasses


def _grid_edges(n: int) -> list[tuple[int, int]]:
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"grid topology needs a perfect-square size, got n={n}")
    edges = []
    for r in range(side):
        for c in range(side):
            v = r * side + c
            if c + 1 < side:
                edges.append((v, v + 1))
            if r + 1 < side:
                edges.append((v, v + side))
    return edges


# Heavy-hex-like lattice: seven horizontal chains (14/15/.../14 sites) joined
# by four bridge sites per gap; bridges attach at columns 0,4,8,12 or
# 2,6,10,14 in alternating gaps, with the final 14-site row shifted one
# column left where column 14 does not exist. Sites number row-by-row with
# each gap's bridges following the row above, 127 sites in total; smaller
# sizes keep the lowest-numbered sites and the edges among them.
_HEAVY_HEX_ROWS = (14, 15, 15, 15, 15, 15, 14)


def _heavy_hex_edges(n: int) -> list[tuple[int, int]]:
    if not 2 <= n <= 127:
        raise ValueError(f"heavy-hex-like topology supports 2..127 sites, got n={n}")
    row_start = []
    nid = 0
    bridges = []
    for r, length in enumerate(_HEAVY_HEX_ROWS):
        row_start.append(nid)
        nid += length
        if r < len(_HEAVY_HEX_ROWS) - 1:
            bridges.append(nid)
            nid += 4
    edges = []
    for r, length in enumerate(_HEAVY_HEX_ROWS):
        for c in range(length - 1):
            edges.append((row_start[r] + c, row_start[r] + c + 1))
    for gap in range(len(_HEAVY_HEX_ROWS) - 1):
        cols = (0, 4, 8, 12) if gap % 2 == 0 else (2, 6, 10, 14)
        for t, col in enumerate(cols):
            bridge = bridges[gap] + t
            upper = col if col < _HEAVY_HEX_ROWS[gap] else col - 1
            lower = col if col < _HEAVY_HEX_ROWS[gap + 1] else col - 1
            edges.append((row_start[gap] + upper, bridge))
            edges.append((bridge, row_start[gap + 1] + lower))
    kept = sorted(
        (min(u, v), max(u, v)) for u, v in edges if u < n and v < n
    )
    return kept


def gen_spin_glass(
    topology: str,
    n: int,
    dist: str = "pm1",
    seed: int = 0,
    cubic_terms: int = 0,
) -> ProblemInstance:
    """Random spin glass on the requested coupling topology, zero fields.

    ``topology`` is ``complete``, ``grid`` (square lattice, perfect-square
    ``n``), or ``heavy-hex-like`` (a 127-site heavy-hex-style lattice
    truncated to ``n``). Couplings are drawn per sorted edge from ``dist``:
    ``pm1`` (uniform +/-1) or ``gaussian`` (standard normal).

    ``cubic_terms`` optionally adds that many random three-spin terms; this
    is experimental (the objective becomes a polynomial with no quadratic
    model attached).
    """
    if n < 2:
        raise ValueError(f"need at least two spins, got n={n}")
    if topology == "complete":
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif topology == "grid":
        edges = _grid_edges(n)
    elif topology == "heavy-hex-like":
        edges = _heavy_hex_edges(n)
    else:
        raise ValueError(f"unknown topology {topology!r}")
    if dist not in ("pm1", "gaussian"):
        raise ValueError(f"unknown coupling distribution {dist!r}")
    if cubic_terms < 0:
        raise ValueError(f"cubic term count must be non-negative, got {cubic_terms}")

    rng = np.random.default_rng(seed)

    def draw() -> float:
        if dist == "pm1":
            return float(rng.integers(0, 2) * 2 - 1)
        return float(rng.normal())

    couplings = {edge: draw() for edge in sorted(edges)}
    model = IsingModel(n=n, J=couplings)
    raw: dict = {
        "n": n,
        "topology": topology,
        "edges": [[u, v] for u, v in couplings],
        "couplings": [c for c in couplings.values()],
    }
    meta = _meta(seed, {"topology": topology, "n": n, "dist": dist, "cubic_terms": cubic_terms})

    if cubic_terms == 0:
        return ProblemInstance(
            family="spin-glass", raw=raw, objective=model.as_objective(), meta=meta
        )

    if n < 3:
        raise ValueError("cubic terms need at least three spins")
    cubic: list[tuple[int, int, int, float]] = []
    for _ in range(cubic_terms):
        a, b, c = sorted(int(v) for v in rng.choice(n, size=3, replace=False))
        cubic.append((a, b, c, draw()))
    raw["cubic"] = [[a, b, c, w] for a, b, c, w in cubic]

    def _eval(bits: tuple[int, ...]) -> float:
        spins = tuple(1 - 2 * b for b in bits)
        total = model.energy(spins)
        for a, b, c, w in cubic:
            total += w * spins[a] * spins[b] * spins[c]
        return total

    def _table(indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        out = model.energies_at(idx)
        for a, b, c, w in cubic:
            za = 1.0 - 2.0 * ((idx >> a) & 1)
            zb = 1.0 - 2.0 * ((idx >> b) & 1)
            zc = 1.0 - 2.0 * ((idx >> c) & 1)
            out = out + w * za * zb * zc
        return out

    objective = DiagonalObjective(n=n, evaluator=_eval, kind="pubo", table_fn=_table)
    return ProblemInstance(family="spin-glass", raw=raw, objective=objective, meta=meta)


# ---------------------------------------------------------------------------
# EV charging-station admission


def ev_parking_from_data(u, d, values, M: int, E: int) -> ProblemInstance:
    """Admission instance from explicit windows, demands, and values.

    ``u`` is the 0/1 presence matrix (vehicle x interval), ``d`` the integer
    per-interval demand (zero outside the window), ``values`` the per-vehicle
    admission value. Maximizing total admitted value becomes minimizing its
    negation, subject to at most ``M`` present vehicles and at most ``E``
    delivered power per interval; both cap rows are kept for every interval
    and compiled with binary slacks, so ``M``, ``E``, and demands must be
    integers.
    """
    u = np.asarray(u, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    vals = tuple(float(v) for v in values)
    if u.ndim != 2 or d.shape != u.shape:
        raise ValueError(f"presence and demand must be equal-shape matrices, got {u.shape} and {d.shape}")
    n_ev, k_slots = u.shape
    if len(vals) != n_ev:
        raise ValueError(f"got {len(vals)} values for {n_ev} vehicles")
    if not np.isin(u, (0, 1)).all():
        raise ValueError("presence entries must be 0 or 1")
    if (d < 0).any() or ((u == 0) & (d != 0)).any():
        raise ValueError("demand must be non-negative and zero outside the presence window")
    if int(M) != M or M < 1:
        raise ValueError(f"space capacity must be a positive integer, got {M}")
    if int(E) != E or E <= 0:
        raise ValueError(f"power cap must be a positive integer, got {E}")
    M, E = int(M), int(E)

    base = QuboModel(n=n_ev, terms={(i, i): -v for i, v in enumerate(vals) if v != 0.0})
    rows = []
    for k in range(k_slots):
        rows.append(LinearConstraint(tuple(float(u[i, k]) for i in range(n_ev)), float(M)))
    for k in range(k_slots):
        rows.append(LinearConstraint(tuple(float(d[i, k]) for i in range(n_ev)), float(E)))
    constrained = ConstrainedModel(objective=base, inequalities=tuple(rows))
    compiled = penalty_encode(constrained)
    return ProblemInstance(
        family="ev-parking",
        raw={
            "N": n_ev,
            "K": k_slots,
            "M": M,
            "E": E,
            "windows": u.tolist(),
            "demand": d.tolist(),
            "values": list(vals),
        },
        objective=compiled.as_objective(),
        constrained=constrained,
        meta=_meta(None, {"N": n_ev, "K": k_slots, "M": M, "E": E}, crafted=True),
    )


def gen_ev_parking(N: int, K: int, M: int, E: int, seed: int = 0) -> ProblemInstance:
    """Random admission instance: contiguous windows, integer demands 1..10.

    Each vehicle draws an arrival and departure interval, per-interval
    demands uniform in {1..10} inside the window, and a value equal to its
    total demand times a uniform markup in [1.0, 1.5].
    """
    if N < 1 or K < 1 or M < 1:
        raise ValueError(f"need N, K, M >= 1, got N={N} K={K} M={M}")
    rng = np.random.default_rng(seed)
    u = np.zeros((N, K), dtype=np.int64)
    d = np.zeros((N, K), dtype=np.int64)
    markups = []
    values = []
    for i in range(N):
        arrive = int(rng.integers(0, K))
        depart = int(rng.integers(arrive, K))
        u[i, arrive : depart + 1] = 1
        d[i, arrive : depart + 1] = rng.integers(1, 11, size=depart - arrive + 1)
        markup = float(rng.uniform(1.0, 1.5))
        markups.append(markup)
        values.append(float(d[i].sum()) * markup)
    inst = ev_parking_from_data(u, d, values, M, E)
    raw = dict(inst.raw)
    raw["markups"] = markups
    return ProblemInstance(
        family="ev-parking",
        raw=raw,
        objective=inst.objective,
        constrained=inst.constrained,
        meta=_meta(seed, {"N": N, "K": K, "M": M, "E": E}),
    )


# ---------------------------------------------------------------------------
# Mean-variance portfolio selection


def portfolio_from_data(mu, sigma, B: int, lam: float = 1.0) -> ProblemInstance:
    """Selection instance from explicit returns and covariance.

    Picks exactly ``B`` of the assets at equal weight ``1/B``, minimizing
    ``(lam / 2B^2) x' Sigma x - (1/B) mu . x`` under the cardinality
    equality ``sum x = B``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    n = mu.shape[0]
    if sigma.shape != (n, n):
        raise ValueError(f"covariance shape {sigma.shape} does not match {n} assets")
    if not 1 <= B <= n:
        raise ValueError(f"cardinality must satisfy 1 <= B <= {n}, got {B}")
    if lam <= 0:
        raise ValueError(f"risk aversion must be positive, got {lam}")
    scale = lam / (2.0 * B * B)
    entries = []
    for i in range(n):
        entries.append((i, i, float(scale * sigma[i, i] - mu[i] / B)))
        for j in range(i + 1, n):
            if sigma[i, j] != 0.0 or sigma[j, i] != 0.0:
                entries.append((i, j, float(scale * (sigma[i, j] + sigma[j, i]))))
    base = QuboModel.from_entries(n, entries)
    constrained = ConstrainedModel(
        objective=base,
        equalities=(LinearConstraint(tuple(1.0 for _ in range(n)), float(B)),),
    )
    compiled = penalty_encode(constrained)
    return ProblemInstance(
        family="portfolio",
        raw={"N": n, "B": int(B), "lam": float(lam), "mu": mu.tolist(), "sigma": sigma.tolist()},
        objective=compiled.as_objective(),
        constrained=constrained,
        meta=_meta(None, {"N": n, "B": int(B), "lam": float(lam)}, crafted=True),
    )


def gen_portfolio(N: int, B: int, seed: int = 0, lam: float = 1.0) -> ProblemInstance:
    """Random selection instance with a factor-model covariance.

    Returns are uniform in [0, 0.1]; the covariance is ``F F' + diag(noise)``
    with factor loadings N(0, 0.1^2) over ``max(1, N // 4)`` factors and
    diagonal noise uniform in [0.001, 0.01], guaranteeing positive
    definiteness.
    """
    if not 1 <= B <= N:
        raise ValueError(f"cardinality must satisfy 1 <= B <= N, got B={B} N={N}")
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.0, 0.1, size=N)
    factors = rng.normal(0.0, 0.1, size=(N, max(1, N // 4)))
    noise = rng.uniform(0.001, 0.01, size=N)
    sigma = factors @ factors.T + np.diag(noise)
    inst = portfolio_from_data(mu, sigma, B, lam)
    return ProblemInstance(
        family="portfolio",
        raw=inst.raw,
        objective=inst.objective,
        constrained=inst.constrained,
        meta=_meta(seed, {"N": N, "B": B, "lam": lam}),
    )


# ---------------------------------------------------------------------------
# Serialization


def instance_to_json(inst: ProblemInstance) -> dict:
    """Envelope form: family, meta, raw payload, and the model schema.

    ``model`` holds the compiled quadratic model when one exists (spin
    glasses serialize their exact QUBO equivalent); native polynomial
    objectives set it to null and rely on ``raw``. ``constrained`` carries
    the pre-penalty form when the family has one.
    """
    src = inst.objective.source
    if isinstance(src, QuboModel):
        model = model_to_json(src)
    elif isinstance(src, IsingModel):
        model = model_to_json(ising_to_qubo(src))
    else:
        model = None
    data = {
        "family": inst.family,
        "meta": dict(inst.meta),
        "raw": dict(inst.raw),
        "model": model,
    }
    if inst.constrained is not None:
        data["constrained"] = model_to_json(inst.constrained)
    return data


def instance_from_json(data: Mapping) -> ProblemInstance:
    """Rebuild an instance from its envelope via the raw payload.

    Reconstruction goes through the family builders, so objective kind,
    constrained form, and energies all round-trip exactly.
    """
    family = data["family"]
    raw = data["raw"]
    meta = dict(data.get("meta", {}))
    if family == "maxcut-r3r":
        edges = [(int(u), int(v)) for u, v in raw["edges"]]
        model = _maxcut_model(int(raw["n"]), edges)
        inst = ProblemInstance(
            family=family, raw=dict(raw), objective=model.as_objective(), meta=meta
        )
    elif family in ("mis", "udmis"):
        n = int(raw["n"])
        edges = [(int(u), int(v)) for u, v in raw["edges"]]
        compiled, constrained, _ = _mis_build(n, edges, tuple(float(w) for w in raw["weights"]))
        inst = ProblemInstance(
            family=family,
            raw=dict(raw),
            objective=compiled.as_objective(),
            constrained=constrained,
            meta=meta,
        )
    elif family == "market-share":
        model = _market_share_model(np.asarray(raw["weights"]), np.asarray(raw["targets"]))
        inst = ProblemInstance(
            family=family, raw=dict(raw), objective=model.as_objective(), meta=meta
        )
    elif family == "labs":
        built = gen_labs(int(raw["k"]))
        inst = ProblemInstance(family=family, raw=dict(raw), objective=built.objective, meta=meta)
    elif family == "qap":
        penalty = meta.get("params", {}).get("penalty")
        built = qap_from_data(raw["a"], raw["b"], penalty)
        inst = ProblemInstance(
            family=family,
            raw=dict(raw),
            objective=built.objective,
            constrained=built.constrained,
            meta=meta,
        )
    elif family == "spin-glass":
        n = int(raw["n"])
        couplings = {
            (int(u), int(v)): float(c) for (u, v), c in zip(raw["edges"], raw["couplings"])
        }
        model = IsingModel(n=n, J=couplings)
        if raw.get("cubic"):
            # Rebuild through the polynomial path used by the generator.
            cubic = [(int(a), int(b), int(c), float(w)) for a, b, c, w in raw["cubic"]]

            def _eval(bits: tuple[int, ...]) -> float:
                spins = tuple(1 - 2 * b for b in bits)
                total = model.energy(spins)
                for a, b, c, w in cubic:
                    total += w * spins[a] * spins[b] * spins[c]
                return total

            def _table(indices: np.ndarray) -> np.ndarray:
                idx = np.asarray(indices, dtype=np.int64)
                out = model.energies_at(idx)
                for a, b, c, w in cubic:
                    za = 1.0 - 2.0 * ((idx >> a) & 1)
                    zb = 1.0 - 2.0 * ((idx >> b) & 1)
                    zc = 1.0 - 2.0 * ((idx >> c) & 1)
                    out = out + w * za * zb * zc
                return out

            objective = DiagonalObjective(n=n, evaluator=_eval, kind="pubo", table_fn=_table)
        else:
            objective = model.as_objective()
        inst = ProblemInstance(family=family, raw=dict(raw), objective=objective, meta=meta)
    elif family == "ev-parking":
        built = ev_parking_from_data(
            raw["windows"], raw["demand"], raw["values"], int(raw["M"]), int(raw["E"])
        )
        inst = ProblemInstance(
            family=family,
            raw=dict(raw),
            objective=built.objective,
            constrained=built.constrained,
            meta=meta,
        )
    elif family == "portfolio":
        built = portfolio_from_data(raw["mu"], raw["sigma"], int(raw["B"]), float(raw["lam"]))
        inst = ProblemInstance(
            family=family,
            raw=dict(raw),
            objective=built.objective,
            constrained=built.constrained,
            meta=meta,
        )
    else:
        raise ValueError(f"unknown problem family {family!r}")
    stored = data.get("model")
    if stored is not None:
        rebuilt = instance_to_json(inst)["model"]
        if stored["n"] != rebuilt["n"]:
            raise ValueError(
                f"stored model has n={stored['n']} but the raw payload rebuilds n={rebuilt['n']}"
            )
    return inst
