"""Binary optimization models and lossless conversions between them.

This module holds the representations everything else builds on: quadratic
binary objectives (:class:`QuboModel`), the equivalent spin form
(:class:`IsingModel`), a uniform assignment-to-energy abstraction
(:class:`DiagonalObjective`) shared by generators, solvers, and the
simulator, and linearly constrained models (:class:`ConstrainedModel`) with
their compilation into penalty form (:func:`penalty_encode`).

All model values are immutable after construction and safe to share between
parallel runs; every operation here is a pure function.

Conventions
-----------
* A binary assignment is a sequence of bits ``x`` in ``{0, 1}^n``.  When an
  assignment is packed into an integer index, bit ``i`` of the index is
  variable ``i`` (variable 0 is the least significant bit).
* ``QuboModel.terms`` maps ordered index pairs ``(i, j)`` with ``i <= j`` to
  real coefficients.  A diagonal entry ``(i, i)`` is the linear coefficient
  of ``x_i`` (``x_i^2 = x_i``); an off-diagonal entry is the full coefficient
  of the product ``x_i * x_j``.
* Spins relate to bits via ``z = 1 - 2 x`` (bit 0 is spin +1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "InfeasibleConstraintError",
    "QuboModel",
    "IsingModel",
    "DiagonalObjective",
    "LinearConstraint",
    "ConstrainedModel",
    "evaluate",
    "qubo_to_ising",
    "ising_to_qubo",
    "default_penalty",
    "penalty_encode",
    "density",
    "index_to_bits",
    "bits_to_index",
    "model_to_json",
    "model_from_json",
]

#: Energies are compared in double precision with this tolerance.
ENERGY_TOL = 1e-9


class InfeasibleConstraintError(ValueError):
    """Raised when a constraint can never be satisfied by any assignment."""


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    """Unpack an assignment index into its bit tuple (variable i at bit i)."""
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for {n} variables")
    return tuple((index >> i) & 1 for i in range(n))


def bits_to_index(bits: Sequence[int]) -> int:
    """Pack a bit sequence into the integer index (variable i at bit i)."""
    out = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"assignment entry {b!r} at position {i} is not a bit")
        out |= int(b) << i
    return out


def _check_bits(x: Sequence[int], n: int) -> tuple[int, ...]:
    bits = tuple(int(b) for b in x)
    if len(bits) != n:
        raise ValueError(f"assignment has length {len(bits)}, model has {n} variables")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("assignment entries must be 0 or 1")
    return bits


@dataclass(frozen=True)
class QuboModel:
    """Quadratic binary objective ``min x^T Q x + offset`` over ``{0, 1}^n``.

    ``terms`` maps ordered pairs ``(i, j)`` with ``i <= j`` to coefficients;
    diagonal entries are linear terms.  The sense is always minimization.
    """

    n: int
    terms: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"variable count must be a non-negative integer, got {self.n!r}")
        normalized: dict[tuple[int, int], float] = {}
        for key, coeff in dict(self.terms).items():
            i, j = int(key[0]), int(key[1])
            if not (0 <= i <= j < self.n):
                raise ValueError(f"term index pair {key} invalid for n={self.n} (need 0 <= i <= j < n)")
            c = float(coeff)
            if not math.isfinite(c):
                raise ValueError(f"coefficient for term {key} is not finite")
            normalized[(i, j)] = c
        off = float(self.offset)
        if not math.isfinite(off):
            raise ValueError("offset is not finite")
        object.__setattr__(self, "terms", normalized)
        object.__setattr__(self, "offset", off)

    @classmethod
    def from_entries(
        cls,
        n: int,
        entries: Iterable[tuple[int, int, float]],
        offset: float = 0.0,
    ) -> "QuboModel":
        """Build a model from ``(i, j, coeff)`` entries, accumulating duplicates.

        Index pairs are normalized to ``i <= j``; repeated pairs sum.
        """
        acc: dict[tuple[int, int], float] = {}
        for i, j, c in entries:
            key = (min(i, j), max(i, j))
            acc[key] = acc.get(key, 0.0) + float(c)
        return cls(n=n, terms=acc, offset=offset)

    def energy(self, x: Sequence[int]) -> float:
        """Exact objective value of an assignment, including the offset."""
        bits = _check_bits(x, self.n)
        total = self.offset
        for (i, j), c in self.terms.items():
            total += c * bits[i] * bits[j]
        return total

    def energies_at(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized energies for an array of packed assignment indices."""
        idx = np.asarray(indices, dtype=np.int64)
        out = np.full(idx.shape, self.offset, dtype=np.float64)
        for (i, j), c in self.terms.items():
            bi = (idx >> i) & 1
            if i == j:
                out += c * bi
            else:
                out += c * (bi & ((idx >> j) & 1))
        return out

    def quadratic_pairs(self) -> set[tuple[int, int]]:
        """Distinct ``i < j`` pairs with a nonzero coupling coefficient."""
        return {(i, j) for (i, j), c in self.terms.items() if i < j and c != 0.0}

    def linear_vector(self) -> np.ndarray:
        """Dense vector of diagonal (linear) coefficients."""
        lin = np.zeros(self.n, dtype=np.float64)
        for (i, j), c in self.terms.items():
            if i == j:
                lin[i] = c
        return lin

    def pair_matrix(self) -> np.ndarray:
        """Dense symmetric matrix of pair coefficients with a zero diagonal.

        Entry ``(i, j)`` holds the full coefficient of ``x_i x_j``, so the
        energy is ``lin . x + (x^T M x) / 2 + offset``.
        """
        mat = np.zeros((self.n, self.n), dtype=np.float64)
        for (i, j), c in self.terms.items():
            if i != j:
                mat[i, j] += c
                mat[j, i] += c
        return mat

    def as_objective(self) -> "DiagonalObjective":
        """Diagonal-objective view of this model (kind ``qubo``)."""
        return DiagonalObjective(
            n=self.n,
            evaluator=self.energy,
            kind="qubo",
            source=self,
            table_fn=self.energies_at,
        )


@dataclass(frozen=True)
class IsingModel:
    """Spin objective ``sum h_i z_i + sum J_ij z_i z_j + offset`` over ``{-1, +1}^n``."""

    n: int
    h: tuple[float, ...] = ()
    J: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"spin count must be a non-negative integer, got {self.n!r}")
        h = tuple(float(v) for v in self.h) if self.h else tuple(0.0 for _ in range(self.n))
        if len(h) != self.n:
            raise ValueError(f"field vector has length {len(h)}, model has {self.n} spins")
        if any(not math.isfinite(v) for v in h):
            raise ValueError("field entries must be finite")
        couplings: dict[tuple[int, int], float] = {}
        for key, coeff in dict(self.J).items():
            i, j = int(key[0]), int(key[1])
            if not (0 <= i < j < self.n):
                raise ValueError(f"coupling pair {key} invalid for n={self.n} (need 0 <= i < j < n)")
            c = float(coeff)
            if not math.isfinite(c):
                raise ValueError(f"coupling for pair {key} is not finite")
            couplings[(i, j)] = c
        off = float(self.offset)
        if not math.isfinite(off):
            raise ValueError("offset is not finite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", couplings)
        object.__setattr__(self, "offset", off)

    def energy(self, z: Sequence[int]) -> float:
        """Exact spin energy; entries of ``z`` must be -1 or +1."""
        spins = tuple(int(v) for v in z)
        if len(spins) != self.n:
            raise ValueError(f"spin vector has length {len(spins)}, model has {self.n} spins")
        if any(v not in (-1, 1) for v in spins):
            raise ValueError("spin entries must be -1 or +1")
        total = self.offset
        for i, v in enumerate(spins):
            total += self.h[i] * v
        for (i, j), c in self.J.items():
            total += c * spins[i] * spins[j]
        return total

    def energies_at(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized energies for packed bit indices (bit b maps to spin 1 - 2b)."""
        idx = np.asarray(indices, dtype=np.int64)
        out = np.full(idx.shape, self.offset, dtype=np.float64)
        for i, v in enumerate(self.h):
            if v != 0.0:
                out += v * (1.0 - 2.0 * ((idx >> i) & 1))
        for (i, j), c in self.J.items():
            zi = 1.0 - 2.0 * ((idx >> i) & 1)
            zj = 1.0 - 2.0 * ((idx >> j) & 1)
            out += c * zi * zj
        return out

    def as_objective(self) -> "DiagonalObjective":
        """Diagonal-objective view over bits via ``z = 1 - 2x`` (kind ``ising-view``)."""

        def _eval(bits: tuple[int, ...]) -> float:
            return self.energy(tuple(1 - 2 * b for b in bits))

        return DiagonalObjective(
            n=self.n,
            evaluator=_eval,
            kind="ising-view",
            source=self,
            table_fn=self.energies_at,
        )


@dataclass(frozen=True, eq=False)
class DiagonalObjective:
    """A pure map from n-bit assignments to finite real energies.

    This is the shared evaluation contract: QUBO, Ising-view, polynomial, and
    native objectives (for example sequence autocorrelation energies) all
    reduce to it.  ``evaluator`` must be deterministic and side-effect free.

    ``table_fn``, when present, evaluates a whole array of packed assignment
    indices at once; it is an optimization hook and must agree with
    ``evaluator`` exactly.  ``source`` optionally points at the backing
    quadratic model so solvers can exploit structure.
    """

    KINDS: ClassVar[tuple[str, ...]] = ("qubo", "ising-view", "pubo", "native")

    n: int
    evaluator: Callable[[tuple[int, ...]], float]
    kind: str = "native"
    source: object | None = field(default=None, repr=False)
    table_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"variable count must be a non-negative integer, got {self.n!r}")
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}; expected one of {self.KINDS}")

    def value(self, x: Sequence[int]) -> float:
        """Energy of one assignment; raises on length or bit-range mismatch."""
        bits = _check_bits(x, self.n)
        e = float(self.evaluator(bits))
        if not math.isfinite(e):
            raise ValueError(f"evaluator returned non-finite energy {e!r}")
        return e

    def energies_at(self, indices: np.ndarray) -> np.ndarray:
        """Energies for an array of packed assignment indices."""
        idx = np.asarray(indices, dtype=np.int64)
        if self.table_fn is not None:
            out = np.asarray(self.table_fn(idx), dtype=np.float64)
            if out.shape != idx.shape:
                raise ValueError("table_fn returned a mismatched shape")
            return out
        flat = np.array(
            [self.evaluator(index_to_bits(int(i), self.n)) for i in idx.ravel()],
            dtype=np.float64,
        )
        return flat.reshape(idx.shape)


def evaluate(obj: DiagonalObjective, x: Sequence[int]) -> float:
    """Exact objective value of assignment ``x`` under ``obj`` (offset included)."""
    return obj.value(x)


@dataclass(frozen=True)
class LinearConstraint:
    """One linear row ``coeffs . x (= or <=) bound`` over the binary variables."""

    coeffs: tuple[float, ...]
    bound: float

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coeffs)
        if any(not math.isfinite(c) for c in coeffs):
            raise ValueError("constraint coefficients must be finite")
        b = float(self.bound)
        if not math.isfinite(b):
            raise ValueError("constraint bound must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bound", b)

    def is_integral(self) -> bool:
        return all(c.is_integer() for c in self.coeffs) and float(self.bound).is_integer()


@dataclass(frozen=True)
class ConstrainedModel:
    """A quadratic objective plus linear equality/inequality constraints.

    Equalities mean ``a . x = b``; inequalities mean ``c . x <= d``.  This is
    the pre-penalty form; :func:`penalty_encode` compiles it to a plain
    :class:`QuboModel`.
    """

    objective: QuboModel
    equalities: tuple[LinearConstraint, ...] = ()
    inequalities: tuple[LinearConstraint, ...] = ()

    def __post_init__(self) -> None:
        eqs = tuple(self.equalities)
        ineqs = tuple(self.inequalities)
        for con in (*eqs, *ineqs):
            if len(con.coeffs) != self.objective.n:
                raise ValueError(
                    f"constraint has {len(con.coeffs)} coefficients, objective has {self.objective.n} variables"
                )
        object.__setattr__(self, "equalities", eqs)
        object.__setattr__(self, "inequalities", ineqs)

    @property
    def n(self) -> int:
        return self.objective.n


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Exact spin form of a QUBO under ``z = 1 - 2x``; offsets are absorbed."""
    h = [0.0] * q.n
    couplings: dict[tuple[int, int], float] = {}
    offset = q.offset
    for (i, j), c in q.terms.items():
        if i == j:
            # c*x = c/2 - (c/2) z
            offset += c / 2.0
            h[i] -= c / 2.0
        else:
            # c*x_i*x_j = c/4 (1 - z_i - z_j + z_i z_j)
            offset += c / 4.0
            h[i] -= c / 4.0
            h[j] -= c / 4.0
            couplings[(i, j)] = couplings.get((i, j), 0.0) + c / 4.0
    return IsingModel(n=q.n, h=tuple(h), J=couplings, offset=offset)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Exact QUBO form of a spin model under ``z = 1 - 2x``."""
    terms: dict[tuple[int, int], float] = {}
    offset = m.offset

    def _add(i: int, j: int, c: float) -> None:
        key = (min(i, j), max(i, j))
        terms[key] = terms.get(key, 0.0) + c

    for i, v in enumerate(m.h):
        if v != 0.0:
            # v*z = v - 2v*x
            offset += v
            _add(i, i, -2.0 * v)
    for (i, j), c in m.J.items():
        # c*z_i*z_j = c (1 - 2x_i - 2x_j + 4 x_i x_j)
        offset += c
        _add(i, i, -2.0 * c)
        _add(j, j, -2.0 * c)
        _add(i, j, 4.0 * c)
    terms = {k: v for k, v in terms.items() if v != 0.0}
    return QuboModel(n=m.n, terms=terms, offset=offset)


def default_penalty(q: QuboModel) -> float:
    """Default penalty weight ``1 + sum |coefficients|``.

    This bounds any possible objective swing, so a unit constraint violation
    (the minimum for integral constraint data) always costs more than any
    objective gain.
    """
    return 1.0 + sum(abs(c) for c in q.terms.values())


def penalty_encode(cm: ConstrainedModel, penalty: float | None = None) -> QuboModel:
    """Compile a constrained model into an unconstrained penalty QUBO.

    Each inequality ``c . x <= d`` first becomes an equality
    ``c . x + s = d`` with a binary-expanded slack ``s`` of
    ``max(1, ceil(log2(d - min_x c.x + 1)))`` bits; inequality data must be
    integral or the slack range is undefined.  Every equality ``a . x = b``
    then contributes ``P * (a . x - b)^2``.  Slack bits are appended after the
    original variables in constraint order (inequality order, bit significance
    ascending).

    With the default ``P`` (see :func:`default_penalty`) and integral
    constraint data, the unconstrained optimum restricted to the original
    variables coincides with the constrained optimum.  Real-coefficient
    equalities are accepted, but then a sufficiently large ``penalty`` is the
    caller's responsibility, since violations can be arbitrarily small.

    Raises :class:`InfeasibleConstraintError` for constraints no assignment
    can satisfy (for example ``0 = 1``, or an inequality whose bound is below
    the minimum of its left side).
    """
    if not cm.equalities and not cm.inequalities:
        return cm.objective
    q = cm.objective
    p = default_penalty(q) if penalty is None else float(penalty)
    if not (p > 0.0) or not math.isfinite(p):
        raise ValueError(f"penalty must be a positive finite number, got {penalty!r}")

    # Every constraint is normalized into (sparse coefficients, bound) over the
    # extended variable set; inequalities gain slack columns first.
    rows: list[tuple[dict[int, float], float]] = []
    next_var = q.n
    for con in cm.equalities:
        coeffs = {i: c for i, c in enumerate(con.coeffs) if c != 0.0}
        if not coeffs:
            if con.bound != 0.0:
                raise InfeasibleConstraintError(f"constant equality 0 = {con.bound} is infeasible")
            continue
        rows.append((coeffs, con.bound))
    for con in cm.inequalities:
        if not con.is_integral():
            raise ValueError("inequality constraints need integer data; the slack range is undefined otherwise")
        lo = sum(min(c, 0.0) for c in con.coeffs)
        span = int(round(con.bound - lo))
        if span < 0:
            raise InfeasibleConstraintError(
                f"inequality with bound {con.bound} is below the minimum {lo} of its left side"
            )
        coeffs = {i: c for i, c in enumerate(con.coeffs) if c != 0.0}
        bits = max(1, span.bit_length())
        for t in range(bits):
            coeffs[next_var] = float(1 << t)
            next_var += 1
        rows.append((coeffs, con.bound))

    terms: dict[tuple[int, int], float] = dict(q.terms)
    offset = q.offset

    def _add(i: int, j: int, c: float) -> None:
        key = (min(i, j), max(i, j))
        terms[key] = terms.get(key, 0.0) + c

    for coeffs, bound in rows:
        # P * (sum_i a_i x_i - b)^2, expanded with x_i^2 = x_i.
        offset += p * bound * bound
        items = sorted(coeffs.items())
        for k, (i, a) in enumerate(items):
            _add(i, i, p * (a * a - 2.0 * bound * a))
            for jj, b2 in items[k + 1 :]:
                _add(i, jj, p * 2.0 * a * b2)

    terms = {k: v for k, v in terms.items() if v != 0.0}
    return QuboModel(n=next_var, terms=terms, offset=offset)


def density(model: QuboModel | IsingModel) -> float:
    """Fraction of present quadratic couplings out of ``n (n - 1) / 2``."""
    if model.n < 2:
        raise ValueError(f"density is undefined for n={model.n} (need n >= 2)")
    if isinstance(model, QuboModel):
        pairs = len(model.quadratic_pairs())
    elif isinstance(model, IsingModel):
        pairs = sum(1 for c in model.J.values() if c != 0.0)
    else:
        raise TypeError(f"density needs a quadratic model, got {type(model).__name__}")
    return pairs / (model.n * (model.n - 1) / 2)


def model_to_json(model: QuboModel | ConstrainedModel) -> dict:
    """Canonical JSON form: ``{"n", "terms", "offset"}`` plus ``"constraints"``.

    Terms serialize as sorted ``[i, j, coeff]`` triples; the constraints key is
    present only for constrained models.
    """
    if isinstance(model, ConstrainedModel):
        data = model_to_json(model.objective)
        data["constraints"] = {
            "equalities": [{"coeffs": list(c.coeffs), "bound": c.bound} for c in model.equalities],
            "inequalities": [{"coeffs": list(c.coeffs), "bound": c.bound} for c in model.inequalities],
        }
        return data
    if not isinstance(model, QuboModel):
        raise TypeError(f"cannot serialize {type(model).__name__} with the model schema")
    return {
        "n": model.n,
        "terms": [[i, j, c] for (i, j), c in sorted(model.terms.items())],
        "offset": model.offset,
    }


def model_from_json(data: Mapping) -> QuboModel | ConstrainedModel:
    """Inverse of :func:`model_to_json`; rejects duplicate term pairs."""
    n = int(data["n"])
    terms: dict[tuple[int, int], float] = {}
    for i, j, c in data.get("terms", []):
        key = (int(i), int(j))
        if key in terms:
            raise ValueError(f"duplicate term pair {key} in model data")
        terms[key] = float(c)
    qubo = QuboModel(n=n, terms=terms, offset=float(data.get("offset", 0.0)))
    cons = data.get("constraints")
    if cons is None:
        return qubo
    return ConstrainedModel(
        objective=qubo,
        equalities=tuple(
            LinearConstraint(tuple(c["coeffs"]), c["bound"]) for c in cons.get("equalities", [])
        ),
        inequalities=tuple(
            LinearConstraint(tuple(c["coeffs"]), c["bound"]) for c in cons.get("inequalities", [])
        ),
    )
