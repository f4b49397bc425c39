"""Exact statevector simulation of diagonal-Hamiltonian algorithms.

Everything simulated here has a diagonal problem Hamiltonian, so a problem
is fully described by its assignment-to-energy map and the simulator only
ever needs the 2^n energy table plus single-qubit mixing rotations. That
makes the following exact (up to double precision) on a desk-scale machine:

* alternating-operator ansatz states (:func:`qaoa_state`), with plain or
  warm-started mixers,
* Trotterized annealing (:func:`anneal_trotter`),
* Gibbs / imaginary-time distributions (:func:`gibbs_distribution`),
* expectation, CVaR, exact sampling, and ground-state overlap.

Conventions
-----------
Amplitudes are indexed by bit pattern with variable ``i`` at bit ``i`` of
the index. A phase layer with angle ``g`` multiplies each amplitude by
``exp(-1j * g * E(x))``. A mixing layer with angle ``beta`` applies the
single-qubit rotation ``[[cos b, i sin b], [i sin b, cos b]]`` (an X-axis
rotation by ``2*beta``) to every qubit; the warm-start variant tilts the
rotation axis per qubit so its initial product state is fixed. The state
size is capped (default 24 qubits, about 256 MiB of amplitudes); the
``QOPT_STATEVECTOR_CAP`` environment variable overrides the cap.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from qopt.model import DiagonalObjective

__all__ = [
    "CapacityError",
    "statevector_cap",
    "Statevector",
    "QaoaParams",
    "WarmStart",
    "SampleSet",
    "GibbsTable",
    "energy_table",
    "qaoa_state",
    "expectation",
    "sample",
    "cvar",
    "anneal_trotter",
    "gibbs_distribution",
    "ground_state_overlap",
    "dump_statevector",
    "load_statevector",
]

DEFAULT_CAP = 24
_CAP_ENV = "QOPT_STATEVECTOR_CAP"
_NORM_TOL = 1e-10
_MAGIC = b"QSV1"


class CapacityError(RuntimeError):
    """The requested state exceeds the configured qubit cap."""


def statevector_cap() -> int:
    """Current simulator cap in qubits (environment-overridable)."""
    raw = os.environ.get(_CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{_CAP_ENV} must be positive, got {cap}")
    return cap


def _check_cap(n: int) -> None:
    cap = statevector_cap()
    if n > cap:
        raise CapacityError(f"{n} qubits exceed the simulator cap of {cap}")


@dataclass
class Statevector:
    """Dense complex state over ``2^n`` basis patterns (variable i at bit i).

    Operations mutate amplitudes in place for speed; take :meth:`copy` when
    a snapshot is needed. The norm is validated on construction.
    """

    n: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"qubit count must be non-negative, got {self.n}")
        _check_cap(self.n)
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got shape {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm^2 is {norm}, not 1")
        self.amplitudes = amps

    @classmethod
    def plus(cls, n: int) -> "Statevector":
        """Uniform superposition |+...+>."""
        _check_cap(n)
        amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
        return cls(n=n, amplitudes=amps)

    @classmethod
    def basis(cls, n: int, bits: Sequence[int]) -> "Statevector":
        """Computational basis state for the given assignment."""
        _check_cap(n)
        if len(bits) != n:
            raise ValueError(f"assignment has length {len(bits)}, expected {n}")
        pattern = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError(f"assignment entry {b!r} at position {i} is not a bit")
            pattern |= int(b) << i
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[pattern] = 1.0
        return cls(n=n, amplitudes=amps)

    def copy(self) -> "Statevector":
        return Statevector(n=self.n, amplitudes=self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class QaoaParams:
    """Layer angles for the alternating-operator ansatz."""

    p: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError(f"layer count must be non-negative, got {self.p}")
        gammas = tuple(float(g) for g in self.gammas)
        betas = tuple(float(b) for b in self.betas)
        if len(gammas) != self.p or len(betas) != self.p:
            raise ValueError(
                f"need exactly p={self.p} angles per list, got {len(gammas)} and {len(betas)}"
            )
        if any(not math.isfinite(v) for v in (*gammas, *betas)):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)


@dataclass(frozen=True)
class WarmStart:
    """Warm-started initial state and tilted mixer configuration.

    ``c_star`` holds per-variable relaxed solution values in [0, 1]; each is
    clamped into ``[epsilon, 1 - epsilon]`` before the per-qubit angle
    ``theta_i = 2 asin(sqrt(c_i))`` is taken, so no qubit starts exactly at
    a pole and every basis state keeps nonzero amplitude for epsilon > 0.
    The matching mixer rotates each qubit about its own initial-state axis
    (eigenaxis ``cos(theta) Z + sin(theta) X``), which keeps the initial
    product state stationary under mixing; this is one construction among
    the several the literature sketches.
    """

    c_star: tuple[float, ...]
    epsilon: float = 0.25

    def __post_init__(self) -> None:
        cs = tuple(float(c) for c in self.c_star)
        if any(not 0.0 <= c <= 1.0 for c in cs):
            raise ValueError("relaxed solution values must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"clamp width must lie in [0, 0.5], got {self.epsilon}")
        object.__setattr__(self, "c_star", cs)

    def thetas(self) -> tuple[float, ...]:
        lo, hi = self.epsilon, 1.0 - self.epsilon
        return tuple(2.0 * math.asin(math.sqrt(min(max(c, lo), hi))) for c in self.c_star)


@dataclass(frozen=True)
class SampleSet:
    """Measurement outcomes: pattern counts plus optionally cached energies."""

    counts: Mapping[tuple[int, ...], int]
    shots: int
    seed: int
    energies: Mapping[tuple[int, ...], float] | None = None

    def __post_init__(self) -> None:
        counts = {tuple(int(b) for b in k): int(v) for k, v in dict(self.counts).items()}
        if sum(counts.values()) != self.shots:
            raise ValueError("counts must sum to the shot total")
        lengths = {len(k) for k in counts}
        if len(lengths) > 1:
            raise ValueError("all patterns must have the same length")
        object.__setattr__(self, "counts", counts)
        if self.energies is not None:
            energies = {tuple(int(b) for b in k): float(v) for k, v in dict(self.energies).items()}
            if set(energies) != set(counts):
                raise ValueError("cached energies must cover exactly the sampled patterns")
            object.__setattr__(self, "energies", energies)

    def with_energies(self, obj: DiagonalObjective) -> "SampleSet":
        """Attach per-pattern energies evaluated under ``obj``."""
        energies = {pattern: obj.value(pattern) for pattern in self.counts}
        return SampleSet(counts=self.counts, shots=self.shots, seed=self.seed, energies=energies)

    def energy_values(self) -> np.ndarray:
        """All sampled energies, one entry per shot, ascending."""
        if self.energies is None:
            raise ValueError("no energies cached; attach them with with_energies()")
        out = np.empty(self.shots, dtype=np.float64)
        pos = 0
        for pattern, count in self.counts.items():
            out[pos : pos + count] = self.energies[pattern]
            pos += count
        out.sort()
        return out

    def best(self) -> tuple[tuple[int, ...], float]:
        """Lowest-energy observed pattern and its energy."""
        if self.energies is None:
            raise ValueError("no energies cached; attach them with with_energies()")
        pattern = min(self.energies, key=lambda k: (self.energies[k], k))
        return pattern, self.energies[pattern]


@dataclass(frozen=True)
class GibbsTable:
    """Exact Gibbs distribution of a diagonal objective.

    ``z`` may overflow to inf for extreme ``beta * energy`` products;
    ``log_z`` is always finite and exact. With imaginary-time evolution for
    time ``tau``, amplitudes are suppressed by ``exp(-tau E)``, so the
    resulting measurement distribution equals this table at ``beta = 2 tau``.
    """

    beta: float
    probabilities: np.ndarray
    z: float
    log_z: float


def energy_table(obj: DiagonalObjective) -> np.ndarray:
    """Full 2^n energy table for ``obj``, cached on the objective."""
    table = obj._cache.get("energy_table")
    if table is None:
        _check_cap(obj.n)
        table = obj.energies_at(np.arange(1 << obj.n, dtype=np.int64))
        table.setflags(write=False)
        obj._cache["energy_table"] = table
    return table


def _apply_phase(amps: np.ndarray, table: np.ndarray, angle: float) -> None:
    amps *= np.exp(-1j * angle * table)


def _apply_mixer(
    amps: np.ndarray, n: int, beta: float, thetas: Sequence[float] | None = None
) -> None:
    # One in-place 2x2 rotation per qubit; bit i has stride 2^i, so axis 1 of
    # the (high, 2, low) reshape addresses exactly that qubit.
    cb = math.cos(beta)
    isb = 1j * math.sin(beta)
    for i in range(n):
        view = amps.reshape(1 << (n - 1 - i), 2, 1 << i)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        if thetas is None:
            d0 = d1 = cb
            off = isb
        else:
            ct, st = math.cos(thetas[i]), math.sin(thetas[i])
            d0 = cb + isb * ct
            d1 = cb - isb * ct
            off = isb * st
        view[:, 0, :] = d0 * a0 + off * a1
        view[:, 1, :] = off * a0 + d1 * a1


def _initial_state(obj: DiagonalObjective, initial) -> tuple[Statevector, tuple[float, ...] | None]:
    if initial == "plus" or initial is None:
        return Statevector.plus(obj.n), None
    if isinstance(initial, WarmStart):
        if len(initial.c_star) != obj.n:
            raise ValueError(
                f"warm start has {len(initial.c_star)} entries for {obj.n} variables"
            )
        thetas = initial.thetas()
        amps = np.ones(1, dtype=np.complex128)
        for theta in thetas:
            qubit = np.array([math.cos(theta / 2.0), math.sin(theta / 2.0)], dtype=np.complex128)
            # Later qubits vary slower, matching bit i at stride 2^i.
            amps = np.kron(qubit, amps)
        return Statevector(n=obj.n, amplitudes=amps), thetas
    raise ValueError(f"unknown initial state {initial!r}; use 'plus' or a WarmStart")


def qaoa_state(
    obj: DiagonalObjective,
    params: QaoaParams,
    initial: str | WarmStart = "plus",
) -> Statevector:
    """State after ``p`` alternating phase/mixing layers.

    Layer ``j`` multiplies amplitudes by ``exp(-1j * gamma_j * E(x))`` and
    then rotates every qubit by ``2 * beta_j`` about X (or about its tilted
    warm-start axis). ``p = 0`` returns the initial state unchanged.
    """
    sv, thetas = _initial_state(obj, initial)
    if params.p == 0:
        return sv
    table = energy_table(obj)
    for gamma, beta in zip(params.gammas, params.betas):
        _apply_phase(sv.amplitudes, table, gamma)
        _apply_mixer(sv.amplitudes, sv.n, beta, thetas)
    return sv


def expectation(sv: Statevector, obj: DiagonalObjective) -> float:
    """Exact energy expectation ``sum |amp(x)|^2 E(x)``."""
    if sv.n != obj.n:
        raise ValueError(f"state has {sv.n} qubits, objective has {obj.n} variables")
    return float(sv.probabilities() @ energy_table(obj))


def sample(
    sv: Statevector,
    shots: int,
    seed: int = 0,
    obj: DiagonalObjective | None = None,
) -> SampleSet:
    """Aggregate ``shots`` i.i.d. basis measurements of the state.

    Deterministic given the seed. When ``obj`` is passed, per-pattern
    energies are cached on the result, which CVaR and the solvers need.
    """
    if shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    probs = sv.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    hit = np.flatnonzero(draws)
    counts = {
        tuple(int((int(idx) >> i) & 1) for i in range(sv.n)): int(draws[idx]) for idx in hit
    }
    out = SampleSet(counts=counts, shots=shots, seed=seed)
    return out.with_energies(obj) if obj is not None else out


def cvar(
    values: SampleSet | Statevector,
    alpha: float,
    obj: DiagonalObjective | None = None,
) -> float:
    """Average of the best (lowest-energy) alpha-fraction.

    For a :class:`SampleSet`, sorts the sampled energies ascending and
    averages the lowest ``ceil(alpha * shots)``; ``alpha = 1`` is the plain
    mean, and any alpha small enough to include a single sample returns the
    best observed energy. For a :class:`Statevector` (with ``obj``), the
    same tail average is taken over the exact distribution, splitting the
    boundary pattern fractionally.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if isinstance(values, SampleSet):
        if values.energies is None:
            if obj is None:
                raise ValueError("sample set has no cached energies; pass obj")
            values = values.with_energies(obj)
        energies = values.energy_values()
        take = math.ceil(alpha * values.shots)
        return float(energies[:take].mean())
    if isinstance(values, Statevector):
        if obj is None:
            raise ValueError("computing CVaR from a state requires the objective")
        table = energy_table(obj)
        if values.n != obj.n:
            raise ValueError(f"state has {values.n} qubits, objective has {obj.n} variables")
        probs = values.probabilities()
        order = np.argsort(table, kind="stable")
        sorted_e = table[order]
        sorted_p = probs[order]
        cum = np.cumsum(sorted_p)
        # Everything strictly below the alpha boundary is taken in full, the
        # boundary state contributes the leftover fraction.
        k = int(np.searchsorted(cum, alpha, side="left"))
        full = sorted_p[:k] @ sorted_e[:k]
        taken = float(cum[k - 1]) if k > 0 else 0.0
        if k < len(sorted_e):
            full += (alpha - taken) * sorted_e[k]
        return float(full / alpha)
    raise TypeError(f"cannot compute CVaR of {type(values).__name__}")


def anneal_trotter(
    obj: DiagonalObjective,
    T: float,
    steps: int,
    schedule: Callable[[float], float] | None = None,
) -> Statevector:
    """First-order Trotterized anneal from the uniform state.

    The interpolating generator is ``lam * H_problem`` against the standard
    transverse mixer weighted by ``1 - lam``, discretized at step midpoints:
    step ``k`` applies a phase layer with angle ``dt * lam(t_k / T)`` and a
    mixing layer with X-rotation angle ``2 * dt * (1 - lam(t_k / T))`` where
    ``t_k = (k + 1/2) dt``. The schedule must satisfy ``lam(0) = 0`` and
    ``lam(1) = 1``; it defaults to linear.
    """
    if steps < 1:
        raise ValueError(f"need at least one step, got {steps}")
    if not (math.isfinite(T) and T > 0.0):
        raise ValueError(f"total time must be positive and finite, got {T}")
    if schedule is None:
        schedule = lambda s: s  # noqa: E731 - the linear ramp
    lam0, lam1 = float(schedule(0.0)), float(schedule(1.0))
    if abs(lam0) > 1e-12 or abs(lam1 - 1.0) > 1e-12:
        raise ValueError(f"schedule must run from 0 to 1, got lam(0)={lam0}, lam(1)={lam1}")
    sv = Statevector.plus(obj.n)
    table = energy_table(obj)
    dt = T / steps
    for k in range(steps):
        lam = float(schedule((k + 0.5) / steps))
        _apply_phase(sv.amplitudes, table, dt * lam)
        _apply_mixer(sv.amplitudes, sv.n, dt * (1.0 - lam))
    return sv


def gibbs_distribution(obj: DiagonalObjective, beta: float) -> GibbsTable:
    """Exact Gibbs weights ``exp(-beta E(x)) / Z`` over all assignments.

    Weights are computed against the shifted exponent ``-beta (E - E_min)``
    so the largest weight is exactly 1 and nothing overflows; ``log_z`` is
    exact, ``z`` may round to inf for extreme products.
    """
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError(f"inverse temperature must be finite and >= 0, got {beta}")
    table = energy_table(obj)
    shifted = -beta * (table - table.min())
    weights = np.exp(shifted)
    total = weights.sum()
    probs = weights / total
    log_z = float(logsumexp(-beta * table))
    with np.errstate(over="ignore"):
        z = float(np.exp(np.float64(log_z)))
    return GibbsTable(beta=beta, probabilities=probs, z=z, log_z=log_z)


def ground_state_overlap(sv: Statevector, obj: DiagonalObjective, tol: float = 1e-9) -> float:
    """Probability mass the state puts on the exact argmin set."""
    if sv.n != obj.n:
        raise ValueError(f"state has {sv.n} qubits, objective has {obj.n} variables")
    table = energy_table(obj)
    mask = table <= table.min() + tol
    return float(sv.probabilities()[mask].sum())


def dump_statevector(sv: Statevector, path) -> None:
    """Debug dump: magic, qubit count, then little-endian amplitude pairs."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI", _MAGIC, sv.n))
        fh.write(sv.amplitudes.astype("<c16").tobytes())


def load_statevector(path) -> Statevector:
    """Inverse of :func:`dump_statevector`."""
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError("truncated statevector file")
        magic, n = struct.unpack("<4sI", header)
        if magic != _MAGIC:
            raise ValueError(f"not a statevector file (magic {magic!r})")
        data = fh.read()
    amps = np.frombuffer(data, dtype="<c16")
    if amps.shape != (1 << n,):
        raise ValueError(f"expected {1 << n} amplitudes, found {amps.shape[0]}")
    return Statevector(n=n, amplitudes=amps.astype(np.complex128))
