"""Classical pre-solve reductions: component splitting and variable fixing.

All reductions are exact: they preserve the optimal value and allow
reconstructing a global optimum from the reduced problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from qopt.model import QuboModel

__all__ = [
    "Decomposition",
    "decompose_components",
    "fix_variables",
    "persistency_pass",
]


@dataclass(frozen=True)
class Decomposition:
    """Connected components of a model's coupling graph.

    ``components`` pairs each sub-model with the tuple of original variable
    indices its variables map back to; the maps partition ``range(n)``.
    Solving every sub-model independently and merging the argmins through the
    index maps yields a global optimum, since components share no terms.
    """

    components: tuple[tuple[QuboModel, tuple[int, ...]], ...]

    def merge(self, assignments: Sequence[Sequence[int]]) -> tuple[int, ...]:
        """Stitch per-component assignments back into a full assignment."""
        if len(assignments) != len(self.components):
            raise ValueError(
                f"got {len(assignments)} assignments for {len(self.components)} components"
            )
        n = sum(len(index_map) for _, index_map in self.components)
        merged = [0] * n
        for (sub, index_map), bits in zip(self.components, assignments):
            if len(bits) != sub.n:
                raise ValueError(f"assignment length {len(bits)} does not match component size {sub.n}")
            for local, original in enumerate(index_map):
                merged[original] = int(bits[local])
        return tuple(merged)


def decompose_components(q: QuboModel) -> Decomposition:
    """Split a model into independent sub-models along coupling components.

    Components are ordered by their smallest original variable index; the
    constant offset rides on the first component (an empty model keeps it on
    a single empty component).
    """
    # Union-find over the coupling graph; isolated variables form singletons.
    parent = list(range(q.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in q.quadratic_pairs():
        ra, rb = find(i), find(j)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for v in range(q.n):
        groups.setdefault(find(v), []).append(v)
    ordered = [tuple(groups[root]) for root in sorted(groups)]
    if not ordered:
        return Decomposition(components=((QuboModel(n=0, terms={}, offset=q.offset), ()),))

    components = []
    for pos, index_map in enumerate(ordered):
        local = {orig: k for k, orig in enumerate(index_map)}
        terms = {
            (local[i], local[j]): c
            for (i, j), c in q.terms.items()
            if i in local and j in local
        }
        offset = q.offset if pos == 0 else 0.0
        components.append((QuboModel(n=len(index_map), terms=terms, offset=offset), index_map))
    return Decomposition(components=tuple(components))


def fix_variables(q: QuboModel, assignment: Mapping[int, int]) -> QuboModel:
    """Substitute fixed bits into a model, folding their contributions exactly.

    The result ranges over the unassigned variables in their original order;
    for every completion ``y`` of the free variables,
    ``reduced.energy(y) == q.energy(merged)`` where ``merged`` interleaves
    ``assignment`` with ``y``.
    """
    fixed: dict[int, int] = {}
    for var, bit in assignment.items():
        v = int(var)
        if not 0 <= v < q.n:
            raise ValueError(f"variable index {var} out of range for n={q.n}")
        if bit not in (0, 1):
            raise ValueError(f"fixed value for variable {var} must be 0 or 1, got {bit!r}")
        fixed[v] = int(bit)
    if not fixed:
        return q

    keep = [v for v in range(q.n) if v not in fixed]
    local = {orig: k for k, orig in enumerate(keep)}
    terms: dict[tuple[int, int], float] = {}
    offset = q.offset

    def _add(i: int, j: int, c: float) -> None:
        key = (min(i, j), max(i, j))
        terms[key] = terms.get(key, 0.0) + c

    for (i, j), c in q.terms.items():
        fi, fj = i in fixed, j in fixed
        if i == j:
            if fi:
                offset += c * fixed[i]
            else:
                _add(local[i], local[i], c)
        elif fi and fj:
            offset += c * fixed[i] * fixed[j]
        elif fi:
            if fixed[i]:
                _add(local[j], local[j], c)
        elif fj:
            if fixed[j]:
                _add(local[i], local[i], c)
        else:
            _add(local[i], local[j], c)
    terms = {k: v for k, v in terms.items() if v != 0.0}
    return QuboModel(n=len(keep), terms=terms, offset=offset)


def persistency_pass(q: QuboModel) -> tuple[QuboModel, dict[int, int]]:
    """Fix variables whose optimal value is decided by a one-variable bound.

    For variable ``i`` with linear coefficient ``l_i`` and couplings
    ``c_ij``, flipping ``x_i`` from 0 to 1 changes the energy by
    ``l_i + sum(c_ij x_j)``, which lies between ``l_i + sum(min(c_ij, 0))``
    and ``l_i + sum(max(c_ij, 0))`` over all completions. If the upper bound
    is <= 0 some optimum has ``x_i = 1``; if the lower bound is >= 0 some
    optimum has ``x_i = 0``. One variable is fixed per round (the lowest
    index), the model refolds, and the scan repeats until nothing qualifies.

    Returns the reduced model and the map of fixed original variables. The
    rule is deliberately conservative: it only fixes when optimality
    preservation follows from the bound, so the reduced optimum always
    extends to a global one through the returned map.
    """
    fixed_total: dict[int, int] = {}
    current = q
    remaining = list(range(q.n))
    while True:
        choice = None
        lin = current.linear_vector()
        lo = lin.copy()
        hi = lin.copy()
        for (i, j), c in current.terms.items():
            if i != j:
                for v in (i, j):
                    if c > 0:
                        hi[v] += c
                    else:
                        lo[v] += c
        for v in range(current.n):
            if hi[v] <= 0.0:
                choice = (v, 1)
                break
            if lo[v] >= 0.0:
                choice = (v, 0)
                break
        if choice is None:
            return current, fixed_total
        v, bit = choice
        fixed_total[remaining[v]] = bit
        del remaining[v]
        current = fix_variables(current, {v: bit})
