"""Correlators of a flat section: kernels, cycle sums, determinantal form.

The two-point kernel is K(x~1, x~2) = Psi(x~1)^-1 Psi(x~2) / E(x1, x2); its
normal-ordered version replaces the diagonal singularity by
Psi^-1 Phi Psi when the two cover points are literally the same lift.

Connected correlators are single-cycle sums of traces of adjoint-field
products over prime-form denominators; full correlators sum products of
connected ones over set partitions.  The determinantal form evaluates the
same full correlator as a permutation sum over the kernel table with a
trace per cycle, which is also how coincident insertion points (normal
ordering) and the Casimir-weighted generators are handled.

``w_kn`` inserts k dual-basis dressings at one cover point and weights by
the degree-k Casimir tensor.  With ``linked_only=True`` the permutation sum
keeps only terms in which every external point sits in a cycle through the
insertion point; those are the combinations the loop equations constrain,
and they carry a (-1)^n prefactor relative to the plain sum so that

    sum_k (-1)^k y^(r-k) W_k;n  =  [eps_1...eps_n] det(y - Phi - M_eps).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import CartanBasis, casimir_tensor, diagonal_cartan
from .errors import (
    CoincidentPoints,
    DistinctnessViolation,
    IndexBudgetExceeded,
)
from .flatsection import FlatSolution, higgs_eval, m_field
from .geometry import CoverPoint, DressedPoint, PrimeForm, SPHERE, prime_eval

MAX_POINTS = 8          # permutation/partition enumeration cap
MAX_INDEX_TUPLES = 200_000


@dataclass(frozen=True)
class KernelValue:
    """Coordinate coefficient of the kernel (or its normal-ordered value)."""

    value: np.ndarray
    coincident: bool


@dataclass(frozen=True)
class CorrelatorValue:
    """Coordinate coefficient of an n-form correlator with its points."""

    value: complex
    points: tuple[DressedPoint, ...] = ()

    def __complex__(self) -> complex:
        return self.value


def kernel(sol: FlatSolution, x1: CoverPoint, x2: CoverPoint, pf: PrimeForm = SPHERE) -> KernelValue:
    """Parallel-transport kernel between two distinct cover points."""
    if x1.coincides(x2):
        raise CoincidentPoints("identical cover points; use kernel_normal")
    if x1.projection == x2.projection:
        raise DistinctnessViolation("projections coincide but the lifts differ")
    _, psi1_inv = sol.psi_at(x1)
    psi2, _ = sol.psi_at(x2)
    val = (psi1_inv @ psi2) / prime_eval(pf, x1.projection, x2.projection)
    return KernelValue(val, coincident=False)


def kernel_normal(sol: FlatSolution, x1: CoverPoint, x2: CoverPoint, pf: PrimeForm = SPHERE) -> KernelValue:
    """Kernel with the diagonal pole subtracted at coinciding cover points."""
    if x1.coincides(x2):
        psi, psi_inv = sol.psi_at(x1)
        phi = higgs_eval(sol.higgs, x1.projection)
        return KernelValue(psi_inv @ phi @ psi, coincident=True)
    return kernel(sol, x1, x2, pf)


# -- connected and full correlators -----------------------------------------


def _m_values(sol: FlatSolution, points: list[DressedPoint]) -> list[np.ndarray]:
    return [m_field(sol, X) for X in points]


def _require_distinct(points) -> None:
    proj = [X.projection for X in points]
    for i in range(len(proj)):
        for j in range(i + 1, len(proj)):
            if proj[i] == proj[j]:
                raise DistinctnessViolation(
                    f"projections {proj[i]} coincide at slots {i}, {j}"
                )


def connected_w(sol: FlatSolution, *points: DressedPoint, pf: PrimeForm = SPHERE) -> CorrelatorValue:
    """Single-cycle correlator of the dressed points.

    n = 1 is Tr(M Phi); n = 2 is -Tr(M1 M2)/(E(x1,x2) E(x2,x1)); n >= 3 sums
    the (n-1)! cyclic orders with the one-cycle signature (-1)^(n-1).
    """
    n = len(points)
    if n == 0:
        raise ValueError("need at least one point")
    if n > MAX_POINTS:
        raise IndexBudgetExceeded(f"n={n} exceeds the cap {MAX_POINTS}")
    if n >= 2:
        _require_distinct(points)
    ms = _m_values(sol, list(points))
    xs = [X.projection for X in points]
    if n == 1:
        phi = higgs_eval(sol.higgs, xs[0])
        return CorrelatorValue(complex(np.trace(ms[0] @ phi)), tuple(points))
    total = 0.0 + 0.0j
    sign = (-1) ** (n - 1)
    for order in itertools.permutations(range(1, n)):
        cycle = (0,) + order
        prod = ms[0]
        for i in order:
            prod = prod @ ms[i]
        den = 1.0 + 0.0j
        for a, b in zip(cycle, cycle[1:] + (0,)):
            den *= prime_eval(pf, xs[a], xs[b])
        total += np.trace(prod) / den
    return CorrelatorValue(complex(sign * total), tuple(points))


def set_partitions(items: list):
    """All partitions of ``items`` into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def full_w(sol: FlatSolution, *points: DressedPoint, pf: PrimeForm = SPHERE) -> CorrelatorValue:
    """Sum over set partitions of products of connected correlators."""
    n = len(points)
    if n == 0:
        return CorrelatorValue(1.0 + 0.0j, ())
    if n > MAX_POINTS:
        raise IndexBudgetExceeded(f"n={n} exceeds the cap {MAX_POINTS}")
    if n >= 2:
        _require_distinct(points)
    total = 0.0 + 0.0j
    for part in set_partitions(list(range(n))):
        term = 1.0 + 0.0j
        for block in part:
            term *= connected_w(sol, *(points[i] for i in block), pf=pf).value
        total += term
    return CorrelatorValue(complex(total), tuple(points))


# -- determinantal form ------------------------------------------------------


@lru_cache(maxsize=32)
def _cycle_table(n: int) -> tuple:
    """Permutations of range(n) as (sign, cycles) with cycles as index tuples."""
    table = []
    for perm in itertools.permutations(range(n)):
        seen = [False] * n
        cycles = []
        for start in range(n):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            nxt = perm[start]
            while nxt != start:
                cyc.append(nxt)
                seen[nxt] = True
                nxt = perm[nxt]
            cycles.append(tuple(cyc))
        sign = (-1) ** (n - len(cycles))
        table.append((sign, tuple(cycles)))
    return tuple(table)


def _kernel_table(sol: FlatSolution, covers: list[CoverPoint], pf: PrimeForm) -> list[list[np.ndarray]]:
    n = len(covers)
    tab: list[list[np.ndarray]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            tab[i][j] = kernel_normal(sol, covers[i], covers[j], pf).value
    return tab


def _det_sum(
    dressings: list[np.ndarray],
    ktab: list[list[np.ndarray]],
    insertion_mask: list[bool] | None = None,
    linked_only: bool = False,
) -> complex:
    """Signed permutation sum of cycle traces over the kernel table.

    With ``linked_only`` every cycle must contain at least one insertion
    index (per ``insertion_mask``); permutations with a purely-external
    cycle are dropped.
    """
    n = len(dressings)
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for sign, cycles in _cycle_table(n):
        if linked_only and any(
            not any(insertion_mask[i] for i in cyc) for cyc in cycles
        ):
            continue
        term = complex(sign)
        for cyc in cycles:
            prod = None
            for a, b in zip(cyc, cyc[1:] + (cyc[0],)):
                factor = dressings[a] @ ktab[a][b]
                prod = factor if prod is None else prod @ factor
            term *= np.trace(prod)
        total += term
    return total


def det_w(sol: FlatSolution, points, pf: PrimeForm = SPHERE) -> CorrelatorValue:
    """Correlator via the normal-ordered determinantal permutation sum.

    ``points`` is a sequence of DressedPoint; coincident cover points are
    allowed, their kernel entries take the normal-ordered value.  For
    pairwise-distinct projections this equals ``full_w``.
    """
    points = list(points)
    n = len(points)
    if n == 0:
        return CorrelatorValue(1.0 + 0.0j, ())
    if n > MAX_POINTS:
        raise IndexBudgetExceeded(f"n={n} exceeds the cap {MAX_POINTS}")
    covers = [X.cover for X in points]
    for i in range(n):
        for j in range(i + 1, n):
            if covers[i].projection == covers[j].projection and not covers[i].coincides(covers[j]):
                raise DistinctnessViolation(
                    "equal projections reached along different lifts"
                )
    ktab = _kernel_table(sol, covers, pf)
    val = _det_sum([X.dressing for X in points], ktab)
    return CorrelatorValue(complex(val), tuple(points))


def w_kn(
    sol: FlatSolution,
    x_tilde: CoverPoint,
    k: int,
    *externals: DressedPoint,
    basis: CartanBasis | None = None,
    pf: PrimeForm = SPHERE,
    linked_only: bool = False,
    index_budget: int = MAX_INDEX_TUPLES,
) -> CorrelatorValue:
    """Casimir-weighted correlator with k dual-basis insertions at one lift.

    ``basis`` chooses where the insertions live: a CartanBasis (default: the
    diagonal-unit Cartan of the matrix algebra, cost dim(h)^k) or the full
    representation.  ``linked_only`` switches to the loop-equation form, in
    which every external point must connect to the insertion point through
    the kernel chain and the sum carries a (-1)^n prefactor.
    """
    rep = sol.rep
    r = sol.dim
    if not 0 <= k <= r:
        raise ValueError(f"need 0 <= k <= {r}")
    x = x_tilde.projection
    for X in externals:
        if X.projection == x:
            raise DistinctnessViolation("insertion point collides with an external point")
    if externals:
        _require_distinct(externals)
    n = len(externals)
    if basis is None:
        basis = diagonal_cartan(rep)
    mats = basis.matrices
    if len(mats) ** max(k, 1) > index_budget:
        raise IndexBudgetExceeded(
            f"{len(mats)}^{k} index tuples exceed the budget {index_budget}"
        )
    if k == 0:
        if linked_only:
            value = 1.0 + 0.0j if n == 0 else 0.0 + 0.0j
            return CorrelatorValue(value, tuple(externals))
        return det_w(sol, externals, pf)

    tensor = casimir_tensor(rep, basis, k)
    dual = basis.dual()
    covers = [x_tilde] * k + [X.cover for X in externals]
    ktab = _kernel_table(sol, covers, pf)
    ext_dress = [X.dressing for X in externals]
    mask = [True] * k + [False] * n

    total = 0.0 + 0.0j
    for idx in itertools.product(range(len(mats)), repeat=k):
        c = tensor[idx]
        if c == 0:
            continue
        dressings = [dual[i] for i in idx] + ext_dress
        total += c * _det_sum(dressings, ktab, mask, linked_only)
    if linked_only:
        total *= (-1) ** n
    return CorrelatorValue(complex(total), tuple(externals))
