"""Loop-equation verification: eps-ring, Berkowitz charpoly, LHS vs RHS.

The right-hand side of the loop equations is the eps_1...eps_n coefficient
of det(y - Phi(x) - M_eps), where M_eps sums chains of adjoint fields over
prime-form denominators with one nilpotent marker eps_i per external point.
Working in C[eps_1..eps_n]/(eps_i^2) makes the extraction exact: monomials
with a squared variable can never reach the square-free top monomial, so
dropping them loses nothing.  The ring has zero divisors, hence the
characteristic polynomial is computed division-free (Berkowitz) instead of
by elimination.

The left-hand side assembles (-1)^k W_k;n from the correlators module
(Casimir-weighted, insertion-linked permutation sums).  ``verify`` compares
the two coefficient tuples over sample points and additionally checks that
the left side neither depends on the chosen lift of the sample point nor on
the basis chosen inside the Cartan subalgebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import CartanBasis, diagonal_cartan
from .correlators import w_kn
from .errors import DistinctnessViolation, GeometryError
from .flatsection import FlatSolution, higgs_eval, m_field
from .geometry import (
    CoverPoint,
    DressedPoint,
    Path,
    PrimeForm,
    SPHERE,
    cover_point,
    loop_around,
    prime_eval,
)

_TOP_GUARD = 1e-6   # minimum sample distance from externals and poles


class NilpotentPoly:
    """Polynomial in eps_1..eps_n with every eps_i^2 = 0.

    Coefficients are stored per subset of variable indices (0-based
    frozensets), so multiplication is a disjoint-subset convolution.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict | None = None):
        self.n = n
        self.coeffs = {}
        if coeffs:
            for key, val in coeffs.items():
                if val != 0:
                    self.coeffs[frozenset(key)] = complex(val)

    # -- constructors --------------------------------------------------------

    @classmethod
    def const(cls, n: int, value) -> "NilpotentPoly":
        return cls(n, {frozenset(): complex(value)})

    @classmethod
    def eps(cls, n: int, i: int, value=1.0) -> "NilpotentPoly":
        if not 0 <= i < n:
            raise ValueError(f"variable index {i} out of range for n={n}")
        return cls(n, {frozenset({i}): complex(value)})

    # -- ring ops -------------------------------------------------------------

    def _coerce(self, other) -> "NilpotentPoly":
        if isinstance(other, NilpotentPoly):
            if other.n != self.n:
                raise ValueError("mixed variable counts")
            return other
        return NilpotentPoly.const(self.n, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            new = out.get(key, 0.0) + val
            if new == 0:
                out.pop(key, None)
            else:
                out[key] = new
        return NilpotentPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return NilpotentPoly(self.n, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                if ka & kb:
                    continue  # eps_i^2 = 0
                key = ka | kb
                new = out.get(key, 0.0) + va * vb
                if new == 0:
                    out.pop(key, None)
                else:
                    out[key] = new
        return NilpotentPoly(self.n, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = NilpotentPoly.const(self.n, other)
        if not isinstance(other, NilpotentPoly) or other.n != self.n:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "NilpotentPoly(0)"
        parts = []
        for key in sorted(self.coeffs, key=lambda s: (len(s), sorted(s))):
            mono = "*".join(f"e{i}" for i in sorted(key)) or "1"
            parts.append(f"({self.coeffs[key]:.6g})*{mono}")
        return " + ".join(parts)

    def coefficient(self, subset) -> complex:
        return self.coeffs.get(frozenset(subset), 0.0 + 0.0j)

    @property
    def top(self) -> complex:
        """Coefficient of the full square-free monomial eps_0...eps_(n-1)."""
        return self.coefficient(range(self.n))


def nil_mul(a: NilpotentPoly, b: NilpotentPoly) -> NilpotentPoly:
    return a * b


# -- division-free characteristic polynomial ---------------------------------


def charpoly_ring(a) -> list:
    """Coefficients of det(y*Id - A) for a matrix over a commutative ring.

    Returns ``[c_0, ..., c_m]`` with det(y - A) = sum_j c_j y^(m-j) and
    c_0 = 1, computed with the Berkowitz recursion (no divisions, sound in
    rings with zero divisors).  Entries may be plain numbers or
    NilpotentPoly; numbers are promoted to the 0-variable ring.
    """
    rows = [list(r) for r in a]
    m = len(rows)
    for r in rows:
        if len(r) != m:
            raise ValueError("matrix must be square")
    nvars = 0
    for r in rows:
        for v in r:
            if isinstance(v, NilpotentPoly):
                nvars = max(nvars, v.n)
    rows = [
        [v if isinstance(v, NilpotentPoly) else NilpotentPoly.const(nvars, v) for v in r]
        for r in rows
    ]
    return _berkowitz(rows, nvars)


def _berkowitz(rows: list, nvars: int) -> list:
    m = len(rows)
    one = NilpotentPoly.const(nvars, 1.0)
    if m == 0:
        return [one]
    if m == 1:
        return [one, -rows[0][0]]
    a = rows[0][0]
    r_vec = rows[0][1:]
    c_vec = [row[0] for row in rows[1:]]
    sub = [row[1:] for row in rows[1:]]

    # Toeplitz column: 1, -a, -R C, -R A C, -R A^2 C, ...
    diags = [c_vec]
    for _ in range(m - 2):
        prev = diags[-1]
        diags.append([
            sum((sub[i][j] * prev[j] for j in range(m - 1)), NilpotentPoly.const(nvars, 0.0))
            for i in range(m - 1)
        ])
    t = [one, -a]
    for d in diags:
        t.append(-sum((r_vec[j] * d[j] for j in range(m - 1)), NilpotentPoly.const(nvars, 0.0)))

    prev = _berkowitz(sub, nvars)  # length m
    out = []
    for i in range(m + 1):
        acc = NilpotentPoly.const(nvars, 0.0)
        for j in range(max(0, i - m), min(i, m - 1) + 1):
            acc = acc + t[i - j] * prev[j]
        out.append(acc)
    return out


def charpoly_leibniz(a) -> list:
    """Cross-check oracle: char coefficients via the full Leibniz sum."""
    rows = [list(r) for r in a]
    m = len(rows)
    nvars = 0
    for r in rows:
        for v in r:
            if isinstance(v, NilpotentPoly):
                nvars = max(nvars, v.n)
    conv = lambda v: v if isinstance(v, NilpotentPoly) else NilpotentPoly.const(nvars, v)
    zero = NilpotentPoly.const(nvars, 0.0)
    out = [NilpotentPoly.const(nvars, 0.0) for _ in range(m + 1)]
    out[0] = NilpotentPoly.const(nvars, 1.0)
    for k in range(1, m + 1):
        acc = zero
        for subset in itertools.combinations(range(m), k):
            for perm in itertools.permutations(subset):
                sign = _perm_sign_on(subset, perm)
                term = NilpotentPoly.const(nvars, sign)
                for i, j in zip(subset, perm):
                    term = term * conv(rows[i][j])
                acc = acc + term
        out[k] = NilpotentPoly.const(nvars, (-1.0) ** k) * acc
    return out


def _perm_sign_on(domain, perm) -> float:
    pos = {v: i for i, v in enumerate(domain)}
    idx = [pos[p] for p in perm]
    sign = 1.0
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


# -- loop equation sides ------------------------------------------------------


def m_epsilon(
    sol: FlatSolution,
    x: complex,
    externals,
    pf: PrimeForm = SPHERE,
) -> list:
    """r x r matrix over the eps-ring: chains of adjoint fields through x.

    Entry content: sum over ordered tuples of pairwise-distinct external
    indices (i_1..i_k) of eps_{i_1}...eps_{i_k} M_{i_1}...M_{i_k} divided by
    the prime-form chain E(x, x_{i_1}) E(x_{i_1}, x_{i_2}) ... E(x_{i_k}, x).
    """
    externals = list(externals)
    n = len(externals)
    r = sol.dim
    x = complex(x)
    xs = [X.projection for X in externals]
    for xi in xs:
        if xi == x:
            raise DistinctnessViolation("chain point collides with x")
    ms = [m_field(sol, X) for X in externals]

    acc: dict = {}
    for k in range(1, n + 1):
        for tup in itertools.permutations(range(n), k):
            num = ms[tup[0]].copy()
            for i in tup[1:]:
                num = num @ ms[i]
            den = prime_eval(pf, x, xs[tup[0]])
            for a, b in zip(tup, tup[1:]):
                den *= prime_eval(pf, xs[a], xs[b])
            den *= prime_eval(pf, xs[tup[-1]], x)
            key = frozenset(tup)
            acc[key] = acc.get(key, 0.0) + num / den

    out = [[NilpotentPoly(n) for _ in range(r)] for _ in range(r)]
    for key, mat in acc.items():
        for p in range(r):
            for q in range(r):
                if mat[p, q] != 0:
                    out[p][q] = out[p][q] + NilpotentPoly(n, {key: mat[p, q]})
    return out


def rhs_coeffs(
    sol: FlatSolution,
    x: complex,
    externals=(),
    pf: PrimeForm = SPHERE,
) -> list[complex]:
    """Top eps-coefficients of det(y - Phi(x) - M_eps), one per power of y."""
    externals = list(externals)
    n = len(externals)
    r = sol.dim
    phi = higgs_eval(sol.higgs, complex(x))
    meps = m_epsilon(sol, x, externals, pf)
    a = [
        [meps[p][q] + NilpotentPoly.const(n, phi[p, q]) for q in range(r)]
        for p in range(r)
    ]
    return [c.top for c in charpoly_ring(a)]


def lhs_coeffs(
    sol: FlatSolution,
    x_tilde: CoverPoint,
    externals=(),
    basis: CartanBasis | None = None,
    pf: PrimeForm = SPHERE,
) -> list[complex]:
    """((-1)^k W_k;n)_(k=0..r) via the insertion-linked correlator sums."""
    externals = list(externals)
    r = sol.dim
    out = []
    for k in range(r + 1):
        val = w_kn(
            sol, x_tilde, k, *externals, basis=basis, pf=pf, linked_only=True
        ).value
        out.append((-1) ** k * val)
    return out


# -- verification driver ------------------------------------------------------


@dataclass
class SampleResult:
    x: complex
    lhs: list[complex]
    rhs: list[complex]
    residuals: list[float]
    scale: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals)


@dataclass
class LoopReport:
    samples: list[SampleResult]
    tolerance: float
    max_residual: float = field(init=False)
    passed: bool = field(init=False)
    preimage_residual: float | None = None
    rotation_residual: float | None = None

    def __post_init__(self):
        self.max_residual = max((s.max_residual for s in self.samples), default=0.0)
        self.passed = self.max_residual < self.tolerance
        if self.preimage_residual is not None:
            self.passed = self.passed and self.preimage_residual < self.tolerance
        if self.rotation_residual is not None:
            self.passed = self.passed and self.rotation_residual < self.tolerance


@dataclass
class VerifyConfig:
    samples: int | list[complex] = 20
    externals: tuple[DressedPoint, ...] = ()
    basis: CartanBasis | None = None
    tolerance: float = 1e-8
    seed: int = 0
    check_preimage: bool = True
    check_rotation: bool = True
    sample_margin: float = 0.3


def _coefficient_residuals(lhs, rhs) -> tuple[list[float], float]:
    # one scale per tuple: structurally-zero coefficients (e.g. the trace of
    # a traceless field) must not divide roundoff by roundoff
    scale = max(max(abs(a) for a in lhs), max(abs(b) for b in rhs), 1e-30)
    return [abs(a - b) / scale for a, b in zip(lhs, rhs)], scale


def _draw_samples(sol: FlatSolution, cfg: VerifyConfig) -> list[complex]:
    if isinstance(cfg.samples, (list, tuple)):
        pts = [complex(p) for p in cfg.samples]
        for p in pts:
            for q in [X.projection for X in cfg.externals] + sol.higgs.pole_locations:
                if abs(p - q) < _TOP_GUARD:
                    raise DistinctnessViolation(
                        f"sample {p} within {_TOP_GUARD} of special point {q}"
                    )
        return pts
    rng = np.random.default_rng(cfg.seed)
    poles = sol.higgs.pole_locations
    center = np.mean(poles) if poles else 0.0
    spread = max((abs(p - center) for p in poles), default=1.0) + 1.0
    avoid = list(poles) + [X.projection for X in cfg.externals] + [sol.base_point]
    out: list[complex] = []
    while len(out) < int(cfg.samples):
        z = center + spread * (rng.uniform(-1.5, 1.5) + 1j * rng.uniform(-1.5, 1.5))
        if all(abs(z - q) >= cfg.sample_margin for q in avoid):
            out.append(complex(z))
    return out


def _lift(sol: FlatSolution, x: complex) -> CoverPoint:
    lift = cover_point(sol.base_point, x)
    lift.path.check_clearance(sol.higgs.pole_locations, sol.options.clearance)
    return lift


def _lift_with_detour(sol: FlatSolution, x: complex, rng) -> CoverPoint:
    """Straight lift if clear of poles, else a randomized two-leg detour."""
    for attempt in range(64):
        try:
            if attempt == 0:
                return _lift(sol, x)
            span = abs(x - sol.base_point) or 1.0
            offset = 0.8 * span * rng.uniform(0.3, 1.0) * np.exp(2j * np.pi * rng.uniform())
            mid = 0.5 * (sol.base_point + x) + offset
            cand = CoverPoint(Path((sol.base_point, mid, x)))
            cand.path.check_clearance(sol.higgs.pole_locations, sol.options.clearance)
            return cand
        except GeometryError:
            continue
    raise GeometryError(f"no clearance-respecting lift found for {x}")


def verify(sol: FlatSolution, cfg: VerifyConfig | None = None, pf: PrimeForm = SPHERE) -> LoopReport:
    """Compare LHS and RHS coefficient tuples over sample points.

    Also checks, at the first sample, that the LHS does not depend on the
    lift of x (two preimages related by a pole loop) and is invariant under
    a random unitary recombination of the Cartan basis.  The RHS is a
    function of plain x by construction.
    """
    cfg = cfg or VerifyConfig()
    rng = np.random.default_rng(cfg.seed + 1)
    basis = cfg.basis or diagonal_cartan(sol.rep)
    externals = list(cfg.externals)
    xs = _draw_samples(sol, cfg)

    results = []
    for x in xs:
        lift = _lift_with_detour(sol, x, rng)
        lhs = lhs_coeffs(sol, lift, externals, basis=basis, pf=pf)
        rhs = rhs_coeffs(sol, x, externals, pf=pf)
        residuals, scale = _coefficient_residuals(lhs, rhs)
        results.append(SampleResult(x, lhs, rhs, residuals, scale))

    preimage_res = None
    rotation_res = None
    if xs:
        x0 = xs[0]
        lift0 = _lift_with_detour(sol, x0, rng)
        lhs0 = lhs_coeffs(sol, lift0, externals, basis=basis, pf=pf)
        scale0 = max(max(abs(v) for v in lhs0), 1e-30)
        if cfg.check_preimage and sol.higgs.poles:
            pole = sol.higgs.pole_locations[0]
            radius = 0.45 * min(
                [abs(pole - q) for q in sol.higgs.pole_locations if q != pole]
                + [abs(pole - sol.base_point), 1.0]
            )
            gamma = loop_around(
                pole, radius, sol.base_point, sol.higgs.pole_locations,
                clearance=sol.options.clearance,
            )
            lhs_shift = lhs_coeffs(
                sol, lift0.prepend_loop(gamma), externals, basis=basis, pf=pf
            )
            preimage_res = max(abs(a - b) for a, b in zip(lhs0, lhs_shift)) / scale0
        if cfg.check_rotation:
            dim = len(basis.matrices)
            u = np.linalg.qr(
                rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            )[0]
            rotated = CartanBasis(
                sol.rep,
                [
                    sum(u[i, j] * basis.matrices[j] for j in range(dim))
                    for i in range(dim)
                ],
            )
            lhs_rot = lhs_coeffs(sol, lift0, externals, basis=rotated, pf=pf)
            rotation_res = max(abs(a - b) for a, b in zip(lhs0, lhs_rot)) / scale0

    return LoopReport(
        samples=results,
        tolerance=cfg.tolerance,
        preimage_residual=preimage_res,
        rotation_residual=rotation_res,
    )
