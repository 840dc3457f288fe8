"""Flat sections of d - Phi: transport along paths, monodromy, adjoint field.

``transport`` integrates d(Psi) = Phi Psi along a polyline with initial
value Id (times an optional constant gauge C) at the base point.  The
inverse is co-integrated through d(Psi^-1) = -Psi^-1 Phi rather than
inverted at the endpoint, which keeps Psi Psi^-1 = Id tight on long paths;
log det Psi is carried along as well for the Liouville consistency check
det Psi = exp(int Tr Phi).

Conventions: appending a loop gamma (closed at the base point) in front of
a path right-multiplies the transported value by S_gamma = monodromy(gamma);
loops are positively (counterclockwise) oriented.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import EvalAtSingularity, GeometryError, IntegrationFailure
from .geometry import CoverPoint, DressedPoint, Path
from .algebra import Representation


@dataclass(frozen=True)
class HiggsField:
    """Rational matrix-valued 1-form coefficient on the sphere.

    The dx-coefficient is

        Phi(x) = sum_p sum_m A[p][m] (x - p)^(-m-1)  +  sum_j B[j] x^j

    with ``poles`` a list of (location, [A_1, A_2, ...]) pairs giving the
    Laurent matrices for orders -1, -2, ... and ``poly_part`` the polynomial
    coefficients.  Every matrix must lie in the span of the representation
    basis; pole locations must be pairwise distinct.
    """

    rep: Representation
    poles: tuple[tuple[complex, tuple[np.ndarray, ...]], ...]
    poly_part: tuple[np.ndarray, ...] = ()

    def __init__(self, rep: Representation, poles, poly_part=(), validate: bool = True):
        r = rep.dim_rep
        norm_poles = []
        for loc, mats in poles:
            mats = tuple(np.asarray(m, dtype=complex) for m in mats)
            for m in mats:
                if m.shape != (r, r):
                    raise ValueError("Laurent matrix has wrong shape")
            norm_poles.append((complex(loc), mats))
        poly = tuple(np.asarray(m, dtype=complex) for m in poly_part)
        for m in poly:
            if m.shape != (r, r):
                raise ValueError("polynomial matrix has wrong shape")
        object.__setattr__(self, "rep", rep)
        object.__setattr__(self, "poles", tuple(norm_poles))
        object.__setattr__(self, "poly_part", poly)
        if validate:
            locs = [loc for loc, _ in norm_poles]
            if len(set(locs)) != len(locs):
                raise ValueError("pole locations must be pairwise distinct")
            for _, mats in norm_poles:
                for m in mats:
                    if np.any(m) and not rep.contains(m):
                        raise ValueError("Laurent matrix outside the representation span")
            for m in poly:
                if np.any(m) and not rep.contains(m):
                    raise ValueError("polynomial matrix outside the representation span")

    @property
    def pole_locations(self) -> list[complex]:
        return [loc for loc, _ in self.poles]

    @property
    def dim(self) -> int:
        return self.rep.dim_rep

    def __call__(self, x: complex) -> np.ndarray:
        return higgs_eval(self, x)


def higgs_eval(h: HiggsField, x: complex) -> np.ndarray:
    """dx-coefficient of the field at x; raises exactly on a pole location."""
    x = complex(x)
    r = h.dim
    out = np.zeros((r, r), dtype=complex)
    for loc, mats in h.poles:
        dz = x - loc
        if dz == 0:
            raise EvalAtSingularity(f"evaluation at pole {loc}")
        w = 1.0
        for m in mats:
            w /= dz
            out += m * w
    xp = 1.0
    for m in h.poly_part:
        out += m * xp
        xp *= x
    return out


def higgs_eval_deriv(h: HiggsField, x: complex) -> np.ndarray:
    """Exact x-derivative of the dx-coefficient (termwise rational calculus)."""
    x = complex(x)
    r = h.dim
    out = np.zeros((r, r), dtype=complex)
    for loc, mats in h.poles:
        dz = x - loc
        if dz == 0:
            raise EvalAtSingularity(f"evaluation at pole {loc}")
        for order, m in enumerate(mats, start=1):
            out += m * (-order) * dz ** (-order - 1)
    for j, m in enumerate(h.poly_part):
        if j >= 1:
            out += m * j * x ** (j - 1)
    return out


@dataclass
class IntegratorOptions:
    """Transport accuracy targets.

    ``rel_tol`` is the end-to-end accuracy goal for a transported Psi.  The
    per-step solver tolerance is driven three orders tighter, because global
    error grows with the step count and polygonal loops carry hundreds of
    segments.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    clearance: float = 1e-3

    @property
    def step_rtol(self) -> float:
        return max(self.rel_tol * 1e-3, 3e-14)

    @property
    def step_atol(self) -> float:
        return max(self.abs_tol * 1e-3, 1e-300)


@dataclass
class TransportResult:
    psi: np.ndarray
    psi_inv: np.ndarray
    unit_residual: float       # || Psi Psi^-1 - Id ||
    liouville_residual: float  # relative defect of det Psi vs exp(int Tr Phi)


class FlatSolution:
    """Flat section anchored at a base point, with a path-keyed cache.

    The cache maps exact vertex tuples to transport results; lookups and
    inserts are lock-protected so concurrent transports on distinct paths
    are safe.
    """

    def __init__(
        self,
        higgs: HiggsField,
        base_point: complex,
        options: IntegratorOptions | None = None,
        base_value: np.ndarray | None = None,
    ):
        self.higgs = higgs
        self.base_point = complex(base_point)
        self.options = options or IntegratorOptions()
        r = higgs.dim
        if base_value is None:
            base_value = np.eye(r)
        self.base_value = np.asarray(base_value, dtype=complex)
        if self.base_value.shape != (r, r):
            raise ValueError("base value has wrong shape")
        self._base_value_inv = np.linalg.inv(self.base_value)
        self._cache: dict[tuple[complex, ...], TransportResult] = {}
        self._lock = threading.Lock()
        for p in higgs.pole_locations:
            if abs(self.base_point - p) < self.options.clearance:
                raise GeometryError("base point violates clearance from a pole")

    @property
    def rep(self) -> Representation:
        return self.higgs.rep

    @property
    def dim(self) -> int:
        return self.higgs.dim

    # -- core transport ----------------------------------------------------

    def transport(self, path: Path) -> tuple[np.ndarray, np.ndarray]:
        """(Psi, Psi^-1) at the end of ``path``, starting from the base value."""
        res = self.transport_info(path)
        return res.psi, res.psi_inv

    def transport_info(self, path: Path) -> TransportResult:
        if path.start != self.base_point:
            raise GeometryError(
                f"path starts at {path.start}, solution is anchored at {self.base_point}"
            )
        key = path.vertices
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        path.check_clearance(self.higgs.pole_locations, self.options.clearance)
        res = self._integrate(path)
        with self._lock:
            self._cache[key] = res
        return res

    def _integrate(self, path: Path) -> TransportResult:
        r = self.dim
        psi = self.base_value.copy()
        psi_inv = self._base_value_inv.copy()
        log_det = complex(np.log(complex(np.linalg.det(self.base_value))))
        h = self.higgs

        for a, b in path.segments():
            dz = b - a

            def rhs(t, y):
                f = higgs_eval(h, a + t * dz) * dz
                m = y[: r * r].reshape(r, r)
                minv = y[r * r: 2 * r * r].reshape(r, r)
                return np.concatenate([
                    (f @ m).ravel(),
                    (-minv @ f).ravel(),
                    [np.trace(f)],
                ])

            y0 = np.concatenate([psi.ravel(), psi_inv.ravel(), [log_det]])
            sol = solve_ivp(
                rhs,
                (0.0, 1.0),
                y0,
                method="DOP853",
                rtol=self.options.step_rtol,
                atol=self.options.step_atol,
                max_step=self.options.max_step,
                dense_output=False,
            )
            if not sol.success:
                raise IntegrationFailure(f"transport failed on segment {a} -> {b}: {sol.message}")
            y = sol.y[:, -1]
            psi = y[: r * r].reshape(r, r)
            psi_inv = y[r * r: 2 * r * r].reshape(r, r)
            log_det = y[-1]

        unit_res = float(np.linalg.norm(psi @ psi_inv - np.eye(r)))
        det_expected = np.exp(log_det)
        liouville = abs(np.linalg.det(psi) - det_expected) / max(abs(det_expected), 1e-300)
        # relative to the conditioning of Psi, which bounds what any
        # integrator can deliver for the identity defect
        cond_scale = max(1.0, float(np.linalg.norm(psi) * np.linalg.norm(psi_inv)))
        if unit_res > 1e-6 * cond_scale:
            raise IntegrationFailure(
                f"transport lost invertibility (Psi Psi^-1 defect {unit_res:.2e})"
            )
        return TransportResult(psi, psi_inv, unit_res, float(liouville))

    # -- derived quantities --------------------------------------------------

    def psi_at(self, pt: CoverPoint) -> tuple[np.ndarray, np.ndarray]:
        return self.transport(pt.path)

    def monodromy(self, gamma: Path) -> np.ndarray:
        return monodromy(self, gamma)

    def m_field(self, X: DressedPoint) -> np.ndarray:
        return m_field(self, X)


def transport(sol: FlatSolution, path: Path) -> tuple[np.ndarray, np.ndarray]:
    return sol.transport(path)


def monodromy(sol: FlatSolution, gamma: Path) -> np.ndarray:
    """Constant matrix S with Psi(after gamma) = Psi(base) S.

    ``gamma`` must be closed at the base point.  Composing loops multiplies
    the matrices in traversal order: prepending gamma to a lift's path
    right-multiplies the transported Psi by S_gamma.
    """
    if not gamma.is_closed:
        raise GeometryError("monodromy needs a closed path")
    if gamma.start != sol.base_point:
        raise GeometryError("monodromy loop must be based at the base point")
    psi, _ = sol.transport(gamma)
    return sol._base_value_inv @ psi


def m_field(sol: FlatSolution, X: DressedPoint) -> np.ndarray:
    """Adjoint-orbit image Psi(x~) E Psi(x~)^-1 of the dressing."""
    psi, psi_inv = sol.psi_at(X.cover)
    return psi @ X.dressing @ psi_inv
