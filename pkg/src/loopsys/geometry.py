"""Prime form on the sphere, polyline paths, cover points and dressings.

The base curve is the Riemann sphere with one global coordinate; the point
at infinity is never an evaluation point.  Paths are polylines in the
punctured plane and stand in for points of the universal cover: a cover
point is a path from the configured base point, and two cover points
coincide only when their paths are literally identical (numerically equal
endpoints reached along different paths are distinct lifts).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class PrimeForm:
    """Bi-half-form vanishing to first order on the diagonal.

    ``kind == "sphere"`` is the rational form whose coordinate value is
    x - x'.  Custom forms are scalar callbacks validated only on sampled
    diagonal points; they need not be antisymmetric and may have
    singularities away from the diagonal.
    """

    kind: str = "sphere"
    custom_eval: Callable[[complex, complex], complex] | None = None

    def __post_init__(self):
        if self.kind not in ("sphere", "custom"):
            raise ValueError(f"unknown prime form kind {self.kind!r}")
        if self.kind == "custom" and self.custom_eval is None:
            raise ValueError("custom prime form needs an eval callback")

    def __call__(self, x: complex, xp: complex) -> complex:
        return prime_eval(self, x, xp)

    def validate_diagonal(self, points: Sequence[complex], tol: float = 1e-8) -> float:
        """Check eval(x, x+h) = -h + O(h^2) at each sample; return worst defect.

        Uses a two-step Richardson fit so the O(h^2) term cancels.
        """
        worst = 0.0
        h = 1e-4
        for x in points:
            g1 = prime_eval(self, x, x + h) / (-h)
            g2 = prime_eval(self, x, x + h / 2) / (-h / 2)
            defect = abs(2 * g2 - g1 - 1.0)
            worst = max(worst, defect)
            if defect > tol:
                raise ValueError(
                    f"prime form fails diagonal normalization at {x} (defect {defect:.2e})"
                )
        return worst


SPHERE = PrimeForm("sphere")


def prime_eval(pf: PrimeForm, x: complex, xp: complex) -> complex:
    """Coordinate value of the prime form; x - x' on the sphere."""
    if pf.kind == "sphere":
        return complex(x) - complex(xp)
    return complex(pf.custom_eval(complex(x), complex(xp)))


@dataclass(frozen=True)
class Path:
    """Finite polyline; identity (and cache keys) hinge on exact vertices."""

    vertices: tuple[complex, ...]

    def __init__(self, vertices: Sequence[complex]):
        vs = tuple(complex(v) for v in vertices)
        if len(vs) < 1:
            raise GeometryError("path needs at least one vertex")
        object.__setattr__(self, "vertices", vs)

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    @property
    def is_closed(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    def length(self) -> float:
        return sum(
            abs(b - a) for a, b in zip(self.vertices, self.vertices[1:])
        )

    def segments(self) -> list[tuple[complex, complex]]:
        return [(a, b) for a, b in zip(self.vertices, self.vertices[1:]) if a != b]

    def reverse(self) -> "Path":
        return Path(tuple(reversed(self.vertices)))

    def min_distance(self, p: complex) -> float:
        """Distance from the polyline to the point p."""
        best = math.inf
        for a, b in zip(self.vertices, self.vertices[1:]):
            best = min(best, _segment_distance(a, b, p))
        if len(self.vertices) == 1:
            best = abs(self.vertices[0] - p)
        return best

    def check_clearance(self, singularities: Sequence[complex], clearance: float) -> None:
        for s in singularities:
            d = self.min_distance(s)
            if d < clearance * (1 - 1e-9):
                raise GeometryError(
                    f"path comes within {d:.3e} of singularity {s} "
                    f"(clearance {clearance:.3e})"
                )


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    if a == b:
        return abs(p - a)
    u = b - a
    t = ((p - a) * u.conjugate()).real / abs(u) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * u - p)


def segment(a: complex, b: complex) -> Path:
    return Path((a, b))


def path_compose(a: Path, b: Path) -> Path:
    """Concatenate two polylines; endpoint of ``a`` must equal start of ``b``."""
    if a.end != b.start:
        raise GeometryError(f"cannot compose: {a.end} != {b.start}")
    return Path(a.vertices + b.vertices[1:])


def winding_number(path: Path, p: complex) -> float:
    """Total turning of the polyline around p, in units of full turns."""
    total = 0.0
    for a, b in zip(path.vertices, path.vertices[1:]):
        total += cmath.phase((b - p) / (a - p))
    return total / (2 * math.pi)


def loop_around(
    p: complex,
    radius: float,
    base: complex,
    singularities: Sequence[complex],
    clearance: float = 1e-3,
) -> Path:
    """Closed polyline from ``base`` encircling ``p`` once, counterclockwise.

    The circle is approximated with enough segments that the sagitta stays
    below clearance/2.  Raises GeometryError when no clearance-respecting
    loop exists for these inputs (radius too large for the singularity
    separation, base inside the disc, approach segment blocked, ...).
    """
    p = complex(p)
    base = complex(base)
    others = [complex(s) for s in singularities if complex(s) != p]
    for s in others:
        if abs(s - p) <= radius:
            raise GeometryError(
                f"radius {radius} reaches the singularity at {s}"
            )
    if abs(base - p) <= radius:
        raise GeometryError("base point lies inside the requested disc")
    if radius < clearance:
        raise GeometryError("radius below clearance; loop would hug the singularity")

    # sagitta r(1 - cos(pi/n)) < clearance/2
    n = 8
    while radius * (1 - math.cos(math.pi / n)) >= clearance / 2:
        n *= 2
        if n > 1 << 20:
            raise GeometryError("cannot satisfy sagitta bound")
    start_angle = cmath.phase(base - p)
    circle = [
        p + radius * cmath.exp(1j * (start_angle + 2 * math.pi * k / n))
        for k in range(n)
    ]

    def entry_clear(v: complex) -> bool:
        approach = Path((base, v))
        return all(approach.min_distance(s) >= clearance for s in others)

    # prefer the radial entry; fall back to other polygon vertices when a
    # singularity blocks the straight approach
    entry = next((j for j in range(n) if entry_clear(circle[j])), None)
    if entry is None:
        raise GeometryError("every approach to the loop violates clearance")
    ring = [circle[(entry + k) % n] for k in range(n + 1)]
    path = Path([base] + ring + [base])
    path.check_clearance(others, clearance)
    if path.min_distance(p) < min(clearance, radius * math.cos(math.pi / n)) * (1 - 1e-9):
        raise GeometryError("loop cannot keep clearance from the encircled point")
    return path


@dataclass(frozen=True)
class CoverPoint:
    """A point of the universal cover: a path from the global base point."""

    path: Path

    @property
    def projection(self) -> complex:
        return self.path.end

    @property
    def base(self) -> complex:
        return self.path.start

    def prepend_loop(self, loop: Path) -> "CoverPoint":
        """The deck translate of this lift by a loop at the base point.

        Transporting a flat section along the translated path multiplies its
        endpoint value on the right by the monodromy of ``loop``.
        """
        if not loop.is_closed or loop.start != self.base:
            raise GeometryError("deck translation needs a loop closed at the base point")
        return CoverPoint(path_compose(loop, self.path))

    def coincides(self, other: "CoverPoint") -> bool:
        # identical lift means identical path; equal projections reached
        # along different paths are different cover points
        return self.path.vertices == other.path.vertices


def cover_point(base: complex, x: complex) -> CoverPoint:
    """The lift of ``x`` reached along the straight segment from ``base``."""
    return CoverPoint(segment(base, x))


@dataclass(frozen=True)
class DressedPoint:
    """A cover point together with an algebra element (the dressing matrix)."""

    cover: CoverPoint
    dressing: np.ndarray

    def __init__(self, cover: CoverPoint, dressing, rep=None, span_tol: float = 1e-10):
        mat = np.asarray(dressing, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("dressing must be a square matrix")
        if rep is not None and not rep.contains(mat, tol=span_tol):
            raise ValueError("dressing does not lie in the representation span")
        object.__setattr__(self, "cover", cover)
        object.__setattr__(self, "dressing", mat)

    @property
    def projection(self) -> complex:
        return self.cover.projection


def dressed(base: complex, x: complex, e, rep=None) -> DressedPoint:
    """Straight-path lift of ``x`` dressed with the matrix ``e``."""
    return DressedPoint(cover_point(base, x), e, rep=rep)
