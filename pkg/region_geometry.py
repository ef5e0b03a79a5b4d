"""
Complex-plane set machinery for scaled relative graphs
Interval disks, hyperbolic convex hulls, inversion z -> 1/z and exact distances
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config import Config
from errors import PreconditionError

INFINITY = complex(math.inf, 0.0)

# collinearity threshold for orientation tests in the Klein model
KLEIN_EPS = 1e-14


def is_infinite(z: complex) -> bool:
    return cmath.isinf(z)


def to_upper(z: complex) -> complex:
    """Representative of {z, conj(z)} in the closed upper half plane"""
    if is_infinite(z):
        return INFINITY
    return complex(z.real, abs(z.imag))


def klein_coordinates(z: complex) -> Tuple[float, float]:
    """
    Position of an upper-half-plane point in the Klein disk.

    Geodesics become straight chords there, so hyperbolic convexity is
    ordinary convexity. Real points land on the unit circle and infinity
    lands on (0, 1).
    """
    if is_infinite(z):
        return (0.0, 1.0)
    r2 = z.real * z.real + z.imag * z.imag
    return (2.0 * z.real / (r2 + 1.0), (r2 - 1.0) / (r2 + 1.0))


def _cross(o: Tuple[float, float], a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _same_point(z1: complex, z2: complex, tol: float) -> bool:
    if is_infinite(z1) or is_infinite(z2):
        return is_infinite(z1) and is_infinite(z2)
    return abs(z1 - z2) <= tol


@dataclass(frozen=True)
class IntervalDisk:
    """Disk centred on the real axis meeting it in [alpha, beta]"""
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise PreconditionError("disk endpoints must be finite")
        if self.alpha > self.beta:
            raise PreconditionError(f"alpha ({self.alpha}) must not exceed beta ({self.beta})")

    @property
    def center(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    @property
    def radius(self) -> float:
        return 0.5 * (self.beta - self.alpha)

    @property
    def is_point(self) -> bool:
        return self.alpha == self.beta

    def contains(self, z: complex, tol: float = Config.GEOMETRY_TOL) -> bool:
        return abs(z - self.center) <= self.radius + tol

    def boundary_samples(self, n: int) -> np.ndarray:
        if self.is_point:
            return np.array([complex(self.center)])
        theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * theta)


def disk_from_interval(alpha: float, beta: float) -> IntervalDisk:
    """Construct D_[alpha, beta]"""
    return IntervalDisk(float(alpha), float(beta))


def scaled_negated_disk(disk: IntervalDisk, tau: float) -> IntervalDisk:
    """-tau * D_[alpha, beta] = D_[-tau*beta, -tau*alpha]"""
    if not 0.0 <= tau <= 1.0:
        raise PreconditionError(f"tau must lie in [0, 1], got {tau}")
    # + 0.0 turns -0.0 into 0.0
    return IntervalDisk(-tau * disk.beta + 0.0, -tau * disk.alpha + 0.0)


@dataclass(frozen=True)
class GeodesicArc:
    """
    Hyperbolic geodesic segment between two points of the closed upper half plane.

    Vertical arcs store the abscissa in center and the height range in
    [lower, upper] (upper is inf for a ray). Circular arcs store the real
    center, the radius and the polar angle range.
    """
    start: complex
    end: complex
    vertical: bool = field(init=False)
    center: float = field(init=False)
    radius: float = field(init=False)
    lower: float = field(init=False)
    upper: float = field(init=False)

    def __post_init__(self):
        a, b = self.start, self.end
        if is_infinite(a) and is_infinite(b):
            raise PreconditionError("an arc needs at least one finite end")
        if is_infinite(a) or is_infinite(b):
            finite = b if is_infinite(a) else a
            self._set(True, finite.real, math.inf, finite.imag, math.inf)
            return
        scale = max(1.0, abs(a), abs(b))
        if abs(a.real - b.real) <= 1e-12 * scale:
            self._set(True, 0.5 * (a.real + b.real), math.inf,
                      min(a.imag, b.imag), max(a.imag, b.imag))
            return
        m = (abs(b) ** 2 - abs(a) ** 2) / (2.0 * (b.real - a.real))
        ta = math.atan2(a.imag, a.real - m)
        tb = math.atan2(b.imag, b.real - m)
        self._set(False, m, abs(a - m), min(ta, tb), max(ta, tb))

    def _set(self, vertical, center, radius, lower, upper):
        object.__setattr__(self, 'vertical', vertical)
        object.__setattr__(self, 'center', float(center))
        object.__setattr__(self, 'radius', float(radius))
        object.__setattr__(self, 'lower', float(lower))
        object.__setattr__(self, 'upper', float(upper))

    @property
    def is_ray(self) -> bool:
        return self.vertical and math.isinf(self.upper)

    def point_distance(self, z: complex) -> float:
        """Euclidean distance from an upper-half-plane point to the arc"""
        return float(_ArcTable((self,)).distances(z)[0])

    def sample(self, n: int, ray_length: float = 10.0) -> np.ndarray:
        """n points along the arc (rays are cut ray_length above their base)"""
        if self.vertical:
            top = self.lower + ray_length if self.is_ray else self.upper
            return self.center + 1j * np.linspace(self.lower, top, n)
        theta = np.linspace(self.lower, self.upper, n)
        return self.center + self.radius * np.exp(1j * theta)


class _ArcTable:
    """Column storage of a boundary so distances are one vectorised pass"""

    def __init__(self, arcs: Sequence[GeodesicArc]):
        self.vertical = np.array([arc.vertical for arc in arcs], dtype=bool)
        self.center = np.array([arc.center for arc in arcs])
        self.radius = np.array([arc.radius for arc in arcs])
        self.lower = np.array([arc.lower for arc in arcs])
        self.upper = np.array([arc.upper for arc in arcs])
        self.start = np.array([arc.start for arc in arcs], dtype=complex)
        self.end = np.array([arc.end for arc in arcs], dtype=complex)

    def distances(self, z: complex) -> np.ndarray:
        with np.errstate(invalid='ignore'):
            # vertical segments and rays: clamp the height
            y = np.clip(z.imag, self.lower, self.upper)
            d_vertical = np.hypot(z.real - self.center, z.imag - y)

            # circular arcs: radial projection when it falls inside the angle range
            offset = z - self.center
            theta = np.arctan2(offset.imag, offset.real)
            d_radial = np.abs(np.abs(offset) - self.radius)
            d_ends = np.minimum(np.abs(z - self.start), np.abs(z - self.end))
            inside = (theta >= self.lower) & (theta <= self.upper)
            d_circle = np.where(inside, d_radial, d_ends)

        return np.where(self.vertical, d_vertical, d_circle)


@dataclass(frozen=True)
class HyperbolicRegion:
    """
    Conjugate-symmetric region stored by its upper-half-plane part.

    vertices are the extreme points of the hull in boundary order (infinity
    allowed), boundary holds the geodesic arcs joining consecutive vertices.
    Regions with at most two vertices are degenerate: a point or a single arc.
    """
    vertices: Tuple[complex, ...]
    boundary: Tuple[GeodesicArc, ...]
    tol: float = Config.GEOMETRY_TOL

    @property
    def unbounded(self) -> bool:
        return any(is_infinite(v) for v in self.vertices)

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) <= 2

    @property
    def finite_vertices(self) -> Tuple[complex, ...]:
        return tuple(v for v in self.vertices if not is_infinite(v))

    @cached_property
    def _arcs(self) -> _ArcTable:
        return _ArcTable(self.boundary)

    @cached_property
    def _klein(self) -> np.ndarray:
        return np.array([klein_coordinates(v) for v in self.vertices])

    def klein_polygon(self) -> List[Tuple[float, float]]:
        return [tuple(p) for p in self._klein]

    def boundary_distance(self, z: complex) -> float:
        """Distance from an upper-half-plane point to the stored boundary"""
        if not self.boundary:
            return min(abs(z - v) for v in self.finite_vertices)
        return float(np.min(self._arcs.distances(z)))

    def klein_interior(self, z: complex) -> bool:
        """Point-in-polygon test in the Klein model (non-degenerate regions only)"""
        if self.is_degenerate:
            return False
        px, py = klein_coordinates(z)
        polygon = self._klein
        following = np.roll(polygon, -1, axis=0)
        cross = ((following[:, 0] - polygon[:, 0]) * (py - polygon[:, 1])
                 - (following[:, 1] - polygon[:, 1]) * (px - polygon[:, 0]))
        return bool(np.all(cross >= -KLEIN_EPS))

    def boundary_samples(self, n: int, ray_length: float = 10.0) -> np.ndarray:
        """Samples of the boundary and of its mirror image"""
        if not self.boundary:
            upper = np.array(self.finite_vertices, dtype=complex)
        else:
            per_arc = max(2, n // (2 * len(self.boundary)))
            upper = np.concatenate([arc.sample(per_arc, ray_length) for arc in self.boundary])
        return np.concatenate([upper, np.conj(upper)])

    def isclose(self, other: 'HyperbolicRegion', tol: float = 1e-9) -> bool:
        """Same vertex set within tol (order free)"""
        if len(self.vertices) != len(other.vertices):
            return False
        remaining = list(other.vertices)
        for v in self.vertices:
            match = next((i for i, w in enumerate(remaining) if _same_point(v, w, tol)), None)
            if match is None:
                return False
            remaining.pop(match)
        return True


def _hull_order(klein: Sequence[Tuple[float, float]]) -> List[int]:
    """Andrew's monotone chain; counter-clockwise indices, collinear points dropped"""
    order = sorted(range(len(klein)), key=lambda i: klein[i])
    if len(order) <= 2:
        return order

    lower: List[int] = []
    for i in order:
        while len(lower) >= 2 and _cross(klein[lower[-2]], klein[lower[-1]], klein[i]) <= KLEIN_EPS:
            lower.pop()
        lower.append(i)

    upper: List[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and _cross(klein[upper[-2]], klein[upper[-1]], klein[i]) <= KLEIN_EPS:
            upper.pop()
        upper.append(i)

    return lower[:-1] + upper[:-1]


def _region_from_vertices(vertices: List[complex], tol: float) -> HyperbolicRegion:
    if len(vertices) == 1:
        arcs: Tuple[GeodesicArc, ...] = ()
    elif len(vertices) == 2:
        arcs = (GeodesicArc(vertices[0], vertices[1]),)
    else:
        arcs = tuple(GeodesicArc(vertices[i], vertices[(i + 1) % len(vertices)])
                     for i in range(len(vertices)))
    return HyperbolicRegion(vertices=tuple(vertices), boundary=arcs, tol=tol)


def hco(points: Iterable[complex], tol: float = Config.GEOMETRY_TOL) -> HyperbolicRegion:
    """
    Hyperbolic convex hull of a conjugate-symmetric point set.

    Points below the real axis are reflected first. The hull is a Euclidean
    hull in the Klein model, where the geodesics of the upper half plane
    (vertical lines and semicircles on the real axis) are chords. Wrapping
    the Klein polygon is the same walk as wrapping the point set with
    geodesic arcs.
    """
    upper = [to_upper(complex(p)) for p in points]
    if not upper:
        raise PreconditionError("hco needs at least one point")
    if any(cmath.isnan(z) for z in upper):
        raise PreconditionError("hco received a NaN point")

    klein = [klein_coordinates(z) for z in upper]

    # hull order is cyclic, so near-duplicates end up adjacent
    vertices: List[complex] = []
    for i in _hull_order(klein):
        if not vertices or not _same_point(upper[i], vertices[-1], tol):
            vertices.append(upper[i])
    while len(vertices) > 1 and _same_point(vertices[0], vertices[-1], tol):
        vertices.pop()
    return _region_from_vertices(vertices, tol)


def _invert_point(z: complex) -> complex:
    """z -> 1/conj(z), which keeps the upper half plane in place"""
    if is_infinite(z):
        return 0j
    if z == 0:
        return INFINITY
    return 1.0 / z.conjugate()


def invert_region(region: HyperbolicRegion) -> HyperbolicRegion:
    """Image of the region under z -> 1/z (an isometry of the half plane up to the mirror)"""
    return hco([_invert_point(v) for v in region.vertices], tol=region.tol)


def contains(region: HyperbolicRegion, z: complex, tol: float = None) -> bool:
    """Membership of z (or its conjugate) in the closed region"""
    tol = region.tol if tol is None else tol
    if is_infinite(z):
        return region.unbounded
    zu = to_upper(z)
    if region.klein_interior(zu):
        return True
    return region.boundary_distance(zu) <= tol


def point_region_distance(region: HyperbolicRegion, z: complex) -> float:
    """Exact Euclidean distance from z to the mirrored region"""
    zu = to_upper(z)
    if region.klein_interior(zu):
        return 0.0
    return region.boundary_distance(zu)


def dist_region_disk(region: HyperbolicRegion, disk: IntervalDisk) -> float:
    """inf |z1 - z2| over the region and the disk"""
    return max(0.0, point_region_distance(region, complex(disk.center)) - disk.radius)


def brute_force_dist(region: HyperbolicRegion, disk: IntervalDisk, n: int) -> float:
    """Sampling estimate of dist_region_disk (an upper bound that tightens with n)"""
    if n < 100:
        raise PreconditionError(f"brute_force_dist needs n >= 100, got {n}")

    center = complex(disk.center)
    if contains(region, center):
        return 0.0

    reach = abs(center) + disk.radius + 1.0
    ray_length = 2.0 * (reach + max((abs(v) for v in region.finite_vertices), default=0.0))
    region_points = region.boundary_samples(n, ray_length)
    if np.any(np.abs(region_points - center) <= disk.radius):
        return 0.0

    disk_points = disk.boundary_samples(n)
    tree = cKDTree(np.column_stack([disk_points.real, disk_points.imag]))
    distances, _ = tree.query(np.column_stack([region_points.real, region_points.imag]))
    return float(np.min(distances))
