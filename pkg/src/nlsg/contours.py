"""Oriented contours in the complex plane and adaptive quadrature on them.

Loops are built as stadium shapes (two straight walls plus end caps) around
a point set, optionally pinched through a marked point where the integrand
is not analytic on one side.  All closed loops produced here are clockwise
(winding number -1 about the enclosed set).

``integrate`` runs panel-adaptive Gauss-Kronrod quadrature.  Every segment
is reparametrized by a cubic smoothstep, which suppresses inverse-sqrt
endpoint singularities at open chain ends and costs nothing for smooth
integrands.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConvergenceError, GeometryError

# 15-point Kronrod extension of 7-point Gauss, on [-1, 1]
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 14, 2)  # Gauss nodes inside the Kronrod set


@dataclass(frozen=True)
class LineSegment:
    """Straight oriented segment a -> b; ``side`` tags boundary-value pieces."""

    a: complex
    b: complex
    side: str | None = None

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return self.a + (self.b - self.a) * s

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        return np.full_like(s, self.b - self.a, dtype=complex)

    def reversed(self):
        return LineSegment(self.b, self.a, self.side)

    @property
    def endpoints(self):
        return self.a, self.b


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc center + r*exp(i theta), theta from th0 to th1."""

    center: complex
    radius: float
    th0: float
    th1: float
    side: str | None = None

    def point(self, s):
        s = np.asarray(s, dtype=float)
        th = self.th0 + (self.th1 - self.th0) * s
        return self.center + self.radius * np.exp(1j * th)

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        th = self.th0 + (self.th1 - self.th0) * s
        return 1j * (self.th1 - self.th0) * self.radius * np.exp(1j * th)

    def reversed(self):
        return ArcSegment(self.center, self.radius, self.th1, self.th0, self.side)

    @property
    def endpoints(self):
        return (
            self.center + self.radius * np.exp(1j * self.th0),
            self.center + self.radius * np.exp(1j * self.th1),
        )


@dataclass
class Contour:
    """A piecewise-smooth oriented path; closed loops are clockwise here."""

    segments: list
    closed: bool
    clearance: float = 0.0
    singular_points: tuple = ()
    component_breaks: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for i in range(1, len(self.segments)):
            if i in self.component_breaks:
                continue
            prev_end = self.segments[i - 1].endpoints[1]
            cur_start = self.segments[i].endpoints[0]
            if abs(prev_end - cur_start) > 1e-12 * max(1.0, abs(prev_end)):
                raise GeometryError(f"segment {i} does not chain to segment {i - 1}")
        if self.closed and self.segments:
            first = self.segments[0].endpoints[0]
            last = self.segments[-1].endpoints[1]
            if abs(last - first) > 1e-12 * max(1.0, abs(first)):
                raise GeometryError("closed contour does not return to its start")

    def points(self, per_segment: int = 64):
        s = np.linspace(0.0, 1.0, per_segment)
        return np.concatenate([seg.point(s) for seg in self.segments])

    def min_distance(self, pts) -> float:
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        samples = self.points(128)
        return float(min(np.min(np.abs(samples - q)) for q in pts))


@dataclass(frozen=True)
class QuadResult:
    value: complex
    est_error: float
    n_evals: int


def _smoothstep(s):
    return s * s * (3.0 - 2.0 * s)


def _smoothstep_deriv(s):
    return 6.0 * s * (1.0 - s)


def integrate(contour: Contour, integrand, quad_abs: float = 1e-10,
              max_panels: int = 4000) -> QuadResult:
    """Adaptive panel quadrature of ``integrand`` along the contour.

    The integrand must accept a complex ndarray.  Panels nearest the declared
    singular points are refined first; the cubic endpoint map makes
    inverse-sqrt endpoint behavior integrable at spectral-ish rates.
    """
    n_evals = 0
    heap = []
    counter = 0

    def panel_eval(seg_idx, u0, u1):
        nonlocal n_evals, counter
        seg = contour.segments[seg_idx]
        half = 0.5 * (u1 - u0)
        u = u0 + half * (_XK + 1.0)
        s = _smoothstep(u)
        z = seg.point(s)
        dz = seg.deriv(s) * _smoothstep_deriv(u)
        vals = np.asarray(integrand(z), dtype=complex) * dz
        n_evals += vals.size
        k = half * np.sum(vals * _WK)
        g = half * np.sum(vals[_GAUSS_IDX] * _WG)
        err = abs(k - g)
        # resolvable scale guard: tiny panels cannot improve further
        entry = (-err, counter, seg_idx, u0, u1, k)
        counter += 1
        return entry

    total = 0.0 + 0.0j
    for i in range(len(contour.segments)):
        # pre-split panels toward declared singular points
        cuts = {0.0, 0.25, 0.5, 0.75, 1.0}
        seg = contour.segments[i]
        if contour.singular_points:
            probe = np.linspace(0.0, 1.0, 33)
            zs = seg.point(_smoothstep(probe))
            for q in contour.singular_points:
                j = int(np.argmin(np.abs(zs - q)))
                cuts.add(float(probe[j]))
        knots = sorted(cuts)
        for u0, u1 in zip(knots[:-1], knots[1:]):
            heapq.heappush(heap, panel_eval(i, u0, u1))

    for _ in range(max_panels):
        est = sum(-e[0] for e in heap)
        if est <= quad_abs:
            break
        neg_err, _, si, u0, u1, _k = heapq.heappop(heap)
        if u1 - u0 < 1e-14:
            raise ConvergenceError(
                f"quadrature stalled on segment {si} at [{u0}, {u1}], "
                f"panel error {-neg_err:.3e}"
            )
        um = 0.5 * (u0 + u1)
        heapq.heappush(heap, panel_eval(si, u0, um))
        heapq.heappush(heap, panel_eval(si, um, u1))
    else:
        worst = max(heap)
        raise ConvergenceError(
            f"quadrature error target {quad_abs:.1e} not met; worst panel on "
            f"segment {worst[2]} in [{worst[3]:.6f}, {worst[4]:.6f}] "
            f"with error {-worst[0]:.3e}"
        )

    total = sum(e[5] for e in heap)
    est = sum(-e[0] for e in heap)
    return QuadResult(value=complex(total), est_error=float(est), n_evals=n_evals)


def winding_number(contour: Contour, z0: complex, quad_abs: float = 1e-8) -> float:
    res = integrate(contour, lambda z: 1.0 / (z - z0), quad_abs=quad_abs)
    return float(np.real(res.value / (2j * math.pi)))


# ---------------------------------------------------------------------------
# loop builders
# ---------------------------------------------------------------------------

def _stadium_ccw(c0: complex, u: complex, s_min: float, s_max: float, d: float):
    """Counterclockwise stadium around the axis segment, wall offset d."""
    n = 1j * u
    p00 = c0 + s_min * u - d * n
    p10 = c0 + s_max * u - d * n
    p11 = c0 + s_max * u + d * n
    p01 = c0 + s_min * u + d * n
    ang = math.atan2(u.imag, u.real)
    right_cap = ArcSegment(c0 + s_max * u, d, ang - 0.5 * math.pi, ang + 0.5 * math.pi)
    left_cap = ArcSegment(c0 + s_min * u, d, ang + 0.5 * math.pi, ang + 1.5 * math.pi)
    return [LineSegment(p00, p10), right_cap, LineSegment(p11, p01), left_cap]


def _lobe_ccw(pts, tip, d):
    """Counterclockwise pentagon lobe around pts, pinched at tip.

    The lobe is an inflated bounding box whose bottom edges bend down to the
    pinch tip.  ``pts`` must lie strictly on one side of the horizontal line
    through tip; the lobe is built in that half plane.
    """
    up = float(np.sign(np.mean(pts.imag - tip.imag))) or 1.0
    x0, x1 = float(pts.real.min()) - d, float(pts.real.max()) + d
    y_far = float(up * np.max(up * pts.imag)) + up * d
    y_near_raw = float(up * np.min(up * pts.imag)) - up * d
    y_near = up * max(up * y_near_raw, 0.0)
    x0 = min(x0, tip.real - d)
    x1 = max(x1, tip.real + d)
    corners = [
        tip,
        complex(x1, y_near),
        complex(x1, y_far),
        complex(x0, y_far),
        complex(x0, y_near),
        tip,
    ]
    if up < 0:
        corners = [tip] + corners[1:-1][::-1] + [tip]
    return [LineSegment(a, b) for a, b in zip(corners[:-1], corners[1:])]


def build_loop(enclosed_points, through_point=None, clearance: float = 0.05,
               avoid=()) -> Contour:
    """Closed clockwise loop enclosing the given points at the given clearance.

    With ``through_point`` the loop pinches to that point (a corner): it is
    built as one lobe per half plane relative to the tip, chained through the
    tip, which is required when the integrand cannot be deformed past that
    point.  The clearance is halved automatically (down to a floor of 1e-4)
    when the walls would otherwise run over ``avoid`` points or the enclosed
    points themselves; below the floor a GeometryError is raised.
    """
    pts = np.atleast_1d(np.asarray(enclosed_points, dtype=complex))
    if pts.size == 0:
        raise GeometryError("need at least one enclosed point")
    avoid = np.atleast_1d(np.asarray(avoid, dtype=complex)) if len(
        np.atleast_1d(avoid)
    ) else np.empty(0, dtype=complex)

    cl = float(clearance)
    floor = 1e-4
    while cl >= floor:
        if through_point is None:
            c0 = pts.mean()
            if pts.size > 1:
                dists = np.abs(pts[:, None] - pts[None, :])
                i, j = np.unravel_index(np.argmax(dists), dists.shape)
                axis = pts[j] - pts[i]
                u = axis / abs(axis) if abs(axis) > 0 else 1.0 + 0.0j
            else:
                u = 1.0 + 0.0j
            s_proj = np.real((pts - c0) / u)
            h_proj = np.real((pts - c0) / (1j * u))
            d = float(np.max(np.abs(h_proj))) + cl
            lo = float(s_proj.min()) - cl
            hi = float(s_proj.max()) + cl
            segs_ccw = _stadium_ccw(c0, u, lo, hi, d)
            singular = tuple(pts.tolist())
        else:
            tip = complex(through_point)
            upper = pts[pts.imag > tip.imag]
            lower = pts[pts.imag <= tip.imag]
            segs_ccw = []
            for cloud in (upper, lower):
                if cloud.size:
                    segs_ccw.extend(_lobe_ccw(cloud, tip, cl))
            if not segs_ccw:
                raise GeometryError("pinched loop needs at least one point")
            singular = tuple(pts.tolist()) + (tip,)

        segs_cw = [seg.reversed() for seg in segs_ccw[::-1]]
        loop = Contour(segments=segs_cw, closed=True, clearance=cl,
                       singular_points=singular)
        ok = loop.min_distance(pts) >= 0.7 * cl
        if ok and avoid.size:
            ok = loop.min_distance(avoid) >= 0.7 * cl
        if ok:
            return loop
        cl *= 0.5
    raise GeometryError(
        "cannot build loop: clearance floor reached while keeping walls clear"
    )


def build_reduced_loop(alpha2: complex, mu: float, clearance: float = 0.05) -> Contour:
    """Clockwise loop around the bent slit [-mu/2, alpha2] and its mirror."""
    if alpha2.imag <= 0:
        raise GeometryError("alpha2 must lie in the open upper half plane")
    pts = [complex(alpha2), complex(-0.5 * mu), complex(alpha2.conjugate())]
    return build_loop(pts, through_point=None, clearance=clearance,
                      avoid=(complex(0.5 * mu),))


def build_deformed_Cd(bp, p) -> Contour:
    """Open deformed contour: real pieces taken as upper-side limits, plus the
    conjugate pieces with opposite orientation.

    Components: mu/2 -> a0 -> alpha0, alpha2 -> a2 -> a4 -> alpha4, then the
    mirrored images traversed in the opposite direction.
    """
    half = 0.5 * p.mu
    a0 = bp.alpha0.real
    a2, a4 = bp.alpha2.real, bp.alpha4.real
    upper = [
        LineSegment(half + 0j, a0 + 0j, side="upper"),
        LineSegment(a0 + 0j, bp.alpha0),
        LineSegment(bp.alpha2, a2 + 0j),
        LineSegment(a2 + 0j, a4 + 0j, side="upper"),
        LineSegment(a4 + 0j, bp.alpha4),
    ]
    lower = [
        LineSegment(bp.alpha4.conjugate(), a4 + 0j),
        LineSegment(a4 + 0j, a2 + 0j, side="lower"),
        LineSegment(a2 + 0j, bp.alpha2.conjugate()),
        LineSegment(bp.alpha0.conjugate(), a0 + 0j),
        LineSegment(a0 + 0j, half + 0j, side="lower"),
    ]
    return Contour(
        segments=upper + lower,
        closed=False,
        clearance=0.0,
        singular_points=(half + 0j,) + tuple(bp.roots),
        component_breaks=frozenset({2, 5, 8}),
    )
