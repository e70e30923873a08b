"""Branch-cut-aware scattering phase f, its derivatives, and the radicals.

The phase is defined in the upper half plane by an explicit combination of
logarithms with bent (non-principal) cuts and extended to the lower half
plane by reflection, f(conj z) = conj f(z).  Within the closed upper half
plane the only interior cut is the vertical segment [0, T]; every real z is
a two-sided boundary point, so real arguments are treated as limits from
above by the ``*_upper`` evaluators and rejected by the checked ``eval_*``
entry points.

The six-point radical R is assembled from two-point radicals: straight-slit
factors for the upper and lower arc pairs and a "V" factor whose cut joins a
conjugate pair through a real vertex (mu/2 for the full radical, -mu/2 for
the reduced one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BranchPoints, DomainError, OnCutError, Params

_TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# logarithm branches
# ---------------------------------------------------------------------------

def _from_above(z):
    """Nudge real arguments into the open upper half plane (limit from above)."""
    z = np.asarray(z, dtype=complex)
    return np.where(z.imag == 0.0, z + 1e-300j, z)


def _log3_upper(z, T):
    """log(z - T) cut along T -> 0 -> +inf, for Im z >= 0 (reals from above).

    Equals the principal log except in the region left of the vertical cut
    segment and below its top, where the branch is shifted by +2*pi*i.
    """
    z = np.asarray(z, dtype=complex)
    base = np.log(z - T)
    patch = (z.real < 0.0) & (z.imag < T.imag)
    return base + _TWO_PI_I * patch


def f_upper(z, p: Params, sheet: bool = False):
    """Phase f(z) for Im z >= 0; real z gives the limit from above.

    With ``sheet=True`` the last logarithm stays on the principal branch:
    the continuation through the vertical cut used on the arc system, where
    the cut is treated as transparent.
    """
    z = _from_above(z)
    mu, T = p.mu, p.T
    half = 0.5 * mu
    t1 = (half - z) * (0.5j * math.pi + np.log(half - z))
    t2 = 0.5 * (z + T) * np.log(z + T)
    log3 = np.log(z - T) if sheet else _log3_upper(z, T)
    t3 = 0.5 * (z - T) * log3
    const = -T * np.arctanh(T / half) + half * math.log(2.0)
    return t1 + t2 + t3 + const - p.x * z - 2.0 * p.t * z * z


def f_prime_upper(z, p: Params, sheet: bool = False):
    """f'(z) for Im z >= 0; real z gives the limit from above."""
    z = _from_above(z)
    mu, T = p.mu, p.T
    half = 0.5 * mu
    log3 = np.log(z - T) if sheet else _log3_upper(z, T)
    return (
        -0.5j * math.pi
        - np.log(half - z)
        + 0.5 * (np.log(z + T) + log3)
        - p.x
        - 4.0 * p.t * z
    )


def f_second_upper(z, p: Params):
    """f''(z) for Im z >= 0."""
    z = _from_above(z)
    half = 0.5 * p.mu
    return 1.0 / (half - z) + z / (z * z - p.T * p.T) - 4.0 * p.t


def _schwarz(fn, z, p: Params, **kw):
    z = np.asarray(z, dtype=complex)
    upper = fn(np.where(z.imag >= 0.0, z, np.conj(z)), p, **kw)
    return np.where(z.imag >= 0.0, upper, np.conj(upper))


def f_any(z, p: Params):
    """f(z) on either half plane (reflection below); reals from above."""
    return _schwarz(f_upper, z, p)


def f_prime_any(z, p: Params):
    """f'(z) on either half plane (reflection below); reals from above."""
    return _schwarz(f_prime_upper, z, p)


def f_sheet(z, p: Params):
    """Arc-system branch of f: the vertical cut is transparent."""
    return _schwarz(f_upper, z, p, sheet=True)


def f_prime_sheet(z, p: Params):
    """Arc-system branch of f': the vertical cut is transparent."""
    return _schwarz(f_prime_upper, z, p, sheet=True)


def cut_distance(z, p: Params):
    """Distance from z to the cut set: the real axis and [0, T], [0, -T]."""
    z = np.asarray(z, dtype=complex)
    d_real = np.abs(z.imag)
    # distance to the vertical segments [0, T] and [0, -T] (mirror symmetric)
    y = np.clip(np.abs(z.imag), 0.0, p.absT)
    d_seg = np.hypot(z.real, np.abs(z.imag) - y)
    return np.minimum(d_real, d_seg)


def _check_off_cuts(z, p: Params, snap: float = 1e-12):
    z = np.asarray(z, dtype=complex)
    scale = np.maximum(1.0, np.abs(z))
    if np.any(cut_distance(z, p) <= snap * scale):
        raise OnCutError("z lies on a branch cut of f; use one-sided limits")
    for pt in (0.5 * p.mu, p.T, -p.T):
        if np.any(np.abs(z - pt) <= snap * scale):
            raise OnCutError("z coincides with a log branch point of f")


def eval_f(z, p: Params):
    """Checked f(z): rejects points on the cuts or at the log branch points."""
    _check_off_cuts(z, p)
    return f_any(z, p)


def eval_f_prime(z, p: Params):
    """Checked f'(z): same cut restrictions as eval_f."""
    _check_off_cuts(z, p)
    return f_prime_any(z, p)


def f_at_T_limit(p: Params) -> complex:
    """lim_{z->T} f(z); the (z - T) log term vanishes in the limit."""
    mu, T = p.mu, p.T
    half = 0.5 * mu
    t1 = (half - T) * (0.5j * math.pi + np.log(half - T))
    t2 = T * np.log(2.0 * T)
    const = -T * np.arctanh(T / half) + half * math.log(2.0)
    return complex(t1 + t2 + const - p.x * T - 2.0 * p.t * T * T)


def im_f_at_T(p: Params) -> float:
    return f_at_T_limit(p).imag


# ---------------------------------------------------------------------------
# Taylor constants of f' just above the origin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaylorConstants:
    C1: float
    C2: float
    C3: float


def taylor_constants(p: Params) -> TaylorConstants:
    """Closed-form expansion constants of f' at 0 (limit from above)."""
    return TaylorConstants(
        C1=math.log(2.0 * p.absT / p.mu) - p.x,
        C2=0.5 * math.pi,
        C3=2.0 / p.mu,
    )


def c4_estimate(p: Params, delta: float = 1e-5) -> float:
    """Quadratic expansion coefficient of f', by Richardson differences.

    f''(i y) + 4t = C3 + 2*C4*(i y) + O(y^2); two step sizes cancel the
    leading error term.
    """
    c3 = 2.0 / p.mu

    def slope(h):
        val = f_second_upper(1j * h, p) + 4.0 * p.t - c3
        return (val / (2j * h)).real

    s1, s2 = slope(delta), slope(0.5 * delta)
    return float(2.0 * s2 - s1)


# ---------------------------------------------------------------------------
# two-point radicals
# ---------------------------------------------------------------------------

def slit_sqrt(z, a, b):
    """sqrt((z-a)(z-b)) cut along the straight segment [a, b], ~ z at infinity."""
    z = np.asarray(z, dtype=complex)
    m = 0.5 * (a + b)
    r = 0.5 * (a - b)
    w = z - m
    return w * np.sqrt(1.0 - (r / w) ** 2)


def slit_sqrt_onesided(xi, a, b, side: int):
    """One-sided value of slit_sqrt at points xi on the open segment (a, b).

    side=+1 is the limit from the left of the orientation a -> b.  The local
    side of the sqrt branch flips with position along the slit through w^3,
    so the sign is computed pointwise; the midpoint is handled by its limit.
    """
    xi = np.asarray(xi, dtype=complex)
    m = 0.5 * (a + b)
    r = 0.5 * (a - b)
    n_hat = 1j * (b - a) / abs(b - a)
    w = xi - m
    small = np.abs(w) < 1e-13 * abs(r)
    w_safe = np.where(small, r, w)  # dummy to keep the division finite
    arg = 1.0 - (r / w_safe) ** 2
    sgn = side * np.sign((r * r * n_hat / w_safe**3).imag)
    val = w_safe * (1j * sgn) * np.sqrt(np.abs(arg.real))
    mid = -side * 1j * r * np.ones_like(val)
    return np.where(small, mid, val)


def _in_triangle(z, v0, v1, v2):
    """Vectorized strict point-in-triangle test (any orientation)."""
    z = np.asarray(z, dtype=complex)

    def cross(o, a, pts):
        return (a.real - o.real) * (pts.imag - o.imag) - (a.imag - o.imag) * (
            pts.real - o.real
        )

    d0 = cross(v0, v1, z)
    d1 = cross(v1, v2, z)
    d2 = cross(v2, v0, z)
    neg = (d0 < 0) & (d1 < 0) & (d2 < 0)
    pos = (d0 > 0) & (d1 > 0) & (d2 > 0)
    return neg | pos


def vcut_sqrt(z, a_up, vertex):
    """sqrt((z-a)(z-conj a)) cut along a -> vertex -> conj(a), ~ z at infinity.

    Implemented as the chord radical (cut [conj a, a]) with the sign flipped
    inside the triangle spanned by the conjugate pair and the real vertex.
    """
    z = np.asarray(z, dtype=complex)
    a_dn = a_up.conjugate()
    base = slit_sqrt(z, a_up, a_dn)
    if abs(a_up.imag) < 1e-300:
        return base
    flip = _in_triangle(z, a_dn, complex(vertex), a_up)
    return np.where(flip, -base, base)


def vcut_sqrt_on_arm(xi, a_up, vertex, side: int):
    """One-sided vcut_sqrt on an open arm of the V cut.

    The arm through xi is the segment vertex -> a_up (upper) or
    vertex -> conj(a_up) (lower), inferred from sign(Im xi); side=+1 is the
    limit from the left of that orientation.
    """
    xi = np.asarray(xi, dtype=complex)
    a_dn = a_up.conjugate()
    base = slit_sqrt(xi, a_up, a_dn)
    end = np.where(xi.imag >= 0, a_up, a_dn)
    u = end - complex(vertex)
    n_hat = 1j * u / np.abs(u)
    eps = 1e-9 * np.maximum(np.abs(u), 1e-30)
    flip = _in_triangle(xi + side * eps * n_hat, a_dn, complex(vertex), a_up)
    return np.where(flip, -base, base)


def vpair_onesided_ordered(xi, a_up, vertex, side: int):
    """One-sided vcut_sqrt on one arm, for nodes ordered along the arm.

    Robust even when the V degenerates (vertex under the chord): the square
    (xi - a)(xi - conj a) is single valued, its argument is phase-tracked
    along the ordered nodes, and the global sign is anchored by an off-cut
    probe of vcut_sqrt at the best-conditioned node.  side=+1 means the limit
    from the left of the orientation in which the nodes are listed.
    """
    xi = np.asarray(xi, dtype=complex)
    a_dn = a_up.conjugate()
    q = (xi - a_up) * (xi - a_dn)
    phase = np.unwrap(np.angle(q))
    val = np.sqrt(np.abs(q)) * np.exp(0.5j * phase)
    # anchor at the node farthest from the roots and the vertex
    dist = np.minimum(
        np.minimum(np.abs(xi - a_up), np.abs(xi - a_dn)),
        np.abs(xi - complex(vertex)),
    )
    k = int(np.argmax(dist))
    step = xi[-1] - xi[0]
    n_hat = 1j * step / abs(step)
    eps = 1e-7 * max(abs(step), 1e-30)
    ref = vcut_sqrt(xi[k] + side * eps * n_hat, a_up, vertex)
    if abs(val[k] - ref) > abs(val[k] + ref):
        val = -val
    return val


def lambda1(xi, bp: BranchPoints):
    return np.asarray(xi, dtype=complex) - bp.alpha2.real


def lambda2(xi, bp: BranchPoints):
    xi = np.asarray(xi, dtype=complex)
    return (xi - bp.alpha0.real) * (xi - bp.alpha4.real)


def lambda3(xi, bp: BranchPoints):
    xi = np.asarray(xi, dtype=complex)
    return (xi - bp.alpha0.real) * (xi - bp.alpha2.real) * (xi - bp.alpha4.real)


# ---------------------------------------------------------------------------
# the radical R and its reduced variant
# ---------------------------------------------------------------------------

def eval_R(z, bp: BranchPoints, p: Params):
    """Radical with cuts along the arcs, normalized to -z^(genus+1) at +infinity.

    genus 2: -vcut(alpha0 pair through mu/2) * slit[alpha2, alpha4]
             * slit[conj alpha4, conj alpha2]  ~ -z^3.
    genus 0: -vcut(alpha0 pair through mu/2)  ~ -z.
    """
    z = np.asarray(z, dtype=complex)
    v0 = vcut_sqrt(z, bp.alpha0, 0.5 * p.mu)
    if bp.genus == 0:
        return -v0
    s_up = slit_sqrt(z, bp.alpha2, bp.alpha4)
    s_dn = slit_sqrt(z, bp.alpha2.conjugate(), bp.alpha4.conjugate())
    return -v0 * s_up * s_dn


def R_onesided_slit(xi, bp: BranchPoints, p: Params, lower: bool, side: int):
    """One-sided R on the open slit [alpha2, alpha4] (or its mirror).

    Orientation is alpha2 -> alpha4 on the upper slit and
    conj(alpha4) -> conj(alpha2) on the lower one; side=+1 means the limit
    from the left of that orientation.
    """
    xi = np.asarray(xi, dtype=complex)
    v0 = vcut_sqrt(xi, bp.alpha0, 0.5 * p.mu)
    if lower:
        s_reg = slit_sqrt(xi, bp.alpha2, bp.alpha4)
        s_cut = slit_sqrt_onesided(
            xi, bp.alpha4.conjugate(), bp.alpha2.conjugate(), side
        )
    else:
        s_reg = slit_sqrt(xi, bp.alpha2.conjugate(), bp.alpha4.conjugate())
        s_cut = slit_sqrt_onesided(xi, bp.alpha2, bp.alpha4, side)
    return -v0 * s_cut * s_reg


def R_onesided_varm(xi, bp: BranchPoints, p: Params, side: int):
    """One-sided R on an open arm of the V cut through mu/2.

    Arm orientation runs away from the vertex (mu/2 -> alpha0 above,
    mu/2 -> conj alpha0 below); side=+1 is the limit from the left.
    """
    xi = np.asarray(xi, dtype=complex)
    v0 = vcut_sqrt_on_arm(xi, bp.alpha0, 0.5 * p.mu, side)
    if bp.genus == 0:
        return -v0
    s_up = slit_sqrt(xi, bp.alpha2, bp.alpha4)
    s_dn = slit_sqrt(xi, bp.alpha2.conjugate(), bp.alpha4.conjugate())
    return -v0 * s_up * s_dn


def eval_R_plus(xi, bp: BranchPoints, p: Params, arc: str):
    """Limit of R from the left of the arc orientation (see R_onesided_*)."""
    if arc == "slit_up":
        return R_onesided_slit(xi, bp, p, lower=False, side=+1)
    if arc == "slit_dn":
        return R_onesided_slit(xi, bp, p, lower=True, side=+1)
    if arc == "varm":
        return R_onesided_varm(xi, bp, p, side=+1)
    raise DomainError(f"unknown arc tag {arc!r}")


def eval_R_minus(xi, bp: BranchPoints, p: Params, arc: str):
    if arc == "slit_up":
        return R_onesided_slit(xi, bp, p, lower=False, side=-1)
    if arc == "slit_dn":
        return R_onesided_slit(xi, bp, p, lower=True, side=-1)
    if arc == "varm":
        return R_onesided_varm(xi, bp, p, side=-1)
    raise DomainError(f"unknown arc tag {arc!r}")


def eval_R_reduced(z, alpha2: complex, p: Params):
    """Two-point radical with cut alpha2 -> -mu/2 -> conj(alpha2), ~ +z."""
    return vcut_sqrt(z, alpha2, -0.5 * p.mu)


def R_reduced_onesided(xi, alpha2: complex, p: Params, side: int):
    """One-sided reduced radical on an open arm of its V cut."""
    return vcut_sqrt_on_arm(xi, alpha2, -0.5 * p.mu, side)
