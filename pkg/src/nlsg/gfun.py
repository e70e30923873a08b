"""Evaluation of the phase objects built on the radical: the constants
(W, Omega), the outer function g, h = 2g - f, h', h'', Im h, and the
long-time reduced variants.

Everything is computed from one-sided quadratures collapsed onto the arc
system: data d(xi) on each oriented arc leg, transformed by Cauchy kernels.
Two representations are carried side by side:

* value data f/R_+ (plus the constants W, Omega on their arcs), which gives
  the outer function itself: g = R * phi, h = 2g - f;
* derivative data f'/R_+, which gives h' = R * Psi - f' and the moment /
  period conditions that determine the branch points.

Both agree at solved branch points; the derivative route never needs the
constants, which keeps the nonlinear systems small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import scattering as sc
from .core import BranchPoints, ConvergenceError, DomainError, Params, Tolerances, DEFAULT_TOL

_2PI_I = 2j * math.pi


@dataclass(frozen=True)
class ArcConstants:
    """Real constants attached to the arcs, with the solve diagnostic."""

    W: float
    Omega: float
    im_residual: float


def r0_anchor(p: Params) -> float:
    """Real anchor point, right of every singularity, where Im g = 0."""
    return 0.5 * p.mu + 2.0


# ---------------------------------------------------------------------------
# quadrature rules on legs
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _panel(s0: float, s1: float, mode: str, n: int):
    """Nodes on [s0, s1] in ascending order.

    Returns (s, omf, w) where omf = 1 - s is carried exactly so that
    displacements from the s = 1 end stay accurate long past the rounding
    of s itself (graded rules push nodes to within 1e-16 of an endpoint).
    """
    u, wu = _gauss01(n)
    length = s1 - s0
    if mode == "plain":
        s = s0 + length * u
        return s, 1.0 - s, length * wu
    if mode == "sqrt_left":
        s = s0 + length * u * u
        return s, 1.0 - s, 2.0 * length * u * wu
    if mode == "sqrt_right":
        omf = ((1.0 - s1) + length * u * u)[::-1]
        return 1.0 - omf, omf, (2.0 * length * u * wu)[::-1]
    raise DomainError(f"unknown panel mode {mode!r}")


def _graded_left(s0, s1, depth, ratio, inner_mode, n, out):
    """Panels of geometrically shrinking width toward s0."""
    edges = [s1]
    w = s1 - s0
    for _ in range(depth):
        w *= ratio
        edges.append(s0 + w)
    edges.append(s0)
    edges = edges[::-1]  # ascending
    out.append(_panel(edges[0], edges[1], inner_mode, n))
    for a, b in zip(edges[1:-1], edges[2:]):
        out.append(_panel(a, b, "plain", n))


def _graded_right(s0, s1, depth, ratio, inner_mode, n, out):
    """Mirror of _graded_left; panels near s1 are generated in the 1 - s
    frame so the cascade stays exact below rounding of s."""
    omf0, omf1 = 1.0 - s1, 1.0 - s0
    edges = [omf1]
    w = s1 - s0
    for _ in range(depth):
        w *= ratio
        edges.append(omf0 + w)
    edges.append(omf0)
    edges = edges[::-1]  # ascending in omf
    # innermost (closest to s1) first in omf; emit panels in ascending s
    panels = []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        mode = inner_mode if k == 0 else "plain"
        u, wu = _gauss01(n)
        length = b - a
        if mode == "plain":
            omf = (a + length * u)[::-1]
            panels.append((1.0 - omf, omf, (length * wu)[::-1]))
        else:  # sqrt in the omf frame == sqrt_right in s
            omf = (a + length * u * u)[::-1]
            panels.append((1.0 - omf, omf, (2.0 * length * u * wu)[::-1]))
    out.extend(panels[::-1])


def _interval_rule(s0, s1, end_a, end_b, n, depth, scale_a=None, scale_b=None):
    """Composite rule on [s0, s1] with optional end treatments.

    end flags: None (two plain panels), "sqrt" (graded + u^2 inner panel),
    "log" (graded + plain inner panel).  ``scale_*`` forces the grading to
    resolve structure at that absolute parameter distance from the end.
    """
    out = []
    mid = 0.5 * (s0 + s1)
    ratio = 0.25

    def depth_for(scale):
        if scale is None:
            return depth
        need = math.log(max((s1 - s0) * 0.5 / max(scale, 1e-15), 4.0)) / math.log(1.0 / ratio)
        return max(depth, int(need) + 4)

    if end_a == "sqrt":
        _graded_left(s0, mid, depth_for(scale_a), ratio, "sqrt_left", n, out)
    elif end_a == "log":
        _graded_left(s0, mid, max(depth_for(scale_a), 10), ratio, "plain", n, out)
    elif scale_a is not None:
        _graded_left(s0, mid, depth_for(scale_a), ratio, "plain", n, out)
    else:
        out.append(_panel(s0, mid, "plain", n))
    if end_b == "sqrt":
        _graded_right(mid, s1, depth_for(scale_b), ratio, "sqrt_right", n, out)
    elif end_b == "log":
        _graded_right(mid, s1, max(depth_for(scale_b), 10), ratio, "plain", n, out)
    elif scale_b is not None:
        _graded_right(mid, s1, depth_for(scale_b), ratio, "plain", n, out)
    else:
        out.append(_panel(mid, s1, "plain", n))
    s = np.concatenate([e[0] for e in out])
    omf = np.concatenate([e[1] for e in out])
    w = np.concatenate([e[2] for e in out])
    return s, omf, w


@lru_cache(maxsize=4096)
def _rule_cached(end_a, end_b, splits, n, depth, scale_a, scale_b, extra_splits):
    knots = sorted(set((0.0, 1.0) + splits + extra_splits))
    ss, os_, ws = [], [], []
    for k, (u0, u1) in enumerate(zip(knots[:-1], knots[1:])):
        ea = end_a if k == 0 else None
        eb = end_b if k == len(knots) - 2 else None
        sa = scale_a if k == 0 else None
        sb = scale_b if k == len(knots) - 2 else None
        s, omf, w = _interval_rule(u0, u1, ea, eb, n, depth, sa, sb)
        ss.append(s)
        os_.append(omf)
        ws.append(w)
    s = np.concatenate(ss)
    omf = np.concatenate(os_)
    w = np.concatenate(ws)
    for arr in (s, omf, w):
        arr.setflags(write=False)
    return s, omf, w


@dataclass(frozen=True)
class Leg:
    """Oriented straight piece of an arc with its radical side rule."""

    a: complex
    b: complex
    kind: str       # data tag: "f" | "fW" | "omega"
    rkind: str      # "varm" | "slit_up" | "slit_dn" | "plain" | "rarm"
    side: int       # +1 = limit from the left of the leg orientation
    end_a: str | None
    end_b: str | None
    splits: tuple = ()

    @property
    def length(self) -> float:
        return abs(self.b - self.a)

    def points(self, s):
        return self.a + (self.b - self.a) * np.asarray(s)

    def rule(self, n=16, depth=8, scale_a=None, scale_b=None, extra_splits=()):
        return _rule_cached(self.end_a, self.end_b, self.splits, n, depth,
                            scale_a, scale_b, tuple(extra_splits))


def _real_axis_split(a: complex, b: complex) -> tuple:
    """Parameter where the segment crosses Re z = 0, if it does."""
    if a.real == b.real or a.real * b.real >= 0.0:
        return ()
    s = a.real / (a.real - b.real)
    return (float(s),) if 1e-12 < s < 1 - 1e-12 else ()


def _xi_stable(leg, s, omf):
    """Node positions plus exact displacements from both leg endpoints."""
    d_a = (leg.b - leg.a) * s
    d_b = (leg.a - leg.b) * omf
    xi = np.where(s <= 0.5, leg.a + d_a, leg.b + d_b)
    return xi, d_a, d_b


def _stable_R_on_leg(leg, s, omf, roots, ref_value_at, norm_sign=-1.0):
    """One-sided radical on ordered leg nodes, built from per-root
    displacement factors.

    Magnitudes are accumulated in logs (the collapsed outer points push
    factors far below underflow) and each factor's phase is unwrapped along
    the leg; the overall branch is anchored to ``ref_value_at`` evaluated at
    the best-conditioned node.  Displacements are exact even where the node
    position itself has rounded onto an endpoint.
    """
    xi, d_a, d_b = _xi_stable(leg, s, omf)
    log_mag = np.zeros(s.shape)
    phase = np.zeros(s.shape)
    min_dist = np.full(s.shape, np.inf)
    for root in roots:
        da0 = leg.a - root
        db0 = leg.b - root
        fac = (da0 + d_a) if abs(da0) <= abs(db0) else (db0 + d_b)
        mag = np.abs(fac)
        mag_safe = np.where(mag > 0.0, mag, 1.0)
        log_mag += np.where(mag > 0.0, np.log(mag_safe), -745.0)
        phase += np.unwrap(np.angle(fac))
        min_dist = np.minimum(min_dist, mag)
    cand = np.exp(0.5 * log_mag + 0.5j * phase)
    k = int(np.argmax(min_dist))
    ref = complex(ref_value_at(complex(xi[k])))
    if not np.isfinite(ref) or ref == 0 or not np.isfinite(cand[k]) or cand[k] == 0:
        raise ConvergenceError("cannot anchor the radical branch on a leg")
    return xi, cand * (ref / cand[k])


# ---------------------------------------------------------------------------
# the evaluator
# ---------------------------------------------------------------------------

class GFunction:
    """Phase-object evaluator bound to one (branch points, parameters) pair."""

    def __init__(self, bp: BranchPoints, p: Params, tol: Tolerances = DEFAULT_TOL,
                 order: int = 16, depth: int = 9, slit_shift: bool = True):
        self.bp = bp
        self.p = p
        self.tol = tol
        self.order = order
        self.depth = depth
        self.slit_shift = slit_shift
        self.legs = self._build_legs()
        self._tables = {}
        self._ac = None

    # -- geometry ---------------------------------------------------------

    def _build_legs(self):
        bp, p = self.bp, self.p
        half = 0.5 * p.mu
        a0, a0c = bp.alpha0, bp.alpha0.conjugate()
        # side is relative to each leg's own orientation (+1 = left limit)
        legs = [
            Leg(a0c, half + 0j, "f", "varm", +1, "sqrt", "log"),
            Leg(half + 0j, a0, "f", "varm", +1, "log", "sqrt"),
        ]
        if bp.genus == 2:
            a2, a4 = bp.alpha2, bp.alpha4
            a2c, a4c = a2.conjugate(), a4.conjugate()
            legs += [
                Leg(a2, a4, "fW", "slit_up", +1, "sqrt", "sqrt",
                    _real_axis_split(a2, a4)),
                Leg(a4c, a2c, "fW", "slit_dn", +1, "sqrt", "sqrt",
                    _real_axis_split(a4c, a2c)),
                Leg(a0, a2, "omega", "plain", +1, "sqrt", "sqrt"),
                Leg(a2c, a0c, "omega", "plain", +1, "sqrt", "sqrt"),
            ]
        return legs

    def _R_anchor(self, leg: Leg, z: complex):
        """Legacy one-sided R at a single well-conditioned leg node; used to
        anchor the branch of the stable displacement product."""
        bp, p = self.bp, self.p
        if leg.rkind == "varm":
            zs = np.array([z * (1 - 1e-9), z, z * (1 + 1e-9)])
            v = sc.vpair_onesided_ordered(zs, bp.alpha0, 0.5 * p.mu, leg.side)[1]
            if bp.genus == 0:
                return -v
            s_up = sc.slit_sqrt(z, bp.alpha2, bp.alpha4)
            s_dn = sc.slit_sqrt(z, bp.alpha2.conjugate(), bp.alpha4.conjugate())
            return -v * s_up * s_dn
        if leg.rkind == "slit_up":
            return sc.R_onesided_slit(z, bp, p, lower=False, side=leg.side)
        if leg.rkind == "slit_dn":
            return sc.R_onesided_slit(z, bp, p, lower=True, side=leg.side)
        if leg.rkind == "plain":
            return sc.eval_R(z, bp, p)
        raise DomainError(f"unknown radical tag {leg.rkind!r}")

    def _end_scale(self, leg: Leg, endpoint: complex):
        """Grading scale at a root endpoint: distance to the nearest other
        root, where the data crosses over from 1/s to 1/sqrt(s) behavior."""
        d = min(
            (abs(endpoint - r) for r in self.bp.roots
             if abs(endpoint - r) > 1e-15 * max(1.0, abs(endpoint))),
            default=None,
        )
        if d is None:
            return None
        rel = d / leg.length
        if rel >= 0.5:
            return None
        return 2.0 ** math.floor(math.log2(max(rel, 1e-300)))

    def _table(self, leg: Leg, scale_a=None, scale_b=None, extra_splits=()):
        if leg.end_a == "sqrt":
            auto = self._end_scale(leg, leg.a)
            if auto is not None:
                scale_a = auto if scale_a is None else min(scale_a, auto)
        if leg.end_b == "sqrt":
            auto = self._end_scale(leg, leg.b)
            if auto is not None:
                scale_b = auto if scale_b is None else min(scale_b, auto)
        key = (id(leg), scale_a, scale_b, extra_splits)
        if key in self._tables:
            return self._tables[key]
        s, omf, w = leg.rule(self.order, self.depth, scale_a, scale_b, extra_splits)
        dxi = (leg.b - leg.a) * w
        xi, r_vals = _stable_R_on_leg(
            leg, s, omf, self.bp.roots,
            lambda z: self._R_anchor(leg, z),
        )
        # nodes colliding with a root in floating point carry ~zero weight
        bad = ~np.isfinite(r_vals) | (np.abs(r_vals) < 1e-280)
        inv_r = np.where(bad, 0.0, 1.0 / np.where(bad, 1.0, r_vals))
        tab = {"xi": xi, "dxi": dxi, "inv_r": inv_r}
        if leg.kind in ("f", "fW"):
            f_vals = sc.f_sheet(xi, self.p)
            fp_vals = sc.f_prime_sheet(xi, self.p)
            if self.slit_shift and leg.kind == "fW":
                # one monodromy step of the log term, mirrored below
                sgn = np.sign(xi.imag)
                t_side = np.where(xi.imag >= 0, self.p.T, -self.p.T)
                f_vals = f_vals + 1j * math.pi * sgn * (xi - t_side)
                fp_vals = fp_vals + 1j * math.pi * sgn
            tab["f"] = f_vals
            tab["fp"] = fp_vals
        self._tables[key] = tab
        return tab

    def _table_key_for(self, leg: Leg, za: complex):
        """Quantized refinement spec (scale_a, scale_b, extra_splits) for z."""
        u = (leg.b - leg.a)
        t_star = float(np.clip(((za - leg.a) / u).real, 0.0, 1.0))
        dist = abs(za - leg.points(t_star))
        rel = dist / leg.length
        if rel > 0.25:
            return (None, None, ())
        # scale floor: closer field points carry negligible weight anyway
        q = 2.0 ** math.floor(math.log2(max(rel, 1e-9)))
        if t_star < 0.05:
            return (q, None, ())
        if t_star > 0.95:
            return (None, q, ())
        tq = round(t_star * 64.0) / 64.0
        offs = []
        w = 2.0 * q
        while w < 0.2:
            offs.append(w)
            w *= 4.0
        splits = {tq}
        for o in offs:
            if 0.0 < tq - o < 1.0:
                splits.add(tq - o)
            if 0.0 < tq + o < 1.0:
                splits.add(tq + o)
        return (None, None, tuple(sorted(splits)))

    # -- constants ----------------------------------------------------------

    def _arc_integral(self, legs, weight_key, power: int = 0):
        total = 0.0 + 0.0j
        for leg in legs:
            tab = self._table(leg)
            base = tab["inv_r"] if weight_key == "one" else tab[weight_key] * tab["inv_r"]
            if power:
                base = base * tab["xi"] ** power
            total += np.sum(base * tab["dxi"])
        return total

    @property
    def legs_g0(self):
        return [l for l in self.legs if l.kind == "f"]

    @property
    def legs_gm(self):
        return [l for l in self.legs if l.kind == "fW"]

    @property
    def legs_gc(self):
        return [l for l in self.legs if l.kind == "omega"]

    def arc_constants(self) -> ArcConstants:
        """Solve the 2x2 linear system for (W, Omega)."""
        if self._ac is not None:
            return self._ac
        if self.bp.genus == 0:
            self._ac = ArcConstants(0.0, 0.0, 0.0)
            return self._ac
        mat = np.array([
            [self._arc_integral(self.legs_gm, "one", k),
             self._arc_integral(self.legs_gc, "one", k)]
            for k in (0, 1)
        ])
        rhs = np.array([
            -self._arc_integral(self.legs_g0 + self.legs_gm, "f", k)
            for k in (0, 1)
        ])
        sol = np.linalg.solve(mat, rhs)
        res = float(max(abs(sol[0].imag), abs(sol[1].imag)))
        self._ac = ArcConstants(W=float(sol[0].real), Omega=float(sol[1].real),
                                im_residual=res)
        return self._ac

    # -- Cauchy transforms --------------------------------------------------

    def _data_values(self, leg: Leg, tab, rep: str):
        ac = None
        if rep == "value":
            if leg.kind == "f":
                return tab["f"] * tab["inv_r"]
            if leg.kind == "fW":
                ac = self.arc_constants()
                return (tab["f"] + ac.W) * tab["inv_r"]
            ac = self.arc_constants()
            return ac.Omega * tab["inv_r"]
        if rep == "deriv":
            if leg.kind == "omega":
                return None
            return tab["fp"] * tab["inv_r"]
        raise DomainError(f"unknown representation {rep!r}")

    def _cauchy(self, z, rep: str, power: int = 1):
        """sum over legs of  integral  d(xi) / (xi - z)^power dxi."""
        z = np.asarray(z, dtype=complex)
        zf = np.atleast_1d(z).ravel()
        out = np.zeros(zf.shape, dtype=complex)
        for leg in self.legs:
            base_tab = self._table(leg)
            if self._data_values(leg, base_tab, rep) is None:
                continue
            groups: dict[tuple, list[int]] = {}
            for idx, za in enumerate(zf):
                groups.setdefault(self._table_key_for(leg, complex(za)), []).append(idx)
            for key, idxs in groups.items():
                tab = self._table(leg, *key[:2], key[2])
                d = self._data_values(leg, tab, rep)
                kern = 1.0 / (tab["xi"][None, :] - zf[idxs][:, None]) ** power
                out[idxs] += kern @ (d * tab["dxi"])
        return out.reshape(z.shape) if z.shape else complex(out[0])

    # value representation --------------------------------------------------

    def phi(self, z):
        """g(z) / R(z) as a Cauchy transform of the arc data."""
        return self._cauchy(z, "value", 1) / _2PI_I

    def phi_prime(self, z):
        return self._cauchy(z, "value", 2) / _2PI_I

    def phi_second(self, z):
        return 2.0 * self._cauchy(z, "value", 3) / _2PI_I

    def g(self, z):
        return sc.eval_R(z, self.bp, self.p) * self.phi(z)

    def g_prime(self, z):
        z = np.asarray(z, dtype=complex)
        r = sc.eval_R(z, self.bp, self.p)
        dlog = np.zeros(z.shape, dtype=complex)
        for root in self.bp.roots:
            dlog = dlog + 0.5 / (z - root)
        return r * (dlog * self.phi(z) + self.phi_prime(z))

    def h(self, z):
        return 2.0 * self.g(z) - sc.f_any(z, self.p)

    def eval_B(self, z):
        """2*pi*i * phi(z); at z outside the loops, (R/2pi i) * B = g."""
        return _2PI_I * self.phi(z)

    # derivative representation ----------------------------------------------

    def psi(self, z):
        """h'(z)/R(z) + f'(z)/R(z) transform: Psi = (1/pi i) C[f'/R_+]."""
        return self._cauchy(z, "deriv", 1) / (1j * math.pi)

    def h_prime(self, z):
        return sc.eval_R(z, self.bp, self.p) * self.psi(z) - sc.f_prime_any(z, self.p)

    def g_prime_psi(self, z):
        return 0.5 * sc.eval_R(z, self.bp, self.p) * self.psi(z)

    def h_second(self, z, radius: float | None = None, n: int = 32):
        """h'' by a Cauchy circle around z (spectrally accurate)."""
        za = complex(z)
        if radius is None:
            d_arc = min(
                abs(za - leg.points(np.clip(((za - leg.a) / (leg.b - leg.a)).real, 0, 1)))
                for leg in self.legs
            )
            d_cut = float(sc.cut_distance(za, self.p))
            radius = max(min(0.05, 0.5 * d_arc, 0.5 * d_cut), 1e-4)
        th = 2.0 * math.pi * np.arange(n) / n
        ring = za + radius * np.exp(1j * th)
        vals = self.h_prime(ring)
        return complex(np.mean(vals * np.exp(-1j * th)) / radius)

    # conditions --------------------------------------------------------------

    def moments(self):
        """Arc moments of f'/R_+ for powers 0..3 (0..1 in genus 0)."""
        powers = (0, 1, 2, 3) if self.bp.genus == 2 else (0, 1)
        legs = self.legs_g0 + self.legs_gm
        out = []
        for k in powers:
            total = 0.0 + 0.0j
            for leg in legs:
                tab = self._table(leg)
                total += np.sum(tab["fp"] * tab["inv_r"] * tab["xi"] ** k * tab["dxi"])
            out.append(total)
        return np.array(out)

    def w_path_value(self) -> complex:
        """h(alpha2) - h(alpha0) integrated along the connecting path.

        At solved branch points this equals the real arc constant W; its
        imaginary part and its mismatch with the linear-system W supply the
        two conditions beyond the moments.
        """
        bp = self.bp
        s, _, w = _interval_rule(0.0, 1.0, "sqrt", "sqrt", 24, 6)
        path = bp.alpha0 + (bp.alpha2 - bp.alpha0) * s
        gp = self.g_prime_psi(path)
        integral = np.sum(2.0 * gp * (bp.alpha2 - bp.alpha0) * w)
        delta_f = sc.f_sheet(bp.alpha2, self.p) - sc.f_sheet(bp.alpha0, self.p)
        return complex(integral - delta_f)

    def _slit_period_condition(self) -> float:
        """Im of the g' period around the upper slit [alpha2, alpha4]."""
        bp = self.bp
        a2, a4 = bp.alpha2, bp.alpha4
        others = [bp.alpha0, bp.alpha2.conjugate(), bp.alpha4.conjugate(),
                  bp.alpha0.conjugate(), 0.5 * self.p.mu + 0j, -0.5 * self.p.mu + 0j]
        mid = 0.5 * (a2 + a4)
        gap = min(abs(q - mid) for q in others) - 0.5 * abs(a4 - a2)
        clearance = max(min(0.35 * gap, 0.45 * min(a2.imag, a4.imag)), 1e-6)
        u = (a4 - a2) / abs(a4 - a2)
        n_hat = 1j * u
        lo, hi = -0.5 * abs(a4 - a2) - clearance, 0.5 * abs(a4 - a2) + clearance
        nn = 20
        s, w = _gauss01(nn)
        total = 0.0 + 0.0j
        # two walls and two caps, traversed counterclockwise
        for seg_a, seg_b in (
            (mid + lo * u - clearance * n_hat, mid + hi * u - clearance * n_hat),
            (mid + hi * u + clearance * n_hat, mid + lo * u + clearance * n_hat),
        ):
            zs = seg_a + (seg_b - seg_a) * s
            total += np.sum(self.g_prime_psi(zs) * (seg_b - seg_a) * w)
        for centre, th0 in ((mid + hi * u, -0.5 * math.pi), (mid + lo * u, 0.5 * math.pi)):
            base = math.atan2(u.imag, u.real)
            th = base + th0 + math.pi * s
            zs = centre + clearance * np.exp(1j * th)
            dz = 1j * clearance * math.pi * np.exp(1j * th)
            total += np.sum(self.g_prime_psi(zs) * dz * w)
        return float(total.imag)

    def _probe_points(self):
        """Two generic exterior points for the representation-match test."""
        top = max(self.p.absT, max(r.imag for r in self.bp.roots)) + 0.5
        return (0.21 * self.p.mu + 1j * top, -0.17 * self.p.mu + 1j * (top + 0.8))

    def rep_mismatch(self, z) -> complex:
        """Difference between the two derivative representations at z.

        The value data (with W, Omega) and the derivative data describe the
        same outer function exactly when the branch points solve the system,
        so this vanishes there for every z off the arcs.
        """
        return complex(self.g_prime(z) - self.g_prime_psi(z))

    def residual_vector(self):
        """Real residuals that vanish at solved branch points.

        genus 0: imaginary parts of the two moments.  genus 2: imaginary
        parts of the four moments plus the representation mismatch at two
        exterior probe points (an overdetermined but consistent system).
        """
        scale = 1.0 + 4.0 * self.p.t
        mom = self.moments() / scale
        if self.bp.genus == 0:
            return np.array([m.imag for m in mom])
        out = [m.imag for m in mom]
        for z in self._probe_points():
            d = self.rep_mismatch(z)
            out.extend((d.real, d.imag))
        return np.array(out)

    def w_path_condition(self) -> complex:
        """Diagnostic: deviation of the path value of W from reality and
        from the linear-system W (both vanish at solutions)."""
        wp = self.w_path_value()
        if self.slit_shift:
            # the slit data sits one monodromy step up; the path value of W
            # picks up the same offset at the junction
            wp = wp - 1j * math.pi * (self.bp.alpha2 - self.p.T)
        w_lin = self.arc_constants().W
        return complex(wp.real - w_lin, wp.imag)

    # regularized endpoint values ---------------------------------------------

    def branch_residual(self, which: int):
        """Finite part of B at a branch point (0, 2, or 4).

        The Cauchy transform has a locked inverse-sqrt part there; the value
        data N/R with N built from {f, W, Omega} cancels it, and the finite
        remainder is extrapolated in sqrt(rho).  Vanishes at solutions.
        """
        bp, p = self.bp, self.p
        alpha = {0: bp.alpha0, 2: bp.alpha2, 4: bp.alpha4}[which]
        ac = self.arc_constants()
        if which == 0:
            n_const = ac.Omega
        elif which == 2:
            n_const = ac.W + ac.Omega
        else:
            n_const = ac.W

        def n_over_r(z):
            val = sc.f_sheet(z, p) + n_const
            if self.slit_shift and which in (2, 4):
                val = val + 1j * math.pi * (z - p.T)
            return val / sc.eval_R(z, bp, p)

        # probe direction away from the attached arcs
        dirs = []
        for leg in self.legs:
            for end, vec in ((leg.a, leg.b - leg.a), (leg.b, leg.a - leg.b)):
                if abs(end - alpha) < 1e-14 * max(1.0, abs(alpha)):
                    dirs.append(vec / abs(vec))
        if not dirs:
            raise DomainError("branch point is not an arc endpoint")
        away = -sum(dirs)
        away = away / abs(away) if abs(away) > 1e-9 else 1j * dirs[0]

        scale = max(min(leg.length for leg in self.legs) * 1e-3, 1e-9)
        rhos = np.array([1.0, 0.5, 0.25, 0.125]) * scale
        zs = alpha + rhos * away
        phis = np.array([complex(self.phi(z)) for z in zs])
        best = None
        for sigma in (0.5, -0.5, 1.0, -1.0):
            vals = phis - sigma * np.array([n_over_r(z) for z in zs])
            # fit vals = B + c1 sqrt(rho) + c2 rho + c3 rho^(3/2)
            basis = np.vander(np.sqrt(rhos), 4, increasing=True)
            coef, *_ = np.linalg.lstsq(basis, vals, rcond=None)
            spread = abs(vals.max() - vals.min())
            if best is None or spread < best[0]:
                best = (spread, sigma, coef[0])
        return _2PI_I * best[2]

    def branch_residuals(self):
        if self.bp.genus == 0:
            return np.array([self.branch_residual(0)])
        return np.array([self.branch_residual(j) for j in (0, 2, 4)])

    # Im h -----------------------------------------------------------------

    def im_h(self, z):
        """Im h = 2 Im(R phi) - Im f; single valued off the arcs and cuts."""
        z = np.asarray(z, dtype=complex)
        return 2.0 * np.imag(self.g(z)) - np.imag(sc.f_any(z, self.p))

    def im_h_at_T(self) -> float:
        """Im h at the upper log branch point, f taken as its limit."""
        gT = self.g(self.p.T)
        return float(2.0 * np.imag(gT) - sc.im_f_at_T(self.p))

    def im_h_via_path(self, z, n_nodes: int = 24) -> float:
        """Cross-check route: Im h(z) = Im int h' + anchor, path over the top."""
        za = complex(z)
        if za.imag < 0:
            return -self.im_h_via_path(za.conjugate(), n_nodes)
        r0 = r0_anchor(self.p)
        height = max(1.4 * self.p.absT,
                     1.6 * max((r.imag for r in self.bp.roots), default=0.0),
                     za.imag + 0.2)
        waypoints = [complex(r0, 0.0), complex(r0, height),
                     complex(za.real, height), za]
        s, w = _gauss01(n_nodes)
        total = 0.0 + 0.0j
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            if abs(b - a) < 1e-15:
                continue
            zs = a + (b - a) * s
            total += np.sum(self.h_prime(zs) * (b - a) * w)
        anchor = -sc.f_any(r0, self.p).imag  # Im h just above the anchor
        return float(total.imag + anchor)


# ---------------------------------------------------------------------------
# reduced (long-time) evaluator
# ---------------------------------------------------------------------------

class ReducedGFunction:
    """Single-branch-point variant with the two-point radical."""

    def __init__(self, alpha2: complex, p: Params, tol: Tolerances = DEFAULT_TOL,
                 order: int = 32, depth: int = 13):
        if alpha2.imag <= 0:
            raise DomainError("alpha2 must lie in the open upper half plane")
        self.alpha2 = alpha2
        self.p = p
        self.tol = tol
        self.order = order
        self.depth = depth
        half = 0.5 * p.mu
        a2c = alpha2.conjugate()
        # side is relative to each leg's own orientation (+1 = left limit)
        self.legs = [
            Leg(alpha2, -half + 0j, "f", "rarm", +1, "sqrt", None,
                _real_axis_split(alpha2, -half + 0j)),
            Leg(-half + 0j, a2c, "f", "rarm", +1, None, "sqrt",
                _real_axis_split(-half + 0j, a2c)),
        ]
        self._tables = {}

    def _table(self, leg: Leg, scale_a=None, scale_b=None, extra_splits=()):
        rel = 2.0 * self.alpha2.imag / leg.length
        if rel < 0.5:
            auto = 2.0 ** math.floor(math.log2(max(rel, 1e-300)))
            if leg.end_a == "sqrt":
                scale_a = auto if scale_a is None else min(scale_a, auto)
            if leg.end_b == "sqrt":
                scale_b = auto if scale_b is None else min(scale_b, auto)
        key = (id(leg), scale_a, scale_b, extra_splits)
        if key in self._tables:
            return self._tables[key]
        s, omf, w = leg.rule(self.order, self.depth, scale_a, scale_b, extra_splits)

        def anchor(z):
            zs = np.array([z * (1 - 1e-9), z, z * (1 + 1e-9)])
            return sc.vpair_onesided_ordered(zs, self.alpha2, -0.5 * self.p.mu,
                                             side=leg.side)[1]

        roots = (self.alpha2, self.alpha2.conjugate())
        xi, r_side = _stable_R_on_leg(leg, s, omf, roots, anchor)
        bad = ~np.isfinite(r_side) | (np.abs(r_side) < 1e-280)
        # data branch: sheet value shifted one monodromy step, which keeps
        # the chain data continuous at the -mu/2 pinch
        fp = sc.f_prime_sheet(xi, self.p) + 1j * math.pi * np.sign(xi.imag)
        tab = {
            "xi": xi,
            "dxi": (leg.b - leg.a) * w,
            "inv_r": np.where(bad, 0.0, 1.0 / np.where(bad, 1.0, r_side)),
            "fp": fp,
        }
        self._tables[key] = tab
        return tab

    def moments(self):
        out = []
        for k in (0, 1):
            total = 0.0 + 0.0j
            for leg in self.legs:
                tab = self._table(leg)
                total += np.sum(tab["fp"] * tab["inv_r"] * tab["xi"] ** k * tab["dxi"])
            out.append(total)
        return np.array(out)

    def residual_vector(self):
        scale = 1.0 + 4.0 * self.p.t
        return np.array([m.imag for m in self.moments()]) / scale

    def psi(self, z):
        z = np.asarray(z, dtype=complex)
        zf = np.atleast_1d(z).ravel()
        out = np.zeros(zf.shape, dtype=complex)
        for leg in self.legs:
            groups: dict[tuple, list[int]] = {}
            for idx, za in enumerate(zf):
                groups.setdefault(GFunction._table_key_for(self, leg, complex(za)),
                                  []).append(idx)
            for key, idxs in groups.items():
                tab = self._table(leg, *key[:2], key[2])
                kern = 1.0 / (tab["xi"][None, :] - zf[idxs][:, None])
                out[idxs] += kern @ (tab["fp"] * tab["inv_r"] * tab["dxi"])
        res = out / (1j * math.pi)
        return res.reshape(z.shape) if z.shape else complex(res[0])

    def h_prime(self, z):
        r = sc.eval_R_reduced(z, self.alpha2, self.p)
        return r * self.psi(z) - sc.f_prime_any(z, self.p)

    def g_prime(self, z):
        return 0.5 * sc.eval_R_reduced(z, self.alpha2, self.p) * self.psi(z)

    def im_h_at_T(self, n_nodes: int = 32) -> float:
        """Im h at T: integrate 2 g' from the real anchor straight to T."""
        p = self.p
        r0 = r0_anchor(p)
        s, _, w = _interval_rule(0.0, 1.0, None, "log", n_nodes, 10)
        path = r0 + (p.T - r0) * s
        vals = 2.0 * self.g_prime(path)
        integral = np.sum(vals * (p.T - r0) * w)
        return float(integral.imag - sc.im_f_at_T(p))
