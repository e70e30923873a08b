"""Closed-form long-time expansions and their direct-quadrature cross-checks.

These formulas serve as oracles for the numerical solvers: the expansion of
the inner branch point, the obstruction-curve asymptote and its
coefficients, the small-x law of the first breaking curve, the quadratic
integral lemma, and the tabulated asymptotics of the split integrals
feeding the long-time outer derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import scattering as sc
from .core import DomainError, Params


@dataclass(frozen=True)
class Alpha2Coefficients:
    A1: float
    A2: float
    A3: float
    B1: float
    B2: float
    B3: float


@dataclass(frozen=True)
class ObstructionCoefficients:
    c2: float
    c3: float
    C3_theorem: float


def alpha2_coefficients(x: float, mu: float) -> Alpha2Coefficients:
    absT = math.sqrt(1.0 - 0.25 * mu * mu)
    ln_ratio = math.log(2.0 * absT / math.sqrt(mu))
    return Alpha2Coefficients(
        A1=0.125,
        A2=0.25 * ln_ratio + 0.25 * (math.log(2.0) - x),
        A3=3.0 / (32.0 * mu),
        B1=0.5 * math.sqrt(mu),
        B2=1.0 / (16.0 * math.sqrt(mu)),
        B3=(2.0 + ln_ratio) / (8.0 * math.sqrt(mu))
        + (math.log(2.0) - x) / (8.0 * math.sqrt(mu)),
    )


def alpha2_asymptotic(x: float, t: float, mu: float) -> complex:
    """Three-term long-time expansion of the inner branch point."""
    if t <= 1.0:
        raise DomainError("expansion needs t > 1")
    c = alpha2_coefficients(x, mu)
    lt = math.log(t)
    a = c.A1 * lt / t + c.A2 / t + c.A3 * lt / t**2
    b = c.B1 / math.sqrt(t) + c.B2 * lt / t**1.5 + c.B3 / t**1.5
    return complex(a, b)


def obstruction_coefficients(mu: float) -> ObstructionCoefficients:
    absT2 = 1.0 - 0.25 * mu * mu
    return ObstructionCoefficients(
        c2=-mu / (16.0 * absT2),
        c3=-mu * (1.0 + math.log(4.0 * absT2 / mu)) / (16.0 * absT2),
        C3_theorem=(1.0 - math.log(absT2)) / (4.0 * absT2),
    )


def obstruction_asymptote(t: float, mu: float) -> float:
    """x(t) = ln 2 + c2 ln t / t + c3 / t."""
    if t <= 1.0:
        raise DomainError("asymptote needs t > 1")
    c = obstruction_coefficients(mu)
    return math.log(2.0) + c.c2 * math.log(t) / t + c.c3 / t


def im_h_at_T_asymptotic(x: float, t: float, mu: float) -> float:
    """Expansion of Im h at the log branch point in terms of alpha2."""
    absT = math.sqrt(1.0 - 0.25 * mu * mu)
    al = alpha2_asymptotic(x, t, mu)
    a, b = al.real, al.imag
    lead = absT * (x - math.log(2.0))
    mid = (2.0 / absT) * (0.25 * b * b * math.log(b) + 2.0 * t * a * b * b)
    tail = (2.0 / absT) * (
        0.125 * (1.0 - 2.0 * math.log(absT)) + 0.25 * (x - math.log(2.0))
    ) * b * b
    return lead + mid + tail


def first_break_small_x(x: float, mu: float) -> float:
    """Small-x law of the first breaking curve (the sqrt-order rest dropped)."""
    if x < 0:
        raise DomainError("the small-x law is for x >= 0")
    return 1.0 / (2.0 * (mu + 2.0)) + 0.5 / math.tan(0.2 * math.pi) / math.sqrt(
        mu + 2.0
    ) * x


def lemma2_asymptotic(f0: float, fp: float, p_end: float, corr_integral: float,
                      b: float) -> float:
    """Quadratic-in-b expansion of int_0^p f(s) (sqrt(s^2+b^2) - s) ds.

    Inputs are f(0), f(p), p, and int_0^p f'(s) ln s ds.
    """
    if b <= 0:
        raise DomainError("b must be positive")
    return -0.5 * f0 * b * b * math.log(b) + (
        0.25 * f0
        + 0.5 * f0 * math.log(2.0)
        + 0.5 * fp * math.log(p_end)
        - 0.5 * corr_integral
    ) * b * b


# ---------------------------------------------------------------------------
# split-integral table
# ---------------------------------------------------------------------------

def _gauss01(n=32):
    xg, wg = np.polynomial.legendre.leggauss(n)
    return 0.5 * (xg + 1.0), 0.5 * wg


def _real_leg_integral(fn, lo, hi, n=32, panels=8):
    s, w = _gauss01(n)
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        xs = a + (b - a) * s
        total += np.sum(fn(xs) * (b - a) * w)
    return total


def _vertical_leg_integral(fn, a, b_im, n=32, panels=10):
    """Integral along the vertical segment a+i b_im -> a-i b_im.

    Each half is parametrized from its singular end, y = sign*b*(1-u^2),
    which removes the 1/sqrt(b^2 - y^2) endpoint behavior; the lower half is
    traversed backward by that parametrization and is negated.
    """
    s, w = _gauss01(n)
    total = 0.0 + 0.0j
    u_edges = np.linspace(0.0, 1.0, panels + 1)
    for sign in (+1.0, -1.0):
        acc = 0.0 + 0.0j
        for u0, u1 in zip(u_edges[:-1], u_edges[1:]):
            u = u0 + (u1 - u0) * s
            y = sign * b_im * (1.0 - u * u)
            dy_du = -2.0 * sign * b_im * u
            acc += np.sum(fn(a + 1j * y) * 1j * dy_du * (u1 - u0) * w)
        total += acc if sign > 0 else -acc
    return total


def verify_integral_table(which: str, z: complex, p: Params, alpha2: complex):
    """Asymptotic vs direct-quadrature value of one split integral.

    Returns (asymptotic, numeric, gap).  Tags with order-only estimates
    (I4, I6, Hk) report a zero asymptotic value, so the gap is the numeric
    size itself.
    """
    a, b = alpha2.real, alpha2.imag
    mu, t = p.mu, p.t
    z = complex(z)
    half = 0.5 * mu
    c1 = sc.taylor_constants(p).C1

    def r_tilde(w):
        # on the real and vertical integration legs the argument is real
        # positive, so the principal root is the intended branch
        return -np.sqrt((w - a) ** 2 + b * b)

    # at the field point the radical must carry the vertical-segment cut
    r_field = -sc.slit_sqrt(z, complex(a, b), complex(a, -b))
    front = r_field / (z - a) + 1.0

    def lam_over_r(w):
        return (w - a) / r_tilde(w)

    if which == "I1":
        numeric = -0.5 * _real_leg_integral(
            lambda s: s / ((s - z) * z), a, -half
        )
        asymptotic = -0.5 * np.log(-half - z) + mu / (4.0 * z) + 0.5 * np.log(-z)
    elif which == "I2":
        base = _real_leg_integral(lambda s: s / ((s - z) * z), a, -half)
        numeric = 0.5 * front * base
        i1a = -0.5 * np.log(-half - z) + mu / (4.0 * z) + 0.5 * np.log(-z)
        asymptotic = b * b / (2.0 * z * z) * i1a
    elif which == "I3":
        numeric = -0.5 * _real_leg_integral(
            lambda s: (lam_over_r(s) - 1.0) * s / ((s - z) * z), a, -half,
            panels=24,
        )
        asymptotic = (
            b * b * math.log(b) / (4.0 * z * z)
            + ((1.0 - 2.0 * math.log(mu)) / (8.0 * z * z)
               + np.log(1.0 + mu / (2.0 * z)) / (4.0 * z * z)) * b * b
        )
    elif which == "I4":
        numeric = 0.5 * front * _real_leg_integral(
            lambda s: (lam_over_r(s) - 1.0) * s / (s - z), a, -half, panels=24
        )
        asymptotic = 0.0 + 0.0j
    elif which in ("I5", "I6", "H2", "Hk"):
        power = {"I5": 1, "I6": 1, "H2": 2, "Hk": 3}[which]

        def fn(w):
            return lam_over_r(w) * sc.f_prime_sheet(w, p) * (w / z) ** power

        base = _vertical_leg_integral(fn, a, b)
        if which == "I5":
            numeric = base / (2j * math.pi * z)
            asymptotic = (2.0 * t * a * b * b - 0.25 * c1 * b * b) / (z * z)
        elif which == "I6":
            numeric = -front * base / (2j * math.pi * z)
            asymptotic = 0.0 + 0.0j
        elif which == "H2":
            numeric = -(r_field / (z - a)) * base / (2j * math.pi * z)
            asymptotic = -0.75 * t * b**4 / z**3
        else:
            numeric = -(r_field / (z - a)) * base / (2j * math.pi * z)
            asymptotic = 0.0 + 0.0j
    else:
        raise DomainError(f"unknown integral tag {which!r}")

    numeric = complex(numeric)
    asymptotic = complex(asymptotic)
    return asymptotic, numeric, abs(asymptotic - numeric)
