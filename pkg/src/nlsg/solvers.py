"""Nonlinear solvers: branch points (full and reduced), the first-breaking
curve, and the singular-obstruction root, plus warm-started continuation.

The full genus-2 unknowns are packed as six reals
(a0, log b0, a2, b2, a4, log b4); the log transform keeps the Jacobian sane
when the outer imaginary parts collapse exponentially at large t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asym
from . import scattering as sc
from .core import BranchPoints, ConvergenceError, DomainError, Params, Tolerances, DEFAULT_TOL
from .gfun import GFunction, ReducedGFunction


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    final_residual: float
    solution: object
    message: str = ""


def damped_newton(fun, x0, *, tol=1e-10, max_iter=50, fd_step=1e-7,
                  step_floor=1e-30, args=()):
    """Damped Newton with forward-difference Jacobian and Armijo backtracking.

    Accepted steps must reduce the residual norm; near-singular Jacobians are
    regularized through least squares.  Returns (x, converged, iters, resnorm).
    """
    _fail = (ValueError, FloatingPointError, ZeroDivisionError, OverflowError,
             DomainError, ConvergenceError, np.linalg.LinAlgError)

    def safe_call(v):
        try:
            out = np.asarray(fun(v, *args), dtype=float)
        except _fail:
            return None
        if not np.all(np.isfinite(out)):
            return None
        return out

    x = np.asarray(x0, dtype=float).copy()
    f = safe_call(x)
    if f is None:
        raise ConvergenceError("residual undefined at the initial guess")
    norm = float(np.linalg.norm(f))
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return x, True, it - 1, norm
        n = x.size
        jac = np.empty((f.size, n))
        for k in range(n):
            h = fd_step * max(abs(x[k]), 1.0)
            xk = x.copy()
            xk[k] += h
            fk = safe_call(xk)
            if fk is None:
                xk[k] = x[k] - h
                fk = safe_call(xk)
                if fk is None:
                    return x, False, it, norm
                h = -h
            jac[:, k] = (fk - f) / h
        try:
            step = np.linalg.solve(jac, f) if f.size == n else None
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            try:
                step, *_ = np.linalg.lstsq(jac, f, rcond=1e-10)
            except np.linalg.LinAlgError:
                return x, False, it, norm
        lam = 1.0
        while lam > step_floor:
            x_try = x - lam * step
            f_try = safe_call(x_try)
            norm_try = math.inf if f_try is None else float(np.linalg.norm(f_try))
            if norm_try < norm:
                x, f, norm = x_try, f_try, norm_try
                break
            lam *= 0.5
        else:
            return x, False, it, norm
    return x, norm <= tol, max_iter, norm


# ---------------------------------------------------------------------------
# branch-point solvers
# ---------------------------------------------------------------------------

def _pack_full(bp: BranchPoints):
    return np.array([
        bp.alpha0.real, math.log(bp.alpha0.imag),
        bp.alpha2.real, bp.alpha2.imag,
        bp.alpha4.real, math.log(bp.alpha4.imag),
    ])


def _unpack_full(v) -> BranchPoints:
    lb0, lb4 = float(np.clip(v[1], -690.0, 3.0)), float(np.clip(v[5], -690.0, 3.0))
    return BranchPoints(
        alpha0=complex(v[0], math.exp(lb0)),
        alpha2=complex(v[2], v[3]),
        alpha4=complex(v[4], math.exp(lb4)),
        genus=2,
    )


def solve_branch_points_full(p: Params, guess: BranchPoints,
                             tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Damped Newton on the six real branch-point conditions.

    Residuals: four arc moments of f'/R plus the two period-reality
    conditions; the constants (W, Omega) are re-solved inside every residual
    evaluation.  Collision of alpha2 and alpha4 is reported as degeneracy.
    """
    if guess.genus != 2:
        raise DomainError("full solver needs a genus-2 guess")

    def residual(v):
        bp = _unpack_full(v)
        if abs(bp.alpha2 - bp.alpha4) < 1e-4:
            raise ConvergenceError("alpha2/alpha4 collision (first-break degeneracy)")
        return GFunction(bp, p, tol).residual_vector()

    try:
        x, ok, iters, res = damped_newton(
            residual, _pack_full(guess),
            tol=tol.newton_res, max_iter=tol.newton_max_iter,
        )
        if not ok and res < 1e-2:
            # Levenberg-Marquardt polish through the narrow valley
            from scipy.optimize import least_squares

            ls = least_squares(residual, x, method="lm", diff_step=1e-6,
                               xtol=3e-16, ftol=3e-16, gtol=3e-16,
                               max_nfev=400)
            res_ls = float(np.linalg.norm(ls.fun))
            if res_ls < res:
                x, res = ls.x, res_ls
                iters += int(ls.nfev)
            ok = res <= tol.newton_res
    except ConvergenceError as exc:
        return SolveReport(False, 0, math.inf, guess, message=str(exc))
    bp = _unpack_full(x)
    msg = "" if ok else "newton stalled"
    if abs(bp.alpha2 - bp.alpha4) < 1e-4:
        ok, msg = False, "alpha2/alpha4 collision (first-break degeneracy)"
    return SolveReport(ok, iters, res, bp, message=msg)


def solve_branch_point_genus0(p: Params, guess: complex,
                              tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Two-real-condition solve for the single genus-0 branch point."""
    if guess.imag <= 0:
        raise DomainError("guess must lie in the open upper half plane")

    def residual(v):
        bp = BranchPoints(alpha0=complex(v[0], math.exp(v[1])), genus=0)
        return GFunction(bp, p, tol).residual_vector()

    x0 = np.array([guess.real, math.log(guess.imag)])
    x, ok, iters, res = damped_newton(
        residual, x0, tol=tol.newton_res, max_iter=tol.newton_max_iter
    )
    alpha0 = complex(x[0], math.exp(x[1]))
    return SolveReport(ok, iters, res, alpha0,
                       message="" if ok else "newton stalled")


def genus0_seed(p: Params, tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Genus-0 solve started from a coarse residual scan of the half plane."""
    best, best_val = None, math.inf
    for re in np.linspace(-0.8, 0.8, 9):
        for im in (0.2, 0.45, 0.7, 0.95):
            try:
                bp = BranchPoints(alpha0=complex(re, im), genus=0)
                r = GFunction(bp, p, tol).residual_vector()
                v = float(np.linalg.norm(r))
            except (ValueError, ConvergenceError):
                continue
            if v < best_val:
                best, best_val = complex(re, im), v
    if best is None:
        return SolveReport(False, 0, math.inf, None, message="scan found no seed")
    return solve_branch_point_genus0(p, best, tol)


def solve_alpha2_LT(p: Params, guess: complex,
                    tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Reduced two-real-unknown solve for the long-time alpha2."""
    if guess.imag <= 0:
        raise DomainError("guess must lie in the open upper half plane")

    def residual(v):
        return ReducedGFunction(complex(v[0], math.exp(v[1])), p, tol).residual_vector()

    x0 = np.array([guess.real, math.log(guess.imag)])
    x, ok, iters, res = damped_newton(
        residual, x0, tol=tol.newton_res, max_iter=tol.newton_max_iter
    )
    alpha2 = complex(x[0], math.exp(x[1]))
    return SolveReport(ok, iters, res, alpha2,
                       message="" if ok else "newton stalled")


# ---------------------------------------------------------------------------
# first break
# ---------------------------------------------------------------------------

def _h_prime_zero(gf: GFunction, z_guess: complex, tol: Tolerances) -> complex:
    """Complex Newton for h'(z) = 0 in the genus-0 phase."""
    z = complex(z_guess)
    for _ in range(tol.newton_max_iter):
        hp = complex(gf.h_prime(z))
        if abs(hp) <= tol.newton_res:
            return z
        hpp = gf.h_second(z)
        step = hp / hpp
        while abs(step) > 0.5 * abs(z.imag):  # keep iterates off the real axis
            step *= 0.5
        z = z - step
    return z


def solve_first_break(x: float, mu: float, guess_z: complex | None = None,
                      guess_t: float | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Locate the first break: alternating updates of z0 and t.

    z0 is updated from h'(z0, t) = 0 at fixed t; t from the scalar condition
    Im[h - h'^2 / (2 h'')] = 0 at fixed z0 (secant).  The joint Jacobian is
    singular, so the two half-steps are iterated in turns.
    """
    t = float(guess_t) if guess_t is not None else asym.first_break_small_x(x, mu)
    p0 = Params(x=x, t=t, mu=mu)
    rep0 = genus0_seed(p0, tol)
    if not rep0.converged:
        return SolveReport(False, 0, math.inf, None, message="genus-0 seed failed")
    alpha0 = rep0.solution

    def locate_z(gf, z_seed):
        if z_seed is not None:
            z = _h_prime_zero(gf, z_seed, tol)
            if abs(gf.h_prime(z)) < 1e-6:
                return z
        # coarse scan for the interior zero of h'
        grid_re = np.linspace(-0.9 * mu, 0.3, 25)
        grid_im = np.linspace(0.05, 1.0, 14)
        zz = grid_re[:, None] + 1j * grid_im[None, :]
        vals = np.abs(gf.h_prime(zz.ravel()))
        z0 = complex(zz.ravel()[int(np.argmin(vals))])
        return _h_prime_zero(gf, z0, tol)

    z0 = guess_z
    t_prev, s_prev = None, None
    for it in range(1, tol.newton_max_iter + 1):
        p = Params(x=x, t=t, mu=mu)
        rep = solve_branch_point_genus0(p, alpha0, tol)
        if not rep.converged:
            return SolveReport(False, it, math.inf, None,
                               message="genus-0 branch point lost")
        alpha0 = rep.solution
        gf = GFunction(BranchPoints(alpha0=alpha0, genus=0), p, tol)
        z0 = locate_z(gf, z0)
        hp = complex(gf.h_prime(z0))
        hpp = gf.h_second(z0)
        if abs(hpp) < 1e-8:
            return SolveReport(False, it, math.inf, (z0, t),
                               message="h'' vanished; quadratic model invalid")
        s = float(np.imag(gf.h(z0) - hp * hp / (2.0 * hpp)))
        if abs(s) <= tol.newton_res and abs(hp) <= tol.newton_res:
            return SolveReport(True, it, max(abs(s), abs(hp)), (z0, t))
        if s_prev is None or abs(s - s_prev) < 1e-300:
            dt = -s * 0.2  # crude first secant seed
        else:
            dt = -s * (t - t_prev) / (s - s_prev)
        t_prev, s_prev = t, s
        dt = float(np.clip(dt, -0.25 * t, 0.25 * t))
        t = t + dt
    return SolveReport(False, tol.newton_max_iter, abs(s), (z0, t),
                       message="alternating iteration stalled")


# ---------------------------------------------------------------------------
# obstruction root in t
# ---------------------------------------------------------------------------

T_SWITCH_DEFAULT = 10.0


def _im_h_at_T(x: float, mu: float, t: float, state: dict,
               tol: Tolerances, t_switch: float, mode: str = "auto") -> float:
    p = Params(x=x, t=t, mu=mu)
    use_reduced = (mode == "reduced") or (mode == "auto" and t >= t_switch)
    if use_reduced:
        guess = state.get("alpha2_lt") or complex(
            asym.alpha2_asymptotic(x, max(t, 2.0), mu)
        )
        rep = solve_alpha2_LT(p, guess, tol)
        if not rep.converged:
            raise ConvergenceError(f"reduced solve failed at t={t}")
        state["alpha2_lt"] = rep.solution
        return ReducedGFunction(rep.solution, p, tol).im_h_at_T()
    bp_guess = state.get("bp") or seed_full_from_asymptotics(p)
    rep = solve_branch_points_full(p, bp_guess, tol)
    if not rep.converged:
        raise ConvergenceError(f"full solve failed at t={t}: {rep.message}")
    state["bp"] = rep.solution
    return GFunction(rep.solution, p, tol).im_h_at_T()


def solve_obstruction_time(x: float, mu: float, t_bracket=(1.0, 64.0),
                           tol: Tolerances = DEFAULT_TOL,
                           t_switch: float = T_SWITCH_DEFAULT,
                           mode: str = "auto") -> SolveReport:
    """Largest root in t of Im h(T, x, t) = 0 inside the bracket.

    Scans a geometric grid for the last sign change, then polishes by
    bisection plus a secant finish.  Every evaluation re-solves the branch
    points (full below t_switch, reduced above).
    """
    state: dict = {}

    def fun(t):
        return _im_h_at_T(x, mu, t, state, tol, t_switch, mode)

    t_lo, t_hi = t_bracket
    grid = np.geomspace(t_lo, t_hi, 25)
    vals = []
    for t in grid:
        try:
            vals.append(fun(t))
        except ConvergenceError:
            vals.append(math.nan)
    vals = np.array(vals)
    idx = None
    for k in range(len(grid) - 1, 0, -1):
        if np.isfinite(vals[k - 1]) and np.isfinite(vals[k]) and vals[k - 1] * vals[k] < 0:
            idx = k
            break
    if idx is None:
        return SolveReport(False, len(grid), math.inf, None,
                           message="no sign change: no obstruction in bracket")
    a, b = float(grid[idx - 1]), float(grid[idx])
    fa, fb = float(vals[idx - 1]), float(vals[idx])
    iters = 0
    for _ in range(60):
        iters += 1
        m = 0.5 * (a + b)
        fm = fun(m)
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
        if abs(b - a) < 1e-6 * b:
            break
    # secant polish
    t0, t1, f0, f1 = a, b, fa, fb
    for _ in range(20):
        iters += 1
        if abs(f1 - f0) < 1e-300:
            break
        t2 = t1 - f1 * (t1 - t0) / (f1 - f0)
        if not (min(a, b) * 0.5 <= t2 <= max(a, b) * 2.0):
            break
        f2 = fun(t2)
        t0, f0, t1, f1 = t1, f1, t2, f2
        if abs(f1) < 1e-10:
            break
    return SolveReport(abs(f1) < 1e-8, iters, abs(f1), float(t1))


def seed_full_from_asymptotics(p: Params, edge: float = 1e-2) -> BranchPoints:
    """Genus-2 seed: asymptotic alpha2 plus outer points near +-mu/2."""
    a2 = complex(asym.alpha2_asymptotic(p.x, max(p.t, 1.5), p.mu))
    return BranchPoints(
        alpha0=0.5 * p.mu + 1j * edge,
        alpha2=a2,
        alpha4=-0.5 * p.mu + 1j * edge,
        genus=2,
    )


def solve_branch_points_warm(p: Params, guess: BranchPoints,
                             tol: Tolerances = DEFAULT_TOL) -> SolveReport:
    """Full solve with a fallback rescan of the outer imaginary parts.

    The outer points collapse exponentially in t, so a plain warm start can
    land far outside the Newton basin; rescaling the two imaginary parts by
    a common factor and keeping the rest of the guess recovers it.
    """
    rep = solve_branch_points_full(p, guess, tol)
    if rep.converged:
        return rep
    best = None
    for lam in np.geomspace(1e-3, 1e3, 25):
        try:
            bp = BranchPoints(
                alpha0=complex(guess.alpha0.real, lam * guess.alpha0.imag),
                alpha2=guess.alpha2,
                alpha4=complex(guess.alpha4.real, lam * guess.alpha4.imag),
                genus=2,
            )
            val = float(np.linalg.norm(GFunction(bp, p, tol).residual_vector()))
        except (ValueError, ConvergenceError, ZeroDivisionError):
            continue
        if best is None or val < best[0]:
            best = (val, bp)
    if best is None:
        return rep
    rep2 = solve_branch_points_full(p, best[1], tol)
    return rep2 if rep2.converged else rep


def seed_full_staged(p: Params, tol: Tolerances = DEFAULT_TOL) -> BranchPoints:
    """Seed the six-real solve: reduced alpha2, then a log-scan of the outer
    imaginary parts (tied together) for the smallest residual norm."""
    a2_guess = complex(asym.alpha2_asymptotic(p.x, max(p.t, 1.5), p.mu))
    rep = solve_alpha2_LT(p, a2_guess, tol)
    a2 = rep.solution if rep.converged else a2_guess
    best_b, best_val = 1e-2, math.inf
    for log10b in np.arange(-1.2, -14.5, -0.75):
        b = 10.0 ** log10b
        try:
            bp = BranchPoints(alpha0=0.5 * p.mu + 1j * b, alpha2=a2,
                              alpha4=-0.5 * p.mu + 1j * b, genus=2)
            val = float(np.linalg.norm(GFunction(bp, p, tol).residual_vector()))
        except (ValueError, ConvergenceError, ZeroDivisionError):
            continue
        if val < best_val:
            best_b, best_val = b, val
    return BranchPoints(alpha0=0.5 * p.mu + 1j * best_b, alpha2=a2,
                        alpha4=-0.5 * p.mu + 1j * best_b, genus=2)


# ---------------------------------------------------------------------------
# continuation sweeps
# ---------------------------------------------------------------------------

def sweep_continuation(family: str, param_range, n: int, p0: Params,
                       tol: Tolerances = DEFAULT_TOL, guess=None,
                       max_refine: int = 3):
    """Warm-started continuation along t, x, or mu for the full solver.

    Each grid point is seeded by the previous solution; on failure the step
    is bisected up to ``max_refine`` levels, after which the stall is
    reported and the sweep stops.
    """
    if family not in ("t", "x", "mu"):
        raise DomainError("family must be one of 't', 'x', 'mu'")
    lo, hi = param_range
    grid = list(np.linspace(lo, hi, n))

    def params_at(v):
        if family == "t":
            return Params(x=p0.x, t=v, mu=p0.mu)
        if family == "x":
            return Params(x=v, t=p0.t, mu=p0.mu)
        return Params(x=p0.x, t=p0.t, mu=v)

    reports = []
    bp = guess if guess is not None else seed_full_from_asymptotics(params_at(grid[0]))
    prev_v = None
    queue = grid
    k = 0
    while k < len(queue):
        v = queue[k]
        rep = solve_branch_points_full(params_at(v), bp, tol)
        if rep.converged:
            reports.append((float(v), rep))
            bp = rep.solution
            prev_v = v
            k += 1
            continue
        if prev_v is None or max_refine <= 0:
            reports.append((float(v), rep))
            break
        inserted = []
        dv = (v - prev_v)
        for level in range(1, max_refine + 1):
            inserted = [prev_v + dv * j / (2 ** level) for j in range(1, 2 ** level)]
            ok = True
            bp_try = bp
            for vv in inserted:
                r = solve_branch_points_full(params_at(vv), bp_try, tol)
                if not r.converged:
                    ok = False
                    break
                bp_try = r.solution
            if ok:
                bp = bp_try
                break
        else:
            reports.append((float(v), rep))
            break
        rep = solve_branch_points_full(params_at(v), bp, tol)
        reports.append((float(v), rep))
        if not rep.converged:
            break
        bp = rep.solution
        prev_v = v
        k += 1
    return reports
