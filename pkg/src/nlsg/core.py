"""Shared value types: problem parameters, branch-point sets, tolerances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class DomainError(ValueError):
    """Raised when inputs fall outside the supported parameter domain."""


class OnCutError(ValueError):
    """Raised when a function is evaluated on (or too close to) a branch cut."""


class GeometryError(ValueError):
    """Raised when a contour cannot be built with the requested clearance."""


class ConvergenceError(RuntimeError):
    """Raised when a quadrature or iteration fails to reach its target."""


@dataclass(frozen=True)
class Params:
    """Problem parameters (x, t, mu) and the derived upper log branch point T.

    T = i*sqrt(1 - mu^2/4) is purely imaginary with positive imaginary part
    for 0 < mu < 2.
    """

    x: float
    t: float
    mu: float
    T: complex = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.mu < 2.0):
            raise DomainError(f"mu must lie in (0, 2), got {self.mu}")
        if self.t < 0.0:
            raise DomainError(f"t must be >= 0, got {self.t}")
        object.__setattr__(self, "T", 1j * math.sqrt(1.0 - 0.25 * self.mu * self.mu))

    @property
    def absT(self) -> float:
        return self.T.imag

    def with_x(self, x: float) -> "Params":
        return Params(x=x, t=self.t, mu=self.mu)

    def with_t(self, t: float) -> "Params":
        return Params(x=self.x, t=t, mu=self.mu)


def make_params(x: float, t: float, mu: float) -> Params:
    """Validate (x, t, mu) and attach T = i*sqrt(1 - mu^2/4)."""
    return Params(x=float(x), t=float(t), mu=float(mu))


@dataclass(frozen=True)
class BranchPoints:
    """Upper-half-plane branch points; lower mates are conjugates by symmetry.

    genus 0 keeps only alpha0; alpha2/alpha4 are None in that case.
    """

    alpha0: complex
    alpha2: complex | None = None
    alpha4: complex | None = None
    genus: int = 2

    def __post_init__(self):
        if self.genus not in (0, 2):
            raise DomainError(f"genus must be 0 or 2, got {self.genus}")
        if self.alpha0.imag < 0:
            raise DomainError("alpha0 must have nonnegative imaginary part")
        if self.genus == 2:
            if self.alpha2 is None or self.alpha4 is None:
                raise DomainError("genus-2 branch points need alpha2 and alpha4")
            if self.alpha2.imag < 0 or self.alpha4.imag < 0:
                raise DomainError("alpha2/alpha4 must have nonnegative imaginary parts")
        else:
            if self.alpha2 is not None or self.alpha4 is not None:
                raise DomainError("genus-0 branch points carry only alpha0")

    @property
    def roots(self) -> tuple[complex, ...]:
        """All radical roots, upper points first, then conjugate mates."""
        if self.genus == 0:
            return (self.alpha0, self.alpha0.conjugate())
        return (
            self.alpha0,
            self.alpha2,
            self.alpha4,
            self.alpha0.conjugate(),
            self.alpha2.conjugate(),
            self.alpha4.conjugate(),
        )


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by quadrature, solvers, and contour builders."""

    quad_abs: float = 1e-10
    newton_res: float = 1e-10
    newton_max_iter: int = 50
    contour_clearance: float = 0.05

    def __post_init__(self):
        if min(self.quad_abs, self.newton_res, self.contour_clearance) <= 0:
            raise DomainError("tolerances must be positive")
        if self.newton_max_iter < 1:
            raise DomainError("newton_max_iter must be >= 1")


DEFAULT_TOL = Tolerances()
