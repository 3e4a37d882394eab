"""Double equal-well nonlinearities.

The reaction term of the Allen-Cahn equation is ``f = -F'`` where ``F`` is a
double-well potential with equal minima at ``u = -1`` and ``u = +1``.  Beyond
``|u| = M`` the nonlinearity may be replaced by a one-sided tail; only the
values on ``[-M, M]`` matter for bounded solutions.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

WELL_TOL = 1e-10


@dataclass(frozen=True)
class DoubleWell:
    """Nonlinearity ``f`` with derivatives and potential ``F(u) = -int_{-1}^u f``.

    All callables accept scalars or arrays.
    """

    f: Callable
    f1: Callable
    f2: Callable
    F: Callable
    M: float = 2.0
    name: str = "custom"

    @classmethod
    def from_functions(cls, f, f1, f2, M=2.0, name="custom"):
        """Build a well from ``f`` and its derivatives; ``F`` by adaptive quadrature."""

        def F(u):
            u = np.asarray(u, dtype=float)
            out = np.vectorize(
                lambda v: -integrate.quad(f, -1.0, v, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            )(u)
            return out if out.ndim else float(out)

        return cls(f=f, f1=f1, f2=f2, F=F, M=float(M), name=name)


def _cubic_parts(M, c):
    fM = M - M**3
    f1M = 1.0 - 3.0 * M**2
    f2M = -6.0 * M
    FM = 0.25 * (1.0 - M**2) ** 2

    def f(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        s = np.maximum(a - M, 0.0)
        tail = fM + f1M * s + f2M * (np.expm1(-c * s) + c * s) / c**2
        out = np.where(a <= M, u - u**3, np.sign(u) * tail)
        return out if out.ndim else float(out)

    def f1(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        s = np.maximum(a - M, 0.0)
        tail = f1M - f2M * np.expm1(-c * s) / c
        out = np.where(a <= M, 1.0 - 3.0 * u**2, tail)
        return out if out.ndim else float(out)

    def f2(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        s = np.maximum(a - M, 0.0)
        tail = f2M * np.exp(-c * s)
        out = np.where(a <= M, -6.0 * u, np.sign(u) * tail)
        return out if out.ndim else float(out)

    def F(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        s = np.maximum(a - M, 0.0)
        # F(|u|) = F(M) - int_M^|u| f, the tail integrated in closed form
        G = f2M / c**2 * (-np.expm1(-c * s) / c - s + 0.5 * c * s**2)
        tail = FM - (fM * s + 0.5 * f1M * s**2 + G)
        out = np.where(a <= M, 0.25 * (1.0 - u**2) ** 2, tail)
        return out if out.ndim else float(out)

    return f, f1, f2, F


def make_cubic(M=2.0, tail_rate=1.0):
    """The cubic well ``f(u) = u - u**3`` with ``F(u) = (1 - u**2)**2 / 4``.

    For ``|u| > M`` the curvature ``f''`` relaxes exponentially (rate
    ``tail_rate``) so ``f`` grows linearly while keeping ``u f''(u) <= 0``;
    the blend is C2 at ``|u| = M``.
    """
    if M <= 1.0:
        raise ValueError("tail threshold M must exceed 1")
    f, f1, f2, F = _cubic_parts(float(M), float(tail_rate))
    return DoubleWell(f=f, f1=f1, f2=f2, F=F, M=float(M), name="cubic")


@dataclass
class CheckResult:
    name: str
    worst: float
    passed: bool


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name:<24s} worst={c.worst:.3e}"
            for c in self.checks
        ]
        return "\n".join(lines)


def validate_wells(w, samples=1000, tol=WELL_TOL):
    """Check the structural assumptions on ``w`` over a uniform sample.

    Parameters
    ----------
    w : DoubleWell
    samples : int
        Number of sample points on ``[-M-2, M+2]``; at least 100.
    tol : float
        Tolerance for the equality checks.

    Returns
    -------
    ValidationReport
        One entry per invariant. A violated invariant yields a failing
        entry rather than an exception.
    """
    if samples < 100:
        raise ValueError("validate_wells needs at least 100 samples")
    M = w.M
    u = np.linspace(-M - 2.0, M + 2.0, int(samples))
    report = ValidationReport()

    ends = np.array([-1.0, 1.0])
    worst = float(np.max(np.abs(w.f(ends))))
    report.checks.append(CheckResult("f(±1)=0", worst, worst <= tol))

    worst = float(np.max(w.f1(ends)))
    report.checks.append(CheckResult("f'(±1) < 0", worst, worst < 0.0))

    worst = float(np.max(np.abs(w.F(ends))))
    report.checks.append(CheckResult("F(±1)=0", worst, worst <= tol))

    inner = u[(u > -1.0) & (u < 1.0)]
    inner = inner[np.abs(np.abs(inner) - 1.0) > 1e-6]
    Fin = w.F(inner)
    worst = float(np.min(Fin)) if inner.size else np.inf
    report.checks.append(CheckResult("F > 0 on (-1,1)", worst, worst > 0.0))

    tail = u[np.abs(u) >= M]
    worst = float(np.max(tail * w.f2(tail))) if tail.size else -np.inf
    report.checks.append(CheckResult("u f''(u) <= 0 for |u|>=M", worst, worst <= tol))

    worst = float(np.max(w.f(tail) * np.sign(tail))) if tail.size else -np.inf
    report.checks.append(CheckResult("f(u) sign(u) < 0 for |u|>=M", worst, worst < 0.0))
    return report


def energy_density(w, u, grad_sq, eps):
    """Integrand ``eps |grad u|^2 / 2 + F(u) / eps`` of the Lyapunov functional."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 0.5 * eps * np.asarray(grad_sq) + w.F(u) / eps
