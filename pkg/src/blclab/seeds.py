"""Closed-form starting solutions.

The trivial solution, the one-kink family produced by transforming it (valid
in every case), and the explicit solutions that seed the worked elliptic
constructions: 4*arctan(e^x1), the arctanh front between two singular
curves, and its two-parameter companion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .case import (
    AnalyticSolution,
    CaseConfig,
    CongruenceParams,
    case_by_id,
    congruence_params,
)

DOMAIN_GUARD = 1e-6


class UnknownSpec(ValueError):
    """Seed spec names a closed form the library does not define."""


class SeedKind(enum.Enum):
    ZERO = "zero"
    KINK = "kink"
    EXAMPLE2_ALPHA = "example2-alpha"
    EXAMPLE4_ALPHA = "example4-alpha"
    EXAMPLE4_ALPHA1 = "example4-alpha1"
    EXAMPLE4_ALPHA2 = "example4-alpha2"


@dataclass(frozen=True)
class SeedSpec:
    kind: SeedKind
    case_id: Optional[int] = None
    phi: float = 0.0
    c: float = 0.0
    extra: Optional[float] = None


def zero_seed() -> AnalyticSolution:
    """The trivial solution of every case's equation."""

    def val(x1, x2):
        return np.zeros(np.broadcast(x1, x2).shape)

    return AnalyticSolution(
        eval=val,
        grad=lambda x1, x2: (val(x1, x2), val(x1, x2)),
        hess=lambda x1, x2: (val(x1, x2), val(x1, x2)),
        name="zero",
    )


def _arctan_kink(xi):
    # 4*arctan(exp(xi)) rewritten through the Gudermannian to avoid overflow
    return np.pi + 2 * np.arcsin(np.tanh(xi))


def _log_tanh_kink(xi):
    # 2*ln tanh(-xi/2) for xi < 0, accurate near both ends
    e = np.exp(xi)
    return 2 * (np.log1p(-e) - np.log1p(e))


def kink_seed(case: CaseConfig, phi: float, c: float = 0.0, guard: float = DOMAIN_GUARD) -> AnalyticSolution:
    """One-kink solution obtained by transforming the trivial solution.

    xi = x1/lambda - delta*tau*(Lambda/lambda)*x2 + c.  For r=0 the kink is
    4*arctan(e^xi) on all of R^2; for r=1 it is 2*ln tanh(-xi/2) on xi < 0.
    The exact gradient is (2/lambda)*S(a/2) in x1 and
    -(2*delta*tau*Lambda/lambda)*S(a/2) in x2 with S the r-matched sine.
    """
    p = congruence_params(case, phi)
    lam, Lam = p.lam, p.Lam
    k1 = 1.0 / lam
    k2 = -case.delta * case.tau * Lam / lam

    def xi(x1, x2):
        return k1 * x1 + k2 * x2 + c

    if case.r == 0:

        def val(x1, x2):
            return _arctan_kink(xi(x1, x2))

        def half_sine(x1, x2):
            # sin(alpha/2) = sech(xi)
            return 1.0 / np.cosh(np.clip(xi(x1, x2), -700, 700))

        domain = None
        nonlinearity = np.sin
    else:

        def val(x1, x2):
            return _log_tanh_kink(xi(x1, x2))

        def half_sine(x1, x2):
            # sinh(alpha/2) = 1/sinh(xi)
            return 1.0 / np.sinh(xi(x1, x2))

        def domain(x1, x2):
            return xi(x1, x2) < -guard

        nonlinearity = np.sinh

    def grad(x1, x2):
        s = half_sine(x1, x2)
        return (2.0 / lam) * s, (-2.0 * case.delta * case.tau * Lam / lam) * s

    def hess(x1, x2):
        S = nonlinearity(val(x1, x2))
        return S / lam**2, (Lam**2 / lam**2) * S

    return AnalyticSolution(
        eval=val, grad=grad, hess=hess, domain=domain,
        name=f"kink(case {case.case_id}, phi={phi:g}, c={c:g})",
    )


def _example4_alpha() -> AnalyticSolution:
    """4*arctan(e^x1): x1-independent front solving the elliptic sine equation."""

    def val(x1, x2):
        x1, _ = np.broadcast_arrays(x1, x2)
        return _arctan_kink(x1)

    def grad(x1, x2):
        x1, x2 = np.broadcast_arrays(x1, x2)
        return 2.0 / np.cosh(np.clip(x1, -700, 700)), np.zeros_like(x2)

    def hess(x1, x2):
        x1, x2 = np.broadcast_arrays(x1, x2)
        sech = 1.0 / np.cosh(np.clip(x1, -700, 700))
        return -2.0 * sech * np.tanh(x1), np.zeros_like(x2)

    return AnalyticSolution(eval=val, grad=grad, hess=hess, name="example4-alpha")


def _example4_alpha1(c1: float, guard: float) -> AnalyticSolution:
    """tanh(a/4) = (c1 - x2)*sech(x1), between the curves x2 = c1 -+ cosh(x1)."""

    def w(x1, x2):
        return (c1 - x2) / np.cosh(x1)

    def val(x1, x2):
        return 4.0 * np.arctanh(w(x1, x2))

    def grad(x1, x2):
        ww = w(x1, x2)
        den = 1.0 - ww**2
        return -4.0 * ww * np.tanh(x1) / den, -4.0 / (np.cosh(x1) * den)

    def hess(x1, x2):
        ww = w(x1, x2)
        den = 1.0 - ww**2
        sech2 = 1.0 / np.cosh(x1) ** 2
        t2 = np.tanh(x1) ** 2
        d11 = -4.0 * ww * sech2 / den + 4.0 * ww * t2 * (1.0 + ww**2) / den**2
        d22 = 8.0 * ww * sech2 / den**2
        return d11, d22

    def domain(x1, x2):
        return np.abs(w(x1, x2)) < 1.0 - guard

    return AnalyticSolution(eval=val, grad=grad, hess=hess, domain=domain,
                            name=f"example4-alpha1(c1={c1:g})")


def _example4_alpha2(phi2: float, c2: float, guard: float) -> AnalyticSolution:
    """The general-parameter companion of alpha1, tanh(a/2) given explicitly.

    tanh(a/2) = sinh(phi2)*(sinh(xi) - sinh(x1)) /
                (sinh(xi)*sinh(x1) + 1 - cosh(phi2)*cosh(xi)*cosh(x1)),
    xi = (x1 + sinh(phi2)*x2)/cosh(phi2) + c2.  Valid away from its two
    singular curves (|ratio| -> 1) and the zeros of the denominator.
    """
    sh, ch = np.sinh(phi2), np.cosh(phi2)

    def ratio(x1, x2):
        xi = (x1 + sh * x2) / ch + c2
        num = sh * (np.sinh(xi) - np.sinh(x1))
        den = np.sinh(xi) * np.sinh(x1) + 1.0 - ch * np.cosh(xi) * np.cosh(x1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return num / den, den

    def val(x1, x2):
        v, _ = ratio(x1, x2)
        return 2.0 * np.arctanh(v)

    def domain(x1, x2):
        v, den = ratio(x1, x2)
        scale = 1.0 + np.abs(np.sinh(x1))
        return (np.abs(v) < 1.0 - guard) & (np.abs(den) > guard * scale)

    return AnalyticSolution(eval=val, domain=domain,
                            name=f"example4-alpha2(phi2={phi2:g}, c2={c2:g})")


def example_solution(spec: SeedSpec, guard: float = DOMAIN_GUARD) -> AnalyticSolution:
    """Named closed forms beyond the plain kinks."""
    if spec.kind is SeedKind.EXAMPLE2_ALPHA:
        # the time-like kink family of the worked sinh-Gordon lattice
        if spec.case_id not in (None, 4):
            raise UnknownSpec("example2-alpha is a case-4 family")
        return kink_seed(case_by_id(4, tau=-1), spec.phi, spec.c, guard)
    if spec.kind is SeedKind.EXAMPLE4_ALPHA:
        return _example4_alpha()
    if spec.kind is SeedKind.EXAMPLE4_ALPHA1:
        if spec.case_id not in (None, 6):
            raise UnknownSpec("example4-alpha1 is a case-6 solution")
        return _example4_alpha1(spec.c, guard)
    if spec.kind is SeedKind.EXAMPLE4_ALPHA2:
        if spec.case_id not in (None, 6):
            raise UnknownSpec("example4-alpha2 is a case-6 solution")
        return _example4_alpha2(spec.phi, spec.c, guard)
    raise UnknownSpec(f"no closed form for {spec.kind}")


def seed_solution(spec: SeedSpec, case: Optional[CaseConfig] = None,
                  guard: float = DOMAIN_GUARD) -> AnalyticSolution:
    """Uniform entry point used by the command line."""
    if spec.kind is SeedKind.ZERO:
        return zero_seed()
    if spec.kind is SeedKind.KINK:
        if case is None:
            case = case_by_id(spec.case_id) if spec.case_id else None
        if case is None:
            raise UnknownSpec("kink seed needs a case")
        return kink_seed(case, spec.phi, spec.c, guard)
    return example_solution(spec, guard)
