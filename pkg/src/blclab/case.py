"""Case algebra shared by every other module.

The six admissible parameter tuples (delta, epsilon, r, s), the generalized
trig pair C/S with C^2 + xi*S^2 = 1, the lambda/Lambda relation, and the
second-order residual operator that decides whether a sampled or closed-form
function solves its Gordon-type equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class InvalidCase(ValueError):
    """Parameter tuple is not one of the six admissible cases."""


class PhiOutOfRange(ValueError):
    """Angle parameter outside the case's admissible interval."""


class GridTooSmall(ValueError):
    """Not enough nodes for the finite-difference stencils."""


class GridMismatch(ValueError):
    """Two fields that must share a grid do not."""


# case_id -> (delta, epsilon, r, s)
_CASE_TUPLES = {
    1: (-1, 1, 0, 0),
    2: (1, 1, 0, 1),
    3: (1, 1, 1, 1),
    4: (1, -1, 1, 1),
    5: (-1, 1, 0, 1),
    6: (-1, 1, 1, 1),
}
_CASE_IDS = {tup: cid for cid, tup in _CASE_TUPLES.items()}

# shape of (lambda, Lambda) as functions of phi, and the phi interval
_LAMBDA_SHAPE = {
    1: "sin-cos",
    2: "sinh-cosh",
    3: "sinh-cosh",
    4: "sin-cos",
    5: "cosh-sinh",
    6: "cosh-sinh",
}
_PHI_RANGE = {
    1: (0.0, np.pi, False),
    2: (0.0, np.inf, False),
    3: (0.0, np.inf, False),
    4: (0.0, np.pi, False),
    5: (0.0, np.inf, True),  # closed at 0
    6: (0.0, np.inf, True),
}


@dataclass(frozen=True)
class CaseConfig:
    """One row of the six-case table, with derived quantities."""

    delta: int
    epsilon: int
    r: int
    s: int
    tau: int
    l: int
    case_id: int

    @property
    def primed_index(self) -> int:
        """Subscript of S in the equation the transformed function solves."""
        return (-1) ** self.r

    @property
    def original_index(self) -> int:
        """Subscript of S in the equation the starting function solves."""
        return self.l

    @property
    def operator_sign(self) -> int:
        """Coefficient of the x2 second derivative: -1 wave, +1 Laplacian.

        Equals delta*(-1)^s; the explicit per-case systems fix this sign
        (the epsilon = -1 case is hyperbolic, not elliptic).
        """
        return self.delta * (-1) ** self.s

    @property
    def rhs_sign(self) -> int:
        """Sign of S on the right-hand side of the equation."""
        return -self.epsilon * self.delta

    @property
    def is_elliptic(self) -> bool:
        return self.operator_sign == 1

    @property
    def partner_case_id(self) -> int:
        """Case whose starting equation is this case's transformed equation."""
        if self.case_id == 5:
            return 6
        if self.case_id == 6:
            return 5
        return self.case_id

    def partner(self) -> "CaseConfig":
        tup = _CASE_TUPLES[self.partner_case_id]
        return derive_case(*tup, self.tau)

    def equation_name(self, index_flag: int = 0) -> str:
        idx = self.original_index if index_flag == 0 else self.primed_index
        if self.is_elliptic:
            return "elliptic-sine-gordon" if idx == 1 else "elliptic-sinh-gordon"
        name = "sine-gordon" if idx == 1 else "sinh-gordon"
        return name if self.rhs_sign == 1 else name + "-negative"


def derive_case(delta: int, epsilon: int, r: int, s: int, tau: int) -> CaseConfig:
    """Validate a parameter tuple and return its CaseConfig.

    Raises InvalidCase unless (delta, epsilon, r, s) is one of the six
    admissible combinations and tau is a sign.
    """
    if delta not in (-1, 1) or epsilon not in (-1, 1) or tau not in (-1, 1):
        raise InvalidCase(f"signs must be +-1, got delta={delta} epsilon={epsilon} tau={tau}")
    if r not in (0, 1) or s not in (0, 1):
        raise InvalidCase(f"indices must be 0 or 1, got r={r} s={s}")
    if delta == 1 and s != 1:
        raise InvalidCase("delta=+1 requires s=1")
    if r > s:
        raise InvalidCase(f"need r <= s, got r={r} s={s}")
    if epsilon == -1 and not (delta == 1 and r == 1 and s == 1):
        raise InvalidCase("epsilon=-1 is admissible only with delta=+1, r=s=1")
    key = (delta, epsilon, r, s)
    if key not in _CASE_IDS:
        raise InvalidCase(f"tuple {key} is not one of the six cases")
    case_id = _CASE_IDS[key]
    l = (-1) ** (r + s + 1) * delta
    return CaseConfig(delta=delta, epsilon=epsilon, r=r, s=s, tau=tau, l=l, case_id=case_id)


def case_by_id(case_id: int, tau: int = 1) -> CaseConfig:
    if case_id not in _CASE_TUPLES:
        raise InvalidCase(f"case_id must be 1..6, got {case_id}")
    return derive_case(*_CASE_TUPLES[case_id], tau)


def all_cases(tau: int = 1) -> list[CaseConfig]:
    return [case_by_id(cid, tau) for cid in range(1, 7)]


@dataclass(frozen=True)
class CongruenceParams:
    """Distance lambda and normal inner product Lambda for one angle phi."""

    phi: float
    lam: float
    Lam: float
    case_id: int

    def relation_defect(self, case: CaseConfig) -> float:
        """Residual of delta*[(-1)^(s+1) Lambda^2 - lambda^2 epsilon] = 1."""
        lhs = case.delta * ((-1) ** (case.s + 1) * self.Lam**2 - self.lam**2 * case.epsilon)
        return float(lhs - 1.0)


def congruence_params(case: CaseConfig, phi: float) -> CongruenceParams:
    """Map phi to (lambda, Lambda) for the case, enforcing the phi interval."""
    lo, hi, closed_lo = _PHI_RANGE[case.case_id]
    if not (phi > lo or (closed_lo and phi == lo)) or not (phi < hi):
        interval = ("[" if closed_lo else "(") + f"{lo}, {hi})"
        raise PhiOutOfRange(f"case {case.case_id} needs phi in {interval}, got {phi}")
    shape = _LAMBDA_SHAPE[case.case_id]
    if shape == "sin-cos":
        lam, Lam = np.sin(phi), np.cos(phi)
    elif shape == "sinh-cosh":
        lam, Lam = np.sinh(phi), np.cosh(phi)
    else:
        lam, Lam = np.cosh(phi), np.sinh(phi)
    return CongruenceParams(phi=float(phi), lam=float(lam), Lam=float(Lam), case_id=case.case_id)


def gen_trig(xi: int, phi):
    """Return (C, S, T): circular trig for xi=+1, hyperbolic for xi=-1.

    Defined on all of R; admissible phi ranges are enforced by
    congruence_params, not here.  Where C = 0 the tangent is +-inf.
    """
    phi = np.asarray(phi, dtype=float)
    if xi == 1:
        c, s = np.cos(phi), np.sin(phi)
    elif xi == -1:
        c, s = np.cosh(phi), np.sinh(phi)
    else:
        raise ValueError(f"xi must be +-1, got {xi}")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = s / c
    return c, s, t


def cs_pair(xi: int, phi):
    """(C_xi, S_xi) with hyperbolic arguments clamped to avoid overflow."""
    phi = np.asarray(phi, dtype=float)
    if xi == 1:
        return np.cos(phi), np.sin(phi)
    phi = np.clip(phi, -700.0, 700.0)
    return np.cosh(phi), np.sinh(phi)


# ---------------------------------------------------------------------------
# Fields and closed-form solutions
# ---------------------------------------------------------------------------


def uniform_axis(lo: float, hi: float, h: float) -> np.ndarray:
    """Uniformly spaced samples from lo to hi inclusive with spacing h."""
    if h <= 0:
        raise ValueError(f"spacing must be positive, got {h}")
    n = int(round((hi - lo) / h))
    if n < 1 or not np.isclose(lo + n * h, hi, rtol=0, atol=1e-9 * max(1.0, abs(hi))):
        raise ValueError(f"range {lo}:{hi} is not a whole number of steps of {h}")
    return lo + h * np.arange(n + 1)


def _check_axis(axis: np.ndarray) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2:
        raise GridTooSmall("axis needs at least 2 samples")
    steps = np.diff(axis)
    if steps.min() <= 0:
        raise ValueError("axis must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=1e-12):
        raise ValueError("axis must be uniformly spaced")
    return axis


@dataclass
class ScalarField:
    """A solution sample on a rectangular grid; values[i, j] = f(x1[i], x2[j])."""

    x1_axis: np.ndarray
    x2_axis: np.ndarray
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.x1_axis = _check_axis(self.x1_axis)
        self.x2_axis = _check_axis(self.x2_axis)
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.x1_axis.size, self.x2_axis.size)
        if self.values.shape != shape:
            raise GridMismatch(f"values shape {self.values.shape} != grid {shape}")
        if self.valid is None:
            self.valid = np.isfinite(self.values)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.valid.shape != shape:
            raise GridMismatch(f"valid shape {self.valid.shape} != grid {shape}")

    @property
    def h1(self) -> float:
        return float(self.x1_axis[1] - self.x1_axis[0])

    @property
    def h2(self) -> float:
        return float(self.x2_axis[1] - self.x2_axis[0])

    def meshgrid(self):
        return np.meshgrid(self.x1_axis, self.x2_axis, indexing="ij")

    def same_grid(self, other: "ScalarField") -> bool:
        return (
            self.x1_axis.size == other.x1_axis.size
            and self.x2_axis.size == other.x2_axis.size
            and np.allclose(self.x1_axis, other.x1_axis, rtol=0, atol=1e-12)
            and np.allclose(self.x2_axis, other.x2_axis, rtol=0, atol=1e-12)
        )

    def max_abs(self, mask=None) -> float:
        """Largest |value| over valid (optionally further masked) nodes."""
        m = self.valid if mask is None else (self.valid & mask)
        if not m.any():
            return np.nan
        return float(np.abs(self.values[m]).max())


@dataclass
class AnalyticSolution:
    """A closed-form solution: value, optional exact partials, and domain."""

    eval: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    domain: Optional[Callable] = None
    name: str = ""

    def __call__(self, x1, x2):
        return self.eval(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def grad_at(self, x1, x2):
        if self.grad is None:
            raise ValueError(f"solution {self.name or '<anon>'} has no closed-form gradient")
        return self.grad(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def domain_at(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.domain is None:
            return np.broadcast_to(True, np.broadcast(x1, x2).shape).copy()
        return np.asarray(self.domain(x1, x2), dtype=bool)


def sample(solution: AnalyticSolution, x1_axis, x2_axis) -> ScalarField:
    """Evaluate a closed form on a grid, masking nodes outside its domain."""
    x1_axis = _check_axis(np.asarray(x1_axis, dtype=float))
    x2_axis = _check_axis(np.asarray(x2_axis, dtype=float))
    X1, X2 = np.meshgrid(x1_axis, x2_axis, indexing="ij")
    ok = solution.domain_at(X1, X2)
    vals = np.full(X1.shape, np.nan)
    if ok.any():
        with np.errstate(all="ignore"):
            v = np.asarray(solution(X1, X2), dtype=float)
        vals[ok] = v[ok]
    ok = ok & np.isfinite(vals)
    return ScalarField(x1_axis, x2_axis, vals, ok)


# ---------------------------------------------------------------------------
# Finite differences and the residual operator
# ---------------------------------------------------------------------------


def central_gradient(values: np.ndarray, h1: float, h2: float):
    """Second-order central first differences; boundary entries are NaN."""
    d1 = np.full_like(values, np.nan)
    d2 = np.full_like(values, np.nan)
    d1[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * h1)
    d2[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h2)
    return d1, d2


def central_second(values: np.ndarray, h1: float, h2: float):
    """Second-order central second differences; boundary entries are NaN."""
    d11 = np.full_like(values, np.nan)
    d22 = np.full_like(values, np.nan)
    d11[1:-1, :] = (values[2:, :] - 2 * values[1:-1, :] + values[:-2, :]) / h1**2
    d22[:, 1:-1] = (values[:, 2:] - 2 * values[:, 1:-1] + values[:, :-2]) / h2**2
    return d11, d22


def stencil_valid(valid: np.ndarray) -> np.ndarray:
    """Nodes whose 5-point stencil is entirely valid (interior only)."""
    ok = np.zeros_like(valid)
    ok[1:-1, 1:-1] = (
        valid[1:-1, 1:-1]
        & valid[2:, 1:-1]
        & valid[:-2, 1:-1]
        & valid[1:-1, 2:]
        & valid[1:-1, :-2]
    )
    return ok


def pde_residual(alpha, case: CaseConfig, index_flag: int = 0, x1_axis=None, x2_axis=None) -> ScalarField:
    """Residual of the case's equation: u_11 + a*u_22 + eps*delta*S(u).

    a = delta*(-1)^s (wave operator for the four hyperbolic cases, Laplacian
    for the two elliptic ones).  index_flag selects the S subscript: 0 for
    the starting equation (subscript l), 1 for the transformed one
    (subscript (-1)^r); they agree in the self-transforming cases.

    Closed forms with exact second partials give machine-precision residuals;
    otherwise second-order central differences are used and the boundary ring
    is excluded.
    """
    if index_flag not in (0, 1):
        raise ValueError(f"index_flag must be 0 or 1, got {index_flag}")
    idx = case.original_index if index_flag == 0 else case.primed_index
    a = case.operator_sign
    b = case.epsilon * case.delta

    if isinstance(alpha, AnalyticSolution):
        if x1_axis is None or x2_axis is None:
            raise ValueError("grid axes are required to evaluate a closed form")
        f = sample(alpha, x1_axis, x2_axis)
        if alpha.hess is not None:
            X1, X2 = f.meshgrid()
            with np.errstate(all="ignore"):
                d11, d22 = alpha.hess(X1, X2)
                _, S = cs_pair(idx, f.values)
                res = d11 + a * d22 + b * S
            ok = f.valid & np.isfinite(res)
            return ScalarField(f.x1_axis, f.x2_axis, res, ok)
        alpha = f
    if not isinstance(alpha, ScalarField):
        raise TypeError(f"expected ScalarField or AnalyticSolution, got {type(alpha)!r}")

    if alpha.x1_axis.size < 3 or alpha.x2_axis.size < 3:
        raise GridTooSmall("need at least 3 nodes per direction for the residual stencil")
    vals = np.where(alpha.valid, alpha.values, np.nan)
    d11, d22 = central_second(vals, alpha.h1, alpha.h2)
    with np.errstate(all="ignore"):
        _, S = cs_pair(idx, vals)
        res = d11 + a * d22 + b * S
    ok = stencil_valid(alpha.valid) & np.isfinite(res)
    return ScalarField(alpha.x1_axis, alpha.x2_axis, res, ok)
