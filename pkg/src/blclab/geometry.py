"""Constant-curvature surfaces in flat 3-space with signature (+, +, (-1)^s).

Built-in parametrized surfaces paired with their angle functions, fundamental
forms (closed-form from a solution, or discrete from a mesh), Gaussian
curvature through the signature-aware Gauss equation, the tangent-line
surface transformation, and the line-congruence certificate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .case import (
    AnalyticSolution,
    CaseConfig,
    CongruenceParams,
    GridMismatch,
    ScalarField,
    _check_axis,
    case_by_id,
    cs_pair,
)
from .seeds import SeedKind, SeedSpec, example_solution, kink_seed

NORMAL_GUARD = 1e-12
METRIC_GUARD = 1e-12
ALPHA_GUARD = 1e-9


class DegenerateMetric(ValueError):
    """Induced metric determinant vanishes everywhere it was sampled."""


class DegenerateAlpha(ValueError):
    """Angle function hits a zero of C or S everywhere it was sampled."""


class GridContainsSingularAxis(ValueError):
    """Requested grid crosses a curve where the surface formula blows up."""


def pseudo_dot(s: int, u, v):
    """Inner product with metric diag(1, 1, (-1)^s) on the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sign = (-1) ** s
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + sign * u[..., 2] * v[..., 2]


def pseudo_cross(s: int, u, v):
    """Vector pseudo-orthogonal to u and v: the metric applied to u x v."""
    n = np.cross(u, v)
    n = np.asarray(n, dtype=float).copy()
    n[..., 2] *= (-1) ** s
    return n


def unit_normal(s: int, t1, t2, guard: float = NORMAL_GUARD):
    """Unit pseudo-normal of a tangent pair, its causal sign, and validity.

    Normalized by |<n, n>| = 1; nodes where the raw normal is light-like
    relative to its Euclidean size are masked.
    """
    n = pseudo_cross(s, t1, t2)
    nn = pseudo_dot(s, n, n)
    size = np.einsum("...k,...k->...", n, n)
    ok = np.abs(nn) > guard * np.maximum(size, 1e-300)
    with np.errstate(all="ignore"):
        unit = n / np.sqrt(np.abs(nn))[..., None]
    return unit, np.sign(nn), ok


# ---------------------------------------------------------------------------
# Meshes and built-in surfaces
# ---------------------------------------------------------------------------


@dataclass
class SurfaceMesh:
    """An immersion sample; points[i, j] = X(x1[i], x2[j]) in R^3_s."""

    x1_axis: np.ndarray
    x2_axis: np.ndarray
    points: np.ndarray
    s: int
    valid: np.ndarray
    tangent_fn: Optional[Callable] = None

    def __post_init__(self):
        self.x1_axis = _check_axis(self.x1_axis)
        self.x2_axis = _check_axis(self.x2_axis)
        self.points = np.asarray(self.points, dtype=float)
        shape = (self.x1_axis.size, self.x2_axis.size, 3)
        if self.points.shape != shape:
            raise GridMismatch(f"points shape {self.points.shape} != {shape}")
        if self.valid is None:
            self.valid = np.isfinite(self.points).all(axis=-1)
        self.valid = np.asarray(self.valid, dtype=bool)

    @property
    def h1(self) -> float:
        return float(self.x1_axis[1] - self.x1_axis[0])

    @property
    def h2(self) -> float:
        return float(self.x2_axis[1] - self.x2_axis[0])

    def meshgrid(self):
        return np.meshgrid(self.x1_axis, self.x2_axis, indexing="ij")

    def same_grid(self, other: "SurfaceMesh") -> bool:
        return (
            self.x1_axis.size == other.x1_axis.size
            and self.x2_axis.size == other.x2_axis.size
            and np.allclose(self.x1_axis, other.x1_axis, atol=1e-12)
            and np.allclose(self.x2_axis, other.x2_axis, atol=1e-12)
        )

    def tangents(self):
        """Tangent vector fields, exact when available, else central differences.

        Difference tangents are NaN on the boundary ring and next to invalid
        nodes; the accompanying mask reflects that.
        """
        X1, X2 = self.meshgrid()
        if self.tangent_fn is not None:
            t1, t2 = self.tangent_fn(X1, X2)
            return np.asarray(t1, float), np.asarray(t2, float), self.valid.copy()
        pts = np.where(self.valid[..., None], self.points, np.nan)
        t1 = np.full_like(pts, np.nan)
        t2 = np.full_like(pts, np.nan)
        t1[1:-1, :, :] = (pts[2:, :, :] - pts[:-2, :, :]) / (2 * self.h1)
        t2[:, 1:-1, :] = (pts[:, 2:, :] - pts[:, :-2, :]) / (2 * self.h2)
        ok = np.isfinite(t1).all(axis=-1) & np.isfinite(t2).all(axis=-1) & self.valid
        return t1, t2, ok


@dataclass
class ParametricSurface:
    """Closed-form immersion with optional exact tangents."""

    eval: Callable
    s: int
    tangents: Optional[Callable] = None
    domain: Optional[Callable] = None
    grid_check: Optional[Callable] = None
    name: str = ""

    def __call__(self, x1, x2):
        return self.eval(np.asarray(x1, float), np.asarray(x2, float))


def sample_surface(ps: ParametricSurface, x1_axis, x2_axis) -> SurfaceMesh:
    x1_axis = _check_axis(np.asarray(x1_axis, float))
    x2_axis = _check_axis(np.asarray(x2_axis, float))
    if ps.grid_check is not None:
        ps.grid_check(x1_axis, x2_axis)
    X1, X2 = np.meshgrid(x1_axis, x2_axis, indexing="ij")
    with np.errstate(all="ignore"):
        pts = np.asarray(ps.eval(X1, X2), dtype=float)
    ok = np.isfinite(pts).all(axis=-1)
    if ps.domain is not None:
        ok &= np.asarray(ps.domain(X1, X2), dtype=bool)
    return SurfaceMesh(x1_axis, x2_axis, pts, ps.s, ok, tangent_fn=ps.tangents)


class SurfaceName(enum.Enum):
    TIMELIKE_K1 = "timelike-k1"
    TIMELIKE_KMINUS1 = "timelike-kminus1"


def builtin_surface(name):
    """A named surface, its paired angle function, and the case it realizes.

    timelike-k1: the curvature +1 time-like surface whose angle function is
    the phi = pi/2 kink of the sinh-Gordon case (defined on x1 < 0; the
    immersion itself only needs x1 != 0).
    timelike-kminus1: the curvature -1 time-like surface paired with
    4*arctan(e^x1) of the elliptic sine case.
    """
    name = SurfaceName(name.value if isinstance(name, SurfaceName) else str(name))
    if name is SurfaceName.TIMELIKE_K1:

        def val(x1, x2):
            sh = np.sinh(x1)
            return np.stack(
                [np.cos(x2) / sh, np.sin(x2) / sh, x1 - np.cosh(x1) / sh], axis=-1
            )

        def tangents(x1, x2):
            sh, ch = np.sinh(x1), np.cosh(x1)
            t1 = np.stack(
                [-np.cos(x2) * ch / sh**2, -np.sin(x2) * ch / sh**2, 1 + 1.0 / sh**2],
                axis=-1,
            )
            t2 = np.stack([-np.sin(x2) / sh, np.cos(x2) / sh, np.zeros_like(x2)], axis=-1)
            return t1, t2

        def grid_check(x1_axis, x2_axis):
            if np.any(np.abs(x1_axis) < 1e-9):
                raise GridContainsSingularAxis("timelike-k1 blows up on x1 = 0")

        case = case_by_id(4, tau=-1)
        surface = ParametricSurface(eval=val, s=1, tangents=tangents,
                                    grid_check=grid_check, name=name.value)
        alpha = kink_seed(case, np.pi / 2)
        return surface, alpha, case

    if name is SurfaceName.TIMELIKE_KMINUS1:

        def val(x1, x2):
            sech = 1.0 / np.cosh(x1)
            return np.stack(
                [x1 - np.tanh(x1), sech * np.cosh(x2), sech * np.sinh(x2)], axis=-1
            )

        def tangents(x1, x2):
            sech = 1.0 / np.cosh(x1)
            th = np.tanh(x1)
            t1 = np.stack(
                [th**2, -sech * th * np.cosh(x2), -sech * th * np.sinh(x2)], axis=-1
            )
            t2 = np.stack(
                [np.zeros_like(x1), sech * np.sinh(x2), sech * np.cosh(x2)], axis=-1
            )
            return t1, t2

        case = case_by_id(6, tau=1)
        surface = ParametricSurface(eval=val, s=1, tangents=tangents, name=name.value)
        alpha = example_solution(SeedSpec(kind=SeedKind.EXAMPLE4_ALPHA))
        return surface, alpha, case

    raise ValueError(f"unknown surface {name!r}")


# ---------------------------------------------------------------------------
# Fundamental forms and curvature
# ---------------------------------------------------------------------------


@dataclass
class FormCoefficients:
    """First (E, F, G) and second (L, M, N) form coefficients on a grid."""

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    valid: np.ndarray
    normal_sign: np.ndarray  # <N, N> of the unit normal, +-1 per node

    def det_first(self):
        return self.E * self.G - self.F**2

    def curvature(self, guard: float = METRIC_GUARD):
        """Gaussian curvature sign(<N,N>) * det(II)/det(I), masked where det(I) ~ 0."""
        det1 = self.det_first()
        scale = self.E**2 + 2 * self.F**2 + self.G**2
        ok = self.valid & (np.abs(det1) > guard * np.maximum(scale, 1e-300))
        with np.errstate(all="ignore"):
            K = self.normal_sign * (self.L * self.N - self.M**2) / det1
        return K, ok & np.isfinite(K)


def fundamental_forms_from_alpha(alpha, case: CaseConfig, x1_axis=None, x2_axis=None) -> FormCoefficients:
    """Closed-form coefficients of the two forms carried by a solution.

    E = eps*C_l^2(a/2), G = (-1)^r eps*S_l^2(a/2), F = M = 0 (the coordinates
    are curvature-line coordinates), L = tau*eps*S*C and
    N = -tau*(-1)^r*eps*l*S*C; the implied Gaussian curvature is the case's
    delta identically.
    """
    if isinstance(alpha, AnalyticSolution):
        from .case import sample

        alpha = sample(alpha, x1_axis, x2_axis)
    if not isinstance(alpha, ScalarField):
        raise TypeError(f"expected field or closed form, got {type(alpha)!r}")
    vals = np.where(alpha.valid, alpha.values, np.nan)
    C, S = cs_pair(case.l, vals / 2.0)
    eps, r, tau, l = case.epsilon, case.r, case.tau, case.l
    E = eps * C**2
    G = (-1) ** r * eps * S**2
    SC = S * C
    L = tau * eps * SC
    N = -tau * (-1) ** r * eps * l * SC
    zero = np.zeros_like(E)
    sign = np.full(E.shape, float((-1) ** (r + case.s)))
    ok = alpha.valid & np.isfinite(E) & np.isfinite(G)
    return FormCoefficients(E=E, F=zero, G=G, L=L, M=zero, N=N, valid=ok, normal_sign=sign)


def surface_forms(X: SurfaceMesh, guard: float = NORMAL_GUARD) -> FormCoefficients:
    """Discrete fundamental forms of a mesh via 5-point stencils."""
    t1, t2, ok = X.tangents()
    pts = np.where(X.valid[..., None], X.points, np.nan)
    h1, h2 = X.h1, X.h2
    if X.tangent_fn is not None:
        # differentiate the exact tangent fields once
        d11 = np.full_like(pts, np.nan)
        d22 = np.full_like(pts, np.nan)
        d12 = np.full_like(pts, np.nan)
        d11[1:-1, :, :] = (t1[2:, :, :] - t1[:-2, :, :]) / (2 * h1)
        d22[:, 1:-1, :] = (t2[:, 2:, :] - t2[:, :-2, :]) / (2 * h2)
        d12[:, 1:-1, :] = (t1[:, 2:, :] - t1[:, :-2, :]) / (2 * h2)
    else:
        d11 = np.full_like(pts, np.nan)
        d22 = np.full_like(pts, np.nan)
        d12 = np.full_like(pts, np.nan)
        d11[1:-1, :, :] = (pts[2:, :, :] - 2 * pts[1:-1, :, :] + pts[:-2, :, :]) / h1**2
        d22[:, 1:-1, :] = (pts[:, 2:, :] - 2 * pts[:, 1:-1, :] + pts[:, :-2, :]) / h2**2
        d12[1:-1, 1:-1, :] = (
            pts[2:, 2:, :] - pts[2:, :-2, :] - pts[:-2, 2:, :] + pts[:-2, :-2, :]
        ) / (4 * h1 * h2)

    normal, sign, n_ok = unit_normal(X.s, t1, t2, guard)
    E = pseudo_dot(X.s, t1, t1)
    F = pseudo_dot(X.s, t1, t2)
    G = pseudo_dot(X.s, t2, t2)
    L = pseudo_dot(X.s, d11, normal)
    M = pseudo_dot(X.s, d12, normal)
    N = pseudo_dot(X.s, d22, normal)
    ok = ok & n_ok & np.isfinite(L) & np.isfinite(M) & np.isfinite(N)
    return FormCoefficients(E=E, F=F, G=G, L=L, M=M, N=N, valid=ok, normal_sign=sign)


def numerical_curvature(X: SurfaceMesh, guard: float = METRIC_GUARD) -> ScalarField:
    """Gaussian curvature of a mesh from discrete forms and the unit normal."""
    forms = surface_forms(X)
    K, ok = forms.curvature(guard)
    if not ok.any():
        raise DegenerateMetric("induced metric is degenerate on the whole sample")
    return ScalarField(X.x1_axis, X.x2_axis, K, ok)


def detect_index(X: SurfaceMesh) -> int:
    """Index of the induced metric: 0 definite, 1 Lorentzian (from sign of det I)."""
    forms = surface_forms(X)
    det1 = forms.det_first()
    m = forms.valid & np.isfinite(det1)
    if not m.any():
        raise DegenerateMetric("no valid nodes to classify")
    return 0 if np.median(det1[m]) > 0 else 1


def predicted_index(case: CaseConfig) -> int:
    """Index of the transformed surface: (-1)^rbar = delta*(-1)^(s+r+1)."""
    return 0 if case.delta * (-1) ** (case.s + case.r + 1) == 1 else 1


# ---------------------------------------------------------------------------
# The surface transformation and its certificate
# ---------------------------------------------------------------------------


def _field_on(obj, x1_axis, x2_axis):
    if isinstance(obj, AnalyticSolution):
        from .case import sample

        f = sample(obj, x1_axis, x2_axis)
        return f.values, f.valid
    if isinstance(obj, ScalarField):
        if not (obj.x1_axis.size == x1_axis.size and obj.x2_axis.size == x2_axis.size
                and np.allclose(obj.x1_axis, x1_axis, atol=1e-12)
                and np.allclose(obj.x2_axis, x2_axis, atol=1e-12)):
            raise GridMismatch("field grid does not match the mesh")
        return np.where(obj.valid, obj.values, np.nan), obj.valid.copy()
    raise TypeError(f"cannot place {type(obj)!r} on the mesh grid")


def transform_surface(X: SurfaceMesh, alpha, alpha_prime, case: CaseConfig,
                      params: CongruenceParams, guard: float = ALPHA_GUARD) -> SurfaceMesh:
    """Displace a surface along the congruence determined by (alpha, alpha').

    Xbar = X + lambda*(C_{(-1)^r}(a'/2)/C_l(a/2) * X_x1
                       + S_{(-1)^r}(a'/2)/S_l(a/2) * X_x2);
    nodes where C_l or S_l of the seed angle vanish are masked.
    """
    a_val, a_ok = _field_on(alpha, X.x1_axis, X.x2_axis)
    p_val, p_ok = _field_on(alpha_prime, X.x1_axis, X.x2_axis)
    t1, t2, t_ok = X.tangents()
    with np.errstate(all="ignore"):
        Cl, Sl = cs_pair(case.l, a_val / 2.0)
        Cr, Sr = cs_pair(case.primed_index, p_val / 2.0)
        scale = np.abs(Cl) + np.abs(Sl)
        coeff_ok = (np.abs(Cl) > guard * scale) & (np.abs(Sl) > guard * scale)
        c1 = params.lam * Cr / Cl
        c2 = params.lam * Sr / Sl
        pts = X.points + c1[..., None] * t1 + c2[..., None] * t2
    ok = X.valid & a_ok & p_ok & t_ok & coeff_ok & np.isfinite(pts).all(axis=-1)
    if not ok.any():
        raise DegenerateAlpha("angle function degenerate on the whole sample")
    return SurfaceMesh(X.x1_axis, X.x2_axis, pts, X.s, ok)


@dataclass
class CongruenceReport:
    """Per-node deviations from the three line-congruence conditions."""

    vv_dev: np.ndarray        # <v,v> - eps*lambda^2
    length_dev: np.ndarray    # sqrt|<v,v>| - lambda
    normal_dev: np.ndarray    # |<N, Nbar>| - |Lambda|
    tangency_dev: np.ndarray  # max(|<v,N>|, |<v,Nbar>|) / lambda
    valid: np.ndarray

    def _stat(self, arr, fn):
        m = self.valid & np.isfinite(arr)
        return float(fn(np.abs(arr[m]))) if m.any() else np.nan

    @property
    def max_vv(self):
        return self._stat(self.vv_dev, np.max)

    @property
    def max_length(self):
        return self._stat(self.length_dev, np.max)

    @property
    def max_normal(self):
        return self._stat(self.normal_dev, np.max)

    @property
    def max_tangency(self):
        return self._stat(self.tangency_dev, np.max)

    def summary(self) -> dict:
        return {
            "max_vv_dev": self.max_vv,
            "mean_vv_dev": self._stat(self.vv_dev, np.mean),
            "max_length_dev": self.max_length,
            "max_normal_dev": self.max_normal,
            "mean_normal_dev": self._stat(self.normal_dev, np.mean),
            "max_tangency_dev": self.max_tangency,
            "checked_nodes": int(self.valid.sum()),
        }


def congruence_check(X: SurfaceMesh, Xbar: SurfaceMesh, case: CaseConfig,
                     params: CongruenceParams) -> CongruenceReport:
    """Deviation statistics for |v| = lambda, <N, Nbar> = Lambda, bi-tangency.

    The unit normals from the discrete construction are only defined up to
    sign, so the normal condition is compared in absolute value.
    """
    if not X.same_grid(Xbar):
        raise GridMismatch("congruence check needs a common grid")
    v = Xbar.points - X.points
    vv = pseudo_dot(X.s, v, v)
    t1, t2, ok1 = X.tangents()
    N, _, okn = unit_normal(X.s, t1, t2)
    tb1, tb2, ok2 = Xbar.tangents()
    Nb, _, oknb = unit_normal(Xbar.s, tb1, tb2)
    lam, Lam, eps = params.lam, params.Lam, case.epsilon
    with np.errstate(all="ignore"):
        vv_dev = vv - eps * lam**2
        length_dev = np.sqrt(np.abs(vv)) - lam
        normal_dev = np.abs(pseudo_dot(X.s, N, Nb)) - abs(Lam)
        tang = np.maximum(np.abs(pseudo_dot(X.s, v, N)), np.abs(pseudo_dot(X.s, v, Nb))) / lam
    valid = X.valid & Xbar.valid & ok1 & ok2 & okn & oknb
    return CongruenceReport(vv_dev=vv_dev, length_dev=length_dev,
                            normal_dev=normal_dev, tangency_dev=tang, valid=valid)
