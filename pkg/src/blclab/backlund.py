"""The auto-Backlund machinery.

One generic first-order system covers all six cases; it is explicit in the
new function's partials, so producing a transformed solution is a pair of
marching one-step integrations on the grid (the row through the anchor
point, then every column).  A residual checker certifies that a candidate
pair actually satisfies a given system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .case import (
    AnalyticSolution,
    CaseConfig,
    CongruenceParams,
    GridMismatch,
    ScalarField,
    _check_axis,
    central_gradient,
    congruence_params,
    cs_pair,
    sample,
    stencil_valid,
)

DEFAULT_BLOWUP = 50.0


class SeedNotOnGrid(ValueError):
    """Anchor point is not a grid node."""


class AlphaUndefinedOnGrid(ValueError):
    """Starting solution cannot be evaluated where integration begins."""


@dataclass(frozen=True)
class BTSystem:
    """A case together with one admissible parameter choice."""

    case: CaseConfig
    params: CongruenceParams

    def __post_init__(self):
        if self.params.case_id != self.case.case_id:
            raise ValueError(
                f"params built for case {self.params.case_id}, system is case {self.case.case_id}"
            )


def bt_system(case: CaseConfig, phi: float) -> BTSystem:
    return BTSystem(case=case, params=congruence_params(case, phi))


def bt_gradient(sys: BTSystem, alpha_val, alpha_grad, alpha_prime_val):
    """Partials (d/dx1, d/dx2) of the transformed function.

    The first-order system is linear in the derivatives, so both are
    explicit in terms of the starting solution's value and gradient and the
    transformed value at the same point.
    """
    c, p = sys.case, sys.params
    a1, a2 = alpha_grad
    Cl, Sl = cs_pair(c.l, np.asarray(alpha_val, dtype=float) / 2.0)
    Cr, Sr = cs_pair(c.primed_index, np.asarray(alpha_prime_val, dtype=float) / 2.0)
    sgn_s = (-1) ** c.s
    d1 = sgn_s * c.delta * a2 + (2.0 / p.lam) * Sr * Cl \
        - (2.0 * sgn_s * c.tau * p.Lam / p.lam) * Cr * Sl
    d2 = -a1 - (2.0 / p.lam) * Cr * Sl \
        - (2.0 * c.delta * c.tau * p.Lam / p.lam) * Sr * Cl
    return d1, d2


def explicit_rhs(case_id: int, phi: float, tau: int, alpha_val, alpha_prime_val):
    """Right-hand sides of the six per-case systems, written out separately.

    Redundant with bt_gradient (whose derivative terms vanish for constant
    input); kept as an independent transcription so agreement between the
    generic system and the per-case ones is testable.
    """
    a = np.asarray(alpha_val, dtype=float) / 2.0
    ap = np.asarray(alpha_prime_val, dtype=float) / 2.0
    if case_id == 1:
        lam, Lam = np.sin(phi), np.cos(phi)
        r1 = 2 / lam * np.sin(ap) * np.cos(a) - 2 * tau * Lam / lam * np.cos(ap) * np.sin(a)
        r2 = -2 / lam * np.cos(ap) * np.sin(a) + 2 * tau * Lam / lam * np.sin(ap) * np.cos(a)
    elif case_id == 2:
        lam, Lam = np.sinh(phi), np.cosh(phi)
        r1 = 2 / lam * np.sin(ap) * np.cos(a) + 2 * tau * Lam / lam * np.cos(ap) * np.sin(a)
        r2 = -2 / lam * np.cos(ap) * np.sin(a) - 2 * tau * Lam / lam * np.sin(ap) * np.cos(a)
    elif case_id == 3:
        lam, Lam = np.sinh(phi), np.cosh(phi)
        r1 = 2 / lam * np.sinh(ap) * np.cosh(a) + 2 * tau * Lam / lam * np.cosh(ap) * np.sinh(a)
        r2 = -2 / lam * np.cosh(ap) * np.sinh(a) - 2 * tau * Lam / lam * np.sinh(ap) * np.cosh(a)
    elif case_id == 4:
        lam, Lam = np.sin(phi), np.cos(phi)
        r1 = 2 / lam * np.sinh(ap) * np.cosh(a) + 2 * tau * Lam / lam * np.cosh(ap) * np.sinh(a)
        r2 = -2 / lam * np.cosh(ap) * np.sinh(a) - 2 * tau * Lam / lam * np.sinh(ap) * np.cosh(a)
    elif case_id == 5:
        lam, Lam = np.cosh(phi), np.sinh(phi)
        r1 = 2 / lam * np.sin(ap) * np.cosh(a) + 2 * tau * Lam / lam * np.cos(ap) * np.sinh(a)
        r2 = -2 / lam * np.cos(ap) * np.sinh(a) + 2 * tau * Lam / lam * np.sin(ap) * np.cosh(a)
    elif case_id == 6:
        lam, Lam = np.cosh(phi), np.sinh(phi)
        r1 = 2 / lam * np.sinh(ap) * np.cos(a) + 2 * tau * Lam / lam * np.cosh(ap) * np.sin(a)
        r2 = -2 / lam * np.cosh(ap) * np.sin(a) + 2 * tau * Lam / lam * np.sinh(ap) * np.cos(a)
    else:
        raise ValueError(f"case_id must be 1..6, got {case_id}")
    return r1, r2


# ---------------------------------------------------------------------------
# Evaluating a starting solution anywhere on the grid
# ---------------------------------------------------------------------------


def _diff_step(h1: float, h2: float) -> float:
    return 1e-5 * max(1.0, h1, h2)


def as_evaluable(alpha, x1_axis=None, x2_axis=None):
    """(value, gradient, domain) callables for a solution or a sampled field.

    Sampled fields are interpolated with a bicubic spline, so they must be
    fully valid on their grid; partial fields should be re-supplied as
    closed forms instead.
    """
    if isinstance(alpha, AnalyticSolution):
        if alpha.grad is not None:
            return alpha.eval, alpha.grad, alpha.domain_at
        step = 1e-6

        def grad(x1, x2):
            d1 = (alpha.eval(x1 + step, x2) - alpha.eval(x1 - step, x2)) / (2 * step)
            d2 = (alpha.eval(x1, x2 + step) - alpha.eval(x1, x2 - step)) / (2 * step)
            return d1, d2

        return alpha.eval, grad, alpha.domain_at
    if isinstance(alpha, ScalarField):
        if not alpha.valid.all():
            raise AlphaUndefinedOnGrid(
                "sampled starting solution must be valid on the whole grid"
            )
        from scipy.interpolate import RectBivariateSpline

        spl = RectBivariateSpline(alpha.x1_axis, alpha.x2_axis, alpha.values, kx=3, ky=3)
        lo1, hi1 = alpha.x1_axis[0], alpha.x1_axis[-1]
        lo2, hi2 = alpha.x2_axis[0], alpha.x2_axis[-1]

        def val(x1, x2):
            x1, x2 = np.broadcast_arrays(x1, x2)
            return spl.ev(x1, x2)

        def grad(x1, x2):
            x1, x2 = np.broadcast_arrays(x1, x2)
            return spl.ev(x1, x2, dx=1), spl.ev(x1, x2, dy=1)

        def domain(x1, x2):
            x1, x2 = np.broadcast_arrays(x1, x2)
            tol = 1e-9
            return (x1 >= lo1 - tol) & (x1 <= hi1 + tol) & (x2 >= lo2 - tol) & (x2 <= hi2 + tol)

        return val, grad, domain
    raise TypeError(f"cannot evaluate {type(alpha)!r}")


def _locate(axis: np.ndarray, coord: float, label: str) -> int:
    i = int(np.argmin(np.abs(axis - coord)))
    if not np.isclose(axis[i], coord, rtol=1e-9, atol=1e-9):
        raise SeedNotOnGrid(f"{label}={coord} is not a grid node")
    return i


# ---------------------------------------------------------------------------
# Grid integration
# ---------------------------------------------------------------------------


def _rk4_march(axis, start_idx, y0, rhs, ok_step, substeps):
    """March a (possibly vector) state along one axis from a start node.

    rhs(x, y) is the derivative at coordinate x; ok_step(y) flags healthy
    entries.  Marching stops independently per entry once it goes bad; the
    returned valid mask is False from the first bad node onward.
    """
    n = axis.size
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    width = y0.size
    values = np.full((n, width), np.nan)
    valid = np.zeros((n, width), dtype=bool)
    start_ok = ok_step(y0)
    values[start_idx, start_ok] = y0[start_ok]
    valid[start_idx] = start_ok
    for direction in (1, -1):
        idx_range = range(start_idx, n - 1) if direction == 1 else range(start_idx, 0, -1)
        y = y0.copy()
        alive = start_ok.copy()
        for i in idx_range:
            x = axis[i]
            h = (axis[i + direction] - x) / substeps
            ids = np.nonzero(alive)[0]
            if ids.size == 0:
                break
            yy = y[ids]
            with np.errstate(all="ignore"):
                for k in range(substeps):
                    xk = x + k * h
                    k1 = rhs(xk, yy, ids)
                    k2 = rhs(xk + h / 2, yy + h / 2 * k1, ids)
                    k3 = rhs(xk + h / 2, yy + h / 2 * k2, ids)
                    k4 = rhs(xk + h, yy + h * k3, ids)
                    yy = yy + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            good = ok_step(yy)
            tgt = i + direction
            keep = ids[good]
            values[tgt, keep] = yy[good]
            valid[tgt, keep] = True
            alive[:] = False
            alive[keep] = True
            y[keep] = yy[good]
    return values, valid


def integrate_bt(
    sys: BTSystem,
    alpha,
    x1_axis,
    x2_axis,
    p0: Tuple[float, float],
    alpha_prime_0: float,
    *,
    substeps: int = 1,
    blowup: float = DEFAULT_BLOWUP,
    order: str = "rows",
) -> ScalarField:
    """Transform a solution on a grid by integrating the first-order system.

    Classical 4th-order one-step integration along the grid row through p0,
    then along every column (order="columns" transposes the sweep, which is
    a path-independence check).  Nodes where the new function exceeds the
    blow-up bound, leaves its branch, or where the starting solution is
    undefined are masked, and marching does not continue past them.
    """
    x1_axis = _check_axis(np.asarray(x1_axis, dtype=float))
    x2_axis = _check_axis(np.asarray(x2_axis, dtype=float))
    if order not in ("rows", "columns"):
        raise ValueError(f"order must be 'rows' or 'columns', got {order}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    i0 = _locate(x1_axis, p0[0], "p0.x1")
    j0 = _locate(x2_axis, p0[1], "p0.x2")

    val, grad, domain = as_evaluable(alpha)

    def defined(x1, x2):
        ok = domain(x1, x2)
        with np.errstate(all="ignore"):
            ok = ok & np.isfinite(val(x1, x2))
        return ok

    if not np.all(defined(np.asarray(p0[0]), np.asarray(p0[1]))):
        raise AlphaUndefinedOnGrid(f"starting solution undefined at p0={p0}")

    ap0 = float(alpha_prime_0)
    if not np.isfinite(ap0) or abs(ap0) > blowup:
        raise ValueError(f"initial value {ap0} violates the blow-up bound {blowup}")

    def rhs_pair(x1, x2, y):
        a = val(x1, x2)
        g = grad(x1, x2)
        return bt_gradient(sys, a, g, y)

    def ok_step(y):
        return np.isfinite(y) & (np.abs(y) <= blowup)

    if order == "rows":
        ax_a, ax_b, ia, ib = x1_axis, x2_axis, i0, j0

        def rhs_a(x, y, ids):  # along x1, fixed x2 = p0
            return rhs_pair(x, ax_b[ib], y)[0]

        def rhs_b(x, y, ids):  # along x2, vector of x1 columns
            return rhs_pair(ax_a[ids], x, y)[1]

    else:
        ax_a, ax_b, ia, ib = x2_axis, x1_axis, j0, i0

        def rhs_a(x, y, ids):
            return rhs_pair(ax_b[ib], x, y)[1]

        def rhs_b(x, y, ids):
            return rhs_pair(x, ax_a[ids], y)[0]

    seed_vals, seed_valid = _rk4_march(ax_a, ia, np.array([ap0]), rhs_a, ok_step, substeps)
    line_vals = seed_vals[:, 0]
    line_valid = seed_valid[:, 0]

    vals_ab, valid_ab = _rk4_march(
        ax_b, ib, np.where(line_valid, line_vals, np.nan), rhs_b,
        lambda y: np.isfinite(y) & (np.abs(y) <= blowup), substeps,
    )
    # _rk4_march output is indexed [b, a]; reorient to [x1, x2]
    values = vals_ab.T if order == "rows" else vals_ab
    valid = valid_ab.T if order == "rows" else valid_ab

    # the starting solution must itself be defined at a node we keep
    X1, X2 = np.meshgrid(x1_axis, x2_axis, indexing="ij")
    with np.errstate(all="ignore"):
        valid = valid & defined(X1, X2)
    return ScalarField(x1_axis, x2_axis, values, valid)


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------


def _values_and_grads(obj, x1_axis, x2_axis):
    """Values, partials, and validity of a field or closed form on a grid."""
    if isinstance(obj, AnalyticSolution):
        f = sample(obj, x1_axis, x2_axis)
        if obj.grad is not None:
            X1, X2 = f.meshgrid()
            with np.errstate(all="ignore"):
                d1, d2 = obj.grad(X1, X2)
            return f.values, d1, d2, f.valid
        obj = f
    if not isinstance(obj, ScalarField):
        raise TypeError(f"expected field or closed form, got {type(obj)!r}")
    if obj.x1_axis.size != x1_axis.size or obj.x2_axis.size != x2_axis.size or \
            not np.allclose(obj.x1_axis, x1_axis, atol=1e-12) or \
            not np.allclose(obj.x2_axis, x2_axis, atol=1e-12):
        raise GridMismatch("fields do not share a grid")
    vals = np.where(obj.valid, obj.values, np.nan)
    d1, d2 = central_gradient(vals, obj.h1, obj.h2)
    return vals, d1, d2, stencil_valid(obj.valid)


def _common_axes(objects, x1_axis, x2_axis):
    for obj in objects:
        if isinstance(obj, ScalarField):
            if x1_axis is None:
                x1_axis, x2_axis = obj.x1_axis, obj.x2_axis
            elif not (obj.x1_axis.size == len(x1_axis) and obj.x2_axis.size == len(x2_axis)
                      and np.allclose(obj.x1_axis, x1_axis, atol=1e-12)
                      and np.allclose(obj.x2_axis, x2_axis, atol=1e-12)):
                raise GridMismatch("fields do not share a grid")
    if x1_axis is None:
        raise ValueError("grid axes required when no input is a sampled field")
    return np.asarray(x1_axis, dtype=float), np.asarray(x2_axis, dtype=float)


def bt_residual(sys: BTSystem, alpha, alpha_prime, x1_axis=None, x2_axis=None):
    """Pointwise defect of both equations of the system for a pair (a, a').

    Exact gradients are used whenever a closed form carries them; sampled
    fields fall back to central differences (and the boundary ring plus
    invalid-adjacent nodes are masked).
    """
    x1_axis, x2_axis = _common_axes((alpha, alpha_prime), x1_axis, x2_axis)
    a_val, a_d1, a_d2, a_ok = _values_and_grads(alpha, x1_axis, x2_axis)
    p_val, p_d1, p_d2, p_ok = _values_and_grads(alpha_prime, x1_axis, x2_axis)
    with np.errstate(all="ignore"):
        rhs1, rhs2 = bt_gradient(sys, a_val, (a_d1, a_d2), p_val)
        res1 = p_d1 - rhs1
        res2 = p_d2 - rhs2
    ok = a_ok & p_ok & np.isfinite(res1) & np.isfinite(res2)
    return (
        ScalarField(x1_axis, x2_axis, res1, ok),
        ScalarField(x1_axis, x2_axis, res2, ok),
    )


def compatibility_defect(sys: BTSystem, alpha, x1_axis, x2_axis, alpha_prime) -> ScalarField:
    """Mixed-partial defect d2(a'_x1) - d1(a'_x2) of the system's right sides.

    Vanishes to second order exactly when the starting solution solves its
    equation; this is the integrability statement made checkable.
    """
    x1_axis, x2_axis = _common_axes((alpha, alpha_prime), x1_axis, x2_axis)
    a_val, a_d1, a_d2, a_ok = _values_and_grads(alpha, x1_axis, x2_axis)
    p_val, _, _, p_ok = _values_and_grads(alpha_prime, x1_axis, x2_axis)
    with np.errstate(all="ignore"):
        f1, f2 = bt_gradient(sys, a_val, (a_d1, a_d2), p_val)
    h1 = float(x1_axis[1] - x1_axis[0])
    h2 = float(x2_axis[1] - x2_axis[0])
    _, f1_d2 = central_gradient(f1, h1, h2)
    f2_d1, _ = central_gradient(f2, h1, h2)
    res = f1_d2 - f2_d1
    ok = stencil_valid(a_ok & p_ok) & np.isfinite(res)
    return ScalarField(x1_axis, x2_axis, res, ok)
