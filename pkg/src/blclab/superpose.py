"""Algebraic superposition of transformed solutions.

Given a seed solution and two of its transforms with distinct parameters,
each formula produces the fourth corner of the commuting diamond without
further integration.  The hyperbolic family keeps the seed's equation; the
elliptic pair alternates between the two elliptic equations under single
transforms but returns to the seed's equation under superposition.  The
lattice generator iterates the diamonds over a parameter list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .case import (
    AnalyticSolution,
    CaseConfig,
    GridMismatch,
    ScalarField,
    _check_axis,
    case_by_id,
    gen_trig,
    sample,
)
from .backlund import bt_system, integrate_bt
from .seeds import kink_seed

DENOM_GUARD = 1e-10
UNWRAP_JUMP_FRACTION = 0.45


class EqualPhis(ValueError):
    """Superposition needs two distinct parameters."""


class WrongCaseFamily(ValueError):
    """Formula applied to a case outside its family."""


class DuplicatePhi(ValueError):
    """Lattice parameters must be pairwise distinct."""


@dataclass(frozen=True)
class SuperposeInput:
    """Seed solution, its two transforms, and their parameters."""

    case: CaseConfig
    alpha: object
    alpha1: object
    alpha2: object
    phi1: float
    phi2: float
    tau: Optional[int] = None

    def __post_init__(self):
        if abs(self.phi1 - self.phi2) < 1e-12:
            raise EqualPhis(f"phi1 = phi2 = {self.phi1}")
        if self.tau is None:
            object.__setattr__(self, "tau", self.case.tau)


def structure_constants(phi1: float, phi2: float, tau: int):
    """(A, B, L) with A = tau*(sinh p2 - sinh p1); satisfies B^2 - L^2 = A^2."""
    A = tau * (np.sinh(phi2) - np.sinh(phi1))
    B = np.cosh(phi1) * np.cosh(phi2)
    L = 1.0 + np.sinh(phi1) * np.sinh(phi2)
    return A, B, L


def singularity_mask(constraint, guard: float) -> np.ndarray:
    """True away from the formula's critical set, by the signed convention.

    Constraint functionals are written to be positive in the formula's good
    region and to vanish on the singular set (negative beyond it, where the
    inverse function leaves its range), so valid means constraint > guard.
    """
    if guard <= 0:
        raise ValueError("guard must be positive")
    vals = constraint.values if isinstance(constraint, ScalarField) else np.asarray(constraint)
    with np.errstate(invalid="ignore"):
        return np.asarray(vals > guard)


# ---------------------------------------------------------------------------
# Evaluating the three parents on one grid
# ---------------------------------------------------------------------------


def _resolve_axes(inp: SuperposeInput, x1_axis, x2_axis):
    for obj in (inp.alpha, inp.alpha1, inp.alpha2):
        if isinstance(obj, ScalarField):
            if x1_axis is None:
                x1_axis, x2_axis = obj.x1_axis, obj.x2_axis
            elif not (obj.x1_axis.size == len(x1_axis) and obj.x2_axis.size == len(x2_axis)
                      and np.allclose(obj.x1_axis, x1_axis, atol=1e-12)
                      and np.allclose(obj.x2_axis, x2_axis, atol=1e-12)):
                raise GridMismatch("superposition inputs do not share a grid")
    if x1_axis is None:
        raise ValueError("grid axes required when all inputs are closed forms")
    return _check_axis(np.asarray(x1_axis, float)), _check_axis(np.asarray(x2_axis, float))


def _on_grid(obj, x1_axis, x2_axis):
    if isinstance(obj, AnalyticSolution):
        f = sample(obj, x1_axis, x2_axis)
        return f.values, f.valid
    if isinstance(obj, ScalarField):
        return np.where(obj.valid, obj.values, np.nan), obj.valid.copy()
    raise TypeError(f"cannot place {type(obj)!r} on a grid")


def _parents(inp: SuperposeInput, x1_axis, x2_axis):
    a, ok_a = _on_grid(inp.alpha, x1_axis, x2_axis)
    a1, ok_1 = _on_grid(inp.alpha1, x1_axis, x2_axis)
    a2, ok_2 = _on_grid(inp.alpha2, x1_axis, x2_axis)
    return a, a1, a2, ok_a & ok_1 & ok_2


# ---------------------------------------------------------------------------
# Branch continuity for the arctan-valued formulas
# ---------------------------------------------------------------------------


def _origin_indexes(x1_axis, x2_axis):
    return int(np.argmin(np.abs(x1_axis))), int(np.argmin(np.abs(x2_axis)))


def _unwrap(principal: np.ndarray, period: float, i0: int, j0: int):
    """Pick period-multiples for continuity outward from node (i0, j0).

    Returns the adjusted array and a mask of nodes where both neighbouring
    branch candidates were nearly equidistant (ambiguous choice).
    """
    out = np.array(principal, dtype=float)
    ambiguous = np.zeros(out.shape, dtype=bool)
    limit = UNWRAP_JUMP_FRACTION * period

    ref = out[i0, j0]
    for rng in (range(i0 + 1, out.shape[0]), range(i0 - 1, -1, -1)):
        r = ref
        for i in rng:
            b = out[i, j0]
            if not np.isfinite(b):
                continue
            if np.isfinite(r):
                b = b + period * np.round((r - b) / period)
                if abs(b - r) > limit:
                    ambiguous[i, j0] = True
            out[i, j0] = b
            r = b

    for rng in (range(j0 + 1, out.shape[1]), range(j0 - 1, -1, -1)):
        r = out[:, j0].copy()
        for j in rng:
            b = out[:, j]
            fin = np.isfinite(b)
            have_ref = fin & np.isfinite(r)
            adj = np.where(have_ref, b + period * np.round((r - b) / period), b)
            ambiguous[:, j] |= have_ref & (np.abs(adj - r) > limit)
            out[fin, j] = adj[fin]
            r = np.where(fin, adj, r)
    return out, ambiguous


# ---------------------------------------------------------------------------
# The three formulas
# ---------------------------------------------------------------------------


def hyperbolic_coefficient(case: CaseConfig, phi1: float, phi2: float, tau: int) -> float:
    """delta*tau * S((p2+p1)/2) / S((p2-p1)/2), S circular or hyperbolic."""
    xi = -case.delta * case.epsilon
    _, s_plus, _ = gen_trig(xi, (phi2 + phi1) / 2.0)
    _, s_minus, _ = gen_trig(xi, (phi2 - phi1) / 2.0)
    return float(case.delta * tau * s_plus / s_minus)


def superpose_hyperbolic(inp: SuperposeInput, x1_axis=None, x2_axis=None,
                         guard: float = DENOM_GUARD) -> ScalarField:
    """Fourth solution for the wave-operator cases.

    T((a*-a)/4) = K * T((a'-a'')/4) with T = tan for r=0 (branch chosen by
    continuity from the grid origin) and T = tanh for r=1 (nodes where the
    argument reaches 1 in magnitude are masked).
    """
    case = inp.case
    if case.case_id not in (1, 2, 3, 4):
        raise WrongCaseFamily(f"case {case.case_id} is not in the wave-operator family")
    x1_axis, x2_axis = _resolve_axes(inp, x1_axis, x2_axis)
    a, a1, a2, ok = _parents(inp, x1_axis, x2_axis)
    K = hyperbolic_coefficient(case, inp.phi1, inp.phi2, inp.tau)
    d = (a1 - a2) / 4.0
    with np.errstate(all="ignore"):
        if case.r == 1:
            arg = K * np.tanh(d)
            constraint = 1.0 - np.abs(arg)
            ok = ok & singularity_mask(constraint, guard)
            star = a + 4.0 * np.arctanh(np.where(ok, arg, np.nan))
        else:
            theta = np.arctan2(K * np.sin(d), np.cos(d))
            theta = np.where(ok, theta, np.nan)
            i0, j0 = _origin_indexes(x1_axis, x2_axis)
            theta, ambiguous = _unwrap(theta, np.pi, i0, j0)
            ok = ok & ~ambiguous
            star = a + 4.0 * theta
    ok = ok & np.isfinite(star)
    return ScalarField(x1_axis, x2_axis, star, ok)


def elliptic_sinh_constraint(inp: SuperposeInput, x1_axis=None, x2_axis=None) -> ScalarField:
    """1 - |rhs| for the elliptic-sinh formula; zero on the singular curves."""
    x1_axis, x2_axis = _resolve_axes(inp, x1_axis, x2_axis)
    a, a1, a2, ok = _parents(inp, x1_axis, x2_axis)
    rhs, den_ok = _elliptic_sinh_rhs(inp, a, a1, a2)
    vals = 1.0 - np.abs(rhs)
    return ScalarField(x1_axis, x2_axis, vals, ok & den_ok & np.isfinite(vals))


def _elliptic_sinh_rhs(inp: SuperposeInput, a, a1, a2):
    A, B, L = structure_constants(inp.phi1, inp.phi2, inp.tau)
    D = a2 - a1
    with np.errstate(all="ignore"):
        P = A * np.sin(D / 2.0)
        Q = L * np.cos(D / 2.0) - B
        t = np.tanh(a / 2.0)
        num = P - Q * t
        den = Q - P * t
        scale = np.abs(P) + np.abs(Q) + 1e-300
        den_ok = np.abs(den) > DENOM_GUARD * scale
        rhs = num / den
    return rhs, den_ok


def superpose_elliptic_sinh(inp: SuperposeInput, x1_axis=None, x2_axis=None,
                            guard: float = DENOM_GUARD) -> ScalarField:
    """Fourth solution when the seed solves the elliptic sinh equation.

    tanh(a*/2) = (P - Q tanh(a/2)) / (Q - P tanh(a/2)); the two transforms
    solve the elliptic sine equation, the output again the sinh one.  Nodes
    where the ratio reaches 1 in magnitude (the formula's genuine blow-up
    curves) or where the denominator vanishes are masked.
    """
    case = inp.case
    if case.case_id != 5:
        raise WrongCaseFamily(f"the elliptic-sinh formula belongs to case 5, got {case.case_id}")
    x1_axis, x2_axis = _resolve_axes(inp, x1_axis, x2_axis)
    a, a1, a2, ok = _parents(inp, x1_axis, x2_axis)
    rhs, den_ok = _elliptic_sinh_rhs(inp, a, a1, a2)
    with np.errstate(all="ignore"):
        ok = ok & den_ok & singularity_mask(1.0 - np.abs(rhs), guard)
        star = 2.0 * np.arctanh(np.where(ok, rhs, np.nan))
    ok = ok & np.isfinite(star)
    return ScalarField(x1_axis, x2_axis, star, ok)


def elliptic_sine_constraint(inp: SuperposeInput, x1_axis=None, x2_axis=None) -> ScalarField:
    """Distance of the tan ratio to its branch cut, as |den|/hypot(num, den)."""
    x1_axis, x2_axis = _resolve_axes(inp, x1_axis, x2_axis)
    a, a1, a2, ok = _parents(inp, x1_axis, x2_axis)
    num, den = _elliptic_sine_pair(inp, a, a1, a2)
    with np.errstate(all="ignore"):
        h = np.hypot(num, den)
        vals = np.abs(den) / h
    return ScalarField(x1_axis, x2_axis, vals, ok & np.isfinite(vals))


def _elliptic_sine_pair(inp: SuperposeInput, a, a1, a2):
    A, B, L = structure_constants(inp.phi1, inp.phi2, inp.tau)
    D = a2 - a1
    with np.errstate(all="ignore"):
        Pt = A * np.sinh(D / 2.0)
        Qt = L * np.cosh(D / 2.0) - B
        c, s = np.cos(a / 2.0), np.sin(a / 2.0)
        # homogeneous form of (Pt - Qt*tan(a/2)) / (Qt + Pt*tan(a/2))
        num = Pt * c - Qt * s
        den = Qt * c + Pt * s
    return num, den


def superpose_elliptic_sine(inp: SuperposeInput, x1_axis=None, x2_axis=None,
                            guard: float = DENOM_GUARD) -> ScalarField:
    """Fourth solution when the seed solves the elliptic sine equation.

    tan(a*/2) = (Pt - Qt tan(a/2)) / (Qt + Pt tan(a/2)), evaluated as a
    homogeneous pair in (sin, cos) of a/2 so poles of tan(a/2) stay finite.
    The branch is chosen by continuity from the grid origin; the remaining
    global 2*pi representative (invisible to the equation but not to the
    transform systems, which see half-angles) is fixed by picking the one
    with the smaller defect in the association to the first transform.
    """
    case = inp.case
    if case.case_id != 6:
        raise WrongCaseFamily(f"the elliptic-sine formula belongs to case 6, got {case.case_id}")
    x1_axis, x2_axis = _resolve_axes(inp, x1_axis, x2_axis)
    a, a1, a2, ok = _parents(inp, x1_axis, x2_axis)
    num, den = _elliptic_sine_pair(inp, a, a1, a2)
    with np.errstate(all="ignore"):
        h = np.hypot(num, den)
        ok = ok & (h > DENOM_GUARD)
        half = np.arctan2(np.where(ok, num, np.nan), den)
    i0, j0 = _origin_indexes(x1_axis, x2_axis)
    half, ambiguous = _unwrap(half, np.pi, i0, j0)
    star = 2.0 * half
    ok = ok & ~ambiguous & np.isfinite(star)
    star = star + _association_shift(inp, x1_axis, x2_axis, star, ok)
    return ScalarField(x1_axis, x2_axis, star, ok)


def _association_shift(inp: SuperposeInput, x1_axis, x2_axis, star, ok) -> float:
    """0 or 2*pi, whichever representative satisfies the association claim.

    The candidate field is certified against the partner-case system with
    the second parameter and the first transform as its input; the defect
    is compared by median so near-singular nodes do not decide.
    """
    from .backlund import bt_residual, bt_system

    if not ok.any():
        return 0.0
    partner = case_by_id(inp.case.partner_case_id, inp.tau)
    sys_ = bt_system(partner, inp.phi2)
    scores = []
    for shift in (0.0, 2.0 * np.pi):
        cand = ScalarField(x1_axis, x2_axis, star + shift, ok)
        r1, r2 = bt_residual(sys_, inp.alpha1, cand, x1_axis, x2_axis)
        m = r1.valid & r2.valid
        if not m.any():
            scores.append(np.inf)
            continue
        scores.append(float(np.median(np.abs(r1.values[m]) + np.abs(r2.values[m]))))
    return 0.0 if scores[0] <= scores[1] else 2.0 * np.pi


def superpose(inp: SuperposeInput, x1_axis=None, x2_axis=None,
              guard: float = DENOM_GUARD) -> ScalarField:
    """Dispatch to the family formula for the input's case."""
    if inp.case.case_id in (1, 2, 3, 4):
        return superpose_hyperbolic(inp, x1_axis, x2_axis, guard)
    if inp.case.case_id == 5:
        return superpose_elliptic_sinh(inp, x1_axis, x2_axis, guard)
    return superpose_elliptic_sine(inp, x1_axis, x2_axis, guard)


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------


@dataclass
class LatticeNode:
    key: tuple
    field: ScalarField
    level: int
    index_flag: int
    equation: str
    phis: tuple
    parents: tuple
    method: str


@dataclass
class Lattice:
    """Solutions generated by iterating transforms and superposition.

    Nodes are keyed by contiguous 1-based windows of the parameter list:
    level 1 holds the single transforms, level k the superposed window
    (i..i+k-1) built from its two level-(k-1) neighbours over the seed
    window between them.
    """

    case: CaseConfig
    phis: tuple
    nodes: dict = field(default_factory=dict)

    def node(self, *indexes) -> LatticeNode:
        return self.nodes[tuple(indexes)]

    def manifest(self) -> dict:
        return {
            "case_id": self.case.case_id,
            "tau": self.case.tau,
            "phis": list(self.phis),
            "nodes": {
                "-".join(map(str, k)) if k else "seed": {
                    "level": n.level,
                    "equation": n.equation,
                    "phis": list(n.phis),
                    "parents": ["-".join(map(str, p)) if p else "seed" for p in n.parents],
                    "method": n.method,
                    "valid_nodes": int(n.field.valid.sum()),
                    "invalid_nodes": int((~n.field.valid).sum()),
                }
                for k, n in self.nodes.items()
            },
        }


def _superpose_case(case: CaseConfig, seed_flag: int) -> CaseConfig:
    """Case whose formula applies when the diamond's seed solves equation seed_flag."""
    if seed_flag == 0 or not case.is_elliptic:
        return case
    return case.partner()


def bianchi_lattice(
    case: CaseConfig,
    seed_alpha,
    phis: Sequence[float],
    x1_axis,
    x2_axis,
    *,
    depth: Optional[int] = None,
    p0=(0.0, 0.0),
    alpha_prime_0: Optional[Sequence[float]] = None,
    level1: Optional[Sequence[AnalyticSolution]] = None,
    substeps: int = 1,
    guard: float = DENOM_GUARD,
) -> Lattice:
    """Generate the solution lattice for a list of distinct parameters.

    Level-1 nodes come from integrating the transform from the seed (or from
    closed forms passed as level1, the pure-algebra path); deeper nodes are
    algebraic.  For the elliptic cases the equation solved alternates with
    the level, and the matching formula is chosen per diamond.
    """
    phis = tuple(float(p) for p in phis)
    for i in range(len(phis)):
        for j in range(i + 1, len(phis)):
            if abs(phis[i] - phis[j]) < 1e-12:
                raise DuplicatePhi(f"phi[{i}] = phi[{j}] = {phis[i]}")
    x1_axis = _check_axis(np.asarray(x1_axis, float))
    x2_axis = _check_axis(np.asarray(x2_axis, float))
    depth = len(phis) if depth is None else min(depth, len(phis))

    lat = Lattice(case=case, phis=phis)
    seed_field = seed_alpha if isinstance(seed_alpha, ScalarField) else sample(seed_alpha, x1_axis, x2_axis)
    lat.nodes[()] = LatticeNode(
        key=(), field=seed_field, level=0, index_flag=0,
        equation=case.equation_name(0), phis=(), parents=(), method="seed",
    )

    for i, phi in enumerate(phis, start=1):
        if level1 is not None:
            sol = level1[i - 1]
            fld = sample(sol, x1_axis, x2_axis)
            method = "closed-form"
        else:
            if alpha_prime_0 is not None:
                ap0 = float(alpha_prime_0[i - 1])
            else:
                probe = kink_seed(case, phi)
                if not np.all(probe.domain_at(*map(np.asarray, p0))):
                    raise ValueError(
                        f"default initial value undefined at p0={p0} for phi={phi}; "
                        "pass alpha_prime_0"
                    )
                ap0 = float(probe(*p0))
            fld = integrate_bt(bt_system(case, phi), seed_alpha, x1_axis, x2_axis,
                               p0, ap0, substeps=substeps)
            method = "integrated"
        lat.nodes[(i,)] = LatticeNode(
            key=(i,), field=fld, level=1, index_flag=1,
            equation=case.equation_name(1), phis=(phi,), parents=((),), method=method,
        )

    for level in range(2, depth + 1):
        for start in range(1, len(phis) - level + 2):
            key = tuple(range(start, start + level))
            inner = key[1:-1]
            left = key[:-1]
            right = key[1:]
            seed_node = lat.nodes[inner]
            eff_case = _superpose_case(case, seed_node.index_flag)
            inp = SuperposeInput(
                case=eff_case,
                alpha=seed_node.field,
                alpha1=lat.nodes[left].field,
                alpha2=lat.nodes[right].field,
                phi1=phis[key[0] - 1],
                phi2=phis[key[-1] - 1],
                tau=case.tau,
            )
            fld = superpose(inp, guard=guard)
            flag = level % 2
            lat.nodes[key] = LatticeNode(
                key=key, field=fld, level=level, index_flag=flag,
                equation=case.equation_name(flag),
                phis=(phis[key[0] - 1], phis[key[-1] - 1]),
                parents=(inner, left, right), method="superposition",
            )
    return lat
