"""Command-line front end.

Subcommands: seed (sample a named closed form), transform (integrate one
Backlund step and certify it), superpose (generate a solution lattice),
surface (build and transform the built-in surfaces, exporting meshes), and
verify (run the library's internal identity checks).

Exit codes: 0 success, 1 a configured tolerance was violated, 2 invalid
configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import case as case_mod
from .case import (
    CaseConfig,
    InvalidCase,
    PhiOutOfRange,
    GridMismatch,
    GridTooSmall,
    ScalarField,
    case_by_id,
    congruence_params,
    derive_case,
    gen_trig,
    pde_residual,
    sample,
    uniform_axis,
)
from .backlund import (
    AlphaUndefinedOnGrid,
    SeedNotOnGrid,
    bt_gradient,
    bt_residual,
    bt_system,
    explicit_rhs,
)
from .seeds import SeedKind, SeedSpec, UnknownSpec, kink_seed, seed_solution, zero_seed
from .superpose import (
    DuplicatePhi,
    EqualPhis,
    WrongCaseFamily,
    bianchi_lattice,
    structure_constants,
)
from .geometry import (
    DegenerateAlpha,
    DegenerateMetric,
    GridContainsSingularAxis,
    SurfaceName,
    builtin_surface,
    congruence_check,
    detect_index,
    numerical_curvature,
    predicted_index,
    sample_surface,
    transform_surface,
)

_CONFIG_ERRORS = (
    InvalidCase, PhiOutOfRange, GridTooSmall, GridMismatch, UnknownSpec,
    SeedNotOnGrid, AlphaUndefinedOnGrid, EqualPhis, DuplicatePhi,
    WrongCaseFamily, DegenerateAlpha, DegenerateMetric,
    GridContainsSingularAxis, ValueError, KeyError,
)


class ToleranceViolation(Exception):
    """A configured verification tolerance was exceeded."""


def max_workers() -> int:
    raw = os.environ.get("BLC_LAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    case_id: Optional[int] = None
    delta: Optional[int] = None
    epsilon: Optional[int] = None
    r: Optional[int] = None
    s: Optional[int] = None
    tau: int = 1
    grid: Optional[str] = None
    phis: list = field(default_factory=list)
    seed: str = "zero"
    c: float = 0.0
    extra: Optional[float] = None
    p0: Optional[str] = None
    alpha_prime_0: Optional[float] = None
    substeps: int = 1
    depth: Optional[int] = None
    surface: Optional[str] = None
    ply: bool = False
    out: str = "."
    tol_pde: Optional[float] = None
    tol_bt: Optional[float] = None
    tol_geom: Optional[float] = None
    guard: float = 1e-10

    def resolve_case(self) -> CaseConfig:
        if self.case_id is not None:
            return case_by_id(int(self.case_id), int(self.tau))
        if None in (self.delta, self.epsilon, self.r, self.s):
            raise InvalidCase("give --case, or all of --case-delta/-epsilon/-r/-s")
        return derive_case(int(self.delta), int(self.epsilon), int(self.r),
                           int(self.s), int(self.tau))

    def axes(self):
        if not self.grid:
            raise ValueError("a --grid of the form 'min:max:h,min:max:h' is required")
        parts = self.grid.split(",")
        if len(parts) != 2:
            raise ValueError(f"grid spec needs two comma-separated axes, got {self.grid!r}")
        axes = []
        for part in parts:
            bits = part.split(":")
            if len(bits) != 3:
                raise ValueError(f"axis spec must be min:max:h, got {part!r}")
            lo, hi, h = (float(b) for b in bits)
            axes.append(uniform_axis(lo, hi, h))
        return axes[0], axes[1]

    def anchor(self):
        if not self.p0:
            return None
        bits = self.p0.split(",")
        if len(bits) != 2:
            raise ValueError(f"p0 must be 'x1,x2', got {self.p0!r}")
        return float(bits[0]), float(bits[1])


_CONFIG_KEYS = {f.name for f in RunConfig.__dataclass_fields__.values()}


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        for key, value in data.items():
            key = key.replace("-", "_")
            if key == "case":
                key = "case_id"
            if key == "phi":
                key = "phis"
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            if key == "phis" and not isinstance(value, list):
                value = [value]
            setattr(cfg, key, value)
    overrides = {
        "case_id": "case", "delta": "case_delta", "epsilon": "case_epsilon",
        "r": "case_r", "s": "case_s", "tau": "tau", "grid": "grid",
        "phis": "phi", "seed": "seed", "c": "c", "extra": "extra",
        "p0": "p0", "alpha_prime_0": "alpha_prime0", "substeps": "substeps",
        "depth": "depth", "surface": "surface", "ply": "ply", "out": "out",
        "tol_pde": "tol_pde", "tol_bt": "tol_bt", "tol_geom": "tol_geom",
        "guard": "guard",
    }
    for attr, flag in overrides.items():
        val = getattr(args, flag, None)
        if val is not None and val is not False:
            setattr(cfg, attr, val)
    return cfg


# ---------------------------------------------------------------------------
# Atomic writers
# ---------------------------------------------------------------------------


def _atomic_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field_csv(path, f: ScalarField):
    """Row-major CSV with 17-significant-digit floats (lossless round trip)."""
    lines = ["x1,x2,value,valid"]
    X1, X2 = f.meshgrid()
    flat = zip(X1.ravel(), X2.ravel(), f.values.ravel(), f.valid.ravel())
    for x1, x2, v, ok in flat:
        lines.append(f"{x1:.17g},{x2:.17g},{v:.17g},{int(ok)}")
    _atomic_text(Path(path), "\n".join(lines) + "\n")


def read_field_csv(path) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x1,x2,value,valid":
            raise ValueError(f"unexpected CSV header {header!r}")
        data = np.loadtxt(fh, delimiter=",")
    data = np.atleast_2d(data)
    x1 = np.unique(data[:, 0])
    x2 = np.unique(data[:, 1])
    n1, n2 = x1.size, x2.size
    if n1 * n2 != data.shape[0]:
        raise ValueError("CSV rows do not form a full grid")
    values = data[:, 2].reshape(n1, n2)
    valid = data[:, 3].reshape(n1, n2) > 0.5
    return ScalarField(x1, x2, values, valid)


def write_obj(path, mesh):
    """Triangulated mesh; cells with any invalid corner are skipped."""
    n1, n2 = mesh.valid.shape
    index = np.full((n1, n2), -1, dtype=int)
    lines = [f"# {n1}x{n2} grid, s={mesh.s}"]
    count = 0
    for i in range(n1):
        for j in range(n2):
            if mesh.valid[i, j]:
                count += 1
                index[i, j] = count
                x, y, z = mesh.points[i, j]
                lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            ids = (index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1])
            if min(ids) > 0:
                lines.append(f"f {ids[0]} {ids[1]} {ids[2]}")
                lines.append(f"f {ids[0]} {ids[2]} {ids[3]}")
    _atomic_text(Path(path), "\n".join(lines) + "\n")


def write_ply(path, mesh):
    n1, n2 = mesh.valid.shape
    index = np.full((n1, n2), -1, dtype=int)
    verts = []
    for i in range(n1):
        for j in range(n2):
            if mesh.valid[i, j]:
                index[i, j] = len(verts)
                x, y, z = mesh.points[i, j]
                verts.append(f"{x:.17g} {y:.17g} {z:.17g}")
    faces = []
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            ids = (index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1])
            if min(ids) >= 0:
                faces.append(f"3 {ids[0]} {ids[1]} {ids[2]}")
                faces.append(f"3 {ids[0]} {ids[2]} {ids[3]}")
    header = "\n".join([
        "ply", "format ascii 1.0",
        f"element vertex {len(verts)}",
        "property double x", "property double y", "property double z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices", "end_header",
    ])
    _atomic_text(Path(path), header + "\n" + "\n".join(verts + faces) + "\n")


def write_json(path, payload: dict):
    _atomic_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def _seed_spec(cfg: RunConfig) -> SeedSpec:
    kind = SeedKind(cfg.seed)
    phi = cfg.phis[0] if cfg.phis else 0.0
    return SeedSpec(kind=kind, case_id=cfg.case_id, phi=phi, c=cfg.c, extra=cfg.extra)


def _default_anchor(case: CaseConfig, cfg: RunConfig):
    p0 = cfg.anchor()
    if p0 is not None:
        return p0
    return (-2.0, 0.0) if case.r == 1 else (0.0, 0.0)


def _initial_value(case: CaseConfig, cfg: RunConfig, seed_name: str, p0):
    if cfg.alpha_prime_0 is not None:
        return float(cfg.alpha_prime_0)
    if seed_name == "zero":
        probe = kink_seed(case, cfg.phis[0], cfg.c)
        if not np.all(probe.domain_at(np.asarray(p0[0]), np.asarray(p0[1]))):
            raise ValueError(f"default initial value undefined at p0={p0}; pass alpha_prime_0")
        return float(probe(*p0))
    return 0.0


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_seed(cfg: RunConfig) -> int:
    x1_axis, x2_axis = cfg.axes()
    kind = SeedKind(cfg.seed)
    case = None
    if kind in (SeedKind.KINK,):
        case = cfg.resolve_case()
        if not cfg.phis:
            raise ValueError("kink seed needs --phi")
    sol = seed_solution(_seed_spec(cfg), case, guard=max(cfg.guard, 1e-12))
    f = sample(sol, x1_axis, x2_axis)
    out = Path(cfg.out)
    write_field_csv(out / "seed.csv", f)
    print(f"wrote {out / 'seed.csv'} ({int(f.valid.sum())} valid of {f.valid.size} nodes)")
    return 0


def cmd_transform(cfg: RunConfig) -> int:
    case = cfg.resolve_case()
    if not cfg.phis:
        raise ValueError("transform needs --phi")
    x1_axis, x2_axis = cfg.axes()
    seed = seed_solution(_seed_spec(cfg), case)
    sys_ = bt_system(case, cfg.phis[0])
    p0 = _default_anchor(case, cfg)
    ap0 = _initial_value(case, cfg, cfg.seed, p0)
    prime = None
    from .backlund import integrate_bt

    prime = integrate_bt(sys_, seed, x1_axis, x2_axis, p0, ap0, substeps=cfg.substeps)
    res_pde = pde_residual(prime, case, index_flag=1)
    res1, res2 = bt_residual(sys_, seed, prime, x1_axis, x2_axis)
    report = {
        "case_id": case.case_id,
        "phi": cfg.phis[0],
        "p0": list(p0),
        "alpha_prime_0": ap0,
        "max_pde_residual": res_pde.max_abs(),
        "max_bt_residual": max(res1.max_abs(), res2.max_abs()),
        "masked_nodes": int((~prime.valid).sum()),
        "tol_pde": cfg.tol_pde,
        "tol_bt": cfg.tol_bt,
    }
    out = Path(cfg.out)
    write_field_csv(out / "alpha_prime.csv", prime)
    failed = []
    if cfg.tol_pde is not None and not (report["max_pde_residual"] <= cfg.tol_pde):
        failed.append("pde")
    if cfg.tol_bt is not None and not (report["max_bt_residual"] <= cfg.tol_bt):
        failed.append("bt")
    report["passed"] = not failed
    write_json(out / "transform_report.json", report)
    print(f"wrote {out / 'alpha_prime.csv'}; max PDE residual {report['max_pde_residual']:.3e}, "
          f"max BT residual {report['max_bt_residual']:.3e}")
    if failed:
        raise ToleranceViolation(", ".join(failed))
    return 0


def cmd_superpose(cfg: RunConfig) -> int:
    case = cfg.resolve_case()
    if not cfg.phis:
        raise ValueError("superpose needs at least one --phi")
    x1_axis, x2_axis = cfg.axes()
    seed = seed_solution(SeedSpec(kind=SeedKind(cfg.seed), case_id=cfg.case_id,
                                  phi=0.0, c=cfg.c, extra=cfg.extra), case)
    p0 = _default_anchor(case, cfg)
    lat = bianchi_lattice(case, seed, cfg.phis, x1_axis, x2_axis,
                          depth=cfg.depth, p0=p0, substeps=cfg.substeps,
                          guard=cfg.guard)
    out = Path(cfg.out)
    manifest = lat.manifest()
    failures = []

    def finish(item):
        key, node = item
        stem = "seed" if not key else "node_" + "-".join(map(str, key))
        write_field_csv(out / f"{stem}.csv", node.field)
        entry = manifest["nodes"]["-".join(map(str, key)) if key else "seed"]
        entry["file"] = f"{stem}.csv"
        if cfg.tol_pde is not None and key:
            res = pde_residual(node.field, case, index_flag=node.index_flag)
            entry["max_pde_residual"] = res.max_abs()
            if not (res.max_abs() <= cfg.tol_pde):
                failures.append(stem)

    workers = max_workers()
    items = list(lat.nodes.items())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(finish, items))
    else:
        for item in items:
            finish(item)
    write_json(out / "manifest.json", manifest)
    print(f"wrote {len(items)} fields and {out / 'manifest.json'}")
    if failures:
        raise ToleranceViolation(", ".join(sorted(failures)))
    return 0


def cmd_surface(cfg: RunConfig) -> int:
    if not cfg.surface:
        raise ValueError("surface command needs --surface")
    surface, alpha0, case = builtin_surface(cfg.surface)
    x1_axis, x2_axis = cfg.axes()
    mesh = sample_surface(surface, x1_axis, x2_axis)
    out = Path(cfg.out)
    chain = list(cfg.phis)
    name = SurfaceName(cfg.surface)

    # solution chain backing the surface chain
    if name is SurfaceName.TIMELIKE_K1:
        base_phi = np.pi / 2
        phis = [base_phi] + chain
        level1 = [kink_seed(case, p) for p in phis]
        lat = bianchi_lattice(case, zero_seed(), phis, x1_axis, x2_axis,
                              level1=level1, guard=cfg.guard)
        sol_keys = [tuple(range(1, k + 2)) for k in range(len(chain) + 1)]
        sols = [lat.nodes[k].field for k in sol_keys]
        flags = [lat.nodes[k].index_flag for k in sol_keys]
    else:
        seed = alpha0
        if chain:
            from .seeds import example_solution

            level1 = [example_solution(SeedSpec(kind=SeedKind.EXAMPLE4_ALPHA2, phi=p, c=cfg.c))
                      for p in chain]
            lat = bianchi_lattice(case, seed, chain, x1_axis, x2_axis,
                                  level1=level1, guard=cfg.guard)
            sol_keys = [tuple(range(1, k + 1)) for k in range(len(chain) + 1)]
            sols = [lat.nodes[k].field for k in sol_keys]
            flags = [lat.nodes[k].index_flag for k in sol_keys]
        else:
            sols = [sample(seed, x1_axis, x2_axis)]
            flags = [0]

    meshes = [mesh]
    reports = {}
    step_case = case
    for k, phi in enumerate(chain):
        if name is SurfaceName.TIMELIKE_K1:
            step_case = case
        else:
            step_case = case if flags[k] == 0 else case.partner()
        params = congruence_params(step_case, phi)
        new_mesh = transform_surface(meshes[-1], sols[k], sols[k + 1], step_case, params)
        rep = congruence_check(meshes[-1], new_mesh, step_case, params)
        reports[f"step_{k + 1}"] = {
            "phi": phi,
            "case_id": step_case.case_id,
            "congruence": rep.summary(),
            "detected_index": detect_index(new_mesh),
            "predicted_index": predicted_index(step_case),
        }
        meshes.append(new_mesh)

    failed = []
    for k, m in enumerate(meshes):
        stem = "surface" if k == 0 else f"surface_step{k}"
        write_obj(out / f"{stem}.obj", m)
        if cfg.ply:
            write_ply(out / f"{stem}.ply", m)
        K = numerical_curvature(m)
        dev = float(np.abs(K.values[K.valid] - case.delta).max()) if K.valid.any() else np.nan
        reports.setdefault(f"mesh_{k}", {})["max_curvature_deviation"] = dev
        reports[f"mesh_{k}"]["file"] = f"{stem}.obj"
        if cfg.tol_geom is not None and not (dev <= cfg.tol_geom):
            failed.append(stem)
    write_json(out / "surface_report.json", {"surface": cfg.surface,
                                             "delta": case.delta, **reports})
    print(f"wrote {len(meshes)} meshes and {out / 'surface_report.json'}")
    if failed:
        raise ToleranceViolation(", ".join(failed))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    failures = []

    def check(label, ok):
        print(f"{'PASS' if ok else 'FAIL'} {label}")
        if not ok:
            failures.append(label)

    # exactly six admissible tuples
    good = 0
    for delta in (-1, 1):
        for epsilon in (-1, 1):
            for r in (0, 1):
                for s in (0, 1):
                    try:
                        derive_case(delta, epsilon, r, s, 1)
                        good += 1
                    except InvalidCase:
                        pass
    check("case table has exactly six admissible tuples", good == 6)

    phis = np.linspace(-10, 10, 1001)
    worst = 0.0
    for xi in (1, -1):
        C, S, T = gen_trig(xi, phis)
        worst = max(worst, float(np.abs(C**2 + xi * S**2 - 1).max()))
        m = np.abs(C) > 1e-6
        worst_t = float(np.abs(T[m] - S[m] / C[m]).max())
        worst = max(worst, worst_t)
    check("generalized trig identities over 1000 samples", worst <= 1e-12)

    worst = 0.0
    for cid in range(1, 7):
        case = case_by_id(cid)
        lo = 0.05 if cid in (1, 4) else 0.0 if cid in (5, 6) else 0.05
        hi = np.pi - 0.05 if cid in (1, 4) else 2.5
        for phi in np.linspace(lo if lo else 0.0, hi, 101):
            try:
                p = congruence_params(case, float(phi))
            except PhiOutOfRange:
                continue
            worst = max(worst, abs(p.relation_defect(case)))
    check("lambda-Lambda relation across all cases", worst <= 1e-12)

    rng = np.random.default_rng(20240811)
    worst = 0.0
    for _ in range(1000):
        p1, p2 = rng.uniform(0, 2, size=2)
        tau = int(rng.choice([-1, 1]))
        A, B, L = structure_constants(p1, p2, tau)
        worst = max(worst, abs(B**2 - L**2 - A**2))
    check("elliptic structure constants B^2 - L^2 = A^2", worst <= 1e-12)

    worst = 0.0
    for cid in range(1, 7):
        for tau in (-1, 1):
            case = case_by_id(cid, tau)
            for _ in range(200):
                phi = rng.uniform(0.3, 2.5) if cid not in (1, 4) else rng.uniform(0.3, np.pi - 0.3)
                a, ap = rng.uniform(-3, 3, size=2)
                sys_ = bt_system(case, phi)
                g1, g2 = bt_gradient(sys_, a, (0.0, 0.0), ap)
                r1, r2 = explicit_rhs(cid, phi, tau, a, ap)
                worst = max(worst, abs(g1 - r1), abs(g2 - r2))
    check("generic system matches the six explicit systems", worst <= 1e-12)

    if failures:
        raise ToleranceViolation("; ".join(failures))
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blclab",
        description="Numerical laboratory for the Gordon-type equations, their "
                    "Backlund transformations, superposition formulas, and the "
                    "constant-curvature surfaces they parametrize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, helptext in [
        ("seed", "sample a named closed-form solution to CSV"),
        ("transform", "integrate one Backlund step from a named seed"),
        ("superpose", "generate a solution lattice for a parameter list"),
        ("surface", "build a named surface and its transform chain"),
        ("verify", "run the internal identity checks"),
    ]:
        p = sub.add_parser(cmd, help=helptext)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--case", type=int, dest="case", help="case id 1..6")
        p.add_argument("--case-delta", type=int, dest="case_delta")
        p.add_argument("--case-epsilon", type=int, dest="case_epsilon")
        p.add_argument("--case-r", type=int, dest="case_r")
        p.add_argument("--case-s", type=int, dest="case_s")
        p.add_argument("--tau", type=int, dest="tau")
        p.add_argument("--phi", type=float, action="append", dest="phi",
                       help="parameter; repeatable")
        p.add_argument("--grid", dest="grid", help="'min:max:h,min:max:h'")
        p.add_argument("--seed", dest="seed",
                       help="zero|kink|example2-alpha|example4-alpha|example4-alpha1|example4-alpha2")
        p.add_argument("--c", type=float, dest="c", help="integration constant")
        p.add_argument("--extra", type=float, dest="extra", help="second constant where needed")
        p.add_argument("--p0", dest="p0", help="anchor point 'x1,x2'")
        p.add_argument("--alpha-prime0", type=float, dest="alpha_prime0",
                       help="initial value of the transform at p0")
        p.add_argument("--substeps", type=int, dest="substeps")
        p.add_argument("--depth", type=int, dest="depth", help="lattice depth")
        p.add_argument("--surface", dest="surface",
                       help="timelike-k1|timelike-kminus1")
        p.add_argument("--ply", action="store_true", dest="ply", default=None)
        p.add_argument("--out", dest="out", help="output directory")
        p.add_argument("--tol-pde", type=float, dest="tol_pde")
        p.add_argument("--tol-bt", type=float, dest="tol_bt")
        p.add_argument("--tol-geom", type=float, dest="tol_geom")
        p.add_argument("--guard", type=float, dest="guard")
    return parser


_COMMANDS = {
    "seed": cmd_seed,
    "transform": cmd_transform,
    "superpose": cmd_superpose,
    "surface": cmd_surface,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return _COMMANDS[args.command](cfg)
    except ToleranceViolation as exc:
        print(f"tolerance violation: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
