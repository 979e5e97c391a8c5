"""Command-line front end.

    witten-novikov spectrum s1_basic --out out/
    witten-novikov instantons s1_basic --level 10
    witten-novikov verify thm3 t2_product

Scenarios are built-in names or JSON files.  Exit status is 0 when every
check passes, 2 when a check fails and 1 on input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import dynamics as dyn
from . import geometry as geo
from . import pipeline as pl
from .series import exp_series

VERIFY_CHECKS = ("thm1", "thm2", "thm3", "e32", "zeta", "reg")
DEFAULT_TOLERANCES = {"thm3_circle": 1e-3, "thm3_torus2": 1e-2, "e32": 1e-5, "reg": 1e-6,
                      "linearity": 1e-8, "gram_slack": 0.2}


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    manifold: str
    a: float = 0.5
    b: float = 0.6
    exact: str = "cos"
    sizes: tuple = (256,)
    t_grid: tuple = (10.0, 15.0, 20.0, 30.0, 40.0)
    level: float = 10.0
    map: Optional[str] = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0

    def validate(self):
        if self.manifold not in ("circle", "torus2", "suspension"):
            raise ConfigError(f"field 'manifold': unknown value {self.manifold!r}")
        if self.exact not in ("cos", "none"):
            raise ConfigError(f"field 'exact': expected 'cos' or 'none', got {self.exact!r}")
        if any(v <= 0 for v in self.tolerances.values()):
            raise ConfigError("field 'tolerances': all tolerances must be positive")
        ts = list(self.t_grid)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("field 't_grid': must be strictly increasing")
        if self.manifold == "suspension" and self.map not in ("cat", "circle_diffeo"):
            raise ConfigError("field 'map': suspensions need 'cat' or 'circle_diffeo'")
        if self.manifold != "suspension":
            dim = 1 if self.manifold == "circle" else 2
            if len(self.sizes) != dim:
                raise ConfigError(f"field 'sizes': need {dim} entries")
        if not self.level > 0:
            raise ConfigError("field 'level': must be positive")

    def omega(self) -> geo.ClosedOneFormSpec:
        if self.manifold == "circle":
            return geo.circle_form(self.a) if self.exact == "cos" else geo.harmonic_form((self.a,))
        if self.manifold == "torus2":
            if self.exact == "cos":
                return geo.torus_product_form(self.a, self.b)
            return geo.harmonic_form((self.a, self.b))
        raise ConfigError("suspension scenarios have no closed 1-form mesh")

    def mesh(self) -> geo.PeriodicMesh:
        return geo.PeriodicMesh(len(self.sizes), tuple(self.sizes))

    def suspension(self):
        return dyn.cat_map() if self.map == "cat" else dyn.circle_diffeo()


BUILTINS = {
    "s1_basic": dict(manifold="circle", a=0.5, sizes=(256,), t_grid=(10.0, 15.0, 20.0, 30.0, 40.0),
                     level=10.0),
    "t2_product": dict(manifold="torus2", a=0.5, b=0.6, sizes=(64, 64), t_grid=(15.0, 25.0),
                       level=12.0),
    "catmap_suspension": dict(manifold="suspension", map="cat", level=8.0, t_grid=(1.0,)),
    "circle_diffeo": dict(manifold="suspension", map="circle_diffeo", level=8.0, t_grid=(1.0,)),
}

_FIELDS = {"name", "manifold", "a", "b", "exact", "sizes", "t_grid", "level", "map", "tolerances", "seed"}


def load_scenario(spec: str) -> Scenario:
    if spec in BUILTINS:
        sc = Scenario(name=spec, **BUILTINS[spec])
        sc.validate()
        return sc
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"unknown scenario {spec!r} (built-ins: {', '.join(sorted(BUILTINS))})")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base = {}
    if "builtin" in data:
        if data["builtin"] not in BUILTINS:
            raise ConfigError(f"field 'builtin': unknown scenario {data['builtin']!r}")
        base = dict(BUILTINS[data.pop("builtin")])
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
    base.update(data)
    base.setdefault("name", path.stem)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(base.get("tolerances", {}))
    base["tolerances"] = tol
    try:
        for key in ("a", "b", "level"):
            if key in base:
                base[key] = float(base[key])
        if "sizes" in base:
            base["sizes"] = tuple(int(v) for v in base["sizes"])
        if "t_grid" in base:
            base["t_grid"] = tuple(float(v) for v in base["t_grid"])
        if "seed" in base:
            base["seed"] = int(base["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad numeric field: {exc}") from exc
    sc = Scenario(**base)
    sc.validate()
    return sc


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _check(name, params, value, reference, residual, ok):
    return {"check": name, "params": params, "value": value, "reference": reference,
            "residual": residual, "pass": bool(ok)}


# ---------------------------------------------------------------------------
# subcommands

def cmd_spectrum(sc: Scenario, out: Path, k: int = 8):
    omega, mesh = sc.omega(), sc.mesh()
    rows = []
    for t in sc.t_grid:
        op = geo.assemble(mesh, omega, t)
        for q in range(mesh.dim + 1):
            vals, _ = geo.spectrum(op, q, k)
            rows += [(t, q, i, float(v)) for i, v in enumerate(vals)]
    write_csv(out / "spectrum.csv", ["t", "q", "index", "eigenvalue"], rows)
    return []


def _zero_label(z):
    return "(" + ",".join(f"{c:.6f}" for c in z.coords) + f")[{z.index}]"


def cmd_instantons(sc: Scenario, out: Path):
    data = pl.cached_morse_data(sc.omega())
    rows = []
    for q in range(len(data.zeros) - 1):
        for x in data.zeros[q + 1]:
            for y in data.zeros[q]:
                for inst in dyn.instantons(data.omega, x, y, sc.level):
                    rows.append((_zero_label(x), _zero_label(y), inst.class_value, inst.sign, ""))
    write_csv(out / "instantons.csv", ["source", "target", "class_value", "sign", "p"], rows)
    return []


def cmd_orbits(sc: Scenario, out: Path):
    if sc.manifold != "suspension":
        raise ConfigError("orbits needs a suspension scenario")
    phi = sc.suspension()
    orbits = dyn.closed_orbits(phi, sc.level)
    rows = [("", "", o.class_value, o.sign, o.multiplicity) for o in orbits]
    write_csv(out / "orbits.csv", ["source", "target", "class_value", "sign", "p"], rows)
    z = dyn.counting_series_orbits(phi, sc.level, orbits)
    write_csv(out / "zeta.csv", ["exponent", "coefficient"], list(z.terms))
    return []


def cmd_torsion(sc: Scenario, out: Path):
    omega, mesh = sc.omega(), sc.mesh()
    data = pl.cached_morse_data(omega)
    reg = pl.regularization(omega, _primitive_choices(sc)[0])
    rows = []
    for t in sc.t_grid:
        small, op = pl.small_complex(omega, mesh.sizes, t)
        large = geo.large_torsion(op) if mesh.npoints <= 1024 else float("nan")
        mono = pl.t_hat(small, op, reg, large="monodromy") if mesh.dim == 1 else float("nan")
        rows.append((t, pl.small_complex_log_torsion(small), pl.log_V(small), large, reg, mono))
    write_csv(out / "torsion.csv",
              ["t", "log_T_small", "log_V", "large_torsion_grid", "R", "t_hat_monodromy"], rows)
    return []


def cmd_rho(sc: Scenario, out: Path):
    data = pl.cached_morse_data(sc.omega())
    rows, summary = [], []
    t = sc.t_grid[0]
    for charts in data.charts:
        for ch in charts:
            s, vol = ch.volume_profile()
            shells = ch.shell_integrals(t) if ch.dim else np.zeros_like(s)
            label = _zero_label(ch.center)
            rows += [(label, float(a), float(b), float(c)) for a, b, c in zip(s, vol, shells)]
            summary.append({"zero": label, "growth_constant": dyn.growth_constant(ch),
                            "rho": dyn.rho_estimate(ch), "l1_finite_at_t": dyn.l1_test(ch, t)[0]})
    write_csv(out / "rho.csv", ["zero", "s", "volume", "shell_integral"], rows)
    write_json(out / "rho.json", summary)
    return [_check("rho_nonpositive", {"t": t}, [r["rho"] for r in summary], 0.0, None,
                   all(r["rho"] <= 0 and r["growth_constant"] == 0 for r in summary))]


def _primitive_choices(sc: Scenario):
    n = 1 if sc.manifold == "circle" else 2
    return (pl.PrimitiveChoice((0.0,) * n, (0.5,) * n),
            pl.PrimitiveChoice((math.pi,) * n, (1.0,) * n))


def verify_thm1(sc: Scenario):
    omega, mesh = sc.omega(), sc.mesh()
    data = pl.cached_morse_data(omega)
    checks, logs = [], []
    for t in sc.t_grid:
        op = geo.assemble(mesh, omega, t)
        counts, ok = [], True
        for q in range(mesh.dim + 1):
            try:
                split = geo.small_large_split(op, q)
                counts.append(len(split.small))
                if q == 0 and len(split.small):
                    logs.append(math.log(split.small[0]))
            except geo.GapViolation:
                counts.append(None)
                ok = False
        ok = ok and tuple(counts) == data.counts
        checks.append(_check("thm1_small_count", {"t": t, "sizes": list(mesh.sizes)}, counts,
                             list(data.counts), None, ok))
    if len(logs) == len(sc.t_grid) and len(logs) > 1:
        slope = float(np.polyfit(sc.t_grid, logs, 1)[0])
        dec = all(b < a for a, b in zip(logs, logs[1:]))
        checks.append(_check("thm1_log_small_decreasing", {"t_grid": list(sc.t_grid)}, logs,
                             None, slope, dec and slope < 0))
    return checks


def verify_thm2(sc: Scenario):
    omega, mesh = sc.omega(), sc.mesh()
    devs = [pl.small_complex(omega, mesh.sizes, t)[0].gram_deviation() for t in sc.t_grid]
    consts = [d * t for d, t in zip(devs, sc.t_grid)]
    slack = sc.tolerances["gram_slack"]
    ratios = []
    ok = True
    for (t0, d0), (t1, d1) in zip(zip(sc.t_grid, devs), zip(sc.t_grid[1:], devs[1:])):
        # deviation ~ c/t: d1 <= d0 * (t0/t1) * (1 + slack)
        ratios.append(d1 / d0 * t1 / t0)
        ok = ok and d1 <= d0 * (t0 / t1) * (1 + slack)
    return [_check("thm2_gram_isometry", {"t_grid": list(sc.t_grid)}, devs, max(consts),
                   ratios, ok)]


def verify_thm3(sc: Scenario):
    omega, mesh = sc.omega(), sc.mesh()
    ser = pl.cached_series_matrices(omega, sc.level)
    tol = sc.tolerances["thm3_" + sc.manifold]
    out = []
    for t in sc.t_grid:
        small, _ = pl.small_complex(omega, mesh.sizes, t)
        err = pl.incidence_error(small, ser)
        out.append(_check("thm3_incidence_vs_laplace", {"t": t, "sizes": list(mesh.sizes)},
                          [m.tolist() for m in small.incidence],
                          [m.tolist() for m in pl.laplace_matrices(ser, t)], err, err <= tol))
    return out


def verify_e32(sc: Scenario):
    omega, mesh = sc.omega(), sc.mesh()
    data = pl.cached_morse_data(omega)
    ser = pl.cached_series_matrices(omega, sc.level)
    tol = sc.tolerances["e32"]
    out = []
    for t in sc.t_grid:
        small, _ = pl.small_complex(omega, mesh.sizes, t)
        res = pl.novikov_torsion_check(small, data, sc.level, ser)
        out.append(_check("e32_novikov_naturality", {"t": t, "level": sc.level}, res, 0.0,
                          abs(res), abs(res) <= tol))
    return out


def verify_zeta(sc: Scenario):
    if sc.manifold != "suspension":
        raise ConfigError("verify zeta needs a suspension scenario")
    phi = sc.suspension()
    nmax = int(sc.level)
    z = dyn.counting_series_orbits(phi, sc.level)
    lz = dyn.lefschetz_zeta(phi, nmax)
    ez = exp_series(z, z.cutoff)
    diff = (ez - lz).truncate(z.cutoff)
    return [_check("zeta_exp_equals_lefschetz", {"map": sc.map, "max_n": nmax},
                   [str(c) for c in ez.coefficients()], [str(c) for c in lz.coefficients()],
                   len(diff.terms), diff.is_zero)]


def verify_reg(sc: Scenario):
    omega = sc.omega()
    c1, c2 = _primitive_choices(sc)
    r1, r2 = pl.regularization(omega, c1), pl.regularization(omega, c2)
    r_double = pl.regularization(omega.scaled(2.0), c1, field_form=omega)
    return [
        _check("reg_f_independence", {"cuts": [asdict(c1), asdict(c2)]}, r1, r2, abs(r1 - r2),
               abs(r1 - r2) <= sc.tolerances["reg"]),
        _check("reg_linearity", {"scale": 2.0}, r_double, 2 * r1, abs(r_double - 2 * r1),
               abs(r_double - 2 * r1) <= sc.tolerances["linearity"]),
    ]


VERIFIERS = {"thm1": verify_thm1, "thm2": verify_thm2, "thm3": verify_thm3,
             "e32": verify_e32, "zeta": verify_zeta, "reg": verify_reg}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="witten-novikov", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["spectrum", "instantons", "orbits", "torsion", "rho", "verify"])
    p.add_argument("args", nargs="*", help="verify check name and/or scenario")
    p.add_argument("--scenario", help="built-in name or JSON path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--t", dest="t_grid", help="comma-separated t values")
    p.add_argument("--level", type=float, help="class-value cutoff")
    p.add_argument("--seed", type=int, help="seed (recorded; all runs are deterministic)")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        args = list(ns.args)
        check = None
        if ns.command == "verify":
            if not args or args[0] not in VERIFY_CHECKS:
                raise ConfigError(f"verify needs one of {', '.join(VERIFY_CHECKS)}")
            check = args.pop(0)
        spec = ns.scenario or (args.pop(0) if args else None)
        if spec is None:
            raise ConfigError("no scenario given")
        if args:
            raise ConfigError(f"unexpected arguments {args}")
        sc = load_scenario(spec)
        if ns.t_grid:
            try:
                sc.t_grid = tuple(float(v) for v in ns.t_grid.split(","))
            except ValueError as exc:
                raise ConfigError(f"--t: {exc}") from exc
        if ns.level is not None:
            sc.level = ns.level
        if ns.seed is not None:
            sc.seed = ns.seed
        sc.validate()
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        if ns.command == "verify":
            checks = VERIFIERS[check](sc)
            write_json(out / f"verify_{check}.json",
                       {"scenario": asdict(sc), "checks": checks})
        else:
            cmd = {"spectrum": cmd_spectrum, "instantons": cmd_instantons, "orbits": cmd_orbits,
                   "torsion": cmd_torsion, "rho": cmd_rho}[ns.command]
            checks = cmd(sc, out)
    except (ConfigError, geo.GeometryError, dyn.DynamicsError, pl.PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['check']} {json.dumps(_jsonable(c['params']), sort_keys=True)}")
    return 0 if all(c["pass"] for c in checks) else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
