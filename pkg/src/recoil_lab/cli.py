"""Command-line front end: ``recoil-lab {force,decay,trap,sweep,selftest}``.

Data goes to stdout or ``--output``; diagnostics and errors go to stderr.
Exit codes: 0 success, 1 failed self-test, 2 invalid input, 3 numerical
guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .dynamics import AtomState, Branch, DecayScenario, integrate_scenario
from .errors import DomainError, NumericalGuardError
from .force import (
    McSpec,
    friction_force,
    friction_force_montecarlo,
    friction_force_quadrature_primed,
    friction_force_quadrature_unprimed,
    naive_doppler_force,
    naive_doppler_force_quadrature,
)
from .iontrap import PUBLISHED_EPSILON_YB171, IonSpec, TrapSpec, feasibility_report, get_ion, load_ion_catalog
from .kinematics import Tier, Velocity
from .patterns import DipoleDensity, EmissionPattern, IsotropicDensity, load_tabulated_csv
from .quadrature import QuadratureSpec

SCHEMA_VERSION = "1"
METHOD_CHOICES = ("closed", "unprimed", "primed", "mc", "naive")
SWEEP_VARIABLES = ("beta", "omega0", "gamma", "trap_frequency", "samples")


class UsageError(DomainError):
    pass


def _count(text: str) -> int:
    """Non-negative integer that may also be written in float notation, e.g. 1e6."""
    try:
        value = int(text)
    except ValueError:
        as_float = float(text)
        if not as_float.is_integer():
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
        value = int(as_float)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text!r} is negative")
    return value


def _vector(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return "" if x is None else str(x)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class Emitter:
    """Writes one JSON document or one CSV table to stdout or a file."""

    def __init__(self, args):
        self.fmt = args.format
        self.path = args.output

    def emit(self, header: dict, rows: list[dict], columns: list[str]) -> None:
        if self.fmt == "json":
            doc = {"schema_version": SCHEMA_VERSION, **header, "rows": rows}
            text = json.dumps(_json_safe(doc), indent=2, allow_nan=False) + "\n"
        else:
            buf = io.StringIO()
            for key, value in header.items():
                if not isinstance(value, (dict, list)):
                    buf.write(f"# {key}: {_fmt(value)}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row.get(c)) for c in columns])
            text = buf.getvalue()
        if self.path:
            Path(self.path).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)


def _resolve_seed(args) -> int:
    if args.seed is None:
        # recorded in the output header so the run can be reproduced
        args.seed = secrets.randbits(63)
    return args.seed


def _pattern(args, omega0: float, gamma: float) -> EmissionPattern:
    if args.pattern == "isotropic":
        angular = IsotropicDensity()
    elif args.pattern == "dipole":
        angular = DipoleDensity(args.dipole_axis)
    else:
        if not args.table:
            raise UsageError("--pattern tabulated needs --table FILE.csv")
        angular = load_tabulated_csv(args.table)
    return EmissionPattern(omega0, gamma, angular)


def _velocity(args) -> Velocity:
    if args.v_mps is not None:
        return Velocity.from_array(np.asarray(args.direction) / np.linalg.norm(args.direction) * args.v_mps)
    return Velocity.from_beta(args.beta, args.direction)


def _force_rows(args, p: EmissionPattern, v: Velocity, methods, mc_samples: int) -> list[dict]:
    q = QuadratureSpec(args.n_cos, args.n_phi)
    tier = Tier.coerce(args.tier)
    rows = []
    for m in methods:
        if m == "closed":
            res = friction_force(p, v, args.t_s)
        elif m == "unprimed":
            res = friction_force_quadrature_unprimed(p, v, args.t_s, q, tier)
        elif m == "primed":
            res = friction_force_quadrature_primed(p, v, args.t_s, q, tier)
        elif m == "mc":
            spec = McSpec(mc_samples, args.seed, not args.no_antithetic)
            res = friction_force_montecarlo(p, v, args.t_s, spec, tier, workers=args.workers)
        else:
            if isinstance(p.angular, IsotropicDensity):
                res = naive_doppler_force(p, v, args.t_s)
            else:
                res = naive_doppler_force_quadrature(p, v, args.t_s, q)
        rows.append(
            {
                "method": res.method,
                "tier": res.tier,
                "Fx_N": res.force[0],
                "Fy_N": res.force[1],
                "Fz_N": res.force[2],
                "stderr_x_N": res.stderr[0],
                "stderr_y_N": res.stderr[1],
                "stderr_z_N": res.stderr[2],
                "samples": res.samples,
            }
        )
    return rows


FORCE_COLUMNS = ["method", "tier", "Fx_N", "Fy_N", "Fz_N", "stderr_x_N", "stderr_y_N", "stderr_z_N", "samples"]


def cmd_force(args) -> int:
    seed = _resolve_seed(args)
    p = _pattern(args, 2.0 * math.pi * args.omega0_thz * 1e12, args.gamma_per_s)
    v = _velocity(args)
    methods = METHOD_CHOICES if args.compare else (args.method,)
    rows = _force_rows(args, p, v, methods, args.samples)
    header = {
        "command": "force",
        "seed": seed,
        "pattern": args.pattern,
        "omega0_rad_s": p.omega0,
        "gamma_per_s": p.gamma_total,
        "beta": v.beta(),
        "t_s": args.t_s,
    }
    if args.compare:
        by = {r["method"]: r for r in rows}
        closed = np.array([by["closed_form"][k] for k in ("Fx_N", "Fy_N", "Fz_N")])
        naive = np.array([by["naive"][k] for k in ("Fx_N", "Fy_N", "Fz_N")])
        norm = float(np.dot(closed, closed))
        header["naive_to_correct_ratio"] = float(np.dot(naive, closed) / norm) if norm > 0 else None
    Emitter(args).emit(header, rows, FORCE_COLUMNS)
    return 0


def _ion_from_args(args, catalog=None) -> IonSpec:
    if args.ion:
        return get_ion(args.ion, catalog)
    if args.mass_u is None or args.omega0_thz is None:
        raise UsageError("give --ion NAME or both --mass-u and --omega0-thz")
    lifetime = math.inf if args.lifetime_s is None else args.lifetime_s
    return IonSpec.from_amu(args.mass_u, args.omega0_thz * 1e12, lifetime, name="custom")


def cmd_decay(args) -> int:
    catalog = load_ion_catalog(args.catalog) if args.catalog else None
    ion = _ion_from_args(args, catalog)
    gamma = args.gamma_per_s
    if gamma is None:
        gamma = 1.0 / ion.excited_lifetime if math.isfinite(ion.excited_lifetime) else 1.0
    branch = Branch.coerce(args.branch)
    v0 = Velocity.from_array(np.asarray(args.direction) / np.linalg.norm(args.direction) * args.v0_mps)
    s = DecayScenario(branch, ion.omega0, gamma, AtomState(ion.mass, v0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = integrate_scenario(s, args.dt_gamma / gamma, args.steps)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if branch is Branch.CONSTANT_MASS:
        summary = {"v_inf_over_v0": math.exp(-s.epsilon), "v_inf_over_v0_minus_1": math.expm1(-s.epsilon)}
        text = f"v(inf)/v(0) = exp(-eps) = 1 - {-math.expm1(-s.epsilon):.6e}"
    else:
        summary = {"delta_m_inf_kg": -s.mass_defect}
        text = f"m(inf) - m(0) = -hbar*omega0/c^2 = {-s.mass_defect:.6e} kg"
    header = {
        "command": "decay",
        "branch": branch.value,
        "ion": ion.name,
        "mass_kg": ion.mass,
        "omega0_rad_s": ion.omega0,
        "gamma_per_s": gamma,
        "epsilon": s.epsilon,
        **summary,
    }
    rows = [
        {
            "t_s": traj.times[i],
            "mass_excess_kg": traj.mass_excess[i],
            "vx": traj.velocities[i, 0],
            "vy": traj.velocities[i, 1],
            "vz": traj.velocities[i, 2],
            "excited_prob": traj.excited_prob[i],
        }
        for i in range(len(traj))
    ]
    Emitter(args).emit(header, rows, ["t_s", "mass_excess_kg", "vx", "vy", "vz", "excited_prob"])
    print(text, file=sys.stdout if args.output else sys.stderr)
    return 0


REPORT_COLUMNS = [
    "ion",
    "epsilon",
    "epsilon_source",
    "omega_ground",
    "omega_excited",
    "omega_excited_first_order",
    "delta_omega",
    "separation_time",
    "separation_time_exact",
    "period_count",
    "period_count_exact",
    "excited_lifetime",
    "lifetime_margin",
    "feasible",
    "separation_time_text",
]


def _trap_report(args, trap_mhz: float) -> dict:
    catalog = load_ion_catalog(args.catalog) if args.catalog else None
    ion = _ion_from_args(args, catalog)
    epsilon = PUBLISHED_EPSILON_YB171 if args.paper_epsilon else args.epsilon
    rep = feasibility_report(TrapSpec.from_mhz(trap_mhz), ion, epsilon)
    d = rep.to_dict()
    d["trap_mhz"] = trap_mhz
    return d


def cmd_trap(args) -> int:
    d = _trap_report(args, args.trap_mhz)
    Emitter(args).emit({"command": "trap"}, [d], ["trap_mhz"] + REPORT_COLUMNS)
    return 0


def _sweep_points(args) -> np.ndarray:
    if args.num < 1:
        raise UsageError("--num must be at least 1")
    if args.start == args.stop:
        return np.array([args.start])
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise UsageError("--log needs positive --start and --stop")
        return np.geomspace(args.start, args.stop, args.num)
    return np.linspace(args.start, args.stop, args.num)


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    points = _sweep_points(args)
    rows = []
    if args.variable == "trap_frequency":
        for x in points:
            rows.append(_trap_report(args, float(x)))
        columns = ["trap_mhz"] + REPORT_COLUMNS
    else:
        methods = args.methods.split(",") if args.methods else METHOD_CHOICES
        bad = set(methods) - set(METHOD_CHOICES)
        if bad:
            raise UsageError(f"unknown methods {sorted(bad)}; choose from {', '.join(METHOD_CHOICES)}")
        for x in points:
            omega0_thz, gamma, beta, samples = args.omega0_thz, args.gamma_per_s, args.beta, args.samples
            if args.variable == "beta":
                beta = float(x)
            elif args.variable == "omega0":
                omega0_thz = float(x)
            elif args.variable == "gamma":
                gamma = float(x)
            elif args.variable == "samples":
                samples = int(round(x))
                samples += samples % 2 if not args.no_antithetic else 0
            p = _pattern(args, 2.0 * math.pi * omega0_thz * 1e12, gamma)
            v = Velocity.from_beta(beta, args.direction)
            row = {"variable": args.variable, "value": float(x), "samples": samples, "beta": beta}
            for r in _force_rows(args, p, v, methods, samples):
                tag = r["method"]
                for comp in ("Fx_N", "Fy_N", "Fz_N"):
                    row[f"{tag}_{comp}"] = r[comp]
                if tag == "monte_carlo":
                    for comp in ("stderr_x_N", "stderr_y_N", "stderr_z_N"):
                        row[f"{tag}_{comp}"] = r[comp]
            rows.append(row)
        columns = list(rows[0].keys())
    header = {"command": "sweep", "variable": args.variable, "seed": seed}
    Emitter(args).emit(header, rows, columns)
    return 0


def cmd_selftest(args) -> int:
    results = run_all(verbose=args.verbose, stream=sys.stdout)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), default="json")
    g.add_argument("--output", "-o", default=None, help="write data here instead of stdout")
    g.add_argument("--seed", type=_count, default=None, help="Monte Carlo seed; drawn and recorded if omitted")
    g.add_argument("--tier", choices=("first-order", "exact"), default="first-order")


def _emitter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pattern", choices=("isotropic", "dipole", "tabulated"), default="isotropic")
    parser.add_argument("--dipole-axis", type=_vector, default=(0.0, 0.0, 1.0), metavar="X,Y,Z")
    parser.add_argument("--table", default=None, help="CSV density table for --pattern tabulated")
    parser.add_argument("--omega0-thz", type=float, default=642.0, help="transition frequency omega0/2pi in THz")
    parser.add_argument("--gamma-per-s", type=float, default=3.2e7, help="total decay rate in 1/s")
    parser.add_argument("--beta", type=float, default=1e-3, help="speed as a fraction of c")
    parser.add_argument("--direction", type=_vector, default=(0.0, 0.0, 1.0), metavar="X,Y,Z")
    parser.add_argument("--t-s", type=float, default=0.0, help="time since preparation in s")
    parser.add_argument("--n-cos", type=int, default=64)
    parser.add_argument("--n-phi", type=int, default=16)
    parser.add_argument("--samples", type=_count, default=1_000_000)
    parser.add_argument(
        "--no-antithetic",
        action="store_true",
        help="plain sampling; a 1%% estimate at beta=1e-3 then needs about 3e9 samples",
    )
    parser.add_argument("--workers", type=int, default=1)


def _ion_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ion", default=None, help="catalog entry, e.g. yb171")
    parser.add_argument("--catalog", default=None, help="ion catalog CSV (default: bundled)")
    parser.add_argument("--mass-u", type=float, default=None)
    parser.add_argument("--omega0-thz", type=float, default=None, help="transition frequency omega0/2pi in THz")
    parser.add_argument("--lifetime-s", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recoil-lab",
        description="Recoil force on moving emitters, mass-defect dynamics and ion-trap estimates.",
        epilog="exit codes: 0 ok, 1 self-test failure, 2 invalid input, 3 numerical guard",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("force", help="recoil force on a moving emitter")
    _emitter_args(f)
    f.add_argument("--v-mps", type=float, default=None, help="speed in m/s (overrides --beta)")
    f.add_argument("--method", choices=METHOD_CHOICES, default="closed")
    f.add_argument("--compare", action="store_true", help="run every method and report naive/correct")
    _common(f)
    f.set_defaults(func=cmd_force)

    d = sub.add_parser("decay", help="integrate the constant-mass or constant-velocity branch")
    d.add_argument("--branch", choices=("constant-mass", "constant-velocity"), required=True)
    _ion_args(d)
    d.add_argument("--gamma-per-s", type=float, default=None, help="decay rate (default 1/lifetime, or 1 if infinite)")
    d.add_argument("--v0-mps", type=float, default=1.0)
    d.add_argument("--direction", type=_vector, default=(0.0, 0.0, 1.0), metavar="X,Y,Z")
    d.add_argument("--dt-gamma", type=float, default=1e-3, help="step size in units of 1/gamma")
    d.add_argument("--steps", type=_count, default=20_000)
    _common(d)
    d.set_defaults(func=cmd_decay)

    t = sub.add_parser("trap", help="ion-trap feasibility report")
    _ion_args(t)
    t.add_argument("--trap-mhz", type=float, required=True, help="ground-state trap frequency Omega/2pi in MHz")
    t.add_argument("--paper-epsilon", action="store_true", help=f"use the published eps = {PUBLISHED_EPSILON_YB171:g}")
    t.add_argument("--epsilon", type=float, default=None, help="explicit eps override")
    _common(t)
    t.set_defaults(func=cmd_trap)

    s = sub.add_parser("sweep", help="tabulate outputs over one parameter")
    s.add_argument("--variable", choices=SWEEP_VARIABLES, required=True)
    s.add_argument("--start", type=float, required=True)
    s.add_argument("--stop", type=float, required=True)
    s.add_argument("--num", type=int, default=11)
    s.add_argument("--log", action="store_true", help="geometric spacing")
    s.add_argument("--methods", default=None, help=f"comma list from {','.join(METHOD_CHOICES)} (default all)")
    _emitter_args(s)
    s.set_defaults(samples=10_000)
    s.add_argument("--ion", default="yb171", help="ion for --variable trap_frequency")
    s.add_argument("--catalog", default=None)
    s.add_argument("--mass-u", type=float, default=None)
    s.add_argument("--lifetime-s", type=float, default=None)
    s.add_argument("--paper-epsilon", action="store_true")
    s.add_argument("--epsilon", type=float, default=None)
    _common(s)
    s.set_defaults(func=cmd_sweep, format="csv")

    st = sub.add_parser("selftest", help="run the acceptance checks")
    st.add_argument("--verbose", "-v", action="store_true")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "tier"):
        args.tier = args.tier.replace("-", "_")
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
