"""Command-line interface.

Every command reads an optional JSON config (``--config``), lets command
flags override it, and writes its artifacts atomically into ``--out``.

Exit status: 0 on success, 1 when ``check-hypotheses`` finds a failing
hypothesis, 2 for usage or config errors, 3 when the computation itself
raises (for example a non-positive zeta(U0)).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import jsonschema
import numpy as np

from . import examples, hypotheses, manifolds, navier_stokes
from .block_reduction import polynomial_map, residual_check
from .core import SystemSpec, atomic_write
from .errors import SingularODEError, UnknownName
from .integrate import IntegrationOptions, integrate_singular

MAX_DEGREE = 4

_POLY = {
    "type": "array",
    "items": {
        "type": "array",
        "prefixItems": [{"type": "number"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}],
        "minItems": 2,
        "maxItems": 2,
    },
}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC = {"type": "array", "items": {"type": "number"}}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "system": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["dim", "F", "zeta"],
                    "properties": {
                        "name": {"type": "string"},
                        "dim": {"type": "integer", "minimum": 1},
                        "F": {"type": "array", "items": _POLY},
                        "zeta": _POLY,
                        "origin": _VEC,
                        "equilibria": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["point", "directions"],
                            "properties": {"point": _VEC, "directions": {"type": "array", "items": _VEC}},
                        },
                    },
                },
            ]
        },
        "U0": _VEC,
        "horizon": _POS,
        "order": {"type": "integer", "minimum": 2, "maximum": 8},
        "half_width": _POS,
        "n_samples": {"type": "integer", "minimum": 1},
        "n_base": {"type": "integer", "minimum": 2},
        "zeta_max": _POS,
        "rtol": _POS,
        "atol": _POS,
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POS for k in ("tol_S", "tol_grad", "tol_h4", "tol_h5", "tol_eq", "tol_rank", "tol_dir")},
        },
        "gas": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"gamma": {"type": "number", "exclusiveMinimum": 1}, "R_gas": _POS},
        },
        "state": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "sigma": {"type": "number"},
        "amplitude": {"type": "number", "minimum": 0},
        "length": _POS,
    },
}


class ConfigError(Exception):
    pass


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    sysdef = cfg.get("system")
    if isinstance(sysdef, dict):
        d = sysdef["dim"]
        if len(sysdef["F"]) != d:
            raise ConfigError(f"F has {len(sysdef['F'])} components, expected {d}")
        for poly in list(sysdef["F"]) + [sysdef["zeta"]]:
            for _, exps in poly:
                if len(exps) != d:
                    raise ConfigError(f"monomial {exps} must have {d} exponents")
                if sum(exps) > MAX_DEGREE:
                    raise ConfigError(f"monomial {exps} exceeds degree {MAX_DEGREE}")


def inline_system(sysdef: dict):
    d = sysdef["dim"]
    fs = [polynomial_map(p, d) for p in sysdef["F"]]
    zf = polynomial_map(sysdef["zeta"], d)

    def F(U):
        vals = [f(U) for f in fs]
        if all(isinstance(v, float) for v in vals):
            return np.array(vals)
        out = np.empty(d, dtype=object)
        out[:] = vals
        return out

    try:
        spec = SystemSpec(dim=d, F=F, zeta=zf, origin=sysdef.get("origin"), name=sysdef.get("name", "inline"))
    except SingularODEError as exc:
        raise ConfigError(str(exc)) from exc
    eq = None
    if "equilibria" in sysdef:
        point = np.asarray(sysdef["equilibria"]["point"], dtype=float)
        D = np.asarray(sysdef["equilibria"]["directions"], dtype=float).T
        eq = hypotheses.EquilibriumManifold(param=lambda s: point + D @ np.asarray(s), dim=D.shape[1],
                                            origin_param=np.zeros(D.shape[1]), tangent=lambda s: D)
    return spec, eq


def resolve_system(args, cfg):
    name = args.system if getattr(args, "system", None) else cfg.get("system", None)
    if name is None:
        raise ConfigError("no system given: use --system or a config 'system' entry")
    if isinstance(name, dict):
        return inline_system(name)
    try:
        ex = examples.load_example(name)
    except UnknownName as exc:
        raise ConfigError(str(exc.args[0])) from exc
    return ex.spec, ex.equilibria


def _pick(args, cfg, key, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return cfg.get(key, default)


def _vector(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _out(args, cfg, name):
    return os.path.join(_pick(args, cfg, "out", "."), name)


def _tolerances(cfg):
    return hypotheses.Tolerances(**cfg.get("tolerances", {}))


# ---------------------------------------------------------------------------
# commands

def cmd_check_hypotheses(args, cfg) -> int:
    spec, eq = resolve_system(args, cfg)
    report = hypotheses.audit(spec, eq, half_width=_pick(args, cfg, "half_width", 0.1),
                              n=_pick(args, cfg, "n_samples", 64), order=_pick(args, cfg, "order", 3),
                              tol=_tolerances(cfg), seed=_pick(args, cfg, "seed", 0))
    path = _out(args, cfg, "hypotheses.json")
    atomic_write(path, _dump(report.to_dict()))
    for key, v in report.verdicts.items():
        print(f"{key}: {v.status} (margin {v.margin:.3g})")
    return 0 if report.all_pass else 1


def _integration_options(args, cfg, **extra):
    return IntegrationOptions(rtol=_pick(args, cfg, "rtol", 1e-10), atol=_pick(args, cfg, "atol", 1e-12), **extra)


def _u0(args, cfg, dim):
    U0 = _pick(args, cfg, "U0")
    if U0 is None:
        raise ConfigError("initial state required: use --u0 or a config 'U0' entry")
    if len(U0) != dim:
        raise ConfigError(f"U0 has {len(U0)} entries, expected {dim}")
    return np.asarray(U0, dtype=float)


def cmd_integrate(args, cfg) -> int:
    spec, _ = resolve_system(args, cfg)
    U0 = _u0(args, cfg, spec.dim)
    traj = integrate_singular(spec, U0, _pick(args, cfg, "horizon", 1.0), _integration_options(args, cfg))
    path = _out(args, cfg, "trajectory.csv")
    traj.to_csv(path)
    print(f"{traj.termination} at t = {traj.t[-1]:.12g}; wrote {path}")
    return 0


def cmd_center_manifold(args, cfg) -> int:
    spec, _ = resolve_system(args, cfg)
    cm = manifolds.center_manifold(spec, _pick(args, cfg, "order", 3))
    path = _out(args, cfg, "center_manifold.json")
    atomic_write(path, _dump(cm.to_dict()))
    print(f"center manifold of dimension {cm.k}, residual {cm.residual:.3g}; wrote {path}")
    return 0


def _bundle(args, cfg, spec, eq):
    if eq is None:
        raise ConfigError("this system has no equilibrium manifold; give system.equilibria in the config")
    return manifolds.uniformly_stable_manifold(spec, eq, n_base=_pick(args, cfg, "n_base", 8),
                                               zeta_max=_pick(args, cfg, "zeta_max", 0.1),
                                               order=_pick(args, cfg, "order", 3))


def cmd_stable_manifold(args, cfg) -> int:
    spec, eq = resolve_system(args, cfg)
    bundle = _bundle(args, cfg, spec, eq)
    path = _out(args, cfg, "stable_manifold.json")
    atomic_write(path, _dump(bundle.to_dict()))
    print(f"{len(bundle.fibers)} fibers of dimension {bundle.stable_dim}; wrote {path}")
    return 0


def cmd_decompose(args, cfg) -> int:
    spec, eq = resolve_system(args, cfg)
    U0 = _u0(args, cfg, spec.dim)
    horizon = _pick(args, cfg, "horizon", 4.0)
    n = _pick(args, cfg, "n_samples", 201)
    bundle = _bundle(args, cfg, spec, eq)
    opts = IntegrationOptions(rtol=_pick(args, cfg, "rtol", 1e-13), atol=_pick(args, cfg, "atol", 1e-16),
                              t_eval=tuple(np.linspace(0.0, horizon, n)), tol_eq=0.0)
    traj = integrate_singular(spec, U0, horizon, opts)
    dec = manifolds.decompose_orbit(spec, bundle, traj)
    out = _pick(args, cfg, "out", ".")
    traj.to_csv(os.path.join(out, "orbit.csv"))
    dec.slow.to_csv(os.path.join(out, "slow.csv"))
    dec.fast.to_csv(os.path.join(out, "fast.csv"))
    dec.pert.to_csv(os.path.join(out, "pert.csv"))
    summary = {
        "c_estimate": dec.c_estimate,
        "limit_equilibrium": [float(a) for a in dec.limit_equilibrium],
        "fast_rate": dec.fast_rate,
        "max_pert": float(np.max(np.abs(dec.pert.U))),
    }
    atomic_write(os.path.join(out, "decomposition.json"), _dump(summary))
    print(f"max |pert| = {summary['max_pert']:.3g}, c_estimate = {dec.c_estimate:.3g}")
    return 0


def cmd_ns_profile(args, cfg) -> int:
    gas_cfg = dict(cfg.get("gas", {}))
    if args.gamma is not None:
        gas_cfg["gamma"] = args.gamma
    if args.R is not None:
        gas_cfg["R_gas"] = args.R
    try:
        gas = navier_stokes.GasModel(**gas_cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    state = _pick(args, cfg, "state", [1.0, 0.1, 1.0])
    if len(state) != 3:
        raise ConfigError("state must be rho,v,e")
    sigma = _pick(args, cfg, "sigma", 0.0)
    traj = navier_stokes.compute_profile(gas, state, sigma, length=_pick(args, cfg, "length", 2.0),
                                         amplitude=_pick(args, cfg, "amplitude", 1e-3),
                                         n_samples=_pick(args, cfg, "n_samples", 201))
    report = navier_stokes.hypothesis_report(gas, state, sigma, half_width=_pick(args, cfg, "half_width", 0.1))
    residual = residual_check(navier_stokes.build_steady_system(gas, sigma), traj)
    out = _pick(args, cfg, "out", ".")
    traj.to_csv(os.path.join(out, "ns_profile.csv"))
    sidecar = {"hypotheses": report.to_dict(), "residual": residual, "sigma": sigma,
               "state": [float(x) for x in state], "gamma": gas.gamma, "R_gas": gas.R_gas}
    atomic_write(os.path.join(out, "ns_profile.json"), _dump(sidecar))
    print(f"profile with min v = {traj.U[:, 1].min():.6g}, residual {residual:.3g}")
    return 0


COMMANDS = {
    "check-hypotheses": cmd_check_hypotheses,
    "integrate": cmd_integrate,
    "center-manifold": cmd_center_manifold,
    "stable-manifold": cmd_stable_manifold,
    "decompose": cmd_decompose,
    "ns-profile": cmd_ns_profile,
}


def _global_flags(parser, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", help="JSON config file", **kw)
    parser.add_argument("--out", help="output directory", **kw)
    parser.add_argument("--seed", type=int, help="seed for randomized sampling", **kw)
    parser.add_argument("--system", help="built-in system name", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singular-ode", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-hypotheses", parents=[common], help="audit the five hypotheses")
    p.add_argument("--half-width", dest="half_width", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--order", type=int)

    p = sub.add_parser("integrate", parents=[common], help="integrate dU/dt = F/zeta")
    p.add_argument("--u0", dest="U0", type=_vector)
    p.add_argument("--horizon", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)

    p = sub.add_parser("center-manifold", parents=[common], help="Taylor center manifold at the origin")
    p.add_argument("--order", type=int)

    p = sub.add_parser("stable-manifold", parents=[common], help="stable fibers over the equilibria")
    p.add_argument("--order", type=int)
    p.add_argument("--n-base", dest="n_base", type=int)
    p.add_argument("--zeta-max", dest="zeta_max", type=float)

    p = sub.add_parser("decompose", parents=[common], help="slow/fast/perturbation split of one orbit")
    p.add_argument("--u0", dest="U0", type=_vector)
    p.add_argument("--horizon", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--n-base", dest="n_base", type=int)
    p.add_argument("--zeta-max", dest="zeta_max", type=float)

    p = sub.add_parser("ns-profile", parents=[common], help="Navier-Stokes steady or travelling profile")
    p.add_argument("--gamma", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--state", type=_vector, help="rho,v,e of the anchor state")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--length", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--half-width", dest="half_width", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SingularODEError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
