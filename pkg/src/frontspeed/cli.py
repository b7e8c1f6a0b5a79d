"""Command-line front end.

    frontspeed speed      --config problem.json
    frontspeed check      --config problem.json
    frontspeed trajectory --config problem.json --c 0.27 --out traj.csv
    frontspeed profile    --config problem.json [--c VALUE]
    frontspeed epsilon    --config problem.json --eps 0.25,0.5,1
    frontspeed burgers    --config problem.json 1 0

Exit codes: 0 success, 1 configuration error, 2 hypothesis violation,
3 no admissible speed found.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import ParameterRangeError, build_report
from .burgers import BurgersConditionError, burgers_profile, burgers_speed
from .expr import GRAMMAR_HELP, DomainError, ExprSyntaxError
from .integrate import SolverOptions
from .model import HypothesisError, ProblemSpec, make_spec, reduce
from .profile import ProfileError, epsilon_scan, reconstruct_wave
from .speed import find_speed, mismatch_BC, trajectories_at

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NOT_FOUND = 0, 1, 2, 3

CONFIG_FIELDS = {
    "f", "h", "D", "epsilon", "class_override", "solver", "bracket_override",
    "eta", "kappa", "zeta", "output", "name", "description", "reference", "eps_list",
}
SOLVER_FIELDS = {"step", "tol_c", "tol_match", "method"}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    f: str
    h: str = "0"
    D: str = "u"
    epsilon: float = 1.0
    class_override: str | None = None
    solver: dict = field(default_factory=dict)
    bracket_override: tuple[float, float] | None = None
    eta: float | None = None
    kappa: float | None = None
    zeta: float | None = None
    output: dict = field(default_factory=dict)
    name: str = ""
    description: str = ""
    reference: dict = field(default_factory=dict)
    eps_list: list[float] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        unknown = set(data) - CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "f" not in data:
            raise ConfigError("config needs the reaction term 'f'")
        solver = data.get("solver", {}) or {}
        bad = set(solver) - SOLVER_FIELDS
        if bad:
            raise ConfigError(f"unknown solver field(s): {', '.join(sorted(bad))}")
        bracket = data.get("bracket_override")
        if bracket is not None:
            if len(bracket) != 2 or not bracket[0] < bracket[1]:
                raise ConfigError("bracket_override must be [lo, hi] with lo < hi")
            bracket = (float(bracket[0]), float(bracket[1]))
        kw = {k: v for k, v in data.items() if k not in ("solver", "bracket_override")}
        return cls(solver=solver, bracket_override=bracket, **kw)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def spec(self, epsilon: float | None = None) -> ProblemSpec:
        try:
            return make_spec(self.f, self.h, self.D, self.epsilon if epsilon is None else epsilon,
                             self.class_override)
        except (ExprSyntaxError, DomainError) as exc:
            raise ConfigError(str(exc)) from None

    def options(self, method: str | None = None, step: float | None = None) -> SolverOptions:
        kw = dict(self.solver)
        if method:
            kw["method"] = method
        if step:
            kw["step"] = step
        if kw.get("method") == "euler" and "step" not in kw:
            kw["step"] = 5e-4
        try:
            return SolverOptions(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver options: {exc}") from None


# ---------------------------------------------------------------- output helpers

def _g(x) -> str:
    if x is None:
        return "-"
    return f"{x:.6g}"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, cfg: Config, text: str):
    path = args.out or cfg.output.get("path")
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _format(args, cfg: Config, default: str) -> str:
    return args.format or cfg.output.get("format") or default


# ---------------------------------------------------------------- commands

def cmd_speed(args, cfg: Config) -> int:
    spec = cfg.spec(args.eps_value)
    opts = cfg.options(args.method, args.step)
    result = find_speed(spec, opts, cfg.bracket_override)
    fmt = _format(args, cfg, "text")
    if fmt == "json" or args.out:
        payload = result.to_dict()
        payload["reaction_class"] = str(spec.reaction)
        payload["epsilon"] = spec.epsilon
        _emit(args, cfg, _dump_json(payload))
    if fmt != "json" or args.out:
        print(f"reaction class {spec.reaction}")
        print(result.summary())
    return EXIT_OK if result.found else EXIT_NOT_FOUND


def cmd_check(args, cfg: Config) -> int:
    spec = cfg.spec(args.eps_value)
    try:
        report = build_report(spec, cfg.eta, cfg.kappa, cfg.zeta,
                              speed_estimate=args.estimate and spec.kind in ("B", "C"),
                              opts=cfg.options(args.method, args.step))
    except ParameterRangeError as exc:
        raise ConfigError(str(exc)) from None
    if _format(args, cfg, "text") == "json":
        _emit(args, cfg, report.to_json() + "\n")
    else:
        _emit(args, cfg, report.table() + "\n")
    return EXIT_OK


def _speed_or_flag(args, cfg, spec, opts):
    if args.c is not None:
        return args.c
    result = find_speed(spec, opts, cfg.bracket_override)
    if not result.found:
        print(result.summary(), file=sys.stderr)
        return None
    return result.c_star


def cmd_trajectory(args, cfg: Config) -> int:
    spec = cfg.spec(args.eps_value)
    opts = cfg.options(args.method, args.step)
    rp = reduce(spec)
    c = _speed_or_flag(args, cfg, spec, opts)
    if c is None:
        return EXIT_NOT_FOUND
    fw, bw = trajectories_at(rp, c, opts)
    closed = None
    if spec.kind == "Zero":
        try:
            closed = burgers_profile(spec, c)
        except BurgersConditionError:
            closed = None
    if _format(args, cfg, "csv") == "json":
        payload = {"c": float(_g(c)), "forward": _traj_dict(fw), "backward": _traj_dict(bw)}
        if spec.kind in ("B", "C", "Zero"):
            payload["mismatch"] = _json_num(mismatch_BC(rp, c, opts).value)
        _emit(args, cfg, _dump_json(payload))
    else:
        lines = ["direction,w,y" + (",y_closed_form" if closed else "")]
        for tr in (fw, bw):
            w, S = tr.sorted()
            y = S * S / (1.0 + np.sqrt(np.clip(1.0 - S * S, 0.0, None)))
            yc = closed(w) if closed else None
            for i in range(len(w)):
                row = f"{tr.direction},{_g(w[i])},{_g(y[i])}"
                if closed:
                    row += f",{_g(yc[i])}"
                lines.append(row)
        _emit(args, cfg, "\n".join(lines) + "\n")
    print(f"c = {_g(c)}: forward {fw.status} at w={_g(fw.final_w)}, backward {bw.status} at w={_g(bw.final_w)}",
          file=sys.stderr)
    if spec.kind in ("B", "C", "Zero"):
        m = mismatch_BC(rp, c, opts)
        print(f"mismatch at w0={_g(rp.w0)}: {_g(m.value)}", file=sys.stderr)
    return EXIT_OK


def _json_num(x):
    return float(f"{x:.6g}") if math.isfinite(x) else str(x)


def _traj_dict(tr):
    w, S = tr.sorted()
    y = S * S / (1.0 + np.sqrt(np.clip(1.0 - S * S, 0.0, None)))
    return {"status": tr.status.value, "final_w": _json_num(tr.final_w),
            "w": [_json_num(x) for x in w], "y": [_json_num(x) for x in y]}


def cmd_profile(args, cfg: Config) -> int:
    spec = cfg.spec(args.eps_value)
    opts = cfg.options(args.method, args.step)
    c = _speed_or_flag(args, cfg, spec, opts)
    if c is None:
        return EXIT_NOT_FOUND
    try:
        wp = reconstruct_wave(reduce(spec), c, dt=args.dt)
    except ProfileError as exc:
        print(f"profile failed: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    if _format(args, cfg, "csv") == "json":
        _emit(args, cfg, _dump_json({
            "c": _json_num(c), "epsilon": spec.epsilon, "residual_sup": _json_num(wp.residual_sup),
            "max_slope": _json_num(wp.max_slope),
            "t": [_json_num(x) for x in wp.t], "v": [_json_num(x) for x in wp.v]}))
    else:
        _emit(args, cfg, wp.to_csv())
    print(f"c = {_g(c)}, eps = {_g(spec.epsilon)}: max v' = {_g(wp.max_slope)}, "
          f"residual {wp.residual_sup:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_epsilon(args, cfg: Config) -> int:
    if args.eps:
        try:
            eps_list = [float(x) for x in args.eps.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"--eps must be a comma separated list of numbers, got {args.eps!r}") from None
    else:
        eps_list = cfg.eps_list
    if not eps_list:
        raise ConfigError("no epsilon values: pass --eps or set eps_list in the config")
    spec = cfg.spec()
    scan = epsilon_scan(spec, eps_list, cfg.options(args.method, args.step))
    if _format(args, cfg, "csv") == "json":
        rows = [{"epsilon": e, "c_star": None if c is None else _json_num(c),
                 "ratio": None if r is None else _json_num(r), "kind": k} for e, c, r, k in scan.rows]
        _emit(args, cfg, _dump_json({"rows": rows}))
    else:
        _emit(args, cfg, scan.to_csv())
    return EXIT_OK if all(c is not None for _, c, _, _ in scan.rows) else EXIT_NOT_FOUND


def cmd_burgers(args, cfg: Config) -> int:
    spec = cfg.spec(args.eps_value)
    if spec.kind != "Zero":
        raise HypothesisError("F", "the burgers command needs f = 0")
    result = burgers_speed(spec, args.u_minus, args.u_plus)
    payload = {
        "speed": _json_num(result.speed), "direction": result.direction,
        "conditions": [{"id": e.id, "satisfied": e.satisfied, "formula": e.formula} for e in result.conditions],
    }
    if _format(args, cfg, "text") == "json":
        _emit(args, cfg, _dump_json(payload))
    else:
        lines = [f"c = {_g(result.speed)} ({result.direction})"]
        lines += [f"  {e.id}: {e.status()}  {e.formula}" for e in result.conditions]
        _emit(args, cfg, "\n".join(lines) + "\n")
    return EXIT_OK if result.admissible else EXIT_NOT_FOUND


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="problem config (JSON)")
    common.add_argument("--out", help="write machine-readable output here")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--method", choices=("rk4", "euler"), help="integration scheme")
    common.add_argument("--step", type=float, help="integration step in w")

    parser = argparse.ArgumentParser(
        prog="frontspeed",
        description="Admissible speeds of monotone traveling fronts with saturating diffusion.",
        epilog=GRAMMAR_HELP,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("speed", parents=[common], help="critical or unique admissible speed")
    p.add_argument("--eps", dest="eps_value", type=float, help="override epsilon")
    p.set_defaults(func=cmd_speed)

    p = sub.add_parser("check", parents=[common], help="analytic bounds and conditions")
    p.add_argument("--eps", dest="eps_value", type=float, help="override epsilon")
    p.add_argument("--estimate", action="store_true",
                   help="also compute the speed interval from the problem without convection")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("trajectory", parents=[common], help="forward/backward solutions at speed c")
    p.add_argument("--c", type=float, help="speed (default: the computed one)")
    p.add_argument("--eps", dest="eps_value", type=float, help="override epsilon")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("profile", parents=[common], help="wave profile v(t)")
    p.add_argument("--c", type=float, help="speed (default: the computed one)")
    p.add_argument("--eps", dest="eps_value", type=float, help="override epsilon")
    p.add_argument("--dt", type=float, default=1e-3, help="time step of the profile integration")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("epsilon", parents=[common], help="speeds over a list of epsilon values")
    p.add_argument("--eps", help="comma separated epsilon values")
    p.set_defaults(func=cmd_epsilon, eps_value=None)

    p = sub.add_parser("burgers", parents=[common], help="zero reaction: chord speed of a pair")
    p.add_argument("u_minus", type=float, nargs="?", default=0.0)
    p.add_argument("u_plus", type=float, nargs="?", default=1.0)
    p.add_argument("--eps", dest="eps_value", type=float, help="override epsilon")
    p.set_defaults(func=cmd_burgers)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = Config.load(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
