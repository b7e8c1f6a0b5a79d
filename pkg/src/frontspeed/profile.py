"""Traveling-wave profiles from a solved reduced problem, and the eps scan.

Given the connection ``y(w)`` the profile solves ``v' = R(y(D(v))) / d(v)``;
since ``R(y) = S / sqrt(1 - S^2)`` this only needs the flux samples.  The
slope field is interpolated with a C^2 cubic spline in ``v`` so that the
finite-difference residual of the second-order equation

    eps^2 (P(d(v) v'))' - (c + h'(v)) v' + f(v)

converges at the rate of the difference stencil.
"""
from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .expr import evaluate
from .integrate import SolverOptions, Status, backward_solution, forward_solution
from .model import P, ProblemSpec, ReducedProblem, reduce
from .speed import SpeedResult, find_speed

__all__ = ["WaveProfile", "EpsilonScan", "ProfileError", "slope_field", "reconstruct_wave", "epsilon_scan"]

TOL_V = 1e-6
PROFILE_DELTA = 1e-9


class ProfileError(RuntimeError):
    pass


@dataclass
class WaveProfile:
    t: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    c: float
    epsilon: float
    residual_sup: float

    @property
    def max_slope(self) -> float:
        return float(np.max(np.abs(self.vp)))

    def to_csv(self, stream=None, digits: int = 6) -> str:
        out = stream or io.StringIO()
        out.write(f"# c={self.c:.{digits}g} epsilon={self.epsilon:.{digits}g} residual_sup={self.residual_sup:.3g}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "v", "vprime"])
        for row in zip(self.t, self.v, self.vp):
            writer.writerow([f"{x:.{digits}g}" for x in row])
        return out.getvalue() if stream is None else ""


@dataclass
class EpsilonScan:
    rows: list[tuple[float, float | None, float | None, str]] = field(default_factory=list)

    def to_csv(self, stream=None, digits: int = 6) -> str:
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["epsilon", "c_star", "ratio", "kind"])
        fmt = lambda x: "" if x is None else f"{x:.{digits}g}"
        for eps, c, ratio, kind in self.rows:
            writer.writerow([fmt(eps), fmt(c), fmt(ratio), kind])
        return out.getvalue() if stream is None else ""


class _Field:
    """Fast scalar evaluation of a CubicSpline through its piecewise coefficients."""

    def __init__(self, v: np.ndarray, g: np.ndarray):
        self.spline = CubicSpline(v, g)
        self.x = v.tolist()
        self.coef = self.spline.c.T.tolist()
        self.last = len(self.x) - 2

    def __call__(self, v: float) -> float:
        i = min(max(bisect_right(self.x, v) - 1, 0), self.last)
        a, b, c, d = self.coef[i]
        dx = v - self.x[i]
        return ((a * dx + b) * dx + c) * dx + d


def _connection_samples(rp: ReducedProblem, c: float, opts: SolverOptions):
    """(w, S) samples of the connection at speed ``c`` over ``[0, D1]``."""
    kind = rp.spec.kind
    D1 = rp.D1
    if kind == "A":
        tr = backward_solution(rp, c, 0.0, opts)
        if tr.status is not Status.REACHED_END:
            raise ProfileError(f"backward solution ended with {tr.status} at w={tr.final_w:.6g}")
        w, S = tr.sorted()
    else:
        fw = forward_solution(rp, c, rp.w0, opts)
        bw = backward_solution(rp, c, rp.w0, opts)
        for tr in (fw, bw):
            if tr.status is not Status.REACHED_END:
                raise ProfileError(f"{tr.direction} solution ended with {tr.status} at w={tr.final_w:.6g}")
        wf, Sf = fw.sorted()
        wb, Sb = bw.sorted()
        w = np.concatenate([wf, wb[1:]])
        S = np.concatenate([Sf, Sb[1:]])
    if w[0] > 0.0:
        w, S = np.concatenate([[0.0], w]), np.concatenate([[0.0], S])
    if w[-1] < D1:
        w, S = np.concatenate([w, [D1]]), np.concatenate([S, [0.0]])
    keep = np.concatenate([[True], np.diff(w) > 0])
    return w[keep], S[keep]


def slope_field(rp: ReducedProblem, c: float, opts: SolverOptions | None = None) -> _Field:
    """Spline of ``v -> v'`` along the connection at speed ``c``."""
    opts = opts or replace(SolverOptions(), delta_rel=PROFILE_DELTA)
    w, S = _connection_samples(rp, c, opts)
    v = np.asarray(rp.u_of_w(w))
    g = S / np.sqrt(np.clip(1.0 - S * S, 1e-300, None)) / evaluate(rp.spec.d, v)
    keep = np.concatenate([[True], np.diff(v) > 0])
    return _Field(v[keep], g[keep])


def _rk4_run(field_fn, v0: float, dt: float, tol_v: float, max_steps: int):
    vs = [v0]
    v = v0
    for _ in range(max_steps):
        k1 = field_fn(v)
        k2 = field_fn(v + 0.5 * dt * k1)
        k3 = field_fn(v + 0.5 * dt * k2)
        k4 = field_fn(v + dt * k3)
        v = v + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        vs.append(v)
        if v < tol_v or v > 1.0 - tol_v:
            return vs
    raise ProfileError(f"profile did not reach [{tol_v}, 1-{tol_v}] within {max_steps} steps")


def profile_residual(spec: ProblemSpec, c: float, v: np.ndarray, dt: float) -> np.ndarray:
    """Centered-difference residual of the second-order wave equation at interior samples."""
    vp = (v[2:] - v[:-2]) / (2.0 * dt)
    vm = v[1:-1]
    z = P(evaluate(spec.d, vm) * vp)
    dz = (z[2:] - z[:-2]) / (2.0 * dt)
    vi, vpi = vm[1:-1], vp[1:-1]
    return spec.epsilon ** 2 * dz - (c + evaluate(spec.dh, vi)) * vpi + evaluate(spec.f, vi)


def reconstruct_wave(rp: ReducedProblem, c: float, dt: float = 1e-3, anchor: float = 0.5,
                     tol_v: float = TOL_V, field_fn=None, max_steps: int = 2_000_000) -> WaveProfile:
    """Integrate ``v' = R(y(D(v)))/d(v)`` from ``v(0) = anchor`` in both directions (RK4, step ``dt``)."""
    g = field_fn or slope_field(rp, c)
    if g(anchor) <= 0:
        raise ProfileError(f"slope at the anchor v={anchor} is not positive")
    right = _rk4_run(g, anchor, dt, tol_v, max_steps)
    left = _rk4_run(g, anchor, -dt, tol_v, max_steps)
    v = np.array(left[::-1] + right[1:])
    t = dt * (np.arange(len(v)) - (len(left) - 1))
    if np.any(np.diff(v) <= 0):
        raise ProfileError("reconstructed profile is not increasing")
    vp = np.array([g(x) for x in v])
    res = profile_residual(rp.spec, c, v, dt)
    return WaveProfile(t, v, vp, c, rp.spec.epsilon, float(np.max(np.abs(res))) if res.size else 0.0)


def epsilon_scan(spec: ProblemSpec, eps_list, opts: SolverOptions = SolverOptions()) -> EpsilonScan:
    """Speeds of the eps-scaled problems; failing rows are recorded and the scan continues."""
    scan = EpsilonScan()
    for eps in sorted(float(e) for e in eps_list):
        if eps <= 0:
            raise ValueError(f"epsilon must be positive, got {eps}")
        result: SpeedResult = find_speed(spec.with_epsilon(eps), opts)
        if result.found:
            scan.rows.append((eps, result.c_star, result.c_star / eps, result.kind))
        else:
            scan.rows.append((eps, None, None, f"NotFound: {result.reason}"))
    return scan
