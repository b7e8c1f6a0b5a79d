"""Forward and backward Cauchy problems for the reduced equation.

The reduced equation ``y' = alpha(w) R(y) - beta(w)`` (``alpha = (c+h')/(eps^2 d)``,
``beta = f/eps^2``) is integrated in the flux variable ``S = sqrt(y(2-y))``::

    dS/dw = alpha - beta * sqrt(1 - S^2) / S.

This chart is regular at ``y = 1`` (``S = 1``), which is where the profile
slope blows up; ``S`` reaching 1 is reported as ``HitOne``.  The only
singularity left is ``S = 0`` with ``beta != 0``, i.e. the two endpoints.
There the solution behaves like ``S ~ P w`` (left) or ``S ~ Q (D1 - w)``
(right) and we integrate ``P`` or ``Q`` against the log of the distance to
the endpoint, starting on the root of the local quadratic:

    left:   P^2 - a P + k = 0,   a = alpha(0),  k = beta'(0)
    right:  Q^2 + a Q - K = 0,   a = alpha(D1), K = -beta'(D1)

After ``handover * step`` from the endpoint a fixed-step march in ``w``
takes over (RK4 by default, explicit Euler for parity runs).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from .model import ReducedProblem, math_y_from_S

__all__ = [
    "Status", "SolverOptions", "Trajectory", "IntegrationFault",
    "startup_slope_forward", "startup_slope_backward", "forward_solution",
    "backward_solution", "march_arc", "integrate_core", "endpoint_roots",
]


class Status(str, Enum):
    REACHED_END = "ReachedEnd"
    HIT_ONE = "HitOne"
    HIT_ZERO = "HitZero"
    TRIVIAL = "Trivial"

    def __str__(self):
        return self.value


class IntegrationFault(RuntimeError):
    """Non-finite right-hand side met while integrating."""


@dataclass(frozen=True)
class SolverOptions:
    step: float = 2.5e-4
    method: str = "rk4"          # "rk4" or "euler"
    tol_c: float = 1e-4
    tol_match: float = 1e-6
    tol_blowup: float = 1e-9
    delta_rel: float = 1e-6      # endpoint offset, relative to D1
    handover: int = 64           # log chart used within handover*step of an endpoint
    log_step: float = 0.01       # step in log(distance) inside the endpoint charts

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")

    @classmethod
    def euler(cls, **kw) -> "SolverOptions":
        """Explicit Euler with step 5e-4 (step-parity mode for comparison with reference values)."""
        kw.setdefault("step", 5e-4)
        return cls(method="euler", **kw)


@dataclass
class Trajectory:
    """Samples ``(w, S)`` in integration order, with termination status.

    ``y`` is derived from ``S``.  ``end_slope`` holds the terminal value of
    the left endpoint chart variable ``P = S/w`` when a backward run reached
    the neighbourhood of ``w = 0``, together with the local roots.
    """

    w: np.ndarray
    S: np.ndarray
    status: Status
    c: float
    direction: str
    stop_w: float | None = None
    note: str = ""
    end_slope: float | None = None
    end_roots: tuple[float, float] | None = None

    @property
    def y(self) -> np.ndarray:
        S = self.S
        return S * S / (1.0 + np.sqrt(np.clip(1.0 - S * S, 0.0, None)))

    @property
    def final_w(self) -> float:
        return float(self.w[-1])

    @property
    def final_y(self) -> float:
        return math_y_from_S(float(self.S[-1]))

    def sorted(self) -> tuple[np.ndarray, np.ndarray]:
        """(w, S) sorted by increasing w."""
        order = np.argsort(self.w, kind="stable")
        return self.w[order], self.S[order]

    def to_csv(self, stream=None, rp: ReducedProblem | None = None, digits: int = 6) -> str:
        """CSV with a comment header; adds ``u = D^{-1}(w)`` when ``rp`` is given."""
        out = stream or io.StringIO()
        out.write(f"# direction={self.direction} c={self.c:.{digits}g} status={self.status}"
                  + (f" stop_w={self.stop_w:.{digits}g}" if self.stop_w is not None else "") + "\n")
        writer = csv.writer(out, lineterminator="\n")
        header = ["w", "y"] + (["u"] if rp is not None else [])
        writer.writerow(header)
        w, y = self.w, self.y
        u = rp.u_of_w(np.clip(w, 0, rp.D1)) if rp is not None else None
        for i in range(len(w)):
            row = [f"{w[i]:.{digits}g}", f"{y[i]:.{digits}g}"]
            if u is not None:
                row.append(f"{u[i]:.{digits}g}")
            writer.writerow(row)
        return out.getvalue() if stream is None else ""


# ---------------------------------------------------------------- endpoint data

def _delta(rp: ReducedProblem, opts: SolverOptions) -> float:
    return opts.delta_rel * rp.D1


def endpoint_roots(rp: ReducedProblem, c: float, side: str, opts: SolverOptions = SolverOptions()):
    """Local quadratic data ``(a, k, roots)`` at an endpoint in the flux chart.

    ``side="left"``: roots of ``P^2 - aP + k`` (``k = beta(delta)/delta``), returned
    as ``(P_minus, P_plus)`` or ``None`` when complex.  ``side="right"``: roots of
    ``Q^2 + aQ - K``, returned as ``(Q_minus, Q_plus)``.
    """
    delta = _delta(rp, opts)
    w = delta if side == "left" else rp.D1 - delta
    A, H, F = rp.coefficients(w)
    a = float((c + H[0]) * A[0])
    k = float(F[0]) / delta
    if side == "left":
        disc = a * a - 4.0 * k
        if disc < 0:
            return a, k, None
        r = math.sqrt(disc)
        return a, k, (0.5 * (a - r), 0.5 * (a + r))
    disc = a * a + 4.0 * k
    if disc < 0:
        return a, k, None
    r = math.sqrt(disc)
    return a, k, (0.5 * (-a - r), 0.5 * (-a + r))


def startup_slope_forward(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()):
    """Slope ``l`` of the slow departure ``y ~ (l w)^2`` at ``w = 0`` for class A.

    Uses the exact endpoint data ``d(0)``, ``h'(0)``, ``f'(0)``:
    ``l = (b - sqrt(b^2 - 4 eps^2 d(0) f'(0))) / (2 sqrt(2) eps^2 d(0))`` with
    ``b = c + h'(0)``.  Returns None when ``b <= 0`` or the discriminant is
    negative, i.e. when no positive solution leaves the origin.
    """
    spec = rp.spec
    eps2 = spec.epsilon ** 2
    b = c + float(rp.dh_hat(0.0))
    d0 = float(rp.d_hat(0.0))
    disc = b * b - 4.0 * eps2 * d0 * spec.fprime(0.0)
    if b <= 0 or disc < -1e-12:
        return None
    # S ~ P w and y ~ S^2 / 2, so y ~ (P w / sqrt 2)^2
    return (b - math.sqrt(max(disc, 0.0))) / (2.0 * math.sqrt(2.0) * eps2 * d0)


def startup_slope_backward(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()) -> float:
    """Slope ``m`` of ``y ~ (m x)^2``, ``x = D1 - w``, for the backward solution."""
    _, _, roots = endpoint_roots(rp, c, "right", opts)
    return roots[1] / math.sqrt(2.0)


# ---------------------------------------------------------------- kernels

class _Stop(Exception):
    def __init__(self, status: Status):
        self.status = status


def _rate(a: float, f: float, S: float) -> float:
    if S <= 0.0:
        if f == 0.0:
            return a
        raise _Stop(Status.HIT_ZERO)
    return a - f * math.sqrt(max(0.0, 1.0 - S * S)) / S


def _march_lists(alpha, F, S, w_start, hh, n, euler, ws, Ss):
    """Advance ``S`` over ``n`` steps of size ``hh`` (signed); coefficients at half steps."""
    w = w_start
    try:
        for i in range(n):
            j = 2 * i
            if euler:
                S = S + hh * _rate(alpha[j], F[j], S)
            else:
                k1 = _rate(alpha[j], F[j], S)
                k2 = _rate(alpha[j + 1], F[j + 1], S + 0.5 * hh * k1)
                k3 = _rate(alpha[j + 1], F[j + 1], S + 0.5 * hh * k2)
                k4 = _rate(alpha[j + 2], F[j + 2], S + hh * k3)
                S = S + hh * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            w = w_start + (i + 1) * hh
            if not math.isfinite(S):
                raise IntegrationFault(f"non-finite solution at w={w:.6g}")
            if S >= 1.0:
                ws.append(w)
                Ss.append(1.0)
                return Status.HIT_ONE
            if S <= 0.0:
                ws.append(w)
                Ss.append(0.0)
                # landing on y = 0 at the last node is reaching the endpoint, not an interior zero
                return Status.REACHED_END if i == n - 1 and S > -1e-9 else Status.HIT_ZERO
            ws.append(w)
            Ss.append(S)
    except _Stop as stop:
        ws.append(w + hh)
        Ss.append(0.0)
        return stop.status
    return Status.REACHED_END


def _w_grid(rp: ReducedProblem, w_a: float, w_b: float, step: float):
    n = max(1, int(math.ceil(abs(w_b - w_a) / step - 1e-9)))
    key = ("w", w_a, w_b, n)
    A, H, F = rp.cached_coefficients(key, lambda: np.linspace(w_a, w_b, 2 * n + 1))
    return n, A, H, F


def march_arc(rp: ReducedProblem, c: float, w_from: float, w_to: float, S_init: float,
              opts: SolverOptions = SolverOptions(), ws=None, Ss=None):
    """Fixed-step march of the flux variable from ``w_from`` to ``w_to``.

    Returns ``(status, ws, Ss)``; the sample lists include the start point
    unless lists to extend were passed in.
    """
    if ws is None:
        ws, Ss = [w_from], [S_init]
    if w_from == w_to:
        return Status.REACHED_END, ws, Ss
    n, A, H, F = _w_grid(rp, w_from, w_to, opts.step)
    alpha = [(c + hv) * av for hv, av in zip(H, A)]
    hh = (w_to - w_from) / n
    status = _march_lists(alpha, F, S_init, w_from, hh, n, opts.method == "euler", ws, Ss)
    return status, ws, Ss


def _log_march(rp, c, side, tau_a, tau_b, Z, opts, ws, Ss):
    """Integrate the endpoint chart variable ``Z = S / r`` in ``tau = log r``.

    ``r`` is ``w`` (left) or ``D1 - w`` (right).  Returns (status, Z_final).
    """
    n = max(1, int(math.ceil(abs(tau_b - tau_a) / opts.log_step)))
    D1 = rp.D1
    key = ("log", side, tau_a, tau_b, n)

    def points():
        r = np.exp(np.linspace(tau_a, tau_b, 2 * n + 1))
        return r if side == "left" else D1 - r

    A, H, F = rp.cached_coefficients(key, points)
    r = np.exp(np.linspace(tau_a, tau_b, 2 * n + 1)).tolist()
    sa = 1.0 if side == "left" else -1.0
    dt = (tau_b - tau_a) / n
    euler = opts.method == "euler"

    def rate(j, Z):
        if Z <= 0.0:
            raise _Stop(Status.HIT_ZERO)
        rj = r[j]
        S = Z * rj
        return sa * (c + H[j]) * A[j] - sa * (F[j] / rj) * math.sqrt(max(0.0, 1.0 - S * S)) / Z - Z

    try:
        for i in range(n):
            j = 2 * i
            if euler:
                Z = Z + dt * rate(j, Z)
            else:
                k1 = rate(j, Z)
                k2 = rate(j + 1, Z + 0.5 * dt * k1)
                k3 = rate(j + 1, Z + 0.5 * dt * k2)
                k4 = rate(j + 2, Z + dt * k3)
                Z = Z + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            rr = r[j + 2]
            w = rr if side == "left" else D1 - rr
            if not math.isfinite(Z):
                raise IntegrationFault(f"non-finite solution at w={w:.6g}")
            if Z * rr >= 1.0:
                ws.append(w)
                Ss.append(1.0)
                return Status.HIT_ONE, Z
            if Z <= 0.0:
                ws.append(w)
                Ss.append(0.0)
                return Status.HIT_ZERO, Z
            ws.append(w)
            Ss.append(Z * rr)
    except _Stop as stop:
        return stop.status, 0.0
    return Status.REACHED_END, Z


def _handover(rp: ReducedProblem, opts: SolverOptions) -> float:
    return min(opts.handover * opts.step, 0.25 * rp.D1)


def _make(ws, Ss, status, c, direction, **kw) -> Trajectory:
    return Trajectory(np.asarray(ws, dtype=float), np.asarray(Ss, dtype=float), status, c, direction, **kw)


# ---------------------------------------------------------------- forward

def _closed_form_plateau(rp: ReducedProblem, c: float, w_end: float, opts: SolverOptions):
    """Exact forward solution where ``f = 0``: ``S = (c u + h(u) - h(0)) / eps^2``."""
    n = max(1, int(math.ceil(w_end / opts.step - 1e-9)))
    w = np.linspace(0.0, w_end, n + 1)
    u = rp.u_of_w(w)
    S = (c * u + rp.h_diff(u)) / rp.spec.epsilon ** 2
    dh0 = float(rp.dh_hat(0.0))
    if c + dh0 < 0 or S[1] <= 0:
        return Status.TRIVIAL, w[:1].tolist(), [0.0], _reflected_note(w, S)
    hit = np.nonzero(S[1:] >= 1.0)[0]
    zero = np.nonzero(S[1:] <= 0.0)[0]
    first_hit = hit[0] + 1 if hit.size else None
    first_zero = zero[0] + 1 if zero.size else None
    if first_hit is not None and (first_zero is None or first_hit < first_zero):
        return Status.HIT_ONE, w[: first_hit + 1].tolist(), np.minimum(S[: first_hit + 1], 1.0).tolist(), ""
    if first_zero is not None:
        return Status.HIT_ZERO, w[: first_zero + 1].tolist(), np.maximum(S[: first_zero + 1], 0.0).tolist(), ""
    return Status.REACHED_END, w.tolist(), S.tolist(), ""


def _reflected_note(w, S) -> str:
    """Describe the branch that departs from zero later on, when the trivial one is taken."""
    reflected = S - np.minimum(0.0, np.minimum.accumulate(S))
    hit = np.nonzero(reflected >= 1.0)[0]
    if hit.size:
        return f"departing branch reaches y=1 at w={w[hit[0]]:.6g}"
    return ""


def forward_solution(rp: ReducedProblem, c: float, w_stop: float | None = None,
                     opts: SolverOptions = SolverOptions()) -> Trajectory:
    """The solution leaving ``y(0) = 0``, integrated up to ``w_stop``.

    Defaults: ``w_stop = w0`` for classes B, C and the zero reaction,
    ``D1 - delta`` for class A.  Class A starts on the slow root of the
    local quadratic; class C on the unique positive root; class B and the
    zero reaction use the closed form on the plateau ``[0, w0]``.
    """
    kind = rp.spec.kind
    delta = _delta(rp, opts)
    if w_stop is None:
        w_stop = rp.w0 if kind != "A" else rp.D1 - delta
    ws: list = []
    Ss: list = []
    if kind in ("B", "Zero"):
        w0 = rp.w0
        status, ws, Ss, note = _closed_form_plateau(rp, c, min(w0, w_stop), opts)
        if status is not Status.REACHED_END or w_stop <= w0:
            return _make(ws, Ss, status, c, "forward", stop_w=ws[-1], note=note)
        S0 = Ss[-1]
        status, ws, Ss = march_arc(rp, c, w0, w_stop, S0, opts, ws, Ss)
        return _make(ws, Ss, status, c, "forward", stop_w=ws[-1])

    a, k, roots = endpoint_roots(rp, c, "left", opts)
    if kind == "A":
        if a <= 0 or roots is None:
            return _make([0.0], [0.0], Status.TRIVIAL, c, "forward", stop_w=0.0)
        connecting = _connecting_member(rp, c, w_stop, opts)
        if connecting is not None:
            return connecting
        Z = roots[0]
    else:
        Z = roots[1]
        if Z <= 0:
            return _make([0.0], [0.0], Status.TRIVIAL, c, "forward", stop_w=0.0)
    r_h = min(_handover(rp, opts), w_stop)
    ws, Ss = [delta], [Z * delta]
    status, Z = _log_march(rp, c, "left", math.log(delta), math.log(r_h), Z, opts, ws, Ss)
    if status is Status.REACHED_END and w_stop > r_h:
        status, ws, Ss = march_arc(rp, c, r_h, w_stop, Ss[-1], opts, ws, Ss)
    return _make(ws, Ss, status, c, "forward", stop_w=ws[-1])


def _connecting_member(rp: ReducedProblem, c: float, w_stop: float, opts: SolverOptions):
    """Class A: the member of the slow family at ``w = 0`` that reaches ``D1``, if any.

    Every solution leaving the origin tangent to the slow root solves the
    forward problem, so the forward problem alone does not pick one.  The
    member that stays in ``(0, 1)`` up to ``D1`` is unique backward from
    ``D1``; when the backward run arrives at the origin on the slow side
    (not faster than the fast root) it is returned in forward orientation.
    """
    bw = backward_solution(rp, c, 0.0, opts)
    if bw.status is not Status.REACHED_END or bw.end_slope is None or bw.end_roots is None:
        return None
    if bw.end_slope > bw.end_roots[1] * (1.0 + 1e-4) + 1e-12:
        return None
    w, S = bw.w[::-1], bw.S[::-1]
    keep = w <= w_stop + 1e-15
    return Trajectory(w[keep], S[keep], Status.REACHED_END, c, "forward", stop_w=float(w[keep][-1]),
                      note="slow-family member connecting to D1 (integrated from D1)")


# ---------------------------------------------------------------- backward

def backward_solution(rp: ReducedProblem, c: float, w_stop: float = 0.0,
                      opts: SolverOptions = SolverOptions()) -> Trajectory:
    """The solution ending at ``y(D1) = 0``, integrated down to ``w_stop``.

    For class A with ``w_stop`` inside the left endpoint chart the terminal
    value of ``P = S/w`` at ``w = max(w_stop, delta)`` is stored in
    ``end_slope`` with the local roots in ``end_roots``.
    """
    kind = rp.spec.kind
    D1 = rp.D1
    delta = _delta(rp, opts)
    r_h = _handover(rp, opts)
    if kind == "Zero":
        # no reaction, so no singularity at y = 0: start exactly at D1
        status, ws, Ss = march_arc(rp, c, D1, w_stop, 0.0, opts)
        return _make(ws, Ss, status, c, "backward", stop_w=ws[-1])
    _, _, roots = endpoint_roots(rp, c, "right", opts)
    Z = roots[1]
    x_stop = D1 - w_stop
    x_h = min(r_h, x_stop)
    ws, Ss = [D1 - delta], [Z * delta]
    status, Z = _log_march(rp, c, "right", math.log(delta), math.log(x_h), Z, opts, ws, Ss)
    if status is not Status.REACHED_END or x_h >= x_stop:
        return _make(ws, Ss, status, c, "backward", stop_w=ws[-1])
    w_mid = max(w_stop, r_h) if kind == "A" else w_stop
    status, ws, Ss = march_arc(rp, c, D1 - x_h, w_mid, Ss[-1], opts, ws, Ss)
    if status is not Status.REACHED_END or kind != "A" or w_mid <= w_stop:
        return _make(ws, Ss, status, c, "backward", stop_w=ws[-1])
    w_end = max(w_stop, delta)
    Z = Ss[-1] / w_mid
    status, Z = _log_march(rp, c, "left", math.log(w_mid), math.log(w_end), Z, opts, ws, Ss)
    end_roots = None
    if status is Status.REACHED_END:
        _, _, roots = endpoint_roots(rp, c, "left", replace(opts, delta_rel=w_end / D1))
        end_roots = roots
    return _make(ws, Ss, status, c, "backward", stop_w=ws[-1],
                 end_slope=Z if status is Status.REACHED_END else None, end_roots=end_roots)


# ---------------------------------------------------------------- generic integrator

def integrate_core(rhs: Callable[[float, float], float], w_from: float, w_to: float, y_init: float,
                   opts: SolverOptions = SolverOptions(), chart: str = "sigma", c: float = float("nan"),
                   max_halvings: int = 40) -> Trajectory:
    """Fixed-step integration of ``y' = rhs(w, y)`` in the ``y`` or ``sigma = sqrt(y)`` chart.

    Near ``y = 1`` the step is halved whenever a trial step would overshoot
    ``1 - tol_blowup`` and stays halved for the rest of the grid interval;
    once the step cannot be halved further, or a reduced step lands within
    ``2 tol_blowup`` of 1, the run stops with ``HitOne``.  ``y <= 0`` stops
    with ``HitZero``.  This routine is the reference used for cross-checking
    the flux-chart solver; the production paths use :func:`march_arc`.
    """
    if chart not in ("y", "sigma"):
        raise ValueError(f"unknown chart {chart!r}")
    sign = 1.0 if w_to >= w_from else -1.0
    length = abs(w_to - w_from)
    n = max(1, int(math.ceil(length / opts.step - 1e-9)))
    h0 = sign * length / n
    limit = 1.0 - opts.tol_blowup

    if chart == "sigma":
        def g(w, z):
            if z <= 0.0:
                raise _Stop(Status.HIT_ZERO)
            return rhs(w, z * z) / (2.0 * z)
        z = math.sqrt(y_init)
        to_y = lambda v: v * v
    else:
        g = rhs
        z = y_init
        to_y = lambda v: v

    def step(w, z, h):
        if opts.method == "euler":
            return z + h * g(w, z)
        k1 = g(w, z)
        k2 = g(w + 0.5 * h, z + 0.5 * h * k1)
        k3 = g(w + 0.5 * h, z + 0.5 * h * k2)
        k4 = g(w + h, z + h * k3)
        return z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    ws, Ss = [w_from], [_S_of_y(y_init)]
    w = w_from
    status = Status.REACHED_END
    for i in range(n):
        target = w_from + (i + 1) * h0
        try:
            h_cur = h0
            halvings = 0
            while sign * (target - w) > 1e-15 * max(1.0, abs(target)):
                while True:
                    h = h_cur if abs(h_cur) < abs(target - w) else target - w
                    try:
                        trial = step(w, z, h)
                        ok = math.isfinite(trial) and to_y(trial) < limit
                    except (ValueError, ZeroDivisionError, OverflowError):
                        ok = False
                    if ok:
                        break
                    if halvings >= max_halvings:
                        raise _Stop(Status.HIT_ONE)
                    h_cur *= 0.5
                    halvings += 1
                w, z = w + h, trial
                y_now = to_y(z)
                if y_now <= 0.0:
                    raise _Stop(Status.HIT_ZERO)
                if halvings and y_now >= 1.0 - 2.0 * opts.tol_blowup:
                    raise _Stop(Status.HIT_ONE)
        except _Stop as stop:
            status = stop.status
            ws.append(w)
            Ss.append(1.0 if status is Status.HIT_ONE else 0.0)
            break
        ws.append(w)
        Ss.append(_S_of_y(to_y(z)))
    return _make(ws, Ss, status, c, "forward" if sign > 0 else "backward", stop_w=ws[-1])


def _S_of_y(y: float) -> float:
    y = min(max(y, 0.0), 1.0)
    return math.sqrt(y * (2.0 - y))
