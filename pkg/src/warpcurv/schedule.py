"""Seven-region warping profile and the A-regular tail.

The profile interpolates between a collapsed end near ``r = -inf``
(``v = eps e^r``, ``h_theta = h_r = e^{r/2}``) and the model warps for
``r >= f_eps``.  Pieces are joined at breakpoints and every corner that is
only C^1 is made C^2 by ``smooth_concat``.

Deep in the negative direction the warps underflow double precision (the
tail starts near ``r = -3900`` for ``eps = 0.01``), so each warp is stored in
logarithmic form: ``ln w``, ``(ln w)'`` and ``w''/w``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import bisect, brentq

from .frame import WarpState
from .smoothing import SmoothedJoin, smooth_concat

__all__ = [
    "ScheduleError",
    "RegionSchedule",
    "compute_breakpoints",
    "q_parabola",
    "HBridge",
    "build_h_bridge",
    "build_v_bend",
    "CubicInterpolant",
    "phi_cubic",
    "cubic_for",
    "asymptotic_estimates",
    "TailProfile",
    "aregular_profile",
    "WarpFunction",
    "WarpProfile",
    "ModelProfile",
    "build_profile",
    "default_r_max",
    "PROFILE_COLUMNS",
    "write_profile_csv",
]


class ScheduleError(ValueError):
    """Raised when a schedule or a sub-construction is infeasible."""


def default_r_max(epsilon: float, k: float) -> float:
    """``max(100 f_eps, 2)`` with ``f_eps`` from the schedule relations."""
    r_eps = _solve_r_eps(epsilon)
    f = (k + 1) * 2 * (r_eps + epsilon**4 / 2)
    return max(100.0 * f, 2.0)


def _solve_r_eps(epsilon: float) -> float:
    fn = lambda r: epsilon * math.exp(r) - math.sinh(r / 2)
    return bisect(fn, epsilon, 4 * epsilon, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=400)


@dataclass(frozen=True)
class RegionSchedule:
    epsilon: float
    k: float
    r_max: float
    r_eps: float
    r_eps_minus: float
    a_eps: float
    m_eps: float
    b_eps: float
    c_eps: float
    d_eps: float
    e_eps: float
    f_eps: float
    delta_phi: float
    log_tau_eps: float

    @property
    def tau_eps(self) -> float:
        # underflows to 0.0 for realistic eps; use log_tau_eps for arithmetic
        return math.exp(self.log_tau_eps)

    @property
    def o_eps(self) -> float:
        return self.log_tau_eps

    @property
    def p_eps(self) -> float:
        return 2 * self.log_tau_eps

    def breakpoints(self, with_tail: bool = False) -> dict[str, float]:
        out = {}
        if with_tail:
            out.update(p=self.p_eps, o=self.o_eps)
        out.update(a=self.a_eps, m=self.m_eps, b=self.b_eps, c=self.c_eps, r_eps=self.r_eps,
                   d=self.d_eps, e=self.e_eps, f=self.f_eps)
        return out


# ---------------------------------------------------------------- Region 2 pieces

def q_parabola(r, schedule: RegionSchedule):
    """``q = l + eps^6 (r - b)^2`` with ``l`` the tangent line of ``cosh(r/2)`` at ``b``."""
    return _q(np.asarray(r, dtype=float), schedule.b_eps, schedule.epsilon)


def _q(r, b, eps):
    x = r - b
    s = 0.5 * math.sinh(b / 2)
    e6 = eps**6
    return math.cosh(b / 2) + s * x + e6 * x**2, s + 2 * e6 * x, np.full_like(x, 2 * e6)


def _solve_m(b: float, eps: float) -> float:
    # q has a root near b - 4/eps; q'/q decreases from +inf there to ~eps/4 at b
    C, s, e6 = math.cosh(b / 2), 0.5 * math.sinh(b / 2), eps**6
    disc = s * s - 4 * e6 * C
    if disc <= 0:
        raise ScheduleError("q has no real root; eps too large")
    x_root = 2 * C / (-s - math.sqrt(disc))
    lo = b + x_root * (1 - 1e-12)

    def g(r):
        q, dq, _ = _q(np.array(r), b, eps)
        return float(dq / q) - 0.75

    return brentq(g, lo, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def _ramp(t):
    """Smoothstep ``3t^2 - 2t^3`` with its antiderivative and derivative."""
    t = np.clip(t, 0.0, 1.0)
    return 3 * t**2 - 2 * t**3, t**3 - t**4 / 2, 6 * t * (1 - t)


@dataclass(frozen=True)
class HBridge:
    """``(ln h)'`` ramps from 1/2 at ``a`` to 3/4 at ``m`` along a smoothstep."""

    a: float
    m: float

    def log_eval(self, r):
        r = np.asarray(r, dtype=float)
        span = self.m - self.a
        t = (r - self.a) / span
        S, IS, dS = _ramp(t)
        inside = (t >= 0) & (t <= 1)
        L = np.where(t < 0, r / 2,
                     np.where(inside, self.a / 2 + 0.5 * (r - self.a) + 0.25 * span * IS,
                              self.a / 2 + 0.5 * span + 0.125 * span + 0.75 * (r - self.m)))
        L1 = 0.5 + 0.25 * S
        L2 = np.where(inside, 0.25 * dS / span, 0.0)
        return L, L1, L1**2 + L2

    def lin_eval(self, r):
        L, L1, ddh = self.log_eval(r)
        h = np.exp(L)
        return h, h * L1, h * ddh


def _solve_a(m: float, q_m: float, eps: float) -> float:
    def mismatch(a):
        return float(HBridge(a, m).log_eval(np.array(m))[0]) - math.log(q_m)

    lo, hi = m - 60.0 / eps, m - 1e-9
    if mismatch(lo) * mismatch(hi) > 0:
        raise ScheduleError(f"no feasible a_eps in [{lo:.1f}, {hi:.1f}]")
    return brentq(mismatch, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)


def build_h_bridge(schedule: RegionSchedule) -> HBridge:
    return HBridge(schedule.a_eps, schedule.m_eps)


def compute_breakpoints(epsilon: float, k: float, r_max: float | None = None) -> RegionSchedule:
    """All breakpoints from ``(eps, k)``; ``r_max`` defaults to ``max(100 f_eps, 2)``."""
    if not (0 < epsilon < 0.05):
        raise ScheduleError("epsilon must lie in (0, 0.05)")
    if k < 2:
        raise ScheduleError("k must be at least 2")
    r_eps = _solve_r_eps(epsilon)
    r_minus = r_eps - epsilon**4
    b = r_minus / 2
    c = r_minus
    d = r_eps + epsilon**4 / 2
    e = 2 * d
    f = (k + 1) * e
    if r_max is None:
        r_max = max(100.0 * f, 2.0)
    if f >= r_max / 4:
        raise ScheduleError(f"schedule infeasible: f_eps={f:.4g} must stay below r_max/4={r_max / 4:.4g}")
    m = _solve_m(b, epsilon)
    q_m = float(_q(np.array(m), b, epsilon)[0])
    a = _solve_a(m, q_m, epsilon)
    log_tau = math.log(epsilon) + a
    return RegionSchedule(
        epsilon=epsilon, k=k, r_max=float(r_max), r_eps=r_eps, r_eps_minus=r_minus,
        a_eps=a, m_eps=m, b_eps=b, c_eps=c, d_eps=d, e_eps=e, f_eps=f,
        delta_phi=k * e, log_tau_eps=log_tau,
    )


# ---------------------------------------------------------------- v bend

def _v_left(eps):
    le = math.log(eps)
    return lambda r: (le + r, np.ones_like(r), np.zeros_like(r))


def _log_sinh_half(r):
    r = np.asarray(r, dtype=float)
    h = r / 2
    L = np.where(h > 20, h - math.log(2) + np.log1p(-np.exp(-2 * np.minimum(h, 700))), np.log(np.sinh(np.minimum(h, 20))))
    return L, 0.5 / np.tanh(h), -0.25 / np.sinh(h) ** 2


def build_v_bend(schedule: RegionSchedule) -> SmoothedJoin:
    """Smoothed log corner between ``ln(eps e^r)`` and ``ln sinh(r/2)`` at ``r_eps``."""
    half = schedule.epsilon**4 / 2
    lo = schedule.r_eps - half
    k_lower = min(0.0, float(_log_sinh_half(np.array([lo]))[2][0])) * (1 + 1e-9)
    return smooth_concat(_v_left(schedule.epsilon), _log_sinh_half, schedule.r_eps, k_lower, half)


# ---------------------------------------------------------------- Region 6 cubic

@dataclass(frozen=True)
class CubicInterpolant:
    """Cubic Hermite piece from ``cosh(e/2)`` (slope ``sinh(e/2)/2``) to ``cosh f`` (slope ``sinh f``)."""

    e: float
    k: float
    C3: float
    C2: float

    @property
    def f(self) -> float:
        return (self.k + 1) * self.e

    @property
    def delta(self) -> float:
        return self.k * self.e

    @property
    def slope0(self) -> float:
        return 0.5 * math.sinh(self.e / 2)

    @property
    def value0(self) -> float:
        return math.cosh(self.e / 2)

    def __call__(self, r):
        x = np.asarray(r, dtype=float) - self.e
        val = ((self.C3 * x + self.C2) * x + self.slope0) * x + self.value0
        d1 = (3 * self.C3 * x + 2 * self.C2) * x + self.slope0
        d2 = 6 * self.C3 * x + 2 * self.C2
        return val, d1, d2

    def alpha(self, r):
        return (np.asarray(r, dtype=float) - self.e) / self.e


def cubic_for(e: float, k: float) -> CubicInterpolant:
    d = k * e
    f = (k + 1) * e
    sf, cf = math.sinh(f), math.cosh(f)
    sh, ch = math.sinh(e / 2), math.cosh(e / 2)
    C3 = (sf + 0.5 * sh) / d**2 + (2 * ch - 2 * cf) / d**3
    C2 = -(sf + sh) / d + 3 * (cf - ch) / d**2
    return CubicInterpolant(e=e, k=k, C3=C3, C2=C2)


def phi_cubic(schedule: RegionSchedule) -> CubicInterpolant:
    return cubic_for(schedule.e_eps, schedule.k)


def asymptotic_estimates(schedule, alpha) -> dict[str, np.ndarray]:
    """Leading-order forms of the cubic and its ratios in terms of ``alpha = (r - e)/e``.

    ``schedule`` may be a ``RegionSchedule`` or anything with ``e``/``e_eps`` and ``k``.
    """
    e = getattr(schedule, "e_eps", None) or getattr(schedule, "e")
    k = schedule.k
    a = np.asarray(alpha, dtype=float)
    return {
        "phi": 1 + e**2 * (-3 * a**3 / (4 * k**2) + a**2 / 2 + a / 4 + 1 / 8),
        "dphi": e * (-9 * a**2 / (4 * k**2) + a + 0.25),
        "ddphi": 1 - 9 * a / (2 * k**2),
        "dphi_over_sinh": (0.25 + a - 9 * a**2 / (4 * k**2)) / (1 + a),
        "phi2m1_over_sinh2": (0.25 + a / 2 + a**2 - 3 * a**3 / (2 * k**2)) / (1 + a) ** 2,
        "C2": np.asarray((4 * k**2 + 12 * k + 9) / (8 * k**2)),
        "C3": np.asarray(-3 * (k + 1) / (4 * k**3 * e)),
    }


# ---------------------------------------------------------------- A-regular tail

@dataclass(frozen=True)
class TailProfile:
    """``g = tau + e^{r/2}`` below ``p``, a log-slope ramp on ``[p, o]``, ``e^{r/2}`` above ``o``.

    On ``[p, o]`` the ramp is ``(ln g)' = 1/2 - (1 - t)^n / 4`` with
    ``t = (r - p)/(o - p)``; the exponent ``n`` makes ``ln g`` land exactly on
    ``o/2`` at ``o``.
    """

    log_tau: float

    @property
    def o(self) -> float:
        return self.log_tau

    @property
    def p(self) -> float:
        return 2 * self.log_tau

    @property
    def span(self) -> float:
        return -self.log_tau

    @property
    def n(self) -> float:
        return self.span / (4 * math.log(2)) - 1

    def F(self, r):
        """``(ln g)'`` of the pure ``tau + e^{r/2}`` form."""
        z = np.asarray(r, dtype=float) / 2 - self.log_tau
        return 0.5 / (1 + np.exp(-z))

    def low_log(self, r):
        r = np.asarray(r, dtype=float)
        z = r / 2 - self.log_tau
        L = self.log_tau + np.logaddexp(0.0, z)
        sig = 1 / (1 + np.exp(-z))
        L1 = 0.5 * sig
        L2 = 0.25 * sig * (1 - sig)
        return L, L1, L2

    def ramp_log(self, r):
        r = np.asarray(r, dtype=float)
        t = (r - self.p) / self.span
        n = self.n
        om = 1 - t
        L = math.log(2) + self.log_tau + 0.5 * (r - self.p) - 0.25 * self.span * (1 - om ** (n + 1)) / (n + 1)
        L1 = 0.5 - 0.25 * om**n
        L2 = 0.25 * n * om ** (n - 1) / self.span
        return L, L1, L2


def aregular_profile(epsilon: float, schedule: RegionSchedule) -> TailProfile:
    tail = TailProfile(schedule.log_tau_eps)
    if not (tail.p < tail.o < schedule.a_eps):
        raise ScheduleError("tail breakpoints out of order")
    if tail.n <= 2:
        raise ScheduleError("tail ramp too short for a C^2 match at o_eps")
    return tail


# ---------------------------------------------------------------- profile assembly

LogPiece = Callable[[np.ndarray], tuple]


def _lin_to_log(fn):
    def wrapped(r):
        f, f1, f2 = fn(r)
        return np.log(f), f1 / f, f2 / f

    return wrapped


def _log_to_lin_join(join: SmoothedJoin):
    """A log-space smoothed join reported as (L, L', w''/w)."""

    def wrapped(r):
        L, L1, L2 = join(r)
        return L, L1, L2 + L1**2

    return wrapped


def _lin_join(join: SmoothedJoin):
    def wrapped(r):
        f, f1, f2 = join(r)
        return np.log(f), f1 / f, f2 / f

    return wrapped


def _cosh_half(r):
    r = np.asarray(r, dtype=float)
    return np.cosh(r / 2), 0.5 * np.sinh(r / 2), 0.25 * np.cosh(r / 2)


def _log_cosh_half(r):
    r = np.asarray(r, dtype=float)
    x = np.abs(r / 2)
    return x + np.log1p(np.exp(-2 * x)) - math.log(2), 0.5 * np.tanh(r / 2), np.full_like(r, 0.25)


def _cosh(r):
    r = np.asarray(r, dtype=float)
    return np.cosh(r), np.sinh(r), np.cosh(r)


def _log_cosh(r):
    r = np.asarray(r, dtype=float)
    x = np.abs(r)
    return x + np.log1p(np.exp(-2 * x)) - math.log(2), np.tanh(r), np.ones_like(r)


def _log_half(r):
    r = np.asarray(r, dtype=float)
    return r / 2, np.full_like(r, 0.5), np.full_like(r, 0.25)


@dataclass
class WarpFunction:
    """Piecewise warp: segment ``i`` covers ``[starts[i], starts[i+1])``.

    Every piece returns ``(ln w, (ln w)', w''/w)``.
    """

    starts: list[float]
    pieces: list[LogPiece]
    names: list[str]

    def log_eval(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        idx = np.searchsorted(np.asarray(self.starts), r, side="right") - 1
        idx = np.clip(idx, 0, len(self.pieces) - 1)
        out = [np.empty_like(r) for _ in range(3)]
        for i in np.unique(idx):
            mask = idx == i
            vals = self.pieces[i](r[mask])
            for o, v in zip(out, vals):
                o[mask] = v
        return tuple(out)

    def lin_eval(self, r):
        L, L1, Q = self.log_eval(r)
        w = np.exp(L)
        return w, w * L1, w * Q


@dataclass
class WarpProfile:
    schedule: RegionSchedule
    smoothing_delta: float
    with_tail: bool
    v: WarpFunction
    h_theta: WarpFunction
    h_r: WarpFunction
    joins: dict[str, SmoothedJoin] = field(default_factory=dict)
    tail: TailProfile | None = None
    cubic: CubicInterpolant | None = None
    bridge: HBridge | None = None

    @property
    def breakpoints(self) -> tuple[float, ...]:
        edges = set()
        for wf in (self.v, self.h_theta, self.h_r):
            edges.update(wf.starts[1:])
        return tuple(sorted(edges))

    def windows(self) -> list[tuple[str, float, float]]:
        return sorted(((name, j.lo, j.hi) for name, j in self.joins.items()), key=lambda t: t[1])

    def in_window(self, r, pad: float = 0.0):
        r = np.asarray(r, dtype=float)
        mask = np.zeros(r.shape, dtype=bool)
        for _, lo, hi in self.windows():
            mask |= (r >= lo - pad) & (r <= hi + pad)
        return mask

    def log_eval(self, r) -> dict[str, np.ndarray]:
        """Logarithmic warp data: ``ln w``, ``(ln w)'`` and ``w''/w`` for each warp."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = {"r": r}
        for name in ("v", "h_theta", "h_r"):
            L, L1, Q = getattr(self, name).log_eval(r)
            out[f"log_{name}"], out[f"dlog_{name}"], out[f"dd_over_{name}"] = L, L1, Q
        # same pieces below e_eps, but vectorised exp may round differently per batch
        eq = r <= self.schedule.e_eps
        for key in ("log_h", "dlog_h", "dd_over_h"):
            out[key + "_r"][eq] = out[key + "_theta"][eq]
        return out

    def equal_warp_mask(self, r):
        """Radii where ``h_theta`` and ``h_r`` are the same function."""
        return np.asarray(r, dtype=float) < self.schedule.e_eps

    def state(self, r) -> WarpState:
        """Linear warp data; raises if any warp underflows."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        vals = {}
        for name in ("v", "h_theta", "h_r"):
            w, d1, d2 = getattr(self, name).lin_eval(r)
            vals[name], vals["d" + name], vals["dd" + name] = w, d1, d2
        eq = r <= self.schedule.e_eps
        for pre in ("", "d", "dd"):
            vals[pre + "h_r"][eq] = vals[pre + "h_theta"][eq]
        return WarpState(r=r, **vals).validate()

    def region_id(self, r) -> np.ndarray:
        s = self.schedule
        r = np.asarray(r, dtype=float)
        edges = [s.a_eps, s.b_eps, s.c_eps, s.d_eps, s.e_eps, s.f_eps]
        rid = 1 + np.searchsorted(np.asarray(edges), r, side="right")
        if self.with_tail:
            rid = np.where(r < s.o_eps, 0, rid)
        return rid


@dataclass(frozen=True)
class ModelProfile:
    """The model warps on ``[r_min, r_max]`` presented with the ``WarpProfile`` interface."""

    r_min: float = 0.05
    r_max: float = 6.0
    schedule: RegionSchedule | None = None
    smoothing_delta: float = 0.0
    with_tail: bool = False
    tail: TailProfile | None = None

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def windows(self) -> list:
        return []

    def log_eval(self, r) -> dict[str, np.ndarray]:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = {"r": r}
        for name, fn in (("v", _log_sinh_half), ("h_theta", _log_cosh_half), ("h_r", _log_cosh)):
            L, L1, Q = fn(r) if name != "v" else _with_q(fn)(r)
            out[f"log_{name}"], out[f"dlog_{name}"], out[f"dd_over_{name}"] = L, L1, Q
        # same pieces below e_eps, but vectorised exp may round differently per batch
        eq = r <= self.schedule.e_eps
        for key in ("log_h", "dlog_h", "dd_over_h"):
            out[key + "_r"][eq] = out[key + "_theta"][eq]
        return out

    def equal_warp_mask(self, r):
        return np.zeros(np.shape(r), dtype=bool)

    def state(self, r) -> WarpState:
        from .model import model_state

        return model_state(np.atleast_1d(np.asarray(r, dtype=float)))

    def region_id(self, r):
        return np.full(np.shape(r), 7, dtype=int)


def _pick_delta(requested: float, corner: float, neighbours: list[float], frac: float = 0.25) -> float:
    gaps = [abs(corner - x) for x in neighbours if x != corner]
    return min([requested] + [frac * g for g in gaps])


def build_profile(epsilon: float = 0.01, k: float = 40, r_max: float | None = None,
                  smoothing_delta: float = 1e-3, with_tail: bool = False) -> WarpProfile:
    """Assemble the seven regions (and optionally the tail) with C^2 joins.

    Raises ``ScheduleError`` when the breakpoints are infeasible or a corner
    cannot be smoothed with the requested ``smoothing_delta``.
    """
    s = compute_breakpoints(epsilon, k, r_max)
    try:
        return _assemble(s, smoothing_delta, with_tail)
    except ScheduleError:
        raise
    except ValueError as exc:
        raise ScheduleError(f"cannot build profile: {exc}") from exc


def _assemble(s: RegionSchedule, smoothing_delta: float, with_tail: bool) -> WarpProfile:
    epsilon = s.epsilon
    eps = epsilon
    bridge = build_h_bridge(s)
    cubic = phi_cubic(s)
    vbend = build_v_bend(s)
    joins: dict[str, SmoothedJoin] = {"v@r_eps": vbend}
    all_bps = [s.a_eps, s.m_eps, s.b_eps, s.c_eps, s.d_eps, s.e_eps, s.f_eps, s.r_max]
    if with_tail:
        all_bps += [s.p_eps, s.o_eps]

    # h at m: bridge (continued with slope 3/4) against q, in linear form.  The corner is
    # C^1 with h'' dropping to 2 eps^6, so the window sits left of m and q stays exact.
    q_fn = lambda r: _q(np.asarray(r, dtype=float), s.b_eps, eps)
    dm = _pick_delta(smoothing_delta, s.m_eps, all_bps, frac=0.125)
    jm = smooth_concat(bridge.lin_eval, q_fn, s.m_eps, 0.0, dm, anchor="left")
    db = _pick_delta(smoothing_delta, s.b_eps, all_bps)
    jb = smooth_concat(q_fn, _cosh_half, s.b_eps, 0.0, db)
    joins["h@m"], joins["h@b"] = jm, jb

    h_starts = [-np.inf]
    h_pieces: list[LogPiece] = []
    h_names: list[str] = []
    tail = None
    if with_tail:
        tail = aregular_profile(eps, s)
        dp = _pick_delta(smoothing_delta, tail.p, all_bps)
        jp = smooth_concat(tail.low_log, tail.ramp_log, tail.p, 0.0, dp)
        joins["h@p"] = jp
        h_pieces += [_with_q(tail.low_log), _log_to_lin_join(jp),
                     _with_q(tail.ramp_log), _log_half]
        h_names += ["tail", "smooth@p", "tail-ramp", "exp-half"]
        h_starts += [jp.lo, jp.hi, tail.o]
    else:
        h_pieces.append(_log_half)
        h_names.append("exp-half")
    h_starts += [s.a_eps, jm.lo, jm.hi, jb.lo, jb.hi]
    h_pieces += [bridge.log_eval, _lin_join(jm), _lin_to_log(q_fn), _lin_join(jb), _log_cosh_half]
    h_names += ["bridge", "smooth@m", "q", "smooth@b", "cosh-half"]
    h_theta = WarpFunction(h_starts, h_pieces, h_names)

    de = _pick_delta(smoothing_delta, s.e_eps, all_bps, frac=0.125)
    je = smooth_concat(_cosh_half, cubic, s.e_eps, 0.0, de, anchor="right")
    df = _pick_delta(smoothing_delta, s.f_eps, all_bps, frac=0.125)
    jf = smooth_concat(cubic, _cosh, s.f_eps, 0.0, df, anchor="left")
    joins["h_r@e"], joins["h_r@f"] = je, jf
    h_r = WarpFunction(
        h_starts + [je.lo, je.hi, jf.lo, jf.hi],
        h_pieces[:-1] + [_log_cosh_half, _lin_join(je), _lin_to_log(cubic), _lin_join(jf), _log_cosh],
        h_names[:-1] + ["cosh-half", "smooth@e", "phi", "smooth@f", "cosh"],
    )
    v = WarpFunction(
        [-np.inf, vbend.lo, vbend.hi],
        [_with_q(_v_left(eps)), _log_to_lin_join(vbend), _with_q(_log_sinh_half)],
        ["eps-exp", "bend", "sinh-half"],
    )
    return WarpProfile(schedule=s, smoothing_delta=smoothing_delta, with_tail=with_tail,
                       v=v, h_theta=h_theta, h_r=h_r, joins=joins, tail=tail, cubic=cubic, bridge=bridge)


def _with_q(fn):
    """Convert a log piece ``(L, L', L'')`` to ``(L, L', w''/w)``."""

    def wrapped(r):
        L, L1, L2 = fn(r)
        return L, L1, L2 + L1**2

    return wrapped


PROFILE_COLUMNS = ("r", "v", "dv", "ddv", "h_theta", "dh_theta", "ddh_theta", "h_r", "dh_r", "ddh_r", "region_id")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_profile_csv(profile: WarpProfile, r, path) -> None:
    """Profile table; linear values underflow to 0 far in the negative direction."""
    r = np.asarray(r, dtype=float)
    rows = {"r": r, "region_id": profile.region_id(r)}
    for name in ("v", "h_theta", "h_r"):
        w, d1, d2 = getattr(profile, name).lin_eval(r)
        rows[name], rows["d" + name], rows["dd" + name] = w, d1, d2
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(PROFILE_COLUMNS)
        for i in range(r.size):
            wr.writerow([str(int(rows[c][i])) if c == "region_id" else _fmt(float(rows[c][i])) for c in PROFILE_COLUMNS])
