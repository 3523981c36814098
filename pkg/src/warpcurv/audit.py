"""Sectional curvature of 2-planes and the radial curvature audit.

A 2-plane with orthonormal basis ``(A, B)`` corresponds to the unit
decomposable bivector ``A ^ B``.  Its sectional curvature is the quadratic
form of the curvature operator (a symmetric 6x6 matrix in the bivector basis
``12, 13, 14, 23, 24, 34``) on that bivector.

Plane extremes are located by quasi-random sampling plus local refinement.
Independently, the extremes over the Grassmannian of a 4-dimensional space
equal ``min_t lambda_max(R + t P)`` and ``max_t lambda_min(R + t P)``, where
``P`` is the Plucker form; the audit reports that dual value as a bound.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import norm, qmc

from .frame import (
    COMPONENT_NAMES,
    CurvatureComponents,
    curvature_components,
    equal_warp_components_from_logs,
    expand_full_tensor,
)

__all__ = [
    "PlaneFrame",
    "BIVECTOR_PAIRS",
    "PLUCKER",
    "curvature_operator",
    "sectional_curvature",
    "sectional_curvature_full",
    "sectional_curvature_equal_warp",
    "PlaneSampler",
    "PlaneExtremes",
    "plane_extremes",
    "MARGIN_NAMES",
    "InequalityMargins",
    "inequality_margins",
    "default_slack_budget",
    "CERTIFIED",
    "CERTIFIED_WITH_SLACK",
    "SCAN_ONLY",
    "Certificate",
    "certify_point",
    "region6_components",
    "region6_reduced_inequality_1a",
    "region6_alpha_star",
    "region6_parabola_min",
    "profile_components",
    "audit_grid",
    "AuditReport",
    "audit_profile",
    "ProbeResult",
    "aregularity_probe",
]

BIVECTOR_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

# omega^omega = 2 (w12 w34 - w13 w24 + w14 w23); zero exactly on decomposable bivectors
PLUCKER = np.zeros((6, 6))
for _a, _b, _s in ((0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)):
    PLUCKER[_a, _b] = PLUCKER[_b, _a] = _s


@dataclass(frozen=True)
class PlaneFrame:
    """Orthonormal pair ``(A, B)`` spanning a 2-plane, in frame coefficients."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(4))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(4))

    def validate(self, tol: float = 1e-12) -> "PlaneFrame":
        if (abs(self.a @ self.a - 1) > tol or abs(self.b @ self.b - 1) > tol
                or abs(self.a @ self.b) > tol):
            raise ValueError("plane frame is not orthonormal")
        return self

    @classmethod
    def from_vectors(cls, a, b) -> "PlaneFrame":
        """Gram-Schmidt of two independent vectors."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a = a / np.linalg.norm(a)
        b = b - (a @ b) * a
        nb = np.linalg.norm(b)
        if nb < 1e-14:
            raise ValueError("vectors are parallel")
        return cls(a, b / nb)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "PlaneFrame":
        return cls.from_vectors(rng.normal(size=4), rng.normal(size=4))

    def bivector(self) -> np.ndarray:
        return np.array([self.a[i] * self.b[j] - self.a[j] * self.b[i] for i, j in BIVECTOR_PAIRS])

    def rotated(self, theta: float, flip: bool = False) -> "PlaneFrame":
        """Another orthonormal basis of the same plane."""
        c, s = math.cos(theta), math.sin(theta)
        a, b = c * self.a + s * self.b, -s * self.a + c * self.b
        return PlaneFrame(a, -b if flip else b)

    def b1_zero_form(self) -> "PlaneFrame":
        """Basis of the same plane whose second vector has no ``Y1`` part."""
        return self.rotated(math.atan2(self.b[0], self.a[0]))


def curvature_operator(c: CurvatureComponents) -> np.ndarray:
    """Symmetric curvature operator on bivectors, shape ``(..., 6, 6)``."""
    arr = c.as_array()
    M = np.zeros(arr.shape[:-1] + (6, 6))
    for k, name in enumerate(("R1212", "R1313", "R1414", "R2323", "R2424", "R3434")):
        M[..., k, k] = arr[..., COMPONENT_NAMES.index(name)]
    for (p, q), name in (((0, 5), "R1234"), ((1, 4), "R1324"), ((2, 3), "R1423")):
        val = arr[..., COMPONENT_NAMES.index(name)]
        M[..., p, q] = val
        M[..., q, p] = val
    return M


def sectional_curvature(c: CurvatureComponents, p: PlaneFrame) -> float:
    """Nine-term expansion of ``<R(A,B)A,B>`` in bivector coordinates."""
    p.validate()
    w12, w13, w14, w23, w24, w34 = p.bivector()
    return float(
        c.R1212 * w12**2 + c.R1313 * w13**2 + c.R1414 * w14**2
        + c.R2323 * w23**2 + c.R2424 * w24**2 + c.R3434 * w34**2
        + 2 * (c.R1234 * w12 * w34 + c.R1324 * w13 * w24 + c.R1423 * w14 * w23)
    )


def sectional_curvature_full(c: CurvatureComponents, p: PlaneFrame) -> float:
    """Ground truth by contracting the full tensor with ``A, B, A, B``."""
    R = expand_full_tensor(c)
    return float(np.einsum("ijkl,i,j,k,l->", R, p.a, p.b, p.a, p.b))


def sectional_curvature_equal_warp(c: CurvatureComponents, p: PlaneFrame) -> float:
    """Reduced formula for ``h_theta = h_r`` and a basis ``(C, D)`` with ``d3 = d4 = 0``."""
    p.validate()
    cc, d = p.a, p.b
    if abs(d[2]) > 1e-12 or abs(d[3]) > 1e-12:
        raise ValueError("second basis vector must have zero Y3 and Y4 parts")
    c1, c2, c3, c4 = cc
    d1, d2 = d[0], d[1]
    return float(
        (c1 * d2 - c2 * d1) ** 2 * c.R1212 + d1**2 * c3**2 * c.R1313 + d1**2 * c4**2 * c.R1414
        + d2**2 * c3**2 * c.R2323 + d2**2 * c4**2 * c.R2424 + 3 * c3 * c4 * d1 * d2 * c.R1423
    )


# ---------------------------------------------------------------- plane extremes

def _bivectors(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.stack([A[..., i] * B[..., j] - A[..., j] * B[..., i] for i, j in BIVECTOR_PAIRS], axis=-1)


def _antisym(g: np.ndarray) -> np.ndarray:
    G = np.zeros((4, 4))
    for k, (i, j) in enumerate(BIVECTOR_PAIRS):
        G[i, j] = g[k]
        G[j, i] = -g[k]
    return G


class PlaneSampler:
    """Quasi-uniform orthonormal 2-frames from a scrambled Sobol sequence.

    ``A`` is uniform on the unit 3-sphere and ``B`` uniform on the unit sphere
    of ``A``'s orthogonal complement.  The sample set depends only on
    ``(n_samples, seed)`` and is cached for reuse across grid points.
    """

    _cache: dict[tuple[int, int], np.ndarray] = {}

    @classmethod
    def bivectors(cls, n_samples: int, seed: int) -> np.ndarray:
        key = (int(n_samples), int(seed))
        if key not in cls._cache:
            cls._cache[key] = cls._build(*key)
        return cls._cache[key]

    @staticmethod
    def _build(n_samples: int, seed: int) -> np.ndarray:
        m = max(1, math.ceil(math.log2(n_samples)))
        u = qmc.Sobol(d=6, scramble=True, seed=seed).random_base2(m)
        u = np.clip(u, 1e-12, 1 - 1e-12)
        A = norm.ppf(u[:, :4])
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        # Householder reflection taking e1 to -sign(A1) A; its other columns span A-perp
        sgn = np.where(A[:, 0] >= 0, 1.0, -1.0)
        w = A.copy()
        w[:, 0] += sgn
        H = np.eye(4)[None] - 2 * w[:, :, None] * w[:, None, :] / np.sum(w * w, axis=1)[:, None, None]
        z = 2 * u[:, 4] - 1
        phi = 2 * math.pi * u[:, 5]
        rho = np.sqrt(1 - z * z)
        s = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        B = np.einsum("nij,nj->ni", H[:, :, 1:], s)
        return _bivectors(A, B)


@dataclass(frozen=True)
class PlaneExtremes:
    k_min: float
    k_max: float
    argmin: PlaneFrame
    argmax: PlaneFrame
    k_min_bound: float
    k_max_bound: float
    n_evaluated: int


def _dual_value(M: np.ndarray, sense: str) -> tuple[float, float]:
    """``min_t lambda_max(M + tP)`` or ``max_t lambda_min(M + tP)`` and the optimal ``t``."""
    scale = max(1e-300, float(np.max(np.abs(M))))
    Ms = M / scale
    if sense == "max":
        f = lambda t: np.linalg.eigvalsh(Ms + t * PLUCKER)[-1]
    else:
        f = lambda t: -np.linalg.eigvalsh(Ms + t * PLUCKER)[0]
    res = minimize_scalar(f, bounds=(-3.0, 3.0), method="bounded", options={"xatol": 1e-13, "maxiter": 500})
    t = float(res.x)
    val = float(f(t))
    return (val if sense == "max" else -val) * scale, t * scale


def _plane_from_bivector(x: np.ndarray) -> PlaneFrame:
    """Closest decomposable plane to a bivector (top singular pair of its 4x4 form)."""
    X = _antisym(x)
    _, _, Vt = np.linalg.svd(X)
    return PlaneFrame.from_vectors(Vt[0], Vt[1])


def _refine(M: np.ndarray, start: PlaneFrame, sense: str, steps: int) -> tuple[float, PlaneFrame]:
    """Local optimisation of the scale-free quotient ``w.Mw / |w|^2`` over ``(A, B)``."""
    scale = max(1e-300, float(np.max(np.abs(M))))
    Ms = M / scale
    sgn = -1.0 if sense == "max" else 1.0

    def fun(x):
        A, B = x[:4], x[4:]
        w = _bivectors(A, B)
        D = w @ w
        if D < 1e-300:
            return 0.0, np.zeros(8)
        Q = w @ Ms @ w / D
        g = 2 * (Ms @ w - Q * w) / D
        G = _antisym(g)
        return sgn * Q, sgn * np.concatenate([G @ B, -G @ A])

    x0 = np.concatenate([start.a, start.b])
    with warnings.catch_warnings():
        # line-search stalls near an optimum are expected at this gradient tolerance
        warnings.simplefilter("ignore")
        res = minimize(fun, x0, jac=True, method="BFGS", options={"maxiter": steps, "gtol": 1e-14})
    try:
        plane = PlaneFrame.from_vectors(res.x[:4], res.x[4:])
    except ValueError:
        plane = start
    val = float(plane.bivector() @ M @ plane.bivector())
    return val, plane


def _clamp_for_max(M: np.ndarray) -> np.ndarray:
    """Raise very negative diagonal entries; this can only increase every sectional value."""
    off = np.abs(M - np.diag(np.diag(M)))
    ref = max(1.0, float(np.max(off)), float(np.max(np.diag(M))))
    Mc = M.copy()
    d = np.diag(Mc).copy()
    np.fill_diagonal(Mc, np.maximum(d, -1e6 * ref))
    return Mc


def plane_extremes(c: CurvatureComponents, n_samples: int = 10_000, refine_steps: int = 50,
                   seed: int = 0, n_starts: int = 3) -> PlaneExtremes:
    """Minimum and maximum sectional curvature over all 2-planes."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    M = curvature_operator(c)
    W = PlaneSampler.bivectors(n_samples, seed)
    out = {}
    for sense in ("min", "max"):
        Mx = _clamp_for_max(M) if sense == "max" else M
        K = np.sum((W @ Mx) * W, axis=1)
        order = np.argsort(K)
        idx = order[-n_starts:] if sense == "max" else order[:n_starts]
        bound, t = _dual_value(Mx, sense)
        evals, evecs = np.linalg.eigh(Mx + t * PLUCKER)
        starts = [_plane_from_bivector(W[i]) for i in idx]
        starts.append(_plane_from_bivector(evecs[:, -1] if sense == "max" else evecs[:, 0]))
        best_val, best_plane = None, None
        for st in starts:
            val, plane = _refine(Mx, st, sense, refine_steps)
            w = plane.bivector()
            val = float(w @ M @ w)  # report the unclamped value
            if best_val is None or (val > best_val if sense == "max" else val < best_val):
                best_val, best_plane = val, plane
        sampled = float(K[idx[-1] if sense == "max" else idx[0]])
        if sense == "max":
            sampled_true = float(W[idx[-1]] @ M @ W[idx[-1]])
            best_val = max(best_val, sampled_true)
        else:
            best_val = min(best_val, sampled)
        out[sense] = (best_val, best_plane, bound)
    return PlaneExtremes(
        k_min=out["min"][0], k_max=out["max"][0], argmin=out["min"][1], argmax=out["max"][1],
        k_min_bound=out["min"][2], k_max_bound=out["max"][2], n_evaluated=int(W.shape[0]),
    )


# ---------------------------------------------------------------- margins and certificates

MARGIN_NAMES = ("m_1a", "m_1b", "m_2a", "m_2b", "m_3a", "m_3b")
_MARGIN_PAIRS = (("R1234", "R1212"), ("R1234", "R3434"), ("R1324", "R1313"),
                 ("R1324", "R2424"), ("R1423", "R1414"), ("R1423", "R2323"))


@dataclass(frozen=True)
class InequalityMargins:
    """``m = -|R_mixed| - R_diag`` for the six pairings; all ``>= 0`` certifies ``K < 0``."""

    m_1a: np.ndarray | float
    m_1b: np.ndarray | float
    m_2a: np.ndarray | float
    m_2b: np.ndarray | float
    m_3a: np.ndarray | float
    m_3b: np.ndarray | float
    scale: np.ndarray | float = 1.0

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(getattr(self, n), dtype=float) for n in MARGIN_NAMES], axis=-1)

    def tolerance(self, rel: float = 1e-12) -> np.ndarray:
        return rel * np.asarray(self.scale, dtype=float) + 1e-14


def inequality_margins(c: CurvatureComponents) -> InequalityMargins:
    vals, scales = {}, []
    for name, (mixed, diag) in zip(MARGIN_NAMES, _MARGIN_PAIRS):
        m = np.asarray(getattr(c, mixed), dtype=float)
        d = np.asarray(getattr(c, diag), dtype=float)
        vals[name] = -np.abs(m) - d
        scales.append(np.abs(m) + np.abs(d))
    return InequalityMargins(**vals, scale=np.stack(scales, axis=-1))


def default_slack_budget(margins: InequalityMargins) -> float:
    """10% of the smallest positive margin, capped at 1e-2."""
    arr = np.atleast_1d(margins.as_array()).ravel()
    pos = arr[arr > 0]
    if pos.size == 0:
        return 0.0
    return float(min(0.1 * pos.min(), 1e-2))


CERTIFIED = "CERTIFIED"
CERTIFIED_WITH_SLACK = "CERTIFIED-WITH-SLACK"
SCAN_ONLY = "SCAN-ONLY"


@dataclass(frozen=True)
class Certificate:
    status: str
    margins: InequalityMargins
    extremes: PlaneExtremes
    slack_budget: float
    violated: tuple[str, ...]

    @property
    def k_max(self) -> float:
        return max(self.extremes.k_max, self.extremes.k_max_bound)

    @property
    def negative(self) -> bool:
        return self.k_max < 0


def certify_point(c: CurvatureComponents, slack_budget: float | None = None,
                  n_samples: int = 10_000, refine_steps: int = 50, seed: int = 0,
                  extremes: PlaneExtremes | None = None) -> Certificate:
    """Six-inequality certificate, with one small violation allowed when the scan confirms ``K < 0``."""
    margins = inequality_margins(c)
    arr = margins.as_array()
    tol = margins.tolerance()
    bad = tuple(n for n, m, t in zip(MARGIN_NAMES, arr, tol) if m < -t)
    if slack_budget is None:
        slack_budget = default_slack_budget(margins)
    if extremes is None:
        extremes = plane_extremes(c, n_samples=n_samples, refine_steps=refine_steps, seed=seed)
    k_max = max(extremes.k_max, extremes.k_max_bound)
    if not bad:
        status = CERTIFIED
    elif len(bad) == 1 and -arr[MARGIN_NAMES.index(bad[0])] <= slack_budget and k_max < 0:
        status = CERTIFIED_WITH_SLACK
    else:
        status = SCAN_ONLY
    return Certificate(status=status, margins=margins, extremes=extremes,
                       slack_budget=float(slack_budget), violated=bad)


# ---------------------------------------------------------------- Region 6

def region6_components(schedule, r, phi=None) -> CurvatureComponents:
    """Specialised components for ``v = sinh(r/2)``, ``h_theta = cosh(r/2)``, ``h_r = phi``.

    ``phi`` defaults to the schedule's cubic; any callable returning
    ``(phi, phi', phi'')`` may be passed instead, and then the domain is not checked.
    """
    r = np.asarray(r, dtype=float)
    if phi is None:
        from .schedule import phi_cubic

        if np.any(r < schedule.e_eps) or np.any(r > schedule.f_eps):
            raise ValueError("region6_components needs r in [e_eps, f_eps]")
        phi = phi_cubic(schedule)
    p, dp, ddp = (np.asarray(x, dtype=float) for x in phi(r))
    ch, sh = np.cosh(r), np.sinh(r)
    p2m1 = (p - 1) * (p + 1)
    sh2 = sh * sh
    quarter = np.full_like(p, -0.25)
    return CurvatureComponents(
        R1212=-p2m1 * (3 * p**2 + ch**2) / (4 * p**2 * sh2),
        R1313=-(ch + 1) * dp / (2 * sh * p) - 1 / (4 * p**2) + p2m1 * (p**2 + 2 * ch + 1) / (4 * p**2 * sh2),
        R2323=-(ch - 1) * dp / (2 * sh * p) - 1 / (4 * p**2) + p2m1 * (p**2 - 2 * ch + 1) / (4 * p**2 * sh2),
        R1234=dp / sh - p2m1 * ch / (2 * p * sh2),
        R1324=dp * (ch + p**2) / (2 * p**2 * sh) - p2m1 * (ch + 1) / (4 * p * sh2) - 1 / (4 * p),
        R1423=dp * (ch - p**2) / (2 * p**2 * sh) + p2m1 * (ch - 1) / (4 * p * sh2) - 1 / (4 * p),
        R1414=quarter, R2424=quarter.copy(), R3434=-ddp / p,
    )


def _k_of(schedule_or_k) -> float:
    return float(getattr(schedule_or_k, "k", schedule_or_k))


def region6_reduced_inequality_1a(schedule, alpha):
    """Leading-order form ``p(alpha) = 1/4 - alpha + (1 + 9/(2k^2)) alpha^2`` of inequality (1a)."""
    k = _k_of(schedule)
    a = np.asarray(alpha, dtype=float)
    return 0.25 - a + (1 + 9 / (2 * k * k)) * a * a


def region6_alpha_star(schedule) -> float:
    k = _k_of(schedule)
    return k * k / (2 * k * k + 9)


def region6_parabola_min(schedule) -> float:
    """``p(alpha*) = 9 / (4 (2k^2 + 9))``."""
    k = _k_of(schedule)
    return 9 / (4 * (2 * k * k + 9))


# ---------------------------------------------------------------- profile audit

def profile_components(profile, r) -> CurvatureComponents:
    """Frame curvature along a profile; log-space formulas wherever the horizontal warps agree."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    eq = np.asarray(profile.equal_warp_mask(r), dtype=bool)
    out = np.empty(r.shape + (9,))
    if eq.any():
        d = profile.log_eval(r[eq])
        c = equal_warp_components_from_logs(d["log_v"], d["dlog_v"], d["dd_over_v"],
                                            d["log_h_theta"], d["dlog_h_theta"], d["dd_over_h_theta"])
        out[eq] = c.as_array()
    if (~eq).any():
        out[~eq] = curvature_components(profile.state(r[~eq])).as_array()
    return CurvatureComponents.from_array(out)


def audit_grid(profile, n_points: int = 2000, scan_min: float | None = None,
               r_max: float | None = None) -> np.ndarray:
    """Sorted radii: a uniform base grid, per-region fill, and dense smoothing windows."""
    s = profile.schedule
    lo = scan_min if scan_min is not None else getattr(profile, "scan_min", None)
    if lo is None:
        lo = (s.p_eps - 10) if getattr(profile, "with_tail", False) else s.a_eps - 10
    hi = r_max if r_max is not None else s.r_max
    pts = []
    edges = sorted({lo, hi, *(x for x in profile.breakpoints if lo < x < hi),
                    *(x for x in s.breakpoints(getattr(profile, "with_tail", False)).values() if lo < x < hi)})
    per = max(8, int(0.5 * n_points / max(1, len(edges) - 1)))
    for a, b in zip(edges[:-1], edges[1:]):
        pts.append(np.linspace(a, b, per + 2)[1:-1])
    for _, a, b in profile.windows():
        w = b - a
        pts.append(np.linspace(a, b, 33))
        pts.append(np.array([a - w, a - profile.smoothing_delta, b + profile.smoothing_delta, b + w]))
    if s.e_eps < hi:
        # the delicate part of Region 6 sits near alpha = 1/2
        pts.append(s.e_eps * (1 + np.linspace(0.3, 0.7, 41)))
    extra = np.unique(np.concatenate(pts))
    extra = extra[(extra >= lo) & (extra <= hi)]
    n_base = max(2, int(n_points) - extra.size)
    while True:
        r = np.union1d(extra, np.linspace(lo, hi, n_base))
        if r.size >= n_points:
            return r
        n_base += int(n_points) - r.size


@dataclass
class AuditReport:
    r: np.ndarray
    region_id: np.ndarray
    components: np.ndarray  # (N, 9)
    margins: np.ndarray  # (N, 6)
    k_min: np.ndarray
    k_max: np.ndarray
    k_max_bound: np.ndarray
    status: np.ndarray
    config: dict = field(default_factory=dict)
    alpha: np.ndarray | None = None
    probe: "ProbeResult | None" = None

    @property
    def k_max_effective(self) -> np.ndarray:
        return np.maximum(self.k_max, self.k_max_bound)

    @property
    def global_sup_k(self) -> float:
        return float(np.max(self.k_max_effective))

    @property
    def binding_index(self) -> int:
        return int(np.argmax(self.k_max_effective))

    @property
    def failed(self) -> bool:
        return bool(np.any(self.k_max_effective >= 0))

    def region_summary(self) -> dict[str, dict]:
        out = {}
        for rid in np.unique(self.region_id):
            m = self.region_id == rid
            st = self.status[m]
            kmax = self.k_max_effective[m]
            if np.any(kmax >= 0):
                status = "FAILED"
            elif np.any(st == SCAN_ONLY):
                status = SCAN_ONLY
            elif np.any(st == CERTIFIED_WITH_SLACK):
                status = CERTIFIED_WITH_SLACK
            else:
                status = CERTIFIED
            i = int(np.argmax(kmax))
            out[str(int(rid))] = {
                "status": status,
                "points": int(m.sum()),
                "sup_k": float(kmax[i]),
                "sup_k_at": float(self.r[m][i]),
                "inf_k": float(np.min(self.k_min[m])),
                "min_margin": float(np.min(self.margins[m])),
                "counts": {s: int(np.sum(st == s)) for s in (CERTIFIED, CERTIFIED_WITH_SLACK, SCAN_ONLY)},
            }
        return out

    def slack_points(self) -> np.ndarray:
        return np.flatnonzero(self.status == CERTIFIED_WITH_SLACK)

    def summary(self) -> dict:
        i = self.binding_index
        out = {
            "global_sup_k": self.global_sup_k,
            "binding_region": int(self.region_id[i]),
            "binding_r": float(self.r[i]),
            "n_points": int(self.r.size),
            "failed": self.failed,
            "regions": self.region_summary(),
            "config": self.config,
        }
        if self.failed:
            out["witness_r"] = float(self.r[i])
        if self.probe is not None:
            out["aregularity_probe"] = self.probe.to_dict()
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(dumps_json(self.summary()))

    def write_csv(self, path) -> None:
        header = ["r", "region_id", *COMPONENT_NAMES, *MARGIN_NAMES, "K_min", "K_max", "status"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(self.r.size):
                w.writerow([_fmt(self.r[i]), int(self.region_id[i]), *(_fmt(x) for x in self.components[i]),
                            *(_fmt(x) for x in self.margins[i]), _fmt(self.k_min[i]),
                            _fmt(self.k_max_effective[i]), self.status[i]])


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _round17(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return json.dumps(_round17(obj), indent=2, sort_keys=True) + "\n"


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("WARPCURV_THREADS", "1")))
    except ValueError:
        return 1


def audit_profile(profile, grid=None, n_points: int = 2000, scan_min: float | None = None,
                  n_samples: int = 10_000, refine_steps: int = 50, seed: int = 0) -> AuditReport:
    """Certificate and plane extremes at every grid radius; results are in grid order."""
    r = np.asarray(grid, dtype=float) if grid is not None else audit_grid(profile, n_points, scan_min)
    comps = profile_components(profile, r)
    arr = comps.as_array()
    PlaneSampler.bivectors(n_samples, seed)  # build the shared sample set once

    def work(i):
        c = CurvatureComponents.from_array(arr[i])
        return certify_point(c, n_samples=n_samples, refine_steps=refine_steps, seed=seed)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            certs = list(ex.map(work, range(r.size)))
    else:
        certs = [work(i) for i in range(r.size)]

    rid = np.asarray(profile.region_id(r))
    alpha = None
    sched = getattr(profile, "schedule", None)
    if sched is not None:
        alpha = np.where(rid == 6, (r - sched.e_eps) / sched.e_eps, np.nan)
    report = AuditReport(
        r=r, region_id=rid, components=arr,
        margins=np.array([c.margins.as_array() for c in certs]),
        k_min=np.array([min(c.extremes.k_min, c.extremes.k_min_bound) for c in certs]),
        k_max=np.array([c.extremes.k_max for c in certs]),
        k_max_bound=np.array([c.extremes.k_max_bound for c in certs]),
        status=np.array([c.status for c in certs]),
        alpha=alpha,
        config={"n_samples": int(n_samples), "refine_steps": int(refine_steps), "seed": int(seed),
                "n_points": int(r.size)},
    )
    return report


# ---------------------------------------------------------------- A-regularity probe

_STENCILS = {
    1: (np.array([1, -8, 0, 8, -1]) / 12.0),
    2: (np.array([-1, 16, -30, 16, -1]) / 12.0),
    3: (np.array([-1, 2, 0, -2, 1]) / 2.0),
    4: (np.array([1, -4, 6, -4, 1]) / 1.0),
}


@dataclass
class ProbeResult:
    """``log10 sup |d^m R_ijkl / dr^m|`` over a grid, per order and component."""

    orders: tuple[int, ...]
    r: np.ndarray
    log10_sup: dict[int, dict[str, float]]
    log10_sup_window: dict[str, dict[int, dict[str, float]]]

    def table(self) -> dict[int, float]:
        return {m: max(v.values()) for m, v in self.log10_sup.items()}

    def finite(self) -> bool:
        # -inf marks an identically vanishing derivative, which is finite
        return all(not (math.isnan(x) or x == math.inf) for v in self.log10_sup.values() for x in v.values())

    def to_dict(self) -> dict:
        return {
            "r_min": float(self.r.min()), "r_max": float(self.r.max()),
            "log10_sup": {str(m): v for m, v in self.log10_sup.items()},
            "windows": {w: {str(m): v for m, v in d.items()} for w, d in self.log10_sup_window.items()},
        }


def _log10_abs(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log10(np.abs(x))


def _probe_values(profile, r: np.ndarray, shift: float):
    """Bounded part of each component, and the ``-e^{-2 ln h}/4`` part of R2323 divided by ``e^shift``.

    The split is only made where the horizontal warps agree; elsewhere the
    general formula is used and the second part is zero.
    """
    eq = np.asarray(profile.equal_warp_mask(r), dtype=bool)
    arr = np.empty(r.shape + (9,))
    singular = np.zeros(r.shape)
    if eq.any():
        d = profile.log_eval(r[eq])
        c = equal_warp_components_from_logs(d["log_v"], d["dlog_v"], d["dd_over_v"],
                                            d["log_h_theta"], d["dlog_h_theta"], d["dd_over_h_theta"])
        part = c.as_array()
        part[..., COMPONENT_NAMES.index("R2323")] += np.exp(np.minimum(-2 * d["log_h_theta"], 690.0)) / 4
        arr[eq] = part
        singular[eq] = -0.25 * np.exp(-2 * d["log_h_theta"] - shift)
    if (~eq).any():
        arr[~eq] = curvature_components(profile.state(r[~eq])).as_array()
    return arr, singular


def aregularity_probe(profile, max_order: int = 3, grid=None, step: float = 0.05,
                      windows: dict[str, tuple[float, float]] | None = None) -> ProbeResult:
    """Finite-difference radial derivatives of the nine components, reported in log10 form.

    The horizontal curvature contains ``-1/(4 h^2)``, which in the tail is of
    size ``1/tau^2`` and lies far outside double precision.  That term is
    differentiated after factoring out a constant ``e^shift`` and recombined
    in log10 space, so the table stays finite and exact in scale.
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must lie in 0..4")
    s = profile.schedule
    if grid is None:
        if getattr(profile, "tail", None) is None:
            raise ValueError("aregularity_probe needs a profile with the tail, or an explicit grid")
        grid = np.arange(s.p_eps - 20, s.o_eps, 0.25)
    r = np.asarray(grid, dtype=float)
    offsets = np.arange(-2, 3) * step
    rr = r[:, None] + offsets[None, :]
    shift = max(0.0, float(np.max(-2 * profile.log_eval(rr.ravel())["log_h_theta"])))
    bounded, singular = _probe_values(profile, rr.ravel(), shift)
    bounded = bounded.reshape(r.size, 5, 9)
    singular = singular.reshape(r.size, 5)
    log_shift = shift / math.log(10)

    per_point: dict[int, np.ndarray] = {}
    for m in range(max_order + 1):
        if m == 0:
            b = bounded[:, 2, :]
            sg = singular[:, 2]
        else:
            b = np.einsum("k,nkc->nc", _STENCILS[m], bounded) / step**m
            sg = singular @ _STENCILS[m] / step**m
        lg = _log10_abs(b)
        # R2323 = bounded + e^shift * singular; bound |sum| by the sum of magnitudes
        j = COMPONENT_NAMES.index("R2323")
        lsing = _log10_abs(sg) + log_shift
        lg[:, j] = np.logaddexp(lg[:, j] * math.log(10), lsing * math.log(10)) / math.log(10)
        per_point[m] = lg

    def sup_over(mask) -> dict[int, dict[str, float]]:
        return {m: {n: float(np.max(per_point[m][mask, i])) for i, n in enumerate(COMPONENT_NAMES)}
                for m in per_point}

    full = sup_over(np.ones(r.size, dtype=bool))
    win_out = {}
    for name, (a, b) in (windows or {}).items():
        mask = (r >= a) & (r <= b)
        if mask.any():
            win_out[name] = sup_over(mask)
    return ProbeResult(orders=tuple(range(max_order + 1)), r=r, log10_sup=full, log10_sup_window=win_out)
