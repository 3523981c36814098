"""C^2 smoothing of a corner between two C^2 pieces.

On a window ``[lo, hi]`` around the corner the second derivative is replaced
by a pointwise convex blend of the two pieces' second derivatives plus two
C^infinity bumps.  The bump masses are fixed by the slope jump across the
window and the bump position by the value jump, so value, slope and second
derivative agree with the pieces at both window edges.  At a convex corner
both masses are nonnegative and ``f_delta'' >= min(f_left'', f_right'')``;
a C^1 corner with a curvature jump may need a signed mass, which is accepted
only while the second derivative stays above ``k_lower``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

__all__ = ["step", "bump", "SmoothedJoin", "smooth_concat", "Piece"]

# r -> (value, first derivative, second derivative)
Piece = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def step(u):
    """C^infinity monotone step: 0 for u <= -1, 1 for u >= 1, ``step(-u) = 1 - step(u)``."""
    u = np.asarray(u, dtype=float)
    inner = np.abs(u) < 1
    uc = np.where(inner, u, 0.0)
    z = -1 / (1 + uc) + 1 / (1 - uc)
    return np.where(inner, expit(z), np.where(u >= 1, 1.0, 0.0))


def bump(u):
    """Derivative of ``step``: a symmetric bump of unit mass supported on [-1, 1]."""
    u = np.asarray(u, dtype=float)
    inner = np.abs(u) < 1
    uc = np.where(inner, u, 0.0)
    z = -1 / (1 + uc) + 1 / (1 - uc)
    dz = 1 / (1 + uc) ** 2 + 1 / (1 - uc) ** 2
    sig = expit(z)
    return np.where(inner, sig * (1 - sig) * dz, 0.0)


@dataclass
class SmoothedJoin:
    """Evaluator of a smoothed concatenation; exact pieces outside the window."""

    f_left: Piece
    f_right: Piece
    corner: float
    lo: float
    hi: float
    s: float
    eta: float
    gamma1: float
    gamma2: float
    c: float
    w: float
    k_lower: float
    _cuts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mid, half = self.mid, self.half
        # fixed cut set so that every evaluation shares the same quadrature layout
        cuts = list(mid + half * np.linspace(-1.0, 1.0, 17))
        cuts += [mid + half * (self.s - self.eta), mid + half * (self.s + self.eta)]
        cuts = np.clip(np.array(cuts), self.lo, self.hi)
        self._cuts = np.unique(cuts)
        left = np.asarray(self.f_left(np.array([self.lo])), dtype=float)[:, 0]
        self._base = left  # value, slope and curvature at the left window edge

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def second(self, t) -> np.ndarray:
        """Second derivative of the smoothed function on the window."""
        t = np.asarray(t, dtype=float)
        u = (t - self.mid) / self.half
        chi = step((u - self.s) / self.eta)
        fl2 = self.f_left(t)[2]
        fr2 = self.f_right(t)[2]
        out = (1 - chi) * fl2 + chi * fr2
        out = out + self.gamma1 * bump(u) / self.half
        if self.gamma2 != 0:
            out = out + self.gamma2 * bump((u - self.c) / self.w) / (self.w * self.half)
        return out

    def _integrals(self, x: np.ndarray):
        """``int_lo^x g`` and ``int_lo^x (x - t) g`` for the window second derivative ``g``."""
        x = np.asarray(x, dtype=float)
        a = self._cuts[:-1]
        b = self._cuts[1:]
        lo_seg = np.minimum(a[None, :], x[:, None])
        hi_seg = np.minimum(b[None, :], x[:, None])
        length = hi_seg - lo_seg  # zero for segments beyond x
        nodes = 0.5 * (lo_seg + hi_seg)[..., None] + 0.5 * length[..., None] * _GL_NODES
        wts = 0.5 * length[..., None] * _GL_WEIGHTS
        g = self.second(nodes.ravel()).reshape(nodes.shape)
        i1 = np.sum(wts * g, axis=(1, 2))
        i2 = np.sum(wts * (x[:, None, None] - nodes) * g, axis=(1, 2))
        return i1, i2

    def evaluate_window(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f0, f1, _ = self._base
        i1, i2 = self._integrals(x)
        return f0 + (x - self.lo) * f1 + i2, f1 + i1, self.second(x)

    def __call__(self, r):
        """Value, slope and second derivative; pieces outside the window."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        val = np.empty_like(r)
        d1 = np.empty_like(r)
        d2 = np.empty_like(r)
        inside = (r > self.lo) & (r < self.hi)
        left = (r <= self.lo) | ((~inside) & (r < self.corner))
        right = ~inside & ~left
        for mask, fn in ((left, self.f_left), (right, self.f_right)):
            if mask.any():
                a, b, c = fn(r[mask])
                val[mask], d1[mask], d2[mask] = a, b, c
        if inside.any():
            a, b, c = self.evaluate_window(r[inside])
            val[inside], d1[inside], d2[inside] = a, b, c
        return val, d1, d2

    def unsmoothed(self, r):
        """The plain concatenation (left piece below the corner)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = [np.empty_like(r) for _ in range(3)]
        for mask, fn in ((r < self.corner, self.f_left), (r >= self.corner, self.f_right)):
            if mask.any():
                for o, val in zip(out, fn(r[mask])):
                    o[mask] = val
        return tuple(out)


_S_CANDIDATES = (0.0, 0.4, -0.4, 0.2, -0.2, 0.6, -0.6)
_ETA = 0.25
_THETA = 0.3
_WIDTHS = (0.5, 0.3, 0.15)


def _zero(r):
    z = np.zeros_like(np.asarray(r, dtype=float))
    return z, z, z


def _window(corner: float, delta: float, anchor: str) -> tuple[float, float]:
    if anchor == "center":
        return corner - delta, corner + delta
    if anchor == "left":
        return corner - 2 * delta, corner
    if anchor == "right":
        return corner, corner + 2 * delta
    raise ValueError(f"unknown anchor {anchor!r}")


def smooth_concat(f_left: Piece, f_right: Piece, corner: float, k_lower: float,
                  smoothing_delta: float, anchor: str = "center",
                  value_tol: float = 1e-9, check_points: int = 257) -> SmoothedJoin:
    """Smooth the concatenation of ``f_left`` (below ``corner``) and ``f_right`` (above).

    Both pieces must be defined on the whole window.  ``anchor`` places the
    window centred on the corner, ending at it (``"left"``) or starting at it
    (``"right"``); the latter two keep one side of the corner untouched.
    """
    if smoothing_delta <= 0:
        raise ValueError("smoothing_delta must be positive")
    lo, hi = _window(float(corner), float(smoothing_delta), anchor)
    x0 = np.array([corner], dtype=float)
    fl = [np.asarray(a, dtype=float)[0] for a in f_left(x0)]
    fr = [np.asarray(a, dtype=float)[0] for a in f_right(x0)]
    scale = max(1.0, abs(fl[0]), abs(fr[0]))
    if abs(fl[0] - fr[0]) > value_tol * scale:
        raise ValueError(f"pieces disagree at the corner by {abs(fl[0] - fr[0]):.3e}")
    if fl[1] > fr[1] + value_tol * max(1.0, abs(fl[1])):
        raise ValueError("slope condition violated: left slope exceeds right slope at the corner")
    grid = np.linspace(lo, hi, check_points)
    for name, fn in (("left", f_left), ("right", f_right)):
        if np.any(np.asarray(fn(grid)[2]) < k_lower):
            raise ValueError(f"{name} piece has second derivative below k_lower on the window")

    L = np.asarray(f_left(np.array([lo])), dtype=float)[:, 0]
    R = np.asarray(f_right(np.array([hi])), dtype=float)[:, 0]
    width = hi - lo
    slope_target = R[1] - L[1]
    value_target = R[0] - L[0] - width * L[1]

    last_err = "no admissible bump placement"
    signed_candidates = []
    for s, bw in ((s, bw) for bw in _WIDTHS for s in _S_CANDIDATES):
        probe = SmoothedJoin(f_left, f_right, corner, lo, hi, s, _ETA, 0.0, 0.0, 0.0, bw, k_lower)
        i1, i2 = probe._integrals(np.array([hi]))
        M = slope_target - i1[0]
        N = value_target - i2[0]
        tiny = 1e-13 * max(1.0, abs(slope_target), abs(L[2]) * width, abs(R[2]) * width)
        if abs(M) <= tiny and abs(N) <= tiny * width:
            return probe
        if abs(M) <= tiny:
            last_err = f"vanishing corner mass {M:.3e}"
            continue
        g1, g2 = _THETA * M, (1 - _THETA) * M
        c = 1 - (2 * N / width - g1) / g2
        if abs(c) + bw > 1:
            last_err = f"bump centre {c:.3f} falls outside the window"
            continue
        # re-fit the two masses against the quadrature itself so the edge match is exact
        masses = []
        for gamma1, gamma2 in ((1.0, 0.0), (0.0, 1.0)):
            unit = SmoothedJoin(_zero, _zero, corner, lo, hi, s, _ETA, gamma1, gamma2, c, bw, k_lower)
            a1, a2 = unit._integrals(np.array([hi]))
            masses.append((a1[0], a2[0]))
        A = np.array([[masses[0][0], masses[1][0]], [masses[0][1], masses[1][1]]])
        # near-symmetric placements make the columns almost parallel; lstsq keeps both masses sane
        g1, g2 = np.linalg.lstsq(A, np.array([M, N]), rcond=1e-8)[0]
        join = SmoothedJoin(f_left, f_right, corner, lo, hi, s, _ETA, float(g1), float(g2), c, bw, k_lower)
        if g1 >= 0 and g2 >= 0:
            return join
        # a curvature jump at a C^1 corner needs a signed correction; keep it only if
        # the second derivative still clears k_lower
        low = float(np.min(join.second(grid[1:-1])))
        if low > k_lower:
            signed_candidates.append((low, join))
        else:
            last_err = f"signed correction drops the second derivative to {low:.3e}"
    if signed_candidates:
        return max(signed_candidates, key=lambda t: t[0])[1]
    raise ValueError(f"cannot smooth corner at {corner}: {last_err}")
