"""The model complex hyperbolic metric and its bracket coefficients.

In polar coordinates about a totally real, totally geodesic plane the model
warps are ``v = sinh(r/2)``, ``h_theta = cosh(r/2)`` and ``h_r = cosh(r)``.
This module evaluates that state, the Kahler curvature identity (a second,
frame-free oracle for the constant curvature table) and the linear system
whose solution fixes the horizontal bracket coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame import (
    BracketTable,
    CANONICAL_TABLE,
    CurvatureComponents,
    WarpState,
    bracket_constants,
)

__all__ = [
    "MODEL_CONSTANTS",
    "MODEL_COMPONENTS",
    "J",
    "model_state",
    "kahler_curvature",
    "kahler_tensor",
    "AlphaSystem",
    "alpha_system",
    "solve_alpha",
    "nijenhuis_residual",
    "belegradek_consistency",
    "ZERO_COEFFICIENT_PATTERNS",
]

# (R1212, R1313, R2323, R1234, R1324, R1423, R1414, R2424, R3434)
MODEL_CONSTANTS = np.array([-1.0, -0.25, -0.25, 0.5, 0.25, -0.25, -0.25, -0.25, -1.0])
MODEL_COMPONENTS = CurvatureComponents.from_array(MODEL_CONSTANTS)

# Columns are images of the frame vectors: J Y1 = Y2, J Y2 = -Y1, J Y3 = -Y4, J Y4 = Y3.
J = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


def model_state(r) -> WarpState:
    """Warp data of the model metric with exact derivatives."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("model_state needs r > 0")
    s, c = np.sinh(r / 2), np.cosh(r / 2)
    return WarpState(
        r=r,
        v=s, h_theta=c, h_r=np.cosh(r),
        dv=c / 2, dh_theta=s / 2, dh_r=np.sinh(r),
        ddv=s / 4, ddh_theta=c / 4, ddh_r=np.cosh(r),
    )


def kahler_curvature(X, Y, Z, W) -> float:
    """``<R(X,Y)Z,W>`` for holomorphic curvature -1, vectors in the Y-frame.

    ``4<R(X,Y)Z,W> = <X,W><Y,Z> - <X,Z><Y,W> + <X,JW><Y,JZ> - <X,JZ><Y,JW>
    + 2<X,JY><W,JZ>``.
    """
    X, Y, Z, W = (np.asarray(a, dtype=float) for a in (X, Y, Z, W))
    JY, JZ, JW = J @ Y, J @ Z, J @ W
    val = (X @ W) * (Y @ Z) - (X @ Z) * (Y @ W) + (X @ JW) * (Y @ JZ) - (X @ JZ) * (Y @ JW) + 2 * (X @ JY) * (W @ JZ)
    return float(val / 4)


def kahler_tensor() -> np.ndarray:
    """All 256 frame components of the Kahler curvature identity."""
    E = np.eye(4)
    R = np.empty((4, 4, 4, 4))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                for l in range(4):
                    R[i, j, k, l] = kahler_curvature(E[i], E[j], E[k], E[l])
    return R


@dataclass(frozen=True)
class AlphaSystem:
    """Three linear equations ``matrix @ (alpha1, alpha2, alpha3) = rhs`` at radius ``r``."""

    r: float
    matrix: np.ndarray
    rhs: np.ndarray

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def residual(self, alpha) -> np.ndarray:
        return self.matrix @ np.asarray(alpha, dtype=float) - self.rhs


def alpha_system(r: float) -> AlphaSystem:
    """Rows from the two mixed-curvature identities and the Nijenhuis identity."""
    if r <= 0:
        raise ValueError("alpha_system needs r > 0")
    s, c, C = np.sinh(r / 2), np.cosh(r / 2), np.cosh(r)
    T, th, cth = np.tanh(r), np.tanh(r / 2), 1 / np.tanh(r / 2)
    p1 = 0.5 * cth - T
    row1 = [s / (c * C) * p1, c / (s * C) * (th - 0.5 * cth - T), -C / (s * c) * p1]
    p2 = T - 0.5 * th
    row2 = [-s / (c * C) * (cth - 0.5 * th - T), c / (s * C) * p2, C / (s * c) * p2]
    row3 = [th / C, cth / C, 0.0]
    M = np.array([row1, row2, row3])
    b = np.array([-0.5, -0.5, 1 / np.sinh(r)])
    return AlphaSystem(r=float(r), matrix=M, rhs=b)


def solve_alpha(r: float, cond_limit: float = 1e12, retries: int = 3):
    """Solve for ``(alpha1, alpha2, alpha3)``; returns the triple and the condition number."""
    rr = float(r)
    for attempt in range(retries + 1):
        system = alpha_system(rr)
        cond = system.condition_number
        if np.isfinite(cond) and cond < cond_limit:
            alpha = np.linalg.solve(system.matrix, system.rhs)
            return tuple(float(a) for a in alpha), cond
        rr = float(r) * (1 + 1e-3 * (attempt + 1))
    raise np.linalg.LinAlgError(f"bracket system singular near r={r}")


def _bracket(C: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # coefficients are constant along the horizontal directions, so the bracket is bilinear here
    return np.einsum("i,j,ijm->m", x, y, C)


def nijenhuis_residual(r: float, table: BracketTable = CANONICAL_TABLE,
                       X=(1.0, 0, 0, 0), Y=(0, 0, 1.0, 0)) -> np.ndarray:
    """``[X,Y] + J[JX,Y] + J[X,JY] - [JX,JY]`` for the model warps (default ``X=Y1, Y=Y3``)."""
    C = bracket_constants(model_state(r), table)
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    JX, JY = J @ X, J @ Y
    return _bracket(C, X, Y) + J @ _bracket(C, JX, Y) + J @ _bracket(C, X, JY) - _bracket(C, JX, JY)


def _model_tensor() -> np.ndarray:
    from .frame import expand_full_tensor

    return expand_full_tensor(MODEL_COMPONENTS)


def belegradek_consistency(r: float, i: int, j: int, k: int,
                           table: BracketTable = CANONICAL_TABLE) -> tuple[float, float]:
    """Both sides of the mixed radial curvature identity (indices one based, in 1..3).

    ``2<R(d/dr, Y_i)Y_j, Y_k> = <[Y_i,Y_k],Y_j>(ln h_j/h_k)' + <[Y_j,Y_i],Y_k>(ln h_k/h_j)'
    + <[Y_j,Y_k],Y_i>(ln h_i^2/(h_j h_k))'``.
    """
    if not all(idx in (1, 2, 3) for idx in (i, j, k)):
        raise ValueError("indices must lie in 1..3")
    st = model_state(r)
    C = bracket_constants(st, table)
    logd = np.array([st.dv / st.v, st.dh_theta / st.h_theta, st.dh_r / st.h_r], dtype=float)
    a, b, c = i - 1, j - 1, k - 1
    rhs = (C[a, c, b] * (logd[b] - logd[c])
           + C[b, a, c] * (logd[c] - logd[b])
           + C[b, c, a] * (2 * logd[a] - logd[b] - logd[c]))
    lhs = 2 * _model_tensor()[3, a, b, c]
    return float(lhs), float(rhs)


# (i, j, k) patterns whose model curvature vanishes; each forces one of the
# bracket coefficients outside the canonical table to be zero
ZERO_COEFFICIENT_PATTERNS = ((1, 1, 2), (2, 1, 2), (1, 1, 3), (3, 1, 3), (2, 2, 3), (3, 2, 3))
