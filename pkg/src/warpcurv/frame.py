"""Brackets, connection and curvature of a diagonal warped metric.

The metric is ``v^2 dtheta^2 + h_theta^2 dS^2 + h_r^2 dT^2 + dr^2`` written in
the orthonormal frame ``Y1 = (1/v) d/dtheta``, ``Y2 = S/h_theta``,
``Y3 = T/h_r``, ``Y4 = d/dr``.  Every warp depends on ``r`` only.

Indices in this module are zero based (``Y1`` is index 0).  Curvature follows
the convention ``R(X,Y)Z = nabla_Y nabla_X Z - nabla_X nabla_Y Z +
nabla_[X,Y] Z`` so that ``K(Yi, Yj) = <R(Yi,Yj)Yi,Yj>``.

All functions accept scalars or numpy arrays in the state fields and
broadcast elementwise.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, fields
from typing import Protocol

import numpy as np

__all__ = [
    "WarpState",
    "BracketTable",
    "CANONICAL_TABLE",
    "ConnectionCoefficients",
    "CurvatureComponents",
    "COMPONENT_NAMES",
    "lie_brackets",
    "bracket_constants",
    "connection_coefficients",
    "curvature_components",
    "curvature_components_equal_warp",
    "equal_warp_components_from_logs",
    "expand_full_tensor",
    "koszul_curvature_oracle",
    "bianchi_residual",
    "ProfileLike",
    "FunctionProfile",
]

# Below this a warp value is treated as degenerate and rejected.
MIN_WARP = 1e-300

COMPONENT_NAMES = (
    "R1212", "R1313", "R2323",
    "R1234", "R1324", "R1423",
    "R1414", "R2424", "R3434",
)


@dataclass(frozen=True)
class WarpState:
    """Warp values and their first two radial derivatives at radius ``r``."""

    r: np.ndarray | float
    v: np.ndarray | float
    h_theta: np.ndarray | float
    h_r: np.ndarray | float
    dv: np.ndarray | float
    dh_theta: np.ndarray | float
    dh_r: np.ndarray | float
    ddv: np.ndarray | float
    ddh_theta: np.ndarray | float
    ddh_r: np.ndarray | float

    def validate(self) -> "WarpState":
        for f in fields(self):
            val = np.asarray(getattr(self, f.name), dtype=float)
            if not np.all(np.isfinite(val)):
                raise ValueError(f"WarpState.{f.name} is not finite")
        for name in ("v", "h_theta", "h_r"):
            val = np.asarray(getattr(self, name), dtype=float)
            if np.any(val <= MIN_WARP):
                raise ValueError(f"WarpState.{name} must be positive (got min {val.min()!r})")
        return self

    def take(self, idx) -> "WarpState":
        """Select entries of an array-valued state."""
        return WarpState(**{f.name: np.asarray(getattr(self, f.name))[idx] for f in fields(self)})

    @property
    def equal_warp(self) -> bool:
        return bool(np.all(np.asarray(self.h_theta) == np.asarray(self.h_r))
                    and np.all(np.asarray(self.dh_theta) == np.asarray(self.dh_r))
                    and np.all(np.asarray(self.ddh_theta) == np.asarray(self.ddh_r)))


@dataclass(frozen=True)
class BracketTable:
    """Coefficients of the three horizontal brackets.

    ``[Y1,Y2] = alpha3 h_r/(v h_theta) Y3``, ``[Y1,Y3] = alpha2 h_theta/(v h_r) Y2``
    and ``[Y2,Y3] = alpha1 v/(h_theta h_r) Y1``.
    """

    alpha1: float = 0.5
    alpha2: float = 0.5
    alpha3: float = -0.5

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)


CANONICAL_TABLE = BracketTable()


@dataclass(frozen=True)
class ConnectionCoefficients:
    """``gamma[..., i, j, k] = <nabla_{Y_i} Y_j, Y_k>`` (zero based)."""

    gamma: np.ndarray

    def __getitem__(self, idx):
        return self.gamma[idx]


@dataclass(frozen=True)
class CurvatureComponents:
    """The nine independent frame components ``<R(Yi,Yj)Yk,Yl>``."""

    R1212: np.ndarray | float
    R1313: np.ndarray | float
    R2323: np.ndarray | float
    R1234: np.ndarray | float
    R1324: np.ndarray | float
    R1423: np.ndarray | float
    R1414: np.ndarray | float
    R2424: np.ndarray | float
    R3434: np.ndarray | float

    def as_array(self) -> np.ndarray:
        """Stack into shape ``(..., 9)`` in ``COMPONENT_NAMES`` order."""
        return np.stack([np.asarray(getattr(self, n), dtype=float) for n in COMPONENT_NAMES], axis=-1)

    @classmethod
    def from_array(cls, arr) -> "CurvatureComponents":
        arr = np.asarray(arr, dtype=float)
        return cls(**{n: arr[..., i] for i, n in enumerate(COMPONENT_NAMES)})

    def take(self, idx) -> "CurvatureComponents":
        return CurvatureComponents.from_array(self.as_array()[idx])


def _check(state: WarpState) -> None:
    state.validate()


def bracket_constants(state: WarpState, table: BracketTable = CANONICAL_TABLE) -> np.ndarray:
    """Structure constants ``C[..., i, j, m] = <[Y_i, Y_j], Y_m>``."""
    _check(state)
    v, ht, hr = (np.asarray(x, dtype=float) for x in (state.v, state.h_theta, state.h_r))
    shape = np.broadcast(v, ht, hr, state.dv).shape
    C = np.zeros(shape + (4, 4, 4))
    a1, a2, a3 = table.as_tuple()
    c12 = a3 * hr / (v * ht)
    c13 = a2 * ht / (v * hr)
    c23 = a1 * v / (ht * hr)
    C[..., 0, 1, 2], C[..., 1, 0, 2] = c12, -c12
    C[..., 0, 2, 1], C[..., 2, 0, 1] = c13, -c13
    C[..., 1, 2, 0], C[..., 2, 1, 0] = c23, -c23
    for i, (w, dw) in enumerate(((v, state.dv), (ht, state.dh_theta), (hr, state.dh_r))):
        lw = np.asarray(dw, dtype=float) / w
        C[..., i, 3, i], C[..., 3, i, i] = lw, -lw
    return C


def lie_brackets(state: WarpState, table: BracketTable = CANONICAL_TABLE) -> dict[tuple[int, int], np.ndarray]:
    """The six independent brackets ``[Y_i, Y_j]`` (one based keys) as frame coefficient vectors."""
    C = bracket_constants(state, table)
    return {(i + 1, j + 1): C[..., i, j, :] for i in range(4) for j in range(i + 1, 4)}


def connection_coefficients(state: WarpState, table: BracketTable = CANONICAL_TABLE) -> ConnectionCoefficients:
    """Levi-Civita connection from the reduced Koszul formula.

    For an orthonormal frame ``<nabla_Y X, Z> = -1/2 (<[X,Z],Y> + <[Y,Z],X> + <[X,Y],Z>)``.
    """
    C = bracket_constants(state, table)
    # gamma[i, j, k] with Y = Y_i, X = Y_j, Z = Y_k
    g = -0.5 * (
        np.einsum("...jki->...ijk", C)
        + np.einsum("...ikj->...ijk", C)
        + np.einsum("...jik->...ijk", C)
    )
    return ConnectionCoefficients(g)


def curvature_components(state: WarpState) -> CurvatureComponents:
    """Closed-form frame curvature for the canonical bracket table."""
    _check(state)
    v, ht, hr = (np.asarray(x, dtype=float) for x in (state.v, state.h_theta, state.h_r))
    dv, dht, dhr = (np.asarray(x, dtype=float) for x in (state.dv, state.dh_theta, state.dh_r))
    ddv, ddht, ddhr = (np.asarray(x, dtype=float) for x in (state.ddv, state.ddh_theta, state.ddh_r))

    A2 = v**2 / (4 * ht**2 * hr**2)
    B2 = ht**2 / (4 * v**2 * hr**2)
    C2 = hr**2 / (4 * v**2 * ht**2)
    iv2, it2, ir2 = 1 / (2 * v**2), 1 / (2 * ht**2), 1 / (2 * hr**2)

    R1212 = -dv * dht / (v * ht) - 0.25 * (-A2 - B2 + 3 * C2 - iv2 + it2 - ir2)
    R1313 = -dv * dhr / (v * hr) - 0.25 * (-A2 + 3 * B2 - C2 - iv2 - it2 + ir2)
    R2323 = -dht * dhr / (ht * hr) - 0.25 * (3 * A2 - B2 - C2 + iv2 + it2 + ir2)

    # derivatives of the ratios that appear in the mixed components
    d_ht_v = (dht * v - ht * dv) / v**2
    d_v_ht = (dv * ht - v * dht) / ht**2
    d_hr2_vht = (2 * hr * dhr * v * ht - hr**2 * (dv * ht + v * dht)) / (v * ht) ** 2
    d_hr_v = (dhr * v - hr * dv) / v**2
    d_v_hr = (dv * hr - v * dhr) / hr**2
    d_ht2_vhr = (2 * ht * dht * v * hr - ht**2 * (dv * hr + v * dhr)) / (v * hr) ** 2
    d_ht_hr = (dht * hr - ht * dhr) / hr**2
    d_hr_ht = (dhr * ht - hr * dht) / ht**2
    d_v2_hthr = (2 * v * dv * ht * hr - v**2 * (dht * hr + ht * dhr)) / (ht * hr) ** 2

    R1234 = -(d_ht_v - d_v_ht - d_hr2_vht) / (4 * hr)
    R1324 = -(-d_hr_v + d_v_hr + d_ht2_vhr) / (4 * ht)
    R1423 = -(d_ht_hr + d_hr_ht + d_v2_hthr) / (4 * v)

    return CurvatureComponents(
        R1212=R1212, R1313=R1313, R2323=R2323,
        R1234=R1234, R1324=R1324, R1423=R1423,
        R1414=-ddv / v, R2424=-ddht / ht, R3434=-ddhr / hr,
    )


def curvature_components_equal_warp(state: WarpState, tol: float = 1e-12) -> CurvatureComponents:
    """Reduced formulas valid when ``h_theta == h_r``."""
    _check(state)
    ht, hr = np.asarray(state.h_theta, dtype=float), np.asarray(state.h_r, dtype=float)
    dht, dhr = np.asarray(state.dh_theta, dtype=float), np.asarray(state.dh_r, dtype=float)
    scale = np.maximum(1.0, np.abs(ht))
    if np.any(np.abs(ht - hr) > tol * scale) or np.any(np.abs(dht - dhr) > tol * np.maximum(1.0, np.abs(dht))):
        raise ValueError("equal-warp formulas need h_theta == h_r and matching derivatives")
    v = np.asarray(state.v, dtype=float)
    return equal_warp_components_from_logs(
        log_v=np.log(v), dlog_v=np.asarray(state.dv) / v, dd_over_v=np.asarray(state.ddv) / v,
        log_h=np.log(ht), dlog_h=dht / ht, dd_over_h=np.asarray(state.ddh_theta) / ht,
    )


# exp() arguments are capped here so that R2323 saturates instead of overflowing
_EXP_CAP = 690.0


def equal_warp_components_from_logs(log_v, dlog_v, dd_over_v, log_h, dlog_h, dd_over_h) -> CurvatureComponents:
    """Equal-warp curvature from logarithmic data.

    Uses only ``v/h^2``, ``1/h^2`` and log derivatives, so it stays finite for
    warps far below the floating point range.  ``1/h^2`` is capped at
    ``exp(690)``; this can only raise ``R2323``, and every consumer of the
    result (margins, sectional curvature upper bounds) is monotone in the
    safe direction.
    """
    log_v, dlog_v, dd_over_v, log_h, dlog_h, dd_over_h = (
        np.asarray(x, dtype=float) for x in (log_v, dlog_v, dd_over_v, log_h, dlog_h, dd_over_h)
    )
    rho = np.exp(np.minimum(log_v - 2 * log_h, _EXP_CAP))  # v / h^2
    inv_h2 = np.exp(np.minimum(-2 * log_h, _EXP_CAP))
    L = dlog_v - dlog_h  # (ln(v/h))'
    K12 = -dlog_v * dlog_h + rho**2 / 16
    K23 = -inv_h2 / 4 - 3 * rho**2 / 16 - dlog_h**2
    R1423 = -(rho / 2) * L
    R1234 = (rho / 4) * L
    return CurvatureComponents(
        R1212=K12, R1313=np.copy(K12), R2323=K23,
        R1234=R1234, R1324=-R1234, R1423=R1423,
        R1414=-dd_over_v, R2424=-dd_over_h, R3434=-np.copy(dd_over_h),
    )


_INDEPENDENT = {
    (0, 1, 0, 1): "R1212", (0, 2, 0, 2): "R1313", (1, 2, 1, 2): "R2323",
    (0, 1, 2, 3): "R1234", (0, 2, 1, 3): "R1324", (0, 3, 1, 2): "R1423",
    (0, 3, 0, 3): "R1414", (1, 3, 1, 3): "R2424", (2, 3, 2, 3): "R3434",
}


def expand_full_tensor(c: CurvatureComponents) -> np.ndarray:
    """Full ``(..., 4, 4, 4, 4)`` array obtained from the nine components by symmetry."""
    arr = c.as_array()
    R = np.zeros(arr.shape[:-1] + (4, 4, 4, 4))
    for (i, j, k, l), name in _INDEPENDENT.items():
        val = arr[..., COMPONENT_NAMES.index(name)]
        for (a, b), s1 in (((i, j), 1), ((j, i), -1)):
            for (p, q), s2 in (((k, l), 1), ((l, k), -1)):
                R[..., a, b, p, q] = s1 * s2 * val
                R[..., p, q, a, b] = s1 * s2 * val
    return R


def bianchi_residual(c: CurvatureComponents):
    """First Bianchi combination ``R1234 + R1423 - R1324``."""
    return np.asarray(c.R1234) + np.asarray(c.R1423) - np.asarray(c.R1324)


class ProfileLike(Protocol):
    def state(self, r) -> WarpState: ...


@dataclass(frozen=True)
class FunctionProfile:
    """Profile from nine plain callables (value, first, second derivative for each warp)."""

    v: tuple
    h_theta: tuple
    h_r: tuple
    breakpoints: tuple = ()

    def state(self, r) -> WarpState:
        r = np.asarray(r, dtype=float)
        vals = {}
        for name, fns in (("v", self.v), ("h_theta", self.h_theta), ("h_r", self.h_r)):
            f, df, ddf = fns
            vals[name] = np.broadcast_to(f(r), r.shape) * 1.0
            vals["d" + name] = np.broadcast_to(df(r), r.shape) * 1.0
            vals["dd" + name] = np.broadcast_to(ddf(r), r.shape) * 1.0
        return WarpState(r=r, **vals)


def _radial_derivative(profile: ProfileLike, r, h: float, table: BracketTable) -> np.ndarray:
    """Central differences of the connection at steps ``h`` and ``h/2``, Richardson-combined."""

    def central(step):
        gp = connection_coefficients(profile.state(r + step), table).gamma
        gm = connection_coefficients(profile.state(r - step), table).gamma
        return (gp - gm) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def koszul_curvature_oracle(profile: ProfileLike, r, fd_step: float = 1e-4,
                            table: BracketTable = CANONICAL_TABLE) -> CurvatureComponents:
    """Curvature from connection coefficients only.

    ``R(Y_i,Y_j)Y_k`` is assembled from the Koszul connection, the bracket
    table and central differences of the connection coefficients in ``r``.
    No closed-form curvature expression is used.
    """
    r = np.asarray(r, dtype=float)
    bps = np.asarray(getattr(profile, "breakpoints", ()), dtype=float)
    if bps.size and np.any(np.min(np.abs(r[..., None] - bps), axis=-1) < fd_step):
        warnings.warn("oracle stencil crosses a profile breakpoint", RuntimeWarning, stacklevel=2)
    s0 = profile.state(r)
    g = connection_coefficients(s0, table).gamma
    dg = _radial_derivative(profile, r, fd_step, table)  # only Y4 differentiates functions of r
    C = bracket_constants(s0, table)

    # nabla_{Y_j} nabla_{Y_i} Y_k, component n:
    #   delta_{j,4} dgamma[i,k,n] + sum_m gamma[i,k,m] gamma[j,m,n]
    # stored as second[j, i, k, n]
    second = np.einsum("...ikm,...jmn->...jikn", g, g)
    second[..., 3, :, :, :] += dg
    term_bracket = np.einsum("...ijm,...mkn->...ijkn", C, g)
    # R[i,j,k,n] = nabla_j nabla_i Y_k - nabla_i nabla_j Y_k + nabla_[i,j] Y_k
    R = np.swapaxes(second, -4, -3) - second + term_bracket
    comp = {name: R[(...,) + idx] for idx, name in _INDEPENDENT.items()}
    return CurvatureComponents(**comp)


def koszul_full_tensor(profile: ProfileLike, r, fd_step: float = 1e-4,
                       table: BracketTable = CANONICAL_TABLE) -> np.ndarray:
    """Full oracle tensor, used to confirm that non-listed components vanish."""
    r = np.asarray(r, dtype=float)
    s0 = profile.state(r)
    g = connection_coefficients(s0, table).gamma
    dg = _radial_derivative(profile, r, fd_step, table)
    C = bracket_constants(s0, table)
    second = np.einsum("...ikm,...jmn->...jikn", g, g)
    second[..., 3, :, :, :] += dg
    return np.swapaxes(second, -4, -3) - second + np.einsum("...ijm,...mkn->...ijkn", C, g)
