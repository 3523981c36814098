import numpy as np
import pytest

from warpcurv.frame import FunctionProfile, WarpState
from warpcurv.schedule import build_profile


def random_states(rng: np.random.Generator, n: int, equal_warp: bool = False) -> WarpState:
    """Positive warps in [0.2, 3] with derivatives of either sign."""
    vals = {name: rng.uniform(0.2, 3.0, n) for name in ("v", "h_theta", "h_r")}
    for name in ("v", "h_theta", "h_r"):
        vals["d" + name] = rng.uniform(-2.0, 2.0, n)
        vals["dd" + name] = rng.uniform(-3.0, 3.0, n)
    if equal_warp:
        for pre in ("", "d", "dd"):
            vals[pre + "h_r"] = vals[pre + "h_theta"]
    return WarpState(r=rng.uniform(0.1, 3.0, n), **vals)


def exp_profile(coeffs) -> FunctionProfile:
    """Warps ``w = A exp(b r + c sin r)`` with exact derivatives; smooth on all of R."""

    def make(A, b, c):
        L1 = lambda r: b + c * np.cos(r)
        f = lambda r: A * np.exp(b * r + c * np.sin(r))
        return (f, lambda r: f(r) * L1(r), lambda r: f(r) * (L1(r) ** 2 - c * np.sin(r)))

    return FunctionProfile(*(make(*cf) for cf in coeffs))


def model_like_profile() -> FunctionProfile:
    return FunctionProfile(
        v=(lambda r: np.sinh(r / 2), lambda r: np.cosh(r / 2) / 2, lambda r: np.sinh(r / 2) / 4),
        h_theta=(lambda r: np.cosh(r / 2), lambda r: np.sinh(r / 2) / 2, lambda r: np.cosh(r / 2) / 4),
        h_r=(np.cosh, np.sinh, np.cosh),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def profile():
    return build_profile()


@pytest.fixture(scope="session")
def tail_profile():
    return build_profile(with_tail=True)
