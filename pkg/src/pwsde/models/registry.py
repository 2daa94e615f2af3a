"""Built-in problems, looked up by name from the command line and configs."""

import difflib
from typing import Callable, Dict

import numpy as np

from ..errors import ConfigError
from ..geometry import PointSet1D, Sphere
from .problem import SdeProblem

GBM_DRIFT = 0.5
GBM_VOLATILITY = 0.2


def _circle_drift(x: np.ndarray) -> np.ndarray:
    inside = (x[:, 0] ** 2 + x[:, 1] ** 2 <= 1.0)[:, None]
    return np.where(inside, np.stack([-x[:, 0], x[:, 1]], axis=1), 1.0)


def _circle_diffusion(x: np.ndarray) -> np.ndarray:
    scale = 1.0 / (1.0 + x[:, 0] ** 2 + x[:, 1] ** 2)
    out = np.zeros((x.shape[0], 2, 2))
    out[:, 0, 0] = scale * x[:, 0]
    out[:, 1, 0] = scale * x[:, 1]
    return out


def circle2d() -> SdeProblem:
    return SdeProblem(
        name="circle2d",
        dim=2,
        drift=_circle_drift,
        diffusion=_circle_diffusion,
        # The origin is a fixed point of this SDE.
        initial=(0.6, 0.6),
        horizon=1.0,
        surface=Sphere((0.0, 0.0), 1.0),
        description="2D drift discontinuous on the unit circle, degenerate diffusion",
    )


def step1d() -> SdeProblem:
    return SdeProblem(
        name="step1d",
        dim=1,
        drift=lambda x: np.where(x >= 0.0, -1.0, 1.0),
        diffusion=lambda x: np.ones((x.shape[0], 1, 1)),
        initial=(0.1,),
        horizon=1.0,
        surface=PointSet1D((0.0,)),
        description="1D drift -sign(x) with unit noise",
    )


def _gbm_exact(x0: np.ndarray, t, w: np.ndarray) -> np.ndarray:
    return x0 * np.exp((GBM_DRIFT - 0.5 * GBM_VOLATILITY ** 2) * t + GBM_VOLATILITY * w)


def gbm1d() -> SdeProblem:
    return SdeProblem(
        name="gbm1d",
        dim=1,
        drift=lambda x: GBM_DRIFT * x,
        diffusion=lambda x: (GBM_VOLATILITY * x)[:, :, None],
        initial=(1.0,),
        horizon=1.0,
        exact=_gbm_exact,
        description="Geometric Brownian motion with closed-form solution",
    )


_BUILTINS: Dict[str, Callable[[], SdeProblem]] = {
    "circle2d": circle2d,
    "step1d": step1d,
    "gbm1d": gbm1d,
}


def registry() -> Dict[str, SdeProblem]:
    """Fresh instances of every built-in problem, keyed by name."""
    return {name: factory() for name, factory in _BUILTINS.items()}


def get_problem(name: str) -> SdeProblem:
    """Look up a built-in problem.

    Raises:
        ConfigError: If no problem has that name; close matches are suggested.
    """
    factory = _BUILTINS.get(name)
    if factory is None:
        suggestions = difflib.get_close_matches(name, list(_BUILTINS), n=3, cutoff=0.4)
        hint = f" Did you mean: {', '.join(suggestions)}?" if suggestions else ""
        raise ConfigError(f"Unknown problem '{name}'. Available: {', '.join(sorted(_BUILTINS))}.{hint}")
    return factory()
