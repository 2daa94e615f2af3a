from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from ..errors import ArgumentError
from ..geometry import Hypersurface
from ..utils import as_batch, restore

Coefficient = Callable[[np.ndarray], np.ndarray]
ExactSolution = Callable[[np.ndarray, float, np.ndarray], np.ndarray]


class SdeProblem:
    """An SDE ``dX = mu(X) dt + sigma(X) dW`` on ``R^d`` with square diffusion.

    ``drift`` and ``diffusion`` are vectorised: for ``x`` of shape ``(n, d)``
    they return arrays of shape ``(n, d)`` and ``(n, d, d)``. Both must be
    defined everywhere, including on the exceptional set.
    """

    def __init__(
        self,
        name: str,
        dim: int,
        drift: Coefficient,
        diffusion: Coefficient,
        initial: Sequence[float],
        horizon: float,
        surface: Optional[Hypersurface] = None,
        exact: Optional[ExactSolution] = None,
        description: str = "",
    ) -> None:
        """Initialize an SdeProblem.

        Args:
            name: Identifier used by the registry and in output file names.
            dim: Spatial dimension ``d``.
            drift: Vectorised drift ``mu``.
            diffusion: Vectorised diffusion ``sigma``.
            initial: Initial value ``x``.
            horizon: Time horizon ``T``.
            surface: Exceptional set of the drift, if any.
            exact: Optional closed-form solution ``X_t = exact(x, t, W_t)``.
            description: Free text shown by the CLI.

        Raises:
            ArgumentError: If dimensions or the horizon are invalid.
        """
        if not name:
            raise ArgumentError("Problem name cannot be empty")
        if int(dim) != dim or dim < 1:
            raise ArgumentError(f"Dimension must be a positive integer, got {dim}")
        if not horizon > 0:
            raise ArgumentError(f"Horizon must be positive, got {horizon}")
        x0 = np.asarray(initial, dtype=float).reshape(-1)
        if x0.shape != (dim,):
            raise ArgumentError(f"Initial value must have {dim} components, got {x0.shape[0]}")
        if surface is not None and surface.dim != dim:
            raise ArgumentError(f"Surface dimension {surface.dim} does not match problem dimension {dim}")

        self.name = name
        self.dim = int(dim)
        self.drift = drift
        self.diffusion = diffusion
        self.initial = x0
        self.horizon = float(horizon)
        self.surface = surface
        self.exact = exact
        self.description = description

    def evaluate_drift(self, x) -> np.ndarray:
        """Drift at a point ``(d,)`` or a batch ``(n, d)``."""
        points, single = as_batch(x, self.dim)
        values = np.asarray(self.drift(points), dtype=float).reshape(points.shape[0], self.dim)
        return restore(values, single)

    def evaluate_diffusion(self, x) -> np.ndarray:
        """Diffusion matrix at a point ``(d,)`` or a batch ``(n, d)``."""
        points, single = as_batch(x, self.dim)
        values = np.asarray(self.diffusion(points), dtype=float).reshape(points.shape[0], self.dim, self.dim)
        return restore(values, single)

    def with_overrides(
        self,
        initial: Optional[Sequence[float]] = None,
        horizon: Optional[float] = None,
        surface: Optional[Hypersurface] = None,
    ) -> "SdeProblem":
        """Copy of the problem with selected fields replaced."""
        return SdeProblem(
            name=self.name,
            dim=self.dim,
            drift=self.drift,
            diffusion=self.diffusion,
            initial=self.initial if initial is None else initial,
            horizon=self.horizon if horizon is None else horizon,
            surface=self.surface if surface is None else surface,
            exact=self.exact,
            description=self.description,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Summary of the problem for logs and sidecar files."""
        return {
            "name": self.name,
            "dim": self.dim,
            "initial": self.initial.tolist(),
            "horizon": self.horizon,
            "surface": None if self.surface is None else self.surface.describe(),
            "exact": self.exact is not None,
            "description": self.description,
        }
