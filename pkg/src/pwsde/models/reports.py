from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class ConvergenceRow:
    """Estimated strong error at one step size."""

    delta: float
    error: float
    n_paths: int
    ci_half_width: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "error": self.error,
            "n_paths": self.n_paths,
            "ci_half_width": self.ci_half_width,
        }


@dataclass
class ConvergenceReport:
    """Strong-error rows of one scheme, sorted by decreasing step size.

    ``intercept`` is the intercept of the log2-log2 regression, so the error
    constant is ``2 ** intercept``.
    """

    problem: str
    scheme: str
    reference: str
    reference_delta: float
    rows: List[ConvergenceRow] = field(default_factory=list)
    fitted_order: Optional[float] = None
    intercept: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "scheme": self.scheme,
            "reference": self.reference,
            "reference_delta": self.reference_delta,
            "rows": [row.to_dict() for row in self.rows],
            "fitted_order": self.fitted_order,
            "intercept": self.intercept,
        }


@dataclass
class OccupationRow:
    eps: float
    delta: float
    occupation: float
    n_paths: int

    def to_dict(self) -> Dict[str, Any]:
        return {"eps": self.eps, "delta": self.delta, "occupation": self.occupation, "n_paths": self.n_paths}


@dataclass
class OccupationReport:
    """Mean time the Euler-Maruyama path spends near the surface, per band width."""

    problem: str
    horizon: float
    rows: List[OccupationRow] = field(default_factory=list)

    @property
    def ratios(self) -> List[Optional[float]]:
        """Occupation ratio of every row to the previous one (None where the previous one is zero)."""
        out = []
        for previous, current in zip(self.rows, self.rows[1:]):
            out.append(current.occupation / previous.occupation if previous.occupation > 0 else None)
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "horizon": self.horizon,
            "rows": [row.to_dict() for row in self.rows],
            "ratios": self.ratios,
        }


@dataclass
class ExcursionRow:
    eps: float
    delta: float
    probability: float
    n_paths: int

    def to_dict(self) -> Dict[str, Any]:
        return {"eps": self.eps, "delta": self.delta, "probability": self.probability, "n_paths": self.n_paths}


@dataclass
class ExcursionReport:
    """Probability that some step's interpolation moves further than ``eps``."""

    problem: str
    rows: List[ExcursionRow] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"problem": self.problem, "rows": [row.to_dict() for row in self.rows]}


@dataclass
class DecompositionRow:
    """Both terms bounding the Euler-Maruyama error after transformation.

    ``transformed_error`` compares the scheme on the transformed SDE with the
    transformed reference; ``mismatch`` compares it with the transformed
    Euler-Maruyama path.
    """

    delta: float
    transformed_error: float
    mismatch: float
    n_paths: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "transformed_error": self.transformed_error,
            "mismatch": self.mismatch,
            "n_paths": self.n_paths,
        }


@dataclass
class DecompositionReport:
    problem: str
    reference_delta: float
    rows: List[DecompositionRow] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "reference_delta": self.reference_delta,
            "rows": [row.to_dict() for row in self.rows],
        }
