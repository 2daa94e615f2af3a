"""Tests for exporter classes."""

import numpy as np
import pytest

from pwsde.exporters import (
    ConvergenceCSVExporter,
    DecompositionCSVExporter,
    ExcursionCSVExporter,
    OccupationCSVExporter,
    PathCSVExporter,
    TransformGridCSVExporter,
    TransformSidecarExporter,
)
from pwsde.models.reports import ConvergenceReport, ConvergenceRow, OccupationReport, OccupationRow


@pytest.fixture
def convergence_data():
    """Fixture providing a small convergence report dictionary."""
    report = ConvergenceReport(
        problem="circle2d",
        scheme="gm",
        reference="gm",
        reference_delta=2.0 ** -10,
        rows=[
            ConvergenceRow(delta=0.0625, error=0.25, n_paths=100, ci_half_width=0.01),
            ConvergenceRow(delta=0.015625, error=0.125, n_paths=100, ci_half_width=0.005),
        ],
        fitted_order=0.5,
        intercept=-1.0,
    )
    return report.to_dict()


class TestConvergenceCSVExporter:
    """Tests for ConvergenceCSVExporter."""

    def test_export_creates_file(self, tmp_path, convergence_data):
        """Export should write the header, one line per row and the fit."""
        file_path = tmp_path / "convergence.csv"

        ConvergenceCSVExporter().export(convergence_data, str(file_path))

        assert file_path.read_text().splitlines() == [
            "delta,error,n_paths,ci_half_width",
            "0.0625,0.25,100,0.01",
            "0.015625,0.125,100,0.005",
            "# fitted_order=0.5 intercept=-1",
        ]

    def test_missing_fit_is_nan(self, tmp_path, convergence_data):
        convergence_data["fitted_order"] = None
        convergence_data["intercept"] = None
        file_path = tmp_path / "convergence.csv"

        ConvergenceCSVExporter().export(convergence_data, str(file_path))

        assert file_path.read_text().splitlines()[-1] == "# fitted_order=nan intercept=nan"

    def test_export_creates_nested_directories(self, tmp_path, convergence_data):
        """Export should create missing parent directories."""
        file_path = tmp_path / "nested" / "dirs" / "convergence.csv"

        ConvergenceCSVExporter().export(convergence_data, str(file_path))

        assert file_path.exists()

    @pytest.mark.parametrize("data", [{}, None, {"problem": "circle2d"}])
    def test_export_with_invalid_data_raises_error(self, tmp_path, data):
        """Export should raise ValueError without rows."""
        with pytest.raises(ValueError, match="rows"):
            ConvergenceCSVExporter().export(data, str(tmp_path / "test.csv"))

    def test_export_with_no_rows_logs_warning(self, tmp_path, caplog):
        data = ConvergenceReport("circle2d", "em", "gm", 2.0 ** -10).to_dict()
        file_path = tmp_path / "empty.csv"

        ConvergenceCSVExporter().export(data, str(file_path))

        assert file_path.read_text().startswith("delta,error")
        assert "No convergence rows to export" in caplog.text


class TestDiagnosticExporters:
    """Tests for the occupation, excursion and decomposition exporters."""

    def test_occupation(self, tmp_path):
        report = OccupationReport(
            problem="circle2d",
            horizon=1.0,
            rows=[OccupationRow(0.02, 2.0 ** -10, 0.01, 2000), OccupationRow(0.04, 2.0 ** -10, 0.02, 2000)],
        )
        file_path = tmp_path / "occupation.csv"

        OccupationCSVExporter().export(report.to_dict(), str(file_path))

        assert file_path.read_text().splitlines() == [
            "eps,delta,occupation,n_paths",
            "0.02,0.0009765625,0.01,2000",
            "0.04,0.0009765625,0.02,2000",
        ]

    def test_excursion(self, tmp_path):
        data = {"problem": "circle2d", "rows": [{"eps": 0.1, "delta": 0.5, "probability": 1, "n_paths": 8}]}
        file_path = tmp_path / "excursion.csv"

        ExcursionCSVExporter().export(data, str(file_path))

        assert file_path.read_text().splitlines()[1] == "0.1,0.5,1,8"

    def test_decomposition(self, tmp_path):
        data = {
            "problem": "gbm1d",
            "rows": [{"delta": 0.25, "transformed_error": 0.5, "mismatch": 0.0, "n_paths": 4}],
        }
        file_path = tmp_path / "decomposition.csv"

        DecompositionCSVExporter().export(data, str(file_path))

        assert file_path.read_text().splitlines() == ["delta,transformed_error,mismatch,n_paths", "0.25,0.5,0,4"]


class TestPathCSVExporter:
    """Tests for PathCSVExporter."""

    def test_two_dimensional_path(self, tmp_path):
        data = {
            "times": np.array([0.0, 0.5]),
            "path": np.array([[0.6, 0.6], [1.0, -0.25]]),
            "in_band": np.array([False, True]),
        }
        file_path = tmp_path / "path.csv"

        PathCSVExporter().export(data, str(file_path))

        assert file_path.read_text().splitlines() == ["t,x1,x2,in_band", "0,0.6,0.6,0", "0.5,1,-0.25,1"]

    def test_one_dimensional_path_without_flags(self, tmp_path):
        data = {"times": np.array([0.0, 1.0]), "path": np.array([[0.1], [0.3]]), "in_band": None}
        file_path = tmp_path / "path.csv"

        PathCSVExporter().export(data, str(file_path))

        assert file_path.read_text().splitlines() == ["t,x,in_band", "0,0.1,0", "1,0.3,0"]

    def test_missing_path_raises(self, tmp_path):
        with pytest.raises(ValueError, match="path"):
            PathCSVExporter().export({"times": [0.0]}, str(tmp_path / "path.csv"))


class TestTransformExporters:
    """Tests for the transform grid and sidecar exporters."""

    def test_grid(self, tmp_path):
        data = {
            "x": np.array([[0.0], [0.05]]),
            "g": np.array([[0.0], [0.0510546875]]),
            "det_jacobian": np.array([1.0, 1.25]),
        }
        file_path = tmp_path / "grid.csv"

        TransformGridCSVExporter().export(data, str(file_path))

        assert file_path.read_text().splitlines() == ["x,g,det_jacobian", "0,0,1", "0.05,0.0510546875,1.25"]

    def test_sidecar(self, tmp_path):
        file_path = tmp_path / "circle2d.transform.txt"

        TransformSidecarExporter().export(
            {"problem": "circle2d", "c": 0.025, "certificate": None, "halvings": 2}, str(file_path)
        )

        assert file_path.read_text() == "problem = circle2d\nc = 0.025\ncertificate = none\nhalvings = 2\n"

    def test_sidecar_with_empty_data_raises(self, tmp_path):
        with pytest.raises(ValueError):
            TransformSidecarExporter().export({}, str(tmp_path / "empty.txt"))
