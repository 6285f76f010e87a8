"""cell scenario tests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from chupscale.cell_geometry import import_bitmap
from chupscale.cell_solver import EffectiveTensors
from chupscale.output import parse_field

from .conftest import RunScenario


def test_trivial_cell_writes_identity_tensors(run_scenario: RunScenario, tmp_path: Path) -> None:
    report = run_scenario(
        {"scenario": "cell", "geometry": {"resolution": 16}, "stepper": {"mobility": 2.0}},
        tmp_path,
    )

    tensors = EffectiveTensors.from_json((tmp_path / "tensors.json").read_text(encoding="utf-8"))
    assert tensors.porosity == 1.0
    np.testing.assert_allclose(tensors.diffusion, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(tensors.mv, 0.0, atol=1e-10)
    np.testing.assert_allclose(tensors.mw_a, 2.0 * np.eye(2), atol=1e-10)
    assert report.summary["interface_measure"] == 0.0
    assert "tensors.txt" in report.files


def test_ball_cell_artifacts(run_scenario: RunScenario, tmp_path: Path) -> None:
    report = run_scenario(
        {
            "scenario": "cell",
            "geometry": {
                "resolution": 16,
                "inclusion": {"kind": "ball", "center": [0.5, 0.5], "radius": 0.3},
            },
        },
        tmp_path,
    )

    payload = json.loads((tmp_path / "tensors.json").read_text(encoding="utf-8"))
    assert payload["artifact_version"] == "1"
    assert 0.0 < report.summary["porosity"] < 1.0
    assert report.summary["max_residual"] <= 1e-10

    d = np.array(report.summary["D"])
    np.testing.assert_allclose(d, d.T, atol=1e-8)
    assert np.all(np.linalg.eigvalsh(d) > 0.0)

    xi = parse_field((tmp_path / "correctors" / "xi_v_1.txt").read_text(encoding="utf-8"))
    assert xi.shape == (16, 16)
    cell = import_bitmap((tmp_path / "cell.txt").read_text(encoding="utf-8"))
    assert cell.porosity == report.summary["porosity"]
    for name in ("chi_a_2.txt", "chi_b_2.txt", "xi_v_2.txt"):
        assert f"correctors/{name}" in report.files


def test_correctors_can_be_skipped(run_scenario: RunScenario, tmp_path: Path) -> None:
    report = run_scenario(
        {
            "scenario": "cell",
            "geometry": {"resolution": 16},
            "solver": {"write_correctors": False},
        },
        tmp_path,
    )

    assert not any(name.startswith("correctors/") for name in report.files)
