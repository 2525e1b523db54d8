import json
import math
import pathlib

import pytest

import cnpdg

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"

MMS_2D = {
    "experiment": "mms",
    "order": 1,
    "mesh": {"dim": 2, "cells": [2, 2], "levels": 3},
    "solver": {"snes_rtol": 1e-10},
}

REACTOR_SMALL = {
    "order": 1,
    "mesh": {"cells": [16, 4, 2], "grading": 2.0, "levels": 2, "refinements": 0},
}


def test_observed_rate():
    assert cnpdg.observed_rate(4.0, 1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")))
def test_shipped_configs_parse(path):
    doc = json.loads(path.read_text())
    cnpdg.check_config(path.read_text(), doc["experiment"])


def test_unknown_key_is_config_error():
    with pytest.raises(cnpdg.ConfigError, match="bogus"):
        cnpdg.check_config(json.dumps({"bogus": 1}), "mms")
    assert issubclass(cnpdg.ConfigError, ValueError)


def test_unknown_experiment():
    with pytest.raises(cnpdg.ConfigError):
        cnpdg.run("nope", {}, "/tmp")


def test_mms_converges_and_writes_outputs(tmp_path):
    cnpdg.set_deterministic(True)
    rows = cnpdg.run("mms", MMS_2D, tmp_path)
    assert [r["level"] for r in rows] == [0, 1, 2]
    assert all(r["newton"]["converged"] for r in rows)
    assert math.isnan(rows[0]["rate_c1"])
    assert rows[-1]["error_c1"] < rows[0]["error_c1"]
    assert rows[-1]["rate_phi"] > 1.5
    for name in ("convergence.csv", "summary.csv", "solver_log.csv", "fields_level2.vtk"):
        assert (tmp_path / name).is_file()
    header = (tmp_path / "convergence.csv").read_text().splitlines()[0]
    assert "rate_c1" in header

    vtk = cnpdg.read_vtk(str(tmp_path / "fields_level2.vtk"))
    assert len(vtk["points"]) > 0
    assert "boundary_tag" in vtk["cell_data"]


def test_reactor_small_conserves_current(tmp_path):
    result = cnpdg.run("reactor", REACTOR_SMALL, tmp_path)
    assert result["newton"]["converged"]
    assert result["cathode_current"] * result["anode_current"] < 0
    assert result["current_balance"] < 1e-6
    assert (tmp_path / "summary.csv").is_file()


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(cnpdg.IoError):
        cnpdg.run("mms", MMS_2D, blocker / "sub")
