import math

import numpy as np
import pytest

import gridfreq


def test_bundled_cases():
    names = gridfreq.bundled_cases()
    assert "two_bus_analytic" in names
    assert len(names) == 6


def test_soft_threshold():
    assert gridfreq.soft_threshold(0.5, 0.2) == pytest.approx(0.3)
    assert gridfreq.soft_threshold(-0.1, 0.2) == 0.0


def test_two_bus_closed_loop_reaches_the_closed_form():
    d_star = gridfreq.two_bus_optimum("two_bus_analytic")
    np.testing.assert_allclose(d_star, [8.0 / 15.0, 4.0 / 15.0], rtol=1e-12)
    traj = gridfreq.simulate("two_bus_analytic", T=60.0)
    assert traj["omega"].shape == (traj["t"].size, 2)
    assert np.max(np.abs(traj["d"][-1] - d_star)) < 1e-4
    assert np.max(np.abs(traj["omega"][-1])) < 1e-5


def test_run_report():
    report = gridfreq.run("triangle", T=2.0)
    assert report["command"] == "run"
    assert math.isfinite(report["metrics"]["kkt_total"])


def test_compare_runs_each_controller():
    report = gridfreq.compare("two_bus_l1", T=5.0, controllers=["dppd", "none"])
    assert [r["controller"] for r in report["metrics"]["controllers"]] == ["dppd", "none"]


def test_errors_are_raised():
    with pytest.raises(gridfreq.GridfreqError):
        gridfreq.simulate("two_bus_analytic", mode="sideways")
    with pytest.raises(ValueError):
        gridfreq.run("no_such_case")
