#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_scenarios
----------------------------------

Tests for `scenarios` module.
"""

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from sockit import scenarios
from sockit.cell_sim import SimTrace
from sockit.estimators.pipeline import ConfigError, Pipeline
from sockit.telemetry import TelemetrySeries

OUTPUT_FILES = [
    "truth.csv",
    "telemetry.csv",
    "estimates_proposed.csv",
    "estimates_ukf.csv",
    "estimates_coulomb.csv",
    "metrics.csv",
    "summary.json",
    "timing.json",
]


def fake_metrics(scale=1.0):
    rmse, t_conv = [0.01, 0.03, 0.04], [50.0, 100.0, 200.0]
    return {
        est: scenarios.MetricsReport(est, scale * rmse[k], 0.005 * (k + 1), 0.02 * (k + 1), t_conv[k], 1e-4)
        for k, est in enumerate(scenarios.ESTIMATORS)
    }


class TestScenarioConfig(unittest.TestCase):
    def test_defaults(self):
        """All six scenarios load from the packaged defaults."""

        msg = "Scenario names incorrect"
        assert scenarios.SCENARIO_NAMES == [
            "ideal",
            "flat_zone",
            "current_bias",
            "quantization",
            "map_mismatch",
            "constant_segment",
        ], msg

        for name in scenarios.SCENARIO_NAMES:
            scenario = scenarios.load_scenario(name)
            scenario.pipeline_config().validate()
            scenario.ukf_state()

    def test_merge(self):
        """User config is merged key by key into nested settings."""

        scenario = scenarios.load_scenario("current_bias", {"duration": 100.0, "errors": {"adc_bits": 12}}, seed=9)

        msg = "Config merge incorrect"
        assert scenario.duration == 100.0 and scenario.seed == 9, msg
        assert scenario.errors == {"current_bias": -0.05, "adc_bits": 12}, msg

        msg = "Defaults were modified by the merge"
        assert scenarios.SCENARIO_DEFAULTS["current_bias"]["errors"] == {"current_bias": -0.05}, msg

    def test_guess_seeds_pipeline(self):
        """The pipeline starts from the scenario's initial guess."""

        scenario = scenarios.load_scenario("flat_zone")
        msg = "Pipeline soc0 is not the scenario guess"
        assert scenario.pipeline_config().soc0 == 1.0 and scenario.ukf_state().soc == 1.0, msg

    def test_invalid(self):
        """Invalid scenarios raise configuration errors naming the field."""

        with self.assertRaises(ConfigError):
            scenarios.load_scenario("no_such_scenario")
        with self.assertRaises(ConfigError):
            scenarios.load_scenario("ideal", {"duration": -1.0})
        with self.assertRaises(ConfigError):
            scenarios.load_scenario("ideal", {"plant_map": "other"})
        with self.assertRaises(ConfigError):
            scenarios.load_scenario("ideal", {"thresholds": {"speed": 1}})

        scenario = scenarios.load_scenario("ideal", {"pipeline": {"window": 0}})
        with self.assertRaises(ConfigError) as cm:
            Pipeline(scenario.pipeline_config())

        msg = "Error does not name the window field: {}".format(cm.exception)
        assert "window" in str(cm.exception), msg

        with self.assertRaises(ConfigError) as cm:
            scenarios.load_scenario("ideal", {"pipeline": {"windw": 10}}).pipeline_config()

        msg = "Error not prefixed with the section: {}".format(cm.exception)
        assert str(cm.exception).startswith("pipeline."), msg

        with self.assertRaises(ConfigError):
            scenarios.load_scenario("ideal", {"ukf": {"gain": 1.0}}).ukf_state()

    def test_segment(self):
        """Segment indices of the constant-segment scenario."""

        msg = "Segment bounds incorrect"
        assert scenarios.load_scenario("constant_segment").segment() == (3240, 4140), msg
        assert scenarios.load_scenario("ideal").segment() is None, msg

    def test_load_config(self):
        """Config files must hold a JSON object."""

        tmpdir = tempfile.mkdtemp()
        try:
            good, bad, arr = [os.path.join(tmpdir, f) for f in ["good.json", "bad.json", "arr.json"]]
            with open(good, "w") as fl:
                json.dump({"duration": 10.0}, fl)
            with open(bad, "w") as fl:
                fl.write("{duration: ")
            with open(arr, "w") as fl:
                fl.write("[1, 2]")

            cfg = scenarios.load_config(good)
            for fname in [bad, arr]:
                with self.assertRaises(ConfigError):
                    scenarios.load_config(fname)
        finally:
            shutil.rmtree(tmpdir)

        msg = "Config not loaded"
        assert cfg == {"duration": 10.0}, msg


class TestMetrics(unittest.TestCase):
    def test_convergence_index(self):
        """First index of a sustained 60 s run below 10 %."""

        err = np.concatenate([np.full(10, 0.5), np.full(30, 0.05), [0.2], np.full(100, 0.05)])

        msg = "Convergence index incorrect"
        assert scenarios.convergence_index(err) == 41, msg
        assert scenarios.convergence_index(np.full(100, 0.5)) is None, msg
        assert scenarios.convergence_index(np.zeros(30)) is None, msg

    def test_perfect(self):
        """A perfect estimate converges immediately with zero error."""

        t = np.arange(200.0)
        soc = np.linspace(0.9, 0.8, 200)
        m = scenarios.compute_metrics("proposed", t, soc, soc)

        msg = "Metrics of a perfect estimate incorrect: {}".format(m)
        assert m.rmse_overall == 0 and m.rmse_post_convergence == 0 and m.convergence_time == 0, msg

    def test_never_converges(self):
        """Non-converging estimates report infinite post-convergence metrics."""

        t = np.arange(200.0)
        m = scenarios.compute_metrics("coulomb", t, np.full(200, 0.2), np.full(200, 0.6))

        msg = "Non-converging metrics incorrect: {}".format(m)
        assert np.abs(m.rmse_overall - 0.4) < 1e-12 and np.isinf(m.rmse_post_convergence), msg
        assert np.isinf(m.convergence_time), msg

    def test_post_convergence(self):
        """Post-convergence metrics use the samples from convergence on."""

        t = np.arange(200.0)
        err = np.concatenate([np.full(50, 0.3), np.full(150, 0.02)])
        m = scenarios.compute_metrics("ukf", t, 0.5 + err, np.full(200, 0.5))

        msg = "Post-convergence metrics incorrect: {}".format(m)
        assert m.convergence_time == 50.0 and np.abs(m.rmse_post_convergence - 0.02) < 1e-12, msg
        assert np.abs(m.max_abs_error_post_convergence - 0.02) < 1e-12, msg

    def test_coulomb(self):
        """Coulomb counting starts at the guess and uses the previous current."""

        series = TelemetrySeries(np.arange(3.0), [4.32, 4.32, 0.0], [3.3, 3.3, 3.3])
        soc = scenarios.run_coulomb(series, 0.5)

        msg = "Coulomb-counting trace incorrect: {}".format(soc)
        assert np.allclose(soc, [0.5, 0.499, 0.498], atol=1e-12), msg

    def test_thresholds(self):
        """Threshold checks from metrics."""

        metrics = fake_metrics()
        checks = scenarios.check_thresholds(scenarios.load_scenario("current_bias"), metrics)

        msg = "Threshold checks incorrect: {}".format(checks)
        assert [c.name for c in checks] == ["rmse_ratio:coulomb", "rmse_ratio:ukf"], msg
        assert [c.passed for c in checks] == [True, True], msg

        metrics["proposed"] = metrics["proposed"]._replace(rmse_post_convergence=0.01)
        checks = scenarios.check_thresholds(scenarios.load_scenario("current_bias"), metrics)
        msg = "Ratio must compare the proposed post-convergence RMSE: {}".format(checks)
        assert [c.passed for c in checks] == [False, True], msg

        checks = scenarios.check_thresholds(scenarios.load_scenario("flat_zone"), metrics)
        msg = "Speed-up check incorrect: {}".format(checks)
        assert len(checks) == 1 and not checks[0].passed, msg

        gains = np.zeros(6480)
        checks = scenarios.check_thresholds(scenarios.load_scenario("constant_segment"), metrics, gains)
        msg = "Segment gain check incorrect: {}".format(checks)
        assert checks[0].passed, msg


class TestReport(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        for k, name in enumerate(reversed(scenarios.SCENARIO_NAMES)):
            os.makedirs(os.path.join(self.tmpdir, name))
            scenarios.write_metrics(os.path.join(self.tmpdir, name, "metrics.csv"), name, fake_metrics(k + 1))

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_table(self):
        """18 rows in scenario and estimator order."""

        out = os.path.join(self.tmpdir, "report.csv")
        table = scenarios.report(scenarios.find_metrics(self.tmpdir), out=out)
        lines = table.splitlines()

        msg = "Report table has {} lines".format(len(lines))
        assert len(lines) == 19, msg

        msg = "Report rows out of order"
        assert lines[1].split()[:2] == ["ideal", "proposed"], msg
        assert lines[-1].split()[:2] == ["constant_segment", "coulomb"], msg

        rows = scenarios.read_metrics(out)
        msg = "Combined CSV incorrect"
        assert len(rows) == 18 and rows[0]["scenario"] == "ideal", msg

    def test_rerun_identical(self):
        """Re-running the report gives identical bytes."""

        files = scenarios.find_metrics(self.tmpdir)
        a, b = os.path.join(self.tmpdir, "a.csv"), os.path.join(self.tmpdir, "b.csv")
        scenarios.report(files, out=a)
        scenarios.report(files, out=b)

        with open(a, "rb") as fa, open(b, "rb") as fb:
            msg = "Report not reproducible"
            assert fa.read() == fb.read(), msg

    def test_errors(self):
        """Empty input and missing files are errors; missing files are named."""

        with self.assertRaises(ValueError):
            scenarios.report([])

        missing = os.path.join(self.tmpdir, "nowhere", "metrics.csv")
        with self.assertRaises(ValueError) as cm:
            scenarios.report([missing])

        msg = "Error does not name the missing file"
        assert missing in str(cm.exception), msg

        with self.assertRaises(ValueError):
            scenarios.find_metrics(os.path.join(self.tmpdir, "nowhere"))


class TestRunScenario(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmpdirs = [tempfile.mkdtemp(), tempfile.mkdtemp()]
        cls.scenario = scenarios.load_scenario("ideal", {"duration": 400.0})
        cls.results = [scenarios.run_scenario(cls.scenario, d) for d in cls.tmpdirs]

    @classmethod
    def tearDownClass(cls):
        for d in cls.tmpdirs:
            shutil.rmtree(d)

    def test_files(self):
        """Every output file is written."""

        for fname in OUTPUT_FILES:
            msg = "{} not written".format(fname)
            assert os.path.isfile(os.path.join(self.tmpdirs[0], "ideal", fname)), msg

    def test_metrics_rows(self):
        """One metrics row per estimator."""

        rows = scenarios.read_metrics(os.path.join(self.tmpdirs[0], "ideal", "metrics.csv"))
        msg = "Metrics rows incorrect"
        assert [r["estimator"] for r in rows] == scenarios.ESTIMATORS, msg

    def test_summary(self):
        """Summary carries metrics, checks and the verdict."""

        with open(os.path.join(self.tmpdirs[0], "ideal", "summary.json")) as fl:
            summary = json.load(fl)

        msg = "Summary incorrect"
        assert summary["samples"] == 400 and set(summary["metrics"]) == set(scenarios.ESTIMATORS), msg
        assert summary["passed"] == self.results[0].passed and len(summary["checks"]) == 1, msg

        msg = "Summary does not record the pipeline settings"
        assert summary["pipeline"]["window"] == 100 and summary["pipeline"]["soc0"] == 0.5, msg

    def test_truth_file(self):
        """The truth file reads back as the simulated trace."""

        trace = SimTrace.from_csv(os.path.join(self.tmpdirs[0], "ideal", "truth.csv"))

        msg = "Truth file incorrect"
        assert len(trace) == 400 and trace.soc_true[0] == 1.0, msg
        assert np.all(np.diff(trace.soc_true) <= 0) and np.all(trace.h_true <= 0), msg

    def test_deterministic(self):
        """Two runs give byte-identical outputs apart from the timing file."""

        for fname in OUTPUT_FILES:
            if fname == "timing.json":
                continue
            a, b = [os.path.join(d, "ideal", fname) for d in self.tmpdirs]
            with open(a, "rb") as fa, open(b, "rb") as fb:
                msg = "{} differs between runs".format(fname)
                assert fa.read() == fb.read(), msg

    def test_quantization_summary(self):
        """ADC scenarios report quantization-error statistics."""

        tmpdir = tempfile.mkdtemp()
        try:
            scenario = scenarios.load_scenario("quantization", {"duration": 200.0})
            scenarios.run_scenario(scenario, tmpdir)
            with open(os.path.join(tmpdir, "quantization", "summary.json")) as fl:
                summary = json.load(fl)
        finally:
            shutil.rmtree(tmpdir)

        stats = summary["quantization_error"]
        msg = "Quantization-error statistics incorrect: {}".format(stats)
        assert max(abs(stats["min"]), abs(stats["max"])) <= 0.5 * 5.0 / 1023 + 1e-12, msg


class TestAcceptance(unittest.TestCase):
    """Scenario verdicts on the packaged fixtures; sweep scenarios are cut
    to two hours."""

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _run(self, name, **config):
        result = scenarios.run_scenario(scenarios.load_scenario(name, config), self.tmpdir)

        msg = "scenario {} failed: {}".format(name, [c.detail for c in result.checks if not c.passed])
        assert result.checks and result.passed, msg
        return result

    def test_ideal(self):
        """Ideal conditions: proposed post-convergence RMSE below 1 %."""
        self._run("ideal")

    def test_flat_zone(self):
        """Flat zone from a 100 % guess: proposed converges 3x faster than the UKF."""

        result = self._run("flat_zone", duration=7200.0)
        msg = "Proposed convergence time {}".format(result.metrics["proposed"].convergence_time)
        assert result.metrics["proposed"].convergence_time < 300.0, msg

    def test_current_bias(self):
        """Current bias: proposed below 1/5 of Coulomb counting and 1/2 of the UKF."""
        self._run("current_bias", duration=7200.0)

    def test_map_mismatch(self):
        """Map mismatch: proposed below 1/2 of the UKF."""
        self._run("map_mismatch", duration=7200.0)

    def test_constant_segment(self):
        """The fusion gain vanishes inside the constant segment."""
        self._run("constant_segment")
