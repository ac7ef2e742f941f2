# scenarios.py
"""Scenario harness: plant -> error injection -> {proposed pipeline, UKF,
Coulomb counting} -> metrics and trace files.

Each scenario writes into ``<outdir>/<name>/``:

* ``truth.csv``, ``telemetry.csv``
* ``estimates_proposed.csv``, ``estimates_ukf.csv``, ``estimates_coulomb.csv``
* ``metrics.csv`` (one row per estimator) and ``summary.json``
* ``timing.json`` (wall-clock runtime per step, the only output that is
  not reproducible byte for byte)

Convergence time is the first time the absolute SOC error drops below
10 % and stays there for 60 consecutive seconds; post-convergence
metrics use the samples from that time on.
"""

import collections
import copy
import csv
import json
import logging
import os
import time

import numpy as np

import sockit
from sockit import cell_sim
from sockit import constants as const
from sockit.estimators.fusion import CoulombCounter
from sockit.estimators.ocv_map import synthetic_map
from sockit.estimators.pipeline import ConfigError, Pipeline, PipelineConfig
from sockit.estimators.ukf_benchmark import UkfEstimator, UkfState
from sockit.telemetry import write_csv, write_records

logger = logging.getLogger(__name__)

ESTIMATORS = ["proposed", "ukf", "coulomb"]

METRIC_FIELDS = ["rmse_overall", "rmse_post_convergence", "max_abs_error_post_convergence", "convergence_time"]

SCENARIO_KEYS = [
    "description",
    "profile",
    "duration",
    "soc0",
    "soc_guess",
    "h0",
    "plant_map",
    "errors",
    "pipeline",
    "ukf",
    "seed",
    "thresholds",
]

THRESHOLD_KINDS = ["rmse_post_convergence", "rmse_ratio", "convergence_speedup", "segment_gain_median"]

MetricsReport = collections.namedtuple("MetricsReport", ["estimator"] + METRIC_FIELDS + ["runtime_per_step"])

ThresholdCheck = collections.namedtuple("ThresholdCheck", ["name", "passed", "detail"])

ScenarioResult = collections.namedtuple("ScenarioResult", ["scenario", "metrics", "checks", "passed"])


def _load_defaults():
    dfile = sockit.__path__[0] + "/datafiles/scenarios.json"
    with open(dfile, "r") as fl:
        return json.load(fl)


SCENARIO_DEFAULTS = _load_defaults()

SCENARIO_NAMES = list(SCENARIO_DEFAULTS)


class Scenario(object):
    """One stress scenario; fields mirror the entries of ``scenarios.json``."""

    def __init__(self, name, **fields):
        if name not in SCENARIO_NAMES:
            raise ConfigError("scenario: unknown name '{}' (expected one of {}).".format(name, SCENARIO_NAMES))

        unknown = sorted(set(fields) - set(SCENARIO_KEYS))
        if unknown:
            raise ConfigError("scenario {}: unknown field(s) {}.".format(name, ", ".join(unknown)))

        self.name = name
        for key in SCENARIO_KEYS:
            setattr(self, key, copy.deepcopy(fields.get(key, SCENARIO_DEFAULTS[name].get(key))))

        self.validate()

    def validate(self):
        if not isinstance(self.duration, (int, float)) or not self.duration > 0:
            raise ConfigError("duration: must be positive, got {!r}.".format(self.duration))
        for key in ["soc0", "soc_guess"]:
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError("{}: must lie in [0, 1], got {!r}.".format(key, getattr(self, key)))
        if not -1.0 <= self.h0 <= 1.0:
            raise ConfigError("h0: must lie in [-1, 1], got {!r}.".format(self.h0))
        if self.plant_map not in ["nominal", "mismatch"]:
            raise ConfigError("plant_map: must be 'nominal' or 'mismatch', got {!r}.".format(self.plant_map))
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: must be a non-negative integer, got {!r}.".format(self.seed))
        if "kind" not in self.profile:
            raise ConfigError("profile: missing 'kind'.")
        bad = sorted(set(self.thresholds) - set(THRESHOLD_KINDS))
        if bad:
            raise ConfigError("thresholds: unknown check(s) {}.".format(", ".join(bad)))

    def pipeline_config(self):
        d = dict(self.pipeline)
        d.setdefault("soc0", self.soc_guess)
        try:
            return PipelineConfig.from_dict(d)
        except ConfigError as err:
            raise ConfigError("pipeline.{}".format(err))

    def ukf_state(self):
        d = dict(self.ukf)
        unknown = sorted(set(d) - {"q", "r", "p0", "alpha", "beta", "kappa"})
        if unknown:
            raise ConfigError("ukf: unknown field(s) {}.".format(", ".join(unknown)))

        kwargs = {key: d[key] for key in ["r", "alpha", "beta", "kappa"] if key in d}
        if "q" in d:
            kwargs["q"] = np.diag(d["q"])
        p0 = np.diag(d["p0"]) if "p0" in d else const.ukf_p0
        try:
            return UkfState(x=(self.soc_guess, 0.0, 0.0), p=p0, **kwargs)
        except ValueError as err:
            raise ConfigError("ukf: {}".format(err))

    def plant_params(self):
        if self.plant_map == "mismatch":
            return cell_sim.PlantParams(
                ocv_map=synthetic_map(offset=const.mismatch_offset, soc_warp=const.mismatch_soc_warp)
            )
        return cell_sim.PlantParams()

    def segment(self):
        """``(start, stop)`` sample indices of the constant segment, or None."""

        if self.profile["kind"] != "constant_segment":
            return None

        n = int(round(self.duration / const.Ts))
        length = int(round(self.profile.get("segment_duration", const.segment_duration) / const.Ts))
        start = self.profile.get("segment_start")
        start = (n - length) // 2 if start is None else int(round(start / const.Ts))
        return start, start + length


def load_scenario(name, config=None, seed=None):
    """Scenario defaults merged with a user config dict.

    Nested dicts (``profile``, ``errors``, ``pipeline``, ``ukf``,
    ``thresholds``) are updated key by key; other keys are replaced.
    """

    if name not in SCENARIO_DEFAULTS:
        raise ConfigError("scenario: unknown name '{}' (expected one of {}).".format(name, SCENARIO_NAMES))

    fields = copy.deepcopy(SCENARIO_DEFAULTS[name])
    for key, value in (config or {}).items():
        if isinstance(fields.get(key), dict) and isinstance(value, dict):
            fields[key].update(value)
        else:
            fields[key] = value

    if seed is not None:
        fields["seed"] = seed

    return Scenario(name, **fields)


def load_config(fname):
    """Read a JSON config file into a dict."""

    with open(fname, "r", encoding="utf-8") as fl:
        try:
            ret = json.load(fl)
        except json.JSONDecodeError as err:
            raise ConfigError("{}: invalid JSON: {}".format(fname, err))

    if not isinstance(ret, dict):
        raise ConfigError("{}: config must be a JSON object.".format(fname))

    return ret


def convergence_index(err, dt=const.Ts, threshold=const.convergence_threshold, sustain=const.convergence_sustain):
    """First index from which ``|err| < threshold`` holds for ``sustain`` s, or None."""

    m = int(np.ceil(sustain / dt))
    ok = (np.abs(err) < threshold).astype(int)
    if len(ok) < m:
        return None

    runs = np.convolve(ok, np.ones(m, dtype=int), mode="valid")
    hits = np.nonzero(runs == m)[0]

    return int(hits[0]) if len(hits) else None


def compute_metrics(estimator, t, soc_est, soc_true, runtime_per_step=0.0):
    """:class:`MetricsReport` of one estimate trace; post-convergence
    metrics and the convergence time are ``inf`` if it never converges."""

    err = np.asarray(soc_est) - np.asarray(soc_true)
    dt = t[1] - t[0] if len(t) > 1 else const.Ts
    k = convergence_index(err, dt)

    if k is None:
        rmse_post, max_post, t_conv = np.inf, np.inf, np.inf
    else:
        rmse_post = np.sqrt(np.mean(err[k:] ** 2))
        max_post = np.max(np.abs(err[k:]))
        t_conv = t[k] - t[0]

    return MetricsReport(estimator, np.sqrt(np.mean(err**2)), rmse_post, max_post, t_conv, runtime_per_step)


def _timed(fn, series):
    tstart = time.perf_counter()
    ret = fn(series)
    return ret, (time.perf_counter() - tstart) / max(len(series), 1)


def run_coulomb(series, soc_guess, c_p=const.Cp):
    """Pure Coulomb counting from ``soc_guess`` with the measured current."""

    cc = CoulombCounter(soc_est=soc_guess, c_p=c_p, dt=series.dt or const.Ts)
    ret = np.empty(len(series))
    i_prev = 0.0
    for k, sample in enumerate(series):
        ret[k] = cc.step(i_prev)
        i_prev = sample.i

    return ret


def check_thresholds(scenario, metrics, gains=None):
    """Evaluate the scenario's threshold checks.

    :param metrics: dict estimator -> :class:`MetricsReport`
    :param gains: fusion gains of the proposed pipeline
    :return: list of :class:`ThresholdCheck`
    """

    proposed = metrics["proposed"]
    checks = []

    for est, limit in sorted(scenario.thresholds.get("rmse_post_convergence", {}).items()):
        value = metrics[est].rmse_post_convergence
        detail = "{} post-convergence RMSE {:.5f} < {}".format(est, value, limit)
        checks.append(ThresholdCheck("rmse_post_convergence:" + est, bool(value < limit), detail))

    for other, ratio in sorted(scenario.thresholds.get("rmse_ratio", {}).items()):
        value, ref = proposed.rmse_post_convergence, metrics[other].rmse_overall
        detail = "proposed post-convergence RMSE {:.5f} < {} x {} RMSE {:.5f}".format(value, ratio, other, ref)
        checks.append(ThresholdCheck("rmse_ratio:" + other, bool(value < ratio * ref), detail))

    for other, factor in sorted(scenario.thresholds.get("convergence_speedup", {}).items()):
        value, ref = proposed.convergence_time, metrics[other].convergence_time
        passed = bool(np.isfinite(value) and factor * value <= ref)
        detail = "{} x proposed convergence {:.1f} s <= {} convergence {:.1f} s".format(factor, value, other, ref)
        checks.append(ThresholdCheck("convergence_speedup:" + other, passed, detail))

    if "segment_gain_median" in scenario.thresholds:
        limit = scenario.thresholds["segment_gain_median"]
        start, stop = scenario.segment()
        value = float(np.median(gains[start:stop]))
        detail = "median fusion gain in segment {:.3g} < {}".format(value, limit)
        checks.append(ThresholdCheck("segment_gain_median", bool(value < limit), detail))

    return checks


def run_scenario(scenario, outdir):
    """Run all estimators on one scenario and write its output files.

    :return: :class:`ScenarioResult`
    """

    sdir = os.path.join(outdir, scenario.name)
    os.makedirs(sdir, exist_ok=True)

    msg = "scenario {}: {} s, seed {}.".format(scenario.name, scenario.duration, scenario.seed)
    logger.info(msg)

    pcfg = scenario.pipeline_config()
    ukf_state = scenario.ukf_state()

    profile_opts = {key: value for key, value in scenario.profile.items() if key != "kind"}
    profile = cell_sim.gen_profile(scenario.profile["kind"], scenario.duration, seed=scenario.seed, **profile_opts)
    trace = cell_sim.simulate(profile, scenario.plant_params(), soc0=scenario.soc0, h0=scenario.h0)
    series, qerr = cell_sim.apply_errors(
        trace, cell_sim.ErrorSpec.from_dict(scenario.errors), seed=scenario.seed, full_output=True
    )

    pipeline = Pipeline(pcfg)
    ukf = UkfEstimator(pipeline.ocv_map, state=ukf_state)

    records, rt_prop = _timed(pipeline.run, series)
    ukf_records, rt_ukf = _timed(ukf.run, series)
    cc_soc, rt_cc = _timed(lambda s: run_coulomb(s, scenario.soc_guess), series)

    estimates = {
        "proposed": np.array([r.soc_est for r in records]),
        "ukf": np.array([r.soc_est for r in ukf_records]),
        "coulomb": cc_soc,
    }
    runtimes = {"proposed": rt_prop, "ukf": rt_ukf, "coulomb": rt_cc}
    metrics = {
        est: compute_metrics(est, series.t, estimates[est], trace.soc_true, runtimes[est]) for est in ESTIMATORS
    }

    gains = np.array([r.gain for r in records])
    checks = check_thresholds(scenario, metrics, gains)
    passed = all(c.passed for c in checks)

    trace.to_csv(os.path.join(sdir, "truth.csv"))
    series.to_csv(os.path.join(sdir, "telemetry.csv"))
    write_records(os.path.join(sdir, "estimates_proposed.csv"), records)
    write_records(os.path.join(sdir, "estimates_ukf.csv"), ukf_records)
    write_csv(os.path.join(sdir, "estimates_coulomb.csv"), ["t", "soc_est"], [series.t, cc_soc])
    write_metrics(os.path.join(sdir, "metrics.csv"), scenario.name, metrics)

    summary = {
        "scenario": scenario.name,
        "description": scenario.description,
        "seed": scenario.seed,
        "samples": len(series),
        "truncated": trace.truncated,
        "pipeline": pcfg.to_dict(),
        "metrics": {est: {f: float(getattr(metrics[est], f)) for f in METRIC_FIELDS} for est in ESTIMATORS},
        "checks": [c._asdict() for c in checks],
        "passed": passed,
    }
    if scenario.errors.get("adc_bits") is not None:
        summary["quantization_error"] = {
            "min": float(np.min(qerr)),
            "max": float(np.max(qerr)),
            "mean": float(np.mean(qerr)),
            "std": float(np.std(qerr)),
        }

    with open(os.path.join(sdir, "summary.json"), "w", encoding="utf-8") as fl:
        json.dump(summary, fl, indent=2, sort_keys=True)
    with open(os.path.join(sdir, "timing.json"), "w", encoding="utf-8") as fl:
        json.dump({"runtime_per_step": runtimes}, fl, indent=2, sort_keys=True)

    for c in checks:
        msg = "scenario {}: {} {}.".format(scenario.name, "PASS" if c.passed else "FAIL", c.detail)
        if c.passed:
            logger.info(msg)
        else:
            logger.warning(msg)

    return ScenarioResult(scenario.name, metrics, checks, passed)


def write_metrics(fname, scenario, metrics):
    """One row per estimator: ``scenario,estimator,<metrics>``."""

    with open(fname, "w", encoding="utf-8", newline="") as fl:
        writer = csv.writer(fl, lineterminator="\n")
        writer.writerow(["scenario", "estimator"] + METRIC_FIELDS)
        for est in ESTIMATORS:
            m = metrics[est]
            writer.writerow([scenario, est] + ["{:.10g}".format(getattr(m, f)) for f in METRIC_FIELDS])


def read_metrics(fname):
    """Rows of a metrics CSV as dicts (metric values as floats)."""

    with open(fname, "r", encoding="utf-8", newline="") as fl:
        reader = csv.DictReader(fl)
        missing = [c for c in ["scenario", "estimator"] + METRIC_FIELDS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError("{}: missing column(s) {}.".format(fname, missing))
        return [dict(row, **{f: float(row[f]) for f in METRIC_FIELDS}) for row in reader]


def find_metrics(indir):
    """Metrics files of every scenario directory under ``indir``."""

    if not os.path.isdir(indir):
        raise ValueError("report: input directory {} not found.".format(indir))

    return [
        os.path.join(indir, d, "metrics.csv")
        for d in sorted(os.listdir(indir))
        if os.path.isfile(os.path.join(indir, d, "metrics.csv"))
    ]


def _row_key(row):
    scen = SCENARIO_NAMES.index(row["scenario"]) if row["scenario"] in SCENARIO_NAMES else len(SCENARIO_NAMES)
    est = ESTIMATORS.index(row["estimator"]) if row["estimator"] in ESTIMATORS else len(ESTIMATORS)
    return scen, row["scenario"], est, row["estimator"]


def report(files, out=None):
    """Collect metrics files into one table.

    :param files: metrics CSV paths
    :param out: optional path of the combined CSV
    :return: text table, one row per (scenario, estimator)
    """

    if not files:
        raise ValueError("report: no metrics files given.")

    missing = [f for f in files if not os.path.isfile(f)]
    if missing:
        raise ValueError("report: missing metrics file(s): {}.".format(", ".join(missing)))

    rows = sorted((row for f in files for row in read_metrics(f)), key=_row_key)

    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fl:
            writer = csv.writer(fl, lineterminator="\n")
            writer.writerow(["scenario", "estimator"] + METRIC_FIELDS)
            for row in rows:
                writer.writerow([row["scenario"], row["estimator"]] + ["{:.10g}".format(row[f]) for f in METRIC_FIELDS])

    header = "{:<18s}{:<10s}".format("scenario", "estimator") + "".join("{:>32s}".format(f) for f in METRIC_FIELDS)
    lines = [header]
    for row in rows:
        line = "{:<18s}{:<10s}".format(row["scenario"], row["estimator"])
        line += "".join("{:>32.6g}".format(row[f]) for f in METRIC_FIELDS)
        lines.append(line)

    return "\n".join(lines) + "\n"
