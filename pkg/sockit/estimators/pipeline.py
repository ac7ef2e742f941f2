# pipeline.py
"""Adaptive SOC estimation pipeline.

Each telemetry sample flows through the four stages in a fixed order:

1. parameter estimation: filter V_T, I and the cumulative charge, push
   the regression row and, once the window is full, solve for theta
   (OCV_est = theta.ocv) and for the charge that OCV_est belongs to;
2. OCV-H inversion: update H with the previous current, invert the map
   at (OCV_est, H) and move the result to the current sample by the
   charge drawn since the window's reference;
3. condition evaluation: Cramer-Rao OCV variance plus the window's
   unexplained residual variance, scaled by the squared inverse map
   slope at the previous fused SOC;
4. fusion: Coulomb-counting prediction and scalar Kalman update.

Before the window fills, or when the fit is not finite, the measurement
is gated: the record reports the covariance ceiling and the fusion step
keeps the Coulomb-counting prediction (gain 0).
"""

import logging
import os

import numpy as np

from sockit import constants as const
from sockit.estimators import condition_eval, ocv_map
from sockit.estimators.fusion import FusionState
from sockit.estimators.hysteresis import HysteresisState
from sockit.estimators.param_estimation import RegressorRow, RegressorWindow, estimate
from sockit.estimators.signal_filter import FilterDesign, design_filter
from sockit.telemetry import EstimateRecord, check_sample

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for invalid configuration; the message names the field."""


class PipelineConfig(object):
    """Settings of one :class:`Pipeline`.

    ``ocv_map`` is an :class:`~sockit.estimators.ocv_map.OcvMap`, a path to
    a map CSV, or ``"synthetic"`` for the packaged fixture map. ``v_i``
    defaults to the process noise implied by ``sigma_i``.
    """

    defaults = {
        "lambda0": const.lambda0,
        "lambda1": const.lambda1,
        "ts": const.Ts,
        "window": const.window,
        "stride": 1,
        "hysteresis_rate": const.hysteresis_rate,
        "h0": 0.0,
        "ocv_map": "synthetic",
        "inv_slope_ceiling": const.inv_slope_ceiling,
        "sigma_vt": const.sigma_vt,
        "epsilon": const.epsilon,
        "cov_ceiling": const.cov_soc_ceiling,
        "capacity": const.Cp,
        "sigma_i": const.sigma_i,
        "v_i": None,
        "soc0": const.soc_guess,
        "p0": const.p0,
    }

    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(self.defaults))
        if unknown:
            raise ConfigError("unknown pipeline config field(s): {}.".format(", ".join(unknown)))

        for key, value in self.defaults.items():
            setattr(self, key, kwargs.get(key, value))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_dict(self):
        ret = {key: getattr(self, key) for key in self.defaults}
        if isinstance(ret["ocv_map"], ocv_map.OcvMap):
            ret["ocv_map"] = "<OcvMap>"
        return ret

    def replace(self, **kwargs):
        d = {key: getattr(self, key) for key in self.defaults}
        d.update(kwargs)
        return PipelineConfig(**d)

    def validate(self):
        """Check every field; raises :class:`ConfigError` naming the first bad one."""

        positive = [
            "lambda0",
            "lambda1",
            "ts",
            "hysteresis_rate",
            "inv_slope_ceiling",
            "sigma_vt",
            "epsilon",
            "cov_ceiling",
            "capacity",
            "sigma_i",
        ]
        for key in positive:
            value = getattr(self, key)
            if not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
                raise ConfigError("{}: must be a positive finite number, got {!r}.".format(key, value))

        for key in ["window", "stride"]:
            value = getattr(self, key)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError("{}: must be a positive integer, got {!r}.".format(key, value))

        if not -1.0 <= self.h0 <= 1.0:
            raise ConfigError("h0: must lie in [-1, 1], got {!r}.".format(self.h0))
        if not 0.0 <= self.soc0 <= 1.0:
            raise ConfigError("soc0: must lie in [0, 1], got {!r}.".format(self.soc0))
        if not self.p0 >= 0:
            raise ConfigError("p0: must be non-negative, got {!r}.".format(self.p0))
        if self.v_i is not None and not self.v_i > 0:
            raise ConfigError("v_i: must be positive, got {!r}.".format(self.v_i))

        if self.ocv_map is None:
            raise ConfigError("ocv_map: missing.")
        if isinstance(self.ocv_map, str) and self.ocv_map != "synthetic" and not os.path.isfile(self.ocv_map):
            raise ConfigError("ocv_map: file {} not found.".format(self.ocv_map))
        if not isinstance(self.ocv_map, (str, ocv_map.OcvMap)):
            raise ConfigError("ocv_map: expected an OcvMap or a path, got {}.".format(type(self.ocv_map).__name__))

    def get_map(self):
        """Resolve ``ocv_map`` to an :class:`~sockit.estimators.ocv_map.OcvMap`."""

        if isinstance(self.ocv_map, ocv_map.OcvMap):
            return self.ocv_map

        try:
            if self.ocv_map == "synthetic":
                return ocv_map.default_map(inv_slope_ceiling=self.inv_slope_ceiling)
            return ocv_map.load_map(self.ocv_map, inv_slope_ceiling=self.inv_slope_ceiling)
        except ocv_map.MapError as err:
            raise ConfigError("ocv_map: {}".format(err))


class Pipeline(object):
    """One estimator instance per cell stream. The OCV map may be shared
    read-only between instances; everything else is owned."""

    def __init__(self, config=None):
        self.config = PipelineConfig() if config is None else config
        self.config.validate()
        cfg = self.config

        design = FilterDesign(cfg.lambda0, cfg.lambda1, cfg.ts)
        self.vbank = design_filter(design)
        self.ibank = design_filter(design)
        self.qbank = design_filter(design)

        self.window = RegressorWindow(cfg.window)
        self.hysteresis = HysteresisState(h=cfg.h0, c_rate=cfg.hysteresis_rate)
        self.ocv_map = cfg.get_map()
        self.condition = condition_eval.ConditionConfig(cfg.sigma_vt, cfg.epsilon, cfg.cov_ceiling)
        self.fusion = FusionState(
            soc_est=cfg.soc0, p_m=cfg.p0, v_i=cfg.v_i, c_p=cfg.capacity, dt=cfg.ts, sigma_i=cfg.sigma_i
        )

        self._t_prev = None
        self._i_prev = 0.0
        self._charge = 0.0
        self._theta = None
        self._fit = None
        self._cov_ocv = np.inf
        self._condition = np.nan
        self._since_solve = 0

    @property
    def theta(self):
        """Most recent identified :class:`~sockit.estimators.param_estimation.ParameterVector`."""
        return self._theta

    @property
    def fit(self):
        """:class:`~sockit.estimators.param_estimation.WindowFit` of the most recent solve."""
        return self._fit

    def _solve(self):
        theta, cond, fit = estimate(self.window, self.condition.epsilon, full_output=True)

        if not np.all(np.isfinite(theta)) or not np.isfinite(fit.reference):
            msg = "non-finite parameter estimate {}; measurement gated.".format(theta)
            logger.warning(msg)
            return theta, fit, np.inf, cond

        S = condition_eval.sensitivity_matrix(self.window)
        try:
            cov = condition_eval.cov_ocv(condition_eval.fisher(S, self.condition), self.condition.epsilon)
        except np.linalg.LinAlgError as err:
            msg = "Cramer-Rao evaluation failed ({}); measurement gated.".format(err)
            logger.warning(msg)
            cov = np.inf

        return theta, fit, condition_eval.inflate_covariance(cov, fit.model_rms), cond

    def step(self, sample):
        """Process one :class:`~sockit.telemetry.TelemetrySample` and return
        its :class:`~sockit.telemetry.EstimateRecord`."""

        check_sample(sample, self._t_prev, self.config.ts)

        if self._t_prev is None:
            self.vbank.reset(sample.v_t)
            self.ibank.reset(sample.i)
            self.qbank.reset(0.0)

        # charge drawn before this sample
        self._charge += self._i_prev * self.config.ts

        v = self.vbank.step(sample.v_t)
        i = self.ibank.step(sample.i)
        q = self.qbank.step(self._charge)
        self.window.push_row(RegressorRow.from_filtered(v, i, q[0]))

        warmup = not self.window.full
        if not warmup:
            self._since_solve += 1
            if self._theta is None or self._since_solve >= self.config.stride:
                self._theta, self._fit, self._cov_ocv, self._condition = self._solve()
                self._since_solve = 0

        h = self.hysteresis.update_h(self._i_prev)

        gated = warmup or not np.isfinite(self._cov_ocv)
        if gated:
            ocv_est = v[0]
            soc_meas = self.ocv_map.invert_soc(ocv_est, h)
        else:
            ocv_est = self._theta.ocv
            # SOC change between the window's effective sample and now
            shift = (self._charge - self._fit.reference) / self.config.capacity
            soc_meas = float(np.clip(self.ocv_map.invert_soc(ocv_est, h) - shift, 0.0, 1.0))

        soc_cc, p_p = self.fusion.predict(self._i_prev)

        if gated:
            cov = self.condition.cov_ceiling
            soc_est, _, gain = self.fusion.hold(soc_cc, p_p)
        else:
            report = condition_eval.cov_soc(self._cov_ocv, h, self.fusion.soc_est, self.ocv_map, self.condition)
            cov = report.cov_soc
            soc_est, _, gain = self.fusion.update(soc_cc, p_p, soc_meas, cov)

        self._t_prev = sample.t
        self._i_prev = sample.i

        return EstimateRecord(
            t=sample.t,
            soc_est=soc_est,
            soc_ocv_h=soc_meas,
            cov_soc=cov,
            ocv_est=ocv_est,
            h=h,
            gain=gain,
            warmup=warmup,
            cov_ocv=self._cov_ocv if not warmup else np.inf,
            condition=self._condition,
        )

    def run(self, series):
        """Process a whole :class:`~sockit.telemetry.TelemetrySeries`."""
        return [self.step(sample) for sample in series]
