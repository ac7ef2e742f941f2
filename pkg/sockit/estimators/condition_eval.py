# condition_eval.py
"""Confidence of the map-inverted SOC.

The sensitivity of the filtered terminal voltage to the parameters is the
regressor matrix itself (the model is linear in theta). The Fisher
information ``F = S^T S / sigma^2 + eps I`` gives the Cramer-Rao bound
``[F^-1]_11`` on the OCV estimate, which is mapped to SOC through the
squared inverse slope of the OCV map.
"""

import collections

import numpy as np

from sockit import constants as const
from sockit.estimators import utils
from sockit.estimators.param_estimation import WindowNotFullError


class ConditionConfig(object):
    """Noise and regularization settings.

    :param sigma_vt: terminal-voltage noise std [V]
    :param epsilon: Tikhonov ridge [-]
    :param cov_ceiling: maximum reported SOC covariance [fraction^2]
    """

    def __init__(self, sigma_vt=const.sigma_vt, epsilon=const.epsilon, cov_ceiling=const.cov_soc_ceiling):
        for name, value in [("sigma_vt", sigma_vt), ("epsilon", epsilon), ("cov_ceiling", cov_ceiling)]:
            if not np.isfinite(value) or value <= 0:
                raise ValueError("ConditionConfig: {} must be positive, got {}.".format(name, value))

        self.sigma_vt = float(sigma_vt)
        self.epsilon = float(epsilon)
        self.cov_ceiling = float(cov_ceiling)


ConditionReport = collections.namedtuple("ConditionReport", ["cov_ocv", "slope", "cov_soc"])


def sensitivity_matrix(window):
    """N x 6 sensitivity of V_T to theta over a full window (equal to the regressors)."""

    if not window.full:
        msg = "Regression window holds {} of {} rows.".format(window.n_filled, window.capacity)
        raise WindowNotFullError(msg)

    return window.design_matrix()


def fisher(S, cfg):
    """Regularized Fisher information ``S^T S / sigma^2 + eps I``."""
    return utils.ridge(np.dot(S.T, S) / cfg.sigma_vt**2, cfg.epsilon)


def cov_ocv(F, floor=const.epsilon):
    """Cramer-Rao OCV variance ``[F^-1]_11`` [V^2]."""
    return utils.first_inverse_element(F, floor)


def scale_covariance(cov, slope, ceiling=None):
    """``slope^2 cov``, optionally capped at ``ceiling``."""

    ret = slope**2 * cov
    return ret if ceiling is None else min(ret, ceiling)


def inflate_covariance(cov, model_rms):
    """Add the window's unexplained voltage variance ``model_rms^2`` to the
    Cramer-Rao OCV variance [V^2]. A window whose residual is far above the
    sensor noise is down-weighted accordingly."""

    if not np.isfinite(model_rms):
        return np.inf
    return cov + model_rms**2


def cov_soc(cov_ocv, h, soc_prev, ocv_map, cfg):
    """SOC covariance of the map-inverted measurement.

    :param cov_ocv: Cramer-Rao OCV variance [V^2]
    :param h: hysteresis factor
    :param soc_prev: previous fused SOC estimate
    :param ocv_map: :class:`~sockit.estimators.ocv_map.OcvMap`
    :param cfg: :class:`ConditionConfig`

    :return: :class:`ConditionReport`
    """

    slope = ocv_map.inv_slope(h, soc_prev)
    return ConditionReport(cov_ocv, slope, scale_covariance(cov_ocv, slope, cfg.cov_ceiling))
