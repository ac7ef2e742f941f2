# fusion.py
"""Scalar Kalman filter fusing Coulomb counting with the map-inverted SOC.

Positive current is discharge, so the Coulomb-counting prediction
subtracts ``I dt / C_p``.
"""

import numpy as np

from sockit import constants as const


def process_noise(sigma_i=const.sigma_i, dt=const.Ts, c_p=const.Cp):
    """Per-step SOC process noise ``(sigma_I dt / C_p)^2`` from current-sensor noise."""
    return (sigma_i * dt / c_p) ** 2


class CoulombCounter(object):
    """Open-loop SOC integration."""

    def __init__(self, soc_est=const.soc_guess, c_p=const.Cp, dt=const.Ts):
        if c_p <= 0 or dt <= 0:
            raise ValueError("CoulombCounter: c_p and dt must be positive.")

        self.soc_est = float(soc_est)
        self.c_p = float(c_p)
        self.dt = float(dt)

    def integrate(self, i_prev):
        return float(np.clip(self.soc_est - i_prev * self.dt / self.c_p, 0.0, 1.0))

    def step(self, i_prev):
        self.soc_est = self.integrate(i_prev)
        return self.soc_est


class FusionState(CoulombCounter):
    """Scalar Kalman state.

    :param soc_est: SOC estimate [fraction]
    :param p_m: posterior covariance [fraction^2]
    :param v_i: process noise per step [fraction^2]; defaults to
                :func:`process_noise` of ``sigma_i``
    :param c_p: capacity [A s]
    :param dt: step [s]
    """

    def __init__(
        self, soc_est=const.soc_guess, p_m=const.p0, v_i=None, c_p=const.Cp, dt=const.Ts, sigma_i=const.sigma_i
    ):
        super(FusionState, self).__init__(soc_est=soc_est, c_p=c_p, dt=dt)

        self.v_i = process_noise(sigma_i, dt, c_p) if v_i is None else float(v_i)
        self.p_m = float(p_m)

        if self.v_i <= 0 or self.p_m < 0:
            raise ValueError("FusionState: need v_i > 0 and p_m >= 0, got {} and {}.".format(self.v_i, self.p_m))

    def predict(self, i_prev):
        """Coulomb-counting prediction.

        :return: (soc_cc, p_p)
        """
        return self.integrate(i_prev), self.p_m + self.v_i

    def update(self, soc_cc, p_p, soc_meas, cov_meas):
        """Measurement update; stores and returns ``(soc_est, p_m, k)``."""

        if not cov_meas > 0:
            raise ValueError("FusionState: measurement covariance must be positive, got {}.".format(cov_meas))

        k = p_p / (p_p + cov_meas)

        self.soc_est = float(np.clip(soc_cc + k * (soc_meas - soc_cc), 0.0, 1.0))
        self.p_m = (1.0 - k) * p_p

        return self.soc_est, self.p_m, k

    def hold(self, soc_cc, p_p):
        """Accept the prediction without a measurement (gain 0)."""

        self.soc_est, self.p_m = soc_cc, p_p
        return self.soc_est, self.p_m, 0.0
