# hysteresis.py
"""Open-loop hysteresis factor recursion.

Positive current is discharge. Discharge drives H towards -1, charge
towards +1, and zero current leaves H unchanged.
"""

import numpy as np

from sockit import constants as const


def hysteresis_step(h, i_prev, c_rate):
    """One update ``H <- r H + (1 - r) sign(-I)``, ``r = exp(-|I/C|)``."""

    r = np.exp(-np.abs(i_prev / c_rate))
    return np.clip(r * h + (1.0 - r) * np.sign(-i_prev), -1.0, 1.0)


class HysteresisState(object):
    """Hysteresis factor ``h`` in [-1, 1] with rate parameter ``c_rate`` [A].

    ``c_rate`` acts per step at the configured sample period; changing the
    period rescales the effective rate.
    """

    def __init__(self, h=0.0, c_rate=const.hysteresis_rate):
        if not np.isfinite(c_rate) or c_rate <= 0:
            raise ValueError("HysteresisState: c_rate must be positive, got {}.".format(c_rate))
        if not -1.0 <= h <= 1.0:
            raise ValueError("HysteresisState: h must lie in [-1, 1], got {}.".format(h))

        self.h = float(h)
        self.c_rate = float(c_rate)

    def update_h(self, i_prev):
        """Advance with the previous step's current and return the new ``h``."""

        if not np.isfinite(i_prev):
            raise ValueError("HysteresisState: non-finite current {}.".format(i_prev))

        self.h = float(hysteresis_step(self.h, i_prev, self.c_rate))
        return self.h
