# signal_filter.py
"""Second-order filter bank producing a filtered signal together with its
first and second derivatives.

The continuous-time filters

    G0(s) = l0 / (s^2 + l1 s + l0),  G1(s) = s G0(s),  G2(s) = s^2 G0(s)

are discretized with the backward-difference substitution
``s <- (z - 1) / (Ts z)`` and realized in controllable canonical form.
With that substitution ``G1(z)`` and ``G2(z)`` are exactly the discrete
derivative operator ``(1 - z^-1) / Ts`` applied once and twice to
``G0(z)``, so a discrete ramp is differentiated without error.
"""

import numpy as np
import scipy.signal

from sockit import constants as const


class FilterDesign(object):
    """Coefficients of the second-order filter ``l0 / (s^2 + l1 s + l0)``.

    :param lambda0: filter coefficient lambda_0 [1/s^2]
    :param lambda1: filter coefficient lambda_1 [1/s]
    :param ts: sample period [s]
    """

    def __init__(self, lambda0=const.lambda0, lambda1=const.lambda1, ts=const.Ts):
        for name, value in [("lambda0", lambda0), ("lambda1", lambda1), ("ts", ts)]:
            if not np.isfinite(value) or value <= 0:
                raise ValueError("FilterDesign: {} must be positive and finite, got {}.".format(name, value))

        self.lambda0 = float(lambda0)
        self.lambda1 = float(lambda1)
        self.ts = float(ts)

    @classmethod
    def from_bandwidth(cls, omega=const.filter_omega, zeta=const.filter_zeta, ts=const.Ts):
        """Build a design from natural frequency ``omega`` [rad/s] and damping ``zeta``."""
        return cls(lambda0=omega**2, lambda1=2.0 * zeta * omega, ts=ts)

    @property
    def poles(self):
        """Continuous-time poles of ``s^2 + l1 s + l0``."""
        return np.roots([1.0, self.lambda1, self.lambda0])

    def transfer_functions(self):
        """Return ``(num, den)`` pairs in descending powers of z for G0, G1, G2."""

        l0, l1, ts = self.lambda0, self.lambda1, self.ts

        # denominator of every G_i after multiplying through by Ts^2 z^2
        den = np.array([l0 * ts**2 + l1 * ts + 1.0, -(l1 * ts + 2.0), 1.0])

        num0 = np.array([l0 * ts**2, 0.0, 0.0])
        num1 = np.array([l0 * ts, -l0 * ts, 0.0])
        num2 = np.array([l0, -2.0 * l0, l0])

        return [(num0, den), (num1, den), (num2, den)]

    def __repr__(self):
        return "FilterDesign(lambda0={}, lambda1={}, ts={})".format(self.lambda0, self.lambda1, self.ts)


class DiscreteSiso(object):
    """Single-input single-output discrete state-space filter.

    ``y[k] = c x[k] + d u[k]``, ``x[k+1] = a x[k] + b u[k]``.
    """

    def __init__(self, a, b, c, d):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        self.c = np.asarray(c, dtype=float).ravel()
        self.d = float(np.asarray(d).ravel()[0])
        self.state = np.zeros(self.a.shape[0])

    @classmethod
    def from_tf(cls, num, den):
        a, b, c, d = scipy.signal.tf2ss(num, den)
        return cls(a, b, c, d)

    @property
    def spectral_radius(self):
        return np.max(np.abs(np.linalg.eigvals(self.a)))

    @property
    def dc_gain(self):
        """Gain at ``z = 1``: ``c (I - a)^-1 b + d``."""
        return np.dot(self.c, np.linalg.solve(np.eye(len(self.b)) - self.a, self.b)) + self.d

    def step(self, u):
        y = np.dot(self.c, self.state) + self.d * u
        self.state = np.dot(self.a, self.state) + self.b * u
        return y

    def reset(self, u=0.0):
        """Place the state at the fixed point reached under constant input ``u``."""
        self.state = np.linalg.solve(np.eye(len(self.b)) - self.a, self.b * u)


class FilterBank(object):
    """The three realizations G0, G1, G2 applied to one input signal."""

    def __init__(self, design, g0, g1, g2):
        self.design = design
        self.g0, self.g1, self.g2 = g0, g1, g2

    @property
    def realizations(self):
        return [self.g0, self.g1, self.g2]

    def step(self, u):
        """Advance all three filters with raw sample ``u``.

        :return: (y0, y1, y2): filtered value, first and second derivative
        """

        if not np.isfinite(u):
            raise ValueError("FilterBank: non-finite input {}.".format(u))

        return self.g0.step(u), self.g1.step(u), self.g2.step(u)

    def reset(self, steady_value=0.0):
        """Warm-start: a constant input equal to ``steady_value`` yields
        ``(steady_value, 0, 0)`` from the next step on."""

        if not np.isfinite(steady_value):
            raise ValueError("FilterBank: non-finite steady value {}.".format(steady_value))

        for g in self.realizations:
            g.reset(steady_value)


def design_filter(design):
    """Discretize G0, G1, G2 of ``design`` into a zero-initialized :class:`FilterBank`."""

    g0, g1, g2 = [DiscreteSiso.from_tf(num, den) for num, den in design.transfer_functions()]
    return FilterBank(design, g0, g1, g2)
