# param_estimation.py
"""Rolling regression window and batch least-squares identification of the
linear-in-parameters cell model

    V_T = OCV - a I'' - b I' - c I - d V_T'' - e V_T'

on filtered signals, with ``theta = [OCV, a, b, c, d, e]``.
"""

import collections

import numpy as np

from sockit import constants as const
from sockit.estimators import utils

NPARAMS = 6


class WindowNotFullError(RuntimeError):
    """Raised when a computation needs a full regression window."""


class RegressorRow(object):
    """One regression row: ``phi = [1, -I'', -I', -I, -V'', -V']`` and target ``V``.

    ``reference`` is an auxiliary per-row value fitted with the same
    regressors (the pipeline stores the filtered cumulative charge).
    """

    __slots__ = ("phi", "target", "reference")

    def __init__(self, phi, target, reference=0.0):
        phi = np.asarray(phi, dtype=float)

        if phi.shape != (NPARAMS,):
            raise ValueError("RegressorRow: phi must have {} entries, got shape {}.".format(NPARAMS, phi.shape))
        if phi[0] != 1.0:
            raise ValueError("RegressorRow: phi[0] must be exactly 1, got {}.".format(phi[0]))
        if not np.all(np.isfinite(phi)) or not np.isfinite(target) or not np.isfinite(reference):
            raise ValueError("RegressorRow: non-finite entries.")

        self.phi = phi
        self.target = float(target)
        self.reference = float(reference)

    @classmethod
    def from_filtered(cls, voltage, current, reference=0.0):
        """Build a row from filter-bank outputs.

        :param voltage: (V, V', V'') filtered terminal voltage and derivatives
        :param current: (I, I', I'') filtered current and derivatives
        :param reference: auxiliary value stored with the row
        """

        v0, v1, v2 = voltage
        i0, i1, i2 = current
        return cls(np.array([1.0, -i2, -i1, -i0, -v2, -v1]), v0, reference)


class RegressorWindow(object):
    """FIFO of the last ``capacity`` regression rows, kept in a ring buffer."""

    def __init__(self, capacity=const.window):
        if int(capacity) != capacity or capacity < 1:
            raise ValueError("RegressorWindow: capacity must be a positive integer, got {}.".format(capacity))

        self.capacity = int(capacity)
        self._phi = np.zeros((self.capacity, NPARAMS))
        self._target = np.zeros(self.capacity)
        self._reference = np.zeros(self.capacity)
        self._head = 0
        self.n_filled = 0

    @property
    def full(self):
        return self.n_filled == self.capacity

    def push_row(self, row):
        """Append ``row``, evicting the oldest row when full."""

        if not isinstance(row, RegressorRow):
            raise TypeError("RegressorWindow: expected a RegressorRow, got {}.".format(type(row).__name__))

        self._phi[self._head] = row.phi
        self._target[self._head] = row.target
        self._reference[self._head] = row.reference
        self._head = (self._head + 1) % self.capacity
        self.n_filled = min(self.n_filled + 1, self.capacity)

    def _order(self):
        start = (self._head - self.n_filled) % self.capacity
        return (start + np.arange(self.n_filled)) % self.capacity

    def design_matrix(self):
        """Return the n_filled x 6 stacked regressors, oldest first."""
        return self._phi[self._order()]

    def targets(self):
        """Return the n_filled targets, oldest first."""
        return self._target[self._order()]

    def references(self):
        return self._reference[self._order()]

    def clear(self):
        self._head = 0
        self.n_filled = 0


class ParameterVector(collections.namedtuple("ParameterVector", ["ocv", "a", "b", "c", "d", "e"])):
    """Identified parameters: ocv [V], a [ohm s^2], b [ohm s], c [ohm], d [s^2], e [s]."""

    __slots__ = ()

    def plausibility(self):
        """Physical plausibility flags (diagnostic only, never enforced)."""
        return {
            "c_positive": self.c > 0,
            "d_positive": self.d > 0,
            "e_positive": self.e > 0,
            "real_time_constants": self.e**2 >= 4 * self.d,
        }


WindowFit = collections.namedtuple("WindowFit", ["reference", "drift", "model_rms"])


def estimate(window, epsilon=const.epsilon, full_output=False):
    """Batch least squares over a full window.

    With ``full_output=True`` the row references are fitted with the same
    regressors and a :class:`WindowFit` is returned as well:

    * ``reference``: constant term of the reference fit, i.e. the
      reference value the fitted OCV belongs to;
    * ``drift``: coefficient of the voltage residual on the reference
      residual;
    * ``model_rms``: RMS of the voltage residual once that drift component
      is removed, with one degree of freedom per fitted coefficient.

    :param window: :class:`RegressorWindow`
    :param epsilon: damping of the equilibrated least-squares solve

    :return: theta: :class:`ParameterVector`
    :return: condition: condition number of the damped, equilibrated ``Phi^T Phi``
    """

    if not window.full:
        msg = "Regression window holds {} of {} rows.".format(window.n_filled, window.capacity)
        raise WindowNotFullError(msg)

    A = window.design_matrix()
    y = window.targets()

    if not full_output:
        x, cond = utils.ridge_solve(A, y, epsilon)
        return ParameterVector(*x), cond

    q = window.references()
    x, cond = utils.ridge_solve(A, np.column_stack([y, q]), epsilon)

    ry = y - np.dot(A, x[:, 0])
    rq = q - np.dot(A, x[:, 1])
    qq = np.dot(rq, rq)
    drift = np.dot(rq, ry) / qq if qq > 0 else 0.0

    dof = max(len(y) - NPARAMS - 1, 1)
    model_rms = np.sqrt(np.sum((ry - drift * rq) ** 2) / dof)

    return ParameterVector(*x[:, 0]), cond, WindowFit(x[0, 1], drift, model_rms)


def residual_rms(window, theta):
    """RMS of ``target - phi . theta`` over the filled rows."""

    res = window.targets() - np.dot(window.design_matrix(), np.asarray(theta))
    return np.sqrt(np.mean(res**2))
