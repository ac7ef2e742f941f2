# ukf_benchmark.py
"""Unscented Kalman filter baseline on the 3-state 2RC model.

State ``x = [SOC, V1, V2]``; transition per step ``dt`` with current ``I``

    SOC <- SOC - I dt / C_p
    Vj  <- Vj exp(-dt / Rj Cj) + Rj (1 - exp(-dt / Rj Cj)) I

and output ``V_T = OCV(SOC) - R0 I - V1 - V2`` on a single, H-averaged
OCV curve, PCHIP-interpolated between the map knots. RC parameters come
from an SOC-indexed table interpolated at the current SOC mean.
"""

import collections
import logging

import numpy as np
import scipy.interpolate as si
import scipy.linalg as sl

import sockit
from sockit import constants as const
from sockit.estimators import utils

logger = logging.getLogger(__name__)

RcParams = collections.namedtuple("RcParams", ["r0", "r1", "c1", "r2", "c2"])

UkfRecord = collections.namedtuple(
    "UkfRecord", ["t", "soc_est", "v1", "v2", "p_soc", "gain_soc", "innovation", "repaired"]
)


class RcTable(object):
    """SOC-indexed RC parameters, linearly interpolated and clamped at the ends.

    :param soc: ascending SOC knots
    :param r0, r1, c1, r2, c2: positive values at each knot [ohm, F]
    """

    columns = ["soc", "r0", "r1", "c1", "r2", "c2"]

    def __init__(self, soc, r0, r1, c1, r2, c2):
        self.soc = np.asarray(soc, dtype=float)
        self.values = np.array([r0, r1, c1, r2, c2], dtype=float)

        if self.soc.ndim != 1 or len(self.soc) < 1 or self.values.shape != (5, len(self.soc)):
            raise ValueError("RcTable: soc and parameter columns must be 1-d of equal length.")
        if np.any(np.diff(self.soc) <= 0):
            raise ValueError("RcTable: soc knots must be strictly ascending.")
        bad = np.nonzero(~(self.values > 0))
        if len(bad[0]):
            name, k = self.columns[bad[0][0] + 1], bad[1][0]
            raise ValueError("RcTable: {} at SOC {} must be positive.".format(name, self.soc[k]))

    def interpolate(self, soc):
        """Return :class:`RcParams` at ``soc``."""
        return RcParams(*(np.interp(soc, self.soc, row) for row in self.values))

    def to_csv(self, fname):
        table = np.column_stack([self.soc, self.values.T])
        np.savetxt(fname, table, delimiter=",", fmt="%.6f", header=",".join(self.columns), comments="")

    @classmethod
    def from_csv(cls, fname):
        with open(fname, "r", encoding="utf-8") as fl:
            header = [h.strip() for h in fl.readline().strip().split(",")]
            if header != cls.columns:
                raise ValueError("{}: RC table header must be {}, got {}.".format(fname, ",".join(cls.columns), header))
            table = np.loadtxt(fl, delimiter=",", ndmin=2)

        return cls(*table.T)


def synthetic_rc_table(step=const.rc_table_step, r0=const.R0, r1=const.R1, c1=const.C1, r2=const.R2, c2=const.C2):
    """Tabulate constant plant parameters at ``step`` SOC spacing."""

    soc = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    ones = np.ones_like(soc)
    return RcTable(soc, r0 * ones, r1 * ones, c1 * ones, r2 * ones, c2 * ones)


def default_rc_table():
    return RcTable.from_csv(sockit.__path__[0] + "/datafiles/synthetic_rc_table.csv")


def ut_weights(n, alpha, beta, kappa):
    """Standard unscented-transform mean and covariance weights.

    :return: (lam, wm, wc) with ``sum(wm) == 1``
    """

    lam = alpha**2 * (n + kappa) - n
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + (1.0 - alpha**2 + beta)

    return lam, wm, wc


def sigma_points(x, p, lam):
    """``2n+1`` sigma points (rows) of ``N(x, p)``."""

    n = len(x)
    try:
        S = sl.cholesky((n + lam) * p, lower=True)
    except np.linalg.LinAlgError:
        # semidefinite p: square root from the eigendecomposition
        w, v = sl.eigh((n + lam) * p)
        S = v * np.sqrt(np.maximum(w, 0.0))

    return np.vstack([x, x + S.T, x - S.T])


class UkfState(object):
    """UKF mean, covariance, noise and unscented-transform settings.

    ``gain_soc``, ``innovation`` and ``repaired`` hold the diagnostics of
    the most recent step.
    """

    def __init__(
        self,
        x=(const.soc_guess, 0.0, 0.0),
        p=const.ukf_p0,
        q=const.ukf_q,
        r=const.ukf_r,
        alpha=const.ukf_alpha,
        beta=const.ukf_beta,
        kappa=const.ukf_kappa,
    ):
        self.x = np.array(x, dtype=float)
        self.p = np.array(p, dtype=float)
        self.q = np.array(q, dtype=float)
        self.r = float(r)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.kappa = float(kappa)

        self.gain_soc = 0.0
        self.innovation = 0.0
        self.repaired = False

        if self.x.shape != (3,) or self.p.shape != (3, 3) or self.q.shape != (3, 3):
            raise ValueError("UkfState: x must have 3 entries and p, q must be 3 x 3.")
        if not self.r > 0 or not self.alpha > 0:
            raise ValueError("UkfState: r and alpha must be positive.")

    def copy(self, **kwargs):
        d = dict(x=self.x, p=self.p, q=self.q, r=self.r, alpha=self.alpha, beta=self.beta, kappa=self.kappa)
        d.update(kwargs)
        return UkfState(**d)

    @property
    def soc(self):
        return self.x[0]


def transition(x, i, dt, rc, c_p):
    """Propagate one state (or rows of sigma points) through the 2RC model."""

    x = np.atleast_2d(x)
    a1 = np.exp(-dt / (rc.r1 * rc.c1))
    a2 = np.exp(-dt / (rc.r2 * rc.c2))

    ret = np.empty_like(x)
    ret[:, 0] = x[:, 0] - i * dt / c_p
    ret[:, 1] = a1 * x[:, 1] + rc.r1 * (1.0 - a1) * i
    ret[:, 2] = a2 * x[:, 2] + rc.r2 * (1.0 - a2) * i

    return ret


def smooth_curve(curve):
    """Return a callable OCV(SOC) for ``curve``.

    ``curve`` is either a callable (returned as is) or ``(soc_grid,
    ocv_values)``, interpolated with a monotone piecewise-cubic (PCHIP)
    interpolant so that the sigma-point spread sees a continuous slope at
    the knots. SOC is clamped to the grid.
    """

    if callable(curve):
        return curve

    soc_grid, ocv_values = curve
    pchip = si.PchipInterpolator(soc_grid, ocv_values)
    lo, hi = soc_grid[0], soc_grid[-1]

    return lambda soc: pchip(np.clip(soc, lo, hi))


def output(x, i, curve, rc):
    """Terminal voltage of one state (or rows of sigma points).

    :param curve: ``(soc_grid, ocv_values)`` or a callable, see :func:`smooth_curve`
    """

    x = np.atleast_2d(x)
    return smooth_curve(curve)(x[:, 0]) - rc.r0 * i - x[:, 1] - x[:, 2]


def _repair(state, x, p, step):
    p, repaired = utils.repair_covariance(p)
    if repaired:
        msg = "UKF {}: covariance lost positive semidefiniteness; repaired.".format(step)
        logger.warning(msg)

    x = x.copy()
    x[0] = np.clip(x[0], 0.0, 1.0)

    ret = state.copy(x=x, p=p)
    ret.repaired = repaired
    return ret


def ukf_predict(state, i, dt=const.Ts, table=None, c_p=const.Cp):
    """Unscented time update with current ``i`` [A] over ``dt`` [s]."""

    table = default_rc_table() if table is None else table
    rc = table.interpolate(state.soc)

    lam, wm, wc = ut_weights(3, state.alpha, state.beta, state.kappa)
    X = transition(sigma_points(state.x, state.p, lam), i, dt, rc, c_p)

    x = np.dot(wm, X)
    dX = X - x
    p = np.dot(dX.T * wc, dX) + state.q

    ret = _repair(state, x, p, "predict")
    ret.gain_soc, ret.innovation = state.gain_soc, state.innovation
    return ret


def predicted_output(state, i, curve, table=None):
    """Unscented mean of the terminal voltage for ``state``."""

    table = default_rc_table() if table is None else table
    lam, wm, _ = ut_weights(3, state.alpha, state.beta, state.kappa)
    Y = output(sigma_points(state.x, state.p, lam), i, curve, table.interpolate(state.soc))

    return np.dot(wm, Y)


def ukf_update(state, v_t, i, curve, table=None):
    """Unscented measurement update with terminal voltage ``v_t`` [V].

    :param curve: ``(soc_grid, ocv_values)`` of the averaged OCV curve
                  (e.g. ``OcvMap.curve(0.0)``) or its :func:`smooth_curve`
    """

    table = default_rc_table() if table is None else table
    rc = table.interpolate(state.soc)

    lam, wm, wc = ut_weights(3, state.alpha, state.beta, state.kappa)
    X = sigma_points(state.x, state.p, lam)
    Y = output(X, i, curve, rc)

    y = np.dot(wm, Y)
    dX = X - state.x
    dY = Y - y

    p_yy = np.dot(wc, dY**2) + state.r
    p_xy = np.dot(dX.T * wc, dY)
    k = p_xy / p_yy

    innovation = v_t - y
    x = state.x + k * innovation
    p = state.p - p_yy * np.outer(k, k)

    ret = _repair(state, x, p, "update")
    ret.gain_soc = k[0]
    ret.innovation = innovation
    return ret


class UkfEstimator(object):
    """UKF run over a telemetry stream, one :class:`UkfRecord` per sample.

    :param ocv_map: map providing the averaged (H = 0) curve
    :param table: :class:`RcTable`; the packaged fixture if None
    :param state: initial :class:`UkfState`
    """

    def __init__(self, ocv_map, table=None, state=None, c_p=const.Cp, dt=const.Ts):
        self.curve = smooth_curve(ocv_map.curve(0.0))
        self.table = default_rc_table() if table is None else table
        self.state = UkfState() if state is None else state
        self.c_p = c_p
        self.dt = dt

        self._i_prev = None

    def step(self, sample):
        if self._i_prev is not None:
            self.state = ukf_predict(self.state, self._i_prev, self.dt, self.table, self.c_p)

        self.state = ukf_update(self.state, sample.v_t, sample.i, self.curve, self.table)
        self._i_prev = sample.i

        s = self.state
        return UkfRecord(sample.t, s.x[0], s.x[1], s.x[2], s.p[0, 0], s.gain_soc, s.innovation, s.repaired)

    def run(self, series):
        return [self.step(sample) for sample in series]
