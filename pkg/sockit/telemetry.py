# telemetry.py
"""Telemetry containers: measured current/voltage streams and the estimate
records produced from them, with their CSV formats.

Telemetry CSV has header ``t,i,v``; all values are SI (s, A, V) and
current is positive on discharge.
"""

import collections
import logging

import numpy as np

logger = logging.getLogger(__name__)

# timestamp spacing tolerance in s
SPACING_TOL = 1.0e-6

TelemetrySample = collections.namedtuple("TelemetrySample", ["t", "i", "v_t"])

EstimateRecord = collections.namedtuple(
    "EstimateRecord",
    ["t", "soc_est", "soc_ocv_h", "cov_soc", "ocv_est", "h", "gain", "warmup", "cov_ocv", "condition"],
)


class SampleError(ValueError):
    """Raised for non-finite, out-of-order or irregularly spaced telemetry."""


def check_sample(sample, t_prev=None, dt=None):
    """Validate one sample against the previous timestamp and the nominal spacing."""

    if not all(np.isfinite(x) for x in sample):
        raise SampleError("non-finite telemetry sample {}.".format(tuple(sample)))

    if t_prev is not None:
        if sample.t <= t_prev:
            raise SampleError("out-of-order timestamp {} after {}.".format(sample.t, t_prev))
        if dt is not None and abs(sample.t - t_prev - dt) > SPACING_TOL:
            msg = "timestamp {} is {} s after {}, expected spacing {} s.".format(
                sample.t, sample.t - t_prev, t_prev, dt
            )
            raise SampleError(msg)


class TelemetrySeries(object):
    """Uniformly sampled current/voltage telemetry.

    :param t: timestamps [s], strictly increasing with constant spacing
    :param i: measured current [A], positive on discharge
    :param v: measured terminal voltage [V]
    """

    def __init__(self, t, i, v):
        self._t = np.asarray(t, dtype=float)
        self._i = np.asarray(i, dtype=float)
        self._v = np.asarray(v, dtype=float)

        if not (self._t.shape == self._i.shape == self._v.shape) or self._t.ndim != 1:
            raise SampleError("t, i and v must be 1-d arrays of equal length.")
        if not (np.all(np.isfinite(self._t)) and np.all(np.isfinite(self._i)) and np.all(np.isfinite(self._v))):
            raise SampleError("telemetry contains non-finite values.")

        self._dt = self._spacing()

    def _spacing(self):
        if len(self._t) < 2:
            return None

        steps = np.diff(self._t)
        dt = steps[0]
        if dt <= 0 or np.any(np.abs(steps - dt) > SPACING_TOL):
            k = np.argmax((steps <= 0) | (np.abs(steps - dt) > SPACING_TOL))
            raise SampleError("irregular timestamp spacing at t={} (step {} s).".format(self._t[k + 1], steps[k]))

        return dt

    @property
    def t(self):
        """Return array of timestamps in seconds."""
        return self._t

    @property
    def i(self):
        """Return array of measured currents in A."""
        return self._i

    @property
    def v(self):
        """Return array of measured terminal voltages in V."""
        return self._v

    @property
    def dt(self):
        """Return sample spacing in seconds (None for fewer than two samples)."""
        return self._dt

    def __len__(self):
        return len(self._t)

    def __iter__(self):
        for t, i, v in zip(self._t, self._i, self._v):
            yield TelemetrySample(t, i, v)

    def filter_data(self, start_time=None, end_time=None):
        """Return a time-slice of the series (bounds inclusive, in s)."""

        mask = np.ones(self._t.shape, dtype=bool)
        if start_time is not None:
            mask &= self._t >= start_time
        if end_time is not None:
            mask &= self._t <= end_time

        return TelemetrySeries(self._t[mask], self._i[mask], self._v[mask])

    def to_csv(self, fname):
        write_csv(fname, ["t", "i", "v"], [self._t, self._i, self._v])

    @classmethod
    def from_csv(cls, fname):
        cols = read_csv(fname, ["t", "i", "v"])
        return cls(cols["t"], cols["i"], cols["v"])


def write_csv(fname, names, columns, fmt="%.10g"):
    """Write equal-length columns with a one-line header."""

    table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(fname, table, delimiter=",", fmt=fmt, header=",".join(names), comments="", encoding="utf-8")


def read_csv(fname, names):
    """Read a headed CSV and return a dict of the requested columns."""

    with open(fname, "r", encoding="utf-8") as fl:
        header = [h.strip() for h in fl.readline().strip().split(",")]
        missing = [n for n in names if n not in header]
        if missing:
            raise ValueError("{}: missing column(s) {} in header {}.".format(fname, missing, header))
        table = np.loadtxt(fl, delimiter=",", ndmin=2)

    return {n: table[:, header.index(n)] for n in names}


def write_records(fname, records):
    """Write a list of namedtuple records (all fields numeric or bool) as CSV."""

    if not records:
        raise ValueError("no records to write to {}.".format(fname))

    names = records[0]._fields
    columns = [[float(getattr(r, n)) for r in records] for n in names]
    write_csv(fname, names, columns)
