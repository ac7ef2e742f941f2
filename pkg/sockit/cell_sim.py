# cell_sim.py
"""Ground-truth synthetic LFP cell and measurement-error injection.

The plant is a 2RC equivalent circuit with an OCV-H-SOC map and the
open-loop hysteresis recursion, discretized with exact exponentials.
Sample ``k`` uses the current held over ``[t_k, t_k + dt)``:

    V_T[k]    = OCV(SOC[k], H[k]) - R0 I[k] - V1[k] - V2[k]
    SOC[k+1]  = SOC[k] - I[k] dt / C_p
    H[k+1]    = hysteresis_step(H[k], I[k])
"""

import logging

import numpy as np
import scipy.signal as ss

from sockit import constants as const
from sockit.estimators.hysteresis import hysteresis_step
from sockit.estimators.ocv_map import default_map
from sockit.telemetry import TelemetrySeries, read_csv, write_csv

logger = logging.getLogger(__name__)

PROFILE_KINDS = ["drive_cycle", "soc_bounded", "sweep", "constant_segment", "csv"]


class PlantParams(object):
    """Plant parameters [ohm, F, A s, A]; ``ocv_map`` defaults to the packaged map."""

    def __init__(
        self,
        r0=const.R0,
        r1=const.R1,
        c1=const.C1,
        r2=const.R2,
        c2=const.C2,
        c_p=const.Cp,
        c_rate=const.hysteresis_rate,
        ocv_map=None,
    ):
        values = dict(r0=r0, r1=r1, c1=c1, r2=r2, c2=c2, c_p=c_p, c_rate=c_rate)
        for name, value in values.items():
            if not np.isfinite(value) or value <= 0:
                raise ValueError("PlantParams: {} must be positive, got {}.".format(name, value))

        self.r0, self.r1, self.c1, self.r2, self.c2 = r0, r1, c1, r2, c2
        self.c_p = c_p
        self.c_rate = c_rate
        self.ocv_map = default_map() if ocv_map is None else ocv_map


class SimTrace(object):
    """Per-step ground truth.

    ``truncated`` is set when the profile drove SOC out of [0, 1];
    ``soc_end`` is the SOC after the last recorded step.
    """

    columns = ["t", "i_true", "v_true", "soc_true", "h_true"]

    def __init__(self, t, i_true, v_true, soc_true, h_true, truncated=False, soc_end=None):
        self.t = np.asarray(t, dtype=float)
        self.i_true = np.asarray(i_true, dtype=float)
        self.v_true = np.asarray(v_true, dtype=float)
        self.soc_true = np.asarray(soc_true, dtype=float)
        self.h_true = np.asarray(h_true, dtype=float)
        self.truncated = truncated
        self.soc_end = self.soc_true[-1] if soc_end is None else soc_end

    def __len__(self):
        return len(self.t)

    def to_csv(self, fname):
        write_csv(fname, self.columns, [getattr(self, c) for c in self.columns])

    @classmethod
    def from_csv(cls, fname):
        cols = read_csv(fname, cls.columns)
        return cls(*[cols[c] for c in cls.columns])


def simulate(profile, params=None, soc0=1.0, h0=0.0, dt=const.Ts, t0=0.0):
    """Run the plant over a current profile.

    :param profile: current per step [A], positive on discharge
    :param params: :class:`PlantParams`
    :param soc0: initial SOC
    :param h0: initial hysteresis factor
    :param dt: step [s]

    :return: :class:`SimTrace`
    """

    profile = np.asarray(profile, dtype=float)
    params = PlantParams() if params is None else params

    if profile.ndim != 1 or len(profile) == 0 or not np.all(np.isfinite(profile)):
        raise ValueError("simulate: profile must be a non-empty finite 1-d sequence.")
    if not 0.0 <= soc0 <= 1.0:
        raise ValueError("simulate: soc0 must lie in [0, 1], got {}.".format(soc0))
    if not -1.0 <= h0 <= 1.0:
        raise ValueError("simulate: h0 must lie in [-1, 1], got {}.".format(h0))

    n = len(profile)
    v = np.zeros(n)
    soc = np.zeros(n)
    h = np.zeros(n)

    a1 = np.exp(-dt / (params.r1 * params.c1))
    a2 = np.exp(-dt / (params.r2 * params.c2))

    s, hk, v1, v2 = float(soc0), float(h0), 0.0, 0.0
    truncated = False

    for k, i in enumerate(profile):
        soc[k], h[k] = s, hk
        v[k] = params.ocv_map.ocv(s, hk) - params.r0 * i - v1 - v2

        s_next = s - i * dt / params.c_p
        if s_next < -const.soc_tolerance or s_next > 1.0 + const.soc_tolerance:
            truncated = True
            n = k + 1
            msg = "simulation left the SOC range at t={} (SOC {:.6f}); trace truncated to {} samples.".format(
                t0 + (k + 1) * dt, s_next, n
            )
            logger.warning(msg)
            break

        s = min(max(s_next, 0.0), 1.0)
        hk = float(hysteresis_step(hk, i, params.c_rate))
        v1 = a1 * v1 + params.r1 * (1.0 - a1) * i
        v2 = a2 * v2 + params.r2 * (1.0 - a2) * i

    t = t0 + dt * np.arange(n)
    soc_end = soc[n - 1] if truncated else s

    return SimTrace(t, profile[:n], v[:n], soc[:n], h[:n], truncated=truncated, soc_end=soc_end)


def adc_resolution(n=const.adc_bits, v_max=const.adc_vmax):
    """ADC step ``v_max / (2^n - 1)`` [V]."""
    return v_max / (2**n - 1)


def quantize_voltage(v, n=const.adc_bits, v_max=const.adc_vmax, full_output=False):
    """Round-to-nearest ADC quantization.

    Inputs outside ``[0, v_max]`` saturate at the rails; with
    ``full_output=True`` the saturation mask is returned as well.
    """

    if int(n) != n or not 4 <= n <= 24:
        raise ValueError("quantize_voltage: n must be an integer in [4, 24], got {}.".format(n))

    v = np.asarray(v, dtype=float)
    dv = adc_resolution(n, v_max)

    saturated = (v < 0.0) | (v > v_max)
    if np.any(saturated):
        msg = "{} voltage sample(s) outside [0, {}] V saturated by the ADC.".format(np.sum(saturated), v_max)
        logger.warning(msg)

    ret = np.floor(np.clip(v, 0.0, v_max) / dv + 0.5) * dv

    return (ret, saturated) if full_output else ret


class ErrorSpec(object):
    """Measurement errors.

    :param current_bias: additive current-sensor bias [A]
    :param adc_bits: ADC resolution in bits, or None for no quantization
    :param adc_vmax: ADC full scale [V]
    :param gaussian_v_noise: voltage noise standard deviation [V]
    """

    def __init__(self, current_bias=0.0, adc_bits=None, adc_vmax=const.adc_vmax, gaussian_v_noise=0.0):
        if adc_bits is not None and (int(adc_bits) != adc_bits or not 4 <= adc_bits <= 24):
            raise ValueError("ErrorSpec: adc_bits must be an integer in [4, 24], got {}.".format(adc_bits))
        if not adc_vmax > 0 or not gaussian_v_noise >= 0 or not np.isfinite(current_bias):
            raise ValueError("ErrorSpec: need adc_vmax > 0, gaussian_v_noise >= 0 and a finite current_bias.")

        self.current_bias = float(current_bias)
        self.adc_bits = adc_bits
        self.adc_vmax = float(adc_vmax)
        self.gaussian_v_noise = float(gaussian_v_noise)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def apply_errors(trace, spec=None, seed=0, full_output=False):
    """Turn a :class:`SimTrace` into measured telemetry.

    :return: :class:`~sockit.telemetry.TelemetrySeries`; with
             ``full_output=True`` also the quantization error ``V_Q - V``
             (zeros without an ADC)
    """

    spec = ErrorSpec() if spec is None else spec
    rng = np.random.default_rng(seed)

    i = trace.i_true + spec.current_bias

    v = trace.v_true
    if spec.gaussian_v_noise > 0:
        v = v + spec.gaussian_v_noise * rng.standard_normal(len(v))

    qerr = np.zeros(len(v))
    if spec.adc_bits is not None:
        vq = quantize_voltage(v, spec.adc_bits, spec.adc_vmax)
        qerr = vq - v
        v = vq

    series = TelemetrySeries(trace.t, i, v)

    return (series, qerr) if full_output else series


def drive_cycle(n, rng, mean=0.0, amplitude=const.profile_amplitude, cutoff=const.profile_cutoff, dt=const.Ts):
    """Band-limited random current: low-pass filtered white noise scaled
    to peak ``amplitude`` around ``mean``."""

    sos = ss.butter(const.profile_order, cutoff, fs=1.0 / dt, output="sos")
    x = ss.sosfilt(sos, rng.standard_normal(n))

    peak = np.max(np.abs(x))
    return mean + amplitude * x / peak if peak > 0 else np.full(n, float(mean))


def bounded_cycle(base, band, soc0, drift, c_p=const.Cp, dt=const.Ts, direction=1):
    """Add a drift current whose sign reverses whenever the running SOC
    reaches an edge of ``band``.

    :param direction: initial drift sign, +1 discharge, -1 charge
    """

    lo, hi = band
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("bounded_cycle: band must satisfy 0 <= lo < hi <= 1, got {}.".format(band))

    ret = np.empty(len(base))
    soc = soc0
    for k, b in enumerate(base):
        if soc <= lo:
            direction = -1
        elif soc >= hi:
            direction = 1
        ret[k] = b + direction * drift
        soc -= ret[k] * dt / c_p

    return ret


def insert_constant_segment(profile, start, length, amplitude=const.segment_amplitude):
    """Overwrite ``length`` samples from index ``start`` with ``amplitude``."""

    if start < 0 or length < 1 or start + length > len(profile):
        msg = "insert_constant_segment: segment [{}, {}) outside profile of {} samples.".format(
            start, start + length, len(profile)
        )
        raise ValueError(msg)

    ret = np.array(profile, dtype=float)
    ret[start : start + length] = amplitude
    return ret


def load_profile(fname):
    """Read a ``t,i`` profile CSV and return the currents."""
    return read_csv(fname, ["t", "i"])["i"]


def save_profile(fname, profile, dt=const.Ts):
    write_csv(fname, ["t", "i"], [dt * np.arange(len(profile)), profile])


def gen_profile(kind, duration, seed=0, dt=const.Ts, **opts):
    """Generate a current profile [A] of ``duration`` seconds.

    Kinds and their options:

    * ``drive_cycle``: ``mean``, ``amplitude``, ``cutoff``
    * ``soc_bounded``: drive cycle plus a drift reversing at the band edges;
      ``band``, ``soc0``, ``drift``, ``c_p`` and the drive-cycle options
    * ``sweep``: bounded cycle starting at the lower band edge while
      charging, with the drift sized for one lo -> hi -> lo pass
    * ``constant_segment``: another kind (``base``, default drive_cycle)
      with ``segment_duration`` s at ``segment_amplitude`` A from
      ``segment_start`` s (default: centred)
    * ``csv``: ``path`` of a ``t,i`` file, cut to ``duration``
    """

    if not duration > 0:
        raise ValueError("gen_profile: duration must be positive, got {}.".format(duration))
    if kind not in PROFILE_KINDS:
        raise ValueError("gen_profile: unknown profile kind '{}' (expected one of {}).".format(kind, PROFILE_KINDS))

    n = int(round(duration / dt))
    rng = np.random.default_rng(seed)
    cycle_opts = {key: opts[key] for key in ["mean", "amplitude", "cutoff"] if key in opts}

    if kind == "drive_cycle":
        return drive_cycle(n, rng, dt=dt, **cycle_opts)

    if kind in ["soc_bounded", "sweep"]:
        band = tuple(opts.get("band", const.profile_band))
        c_p = opts.get("c_p", const.Cp)
        cycle_opts.setdefault("mean", 0.0)
        base = drive_cycle(n, rng, dt=dt, **cycle_opts)

        if kind == "sweep":
            drift = opts.get("drift", 2.0 * (band[1] - band[0]) * c_p / (n * dt))
            return bounded_cycle(base, band, band[0], drift, c_p=c_p, dt=dt, direction=-1)

        soc0 = opts.get("soc0", 0.5 * (band[0] + band[1]))
        return bounded_cycle(base, band, soc0, opts.get("drift", const.profile_drift), c_p=c_p, dt=dt)

    if kind == "constant_segment":
        base_opts = {key: value for key, value in opts.items() if not key.startswith("segment_") and key != "base"}
        base = gen_profile(opts.get("base", "drive_cycle"), duration, seed=seed, dt=dt, **base_opts)

        length = int(round(opts.get("segment_duration", const.segment_duration) / dt))
        start = opts.get("segment_start")
        start = (n - length) // 2 if start is None else int(round(start / dt))
        return insert_constant_segment(base, start, length, opts.get("segment_amplitude", const.segment_amplitude))

    # csv
    if "path" not in opts:
        raise ValueError("gen_profile: kind 'csv' needs a 'path' option.")
    return load_profile(opts["path"])[:n]
