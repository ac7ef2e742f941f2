#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_param_estimation
----------------------------------

Tests for `param_estimation` module.
"""

import unittest

import numpy as np

from sockit.cell_sim import drive_cycle
from sockit.estimators.param_estimation import (
    NPARAMS,
    ParameterVector,
    RegressorRow,
    RegressorWindow,
    WindowNotFullError,
    estimate,
    residual_rms,
)
from sockit.estimators.signal_filter import FilterDesign, design_filter


def plant_voltage(current, ocv=3.30, r0=0.05, r1=0.03, c1=1000.0, r2=0.02, c2=5000.0, dt=1.0):
    """Constant-OCV 2RC terminal voltage with exact exponential RC updates."""

    a1, a2 = np.exp(-dt / (r1 * c1)), np.exp(-dt / (r2 * c2))
    v1 = v2 = 0.0
    ret = np.empty(len(current))
    for k, i in enumerate(current):
        ret[k] = ocv - r0 * i - v1 - v2
        v1 = a1 * v1 + r1 * (1.0 - a1) * i
        v2 = a2 * v2 + r2 * (1.0 - a2) * i

    return ret


def fill_window(voltage, current, capacity=100):
    """Filter both signals (warm-started) and keep the last ``capacity`` rows."""

    design = FilterDesign()
    vbank, ibank = design_filter(design), design_filter(design)
    vbank.reset(voltage[0])
    ibank.reset(current[0])

    window = RegressorWindow(capacity)
    for v, i in zip(voltage, current):
        window.push_row(RegressorRow.from_filtered(vbank.step(v), ibank.step(i)))

    return window


class TestRegressorRow(unittest.TestCase):
    def test_from_filtered(self):
        """Row layout from filtered signals."""

        row = RegressorRow.from_filtered((3.3, 0.1, 0.2), (1.0, 0.3, 0.4))

        msg = "Regressor layout incorrect"
        assert np.array_equal(row.phi, [1.0, -0.4, -0.3, -1.0, -0.2, -0.1]) and row.target == 3.3, msg

    def test_invalid_rows(self):
        """Rows with wrong shape, leading entry or non-finite values are rejected."""

        for phi, target in [
            (np.ones(5), 3.3),
            ([2.0, 0, 0, 0, 0, 0], 3.3),
            ([1.0, np.nan, 0, 0, 0, 0], 3.3),
            ([1.0, 0, 0, 0, 0, 0], np.inf),
        ]:
            with self.assertRaises(ValueError):
                RegressorRow(phi, target)


class TestRegressorWindow(unittest.TestCase):
    def setUp(self):
        self.window = RegressorWindow(4)

    def _row(self, k):
        return RegressorRow([1.0, k, 0, 0, 0, 0], float(k))

    def test_push_one(self):
        """One push fills one row."""

        self.window.push_row(self._row(0))
        msg = "n_filled incorrect after one push"
        assert self.window.n_filled == 1 and not self.window.full, msg

    def test_fifo_eviction(self):
        """N + 1 pushes evict the oldest row."""

        for k in range(5):
            self.window.push_row(self._row(k))

        msg = "Oldest row not evicted"
        assert self.window.full and np.array_equal(self.window.targets(), [1, 2, 3, 4]), msg

    def test_fifo_order(self):
        """2N pushes keep pushes N+1..2N in arrival order."""

        for k in range(8):
            self.window.push_row(self._row(k))

        msg = "FIFO order broken"
        assert np.array_equal(self.window.design_matrix()[:, 1], [4, 5, 6, 7]), msg

    def test_wrong_type(self):
        """Only regressor rows may be pushed."""

        with self.assertRaises(TypeError):
            self.window.push_row(np.ones(NPARAMS))

    def test_clear(self):
        """Clearing empties the window."""

        self.window.push_row(self._row(0))
        self.window.clear()
        msg = "Window not empty after clear"
        assert self.window.n_filled == 0 and len(self.window.targets()) == 0, msg

    def test_invalid_capacity(self):
        """Capacity must be a positive integer."""

        for capacity in [0, -3, 2.5]:
            with self.assertRaises(ValueError):
                RegressorWindow(capacity)


class TestEstimate(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """Noise-free 2RC plant under band-limited random current."""

        cls.current = drive_cycle(500, np.random.default_rng(11), amplitude=2.0)
        cls.voltage = plant_voltage(cls.current)
        cls.window = fill_window(cls.voltage, cls.current)
        cls.theta, cls.cond = estimate(cls.window)

    def test_not_full(self):
        """Estimation on a partial window signals not-ready."""

        window = RegressorWindow(10)
        window.push_row(RegressorRow([1.0, 0, 0, 0, 0, 0], 3.3))
        with self.assertRaises(WindowNotFullError):
            estimate(window)

    def test_constant_signal(self):
        """Constant-signal window: OCV equals the target, other parameters vanish."""

        window = RegressorWindow(20)
        for _ in range(20):
            window.push_row(RegressorRow([1.0, 0, 0, 0, 0, 0], 3.32))

        theta, _ = estimate(window)
        msg = "Degenerate fit incorrect: {}".format(theta)
        assert np.abs(theta.ocv - 3.32) < 1e-6 and np.allclose(theta[1:], 0.0), msg

    def test_ocv_recovery(self):
        """OCV recovered within 1 mV on noise-free plant data."""

        msg = "Recovered OCV {} too far from 3.30 V".format(self.theta.ocv)
        assert np.abs(self.theta.ocv - 3.30) < 1.0e-3, msg

    def test_ohmic_recovery(self):
        """Total resistance c recovered within 5%."""

        msg = "Recovered c {} too far from 0.10 ohm".format(self.theta.c)
        assert np.abs(self.theta.c - 0.10) < 0.005, msg

    def test_residual(self):
        """Fit residual is negligible for a model-consistent plant."""

        res = residual_rms(self.window, self.theta)
        msg = "Residual RMS {} too large".format(res)
        assert res < 1e-5, msg

    def test_condition_number(self):
        """Condition number is reported and finite."""

        msg = "Condition number not finite and >= 1"
        assert np.isfinite(self.cond) and self.cond >= 1.0, msg

    def test_bias_transfer(self):
        """Constant current bias shifts OCV by c * beta and leaves c unchanged."""

        beta = -0.05
        window = fill_window(self.voltage, self.current + beta)
        theta, _ = estimate(window)

        shift = theta.ocv - self.theta.ocv
        msg = "OCV shift {} not -5 mV +- 0.5 mV".format(shift)
        assert np.abs(shift - self.theta.c * beta) < 0.5e-3, msg

        msg = "c changed under current bias: {} vs {}".format(theta.c, self.theta.c)
        assert np.abs(theta.c / self.theta.c - 1.0) < 0.01, msg

    def test_target_shift(self):
        """Adding a constant to the voltage shifts only the OCV."""

        window = fill_window(self.voltage + 0.01, self.current)
        theta, _ = estimate(window)

        msg = "OCV did not shift by the voltage offset"
        assert np.abs(theta.ocv - self.theta.ocv - 0.01) < 1e-6, msg

        msg = "Dynamic parameters changed under a voltage offset"
        assert np.allclose(theta[1:], self.theta[1:], rtol=1e-3, atol=1e-9), msg

    def test_determinism(self):
        """Identical windows give bit-identical estimates."""

        theta, _ = estimate(fill_window(self.voltage, self.current))
        msg = "Estimate not deterministic"
        assert tuple(theta) == tuple(self.theta), msg

    def test_plausibility(self):
        """Plausibility flags of the plant fit."""

        flags = self.theta.plausibility()
        msg = "Plant fit not physically plausible: {}".format(flags)
        assert all(flags.values()), msg

    def test_parameter_vector(self):
        """ParameterVector field access."""

        theta = ParameterVector(3.3, 1, 2, 3, 4, 5)
        msg = "ParameterVector fields incorrect"
        assert theta.ocv == 3.3 and theta.e == 5, msg


class TestExactFit(unittest.TestCase):
    def test_exact_targets(self):
        """Targets generated exactly by the regressors give back the parameters."""

        current = drive_cycle(500, np.random.default_rng(12), amplitude=2.0)
        A = fill_window(plant_voltage(current), current).design_matrix()
        theta_true = np.array([3.31, 2.0, 25.0, 0.1, 3000.0, 130.0])

        window = RegressorWindow(len(A))
        for phi in A:
            window.push_row(RegressorRow(phi, np.dot(phi, theta_true)))
        theta, _ = estimate(window)

        msg = "Exact fit not recovered: {}".format(theta)
        assert np.allclose(theta, theta_true, rtol=1e-5), msg
        assert residual_rms(window, theta) < 1e-9, msg


class TestWindowFit(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """Plant whose OCV falls linearly with the discharged charge."""

        cls.slope = -2.0e-5
        current = 0.8 + drive_cycle(500, np.random.default_rng(13), amplitude=0.7)
        charge = np.concatenate([[0.0], np.cumsum(current)[:-1]])
        voltage = plant_voltage(current) + cls.slope * charge

        design = FilterDesign()
        vbank, ibank, qbank = design_filter(design), design_filter(design), design_filter(design)
        vbank.reset(voltage[0])
        ibank.reset(current[0])

        window = RegressorWindow(100)
        for v, i, q in zip(voltage, current, charge):
            window.push_row(RegressorRow.from_filtered(vbank.step(v), ibank.step(i), qbank.step(q)[0]))

        cls.charge = charge
        cls.theta, cls.cond, cls.fit = estimate(window, full_output=True)

    def test_reference_inside_window(self):
        """The fitted OCV belongs to a charge inside the window."""

        msg = "Reference charge {} outside the window".format(self.fit.reference)
        assert self.charge[-100] <= self.fit.reference <= self.charge[-1], msg

    def test_ocv_at_reference(self):
        """The fitted OCV is the plant OCV at the reference charge."""

        expected = 3.30 + self.slope * self.fit.reference
        msg = "OCV {} differs from {} at the reference charge".format(self.theta.ocv, expected)
        assert np.abs(self.theta.ocv - expected) < 1e-4, msg

    def test_model_rms(self):
        """A model-consistent plant leaves a negligible residual."""

        msg = "Model RMS {} too large".format(self.fit.model_rms)
        assert self.fit.model_rms < 1e-4, msg

    def test_same_theta(self):
        """The full output does not change the parameter estimate."""

        window = RegressorWindow(4)
        for k in range(4):
            window.push_row(RegressorRow([1.0, k, k**2, 0, 0, 0], 3.3 + 0.1 * k, float(k**3)))

        theta, cond = estimate(window)
        theta_full, cond_full, fit = estimate(window, full_output=True)

        msg = "Parameter estimate depends on full_output"
        assert np.allclose(theta, theta_full, rtol=1e-12, atol=1e-12) and np.isclose(cond, cond_full), msg
        assert np.isfinite(fit.model_rms) and np.isfinite(fit.drift), msg

    def test_reference_stored(self):
        """Rows carry their reference through the window."""

        window = RegressorWindow(3)
        for k in range(5):
            window.push_row(RegressorRow([1.0, 0, 0, 0, 0, 0], 3.3, float(k)))

        msg = "References not kept in arrival order"
        assert np.array_equal(window.references(), [2.0, 3.0, 4.0]), msg
