# constants.py
"""Declares cell and estimator constants for use in sockit.
Depends on numpy for base mathematical constants, and
scipy.constants for unit conversions.
"""

import numpy as np
import scipy.constants as sc

# unit conversions in SI
hour = sc.hour
mV = 1.0e-3
mA = 1.0e-3

# default sample period in s (1 Hz telemetry)
Ts = 1.0

# Tikhonov ridge shared by the least-squares solve and the Fisher matrix
epsilon = 1.0e-8

# derivative filter: lambda1 = 2 zeta omega, lambda0 = omega^2
filter_omega = 0.5
filter_zeta = 1.0
lambda0 = filter_omega**2
lambda1 = 2.0 * filter_zeta * filter_omega

# regression window length in samples (100 s at 1 Hz)
window = 100

# default plant (2RC equivalent circuit), ohm / farad
R0 = 0.05
R1 = 0.03
C1 = 1000.0
R2 = 0.02
C2 = 5000.0
tau1 = R1 * C1
tau2 = R2 * C2

# 1.2 Ah cell, capacity in A s
capacity_Ah = 1.2
Cp = capacity_Ah * hour

# hysteresis rate C in A (per step at Ts)
hysteresis_rate = 1.2

# synthetic OCV-H-SOC fixture
ocv_mid = 3.30
ocv_linear = 0.02
ocv_steep = 0.15
ocv_steep_power = 9
ocv_hysteresis = 0.015
map_nsoc = 201
map_nh = 21
ocv_band = (2.0, 4.0)

# perturbed map used as the mismatched plant
mismatch_offset = 8.0 * mV
mismatch_soc_warp = 0.015

# dSOC/dOCV ceiling in fraction/V (20 %/mV)
inv_slope_ceiling = 0.20 / mV

# condition evaluation
sigma_vt = 2.0 * mV
cov_soc_ceiling = 1.0e4

# fusion
sigma_i = 10.0 * mA
soc_guess = 0.5
p0 = 0.25

# unscented transform and noise defaults
ukf_alpha = 1.0e-3
ukf_beta = 2.0
ukf_kappa = 0.0
ukf_q = np.diag([1.0e-5**2, 1.0e-4**2, 1.0e-4**2])
ukf_r = (5.0 * mV) ** 2
ukf_p0 = np.diag([0.25, 1.0e-6, 1.0e-6])

# RC fixture granularity (5 % SOC, HPPC-like)
rc_table_step = 0.05

# ADC defaults (10 bit, 5 V)
adc_bits = 10
adc_vmax = 5.0

# scenario metrics
convergence_threshold = 0.10
convergence_sustain = 60.0

# drive-cycle generator: band-limited noise, peak amplitude in A, cutoff in Hz
profile_amplitude = 3.0
profile_cutoff = 0.05
profile_order = 4

# soc-bounded cycling band and drift current in A
profile_band = (0.2, 0.8)
profile_drift = 0.5

# constant segment (15 min at -1 A)
segment_duration = 900.0
segment_amplitude = -1.0

# SOC tolerance before a simulation is truncated
soc_tolerance = 1.0e-9
