"""Estimator components of the adaptive SOC pipeline and the UKF baseline."""
