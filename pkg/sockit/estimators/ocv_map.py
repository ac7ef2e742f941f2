# ocv_map.py
"""Gridded OCV = f(SOC, H) surface.

Every fixed-H slice must be strictly increasing in SOC. Queries use
bilinear interpolation, which keeps interpolated slices strictly
increasing, so each slice is inverted exactly by swapping the roles of
the abscissa and ordinate of the piecewise-linear interpolant.

Map files are UTF-8 CSV. The first row is ``soc,`` followed by the H knots;
each following row is a SOC knot followed by the OCV values (V) at each H.
"""

import logging

import numpy as np

import sockit
from sockit import constants as const

logger = logging.getLogger(__name__)


class MapError(ValueError):
    """Raised for malformed or invalid OCV maps."""


class OcvMap(object):
    """OCV surface on a (H, SOC) grid.

    :param soc_grid: ascending SOC knots spanning [0, 1]
    :param h_grid: ascending H knots spanning [-1, 1]
    :param ocv_values: OCV [V] indexed ``[h][soc]``
    :param inv_slope_ceiling: cap on dSOC/dOCV [fraction/V]
    """

    def __init__(self, soc_grid, h_grid, ocv_values, inv_slope_ceiling=const.inv_slope_ceiling):
        self.soc_grid = np.asarray(soc_grid, dtype=float)
        self.h_grid = np.asarray(h_grid, dtype=float)
        self.ocv_values = np.asarray(ocv_values, dtype=float)
        self.inv_slope_ceiling = float(inv_slope_ceiling)

        self._validate()

        # central-difference half width for the inverse slope
        self._dsoc = np.min(np.diff(self.soc_grid))

    def _validate(self):
        for name, grid, lo, hi in [("soc", self.soc_grid, 0.0, 1.0), ("h", self.h_grid, -1.0, 1.0)]:
            if grid.ndim != 1 or len(grid) < 2:
                raise MapError("{} grid needs at least two knots.".format(name))
            bad = np.nonzero(np.diff(grid) <= 0)[0]
            if len(bad):
                msg = "{} grid is not strictly ascending at knot {} ({} -> {}).".format(
                    name, bad[0] + 1, grid[bad[0]], grid[bad[0] + 1]
                )
                raise MapError(msg)
            if grid[0] != lo or grid[-1] != hi:
                raise MapError("{} grid must span [{}, {}], got [{}, {}].".format(name, lo, hi, grid[0], grid[-1]))

        if self.ocv_values.shape != (len(self.h_grid), len(self.soc_grid)):
            msg = "OCV table has shape {}, expected (len(h_grid), len(soc_grid)) = {}.".format(
                self.ocv_values.shape, (len(self.h_grid), len(self.soc_grid))
            )
            raise MapError(msg)

        vmin, vmax = const.ocv_band
        for j, h in enumerate(self.h_grid):
            row = self.ocv_values[j]
            if not np.all(np.isfinite(row)):
                raise MapError("slice H={} contains non-finite OCV values.".format(h))
            out = np.nonzero((row < vmin) | (row > vmax))[0]
            if len(out):
                msg = "slice H={} has OCV {} V at SOC knot {} outside [{}, {}] V.".format(
                    h, row[out[0]], self.soc_grid[out[0]], vmin, vmax
                )
                raise MapError(msg)
            dec = np.nonzero(np.diff(row) <= 0)[0]
            if len(dec):
                msg = "slice H={} is not strictly increasing between SOC knots {} and {}.".format(
                    h, self.soc_grid[dec[0]], self.soc_grid[dec[0] + 1]
                )
                raise MapError(msg)

    def _clamp(self, soc, h):
        clamped = bool(np.any(soc < 0.0) or np.any(soc > 1.0) or h < -1.0 or h > 1.0)
        if clamped:
            msg = "OCV map query (soc={}, h={}) outside the grid; clamped.".format(soc, h)
            logger.warning(msg)
        return np.clip(soc, 0.0, 1.0), float(np.clip(h, -1.0, 1.0)), clamped

    def curve(self, h):
        """Return ``(soc_grid, ocv_slice)`` of the surface interpolated at ``h``."""

        h = float(np.clip(h, -1.0, 1.0))
        j = min(np.searchsorted(self.h_grid, h, side="right") - 1, len(self.h_grid) - 2)
        w = (h - self.h_grid[j]) / (self.h_grid[j + 1] - self.h_grid[j])

        return self.soc_grid, (1.0 - w) * self.ocv_values[j] + w * self.ocv_values[j + 1]

    def ocv(self, soc, h, full_output=False):
        """Bilinear OCV at ``(soc, h)``; ``soc`` may be an array.

        Out-of-domain inputs are clamped to the grid boundary; with
        ``full_output=True`` the clamp flag is returned as well.
        """

        soc, h, clamped = self._clamp(soc, h)
        grid, curve = self.curve(h)
        ret = np.interp(soc, grid, curve)

        return (ret, clamped) if full_output else ret

    def invert_soc(self, ocv_est, h, full_output=False):
        """SOC with ``ocv(SOC, h) = ocv_est`` on the interpolated slice.

        OCV values beyond the slice range saturate to SOC 0 or 1; with
        ``full_output=True`` the saturation flag is returned as well.
        """

        grid, curve = self.curve(h)
        saturated = bool(ocv_est < curve[0] or ocv_est > curve[-1])
        soc = float(np.interp(ocv_est, curve, grid))

        if saturated:
            msg = "OCV {:.6f} V outside slice H={:.3f} range; SOC saturated at {}.".format(ocv_est, h, soc)
            logger.debug(msg)

        return (soc, saturated) if full_output else soc

    def inv_slope(self, h, soc):
        """dSOC/dOCV [fraction/V] from a central difference of the interpolated
        slice, capped at ``inv_slope_ceiling``."""

        lo = max(soc - self._dsoc, 0.0)
        hi = min(soc + self._dsoc, 1.0)

        grid, curve = self.curve(h)
        docv = np.interp(hi, grid, curve) - np.interp(lo, grid, curve)

        if docv * self.inv_slope_ceiling <= (hi - lo):
            return self.inv_slope_ceiling

        return (hi - lo) / docv


def synthetic_ocv(soc, h, offset=0.0, soc_warp=0.0):
    """Analytic LFP-like OCV fixture: steep ends, flat middle, +-15 mV hysteresis.

    ``soc_warp`` bends the SOC axis by up to ``soc_warp`` at mid-range
    (endpoints fixed); ``offset`` shifts the whole surface [V].
    """

    s = soc + 4.0 * soc_warp * soc * (1.0 - soc)
    p = const.ocv_steep_power

    return (
        const.ocv_mid
        + offset
        + const.ocv_linear * (s - 0.5)
        + const.ocv_steep * (s**p - (1.0 - s) ** p)
        + const.ocv_hysteresis * h
    )


def synthetic_map(nsoc=const.map_nsoc, nh=const.map_nh, offset=0.0, soc_warp=0.0, **kwargs):
    """Sample :func:`synthetic_ocv` on an ``nh`` x ``nsoc`` grid."""

    soc_grid = np.linspace(0.0, 1.0, nsoc)
    h_grid = np.linspace(-1.0, 1.0, nh)
    values = synthetic_ocv(soc_grid[np.newaxis, :], h_grid[:, np.newaxis], offset=offset, soc_warp=soc_warp)

    return OcvMap(soc_grid, h_grid, values, **kwargs)


def load_map(source, **kwargs):
    """Read and validate a map CSV file.

    :param source: path of the map file
    :return: :class:`OcvMap`
    """

    with open(source, "r", encoding="utf-8") as fl:
        header = fl.readline().strip().split(",")
        if not header or header[0].strip() != "soc":
            raise MapError("{}: first header field must be 'soc', got '{}'.".format(source, header[0]))
        try:
            h_grid = np.array([float(x) for x in header[1:]])
            table = np.loadtxt(fl, delimiter=",", ndmin=2)
        except ValueError as err:
            raise MapError("{}: cannot parse map file: {}".format(source, err))

    if table.shape[1] != len(h_grid) + 1:
        msg = "{}: rows have {} columns, header announces {} H knots.".format(source, table.shape[1], len(h_grid))
        raise MapError(msg)

    return OcvMap(table[:, 0], h_grid, table[:, 1:].T, **kwargs)


def save_map(ocv_map, fname):
    """Write ``ocv_map`` in the map CSV format."""

    header = "soc," + ",".join("{:.9f}".format(h) for h in ocv_map.h_grid)
    table = np.column_stack([ocv_map.soc_grid, ocv_map.ocv_values.T])
    np.savetxt(fname, table, delimiter=",", fmt="%.9f", header=header, comments="", encoding="utf-8")


def default_map(**kwargs):
    """The synthetic fixture map shipped with sockit."""
    return load_map(sockit.__path__[0] + "/datafiles/synthetic_ocv_map.csv", **kwargs)
