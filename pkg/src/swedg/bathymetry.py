"""Bathymetry sources: analytic callables and ASCII raster grids.

Raster data follow the ASCII-grid convention (ncols/nrows/xllcorner/
yllcorner/cellsize/nodata_value header, then nrows lines of ncols values,
first line = northernmost row). Queries interpolate bilinearly between
pixel centers; an optional clamp z_b := max(z_b, clamp) mirrors the common
practice of flooring very shallow areas to a minimum depth.
"""

import numpy as np

from .errors import ConfigError, IOFailure

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                "nodata_value")


class RasterBathymetry:
    """Bilinear evaluator over a regular pixel grid of depth values."""

    def __init__(self, values, xll, yll, cellsize, nodata=None, clamp=None):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 2:
            raise ConfigError("raster values must be a 2D grid")
        if cellsize <= 0:
            raise ConfigError(f"raster cellsize must be positive, got {cellsize}")
        self.xll = float(xll)
        self.yll = float(yll)
        self.cellsize = float(cellsize)
        self.nodata = nodata
        self.clamp = clamp
        ny, nx = self.values.shape
        # pixel-center coordinates
        self.xc = self.xll + (np.arange(nx) + 0.5) * self.cellsize
        self.yc = self.yll + (np.arange(ny) + 0.5) * self.cellsize

    @property
    def extent(self):
        ny, nx = self.values.shape
        return (self.xll, self.xll + nx * self.cellsize,
                self.yll, self.yll + ny * self.cellsize)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x0, x1, y0, y1 = self.extent
        if np.any(x < x0) or np.any(x > x1) or np.any(y < y0) or np.any(y > y1):
            raise ConfigError("bathymetry query outside the raster extent")
        # clamp to the pixel-center hull, then bilinear between centers
        xi = np.clip(x, self.xc[0], self.xc[-1])
        yi = np.clip(y, self.yc[0], self.yc[-1])
        ix = np.clip(((xi - self.xc[0]) / self.cellsize).astype(int), 0,
                     len(self.xc) - 2)
        iy = np.clip(((yi - self.yc[0]) / self.cellsize).astype(int), 0,
                     len(self.yc) - 2)
        tx = (xi - self.xc[ix]) / self.cellsize
        ty = (yi - self.yc[iy]) / self.cellsize
        v00 = self.values[iy, ix]
        v10 = self.values[iy, ix + 1]
        v01 = self.values[iy + 1, ix]
        v11 = self.values[iy + 1, ix + 1]
        if self.nodata is not None:
            for v in (v00, v10, v01, v11):
                if np.any(v == self.nodata):
                    raise ConfigError("nodata raster value inside the "
                                      "queried domain")
        out = ((1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10
               + (1 - tx) * ty * v01 + tx * ty * v11)
        if self.clamp is not None:
            out = np.maximum(out, self.clamp)
        return out


def load_raster(path, clamp=None):
    """Read an ASCII-grid raster file into a :class:`RasterBathymetry`."""
    header = {}
    try:
        with open(path) as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise IOFailure(f"cannot read raster {path}: {exc}") from exc
    idx = 0
    while idx < len(lines):
        parts = lines[idx].split()
        if len(parts) == 2 and parts[0].lower() in _HEADER_KEYS:
            header[parts[0].lower()] = parts[1]
            idx += 1
        else:
            break
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise ConfigError(f"raster {path}: missing header field {key!r}")
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        xll = float(header["xllcorner"])
        yll = float(header["yllcorner"])
        cell = float(header["cellsize"])
        nodata = (float(header["nodata_value"])
                  if "nodata_value" in header else None)
    except ValueError as exc:
        raise ConfigError(f"raster {path}: malformed header: {exc}") from exc
    body = " ".join(lines[idx:]).split()
    try:
        vals = np.array(body, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"raster {path}: non-numeric value: {exc}") from exc
    if vals.size != ncols * nrows:
        raise ConfigError(f"raster {path}: expected {ncols * nrows} values, "
                          f"got {vals.size}")
    # file rows run north to south; store south-up for ascending y
    grid = vals.reshape(nrows, ncols)[::-1]
    return RasterBathymetry(grid, xll, yll, cell, nodata=nodata, clamp=clamp)


def save_raster(path, raster: RasterBathymetry):
    ny, nx = raster.values.shape
    try:
        with open(path, "w") as fh:
            fh.write(f"ncols {nx}\n")
            fh.write(f"nrows {ny}\n")
            fh.write(f"xllcorner {float(raster.xll)!r}\n")
            fh.write(f"yllcorner {float(raster.yll)!r}\n")
            fh.write(f"cellsize {float(raster.cellsize)!r}\n")
            if raster.nodata is not None:
                fh.write(f"nodata_value {float(raster.nodata)!r}\n")
            for row in raster.values[::-1]:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write raster {path}: {exc}") from exc
