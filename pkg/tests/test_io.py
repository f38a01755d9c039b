"""File I/O: raster bathymetry, VTK fields, CSV diagnostics, line cuts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swedg.bathymetry import RasterBathymetry, load_raster, save_raster
from swedg.discretization import SpatialOperator
from swedg.errors import ConfigError
from swedg.mesh import build_cartesian
from swedg.output import line_cut, write_csv, write_gauge_csv, write_vtk
from swedg.stepping import State


def flat(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def simple_raster():
    # 2x2 pixels over [0,2]x[0,2]: centers (0.5,0.5)..(1.5,1.5)
    vals = np.array([[1.0, 2.0], [3.0, 4.0]])
    return RasterBathymetry(vals, xll=0.0, yll=0.0, cellsize=1.0)


class TestRaster:
    def test_exact_at_pixel_centers(self):
        r = simple_raster()
        assert float(r(0.5, 0.5)) == 1.0
        assert float(r(1.5, 0.5)) == 2.0
        assert float(r(0.5, 1.5)) == 3.0
        assert float(r(1.5, 1.5)) == 4.0

    def test_bilinear_midpoint(self):
        r = simple_raster()
        assert float(r(1.0, 1.0)) == pytest.approx(2.5, abs=1e-14)
        assert float(r(1.0, 0.5)) == pytest.approx(1.5, abs=1e-14)

    def test_constant_beyond_center_hull(self):
        # inside the extent but outside the pixel-center hull: clamped
        r = simple_raster()
        assert float(r(0.0, 0.0)) == 1.0
        assert float(r(2.0, 2.0)) == 4.0

    def test_outside_extent_raises(self):
        r = simple_raster()
        with pytest.raises(ConfigError, match="extent"):
            r(2.5, 1.0)
        with pytest.raises(ConfigError, match="extent"):
            r(1.0, -0.1)

    def test_clamp(self):
        vals = np.array([[-2.0, -0.5], [-1.0, 0.5]])
        r = RasterBathymetry(vals, 0.0, 0.0, 1.0, clamp=-0.8)
        assert float(r(0.5, 0.5)) == -0.8
        assert float(r(1.5, 1.5)) == 0.5

    def test_nodata_in_query_raises(self):
        vals = np.array([[1.0, 2.0, -9999.0], [3.0, 4.0, 5.0]])
        r = RasterBathymetry(vals, 0.0, 0.0, 1.0, nodata=-9999.0)
        with pytest.raises(ConfigError, match="nodata"):
            r(2.0, 0.5)                     # stencil touches the hole
        assert float(r(1.0, 0.5)) == 1.5    # stencil away from the hole

    @given(x=st.floats(0.5, 1.5), y=st.floats(0.5, 1.5),
           eps=st.floats(1e-9, 1e-6))
    @settings(max_examples=40, deadline=None)
    def test_interpolation_continuous(self, x, y, eps):
        r = simple_raster()
        a = float(r(x, y))
        b = float(r(min(x + eps, 1.5), y))
        assert abs(a - b) < 10 * eps

    def test_invalid_cellsize(self):
        with pytest.raises(ConfigError):
            RasterBathymetry(np.ones((2, 2)), 0.0, 0.0, 0.0)

    def test_file_round_trip(self, tmp_path):
        vals = np.arange(12, dtype=float).reshape(3, 4) * 0.25 - 1.0
        r = RasterBathymetry(vals, xll=-1.0, yll=2.0, cellsize=0.5,
                             nodata=-9999.0)
        path = tmp_path / "bed.asc"
        save_raster(path, r)
        r2 = load_raster(path)
        np.testing.assert_array_equal(r2.values, r.values)
        assert r2.xll == r.xll and r2.yll == r.yll
        assert r2.cellsize == r.cellsize and r2.nodata == r.nodata

    def test_row_order_north_to_south(self, tmp_path):
        path = tmp_path / "bed.asc"
        path.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n"
                        "cellsize 1\n9 9\n1 1\n")
        r = load_raster(path)
        # first file row is the northernmost: value 9 at large y
        assert float(r(0.5, 1.5)) == 9.0
        assert float(r(0.5, 0.5)) == 1.0

    def test_missing_header_field(self, tmp_path):
        path = tmp_path / "bad.asc"
        path.write_text("ncols 2\nnrows 2\n1 2 3 4\n")
        with pytest.raises(ConfigError, match="header"):
            load_raster(path)

    def test_wrong_value_count(self, tmp_path):
        path = tmp_path / "bad.asc"
        path.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n"
                        "cellsize 1\n1 2 3\n")
        with pytest.raises(ConfigError, match="expected 4 values"):
            load_raster(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "bad.asc"
        path.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n"
                        "cellsize 1\n1 2 x 4\n")
        with pytest.raises(ConfigError, match="non-numeric"):
            load_raster(path)


@pytest.fixture()
def small_state():
    mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 2, flat)
    zeta = op.interpolate(lambda x, y: 1.0 + 0.1 * x)
    qx = op.interpolate(lambda x, y: 0.2 * y)
    qy = np.zeros_like(zeta)
    conc = op.interpolate(lambda x, y: x + y)
    return op, State(0.0, zeta, qx, qy, conc)


class TestVTK:
    def test_structure_and_determinism(self, tmp_path, small_state):
        op, state = small_state
        p1, p2 = tmp_path / "a.vtk", tmp_path / "b.vtk"
        write_vtk(p1, op, state)
        write_vtk(p2, op, state)
        assert p1.read_bytes() == p2.read_bytes()
        text = p1.read_text()
        assert text.startswith("# vtk DataFile Version 3.0")
        assert "ASCII" in text
        ne, nn = 4, op.ref.n_nodes
        assert f"POINTS {ne * nn} double" in text
        assert f"CELLS {ne * 4} {ne * 4 * 5}" in text   # r^2 = 4 quads each
        for name in ("zeta", "qx", "qy", "c", "z_b", "h"):
            assert f"SCALARS {name} double 1" in text
        # repr round-trip floats, no numpy repr leakage
        assert "np.float64" not in text

    def test_point_values_are_nodal(self, tmp_path, small_state):
        op, state = small_state
        path = tmp_path / "f.vtk"
        write_vtk(path, op, state)
        lines = path.read_text().splitlines()
        i = lines.index("SCALARS zeta double 1") + 2
        vals = [float(lines[i + k]) for k in range(4 * op.ref.n_nodes)]
        np.testing.assert_allclose(np.array(vals).reshape(4, -1),
                                   state.zeta, atol=1e-14)


class TestCSV:
    def test_write_csv_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        rows = [[0, 0.1, 1.0 / 3.0], [1, 0.2, 2.0 / 3.0]]
        write_csv(path, ["step", "t", "v"], rows)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,t,v"
        got = [float(v) for v in lines[1].split(",")]
        assert got[2] == 1.0 / 3.0     # exact repr round-trip

    def test_gauge_csv(self, tmp_path):
        path = tmp_path / "g.csv"
        rows = [
            [(0.0, 1.0, 0.3, 0.4)],
            [(0.1, 1.1, 0.0, 0.0)],
        ]
        write_gauge_csv(path, [(0.5, 0.5)], rows)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,zeta_0,speed_0"
        t0, z0, s0 = (float(v) for v in lines[1].split(","))
        assert s0 == pytest.approx(0.5, abs=1e-15)   # hypot(0.3, 0.4)


class TestLineCut:
    def test_samples_linear_field_exactly(self, small_state):
        op, state = small_state
        rows = line_cut(op, state, y_value=0.5, n_samples=50)
        assert len(rows) == 50
        for (x, z, qx, qy, zb) in rows:
            assert z == pytest.approx(1.0 + 0.1 * x, abs=1e-10)
            assert qx == pytest.approx(0.1, abs=1e-10)
            assert zb == 0.0
