"""Configuration parsing: schema strictness, defaults, echo round-trip."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swedg.config import RunConfig, echo_config, parse_config
from swedg.errors import ConfigError

FULL = """
[run]
benchmark = vortex
scheme = ssp33
degree = 2
t_end = 0.1
dt = 0.001
seed = 3

[mesh]
nx = 10
ny = 5
extent = 0 2 0 1
distort_region = 0.2 1.8 0.1 0.9
distort_amplitude = 0.15
distort_seed = 7

[physics]
g = 9.81
manning_n = 0.02
pressure_form = orlando
tracer = yes
tracer_c = 0.01
tracer_initial = 2.0

[amr]
enabled = true
indicator = vorticity
theta_r = 1e-3
theta_c = 1e-4
n_max = 2
cadence = 4

[output]
directory = results
cadence = 10
vtk = false
gauges = 0.5 0.5; 1.5 0.25

[bathymetry]
mode = interpolated
"""


class TestParsing:
    def test_full_config(self):
        cfg = parse_config(FULL)
        assert cfg.benchmark == "vortex"
        assert cfg.scheme == "ssp33"
        assert cfg.dt == 0.001 and cfg.cfl is None
        assert cfg.mesh.extent == (0.0, 2.0, 0.0, 1.0)
        assert cfg.mesh.distort_region == (0.2, 1.8, 0.1, 0.9)
        assert cfg.physics.tracer is True
        assert cfg.physics.pressure_form == "orlando"
        assert cfg.amr.enabled and cfg.amr.n_max == 2
        assert cfg.output.gauges == [(0.5, 0.5), (1.5, 0.25)]
        assert cfg.bathymetry.mode == "interpolated"

    def test_defaults_when_empty(self):
        cfg = parse_config("")
        assert cfg.benchmark == "vortex"
        assert cfg.cfl == 0.25 and cfg.dt is None
        assert cfg.degree == 2
        assert not cfg.amr.enabled

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="section"):
            parse_config("[solver]\nfoo = 1\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("[run]\ntimestep = 0.1\n")

    def test_bad_number(self):
        with pytest.raises(ConfigError, match=r"\[run\] t_end"):
            parse_config("[run]\nt_end = soon\n")

    def test_bad_bool(self):
        with pytest.raises(ConfigError, match="boolean"):
            parse_config("[physics]\ntracer = maybe\n")

    def test_malformed_ini(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("run]\nbroken\n")

    def test_dt_and_cfl_exclusive(self):
        with pytest.raises(ConfigError, match="one of"):
            parse_config("[run]\ndt = 0.1\ncfl = 0.5\n")

    def test_unknown_benchmark(self):
        with pytest.raises(ConfigError, match="benchmark"):
            parse_config("[run]\nbenchmark = dam_break\n")

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError, match="scheme"):
            parse_config("[run]\nscheme = ab2\n")

    def test_fe_fv_requires_degree_zero(self):
        with pytest.raises(ConfigError, match="degree 0"):
            parse_config("[run]\nscheme = fe-fv\ndegree = 2\n")
        cfg = parse_config("[run]\nscheme = fe-fv\ndegree = 0\n")
        assert cfg.degree == 0

    def test_degree_zero_needs_fe_fv(self):
        with pytest.raises(ConfigError, match="degree"):
            parse_config("[run]\ndegree = 0\n")

    def test_negative_t_end(self):
        with pytest.raises(ConfigError, match="t_end"):
            parse_config("[run]\nt_end = -1\n")

    def test_bad_extent(self):
        with pytest.raises(ConfigError, match="extent"):
            parse_config("[mesh]\nextent = 2 0 0 1\n")

    def test_bad_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            parse_config("[bathymetry]\nmode = nodal\n")

    def test_inverted_amr_thresholds_warn(self):
        with pytest.warns(UserWarning, match="theta_c"):
            parse_config("[amr]\nenabled = true\ntheta_r = 1e-5\n"
                         "theta_c = 1e-3\n")


class TestEcho:
    def test_round_trip_idempotent(self):
        cfg = parse_config(FULL)
        text = echo_config(cfg)
        cfg2 = parse_config(text)
        assert cfg2 == cfg
        assert echo_config(cfg2) == text

    def test_default_round_trip(self):
        cfg = parse_config("")
        assert parse_config(echo_config(cfg)) == cfg

    @given(dt=st.floats(1e-6, 1.0), degree=st.integers(1, 6),
           nx=st.integers(1, 200), manning=st.floats(0.0, 2.0))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_preserves_values(self, dt, degree, nx, manning):
        text = (f"[run]\ndt = {dt!r}\ndegree = {degree}\n"
                f"[mesh]\nnx = {nx}\n[physics]\nmanning_n = {manning!r}\n")
        cfg = parse_config(text)
        cfg2 = parse_config(echo_config(cfg))
        assert cfg2.dt == dt
        assert cfg2.degree == degree
        assert cfg2.mesh.nx == nx
        assert cfg2.physics.manning_n == manning
