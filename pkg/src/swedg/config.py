"""Run configuration: strict INI-style schema with defaults and echo.

Unknown sections or keys are hard errors; every recognised key has a typed
parser. ``parse_config`` returns a :class:`RunConfig`; ``echo_config``
renders the fully resolved configuration (defaults included) in the same
syntax, so parse -> echo -> parse is idempotent.
"""

import configparser
import io
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _parse_bool(text):
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {text!r}") from None


def _parse_floats(text, n=None):
    try:
        vals = [float(p) for p in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {len(vals)}: {text!r}")
    return vals


def _parse_points(text):
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        pts.append(tuple(_parse_floats(chunk, 2)))
    return pts


@dataclass
class MeshSpec:
    nx: int = 40
    ny: int = 20
    extent: tuple = (0.0, 2.0, 0.0, 1.0)
    distort_region: Optional[tuple] = None
    distort_amplitude: float = 0.25
    distort_seed: int = 0


@dataclass
class AMRSpec:
    enabled: bool = False
    indicator: str = "vorticity"
    theta_r: float = 1e-4
    theta_c: float = 5e-5
    n_max: int = 3
    h_min: float = 0.0
    cadence: int = 5
    absolute: bool = False


@dataclass
class OutputSpec:
    directory: str = "out"
    cadence: int = 0            # steps between VTK dumps; 0 = only final
    vtk: bool = True
    gauges: list = field(default_factory=list)


@dataclass
class PhysicsSpec:
    g: float = 9.81
    manning_n: float = 0.0
    pressure_form: str = "tumolo"
    tracer: bool = False
    tracer_c: float = 0.0       # dimensionless diffusion constant C
    tracer_initial: float = 1.0


@dataclass
class BathymetrySpec:
    mode: str = "quadrature"
    raster: Optional[str] = None
    clamp: Optional[float] = None


@dataclass
class RunConfig:
    benchmark: str = "vortex"
    scheme: str = "imex-rk32"
    degree: int = 2
    t_end: float = 1.0 / 6.0
    dt: Optional[float] = None
    cfl: Optional[float] = 0.25
    seed: int = 0
    mesh: MeshSpec = field(default_factory=MeshSpec)
    amr: AMRSpec = field(default_factory=AMRSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    physics: PhysicsSpec = field(default_factory=PhysicsSpec)
    bathymetry: BathymetrySpec = field(default_factory=BathymetrySpec)


_SCHEMA = {
    "run": {
        "benchmark": ("benchmark", str),
        "scheme": ("scheme", str),
        "degree": ("degree", int),
        "t_end": ("t_end", float),
        "dt": ("dt", float),
        "cfl": ("cfl", float),
        "seed": ("seed", int),
    },
    "mesh": {
        "nx": ("nx", int),
        "ny": ("ny", int),
        "extent": ("extent", lambda s: tuple(_parse_floats(s, 4))),
        "distort_region": ("distort_region",
                           lambda s: tuple(_parse_floats(s, 4))),
        "distort_amplitude": ("distort_amplitude", float),
        "distort_seed": ("distort_seed", int),
    },
    "physics": {
        "g": ("g", float),
        "manning_n": ("manning_n", float),
        "pressure_form": ("pressure_form", str),
        "tracer": ("tracer", _parse_bool),
        "tracer_c": ("tracer_c", float),
        "tracer_initial": ("tracer_initial", float),
    },
    "amr": {
        "enabled": ("enabled", _parse_bool),
        "indicator": ("indicator", str),
        "theta_r": ("theta_r", float),
        "theta_c": ("theta_c", float),
        "n_max": ("n_max", int),
        "h_min": ("h_min", float),
        "cadence": ("cadence", int),
        "absolute": ("absolute", _parse_bool),
    },
    "output": {
        "directory": ("directory", str),
        "cadence": ("cadence", int),
        "vtk": ("vtk", _parse_bool),
        "gauges": ("gauges", _parse_points),
    },
    "bathymetry": {
        "mode": ("mode", str),
        "raster": ("raster", str),
        "clamp": ("clamp", float),
    },
}

_SECTION_TARGETS = {
    "run": None, "mesh": "mesh", "physics": "physics", "amr": "amr",
    "output": "output", "bathymetry": "bathymetry",
}

_VALID_BENCHMARKS = {"vortex", "lake_rest", "lake_perturbation",
                     "channel_standard", "channel_strong_friction",
                     "channel_irregular", "custom"}
_VALID_SCHEMES = {"imex-rk32", "rk32-explicit", "ssp33", "rk44", "fe-fv"}
_VALID_MODES = {"quadrature", "interpolated", "projected"}
_VALID_INDICATORS = {"vorticity", "tracer_gradient", "bathymetry"}


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    cfg = RunConfig()
    cfg.cfl = None      # sentinel; restored below if neither dt nor cfl set
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        schema = _SCHEMA[section]
        target_name = _SECTION_TARGETS[section]
        target = cfg if target_name is None else getattr(cfg, target_name)
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            attr, conv = schema[key]
            try:
                setattr(target, attr, conv(raw))
            except ConfigError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.benchmark not in _VALID_BENCHMARKS:
        raise ConfigError(f"unknown benchmark {cfg.benchmark!r}; expected one "
                          f"of {sorted(_VALID_BENCHMARKS)}")
    if cfg.scheme not in _VALID_SCHEMES:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}; expected one of "
                          f"{sorted(_VALID_SCHEMES)}")
    if cfg.scheme == "fe-fv":
        if cfg.degree != 0:
            raise ConfigError("scheme fe-fv requires degree 0")
    elif cfg.degree < 1 or cfg.degree > 6:
        raise ConfigError(f"degree must be in 1..6 (or 0 with fe-fv), "
                          f"got {cfg.degree}")
    if cfg.dt is not None and cfg.cfl is not None:
        raise ConfigError("set only one of dt and cfl")
    if cfg.dt is None and cfg.cfl is None:
        cfg.cfl = 0.25
    if cfg.t_end <= 0:
        raise ConfigError("t_end must be positive")
    if cfg.bathymetry.mode not in _VALID_MODES:
        raise ConfigError(f"unknown bathymetry mode {cfg.bathymetry.mode!r}")
    if cfg.amr.indicator not in _VALID_INDICATORS:
        raise ConfigError(f"unknown AMR indicator {cfg.amr.indicator!r}")
    if cfg.amr.enabled and cfg.amr.theta_c > cfg.amr.theta_r:
        warnings.warn("coarsening threshold theta_c exceeds refinement "
                      "threshold theta_r; elements may oscillate between "
                      "refinement states")
    if cfg.mesh.nx < 1 or cfg.mesh.ny < 1:
        raise ConfigError("mesh nx, ny must be >= 1")
    x0, x1, y0, y1 = cfg.mesh.extent
    if x1 <= x0 or y1 <= y0:
        raise ConfigError("mesh extent must satisfy x0 < x1 and y0 < y1")


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(repr(float(v)) for v in value)
    if isinstance(value, list):    # gauge points
        return "; ".join(f"{p[0]!r} {p[1]!r}" for p in value)
    return str(value)


def echo_config(cfg: RunConfig) -> str:
    """Render the resolved config (same schema as parse_config reads)."""
    out = io.StringIO()
    sections = {
        "run": [("benchmark", cfg.benchmark), ("scheme", cfg.scheme),
                ("degree", cfg.degree), ("t_end", cfg.t_end),
                ("seed", cfg.seed)]
        + ([("dt", cfg.dt)] if cfg.dt is not None else [("cfl", cfg.cfl)]),
        "mesh": [("nx", cfg.mesh.nx), ("ny", cfg.mesh.ny),
                 ("extent", cfg.mesh.extent)]
        + ([("distort_region", cfg.mesh.distort_region),
            ("distort_amplitude", cfg.mesh.distort_amplitude),
            ("distort_seed", cfg.mesh.distort_seed)]
           if cfg.mesh.distort_region is not None else []),
        "physics": [("g", cfg.physics.g),
                    ("manning_n", cfg.physics.manning_n),
                    ("pressure_form", cfg.physics.pressure_form),
                    ("tracer", cfg.physics.tracer),
                    ("tracer_c", cfg.physics.tracer_c),
                    ("tracer_initial", cfg.physics.tracer_initial)],
        "amr": [("enabled", cfg.amr.enabled),
                ("indicator", cfg.amr.indicator),
                ("theta_r", cfg.amr.theta_r), ("theta_c", cfg.amr.theta_c),
                ("n_max", cfg.amr.n_max), ("h_min", cfg.amr.h_min),
                ("cadence", cfg.amr.cadence), ("absolute", cfg.amr.absolute)],
        "output": [("directory", cfg.output.directory),
                   ("cadence", cfg.output.cadence), ("vtk", cfg.output.vtk),
                   ("gauges", cfg.output.gauges)],
        "bathymetry": [("mode", cfg.bathymetry.mode)]
        + ([("raster", cfg.bathymetry.raster)]
           if cfg.bathymetry.raster else [])
        + ([("clamp", cfg.bathymetry.clamp)]
           if cfg.bathymetry.clamp is not None else []),
    }
    for name, items in sections.items():
        out.write(f"[{name}]\n")
        for key, value in items:
            if key == "gauges" and not value:
                continue
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")
    return out.getvalue()
