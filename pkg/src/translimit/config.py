"""INI configuration parsing with a strict schema.

Sections: [grid], [coefficients.sigma], [coefficients.gamma], [source],
[boundary], [scattering], [solver], [study].  Unknown sections or keys are
rejected.  Every section is optional; defaults give a unit slab with unit
coefficients, isotropic scattering and zero inflow.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .errors import ValidationError
from .problem import CoefficientField, Grid1D, KernelSpec, ProblemSpec
from .transport import SolverOptions

__all__ = ["StudySpec", "Config", "load_config"]

_FIELD_KEYS = {
    "kind", "value", "offset", "amplitude", "frequency", "phase",
    "breakpoints", "values",
}

_SCHEMA = {
    "grid": {"length", "n_cells"},
    "coefficients.sigma": _FIELD_KEYS,
    "coefficients.gamma": _FIELD_KEYS,
    "source": _FIELD_KEYS,
    "boundary": {"g_left", "g_right"},
    "scattering": {"kernel", "g_factor", "table_path", "n_ordinates",
                   "n_polar", "n_azimuth"},
    "solver": {"scheme", "tolerance", "max_iterations", "acceleration",
               "balance_target"},
    "study": {"eps", "p_norms", "scaling", "mms", "meshes", "reference",
              "floor_cells"},
}


@dataclass(frozen=True)
class StudySpec:
    eps: tuple = ()
    p_norms: tuple = (1.0, 4.0)
    mms: str | None = None
    meshes: tuple = (32, 64, 128, 256)
    reference: str | None = None
    floor_cells: int = 64


@dataclass(frozen=True)
class Config:
    problem: ProblemSpec
    solver: SolverOptions
    study: StudySpec
    n_ordinates: int
    n_polar: int
    n_azimuth: int
    path: str


def _float(section, key, raw, where):
    try:
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"[{where}] {key} = {raw!r} is not a number") from exc


def _float_list(raw, key, where):
    try:
        return tuple(float(tok) for tok in raw.split())
    except ValueError as exc:
        raise ValidationError(f"[{where}] {key} must be a number list") from exc


def _int(raw, key, where):
    try:
        return int(raw)
    except ValueError as exc:
        raise ValidationError(f"[{where}] {key} = {raw!r} is not an integer") from exc


def _coefficient(items, where, default_value):
    if not items:
        return CoefficientField.constant(default_value)
    kind = items.get("kind", "constant")
    allowed = {
        "constant": {"kind", "value"},
        "piecewise": {"kind", "breakpoints", "values"},
        "sinusoid": {"kind", "offset", "amplitude", "frequency", "phase"},
    }
    if kind not in allowed:
        raise ValidationError(f"[{where}] unknown kind {kind!r}")
    extra = set(items) - allowed[kind]
    if extra:
        raise ValidationError(
            f"[{where}] keys {sorted(extra)} do not apply to kind {kind!r}"
        )
    if kind == "constant":
        return CoefficientField.constant(
            _float(where, "value", items.get("value", default_value), where)
        )
    if kind == "piecewise":
        if "breakpoints" not in items or "values" not in items:
            raise ValidationError(f"[{where}] piecewise needs breakpoints and values")
        return CoefficientField.piecewise(
            _float_list(items["breakpoints"], "breakpoints", where),
            _float_list(items["values"], "values", where),
        )
    return CoefficientField.sinusoid(
        offset=_float(where, "offset", items.get("offset", 0.0), where),
        amplitude=_float(where, "amplitude", items.get("amplitude", 0.0), where),
        frequency=_float(where, "frequency", items.get("frequency", 1.0), where),
        phase=_float(where, "phase", items.get("phase", 0.0), where),
    )


def load_config(path):
    """Parse and validate a configuration file into a Config bundle."""
    if not os.path.isfile(path):
        raise ValidationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from exc

    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    for name, items in sections.items():
        if name not in _SCHEMA:
            raise ValidationError(f"unknown config section [{name}]")
        extra = set(items) - _SCHEMA[name]
        if extra:
            raise ValidationError(f"unknown keys {sorted(extra)} in section [{name}]")

    grid_items = sections.get("grid", {})
    grid = Grid1D(
        length=_float("grid", "length", grid_items.get("length", 1.0), "grid"),
        n_cells=_int(grid_items.get("n_cells", 100), "n_cells", "grid"),
    )

    sigma = _coefficient(sections.get("coefficients.sigma", {}),
                         "coefficients.sigma", 1.0)
    gamma = _coefficient(sections.get("coefficients.gamma", {}),
                         "coefficients.gamma", 1.0)
    source = _coefficient(sections.get("source", {}), "source", 1.0)

    bnd = sections.get("boundary", {})
    g_left = _float("boundary", "g_left", bnd.get("g_left", 0.0), "boundary")
    g_right = _float("boundary", "g_right", bnd.get("g_right", 0.0), "boundary")

    sc = sections.get("scattering", {})
    kernel = KernelSpec(
        kind=sc.get("kernel", "isotropic"),
        g_factor=_float("scattering", "g_factor", sc.get("g_factor", 0.0),
                        "scattering"),
        table_path=sc.get("table_path"),
    )
    n_ordinates = _int(sc.get("n_ordinates", 16), "n_ordinates", "scattering")
    n_polar = _int(sc.get("n_polar", 8), "n_polar", "scattering")
    n_azimuth = _int(sc.get("n_azimuth", 16), "n_azimuth", "scattering")

    sv = sections.get("solver", {})
    balance_raw = sv.get("balance_target", "1e-10")
    balance = None if str(balance_raw).lower() == "none" else _float(
        "solver", "balance_target", balance_raw, "solver"
    )
    solver = SolverOptions(
        scheme=sv.get("scheme", "diamond"),
        tolerance=_float("solver", "tolerance", sv.get("tolerance", 1e-10), "solver"),
        max_iterations=_int(sv.get("max_iterations", 200), "max_iterations", "solver"),
        acceleration=sv.get("acceleration", "dsa"),
        balance_target=balance,
    )

    st = sections.get("study", {})
    scaling = st.get("scaling", "diffusive")
    study = StudySpec(
        eps=_float_list(st["eps"], "eps", "study") if "eps" in st else (),
        p_norms=_float_list(st.get("p_norms", "1 4"), "p_norms", "study"),
        mms=st.get("mms"),
        meshes=tuple(
            int(v) for v in _float_list(st.get("meshes", "32 64 128 256"),
                                        "meshes", "study")
        ),
        reference=st.get("reference"),
        floor_cells=_int(st.get("floor_cells", 64), "floor_cells", "study"),
    )

    problem = ProblemSpec(
        grid=grid, sigma=sigma, gamma=gamma, source=source, kernel=kernel,
        g_left=g_left, g_right=g_right, scaling=scaling,
    )
    return Config(
        problem=problem, solver=solver, study=study,
        n_ordinates=n_ordinates, n_polar=n_polar, n_azimuth=n_azimuth,
        path=str(path),
    )
