"""JSON input formats for channels, observables, states and spin-boson scenarios.

Channel::

    {"kraus": [M_1, M_2, ...]}
    {"builtin": "dephasing", "params": {"gamma": 0.5}}

where each matrix is a list of rows and each entry is a real number or an
``[re, im]`` pair. Builtins: ``identity`` (dim), ``dephasing`` (gamma, the
coherence decay exponent), ``depolarizing`` (p, dim), ``amplitude_damping``
(gamma), ``rotation_x`` (angle), ``unitary`` (matrix).

Observable: ``{"x0": 0.0, "x": [...]}`` or ``{"matrix": [[...]]}``.
State: ``{"bloch": [...]}`` or ``{"matrix": [[...]]}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import channel as chmod
from .errors import QFisherError, InputError
from .estimation import check_state
from .spin_boson import BathSpec, PulseSequence
from .su_basis import ObservableRepr, build_generators, observable_to_coeffs, state_to_bloch


def load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(str(path), "file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(path, f"expected a number, got {value!r}")
    return float(value)


def _entry(value, path) -> complex:
    if isinstance(value, list):
        if len(value) != 2:
            raise InputError(path, "expected [re, im] pair")
        return complex(_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))
    return complex(_number(value, path))


def parse_matrix(obj, path="matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError(path, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise InputError(f"{path}[{i}]", "expected a list")
        rows.append([_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    if any(len(r) != len(rows) for r in rows):
        raise InputError(path, "matrix must be square")
    return np.array(rows, dtype=complex)


def parse_vector(obj, path) -> np.ndarray:
    if not isinstance(obj, list):
        raise InputError(path, "expected a list of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(obj)])


def _param(params, name, path, default=None):
    if name not in params:
        if default is None:
            raise InputError(f"{path}.{name}", "missing parameter")
        return default
    return params[name]


def _require_object(data, path):
    if not isinstance(data, dict):
        raise InputError(path, "expected a JSON object")


def parse_channel(data, path="channel") -> chmod.KrausChannel:
    _require_object(data, path)
    try:
        if "kraus" in data:
            ops = data["kraus"]
            if not isinstance(ops, list) or not ops:
                raise InputError(f"{path}.kraus", "expected a non-empty list of matrices")
            return chmod.KrausChannel([parse_matrix(m, f"{path}.kraus[{i}]") for i, m in enumerate(ops)])
        if "builtin" not in data:
            raise InputError(path, "expected a 'kraus' or 'builtin' key")
        name = data["builtin"]
        params = data.get("params", {})
        _require_object(params, f"{path}.params")
        ppath = f"{path}.params"
        if name == "identity":
            return chmod.identity_channel(int(_number(_param(params, "dim", ppath, 2), f"{ppath}.dim")))
        if name == "dephasing":
            return chmod.dephasing(_number(_param(params, "gamma", ppath), f"{ppath}.gamma"))
        if name == "depolarizing":
            dim = int(_number(_param(params, "dim", ppath, 2), f"{ppath}.dim"))
            return chmod.depolarizing(_number(_param(params, "p", ppath), f"{ppath}.p"), dim)
        if name == "amplitude_damping":
            return chmod.amplitude_damping(_number(_param(params, "gamma", ppath), f"{ppath}.gamma"))
        if name == "rotation_x":
            return chmod.rotation_x(_number(_param(params, "angle", ppath), f"{ppath}.angle"))
        if name == "unitary":
            return chmod.unitary_channel(parse_matrix(_param(params, "matrix", ppath), f"{ppath}.matrix"))
        raise InputError(f"{path}.builtin", f"unknown builtin channel {name!r}")
    except InputError:
        raise
    except QFisherError as exc:
        raise InputError(path, str(exc)) from None


def parse_observable(data, dim: int, path="observable") -> ObservableRepr:
    _require_object(data, path)
    basis = build_generators(dim)
    if "matrix" in data:
        try:
            return observable_to_coeffs(parse_matrix(data["matrix"], f"{path}.matrix"), basis)
        except QFisherError as exc:
            raise InputError(f"{path}.matrix", str(exc)) from None
    if "x" not in data:
        raise InputError(path, "expected 'x' (with optional 'x0') or 'matrix'")
    x = parse_vector(data["x"], f"{path}.x")
    if len(x) != basis.size:
        raise InputError(f"{path}.x", f"expected {basis.size} coefficients for dimension {dim}, got {len(x)}")
    return ObservableRepr(_number(data.get("x0", 0.0), f"{path}.x0"), x)


def parse_state(data, dim: int, path="state") -> np.ndarray:
    _require_object(data, path)
    basis = build_generators(dim)
    try:
        if "bloch" in data:
            theta = parse_vector(data["bloch"], f"{path}.bloch")
            if len(theta) != basis.size:
                raise InputError(f"{path}.bloch", f"expected {basis.size} components, got {len(theta)}")
        elif "matrix" in data:
            theta = state_to_bloch(parse_matrix(data["matrix"], f"{path}.matrix"), basis)
        else:
            raise InputError(path, "expected 'bloch' or 'matrix'")
        check_state(theta, dim)
    except InputError:
        raise
    except QFisherError as exc:
        raise InputError(path, str(exc)) from None
    return theta


@dataclass(frozen=True)
class Scenario:
    bath: BathSpec
    theta_obs: float
    rho0: np.ndarray
    pulses: PulseSequence | None
    times: np.ndarray
    quad_rel_tol: float
    injectivity_tol: float
    omega_0: float | None


def parse_scenario(data, path="scenario") -> Scenario:
    """Spin-boson scenario; times are given in units of ``1 / omega_c``.

    ``{"bath": {"omega_c", "kT_over_hbar_omega_c"}, "observable": {"theta_obs"},
    "initial_state": [bx, by, bz], "pulses": {"delta_t_omega_c", "tau_fraction",
    "count"} | null, "grid": {"t_max_omega_c", "points"}, "tolerances": {...}}``
    """
    _require_object(data, path)
    bath_d = data.get("bath", {})
    _require_object(bath_d, f"{path}.bath")
    omega_c = _number(bath_d.get("omega_c", 1.0), f"{path}.bath.omega_c")
    kT = _number(bath_d.get("kT_over_hbar_omega_c", 0.0), f"{path}.bath.kT_over_hbar_omega_c")
    if omega_c <= 0:
        raise InputError(f"{path}.bath.omega_c", "must be positive")
    if kT < 0:
        raise InputError(f"{path}.bath.kT_over_hbar_omega_c", "must be >= 0")

    obs_d = data.get("observable")
    _require_object(obs_d, f"{path}.observable")
    if "theta_obs" not in obs_d:
        raise InputError(f"{path}.observable.theta_obs", "missing")
    theta_obs = _number(obs_d["theta_obs"], f"{path}.observable.theta_obs")

    rho0 = parse_vector(data.get("initial_state", [0.0, 0.0, 0.0]), f"{path}.initial_state")
    if len(rho0) != 3 or np.linalg.norm(rho0) > 1 + 1e-10:
        raise InputError(f"{path}.initial_state", "expected a qubit Bloch vector with norm <= 1")

    pulses = None
    p_d = data.get("pulses")
    if p_d is not None:
        _require_object(p_d, f"{path}.pulses")
        dt = _number(_param(p_d, "delta_t_omega_c", f"{path}.pulses"), f"{path}.pulses.delta_t_omega_c") / omega_c
        frac = _number(p_d.get("tau_fraction", 0.0), f"{path}.pulses.tau_fraction")
        count = p_d.get("count")
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise InputError(f"{path}.pulses.count", "expected a non-negative integer")
        try:
            pulses = PulseSequence(dt, frac * dt, count)
        except ValueError as exc:
            raise InputError(f"{path}.pulses", str(exc)) from None

    grid = data.get("grid")
    _require_object(grid, f"{path}.grid")
    t_max = _number(_param(grid, "t_max_omega_c", f"{path}.grid"), f"{path}.grid.t_max_omega_c")
    points = grid.get("points")
    if not isinstance(points, int) or isinstance(points, bool) or points < 1:
        raise InputError(f"{path}.grid.points", "expected a positive integer")
    if t_max < 0:
        raise InputError(f"{path}.grid.t_max_omega_c", "must be >= 0")
    times = np.linspace(0.0, t_max / omega_c, points)

    tol = data.get("tolerances", {}) or {}
    _require_object(tol, f"{path}.tolerances")
    quad_rel_tol = _number(tol.get("quad_rel_tol", 1e-8), f"{path}.tolerances.quad_rel_tol")
    inj_tol = _number(tol.get("injectivity_tol", chmod.INJECTIVITY_TOL), f"{path}.tolerances.injectivity_tol")
    for name, v in (("quad_rel_tol", quad_rel_tol), ("injectivity_tol", inj_tol)):
        if not v > 0:
            raise InputError(f"{path}.tolerances.{name}", "must be positive")
    omega_0 = data.get("omega_0")
    if omega_0 is not None:
        omega_0 = _number(omega_0, f"{path}.omega_0")
    return Scenario(BathSpec(omega_c, kT), theta_obs, rho0, pulses, times, quad_rel_tol, inj_tol, omega_0)


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def write_json(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        return text
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
