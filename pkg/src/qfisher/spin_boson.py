"""Pure-dephasing qubit in an ohmic boson bath, with optional pi-pulse trains.

Units: hbar = 1, frequencies in rad/time, temperature given as
``kT / (hbar omega_c)``. The bath enters only through the decoherence
exponent

    Gamma(t) = 2 int_0^inf dw D(w) / w^2 coth(w / 2kT) |f(w, t)|^2,

where ``f`` is the filter function of the sign-switching function set by the
pulses. Without pulses ``|f|^2 = 2 (1 - cos wt)`` and Gamma reduces to the
free-decay exponent. Each pi pulse flips the switching sign at the pulse
midpoint; the qubit rotation about x itself advances linearly over the pulse
window, so the measured direction moves continuously through each pulse.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre

from . import channel as chmod
from .channel import AffineChannel, INJECTIVITY_TOL
from .errors import BoundaryStateError, InvalidStateError, QuadratureError
from .estimation import (
    fisher_about_x,
    optimal_measurement,
    sld_fisher_matrix,
    solve_optimal_observable,
)
from .su_basis import ObservableRepr

DEFAULT_REL_TOL = 1e-8
CUTOFF_FACTOR = 40.0
CUTOFF_GUARD = 0.25
MAX_DOUBLINGS = 20

MODEL_FLAGS = {
    "pulse_model": "pi_x rotation advancing linearly over each pulse window; "
                   "dephasing switching sign flips at the pulse midpoint",
    "bath_treatment": "exact Gaussian filter-function exponent, no Markov approximation between pulses",
    "frame": "interaction picture; qubit splitting omega_0 does not enter",
}


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath with exponential cutoff, ``D(w) = w exp(-w / omega_c) / 4``.

    ``density`` replaces D(w) when given; it must decay fast enough for the
    cutoff doubling to terminate.
    """

    omega_c: float = 1.0
    kT: float = 0.0
    density: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if not self.kT >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.kT}")

    def spectral_density(self, w):
        if self.density is not None:
            return self.density(w)
        return 0.25 * w * np.exp(-w / self.omega_c)

    def coth_factor(self, w):
        if self.kT == 0:
            return np.ones_like(w)
        return 1.0 / np.tanh(w / (2.0 * self.kT * self.omega_c))


@dataclass(frozen=True)
class PulseSequence:
    """Equally spaced pi_x pulses: pulse k (1-based) starts at ``k dt + (k-1) tau``."""

    delta_t: float
    tau: float = 0.0
    count: int = 0

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if not 0 <= self.tau < self.delta_t:
            raise ValueError(f"pulse duration must satisfy 0 <= tau < delta_t, got {self.tau}")
        if self.count < 0:
            raise ValueError(f"pulse count must be >= 0, got {self.count}")

    @property
    def starts(self) -> np.ndarray:
        k = np.arange(1, self.count + 1)
        return k * self.delta_t + (k - 1) * self.tau

    @property
    def ends(self) -> np.ndarray:
        return self.starts + self.tau

    @property
    def flip_times(self) -> np.ndarray:
        return self.starts + 0.5 * self.tau

    def rotation_angle(self, t: float) -> float:
        """Accumulated x-rotation angle at time ``t``."""
        done = int(np.count_nonzero(self.ends <= t))
        angle = math.pi * done
        if done < self.count:
            start = self.starts[done]
            if start <= t:
                angle += math.pi * (t - start) / self.tau
        return angle


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    gamma: np.ndarray
    A: np.ndarray  # (T, 3, 3)
    c: np.ndarray  # (T, 3)
    theta: np.ndarray
    phi: np.ndarray
    J: np.ndarray
    injective: np.ndarray
    metadata: dict = field(default_factory=dict)


def _segments(t, flips):
    bounds = np.concatenate(([0.0], flips[flips < t], [t]))
    widths = np.diff(bounds)
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    signs = (-1.0) ** np.arange(len(widths))
    return widths, mids, signs


def filter_function_sq(w, t: float, flips=()) -> np.ndarray:
    """``|f(w, t)|^2`` for a switching function flipping sign at ``flips``.

    Each segment contributes ``2i sin(w d / 2) exp(i w m)`` (width d,
    midpoint m), which keeps full relative precision as w -> 0.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    widths, mids, signs = _segments(t, np.asarray(flips, dtype=float))
    amp = signs * 2.0 * np.sin(0.5 * np.outer(w, widths))
    phase = np.outer(w, mids)
    re = (amp * np.cos(phase)).sum(axis=1)
    im = (amp * np.sin(phase)).sum(axis=1)
    return re * re + im * im


def _zero_frequency_limit(bath, t, flips):
    if bath.density is not None or bath.kT == 0:
        return 0.0
    widths, _, signs = _segments(t, np.asarray(flips, dtype=float))
    # 2 D(w)/w^2 coth |f|^2 -> kT omega_c (sum_k s_k d_k)^2 as w -> 0
    return bath.kT * bath.omega_c * float(signs @ widths) ** 2


def _decoherence_integral(t, flips, bath: BathSpec, rel_tol: float) -> float:
    if t == 0:
        return 0.0
    limit0 = _zero_frequency_limit(bath, t, flips)

    def integrand(w):
        w = np.asarray(w, dtype=float)
        safe = np.where(w > 0, w, 1.0)
        val = 2.0 * bath.spectral_density(safe) / safe**2 * bath.coth_factor(safe) * filter_function_sq(safe, t, flips)
        return np.where(w > 0, val, limit0)

    def scalar(w):
        return float(integrand(w)[0])

    # panels no wider than half a period of the slowest carrier
    width = min(math.pi / t, 2.0 * bath.omega_c)
    nodes, weights = roots_legendre(32)

    def panels(a, b):
        edges = np.linspace(a, b, max(1, int(math.ceil((b - a) / width))) + 1)
        return list(zip(edges[:-1], edges[1:]))

    def rough(a, b):
        x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        return 0.5 * (b - a) * float(weights @ integrand(x))

    cutoff = CUTOFF_FACTOR * bath.omega_c * (1.0 + CUTOFF_GUARD)
    scale = abs(sum(rough(a, b) for a, b in panels(0.0, cutoff))) or 1.0

    def integrate(a, b):
        parts = panels(a, b)
        total = err = 0.0
        for lo, hi in parts:
            val, abserr, *_ = quad(scalar, lo, hi, epsabs=1e-3 * rel_tol * scale / len(parts),
                                   epsrel=1e-2 * rel_tol, limit=200, full_output=1)
            total += val
            err += abserr
        return total, err

    total, err = integrate(0.0, cutoff)
    for _ in range(MAX_DOUBLINGS):
        tail = _tail_bound(bath, t, flips, cutoff)
        if tail is not None and tail < 0.1 * rel_tol * abs(total):
            break
        extra, extra_err = integrate(cutoff, 2.0 * cutoff)
        total += extra
        err += extra_err
        cutoff *= 2.0
        if tail is None and abs(extra) < 0.1 * rel_tol * abs(total):
            break
    else:
        raise QuadratureError(total, err, rel_tol)
    if err > rel_tol * abs(total):
        raise QuadratureError(total, err, rel_tol)
    return total


def _tail_bound(bath, t, flips, cutoff):
    """Upper bound on the integral beyond ``cutoff``; None for a custom density."""
    if bath.density is not None:
        return None
    widths, _, _ = _segments(t, np.asarray(flips, dtype=float))
    fmax = (2.0 * len(widths)) ** 2
    coth = float(bath.coth_factor(np.array([cutoff]))[0])
    wc = bath.omega_c
    # int_W^inf e^{-w/wc} coth fmax / (2w) dw <= coth fmax wc e^{-W/wc} / (2W)
    return 0.5 * coth * fmax * wc * math.exp(-cutoff / wc) / cutoff


def gamma0(t: float, bath: BathSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Free-decay exponent ``4 int D(w) (1 - cos wt) / w^2 coth(w / 2kT) dw``."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return _decoherence_integral(float(t), np.empty(0), bath, rel_tol)


def pulsed_gamma(t: float, seq: PulseSequence | None, bath: BathSpec,
                 rel_tol: float = DEFAULT_REL_TOL) -> float:
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    flips = np.empty(0) if seq is None else seq.flip_times
    return _decoherence_integral(float(t), flips, bath, rel_tol)


def dephasing_channel(t: float, bath: BathSpec, rel_tol: float = DEFAULT_REL_TOL,
                      injectivity_tol: float = INJECTIVITY_TOL) -> AffineChannel:
    q = math.exp(-gamma0(t, bath, rel_tol))
    return AffineChannel(np.diag([q, q, 1.0]), np.zeros(3), injectivity_tol)


def _rotation_affine(angle):
    return chmod.rotation_x(angle).affine


def pulsed_channel(t: float, seq: PulseSequence | None, bath: BathSpec,
                   rel_tol: float = DEFAULT_REL_TOL, injectivity_tol: float = INJECTIVITY_TOL,
                   gamma: float | None = None) -> AffineChannel:
    """Affine channel at time ``t``: dephasing by the pulsed exponent, then the pulse rotations."""
    if gamma is None:
        gamma = pulsed_gamma(t, seq, bath, rel_tol)
    q = math.exp(-gamma)
    ch = AffineChannel(np.diag([q, q, 1.0]), np.zeros(3), injectivity_tol)
    if seq is None:
        return ch
    angle = seq.rotation_angle(t)
    full = int(angle // math.pi)
    for _ in range(full):
        ch = compose_keep_tol(_rotation_affine(math.pi), ch, injectivity_tol)
    partial = angle - full * math.pi
    if partial > 0:
        ch = compose_keep_tol(_rotation_affine(partial), ch, injectivity_tol)
    return ch


def compose_keep_tol(second, first, tol):
    out = chmod.compose(second, first)
    return AffineChannel(out.A, out.c, tol)


def observable_for_angle(theta_obs: float) -> ObservableRepr:
    """``X = sin(theta_obs) sigma_x + cos(theta_obs) sigma_z``."""
    return ObservableRepr(0.0, [math.sin(theta_obs), 0.0, math.cos(theta_obs)])


def optimal_angle_free(t: float, theta_obs: float, bath: BathSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Polar angle with ``tan theta(t) = exp(Gamma_0(t)) tan theta_obs``.

    Evaluated as ``atan2(sin theta_obs, exp(-Gamma_0) cos theta_obs)``, the
    continuous branch; for ``theta_obs`` in ``(pi/2, pi]`` it stays in the
    upper half and tends to pi/2 from above.
    """
    g = gamma0(t, bath, rel_tol)
    return math.atan2(math.sin(theta_obs), math.exp(-g) * math.cos(theta_obs))


def _direction(y):
    return math.atan2(math.hypot(y[0], y[1]), y[2]), math.atan2(y[1], y[0]) + 0.0


def measurement_direction(t: float, theta_obs: float, seq: PulseSequence | None, bath: BathSpec,
                          rel_tol: float = DEFAULT_REL_TOL,
                          injectivity_tol: float = INJECTIVITY_TOL) -> tuple[float, float]:
    """Spherical angles ``(theta, phi)`` of the Bloch direction of ``Y``."""
    ach = pulsed_channel(t, seq, bath, rel_tol, injectivity_tol)
    Y = solve_optimal_observable(ach, observable_for_angle(theta_obs))
    return _direction(Y.x)


def _trajectory_point(t, theta_obs, rho0, seq, bath, rel_tol, injectivity_tol):
    g = pulsed_gamma(t, seq, bath, rel_tol)
    ach = pulsed_channel(t, seq, bath, rel_tol, injectivity_tol, gamma=g)
    obs = observable_for_angle(theta_obs)
    if ach.injective:
        opt = optimal_measurement(ach, obs, rho0)
        theta, phi = _direction(opt.Y.x)
        return g, ach, theta, phi, opt.j_max, True
    # Without an inverse, only directions left in the support keep information.
    try:
        J = fisher_about_x(sld_fisher_matrix(ach, rho0), obs.x)
    except BoundaryStateError:
        J = float("nan")
    return g, ach, float("nan"), float("nan"), J, False


def trajectory(grid, theta_obs: float, rho0=None, seq: PulseSequence | None = None,
               bath: BathSpec = BathSpec(), rel_tol: float = DEFAULT_REL_TOL,
               injectivity_tol: float = INJECTIVITY_TOL, threads: int = 1) -> Trajectory:
    """Optimal-measurement direction and maximum Fisher information over a time grid.

    Grid points are independent; ``threads > 1`` evaluates them concurrently
    and the result is identical to the serial one.
    """
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or not np.all(np.isfinite(times)):
        raise ValueError("grid must be a 1-d array of finite non-negative times")
    rho0 = np.zeros(3) if rho0 is None else np.asarray(rho0, dtype=float)
    if rho0.shape != (3,) or np.linalg.norm(rho0) > 1 + 1e-10:
        raise InvalidStateError(f"initial Bloch vector must have length 3 and norm <= 1, got {rho0}")

    def work(t):
        return _trajectory_point(t, theta_obs, rho0, seq, bath, rel_tol, injectivity_tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, times))
    else:
        rows = [work(t) for t in times]
    g, chans, th, ph, J, inj = zip(*rows) if rows else ((),) * 6
    meta = {
        "model": MODEL_FLAGS,
        "theta_obs": theta_obs,
        "initial_state": rho0.tolist(),
        "bath": {"omega_c": bath.omega_c, "kT_over_hbar_omega_c": bath.kT,
                 "spectral_density": "custom" if bath.density else "w exp(-w/omega_c)/4"},
        "pulses": None if seq is None else {"delta_t": seq.delta_t, "tau": seq.tau, "count": seq.count},
        "tolerances": {"quad_rel_tol": rel_tol, "injectivity_tol": injectivity_tol},
    }
    return Trajectory(
        times=times,
        gamma=np.array(g, dtype=float),
        A=np.array([c.A for c in chans]).reshape(-1, 3, 3),
        c=np.array([c.c for c in chans]).reshape(-1, 3),
        theta=np.array(th, dtype=float),
        phi=np.array(ph, dtype=float),
        J=np.array(J, dtype=float),
        injective=np.array(inj, dtype=bool),
        metadata=meta,
    )

