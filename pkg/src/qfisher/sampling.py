"""Monte Carlo check of the Cramer-Rao bound for estimators of <X>.

Every run draws its outcome counts from an independent substream
``PCG64(SeedSequence(seed, spawn_key=(run,)))``, so results depend only on
``(seed, run)`` and never on execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .channel import AffineChannel
from .errors import InvalidProbabilityError
from .estimation import (
    POVM,
    P_FLOOR,
    ProjectiveMeasurement,
    fisher_about_x,
    fisher_matrix_povm,
    optimal_measurement,
    outcome_probabilities,
)
from .su_basis import ObservableRepr, expectation

PRNG_ALGORITHM = f"numpy {np.__version__} PCG64/SeedSequence(seed, spawn_key=(run,)) + Generator.multinomial"


@dataclass(frozen=True, eq=False)
class SampleRun:
    seed: int
    run: int
    n: int
    counts: np.ndarray
    estimate: float


@dataclass(frozen=True, eq=False)
class EstimationSetup:
    """Outcome distribution plus the estimator value assigned to each outcome."""

    probabilities: np.ndarray
    values: np.ndarray
    fisher: float
    expectation: float
    label: str = ""

    @property
    def single_shot_variance(self) -> float:
        p, w = self.probabilities, self.values
        return float(p @ w**2 - (p @ w) ** 2)


@dataclass(frozen=True)
class CramerRaoReport:
    n: int
    runs: int
    seed: int
    estimate_mean: float
    n_var: float
    inverse_J: float
    z_score: float
    stat_tol: float
    passed: bool

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def rng_for_run(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run,))))


def _checked_distribution(p):
    p = np.asarray(p, dtype=float)
    if p.min() < -1e-10 or abs(p.sum() - 1.0) > 1e-10:
        raise InvalidProbabilityError(f"not a probability distribution (min {p.min():.3e}, sum {p.sum()!r})")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def draw_counts(p, n: int, seed: int, run: int = 0) -> np.ndarray:
    return rng_for_run(seed, run).multinomial(n, _checked_distribution(p))


def sample_outcomes(pm: ProjectiveMeasurement | POVM, state, n: int, seed: int, run: int = 0) -> np.ndarray:
    """Outcome counts of ``n`` shots on the measured state with Bloch vector ``state``."""
    return draw_counts(outcome_probabilities(pm.e0, pm.v, state), n, seed, run)


def estimate_expectation(run: SampleRun, pm: ProjectiveMeasurement, y0: float) -> float:
    """``X* = y0 + sum_i alpha_i count_i / n``: the empirical mean of the eigenvalues of Y."""
    if run.n == 0:
        raise ValueError("cannot estimate from zero samples")
    return float(y0 + pm.eigenvalues @ run.counts / run.n)


def optimal_setup(ach: AffineChannel, obs: ObservableRepr, theta) -> EstimationSetup:
    opt = optimal_measurement(ach, obs, theta)
    pm = opt.measurement
    p = outcome_probabilities(pm.e0, pm.v, ach(theta))
    return EstimationSetup(p, pm.eigenvalues + opt.Y.x0, opt.j_max, expectation(obs, theta), "optimal")


def linear_setup(povm: POVM, ach: AffineChannel, obs: ObservableRepr, theta, label: str = "") -> EstimationSetup:
    """Unbiased linear estimator for an arbitrary POVM.

    Picks outcome values ``w`` with ``sum_k w_k p_k(theta') = <X>(theta')``
    for every ``theta'``, minimizing ``sum_k p_k w_k^2`` at ``theta``. For
    Pauli tomography on a maximally mixed output this attains the POVM's own
    Cramer-Rao bound.
    """
    theta = np.asarray(theta, dtype=float)
    p = _checked_distribution(outcome_probabilities(povm.e0, povm.v, ach(theta)))
    C = np.vstack([ach.A.T @ povm.v.T, povm.e0 + povm.v @ ach.c])
    b = np.concatenate([obs.x, [obs.x0]])
    weight = 1.0 / np.maximum(p, P_FLOOR)
    Cw = C * weight
    w = weight * (C.T @ np.linalg.lstsq(Cw @ C.T, b, rcond=None)[0])
    if np.abs(C @ w - b).max() > 1e-9 * max(1.0, np.abs(b).max()):
        raise ValueError("no unbiased linear estimator exists: x lies outside the measurement's span")
    J = fisher_about_x(fisher_matrix_povm(povm, ach, theta), obs.x)
    return EstimationSetup(p, w, J, expectation(obs, theta), label)


def run_once(setup: EstimationSetup, n: int, seed: int, run: int) -> SampleRun:
    counts = draw_counts(setup.probabilities, n, seed, run)
    return SampleRun(seed, run, n, counts, float(setup.values @ counts / n))


def estimates(setup: EstimationSetup, n: int, runs: int, seed: int, threads: int = 1) -> np.ndarray:
    def one(r):
        return run_once(setup, n, seed, r).estimate

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(one, range(runs))))
    return np.array([one(r) for r in range(runs)])


def cramer_rao_check(setup: EstimationSetup, n: int, runs: int, seed: int,
                     stat_tol: float | None = None, threads: int = 1) -> CramerRaoReport:
    """Compare ``n Var(X*)`` across runs with ``1 / J``.

    The unbiased sample variance over ``runs`` has relative standard error
    ``sqrt(2 / (runs - 1))``; ``stat_tol`` defaults to three of those.
    """
    if not setup.fisher > 0:
        raise ValueError("Cramer-Rao check needs a positive Fisher information")
    if runs < 2:
        raise ValueError("need at least two runs to estimate a variance")
    xs = estimates(setup, n, runs, seed, threads)
    n_var = float(n * xs.var(ddof=1))
    inv_j = 1.0 / setup.fisher
    sigma = np.sqrt(2.0 / (runs - 1))
    tol = 3.0 * sigma if stat_tol is None else stat_tol
    ratio = n_var / inv_j
    return CramerRaoReport(n, runs, seed, float(xs.mean()), n_var, inv_j,
                           float((ratio - 1.0) / sigma), float(tol), bool(abs(ratio - 1.0) <= tol))
