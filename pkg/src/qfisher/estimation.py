"""Classical and SLD Fisher information about an expectation value behind noise.

Everything works in Bloch coordinates. A measurement element is written
``E_k = e0_k I + v_k . lambda`` so that on the measured state with Bloch
vector ``s = A theta + c`` the outcome probability is ``p_k = e0_k + v_k . s``
and its gradient with respect to ``theta`` is ``A^T v_k``.

The optimal measurement for ``<X>`` is the spectral measurement of the
observable ``Y`` solving ``E^dag(Y) = X``; its Fisher information equals
``1 / Var(Y)`` on the measured state and saturates the SLD bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import AffineChannel
from .errors import (
    AccuracyError,
    BoundaryStateError,
    DegenerateObservableError,
    IllConditionedChannelWarning,
    InvalidProbabilityError,
    InvalidStateError,
    LengthMismatchError,
    SingularChannelError,
    UnsupportedBaselineError,
)
from .su_basis import (
    GeneratorBasis,
    ObservableRepr,
    StructureConstants,
    bloch_to_state,
    build_generators,
    dim_from_length,
    g_matrix,
    structure_constants,
)

P_FLOOR = 1e-12
EIG_CUTOFF = 1e-10
SUPPORT_TOL = 1e-8
RANK_TOL = 1e-10
COND_WARN = 1e8
OPTIMALITY_RTOL = 1e-8
# Fisher matrices scale like cond(A)^2; past this the eigenvalue cutoff drops x from the support.
VERIFY_COND = EIG_CUTOFF ** -0.5


@dataclass(frozen=True, eq=False)
class POVM:
    """Measurement elements together with their coefficient form."""

    elements: np.ndarray  # (K, N, N)
    e0: np.ndarray  # (K,)
    v: np.ndarray  # (K, N**2 - 1)

    @classmethod
    def from_elements(cls, elements, basis: GeneratorBasis | None = None, atol: float = 1e-10) -> "POVM":
        elements = np.asarray(elements, dtype=complex)
        dim = elements.shape[-1]
        basis = basis or build_generators(dim)
        if np.abs(elements.sum(axis=0) - np.eye(dim)).max() > atol:
            raise InvalidProbabilityError("POVM elements do not sum to the identity")
        for k, e in enumerate(elements):
            if np.abs(e - e.conj().T).max() > atol:
                raise InvalidProbabilityError(f"POVM element {k} is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -atol:
                raise InvalidProbabilityError(f"POVM element {k} is not positive semidefinite")
        e0 = np.trace(elements, axis1=1, axis2=2).real / dim
        v = np.einsum("kij,aji->ka", elements, basis.generators).real / 2.0
        return cls(elements, e0, v)

    def __len__(self):
        return len(self.e0)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Spectral projectors ``P_i = (r_i / N) I + v_i . lambda`` and the eigenvalues they belong to."""

    projectors: np.ndarray  # (K, N, N)
    eigenvalues: np.ndarray  # (K,) ascending, y0 shift excluded
    ranks: np.ndarray  # (K,)
    v: np.ndarray  # (K, N**2 - 1)

    @property
    def e0(self) -> np.ndarray:
        return self.ranks / self.projectors.shape[-1]

    @property
    def V(self) -> np.ndarray:
        """Matrix whose columns are the Bloch vectors ``v_i``."""
        return self.v.T

    def as_povm(self) -> POVM:
        return POVM(self.projectors, self.e0, self.v)

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class FisherResult:
    matrix: np.ndarray
    kind: str  # "classical" or "sld"
    support: np.ndarray  # orthonormal columns spanning supp(J)
    excluded: tuple = ()  # outcome indices dropped below the probability floor

    @property
    def pinv(self) -> np.ndarray:
        w, u = np.linalg.eigh(self.matrix)
        keep = w > EIG_CUTOFF * max(w.max(), 0.0)
        return (u[:, keep] / w[keep]) @ u[:, keep].T


@dataclass(frozen=True, eq=False)
class OptimalMeasurement:
    Y: ObservableRepr
    measurement: ProjectiveMeasurement
    j_max: float
    variance: float
    classical_check: float
    sld_check: float | None
    condition_number: float
    diagnostics: dict = field(default_factory=dict)


def _fisher_result(J, kind, excluded=()):
    J = 0.5 * (J + J.T)
    w, u = np.linalg.eigh(J)
    wmax = w.max() if w.size else 0.0
    keep = w > EIG_CUTOFF * wmax if wmax > 0 else np.zeros_like(w, dtype=bool)
    return FisherResult(J, kind, u[:, keep], tuple(excluded))


def outcome_probabilities(e0, v, s) -> np.ndarray:
    return np.asarray(e0) + np.asarray(v) @ np.asarray(s)


def _probabilities_checked(e0, v, s):
    p = outcome_probabilities(e0, v, s)
    if p.min() < -1e-10:
        raise InvalidProbabilityError(f"negative outcome probability {p.min():.3e}")
    return p


def fisher_matrix_povm(povm: POVM, ach: AffineChannel, theta, p_floor: float = P_FLOOR) -> FisherResult:
    """``J_ij = sum_k (dp_k/dtheta_i)(dp_k/dtheta_j) / p_k`` with ``dp_k/dtheta = A^T v_k``."""
    theta = np.asarray(theta, dtype=float)
    if povm.v.shape[1] != ach.size or theta.shape != (ach.size,):
        raise LengthMismatchError("POVM, channel and Bloch vector sizes disagree")
    p = _probabilities_checked(povm.e0, povm.v, ach(theta))
    keep = p >= p_floor
    grads = povm.v[keep] @ ach.A  # rows are (A^T v_k)^T
    J = (grads.T / p[keep]) @ grads
    return _fisher_result(J, "classical", np.flatnonzero(~keep))


def fisher_matrix_projection(pm: ProjectiveMeasurement, ach: AffineChannel, theta,
                             p_floor: float = P_FLOOR) -> FisherResult:
    """``J(P) = A^T K A`` with ``K = sum_i v_i v_i^T / p_i``."""
    theta = np.asarray(theta, dtype=float)
    if pm.v.shape[1] != ach.size or theta.shape != (ach.size,):
        raise LengthMismatchError("measurement, channel and Bloch vector sizes disagree")
    p = _probabilities_checked(pm.e0, pm.v, ach(theta))
    keep = p >= p_floor
    K = (pm.v[keep].T / p[keep]) @ pm.v[keep]
    return _fisher_result(ach.A.T @ K @ ach.A, "classical", np.flatnonzero(~keep))


def fisher_about_x(fr: FisherResult, x, support_tol: float = SUPPORT_TOL) -> float:
    """Scalar information ``[x . J^+ x]^-1``; zero when ``x`` leaves the support of J."""
    x = np.asarray(x, dtype=float)
    xnorm = np.linalg.norm(x)
    if xnorm == 0 or fr.support.shape[1] == 0:
        return 0.0
    inside = fr.support @ (fr.support.T @ x)
    if np.linalg.norm(x - inside) > support_tol * xnorm:
        return 0.0
    return float(1.0 / (x @ fr.pinv @ x))


def generalized_inverse(V, cutoff: float = EIG_CUTOFF) -> np.ndarray:
    """``V^-1 = sum_i eta_i zeta_i^T / s_i`` over the nonzero singular triplets of V."""
    zeta, s, eta_t = np.linalg.svd(V, full_matrices=False)
    keep = s > cutoff * s.max() if s.size and s.max() > 0 else np.zeros_like(s, dtype=bool)
    return (eta_t[keep].T / s[keep]) @ zeta[:, keep].T


def fisher_projection_vq(pm: ProjectiveMeasurement, ach: AffineChannel, theta, x,
                         support_tol: float = SUPPORT_TOL) -> float:
    """Fisher information about ``<X>`` from ``[y . (V^T)^-1 Q V^-1 y]^-1``.

    ``Q_ij = delta_ij p_i - p_i p_j`` and ``y = (A^T)^-1 x``. Independent of the
    ``A^T K A`` route and kept as a cross-check of it.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    y = np.linalg.solve(ach.A.T, x)
    p = _probabilities_checked(pm.e0, pm.v, ach(theta))
    V = pm.V
    Vinv = generalized_inverse(V)
    if np.linalg.norm(y - V @ (Vinv @ y)) > support_tol * np.linalg.norm(y):
        return 0.0
    Q = np.diag(p) - np.outer(p, p)
    alpha = Vinv @ y
    return float(1.0 / (alpha @ Q @ alpha))


def variance(Y: ObservableRepr, state, sc: StructureConstants | None = None) -> float:
    """Variance of ``Y`` on the state with Bloch vector ``state``, in coefficient space.

    ``<Y^2> = y0^2 + 2 y0 y.s + (2/N)|y|^2 + y . G_s y``.
    """
    s = np.asarray(state, dtype=float)
    y = Y.x
    if s.shape != y.shape:
        raise LengthMismatchError(f"observable has {len(y)} coefficients, state has {len(s)}")
    dim = dim_from_length(len(y))
    sc = sc or structure_constants(build_generators(dim))
    mean = Y.x0 + y @ s
    second = Y.x0**2 + 2 * Y.x0 * (y @ s) + (2.0 / dim) * (y @ y) + y @ g_matrix(s, sc) @ y
    return float(second - mean**2)


def _sld_kernel(s, sc):
    dim = sc.dim
    return (2.0 / dim) * np.eye(sc.size) + g_matrix(s, sc) - np.outer(s, s)


def _require_full_rank(s, rank_tol):
    rho = bloch_to_state(s, build_generators(dim_from_length(len(s))))
    lo = np.linalg.eigvalsh(rho).min()
    if lo <= rank_tol:
        raise BoundaryStateError(
            f"measured state is rank deficient (min eigenvalue {lo:.3e}); the SLD Fisher matrix is undefined"
        )


def sld_fisher_matrix(ach: AffineChannel, theta, sc: StructureConstants | None = None,
                      rank_tol: float = RANK_TOL) -> FisherResult:
    """``J^Q = A^T (2/N I + G_s - s s^T)^-1 A`` with ``s = A theta + c``."""
    theta = np.asarray(theta, dtype=float)
    sc = sc or structure_constants(build_generators(ach.dim))
    s = ach(theta)
    _require_full_rank(s, rank_tol)
    kernel = _sld_kernel(s, sc)
    return _fisher_result(ach.A.T @ np.linalg.solve(kernel, ach.A), "sld")


def sld_operators(ach: AffineChannel, theta, sc: StructureConstants | None = None,
                  basis: GeneratorBasis | None = None, rank_tol: float = RANK_TOL) -> list:
    """SLD operators ``L_i = a_i I + b_i . lambda``.

    ``b_i = (2/N I + G_s - s s^T)^-1 A e_i`` and ``a_i = -b_i . s``.
    """
    basis = basis or build_generators(ach.dim)
    sc = sc or structure_constants(basis)
    s = ach(np.asarray(theta, dtype=float))
    _require_full_rank(s, rank_tol)
    B = np.linalg.solve(_sld_kernel(s, sc), ach.A)  # column i is b_i
    ops = []
    for i in range(ach.size):
        b = B[:, i]
        ops.append(ObservableRepr(-b @ s, b).to_matrix(basis))
    return ops


def solve_optimal_observable(ach: AffineChannel, obs: ObservableRepr) -> ObservableRepr:
    """Solve ``E^dag(Y) = X``: ``y = (A^T)^-1 x``, ``y0 = x0 - y . c``."""
    if len(obs.x) != ach.size:
        raise LengthMismatchError(f"observable has {len(obs.x)} coefficients, channel expects {ach.size}")
    if not ach.injective:
        raise SingularChannelError(ach.min_singular_value, ach.injectivity_tol)
    if ach.condition_number > COND_WARN:
        warnings.warn(
            f"affine matrix is ill conditioned (condition number {ach.condition_number:.2e})",
            IllConditionedChannelWarning,
            stacklevel=2,
        )
    y = np.linalg.solve(ach.A.T, obs.x)
    return ObservableRepr(obs.x0 - y @ ach.c, y)


def spectral_measurement(Y: ObservableRepr, basis: GeneratorBasis | None = None,
                         degeneracy_tol: float | None = None) -> ProjectiveMeasurement:
    """Projective measurement onto the eigenspaces of ``y . lambda``.

    Eigenvalues closer than ``degeneracy_tol`` (default ``1e-9`` times the
    spectral range) share one projector and are replaced by their mean.
    """
    basis = basis or build_generators(dim_from_length(len(Y.x)))
    traceless = np.tensordot(Y.x, basis.generators, axes=1)
    w, u = np.linalg.eigh(traceless)
    spread = w[-1] - w[0]
    if spread <= 0:
        raise DegenerateObservableError("observable is proportional to the identity; no direction to measure")
    tol = 1e-9 * spread if degeneracy_tol is None else degeneracy_tol
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    projectors = np.stack([u[:, g] @ u[:, g].conj().T for g in groups])
    eigenvalues = np.array([w[g].mean() for g in groups])
    ranks = np.array([len(g) for g in groups])
    v = np.einsum("kij,aji->ka", projectors, basis.generators).real / 2.0
    return ProjectiveMeasurement(projectors, eigenvalues, ranks, v)


def optimal_measurement(ach: AffineChannel, obs: ObservableRepr, theta,
                        sc: StructureConstants | None = None, verify: bool = True,
                        degeneracy_tol: float | None = None) -> OptimalMeasurement:
    """Optimal projective measurement for ``<X>`` behind the channel.

    The Fisher information ``1 / Var(Y)`` is compared against the classical
    Fisher matrix of the chosen projectors and, for a full-rank measured
    state, against the SLD bound. With ``verify`` set, a relative mismatch
    above ``1e-8`` raises :class:`AccuracyError`. The check is skipped once
    ``cond(A)`` exceeds ``VERIFY_COND``: both Fisher matrices then carry
    eigenvalues below the pseudo-inverse cutoff and read 0 along ``x``.
    """
    theta = np.asarray(theta, dtype=float)
    check_state(theta, ach.dim)
    basis = build_generators(ach.dim)
    sc = sc or structure_constants(basis)
    if not np.any(obs.x):
        raise DegenerateObservableError("observable is proportional to the identity; <X> carries no information")
    Y = solve_optimal_observable(ach, obs)
    pm = spectral_measurement(Y, basis, degeneracy_tol)
    s = ach(theta)
    var = variance(Y, s, sc)
    if var <= 0:
        raise DegenerateObservableError("Y has zero variance on the measured state (eigenstate)")
    j_max = 1.0 / var
    classical = fisher_about_x(fisher_matrix_projection(pm, ach, theta), obs.x)
    try:
        sld = fisher_about_x(sld_fisher_matrix(ach, theta, sc), obs.x)
    except BoundaryStateError:
        sld = None
    cond = ach.condition_number
    resolved = cond <= VERIFY_COND
    if verify and resolved:
        for name, value in (("classical Fisher of P_Y", classical), ("SLD Fisher", sld)):
            if value is not None and abs(value - j_max) > OPTIMALITY_RTOL * j_max:
                raise AccuracyError(f"{name} {value!r} differs from 1/Var(Y) = {j_max!r}")
    diagnostics = {"measured_state": s.tolist(), "min_singular_value": ach.min_singular_value,
                   "cross_check_resolved": bool(resolved)}
    return OptimalMeasurement(Y, pm, j_max, var, classical, sld, cond, diagnostics)


def pauli_tomography_povm() -> POVM:
    """Six-outcome POVM: each of sigma_x, sigma_y, sigma_z measured with probability 1/3."""
    basis = build_generators(2)
    elements = []
    for lam in basis.generators:
        elements.append((np.eye(2) + lam) / 6)
        elements.append((np.eye(2) - lam) / 6)
    return POVM.from_elements(elements, basis)


def pauli_measurement(axis: int) -> ProjectiveMeasurement:
    basis = build_generators(2)
    return spectral_measurement(ObservableRepr(0.0, np.eye(3)[axis]), basis)


def tomography_fisher_matrix(ach: AffineChannel, theta) -> FisherResult:
    """``(J_x + J_y + J_z) / 3``: samples split equally over the three Pauli bases."""
    if ach.dim != 2:
        raise UnsupportedBaselineError(f"tomography baseline is defined for qubits only, got N = {ach.dim}")
    J = sum(fisher_matrix_projection(pauli_measurement(a), ach, theta).matrix for a in range(3)) / 3
    return _fisher_result(J, "classical")


def tomography_fisher(x, ach: AffineChannel, theta) -> float:
    return fisher_about_x(tomography_fisher_matrix(ach, theta), x)


def compare_tomography(ach: AffineChannel, obs: ObservableRepr, theta) -> dict:
    opt = optimal_measurement(ach, obs, theta)
    j_tomo = tomography_fisher(obs.x, ach, theta)
    return {"j_optimal": opt.j_max, "j_tomography": j_tomo,
            "ratio": opt.j_max / j_tomo if j_tomo > 0 else float("inf")}


def check_state(theta, dim: int, tol: float = 1e-10):
    if len(theta) != dim * dim - 1:
        raise LengthMismatchError(f"Bloch vector has {len(theta)} components, expected {dim * dim - 1} for N = {dim}")
    rho = bloch_to_state(theta, build_generators(dim))
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -tol:
        raise InvalidStateError(f"Bloch vector is not a valid state (min eigenvalue {lo:.3e})")
