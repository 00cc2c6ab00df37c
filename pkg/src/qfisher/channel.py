"""Kraus channels and their affine action on generalized Bloch vectors.

A trace-preserving map ``E(rho) = sum_i M_i rho M_i^dag`` acts on Bloch
vectors as ``theta -> A theta + c`` with

    A_ij = Tr(lambda_i E(lambda_j)) / 2,    c_i = Tr(lambda_i E(I)) / N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .errors import InvalidChannelError, LengthMismatchError
from .su_basis import GeneratorBasis, ObservableRepr, build_generators

INJECTIVITY_TOL = 1e-9
TP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus: np.ndarray  # shape (K, N, N)

    def __post_init__(self):
        k = np.array(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[1] != k.shape[2]:
            raise InvalidChannelError(f"Kraus operators must be square matrices, got shape {k.shape}")
        if k.shape[1] < 2:
            raise InvalidChannelError("Kraus operators must act on a space of dimension >= 2")
        completeness = np.einsum("kji,kjl->il", k.conj(), k)
        err = np.abs(completeness - np.eye(k.shape[1])).max()
        if err > TP_TOL:
            raise InvalidChannelError(
                f"channel is not trace preserving: max |sum M^dag M - I| = {err:.3e}"
            )
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @cached_property
    def affine(self) -> "AffineChannel":
        return affine_repr(self, build_generators(self.dim))


@dataclass(frozen=True, eq=False)
class AffineChannel:
    A: np.ndarray
    c: np.ndarray
    injectivity_tol: float = field(default=INJECTIVITY_TOL)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        c = np.array(self.c, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or c.shape != (A.shape[0],):
            raise LengthMismatchError(f"incompatible affine data: A {A.shape}, c {c.shape}")
        A.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.size + 1)))

    @cached_property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    @property
    def min_singular_value(self) -> float:
        return float(self.singular_values[-1])

    @property
    def condition_number(self) -> float:
        smin = self.min_singular_value
        return float(self.singular_values[0] / smin) if smin > 0 else np.inf

    @property
    def injective(self) -> bool:
        return self.min_singular_value > self.injectivity_tol

    def __call__(self, theta) -> np.ndarray:
        return self.A @ np.asarray(theta, dtype=float) + self.c


def _check_dim(ch: KrausChannel, m):
    if m.shape != (ch.dim, ch.dim):
        raise LengthMismatchError(f"channel acts on dimension {ch.dim}, got matrix of shape {m.shape}")


def apply(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    _check_dim(ch, rho)
    return np.einsum("kab,bc,kdc->ad", ch.kraus, rho, ch.kraus.conj())


def adjoint_apply(ch: KrausChannel, Y) -> np.ndarray:
    """Heisenberg-picture map ``sum_i M_i^dag Y M_i``."""
    Y = np.asarray(Y, dtype=complex)
    _check_dim(ch, Y)
    return np.einsum("kba,bc,kcd->ad", ch.kraus.conj(), Y, ch.kraus)


def affine_repr(ch: KrausChannel, basis: GeneratorBasis, injectivity_tol: float = INJECTIVITY_TOL) -> AffineChannel:
    if basis.dim != ch.dim:
        raise LengthMismatchError(f"basis is su({basis.dim}) but channel acts on dimension {ch.dim}")
    lam = basis.generators
    M = ch.kraus
    mapped = np.einsum("kab,jbc,kdc->jad", M, lam, M.conj())
    A = np.einsum("iab,jba->ij", lam, mapped).real / 2.0
    e_id = np.einsum("kab,kcb->ac", M, M.conj())
    c = np.einsum("iab,ba->i", lam, e_id).real / ch.dim
    return AffineChannel(A, c, injectivity_tol)


def adjoint_affine(ach: AffineChannel, obs: ObservableRepr) -> ObservableRepr:
    """Coefficients of ``E^dag(Y)``: ``(y0 + y.c, A^T y)``."""
    if len(obs.x) != ach.size:
        raise LengthMismatchError(f"observable has {len(obs.x)} coefficients, channel expects {ach.size}")
    return ObservableRepr(obs.x0 + float(obs.x @ ach.c), ach.A.T @ obs.x)


def check_injective(ach: AffineChannel, tol: float | None = None) -> bool:
    tol = ach.injectivity_tol if tol is None else tol
    return ach.min_singular_value > tol


def compose(second: AffineChannel, first: AffineChannel) -> AffineChannel:
    """Affine data of ``second o first`` (``first`` acts first)."""
    if second.size != first.size:
        raise LengthMismatchError(f"cannot compose channels of sizes {second.size} and {first.size}")
    return AffineChannel(second.A @ first.A, second.A @ first.c + second.c,
                         min(second.injectivity_tol, first.injectivity_tol))


def compose_kraus(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    if second.dim != first.dim:
        raise LengthMismatchError(f"cannot compose channels on dimensions {second.dim} and {first.dim}")
    prods = np.einsum("aij,bjk->abik", second.kraus, first.kraus)
    return KrausChannel(prods.reshape(-1, first.dim, first.dim))


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel(np.eye(dim)[None])


def unitary_channel(U) -> KrausChannel:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidChannelError(f"unitary must be a square matrix, got shape {U.shape}")
    if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > TP_TOL:
        raise InvalidChannelError("matrix is not unitary")
    return KrausChannel(U[None])


def rotation_x(angle: float) -> KrausChannel:
    """Qubit rotation ``exp(-i angle sigma_x / 2)``."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    return unitary_channel(expm(-0.5j * angle * sx))


def dephasing(gamma: float) -> KrausChannel:
    """Qubit dephasing scaling coherences by ``exp(-gamma)``.

    ``gamma`` may be ``inf`` (complete dephasing).
    """
    if gamma < 0:
        raise InvalidChannelError(f"dephasing exponent must be >= 0, got {gamma}")
    q = np.exp(-gamma)
    sz = np.diag([1.0, -1.0]).astype(complex)
    return KrausChannel([np.sqrt((1 + q) / 2) * np.eye(2), np.sqrt((1 - q) / 2) * sz])


def dephasing_affine(gamma: float) -> AffineChannel:
    """Closed form of :func:`dephasing` without building Kraus operators."""
    q = np.exp(-gamma)
    return AffineChannel(np.diag([q, q, 1.0]), np.zeros(3))


def _weyl_operators(dim):
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    ops = []
    for a in range(dim):
        for b in range(dim):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return ops


def depolarizing(p: float, dim: int = 2) -> KrausChannel:
    """``E(rho) = p rho + (1 - p) I / N`` for ``0 <= p <= 1``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidChannelError(f"depolarizing parameter must lie in [0, 1], got {p}")
    ops = _weyl_operators(dim)
    w = (1.0 - p) / dim**2
    kraus = [np.sqrt(p + w) * ops[0]] + [np.sqrt(w) * u for u in ops[1:]]
    return KrausChannel(kraus)


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidChannelError(f"damping probability must lie in [0, 1], got {gamma}")
    m0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    m1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausChannel([m0, m1])


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(dim: int, rng: np.random.Generator, n_kraus: int = 3, noise: float = 0.5) -> KrausChannel:
    """Random CPTP map ``(1 - noise) U . U^dag + noise * (random Stiefel channel)``.

    Mixing in a unitary keeps A comfortably invertible for ``noise < 1``.
    """
    z = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    iso, _ = np.linalg.qr(z)
    noisy = iso.reshape(n_kraus, dim, dim)
    U = random_unitary(dim, rng)
    kraus = [np.sqrt(1 - noise) * U] + [np.sqrt(noise) * m for m in noisy]
    return KrausChannel(kraus)
