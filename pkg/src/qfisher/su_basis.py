"""Generalized Gell-Mann generators of su(N) and Bloch-coordinate conversions.

States are written as ``rho = I/N + theta . lambda / 2`` and observables as
``X = x0 I + x . lambda``, with generators normalized so that
``Tr(lambda_i lambda_j) = 2 delta_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidDimensionError, InvalidStateError, LengthMismatchError

SPARSE_TOL = 1e-12


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    dim: int
    generators: np.ndarray  # shape (N**2 - 1, N, N)

    @property
    def size(self):
        return self.dim * self.dim - 1

    def __len__(self):
        return self.size


@dataclass(frozen=True)
class StructureConstants:
    """Sparse f (antisymmetric) and g (symmetric) tensors keyed by (i, j, k)."""

    dim: int
    f: dict
    g: dict

    @property
    def size(self):
        return self.dim * self.dim - 1

    def dense_f(self):
        return _densify(self.f, self.size)

    def dense_g(self):
        return _densify(self.g, self.size)


def _densify(entries, n):
    out = np.zeros((n, n, n))
    for (i, j, k), v in entries.items():
        out[i, j, k] = v
    return out


@dataclass(frozen=True, eq=False)
class ObservableRepr:
    """Coefficients of ``X = x0 I + x . lambda``."""

    x0: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "x", _frozen(np.asarray(self.x, dtype=float)))

    def to_matrix(self, basis: GeneratorBasis) -> np.ndarray:
        _check_length(self.x, basis)
        return self.x0 * np.eye(basis.dim) + np.tensordot(self.x, basis.generators, axes=1)

    def shifted(self, y0: float) -> "ObservableRepr":
        return ObservableRepr(self.x0 + y0, self.x)


def _check_length(vec, basis):
    if len(vec) != basis.size:
        raise LengthMismatchError(
            f"expected a vector of length {basis.size} for su({basis.dim}), got {len(vec)}"
        )


def dim_from_length(n: int) -> int:
    """Recover N from a Bloch-vector length N**2 - 1."""
    dim = int(round(np.sqrt(n + 1)))
    if dim * dim - 1 != n or dim < 2:
        raise LengthMismatchError(f"length {n} is not N**2 - 1 for any N >= 2")
    return dim


@lru_cache(maxsize=None)
def build_generators(dim: int) -> GeneratorBasis:
    """Generalized Gell-Mann matrices for su(dim).

    Order: symmetric ``E_jk + E_kj`` (j < k, lexicographic), antisymmetric
    ``-i(E_jk - E_kj)`` (same order), then diagonal members for l = 1..N-1.
    For N = 2 this gives (sigma_x, sigma_y, sigma_z).
    """
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {dim!r}")
    dim = int(dim)
    pairs = [(j, k) for j in range(dim) for k in range(j + 1, dim)]
    gens = []
    for j, k in pairs:
        m = np.zeros((dim, dim), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        gens.append(m)
    for j, k in pairs:
        m = np.zeros((dim, dim), dtype=complex)
        m[j, k] = -1j
        m[k, j] = 1j
        gens.append(m)
    for l in range(1, dim):
        d = np.zeros(dim)
        d[:l] = 1.0
        d[l] = -l
        gens.append(np.sqrt(2.0 / (l * (l + 1))) * np.diag(d).astype(complex))
    return GeneratorBasis(dim, _frozen(np.stack(gens)))


def _compute_structure_constants(dim, lam):
    # T_abc = Tr(l_a l_b l_c); the trace formulas reduce to f = Im(T)/2, g = Re(T)/2.
    t = np.einsum("aij,bjk,cki->abc", lam, lam, lam)

    def sparse(dense):
        return {tuple(int(i) for i in idx): float(dense[tuple(idx)])
                for idx in np.argwhere(np.abs(dense) >= SPARSE_TOL)}

    return StructureConstants(dim, sparse(t.imag / 2.0), sparse(t.real / 2.0))


@lru_cache(maxsize=None)
def _structure_constants_for_dim(dim):
    return _compute_structure_constants(dim, build_generators(dim).generators)


def structure_constants(basis: GeneratorBasis) -> StructureConstants:
    """``f_ijk = Tr([l_i, l_j] l_k) / 4i`` and ``g_ijk = Tr({l_i, l_j} l_k) / 4``."""
    if basis is build_generators(basis.dim):
        return _structure_constants_for_dim(basis.dim)
    return _compute_structure_constants(basis.dim, basis.generators)


def g_matrix(s, sc: StructureConstants) -> np.ndarray:
    """``[G_s]_ij = sum_k g_ijk s_k``."""
    s = np.asarray(s, dtype=float)
    if len(s) != sc.size:
        raise LengthMismatchError(f"expected length {sc.size}, got {len(s)}")
    out = np.zeros((sc.size, sc.size))
    for (i, j, k), v in sc.g.items():
        out[i, j] += v * s[k]
    return out


def state_to_bloch(rho, basis: GeneratorBasis, atol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise LengthMismatchError(f"expected a {basis.dim}x{basis.dim} matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol, rtol=0):
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise InvalidStateError(f"density matrix has trace {tr!r}, expected 1")
    return np.einsum("ij,aji->a", rho, basis.generators).real


def bloch_to_state(theta, basis: GeneratorBasis, validate_state: bool = False) -> np.ndarray:
    """Rebuild ``I/N + theta . lambda / 2``.

    Positivity is only checked when ``validate_state`` is set, so that
    perturbed Bloch vectors just outside the state space can still be mapped.
    """
    theta = np.asarray(theta, dtype=float)
    _check_length(theta, basis)
    rho = np.eye(basis.dim, dtype=complex) / basis.dim + 0.5 * np.tensordot(theta, basis.generators, axes=1)
    if validate_state:
        lo = np.linalg.eigvalsh(rho).min()
        if lo < -1e-10:
            raise InvalidStateError(f"Bloch vector is outside the state space (min eigenvalue {lo:.3e})")
    return rho


def observable_to_coeffs(X, basis: GeneratorBasis) -> ObservableRepr:
    X = np.asarray(X, dtype=complex)
    if X.shape != (basis.dim, basis.dim):
        raise LengthMismatchError(f"expected a {basis.dim}x{basis.dim} matrix, got shape {X.shape}")
    if not np.allclose(X, X.conj().T, atol=1e-10, rtol=0):
        raise InvalidStateError("observable is not Hermitian")
    x0 = np.trace(X).real / basis.dim
    x = np.einsum("ij,aji->a", X, basis.generators).real / 2.0
    return ObservableRepr(x0, x)


def expectation(obs: ObservableRepr, theta) -> float:
    """``<X> = x0 + x . theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != obs.x.shape:
        raise LengthMismatchError(f"observable has {len(obs.x)} coefficients, state has {len(theta)}")
    return obs.x0 + float(obs.x @ theta)


def is_valid_state(theta, basis: GeneratorBasis, tol: float = 1e-10) -> bool:
    return np.linalg.eigvalsh(bloch_to_state(theta, basis)).min() >= -tol
