"""Property suites behind ``qfisher validate``.

Each property takes ``(seed, perturb)`` and returns a dict that at least
holds ``"pass"``. ``perturb`` scales A by 1.01 on the classical side of the
optimality equality, which that property must then report as failed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import channel as chmod
from . import ensembles
from .channel import AffineChannel
from .estimation import (
    compare_tomography,
    fisher_about_x,
    fisher_matrix_povm,
    fisher_matrix_projection,
    fisher_projection_vq,
    optimal_measurement,
    pauli_tomography_povm,
    sld_fisher_matrix,
    solve_optimal_observable,
)
from .sampling import cramer_rao_check, linear_setup, optimal_setup
from .spin_boson import BathSpec, gamma0, measurement_direction, observable_for_angle
from .su_basis import build_generators, state_to_bloch, structure_constants


def _rng(seed, name):
    return np.random.default_rng([seed, sum(map(ord, name))])


def _random_instance(dim, rng):
    ach = ensembles.random_channel(dim, rng).affine
    theta = ensembles.random_bloch_vector(dim, rng)
    return ach, theta, ensembles.random_observable(dim, rng)


def prop_algebra(seed, perturb):
    worst = 0.0
    for dim in (2, 3, 4):
        lam = build_generators(dim).generators
        sc = structure_constants(build_generators(dim))
        f, g = sc.dense_f(), sc.dense_g()
        gram = np.einsum("aij,bji->ab", lam, lam)
        worst = max(worst, np.abs(gram - 2 * np.eye(len(lam))).max())
        comm = np.einsum("aij,bjk->abik", lam, lam) - np.einsum("bij,ajk->abik", lam, lam)
        anti = np.einsum("aij,bjk->abik", lam, lam) + np.einsum("bij,ajk->abik", lam, lam)
        worst = max(worst, np.abs(comm - 2j * np.einsum("abk,kij->abij", f, lam)).max())
        rhs = 4 / dim * np.einsum("ab,ij->abij", np.eye(len(lam)), np.eye(dim)) + 2 * np.einsum("abk,kij->abij", g, lam)
        worst = max(worst, np.abs(anti - rhs).max())
    return {"pass": bool(worst <= 1e-10), "max_error": float(worst)}


def prop_channel_consistency(seed, perturb):
    rng = _rng(seed, "channel")
    worst = 0.0
    for dim in (2, 3):
        basis = build_generators(dim)
        for _ in range(10):
            ch = ensembles.random_channel(dim, rng)
            ach = ch.affine
            rho = ensembles.random_density_matrix(dim, rng)
            theta = state_to_bloch(rho, basis)
            out = state_to_bloch(chmod.apply(ch, rho), basis)
            worst = max(worst, np.abs(out - ach(theta)).max())
            Y = ensembles.random_observable(dim, rng).to_matrix(basis)
            lhs = np.trace(chmod.apply(ch, rho) @ Y)
            rhs = np.trace(rho @ chmod.adjoint_apply(ch, Y))
            worst = max(worst, abs(lhs - rhs))
            worst = max(worst, np.abs(chmod.adjoint_apply(ch, np.eye(dim)) - np.eye(dim)).max())
    return {"pass": bool(worst <= 1e-10), "max_error": float(worst)}


def prop_optimality_equality(seed, perturb):
    rng = _rng(seed, "optimality")
    worst = 0.0
    for dim in (2, 3):
        for _ in range(20):
            ach, theta, obs = _random_instance(dim, rng)
            opt = optimal_measurement(ach, obs, theta, verify=False)
            classical_ach = AffineChannel(ach.A * 1.01, ach.c) if perturb else ach
            jp = fisher_about_x(fisher_matrix_projection(opt.measurement, classical_ach, theta), obs.x)
            jq = fisher_about_x(sld_fisher_matrix(ach, theta), obs.x)
            worst = max(worst, abs(jp - jq) / jq, abs(jp * opt.variance - 1.0))
    return {"pass": bool(worst <= 1e-8), "max_rel_error": float(worst), "perturbed": perturb}


def prop_quantum_cramer_rao(seed, perturb):
    rng = _rng(seed, "qcrb")
    lowest = np.inf
    for dim in (2, 3):
        for _ in range(5):
            ach, theta, _ = _random_instance(dim, rng)
            jq = sld_fisher_matrix(ach, theta).matrix
            for _ in range(10):
                povm = ensembles.random_povm(dim, int(rng.integers(2, 2 * dim + 2)), rng)
                jc = fisher_matrix_povm(povm, ach, theta).matrix
                lowest = min(lowest, np.linalg.eigvalsh(jq - jc).min())
    return {"pass": bool(lowest >= -1e-8), "min_eigenvalue": float(lowest)}


def _finite_difference_fisher(povm, ach, theta, h=1e-5):
    def probs(th):
        return povm.e0 + povm.v @ ach(th)

    p = probs(theta)
    grads = np.empty((len(p), len(theta)))
    for i in range(len(theta)):
        e = np.zeros(len(theta))
        e[i] = h
        grads[:, i] = (probs(theta + e) - probs(theta - e)) / (2 * h)
    return (grads.T / p) @ grads


def prop_finite_difference(seed, perturb):
    rng = _rng(seed, "fd")
    worst = 0.0
    for k in range(20):
        dim = 2 + k % 2
        ach, theta, _ = _random_instance(dim, rng)
        povm = ensembles.random_povm(dim, dim + 2, rng)
        closed = fisher_matrix_povm(povm, ach, theta).matrix
        fd = _finite_difference_fisher(povm, ach, theta)
        worst = max(worst, np.abs(fd - closed).max() / np.abs(closed).max())
    return {"pass": bool(worst <= 1e-4), "max_rel_error": float(worst)}


def prop_vq_route(seed, perturb):
    rng = _rng(seed, "vq")
    worst = 0.0
    for dim in (2, 3):
        for _ in range(10):
            ach, theta, obs = _random_instance(dim, rng)
            opt = optimal_measurement(ach, obs, theta)
            vq = fisher_projection_vq(opt.measurement, ach, theta, obs.x)
            worst = max(worst, abs(vq / opt.classical_check - 1.0))
    return {"pass": bool(worst <= 1e-9), "max_rel_error": float(worst)}


def prop_tomography_ratio(seed, perturb):
    worst = 0.0
    for gamma in (0.0, 0.3, 1.0, 2.5):
        for theta_obs in (0.1, 0.25 * math.pi, 1.2):
            res = compare_tomography(chmod.dephasing(gamma).affine, observable_for_angle(theta_obs), np.zeros(3))
            worst = max(worst, abs(res["ratio"] - 3.0))
    return {"pass": bool(worst <= 1e-8), "max_abs_error": float(worst)}


def prop_dephasing_closed_forms(seed, perturb):
    bath = BathSpec(1.0, 10.0)
    theta_obs = 0.25 * math.pi
    worst = 0.0
    for t in np.linspace(0.0, 1.0, 11):
        g = gamma0(t, bath)
        Y = solve_optimal_observable(chmod.dephasing_affine(g), observable_for_angle(theta_obs))
        worst = max(worst, abs(Y.x[0] - math.exp(g) * math.sin(theta_obs)), abs(Y.x[2] - math.cos(theta_obs)))
        th, _ = measurement_direction(t, theta_obs, None, bath)
        worst = max(worst, abs(math.tan(th) / (math.exp(g) * math.tan(theta_obs)) - 1.0))
    return {"pass": bool(worst <= 1e-10), "max_error": float(worst)}


def prop_gamma_quadrature(seed, perturb):
    bath = BathSpec(1.0, 0.0)
    worst = 0.0
    for t in (0.05, 0.5, 2.0, 7.0, 20.0):
        exact = 0.5 * math.log1p(t * t)
        worst = max(worst, abs(gamma0(t, bath) / exact - 1.0))
    return {"pass": bool(worst <= 1e-6), "max_rel_error": float(worst)}


def prop_monte_carlo(seed, perturb):
    ach = chmod.dephasing(0.5).affine
    obs = observable_for_angle(0.25 * math.pi)
    theta = np.zeros(3)
    opt = cramer_rao_check(optimal_setup(ach, obs, theta), 10**6, 200, seed)
    tomo = linear_setup(pauli_tomography_povm(), ach, obs, theta)
    sub = cramer_rao_check(tomo, 10**6, 200, seed)
    sigma = math.sqrt(2.0 / 199)
    j_max = optimal_measurement(ach, obs, theta).j_max
    z_sub = (sub.n_var * j_max - 1.0) / sigma
    return {"pass": bool(opt.passed and z_sub > 4.0), "optimal": opt.to_json(),
            "suboptimal_z_vs_inverse_J_max": float(z_sub)}


PROPERTIES = {
    "algebra_identities": prop_algebra,
    "channel_consistency": prop_channel_consistency,
    "cramer_rao_equality": prop_optimality_equality,
    "dephasing_closed_forms": prop_dephasing_closed_forms,
    "finite_difference_oracle": prop_finite_difference,
    "gamma_quadrature": prop_gamma_quadrature,
    "monte_carlo_bound": prop_monte_carlo,
    "quantum_cramer_rao": prop_quantum_cramer_rao,
    "tomography_ratio": prop_tomography_ratio,
    "vq_route": prop_vq_route,
}


def run_validation(selector: str = "all", seed: int = 0, perturb: bool = False, threads: int = 1) -> dict:
    names = sorted(PROPERTIES) if selector == "all" else sorted(s.strip() for s in selector.split(","))
    unknown = [n for n in names if n not in PROPERTIES]
    if unknown:
        raise KeyError(f"unknown properties: {', '.join(unknown)}; available: {', '.join(sorted(PROPERTIES))}")

    def one(name):
        return PROPERTIES[name](seed, perturb)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, names))
    else:
        results = [one(n) for n in names]
    props = dict(zip(names, results))
    return {"seed": seed, "perturbed": perturb, "properties": props,
            "failed": [n for n in names if not props[n]["pass"]],
            "all_pass": all(r["pass"] for r in results)}
