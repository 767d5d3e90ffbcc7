"""Finite subproblem over a fixed active set: KKT quality and invariances."""

import numpy as np
import pytest

from tgv1d.atoms import JUMP, KINK, ExtremalAtom, SparseFunction, atom_function
from tgv1d.oracles import L2Fidelity, build_counterexample
from tgv1d.tgv import TgvParams
from tgv1d.weights import SubproblemError, WeightSolution, prune, solve_weights

P = TgvParams(alpha=2.0, beta=3.0, T=10.0)
ATOMS = (
    ExtremalAtom(JUMP, 2.5, 1),
    ExtremalAtom(KINK, 5.0, -1),
    ExtremalAtom(JUMP, 7.5, -1),
)


def make_fidelity(weights=(3.0, 2.0, 0.0), a=1.0, b=-0.5):
    """L2 tracking of an exactly representable target function."""
    target = SparseFunction(T=P.T, alpha=P.alpha, beta=P.beta, a=a, b=b)
    for atom, w in zip(ATOMS, weights):
        target = target + atom_function(atom, P.alpha, P.beta, P.T).scaled(w)
    return L2Fidelity(target)


def kkt_check(atoms, fidelity, sol, tol):
    """Independent first-order check of a returned solution."""
    funcs = [atom_function(a, P.alpha, P.beta, P.T) for a in atoms] + [
        SparseFunction(T=P.T, alpha=P.alpha, beta=P.beta, a=1.0),
        SparseFunction(T=P.T, alpha=P.alpha, beta=P.beta, b=1.0),
    ]
    G, c, _ = fidelity.quadratic_model(funcs)
    z = np.concatenate((sol.lam, [sol.a, sol.b]))
    grad = G @ z - c
    grad[: len(atoms)] += 1.0  # cost of one unit of atom weight
    assert np.all(sol.lam >= 0.0)
    assert np.max(np.abs(grad[len(atoms):])) <= tol          # affine part free
    assert np.min(grad[: len(atoms)]) >= -tol                # dual feasibility
    assert np.max(np.abs(sol.lam * grad[: len(atoms)])) <= tol  # complementarity


def test_solution_satisfies_kkt():
    fid = make_fidelity()
    sol = solve_weights(ATOMS, fid, P)
    kkt_check(ATOMS, fid, sol, 1e-10)
    assert sol.kkt_residual <= 1e-11
    # the +sum(lam) term shrinks weights: strictly below the target weights
    assert np.all(sol.lam <= np.array([3.0, 2.0, 0.0]) + 1e-12)


def test_inactive_weights_are_exact_zeros():
    fid = make_fidelity(weights=(3.0, 2.0, 0.0))
    sol = solve_weights(ATOMS, fid, P)
    assert sol.lam[2] == 0.0


def test_permutation_equivariance():
    fid = make_fidelity()
    sol = solve_weights(ATOMS, fid, P)
    perm = (2, 0, 1)
    sol_p = solve_weights([ATOMS[i] for i in perm], fid, P)
    np.testing.assert_allclose(sol_p.lam, sol.lam[list(perm)], atol=1e-9)
    assert sol_p.objective == pytest.approx(sol.objective, abs=1e-12)


def test_warm_start_same_solution():
    fid = make_fidelity()
    cold = solve_weights(ATOMS, fid, P)
    warm = solve_weights(ATOMS, fid, P, warm_start=cold)
    np.testing.assert_allclose(warm.lam, cold.lam, atol=1e-10)
    assert warm.a == pytest.approx(cold.a, abs=1e-10)
    assert warm.b == pytest.approx(cold.b, abs=1e-10)


def test_unreachable_tolerance_raises_with_best():
    # Larger target weights keep two atoms active, so the polished KKT
    # residual is a small nonzero float and 1e-300 is genuinely unreachable.
    fid = make_fidelity(weights=(9.0, 6.0, 0.0))
    with pytest.raises(SubproblemError) as exc:
        solve_weights(ATOMS, fid, P, kkt_tol=1e-300)
    best = exc.value.best
    assert isinstance(best, WeightSolution)
    assert best.kkt_residual > 1e-300
    kkt_check(ATOMS, fid, best, 1e-9)  # still a high-quality point


def test_prune_drops_zero_weights():
    fid = make_fidelity(weights=(9.0, 6.0, 0.0))
    sol = solve_weights(ATOMS, fid, P)
    assert sol.lam[0] > 0.0 and sol.lam[1] > 0.0 and sol.lam[2] == 0.0
    atoms2, sol2 = prune(list(ATOMS), sol)
    assert [a.position for a in atoms2] == [2.5, 5.0]
    np.testing.assert_allclose(sol2.lam, sol.lam[:2])
    assert sol2.objective == sol.objective


def test_counterexample_weights_recovered():
    fx = build_counterexample(lam1=2.0, lam2=2.0)
    fid = L2Fidelity(fx.u_data)
    atoms = (ExtremalAtom(KINK, fx.x1, 1), ExtremalAtom(KINK, fx.x2, -1))
    params = TgvParams(alpha=fx.alpha, beta=fx.beta, T=fx.T)
    sol = solve_weights(atoms, fid, params)
    np.testing.assert_allclose(sol.lam, [fx.lam1, fx.lam2], atol=1e-10)
    assert abs(sol.a) <= 1e-9 and abs(sol.b) <= 1e-9


def test_random_active_sets_reach_tolerance():
    rng = np.random.default_rng(21)
    for trial in range(10):
        n = int(rng.integers(1, 6))
        atoms = []
        for _ in range(n):
            if rng.random() < 0.5:
                atoms.append(ExtremalAtom(JUMP, float(rng.uniform(0.3, 9.7)), 1))
            else:
                atoms.append(ExtremalAtom(KINK, float(rng.uniform(1.6, 8.4)),
                                          int(rng.choice([-1, 1]))))
        weights = rng.uniform(0.0, 4.0, n)
        target = SparseFunction(T=P.T, alpha=P.alpha, beta=P.beta,
                                a=float(rng.uniform(-1, 1)), b=float(rng.uniform(-1, 1)))
        for atom, w in zip(atoms, weights):
            target = target + atom_function(atom, P.alpha, P.beta, P.T).scaled(float(w))
        fid = L2Fidelity(target)
        sol = solve_weights(atoms, fid, P)
        kkt_check(atoms, fid, sol, 1e-9)
