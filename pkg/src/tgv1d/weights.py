"""Finite-dimensional subproblem: weights over active atoms plus a free affine part.

Given an active set of atoms u_1..u_N and a quadratic fidelity f, solve

    min_{lam >= 0, a, b}  f(sum_j lam_j u_j + a x + b) + sum_j lam_j .

With z = (lam, a, b) and the fidelity's quadratic model (G, c, f0) this is a
bound-constrained QP.  An accelerated projected-gradient phase does the bulk
of the work; a finite active-set phase (nonnegativity on the weights only,
affine coefficients always free) then drives the KKT residual to the
requested tolerance, which must sit well below the outer loop's stationarity
tolerance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from tgv1d.atoms import SparseFunction, atom_function
from tgv1d.tgv import TgvParams

__all__ = ["WeightSolution", "SubproblemError", "solve_weights", "prune"]


@dataclass(frozen=True)
class WeightSolution:
    """Solution of the active-set subproblem.

    ``lam`` are the nonnegative atom weights, ``(a, b)`` the affine
    coefficients, ``kkt_residual`` the final first-order residual and
    ``objective`` the attained value of the subproblem.
    """

    lam: np.ndarray
    a: float
    b: float
    kkt_residual: float
    objective: float

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.lam))


class SubproblemError(RuntimeError):
    """Subproblem did not reach the KKT tolerance; carries the best solution."""

    def __init__(self, message: str, best: WeightSolution):
        super().__init__(message)
        self.best = best


def _kkt_residual(z, grad_eff, n_atoms):
    """max of |affine gradient|, dual infeasibility, and complementarity."""
    res = 0.0
    if len(z) > n_atoms:
        res = float(np.max(np.abs(grad_eff[n_atoms:])))
    if n_atoms:
        lam = z[:n_atoms]
        slack = grad_eff[:n_atoms]
        res = max(res, float(max(0.0, -slack.min())))
        res = max(res, float(np.max(np.abs(lam * slack))))
    return res


def _fista(G, ceff, z0, n_atoms, kkt_tol, max_iter):
    """Accelerated projected gradient with adaptive restart on (lam, a, b)."""
    eigs = np.linalg.eigvalsh(G)
    L = float(eigs[-1]) if eigs.size else 1.0
    if L <= 0:
        return z0
    step = 1.0 / L
    z = z0.copy()
    z[:n_atoms] = np.maximum(z[:n_atoms], 0.0)
    y = z.copy()
    t = 1.0
    z_prev = z.copy()
    for it in range(max_iter):
        grad = G @ y - ceff
        z = y - step * grad
        z[:n_atoms] = np.maximum(z[:n_atoms], 0.0)
        if (y - z) @ (z - z_prev) > 0.0:
            t = 1.0
            y = z.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = z + ((t - 1.0) / t_next) * (z - z_prev)
            t = t_next
        z_prev = z
        if it % 50 == 49:
            if _kkt_residual(z, G @ z - ceff, n_atoms) <= kkt_tol:
                break
    return z


def _solve_restricted(G, ceff, free_idx, n):
    z = np.zeros(n)
    if free_idx.size:
        Gs = G[np.ix_(free_idx, free_idx)]
        cs = ceff[free_idx]
        # No truncation: a nearly singular direction (two atoms very close
        # together) must be solved, not cut off — the resulting huge
        # opposite-sign weight pair is exactly what tells the pivoting loop
        # which of the two to retire.
        rcond = 1e-18
        sub = np.linalg.lstsq(Gs, cs, rcond=rcond)[0]
        # Two rounds of iterative refinement push the restricted residual
        # (which is exactly the complementarity slack of the passive atoms)
        # down to machine level for well-conditioned Grams.
        for _ in range(2):
            sub = sub + np.linalg.lstsq(Gs, cs - Gs @ sub, rcond=rcond)[0]
        z[free_idx] = sub
    return z


def _flat_direction_retire(G, grad, cur, passive, affine, kkt_tol):
    """Retire one atom of a numerically rank-deficient passive cluster.

    Three or more atoms packed into a tiny interval make the restricted
    Gram's smallest eigenvalue fall below the float64 noise floor, so the
    restricted solve cannot reduce the residual along that eigendirection:
    the quadratic model is numerically *flat* there while the residual still
    has a component on it.  Walking along the flat direction in the descent
    orientation until the first weight reaches zero is then an exact pivot
    of the degenerate model.  Returns the retired index, or None when no
    flat descent direction exists (the residual is genuine, not degenerate).
    """
    free_idx = np.concatenate((np.array(sorted(passive), dtype=int), affine))
    Gs = G[np.ix_(free_idx, free_idx)]
    w, V = np.linalg.eigh(Gs)
    # Only eigenvalues at the float64 noise floor of the Gram count as flat;
    # anything above it is resolvable by the restricted solve plus
    # refinement and must not trigger a retirement.
    flat = w <= max(w[-1], 1.0) * 1e-15
    if not flat.any():
        return None
    r = grad[free_idx]
    proj = V[:, flat].T @ r
    best = int(np.argmax(np.abs(proj)))
    if abs(proj[best]) <= 0.5 * kkt_tol:
        return None
    v = V[:, flat][:, best] * (-np.sign(proj[best]))
    direction = np.zeros(len(cur))
    direction[free_idx] = v
    steps = [
        (cur[j] / -direction[j], j)
        for j in passive
        if direction[j] < -1e-12
    ]
    if not steps:
        return None
    t_star, j_star = min(steps)
    cur += t_star * direction
    np.maximum(cur[: len(cur) - len(affine)], 0.0, out=cur[: len(cur) - len(affine)])
    cur[j_star] = 0.0
    return j_star


def _most_collinear(G, j, passive, excluded):
    """Passive index whose Gram column is most collinear with column ``j``.

    Returns None unless the best correlation marks a genuine numerical
    near-duplicate; exchanges only make sense between such twins.
    """
    best = None
    best_corr = 0.99
    for i in passive:
        if i == j or i in excluded or G[i, i] <= 0.0 or G[j, j] <= 0.0:
            continue
        corr = abs(G[i, j]) / np.sqrt(G[i, i] * G[j, j])
        if corr > best_corr:
            best = i
            best_corr = corr
    return best


def _active_set(G, ceff, z0, n_atoms, kkt_tol, max_pivots):
    """Lawson-Hanson-style pivoting with the affine coefficients always free.

    Two extra moves handle clusters of numerically near-duplicate atoms,
    whose Gram directions fall below float64 resolution: an *exchange* pivot
    when a just-entered atom would exit again at a zero-length step (retire
    its most collinear passive twin instead — in exact arithmetic an atom
    with negative slack never exits at a zero step, so this situation is
    always a float degeneracy), and a *flat-direction* retirement when the
    feasible restricted solve leaves an irreducible residual along a
    noise-floor eigendirection.
    """
    _dbg = bool(os.environ.get("TGV1D_DEBUG_PIVOTS"))
    n = len(ceff)
    affine = np.arange(n_atoms, n)
    passive = {j for j in range(n_atoms) if z0[j] > 0.0}
    cur = z0.copy()
    cur[:n_atoms] = np.maximum(cur[:n_atoms], 0.0)
    add_tol = 0.1 * kkt_tol
    pivots = 0
    last_added = None
    exchanged = set()
    while pivots <= max_pivots:
        free_idx = np.concatenate((np.array(sorted(passive), dtype=int), affine))
        z_try = _solve_restricted(G, ceff, free_idx, n)
        if _dbg:
            print(f"[pivot {pivots}] passive={sorted(passive)} "
                  f"z_try={np.array2string(z_try, precision=4)}")
        while passive and min(z_try[j] for j in passive) < 0.0:
            pivots += 1
            if pivots > max_pivots:
                return cur
            # Step toward z_try as far as feasibility allows and drop the one
            # weight that reaches zero first (ratio 0 when already at zero).
            def _ratio(j):
                return cur[j] / (cur[j] - z_try[j]) if cur[j] > z_try[j] else 0.0

            j_star = min((j for j in passive if z_try[j] < 0.0), key=_ratio)
            if j_star == last_added and _ratio(j_star) == 0.0:
                partner = _most_collinear(G, j_star, passive, exchanged)
                if partner is not None:
                    if _dbg:
                        print(f"  exchange: retire twin {partner}, keep {j_star}")
                    exchanged.add(partner)
                    cur[partner] = 0.0
                    passive.discard(partner)
                    free_idx = np.concatenate(
                        (np.array(sorted(passive), dtype=int), affine)
                    )
                    z_try = _solve_restricted(G, ceff, free_idx, n)
                    if _dbg:
                        print(f"  re-solve z_try={np.array2string(z_try, precision=4)}")
                    continue
            if _dbg:
                print(f"  drop {j_star} ratio={_ratio(j_star):.3e}")
            cur = cur + _ratio(j_star) * (z_try - cur)
            cur[:n_atoms] = np.maximum(cur[:n_atoms], 0.0)
            cur[j_star] = 0.0
            passive.discard(j_star)
            free_idx = np.concatenate((np.array(sorted(passive), dtype=int), affine))
            z_try = _solve_restricted(G, ceff, free_idx, n)
            if _dbg:
                print(f"  re-solve z_try={np.array2string(z_try, precision=4)}")
        cur = z_try
        grad = G @ cur - ceff
        if passive:
            free_idx = np.concatenate(
                (np.array(sorted(passive), dtype=int), affine)
            )
            free_res = float(np.max(np.abs(grad[free_idx])))
            if free_res > kkt_tol and pivots < max_pivots:
                retired = _flat_direction_retire(
                    G, grad, cur, passive, affine, kkt_tol
                )
                if retired is not None:
                    if _dbg:
                        print(f"  flat-retire {retired} (free_res={free_res:.3e})")
                    passive.discard(retired)
                    pivots += 1
                    continue
        worst = None
        worst_val = -add_tol
        for j in range(n_atoms):
            if j not in passive and grad[j] < worst_val:
                worst = j
                worst_val = grad[j]
        if worst is None:
            if _dbg:
                print(f"  terminate: slacks="
                      f"{np.array2string(grad[:n_atoms], precision=3)}")
            return cur
        if _dbg:
            print(f"  add {worst} slack={worst_val:.3e}")
        passive.add(worst)
        last_added = worst
        exchanged = set()
        pivots += 1
    return cur


def solve_weights(
    atoms,
    fidelity,
    params: TgvParams,
    warm_start: WeightSolution | None = None,
    kkt_tol: float = 1e-11,
    max_fista_iter: int = 2000,
) -> WeightSolution:
    """Solve the subproblem over the given atoms to the KKT tolerance.

    ``fidelity`` must provide ``quadratic_model(funcs) -> (G, c, f0)`` for the
    misfit restricted to the span of ``funcs``.  A warm start reuses previous
    weights positionally (new atoms appended since then start at weight 0).
    Raises :class:`SubproblemError` (carrying the best iterate) if the
    residual cannot be reached.
    """
    atoms = list(atoms)
    n_atoms = len(atoms)
    funcs = [atom_function(at, params.alpha, params.beta, params.T) for at in atoms]
    x_fun = SparseFunction(T=params.T, alpha=params.alpha, beta=params.beta, a=1.0)
    one_fun = SparseFunction(T=params.T, alpha=params.alpha, beta=params.beta, b=1.0)
    funcs += [x_fun, one_fun]
    G, c, f0 = fidelity.quadratic_model(funcs)
    e = np.zeros(n_atoms + 2)
    e[:n_atoms] = 1.0
    ceff = c - e

    z0 = np.zeros(n_atoms + 2)
    if warm_start is not None:
        k = min(n_atoms, len(warm_start.lam))
        z0[:k] = np.maximum(warm_start.lam[:k], 0.0)
        z0[-2] = warm_start.a
        z0[-1] = warm_start.b

    z = _fista(G, ceff, z0, n_atoms, kkt_tol, max_fista_iter)
    # The pivoting phase always runs: besides tightening the residual, it
    # returns exact zeros for inactive weights (FISTA only reaches ~1e-13),
    # so pruning and support counting see a crisp active set.
    z = _active_set(G, ceff, z, n_atoms, kkt_tol, max_pivots=4 * n_atoms + 16)

    grad = G @ z - ceff
    res = _kkt_residual(z, grad, n_atoms)
    obj = 0.5 * float(z @ G @ z) - float(ceff @ z) + f0
    sol = WeightSolution(
        lam=z[:n_atoms].copy(), a=float(z[-2]), b=float(z[-1]),
        kkt_residual=res, objective=obj,
    )
    if res > kkt_tol:
        raise SubproblemError(
            f"subproblem KKT residual {res:.3e} above tolerance {kkt_tol:.1e}", sol
        )
    return sol


def prune(atoms, solution: WeightSolution, threshold: float = 0.0):
    """Drop atoms whose weight is at or below the threshold.

    The represented function (and hence the objective) is unchanged when the
    dropped weights are exactly zero, which the active-set phase produces.
    """
    atoms = list(atoms)
    keep = [j for j in range(len(atoms)) if solution.lam[j] > threshold]
    new_atoms = [atoms[j] for j in keep]
    new_sol = WeightSolution(
        lam=solution.lam[keep].copy(),
        a=solution.a,
        b=solution.b,
        kkt_residual=solution.kkt_residual,
        objective=solution.objective,
    )
    return new_atoms, new_sol
