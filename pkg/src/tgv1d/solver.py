"""Outer conditional-gradient loop over jump/kink atoms.

Each iteration computes the dual pair (p, P) of the current gradient, checks
the stationarity measure psi, inserts the extremal atom the duals point to,
re-solves the finite quadratic subproblem over the active atoms (warm
started), and prunes zero weights.  The loop terminates when psi falls below
``tol_psi`` (the iterate is then a certified stationary point) or when the
iteration budget is exhausted (the result is flagged, not raised).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from tgv1d.atoms import (
    JUMP,
    KINK,
    ExtremalAtom,
    SparseFunction,
    assemble,
    atom_function,
    l2_norm,
)
from tgv1d.duals import (
    DualPair,
    OptimalityReport,
    certify_optimality,
    constraint_violation,
    dual_pair,
)
from tgv1d.tgv import TgvParams
from tgv1d.weights import WeightSolution, prune, solve_weights

__all__ = [
    "SolverConfig",
    "HistoryRow",
    "SolverState",
    "RunResult",
    "insert_candidate",
    "step",
    "run",
    "merge_clusters",
    "write_history_csv",
]


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the outer loop.

    Parameters
    ----------
    alpha, beta : float
        Regularization weights for jump and kink atoms.  Unit-cost kink
        atoms exist only when ``beta/alpha < T/2``; larger ratios are
        accepted (the regularization can be strong enough that no atom is
        ever inserted), but the initial active set must then contain no
        kink, and a run that tries to insert one fails loudly.
    T : float
        Right endpoint of the domain (0, T).
    tol_psi : float, optional
        Termination threshold for the stationarity measure.
    max_iter : int, optional
        Maximum number of atom insertions before the run is flagged
        non-stationary.
    newton_starts : int, optional
        Number of Newton starting points used by the dual extrema search.
    newton_tol : float, optional
        Absolute tolerance on the dual derivative at a reported extremum.
    kkt_tol : float, optional
        KKT residual tolerance of the finite subproblem.
    max_fista_iter : int, optional
        Iteration budget of the accelerated projected-gradient phase.
    cluster_tol : float, optional
        Distance below which a new candidate refreshes an existing atom of
        the same kind and sign instead of being appended, and below which
        :func:`merge_clusters` merges atoms of the final iterate.
    cert_tol : float, optional
        Tolerance of the final first-order optimality certificate.
    initial_atoms : tuple of ExtremalAtom, optional
        Starting active set; defaults to a single positive jump at 0.75 T.
    """

    alpha: float
    beta: float
    T: float
    tol_psi: float = 1e-10
    max_iter: int = 100
    newton_starts: int = 99
    newton_tol: float = 1e-12
    kkt_tol: float = 1e-11
    max_fista_iter: int = 2000
    cluster_tol: float = 1e-6
    cert_tol: float = 1e-6
    initial_atoms: tuple = None

    def __post_init__(self):
        TgvParams(alpha=self.alpha, beta=self.beta, T=self.T)
        if self.tol_psi <= 0:
            raise ValueError("tol_psi must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.cluster_tol < 0:
            raise ValueError("cluster_tol must be nonnegative")
        atoms = self.initial_atoms
        if atoms is None:
            atoms = (ExtremalAtom(JUMP, 0.75 * self.T, 1),)
        atoms = tuple(atoms)
        if self.beta / self.alpha >= self.T / 2.0 and any(
            at.kind == KINK for at in atoms
        ):
            raise ValueError(
                "beta/alpha >= T/2 leaves no unit-cost kink; the initial "
                "active set must contain jumps only"
            )
        object.__setattr__(self, "initial_atoms", atoms)

    @property
    def params(self) -> TgvParams:
        return TgvParams(alpha=self.alpha, beta=self.beta, T=self.T)


@dataclass(frozen=True)
class HistoryRow:
    """Diagnostics of one outer iteration (iterate k, before insertion).

    ``objective_PA`` is the restricted minimum over the active set (misfit
    plus total atom weight), ``sup_p``/``sup_P`` the sup norms of the dual
    pair, ``u_norm``/``uhat_norm`` the L2 norms of the iterate and of the
    inserted candidate atom (0.0 on the terminal row, where nothing is
    inserted), and ``iterate`` the reconstructed function itself.
    """

    k: int
    psi: float
    objective_PA: float
    f_value: float
    sum_lambda: float
    n_active: int
    sup_p: float
    sup_P: float
    u_norm: float
    uhat_norm: float
    iterate: SparseFunction


@dataclass(frozen=True)
class SolverState:
    """Active set, its subproblem solution, and the logged history."""

    atoms: tuple
    solution: WeightSolution
    duals: DualPair | None
    history: tuple
    terminated: bool

    @property
    def k(self) -> int:
        """Index of the next iteration to be logged."""
        return len(self.history)

    def current_function(self, config: SolverConfig) -> SparseFunction:
        return assemble(
            self.atoms,
            self.solution.lam,
            self.solution.a,
            self.solution.b,
            config.alpha,
            config.beta,
            config.T,
        )


@dataclass(frozen=True)
class RunResult:
    """Outcome of a solver run.

    ``u`` is the final iterate before any clustering, ``report`` the
    first-order certificate evaluated at ``cert_tol``, ``history`` the full
    per-iteration log, and ``stationary`` False when the iteration budget
    ran out first.
    """

    u: SparseFunction
    atoms: tuple
    solution: WeightSolution
    report: OptimalityReport
    duals: DualPair
    history: tuple
    stationary: bool
    iterations: int

    @property
    def objective(self) -> float:
        return self.solution.objective

    def clustered(self, cluster_tol: float = 1e-6) -> SparseFunction:
        return merge_clusters(self.u, cluster_tol)


def insert_candidate(
    dp: DualPair, alpha: float, beta: float, T: float
) -> ExtremalAtom:
    """Extremal atom minimizing the linearized objective, from the duals.

    Selects the jump branch at the maximizer of |p| with sign(p) when
    ``sup|p|/alpha >= sup|P|/beta`` (ties go to the jump), otherwise the
    kink branch at the maximizer of |P| with sign(P).  The kink maximizer
    is guaranteed to lie strictly inside (beta/alpha, T - beta/alpha) when
    the dual pair comes from a subproblem-stationary iterate; this is
    asserted because a violation indicates an extrema-search bug.
    """
    xp, vp = dp.sup_p
    xP, vP = dp.sup_P
    if vp / alpha >= vP / beta:
        if dp.p_sign == 0:
            raise ValueError("dual pair vanishes identically; nothing to insert")
        return ExtremalAtom(JUMP, xp, dp.p_sign)
    if dp.P_sign == 0:
        raise ValueError("dual pair vanishes identically; nothing to insert")
    strip = beta / alpha
    assert strip < xP < T - strip, (
        f"kink candidate {xP} outside the unit-cost strip "
        f"({strip}, {T - strip}); the dual extrema search is inconsistent"
    )
    return ExtremalAtom(KINK, xP, dp.P_sign)


def _with_candidate(atoms, candidate: ExtremalAtom, cluster_tol: float):
    """Insert the candidate, refreshing a near-coincident same-kind atom.

    Returns the new atom tuple and the index the candidate landed at.  A
    candidate within ``cluster_tol`` of an existing atom of the same kind
    and sign replaces that atom's position (the weights are re-solved right
    after, so the previous weight serves as the warm start); otherwise it is
    appended with warm-start weight zero.
    """
    best = None
    for j, atom in enumerate(atoms):
        if atom.kind != candidate.kind or atom.sign != candidate.sign:
            continue
        dist = abs(atom.position - candidate.position)
        if dist <= cluster_tol and (best is None or dist < best[1]):
            best = (j, dist)
    atoms = list(atoms)
    if best is None:
        atoms.append(candidate)
        return tuple(atoms), len(atoms) - 1
    atoms[best[0]] = candidate
    return tuple(atoms), best[0]


def step(state: SolverState, fidelity, config: SolverConfig) -> SolverState:
    """One outer iteration: log the current iterate, then insert and re-solve.

    A state whose stationarity measure is already below ``tol_psi`` is
    returned terminated with the terminal row logged and no atom added.
    """
    if state.terminated:
        return state
    params = config.params
    u = state.current_function(config)
    grad = fidelity.gradient(u)
    dp = dual_pair(
        grad, config.T, starts=config.newton_starts, newton_tol=config.newton_tol
    )
    psi = constraint_violation(dp, config.alpha, config.beta, fidelity.M0)
    terminated = psi <= config.tol_psi

    new_atoms, new_solution = state.atoms, state.solution
    uhat_norm = 0.0
    if not terminated:
        candidate = insert_candidate(dp, config.alpha, config.beta, config.T)
        uhat_norm = l2_norm(
            atom_function(candidate, config.alpha, config.beta, config.T)
        )
        atoms2, _ = _with_candidate(state.atoms, candidate, config.cluster_tol)
        solution2 = solve_weights(
            atoms2,
            fidelity,
            params,
            warm_start=state.solution,
            kkt_tol=config.kkt_tol,
            max_fista_iter=config.max_fista_iter,
        )
        increase = solution2.objective - state.solution.objective
        if increase > 1e-9:
            raise RuntimeError(
                "restricted optimum increased by "
                f"{increase:.3e} after inserting {candidate}"
            )
        new_atoms, new_solution = prune(atoms2, solution2)
        new_atoms = tuple(new_atoms)

    row = HistoryRow(
        k=state.k,
        psi=psi,
        objective_PA=state.solution.objective,
        f_value=fidelity.value(u),
        sum_lambda=float(np.sum(state.solution.lam)),
        n_active=len(state.atoms),
        sup_p=dp.sup_p[1],
        sup_P=dp.sup_P[1],
        u_norm=l2_norm(u),
        uhat_norm=uhat_norm,
        iterate=u,
    )
    return SolverState(
        atoms=new_atoms,
        solution=new_solution,
        duals=dp,
        history=state.history + (row,),
        terminated=terminated,
    )


def run(fidelity, config: SolverConfig) -> RunResult:
    """Run the conditional-gradient loop to stationarity or the budget.

    ``fidelity`` must provide ``M0``, ``value(u)``, ``gradient(u) ->
    TrigPoly`` and ``quadratic_model(funcs)``.  Subproblem failures
    propagate; an exhausted iteration budget does not raise but returns a
    result with ``stationary=False``.
    """
    params = config.params
    atoms = tuple(config.initial_atoms)
    solution = solve_weights(
        atoms,
        fidelity,
        params,
        kkt_tol=config.kkt_tol,
        max_fista_iter=config.max_fista_iter,
    )
    pruned_atoms, solution = prune(atoms, solution)
    state = SolverState(
        atoms=tuple(pruned_atoms),
        solution=solution,
        duals=None,
        history=(),
        terminated=False,
    )
    while not state.terminated and state.k <= config.max_iter:
        state = step(state, fidelity, config)

    # The last logged row describes the final iterate; re-assemble it rather
    # than the post-insertion state so the result matches the history.
    last = state.history[-1]
    u = last.iterate
    report = certify_optimality(
        u, state.duals, config.alpha, config.beta, config.cert_tol
    )
    if state.terminated:
        final_atoms, final_solution = state.atoms, state.solution
    else:
        final_atoms, final_solution = _atoms_of_row(state, config)
    return RunResult(
        u=u,
        atoms=final_atoms,
        solution=final_solution,
        report=report,
        duals=state.duals,
        history=state.history,
        stationary=state.terminated,
        iterations=state.history[-1].k,
    )


def _atoms_of_row(state: SolverState, config: SolverConfig):
    """Active set and weights matching the last *logged* iterate.

    When the budget runs out, ``state`` already contains the speculative
    post-insertion active set; the reported result must instead describe the
    iterate the last history row logged.  Its atoms are recovered from the
    stored function.
    """
    u = state.history[-1].iterate
    atoms = u.atoms
    weights = u.weights
    solution = WeightSolution(
        lam=np.asarray(weights, dtype=float),
        a=u.a,
        b=u.b,
        kkt_residual=state.solution.kkt_residual,
        objective=state.history[-1].objective_PA,
    )
    return tuple(atoms), solution


def merge_clusters(u: SparseFunction, cluster_tol: float) -> SparseFunction:
    """Merge same-kind, same-sign atoms closer than ``cluster_tol``.

    Runs of nearby atoms collapse to a single atom at the weight-averaged
    position carrying the summed weight.  Atoms of opposite sign or of the
    other kind are never merged.
    """

    def collapse(entries):
        out = []
        for x, s, w in entries:
            if out and out[-1][1] == s and x - out[-1][0] <= cluster_tol:
                px, ps, pw = out[-1]
                total = pw + w
                pos = (px * pw + x * w) / total if total > 0 else 0.5 * (px + x)
                out[-1] = [pos, ps, total]
            else:
                out.append([x, s, w])
        return tuple((float(x), int(s), float(w)) for x, s, w in out)

    return SparseFunction(
        T=u.T,
        alpha=u.alpha,
        beta=u.beta,
        a=u.a,
        b=u.b,
        jumps=collapse(u.jumps),
        kinks=collapse(u.kinks),
    )


def write_history_csv(history, path) -> None:
    """Write the per-iteration log with full float precision."""
    columns = (
        "k",
        "psi",
        "objective_PA",
        "f_value",
        "sum_lambda",
        "n_active",
        "sup_p",
        "sup_P",
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in history:
            writer.writerow(
                [
                    row.k,
                    f"{row.psi:.17g}",
                    f"{row.objective_PA:.17g}",
                    f"{row.f_value:.17g}",
                    f"{row.sum_lambda:.17g}",
                    row.n_active,
                    f"{row.sup_p:.17g}",
                    f"{row.sup_P:.17g}",
                ]
            )
