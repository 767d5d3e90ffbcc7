"""Dual variables of the sparse problem: antiderivatives of the misfit gradient.

For a gradient g = grad f(u) (a :class:`TrigPoly`), the pair

    p(x) = integral_0^x g(s) ds,        P(x) = - integral_0^x p(s) ds

certifies optimality: at a minimizer, |p| is bounded by alpha with equality
exactly at jump positions (with the jump's sign), |P| is bounded by beta with
equality at kink positions, and both vanish at T.  The antiderivatives stay
inside the trigonometric-polynomial class, so the certificate is evaluated
exactly; global extrema are located by a Newton multistart on the derivative
backed by a dense grid scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tgv1d.atoms import JUMP, SparseFunction
from tgv1d.fourier import TrigPoly

__all__ = [
    "DualPair",
    "OptimalityReport",
    "primitives",
    "dual_pair",
    "find_global_extrema",
    "constraint_violation",
    "certify_optimality",
    "orthogonalize_affine",
]


@dataclass(frozen=True)
class DualPair:
    """First and second antiderivatives of a gradient with their sup-norm data.

    ``sup_p`` and ``sup_P`` are ``(position, absolute value)`` pairs locating
    the global maximum of |p| and |P| on (0, T); ``p_sign``/``P_sign`` are the
    signs of p/P there (0 when the function vanishes identically).
    """

    p: TrigPoly
    P: TrigPoly
    sup_p: tuple
    sup_P: tuple
    p_sign: int
    P_sign: int
    T: float


@dataclass(frozen=True)
class OptimalityReport:
    """Outcome of the first-order certificate at tolerance ``tol``.

    ``bounds_ok``: sup |p| <= alpha + tol and sup |P| <= beta + tol.
    ``boundary_ok``: |p(T)| <= tol and |P(T)| <= tol.
    ``support_ok``: every jump atom sits where p equals its signed alpha,
    every kink atom where P equals its signed beta, within tol.
    ``stationary``: conjunction of the three.
    """

    bounds_ok: bool
    boundary_ok: bool
    support_ok: bool
    stationary: bool
    sup_p: tuple
    sup_P: tuple
    p_end: float
    P_end: float
    support_residuals: tuple
    tol: float


def find_global_extrema(
    q: TrigPoly,
    T: float,
    starts: int = 99,
    newton_tol: float = 1e-12,
    max_steps: int = 50,
    scan_points: int = 10_000,
):
    """Global maximizer of |q| on (0, T): (position, max |q|, sign of q there).

    Newton iterations on q' launched from ``starts`` equally spaced interior
    points find the smooth extrema; a dense grid scan plus endpoint-adjacent
    samples guard against missed basins (a scan value exceeding the Newton
    value by more than 1e-9 triggers a refinement pass from the scan argmax).
    A sign of 0 flags the degenerate case q identically zero.
    """
    if starts < 2:
        raise ValueError("need at least 2 Newton starts")
    dq = q.derivative()
    ddq = dq.derivative()

    def newton(x0):
        x = np.asarray(x0, dtype=float).copy()
        for _ in range(max_steps):
            g1 = dq(x)
            live = np.abs(g1) > newton_tol
            if not np.any(live):
                break
            g2 = ddq(x)
            step = np.where(
                live & (np.abs(g2) > 1e-300), g1 / np.where(g2 == 0.0, 1.0, g2), 0.0
            )
            x = x - step
            x = np.where((x > 0.0) & (x < T), x, np.nan)
        x = x[~np.isnan(x)]
        return x[np.abs(dq(x)) <= newton_tol] if x.size else x

    step = T / (starts + 1)
    roots = newton(np.arange(1, starts + 1) * step)
    near = np.array([T * 1e-9, T * (1.0 - 1e-9)])
    candidates = np.concatenate((roots, near))
    best_newton = float(np.max(np.abs(q(candidates))))

    scan_x = np.linspace(0.0, T, scan_points + 1)[1:-1]
    scan_v = np.abs(q(scan_x))
    i_best = int(np.argmax(scan_v))
    if scan_v[i_best] > best_newton + 1e-9:
        refine_starts = scan_x[max(0, i_best - 1) : i_best + 2]
        candidates = np.concatenate((candidates, newton(refine_starts)))
    candidates = np.concatenate((candidates, [scan_x[i_best]]))

    vals = q(candidates)
    j = int(np.argmax(np.abs(vals)))
    x_hat, v_hat = float(candidates[j]), float(vals[j])
    if v_hat == 0.0:
        return T / 2.0, 0.0, 0
    return x_hat, abs(v_hat), 1 if v_hat > 0 else -1


def dual_pair(
    g: TrigPoly, T: float, starts: int = 99, newton_tol: float = 1e-12
) -> DualPair:
    """Exact antiderivative pair (p, -integral of p) of a gradient, with extrema."""
    p = g.primitive()
    P = p.primitive().scaled(-1.0)
    xp, vp, sp = find_global_extrema(p, T, starts=starts, newton_tol=newton_tol)
    xP, vP, sP = find_global_extrema(P, T, starts=starts, newton_tol=newton_tol)
    return DualPair(
        p=p, P=P, sup_p=(xp, vp), sup_P=(xP, vP), p_sign=sp, P_sign=sP, T=T
    )


primitives = dual_pair


def constraint_violation(dp: DualPair, alpha: float, beta: float, M0: float) -> float:
    """Stationarity measure M0 * (max(sup|p|/alpha, sup|P|/beta) - 1)."""
    if M0 <= 0:
        raise ValueError("M0 must be positive")
    return M0 * (max(dp.sup_p[1] / alpha, dp.sup_P[1] / beta) - 1.0)


def certify_optimality(
    u: SparseFunction, dp: DualPair, alpha: float, beta: float, tol: float
) -> OptimalityReport:
    """First-order optimality certificate for a sparse candidate minimizer."""
    bounds_ok = dp.sup_p[1] <= alpha + tol and dp.sup_P[1] <= beta + tol
    p_end = float(dp.p(dp.T))
    P_end = float(dp.P(dp.T))
    boundary_ok = abs(p_end) <= tol and abs(P_end) <= tol
    residuals = []
    for atom in u.atoms:
        if atom.kind == JUMP:
            r = abs(float(dp.p(atom.position)) - atom.sign * alpha)
        else:
            r = abs(float(dp.P(atom.position)) - atom.sign * beta)
        residuals.append((atom.kind, atom.position, r))
    support_ok = all(r <= tol for _, _, r in residuals)
    return OptimalityReport(
        bounds_ok=bounds_ok,
        boundary_ok=boundary_ok,
        support_ok=support_ok,
        stationary=bounds_ok and boundary_ok and support_ok,
        sup_p=dp.sup_p,
        sup_P=dp.sup_P,
        p_end=p_end,
        P_end=P_end,
        support_residuals=tuple(residuals),
        tol=tol,
    )


def orthogonalize_affine(g: TrigPoly, T: float) -> TrigPoly:
    """Subtract the unique affine function making both dual boundary values vanish.

    Solves the 2x2 moment system so that the returned h = g - (c0 + c1 x)
    satisfies p_h(T) = 0 and P_h(T) = 0 — the orthogonality to affine
    functions that holds automatically at subproblem-stationary iterates.
    """
    p = g.primitive()
    P = p.primitive().scaled(-1.0)
    A = np.array([[T, T * T / 2.0], [T * T / 2.0, T**3 / 6.0]])
    rhs = np.array([float(p(T)), -float(P(T))])
    c0, c1 = np.linalg.solve(A, rhs)
    correction = TrigPoly(
        g.freqs, np.zeros_like(g.cos), np.zeros_like(g.sin), np.array([-c0, -c1])
    )
    return g + correction
