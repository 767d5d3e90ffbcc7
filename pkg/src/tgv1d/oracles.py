"""Independent brute-force references used by the test suite.

Everything here is deliberately implementation-independent of the modules it
checks: transforms are integrated by adaptive quadrature, linear minimization
is a dense scan over cumulative Simpson integrals, and the two-kink
counterexample is assembled from first principles by solving a 4x4 moment
system.  Performance is a non-goal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from tgv1d.atoms import (
    JUMP,
    KINK,
    ExtremalAtom,
    SparseFunction,
    l2_inner,
)

__all__ = [
    "forward_quad",
    "linear_min_scan",
    "L2Fidelity",
    "CounterexampleFixture",
    "FixtureError",
    "build_counterexample",
]


def forward_quad(u: SparseFunction, zeta: float) -> complex:
    """Fourier transform of u at one frequency by adaptive quadrature."""
    pts = list(u.breakpoints())
    re, _ = quad(
        lambda x: u(x) * np.cos(zeta * x), 0.0, u.T,
        points=pts, limit=400, epsabs=1e-13, epsrel=1e-13,
    )
    im, _ = quad(
        lambda x: -u(x) * np.sin(zeta * x), 0.0, u.T,
        points=pts, limit=400, epsabs=1e-13, epsrel=1e-13,
    )
    return complex(re, im)


def linear_min_scan(gradient, alpha: float, beta: float, T: float, n: int = 100_000):
    """Brute-force linear minimization of <gradient, v> over scaled atoms.

    Evaluates the gradient on a dense grid, forms the cumulative integrals
    int_0^x g and int_0^x t g(t) dt by composite Simpson, and scans every grid
    position as a jump (both signs) and — inside the admissible strip
    (beta/alpha, T - beta/alpha) — as a kink of either branch.  Returns the
    minimal inner product and the atom attaining it.
    """
    if n < 1000:
        raise ValueError("scan needs at least 1000 grid points")
    xs = np.linspace(0.0, T, n + 1)
    g = np.asarray(gradient(xs), dtype=float)
    G0 = cumulative_simpson(g, x=xs, initial=0.0)
    G1 = cumulative_simpson(xs * g, x=xs, initial=0.0)

    interior = slice(1, n)  # positions must lie in (0, T)
    x_in = xs[interior]

    # <g, S_x / alpha> = (1/alpha) * integral_x^T g
    v_jump = (G0[-1] - G0[interior]) / alpha

    # kinks: left branch integral_0^x (x-t) g(t) dt, right branch
    # integral_x^T (t-x) g(t) dt, scaled by 1/beta
    v_kink = np.where(
        x_in < T / 2.0,
        x_in * G0[interior] - G1[interior],
        (G1[-1] - G1[interior]) - x_in * (G0[-1] - G0[interior]),
    ) / beta
    strip = (x_in > beta / alpha) & (x_in < T - beta / alpha)

    best_val = 0.0
    best_atom = None
    j = int(np.argmax(np.abs(v_jump)))
    if -abs(v_jump[j]) < best_val:
        best_val = -abs(v_jump[j])
        sign = -1 if v_jump[j] > 0 else 1
        best_atom = ExtremalAtom(JUMP, float(x_in[j]), sign)
    if np.any(strip):
        vk = np.where(strip, v_kink, 0.0)
        k = int(np.argmax(np.abs(vk)))
        if -abs(vk[k]) < best_val:
            best_val = -abs(vk[k])
            sign = -1 if vk[k] > 0 else 1
            best_atom = ExtremalAtom(KINK, float(x_in[k]), sign)
    if best_atom is None:
        best_atom = ExtremalAtom(JUMP, T / 2.0, 1)
    return float(best_val), best_atom


class L2Fidelity:
    """Plain L2 tracking misfit f(u) = (1/2) ||u - u_data||^2 on (0, T).

    Used by the counterexample fixture; provides the same quadratic-model
    interface as the measurement misfit (its gradient is the sparse function
    u - u_data rather than a trigonometric polynomial).
    """

    def __init__(self, u_data: SparseFunction):
        self.u_data = u_data

    @property
    def M0(self) -> float:
        return 0.5 * l2_inner(self.u_data, self.u_data)

    def value(self, u: SparseFunction) -> float:
        d = u - self.u_data
        return 0.5 * l2_inner(d, d)

    def gradient_sparse(self, u: SparseFunction) -> SparseFunction:
        return u - self.u_data

    def quadratic_model(self, funcs):
        n = len(funcs)
        G = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = l2_inner(funcs[i], funcs[j])
        c = np.array([l2_inner(f, self.u_data) for f in funcs])
        return G, c, self.M0


class FixtureError(RuntimeError):
    """Counterexample fixture could not be constructed as documented."""


@dataclass(frozen=True)
class CounterexampleFixture:
    """Two-kink configuration whose exact regularizer value stays strictly
    below the sum of weights delivered by the atom subproblem.

    ``phi`` is the dual witness built from the bump basis (w1, w2) and the
    affine pair (l1, l2); ``u_data`` = u_bar - phi makes (lam1, lam2, 0, 0) a
    KKT point of the weight subproblem over {u1, u2} for the L2 misfit.
    """

    T: float
    alpha: float
    beta: float
    x1: float
    x2: float
    lam1: float
    lam2: float
    u1: SparseFunction
    u2: SparseFunction
    w1: SparseFunction
    w2: SparseFunction
    l1: SparseFunction
    l2: SparseFunction
    gamma: np.ndarray
    phi: SparseFunction
    u_bar: SparseFunction
    u_data: SparseFunction
    ortho_residuals: np.ndarray
    system_cond: float


def build_counterexample(
    lam1: float = 2.0, lam2: float = 2.0, alpha: float = 1.0
) -> CounterexampleFixture:
    """Construct the fixture (T = 10, beta/alpha = 1/2, kinks at 6 and 6.25).

    Solves the 4x4 moment system <v_i, sum_j gamma_j basis_j> = (-1,-1,0,0)
    for v = (u1, u2, l1, l2) and basis = (w1, w2, l1, l2), where w1 is the
    unit box on (x1, x2) and w2 the tapered bump 1 - (3/8) (x - x1) on it.
    Raises :class:`FixtureError` if the system is singular or the weights
    violate the admissibility inequalities.
    """
    T, beta = 10.0, alpha / 2.0
    x1, x2 = 6.0, 6.25
    if abs(lam2 - lam1) >= beta / (2.0 * alpha):
        raise FixtureError("weights must satisfy |lam2 - lam1| < beta/(2 alpha)")
    if lam1 + lam2 <= T - x2:
        raise FixtureError("weights must satisfy lam1 + lam2 > T - x2")

    mk = lambda **kw: SparseFunction(T=T, alpha=alpha, beta=beta, **kw)
    u1 = mk(kinks=((x1, 1, 1.0),))
    u2 = mk(kinks=((x2, -1, 1.0),))
    w1 = mk(jumps=((x1, 1, alpha), (x2, -1, alpha)))
    w2 = mk(
        jumps=((x1, 1, alpha), (x2, -1, (29.0 / 32.0) * alpha)),
        kinks=((x1, -1, (3.0 / 8.0) * beta), (x2, 1, (3.0 / 8.0) * beta)),
    )
    l1 = mk(b=1.0)
    l2 = mk(a=1.0, b=-5.0)

    tests = (u1, u2, l1, l2)
    basis = (w1, w2, l1, l2)
    A = np.array([[l2_inner(v, w) for w in basis] for v in tests])
    rhs = np.array([-1.0, -1.0, 0.0, 0.0])
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e12:
        raise FixtureError(f"moment system is numerically singular (cond = {cond:.2e})")
    gamma = np.linalg.solve(A, rhs)

    phi = (
        w1.scaled(gamma[0]) + w2.scaled(gamma[1])
        + l1.scaled(gamma[2]) + l2.scaled(gamma[3])
    )
    u_bar = u1.scaled(lam1) + u2.scaled(lam2)
    u_data = u_bar - phi
    residuals = np.array(
        [
            l2_inner(u1, phi) + 1.0,
            l2_inner(u2, phi) + 1.0,
            l2_inner(l1, phi),
            l2_inner(l2, phi),
        ]
    )
    return CounterexampleFixture(
        T=T, alpha=alpha, beta=beta, x1=x1, x2=x2, lam1=lam1, lam2=lam2,
        u1=u1, u2=u2, w1=w1, w2=w2, l1=l1, l2=l2,
        gamma=gamma, phi=phi, u_bar=u_bar, u_data=u_data,
        ortho_residuals=residuals, system_cond=cond,
    )
