"""Sparse piecewise-affine functions on (0, T) built from jump and kink atoms.

The building blocks are the unit jump ``S_x = 1_{(x,T)}`` and the unit kink
``K_x`` (a hinge with breakpoint ``x``; for ``x < T/2`` it ramps down from the
left boundary, for ``x >= T/2`` it ramps up toward the right boundary — both
branches have a unit positive second-derivative atom at ``x``).  A
:class:`SparseFunction` is a conic combination of scaled atoms plus an affine
part,

    u(x) = (1/alpha) sum_j s_j l_j S_{x_j}(x)
         + (1/beta)  sum_j s_j l_j K_{x_j}(x) + a x + b,

with signs ``s_j`` in {-1, +1} and weights ``l_j >= 0``.  All operations here
are exact: evaluation, linear algebra, distributional derivative, and L2 inner
products of piecewise-affine functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "JUMP",
    "KINK",
    "ExtremalAtom",
    "SparseFunction",
    "DerivativeMeasure",
    "assemble",
    "l2_inner",
]

JUMP = "jump"
KINK = "kink"

# Nodes/weights of the 3-point Gauss-Legendre rule on [0, 1]; exact for
# polynomials up to degree 5, far more than the piecewise-quadratic products
# integrated below.
_GAUSS_NODES = np.array(
    [0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0]
)
_GAUSS_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


@dataclass(frozen=True)
class ExtremalAtom:
    """A jump or kink atom identified by kind, breakpoint position and sign."""

    kind: str
    position: float
    sign: int

    def __post_init__(self):
        if self.kind not in (JUMP, KINK):
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.sign not in (-1, 1):
            raise ValueError(f"atom sign must be -1 or +1, got {self.sign!r}")

    def is_extremal(self, alpha: float, beta: float, T: float) -> bool:
        """Whether the (scaled) atom is an extremal point of the unit ball.

        Jumps only need ``0 < position < T``; kinks additionally need their
        breakpoint to keep a strict distance ``beta/alpha`` from the boundary.
        """
        if not 0.0 < self.position < T:
            return False
        if self.kind == JUMP:
            return True
        return min(self.position, T - self.position) > beta / alpha

    def scale(self, alpha: float, beta: float) -> float:
        """Normalization constant of the scaled atom (alpha for jumps, beta for kinks)."""
        return alpha if self.kind == JUMP else beta


def _merge_entries(entries):
    """Sort (position, sign, weight) triples and merge duplicates by signed weight."""
    merged: dict[float, float] = {}
    for x, sign, weight in entries:
        if weight < 0:
            raise ValueError(f"negative atom weight {weight!r}")
        merged[x] = merged.get(x, 0.0) + sign * weight
    out = []
    for x in sorted(merged):
        signed = merged[x]
        if signed != 0.0:
            out.append((x, 1 if signed > 0 else -1, abs(signed)))
    return tuple(out)


@dataclass(frozen=True)
class SparseFunction:
    """Finite conic combination of scaled jump/kink atoms plus an affine part.

    ``jumps`` and ``kinks`` are tuples of ``(position, sign, weight)`` with
    nonnegative weights, sorted by position and free of duplicates; the
    normalization constants ``alpha`` (jumps) and ``beta`` (kinks) are part of
    the representation.  Instances are immutable and safe to share.
    """

    T: float
    alpha: float
    beta: float
    a: float = 0.0
    b: float = 0.0
    jumps: tuple = field(default_factory=tuple)
    kinks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.T <= 0 or self.alpha <= 0 or self.beta <= 0:
            raise ValueError("T, alpha, beta must be positive")
        object.__setattr__(self, "jumps", _merge_entries(self.jumps))
        object.__setattr__(self, "kinks", _merge_entries(self.kinks))
        for x, _, _ in self.jumps + self.kinks:
            if not 0.0 < x < self.T:
                raise ValueError(f"atom position {x!r} outside (0, {self.T})")

    # ------------------------------------------------------------------ eval
    def __call__(self, x):
        """Evaluate pointwise (vectorized); right limits at jump positions."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > self.T):
            raise ValueError(f"evaluation point outside [0, {self.T}]")
        out = self.b + self.a * x_arr
        for pos, sign, weight in self.jumps:
            out = out + (sign * weight / self.alpha) * (x_arr >= pos)
        for pos, sign, weight in self.kinks:
            c = sign * weight / self.beta
            if pos < self.T / 2.0:
                out = out + c * np.maximum(pos - x_arr, 0.0)
            else:
                out = out + c * np.maximum(x_arr - pos, 0.0)
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return out

    # -------------------------------------------------------------- algebra
    def scaled(self, c: float) -> "SparseFunction":
        """Return ``c * u`` (signs absorb the sign of ``c``)."""
        sgn = 1 if c >= 0 else -1
        return SparseFunction(
            T=self.T,
            alpha=self.alpha,
            beta=self.beta,
            a=c * self.a,
            b=c * self.b,
            jumps=tuple((x, s * sgn, w * abs(c)) for x, s, w in self.jumps),
            kinks=tuple((x, s * sgn, w * abs(c)) for x, s, w in self.kinks),
        )

    def __add__(self, other: "SparseFunction") -> "SparseFunction":
        if not isinstance(other, SparseFunction):
            return NotImplemented
        if other.T != self.T or other.alpha != self.alpha or other.beta != self.beta:
            raise ValueError("can only add functions with identical (T, alpha, beta)")
        return SparseFunction(
            T=self.T,
            alpha=self.alpha,
            beta=self.beta,
            a=self.a + other.a,
            b=self.b + other.b,
            jumps=self.jumps + other.jumps,
            kinks=self.kinks + other.kinks,
        )

    def __sub__(self, other: "SparseFunction") -> "SparseFunction":
        if not isinstance(other, SparseFunction):
            return NotImplemented
        return self + other.scaled(-1.0)

    @property
    def atoms(self) -> tuple:
        """All atoms as :class:`ExtremalAtom`, jumps first, sorted by position."""
        return tuple(
            ExtremalAtom(JUMP, x, s) for x, s, _ in self.jumps
        ) + tuple(ExtremalAtom(KINK, x, s) for x, s, _ in self.kinks)

    @property
    def weights(self) -> np.ndarray:
        """Atom weights in the order of :attr:`atoms`."""
        return np.array(
            [w for _, _, w in self.jumps] + [w for _, _, w in self.kinks]
        )

    def breakpoints(self) -> np.ndarray:
        """Sorted interior positions where the function is not smooth."""
        pos = {x for x, _, _ in self.jumps} | {x for x, _, _ in self.kinks}
        return np.array(sorted(pos))

    # ----------------------------------------------------------- derivative
    def derivative(self) -> "DerivativeMeasure":
        """Distributional derivative Du: singular jump atoms + piecewise-constant density.

        Jumps contribute point masses ``sign*weight/alpha``; kinks contribute
        the slopes of their branch (``-sign*weight/beta`` on ``(0, x)`` for the
        left branch, ``+sign*weight/beta`` on ``(x, T)`` for the right branch)
        on top of the affine slope ``a``.
        """
        atoms = tuple((x, s * w / self.alpha) for x, s, w in self.jumps)
        cuts = sorted({x for x, _, _ in self.kinks})
        values = []
        for i in range(len(cuts) + 1):
            left = cuts[i - 1] if i > 0 else 0.0
            right = cuts[i] if i < len(cuts) else self.T
            mid = 0.5 * (left + right)
            slope = self.a
            for x, s, w in self.kinks:
                c = s * w / self.beta
                if x < self.T / 2.0:
                    if mid < x:
                        slope -= c
                else:
                    if mid > x:
                        slope += c
            values.append(slope)
        return DerivativeMeasure(
            atoms=atoms, breakpoints=tuple(cuts), values=tuple(values), T=self.T
        )

    # -------------------------------------------------------- serialization
    def to_json_dict(self) -> dict:
        return {
            "T": self.T,
            "alpha": self.alpha,
            "beta": self.beta,
            "a": self.a,
            "b": self.b,
            "jumps": [{"x": x, "sign": s, "weight": w} for x, s, w in self.jumps],
            "kinks": [{"x": x, "sign": s, "weight": w} for x, s, w in self.kinks],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @staticmethod
    def from_json_dict(obj: dict) -> "SparseFunction":
        return SparseFunction(
            T=float(obj["T"]),
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            a=float(obj.get("a", 0.0)),
            b=float(obj.get("b", 0.0)),
            jumps=tuple(
                (float(e["x"]), int(e["sign"]), float(e["weight"]))
                for e in obj.get("jumps", [])
            ),
            kinks=tuple(
                (float(e["x"]), int(e["sign"]), float(e["weight"]))
                for e in obj.get("kinks", [])
            ),
        )

    @staticmethod
    def from_json(text: str) -> "SparseFunction":
        return SparseFunction.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class DerivativeMeasure:
    """Decomposition of Du into singular atoms and a piecewise-constant density.

    ``atoms`` holds ``(position, mass)`` pairs for the jump part;
    ``values[i]`` is the density on the i-th interval of (0, T) cut at the
    strictly increasing ``breakpoints``.
    """

    atoms: tuple
    breakpoints: tuple
    values: tuple
    T: float

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("values must have one entry more than breakpoints")
        if any(
            b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])
        ):
            raise ValueError("breakpoints must be strictly increasing")

    def density_at(self, x) -> np.ndarray:
        """Density of the absolutely continuous part at points ``x``."""
        idx = np.searchsorted(np.asarray(self.breakpoints), np.asarray(x, dtype=float))
        return np.asarray(self.values, dtype=float)[idx]

    def singular_mass(self) -> float:
        """Total variation of the singular (jump) part."""
        return float(sum(abs(m) for _, m in self.atoms))


def atom_function(
    atom: ExtremalAtom, alpha: float, beta: float, T: float
) -> SparseFunction:
    """The scaled atom as a SparseFunction with unit weight (S_x/alpha or K_x/beta)."""
    entry = ((atom.position, atom.sign, 1.0),)
    if atom.kind == JUMP:
        return SparseFunction(T=T, alpha=alpha, beta=beta, jumps=entry)
    return SparseFunction(T=T, alpha=alpha, beta=beta, kinks=entry)


def assemble(
    atoms,
    weights,
    a: float,
    b: float,
    alpha: float,
    beta: float,
    T: float,
) -> SparseFunction:
    """Build the sparse function for given atoms, nonnegative weights and affine part."""
    atoms = list(atoms)
    weights = [float(w) for w in weights]
    if len(atoms) != len(weights):
        raise ValueError("atoms and weights must have the same length")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    jumps = [
        (at.position, at.sign, w)
        for at, w in zip(atoms, weights)
        if at.kind == JUMP
    ]
    kinks = [
        (at.position, at.sign, w)
        for at, w in zip(atoms, weights)
        if at.kind == KINK
    ]
    return SparseFunction(
        T=T, alpha=alpha, beta=beta, a=a, b=b, jumps=tuple(jumps), kinks=tuple(kinks)
    )


def l2_inner(u: SparseFunction, v: SparseFunction) -> float:
    """Exact integral of ``u*v`` over (0, T).

    Both functions are affine between their merged breakpoints, so a 3-point
    Gauss rule per interval integrates the quadratic product exactly.
    """
    if u.T != v.T:
        raise ValueError("mismatched domain lengths")
    cuts = np.unique(np.concatenate(([0.0, u.T], u.breakpoints(), v.breakpoints())))
    left = cuts[:-1]
    width = np.diff(cuts)
    # All Gauss nodes of all intervals in one batch (nodes are interior, so
    # jump-limit conventions never matter).
    pts = left[:, None] + width[:, None] * _GAUSS_NODES[None, :]
    prod = u(pts.ravel()) * v(pts.ravel())
    return float(
        np.sum(prod.reshape(pts.shape) * _GAUSS_WEIGHTS[None, :] * width[:, None])
    )


def l2_norm(u: SparseFunction) -> float:
    """L2 norm of a sparse function (exact)."""
    return math.sqrt(max(l2_inner(u, u), 0.0))
