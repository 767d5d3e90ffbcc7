"""Restricted Fourier measurements of sparse functions and the quadratic misfit.

The measurement operator maps u to its Fourier transform sampled at a finite
frequency list, (Hu)_j = integral_0^T u(x) exp(-i zeta_j x) dx.  For
piecewise-affine u this is evaluated in closed form from two primitives —
the transforms of 1 and x over an interval — written in terms of the entire
functions phi1(z) = (e^z - 1)/z and psi(z) = (e^z (z-1) + 1)/z^2 so that
small and zero frequencies are handled by their power series instead of
catastrophic cancellation.

The misfit is F(u) = (1/2) sum_j |(Hu)_j - m_j|^2; its gradient is the real
trigonometric polynomial sum_j Re(r_j) cos(zeta_j x) - Im(r_j) sin(zeta_j x)
with residual r = Hu - m, represented exactly by :class:`TrigPoly`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from tgv1d import kernels
from tgv1d.atoms import SparseFunction, _GAUSS_NODES, _GAUSS_WEIGHTS

__all__ = [
    "MeasurementSetup",
    "TrigPoly",
    "FourierFidelity",
    "forward",
    "forward_transform",
    "misfit",
    "grad_coeffs",
    "gradient_function",
    "synthesize",
    "trig_gram",
]

_SERIES_CUTOFF = 0.25
_SERIES_TERMS = 16


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, extended by the value 1 at z = 0 (power series when |z| small)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_CUTOFF
    zs = z[small]
    term = np.ones_like(zs)
    acc = np.ones_like(zs)
    for k in range(1, _SERIES_TERMS):
        term = term * zs / (k + 1)
        acc = acc + term
    out[small] = acc
    zl = z[~small]
    out[~small] = (np.exp(zl) - 1.0) / zl
    return out


def _psi(z: np.ndarray) -> np.ndarray:
    """(e^z (z - 1) + 1)/z^2, extended by 1/2 at z = 0 (power series when |z| small)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_CUTOFF
    zs = z[small]
    term = np.full_like(zs, 0.5)
    acc = np.full_like(zs, 0.5)
    for k in range(1, _SERIES_TERMS):
        term = term * zs * (k + 1) / (k * (k + 2))
        acc = acc + term
    out[small] = acc
    zl = z[~small]
    out[~small] = (np.exp(zl) * (zl - 1.0) + 1.0) / (zl * zl)
    return out


def _int_exp(a: float, b: float, zeta: np.ndarray) -> np.ndarray:
    """integral_a^b exp(-i zeta x) dx for an array of frequencies."""
    L = b - a
    z = -1j * np.asarray(zeta, dtype=float) * L
    return np.exp(-1j * np.asarray(zeta) * a) * L * _phi1(z)


def _int_xexp(a: float, b: float, zeta: np.ndarray) -> np.ndarray:
    """integral_a^b x exp(-i zeta x) dx for an array of frequencies."""
    L = b - a
    zeta = np.asarray(zeta, dtype=float)
    z = -1j * zeta * L
    return np.exp(-1j * zeta * a) * (a * L * _phi1(z) + L * L * _psi(z))


def forward_transform(u: SparseFunction, frequencies) -> np.ndarray:
    """Closed-form Fourier transform of a sparse function at given frequencies."""
    zeta = np.asarray(frequencies, dtype=float)
    T = u.T
    out = np.zeros(zeta.shape, dtype=complex)
    for x, s, w in u.jumps:
        out += (s * w / u.alpha) * _int_exp(x, T, zeta)
    for x, s, w in u.kinks:
        c = s * w / u.beta
        if x < T / 2.0:
            out += c * (x * _int_exp(0.0, x, zeta) - _int_xexp(0.0, x, zeta))
        else:
            out += c * (_int_xexp(x, T, zeta) - x * _int_exp(x, T, zeta))
    if u.a != 0.0:
        out += u.a * _int_xexp(0.0, T, zeta)
    if u.b != 0.0:
        out += u.b * _int_exp(0.0, T, zeta)
    return out


@dataclass(frozen=True)
class MeasurementSetup:
    """Frequency list, complex data vector, and domain length of one experiment.

    Construction validates that the measurement operator separates affine
    functions (full-rank 2x2 real Gram of the transforms of 1 and x), which
    the sparse-representation theory requires.
    """

    frequencies: tuple
    data: tuple
    T: float

    def __post_init__(self):
        freqs = tuple(float(z) for z in self.frequencies)
        data = tuple(complex(v) for v in self.data)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "data", data)
        if len(freqs) < 1:
            raise ValueError("at least one measurement frequency is required")
        if len(set(freqs)) != len(freqs):
            raise ValueError("measurement frequencies must be distinct")
        if len(data) != len(freqs):
            raise ValueError("data and frequency lists must have equal length")
        if self.T <= 0:
            raise ValueError("domain length T must be positive")
        h1 = _int_exp(0.0, self.T, np.array(freqs))
        hx = _int_xexp(0.0, self.T, np.array(freqs))
        g = np.array(
            [
                [np.vdot(h1, h1).real, np.vdot(h1, hx).real],
                [np.vdot(hx, h1).real, np.vdot(hx, hx).real],
            ]
        )
        if np.linalg.det(g) <= 1e-12 * max(g[0, 0] * g[1, 1], 1e-300):
            raise ValueError(
                "measurement operator does not separate affine functions "
                "(rank-deficient Gram of the transforms of 1 and x)"
            )

    @property
    def freq_array(self) -> np.ndarray:
        return np.array(self.frequencies)

    @property
    def data_array(self) -> np.ndarray:
        return np.array(self.data)

    def to_json_dict(self) -> dict:
        return {
            "T": self.T,
            "frequencies": list(self.frequencies),
            "data": [{"re": v.real, "im": v.imag} for v in self.data],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @staticmethod
    def from_json_dict(obj: dict) -> "MeasurementSetup":
        return MeasurementSetup(
            frequencies=tuple(obj["frequencies"]),
            data=tuple(complex(e["re"], e["im"]) for e in obj["data"]),
            T=float(obj["T"]),
        )

    @staticmethod
    def from_json(text: str) -> "MeasurementSetup":
        return MeasurementSetup.from_json_dict(json.loads(text))


def forward(u: SparseFunction, setup: MeasurementSetup) -> np.ndarray:
    """Measurement vector Hu."""
    return forward_transform(u, setup.freq_array)


def grad_coeffs(u: SparseFunction, setup: MeasurementSetup) -> np.ndarray:
    """Residual Hu - m, the complex coefficients defining the misfit gradient."""
    return forward(u, setup) - setup.data_array


def misfit(u: SparseFunction, setup: MeasurementSetup) -> float:
    """Quadratic misfit (1/2) ||Hu - m||^2."""
    r = grad_coeffs(u, setup)
    return 0.5 * float(np.vdot(r, r).real)


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial c_j cos(f_j x) + s_j sin(f_j x) + poly(x).

    ``poly`` holds ascending polynomial coefficients.  Antiderivatives stay in
    the class (frequencies unchanged, polynomial degree grows by one), which
    is exactly what the dual variables require.
    """

    freqs: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    poly: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))
        object.__setattr__(self, "cos", np.asarray(self.cos, dtype=float))
        object.__setattr__(self, "sin", np.asarray(self.sin, dtype=float))
        object.__setattr__(self, "poly", np.asarray(self.poly, dtype=float))
        if not (len(self.freqs) == len(self.cos) == len(self.sin)):
            raise ValueError("coefficient arrays must match the frequency list")
        if np.any(self.freqs == 0.0) and (
            np.any(self.cos[self.freqs == 0.0] != 0.0)
            or np.any(self.sin[self.freqs == 0.0] != 0.0)
        ):
            raise ValueError("zero-frequency terms must live in the polynomial part")

    def __call__(self, x):
        x_arr = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))
        y = kernels.trig_eval(
            x_arr,
            np.ascontiguousarray(self.freqs),
            np.ascontiguousarray(self.cos),
            np.ascontiguousarray(self.sin),
            np.ascontiguousarray(self.poly),
        )
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(y[0])
        return y

    def primitive(self) -> "TrigPoly":
        """Antiderivative vanishing at 0."""
        nz = self.freqs != 0.0
        new_cos = np.zeros_like(self.cos)
        new_sin = np.zeros_like(self.sin)
        const = 0.0
        new_cos[nz] = -self.sin[nz] / self.freqs[nz]
        new_sin[nz] = self.cos[nz] / self.freqs[nz]
        const = float(np.sum(self.sin[nz] / self.freqs[nz]))
        new_poly = np.zeros(len(self.poly) + 1)
        if len(self.poly):
            new_poly[1:] = self.poly / np.arange(1, len(self.poly) + 1)
        new_poly[0] = const
        return TrigPoly(self.freqs, new_cos, new_sin, new_poly)

    def derivative(self) -> "TrigPoly":
        new_cos = self.sin * self.freqs
        new_sin = -self.cos * self.freqs
        new_poly = (
            self.poly[1:] * np.arange(1, len(self.poly)) if len(self.poly) > 1 else np.zeros(0)
        )
        return TrigPoly(self.freqs, new_cos, new_sin, new_poly)

    def scaled(self, c: float) -> "TrigPoly":
        return TrigPoly(self.freqs, c * self.cos, c * self.sin, c * self.poly)

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not np.array_equal(self.freqs, other.freqs):
            raise ValueError("frequency lists differ")
        n = max(len(self.poly), len(other.poly))
        poly = np.zeros(n)
        poly[: len(self.poly)] += self.poly
        poly[: len(other.poly)] += other.poly
        return TrigPoly(self.freqs, self.cos + other.cos, self.sin + other.sin, poly)

    def inner(self, u: SparseFunction) -> float:
        """Exact L2 inner product with a sparse function.

        The trigonometric part reduces to the real/imaginary parts of the
        closed-form transform of u; the polynomial part (degree <= 2 in
        practice) is integrated piecewise with a Gauss rule exact for the
        resulting piecewise-cubic integrand.
        """
        total = 0.0
        nz = self.freqs != 0.0
        if np.any(nz):
            hu = forward_transform(u, self.freqs[nz])
            total += float(np.sum(self.cos[nz] * hu.real) - np.sum(self.sin[nz] * hu.imag))
        if len(self.poly) and np.any(self.poly != 0.0):
            cuts = np.unique(np.concatenate(([0.0, u.T], u.breakpoints())))
            left = cuts[:-1]
            width = np.diff(cuts)
            pts = (left[:, None] + width[:, None] * _GAUSS_NODES[None, :]).ravel()
            acc = np.full(pts.shape, self.poly[-1])
            for p in range(len(self.poly) - 2, -1, -1):
                acc = acc * pts + self.poly[p]
            prod = (u(pts) * acc).reshape(-1, 3)
            total += float(np.sum(prod * _GAUSS_WEIGHTS[None, :] * width[:, None]))
        return total


class FourierFidelity:
    """Measurement misfit bundled with the hooks the solver consumes.

    Exposes the misfit value, the complex residual, the gradient as an exact
    :class:`TrigPoly`, and the quadratic model of the misfit restricted to the
    span of a finite list of sparse functions.
    """

    def __init__(self, setup: MeasurementSetup):
        self.setup = setup

    @property
    def M0(self) -> float:
        """Misfit at u = 0, i.e. half the squared data norm."""
        m = self.setup.data_array
        return 0.5 * float(np.vdot(m, m).real)

    def value(self, u: SparseFunction) -> float:
        return misfit(u, self.setup)

    def residual(self, u: SparseFunction) -> np.ndarray:
        return grad_coeffs(u, self.setup)

    def gradient(self, u: SparseFunction) -> TrigPoly:
        return gradient_function(self.residual(u), self.setup)

    def quadratic_model(self, funcs):
        """(G, c, f0) with misfit(sum_i z_i funcs[i]) = z'Gz/2 - c'z + f0.

        Columns stack the real and imaginary parts of each function's
        measurement vector, so the complex misfit becomes an ordinary real
        least-squares quadratic.
        """
        m = self.setup.data_array
        cols = [forward(f, self.setup) for f in funcs]
        A = np.empty((2 * len(m), len(funcs)))
        for i, h in enumerate(cols):
            A[: len(m), i] = h.real
            A[len(m) :, i] = h.imag
        y = np.concatenate((m.real, m.imag))
        return A.T @ A, A.T @ y, 0.5 * float(y @ y)


def gradient_function(residual: np.ndarray, setup: MeasurementSetup) -> TrigPoly:
    """Misfit gradient as a trigonometric polynomial for a given residual vector."""
    r = np.asarray(residual, dtype=complex)
    freqs = setup.freq_array
    cos_c = r.real.copy()
    sin_c = -r.imag.copy()
    poly = np.zeros(0)
    zero = freqs == 0.0
    if np.any(zero):
        poly = np.array([float(np.sum(cos_c[zero]))])
        cos_c[zero] = 0.0
        sin_c[zero] = 0.0
    return TrigPoly(freqs, cos_c, sin_c, poly)


def synthesize(
    u_truth: SparseFunction,
    frequencies,
    noise_level: float,
    seed: int,
) -> MeasurementSetup:
    """Measurements of a ground truth with seeded complex Gaussian noise.

    The noise is rescaled so that ||m - Hu|| / ||Hu|| equals ``noise_level``
    exactly (real parts drawn before imaginary parts, for reproducibility).
    """
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    zeta = np.asarray(frequencies, dtype=float)
    clean = forward_transform(u_truth, zeta)
    data = clean
    if noise_level > 0:
        scale = float(np.linalg.norm(clean))
        if scale == 0.0:
            raise ValueError("cannot add relative noise to identically zero measurements")
        rng = np.random.default_rng(seed)
        eps = rng.standard_normal(len(zeta)) + 1j * rng.standard_normal(len(zeta))
        eps *= noise_level * scale / np.linalg.norm(eps)
        data = clean + eps
    return MeasurementSetup(frequencies=tuple(zeta), data=tuple(data), T=u_truth.T)


def trig_gram(frequencies, T: float) -> np.ndarray:
    """L2(0,T) Gram matrix of the 2M functions {cos(f_j x)} + {sin(f_j x)}.

    Its largest eigenvalue bounds ||H||^2 (hence the gradient Lipschitz
    constant of the misfit).  Entries come from the closed-form transforms:
    cos(fx) = Re e^{-ifx}, sin(fx) = -Im e^{-ifx}.
    """
    zeta = np.asarray(frequencies, dtype=float)
    M = len(zeta)
    G = np.zeros((2 * M, 2 * M))

    def int_cos(c):
        # integral_0^T cos(c x) dx
        return _int_exp(0.0, T, np.atleast_1d(c))[0].real

    def int_sin(c):
        # integral_0^T sin(c x) dx
        return -_int_exp(0.0, T, np.atleast_1d(c))[0].imag

    for i in range(M):
        for j in range(M):
            a, b = zeta[i], zeta[j]
            G[i, j] = 0.5 * (int_cos(a - b) + int_cos(a + b))
            G[M + i, M + j] = 0.5 * (int_cos(a - b) - int_cos(a + b))
            G[i, M + j] = 0.5 * (int_sin(a + b) - int_sin(a - b))
            G[M + i, j] = 0.5 * (int_sin(a + b) + int_sin(a - b))
    return G
