"""Measurement operator, misfit, trig-polynomial gradients and synthetic data."""

import numpy as np
import pytest
from scipy.integrate import quad

from tgv1d.atoms import SparseFunction
from tgv1d.fourier import (
    FourierFidelity,
    MeasurementSetup,
    TrigPoly,
    forward_transform,
    gradient_function,
    misfit,
    synthesize,
    trig_gram,
)
from tgv1d.oracles import forward_quad

from conftest import ALPHA, BETA, FREQUENCIES, NOISE_LEVEL, SEED, T, make_truth


def mk(**kw):
    kw.setdefault("T", 10.0)
    kw.setdefault("alpha", 2.0)
    kw.setdefault("beta", 3.0)
    return SparseFunction(**kw)


# ------------------------------------------------------------ forward operator


def test_forward_matches_quadrature():
    u = mk(a=0.4, b=-1.2, jumps=((2.5, 1, 2.0),), kinks=((6.5, -1, 3.0),))
    for zeta in (0.0, 0.7, 3.3):
        closed = forward_transform(u, [zeta])[0]
        assert abs(closed - forward_quad(u, zeta)) <= 1e-10


def test_forward_linear_in_u():
    u = mk(jumps=((2.5, 1, 2.0),))
    v = mk(kinks=((6.5, -1, 3.0),))
    z = np.array([0.9, 4.1])
    np.testing.assert_allclose(
        forward_transform(u + v, z),
        forward_transform(u, z) + forward_transform(v, z),
        atol=1e-13,
    )


# ----------------------------------------------------------- measurement setup


def test_setup_validation():
    with pytest.raises(ValueError):
        MeasurementSetup(frequencies=(1.0, 1.0), data=(0j, 0j), T=10.0)
    with pytest.raises(ValueError):
        MeasurementSetup(frequencies=(1.0,), data=(0j, 0j), T=10.0)


def test_setup_json_round_trip(setup):
    again = MeasurementSetup.from_json(setup.to_json())
    assert again == setup


# -------------------------------------------------------------------- misfit


def test_misfit_zero_on_clean_data(truth):
    clean = synthesize(truth, FREQUENCIES, 0.0, 0)
    assert misfit(truth, clean) == pytest.approx(0.0, abs=1e-20)


def test_synthesize_exact_relative_noise(truth):
    noisy = synthesize(truth, FREQUENCIES, NOISE_LEVEL, SEED)
    clean = synthesize(truth, FREQUENCIES, 0.0, 0)
    eps = noisy.data_array - clean.data_array
    rel = np.linalg.norm(eps) / np.linalg.norm(clean.data_array)
    assert rel == pytest.approx(NOISE_LEVEL, abs=1e-15)


def test_synthesize_seed_determinism(truth):
    a = synthesize(truth, FREQUENCIES, 0.1, 7)
    b = synthesize(truth, FREQUENCIES, 0.1, 7)
    c = synthesize(truth, FREQUENCIES, 0.1, 8)
    assert a == b
    assert a != c
    with pytest.raises(ValueError):
        synthesize(truth, FREQUENCIES, -0.1, 0)


# ----------------------------------------------------------------- trig polys


def test_trig_poly_primitive_and_derivative():
    g = TrigPoly(
        np.array([0.9, 2.3]), np.array([1.0, -0.4]), np.array([0.2, 0.7]),
        np.array([0.5, -0.1]),
    )
    p = g.primitive()
    assert p(0.0) == pytest.approx(0.0, abs=1e-15)
    x = np.linspace(0.0, 10.0, 7)
    np.testing.assert_allclose(p.derivative()(x), g(x), atol=1e-12)
    # primitive really integrates g
    val, _ = quad(g, 0.0, 4.0, limit=200)
    assert p(4.0) == pytest.approx(val, abs=1e-10)


def test_trig_poly_inner_matches_quadrature():
    g = TrigPoly(np.array([1.1]), np.array([0.8]), np.array([-0.3]), np.zeros(0))
    u = mk(a=0.5, b=1.0, jumps=((2.5, 1, 2.0),), kinks=((6.0, -1, 3.0),))
    ref, _ = quad(lambda x: g(x) * u(x), 0.0, 10.0, points=[2.5, 6.0], limit=200)
    assert g.inner(u) == pytest.approx(ref, abs=1e-10)


def test_gradient_function_moves_dc_to_poly():
    setup = MeasurementSetup(frequencies=(0.0, 1.0), data=(1 + 0j, 0j), T=10.0)
    g = gradient_function(np.array([2.0 + 5.0j, 1.0 - 1.0j]), setup)
    # the zero-frequency cosine is a constant: it must live in the poly part
    np.testing.assert_allclose(g.poly, [2.0])
    assert g.cos[0] == 0.0 and g.sin[0] == 0.0
    assert g(0.0) == pytest.approx(2.0 + 1.0)  # cos(0) terms


# ------------------------------------------------------------------- fidelity


def test_fidelity_gradient_matches_finite_differences(fidelity, truth):
    u = truth
    v = mk(T=T, alpha=ALPHA, beta=BETA, jumps=((3.1, 1, 1.0),), kinks=((5.2, -1, 2.0),))
    g = fidelity.gradient(u)
    t = 1e-6
    fd = (fidelity.value(u + v.scaled(t)) - fidelity.value(u + v.scaled(-t))) / (2 * t)
    assert g.inner(v) == pytest.approx(fd, rel=1e-6)


def test_quadratic_model_reproduces_value(fidelity):
    funcs = [
        mk(T=T, alpha=ALPHA, beta=BETA, jumps=((4.0, 1, 1.0),)),
        mk(T=T, alpha=ALPHA, beta=BETA, kinks=((6.0, -1, 1.0),)),
        mk(T=T, alpha=ALPHA, beta=BETA, a=1.0),
        mk(T=T, alpha=ALPHA, beta=BETA, b=1.0),
    ]
    G, c, f0 = fidelity.quadratic_model(funcs)
    rng = np.random.default_rng(11)
    for _ in range(5):
        z = rng.uniform(-2.0, 2.0, 4)
        combo = funcs[0].scaled(z[0])
        for f, zi in zip(funcs[1:], z[1:]):
            combo = combo + f.scaled(zi)
        direct = fidelity.value(combo)
        model = 0.5 * z @ G @ z - c @ z + f0
        assert model == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_m0_is_half_squared_data_norm(fidelity, setup):
    m = setup.data_array
    assert fidelity.M0 == pytest.approx(0.5 * float(np.vdot(m, m).real), abs=0.0)


# ------------------------------------------------------------------ trig gram


def test_trig_gram_matches_quadrature():
    freqs = (0.9, 2.3)
    G = trig_gram(freqs, 10.0)
    basis = [lambda x, f=f: np.cos(f * x) for f in freqs] + [
        lambda x, f=f: np.sin(f * x) for f in freqs
    ]
    for i in range(4):
        for j in range(4):
            ref, _ = quad(lambda x: basis[i](x) * basis[j](x), 0.0, 10.0, limit=200)
            assert G[i, j] == pytest.approx(ref, abs=1e-10)
