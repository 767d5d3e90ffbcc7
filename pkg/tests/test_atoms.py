"""Sparse piecewise-affine functions, their atoms, algebra and serialization."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from tgv1d.atoms import (
    JUMP,
    KINK,
    ExtremalAtom,
    SparseFunction,
    assemble,
    atom_function,
    l2_inner,
    l2_norm,
)


def mk(**kw):
    kw.setdefault("T", 10.0)
    kw.setdefault("alpha", 2.0)
    kw.setdefault("beta", 3.0)
    return SparseFunction(**kw)


# ---------------------------------------------------------------- ExtremalAtom


def test_atom_validation():
    with pytest.raises(ValueError):
        ExtremalAtom("step", 1.0, 1)
    with pytest.raises(ValueError):
        ExtremalAtom(JUMP, 1.0, 0)
    with pytest.raises(ValueError):
        ExtremalAtom(KINK, 1.0, 2)


def test_is_extremal():
    assert ExtremalAtom(JUMP, 0.001, 1).is_extremal(2.0, 3.0, 10.0)
    assert not ExtremalAtom(JUMP, 0.0, 1).is_extremal(2.0, 3.0, 10.0)
    assert not ExtremalAtom(JUMP, 10.0, 1).is_extremal(2.0, 3.0, 10.0)
    # kinks additionally need strict distance beta/alpha = 1.5 from the edge
    assert ExtremalAtom(KINK, 1.6, -1).is_extremal(2.0, 3.0, 10.0)
    assert not ExtremalAtom(KINK, 1.5, -1).is_extremal(2.0, 3.0, 10.0)
    assert not ExtremalAtom(KINK, 8.6, -1).is_extremal(2.0, 3.0, 10.0)


def test_scale_constant():
    assert ExtremalAtom(JUMP, 1.0, 1).scale(2.0, 3.0) == 2.0
    assert ExtremalAtom(KINK, 5.0, 1).scale(2.0, 3.0) == 3.0


# -------------------------------------------------------------- construction


def test_entries_sorted_and_merged():
    u = mk(jumps=((5.0, 1, 1.0), (2.0, 1, 2.0), (5.0, 1, 0.5)))
    assert u.jumps == ((2.0, 1, 2.0), (5.0, 1, 1.5))


def test_opposite_signs_cancel():
    u = mk(kinks=((4.0, 1, 1.0), (4.0, -1, 1.0)))
    assert u.kinks == ()
    u = mk(kinks=((4.0, 1, 1.0), (4.0, -1, 2.5)))
    assert u.kinks == ((4.0, -1, 1.5),)


def test_invalid_entries_raise():
    with pytest.raises(ValueError):
        mk(jumps=((5.0, 1, -1.0),))
    with pytest.raises(ValueError):
        mk(jumps=((0.0, 1, 1.0),))
    with pytest.raises(ValueError):
        mk(kinks=((10.0, 1, 1.0),))
    with pytest.raises(ValueError):
        mk(T=-1.0)


# ----------------------------------------------------------------- evaluation


def test_jump_right_limits():
    u = mk(jumps=((4.0, 1, 2.0),))  # height 2/alpha = 1 on [4, T)
    assert u(3.999) == 0.0
    assert u(4.0) == 1.0
    assert u(10.0) == 1.0


def test_kink_branches():
    # left branch (position < T/2): weight/beta * max(pos - x, 0)
    u = mk(kinks=((3.0, 1, 3.0),))
    assert u(0.0) == pytest.approx(3.0)
    assert u(3.0) == 0.0
    assert u(7.0) == 0.0
    # right branch (position >= T/2): weight/beta * max(x - pos, 0)
    v = mk(kinks=((7.0, -1, 3.0),))
    assert v(3.0) == 0.0
    assert v(10.0) == pytest.approx(-3.0)


def test_affine_part_and_vectorized_eval():
    u = mk(a=3.0, b=2.0)
    x = np.linspace(0.0, 10.0, 11)
    np.testing.assert_allclose(u(x), 3.0 * x + 2.0)
    with pytest.raises(ValueError):
        u(10.5)


# -------------------------------------------------------------------- algebra


def test_scaled_matches_pointwise():
    u = mk(a=1.0, b=-2.0, jumps=((4.0, 1, 2.0),), kinks=((6.0, -1, 1.0),))
    x = np.linspace(0.0, 10.0, 201)
    np.testing.assert_allclose(u.scaled(2.5)(x), 2.5 * u(x))
    np.testing.assert_allclose(u.scaled(-1.0)(x), -u(x))
    assert all(w >= 0 for _, _, w in u.scaled(-1.0).jumps)


def test_add_sub_match_pointwise():
    u = mk(a=1.0, jumps=((4.0, 1, 2.0),))
    v = mk(b=3.0, kinks=((6.0, -1, 1.0),))
    x = np.linspace(0.0, 10.0, 201)
    np.testing.assert_allclose((u + v)(x), u(x) + v(x))
    np.testing.assert_allclose((u - v)(x), u(x) - v(x))
    with pytest.raises(ValueError):
        u + mk(T=5.0, jumps=((1.0, 1, 1.0),))


def test_atoms_weights_order():
    u = mk(jumps=((4.0, 1, 2.0), (2.0, -1, 1.0)), kinks=((6.0, -1, 3.0),))
    kinds = [a.kind for a in u.atoms]
    assert kinds == [JUMP, JUMP, KINK]
    assert [a.position for a in u.atoms] == [2.0, 4.0, 6.0]
    np.testing.assert_allclose(u.weights, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(u.breakpoints(), [2.0, 4.0, 6.0])


# ----------------------------------------------------------------- derivative


def test_derivative_density_and_atoms():
    u = mk(a=1.5, jumps=((4.0, -1, 2.0),), kinks=((3.0, 1, 3.0), (7.0, 1, 3.0)))
    d = u.derivative()
    # jump point mass: sign * weight / alpha
    assert d.atoms == ((4.0, -1.0),)
    assert d.breakpoints == (3.0, 7.0)
    # left-branch kink at 3 has slope -1 on (0,3); right-branch at 7 slope +1 on (7,T)
    np.testing.assert_allclose(d.values, (1.5 - 1.0, 1.5, 1.5 + 1.0))
    np.testing.assert_allclose(d.density_at([1.0, 5.0, 9.0]), [0.5, 1.5, 2.5])
    assert d.singular_mass() == pytest.approx(1.0)


def test_derivative_matches_finite_differences():
    u = mk(a=0.7, b=1.0, jumps=((2.5, 1, 1.0),), kinks=((6.5, -1, 2.0),))
    d = u.derivative()
    h = 1e-7
    for x in (1.0, 4.0, 8.0):  # away from breakpoints
        fd = (u(x + h) - u(x - h)) / (2 * h)
        assert fd == pytest.approx(float(d.density_at(x)), abs=1e-6)


# -------------------------------------------------------------- serialization


def test_json_round_trip_exact():
    u = mk(a=3.0, b=-2.0, jumps=((6.3, 1, 11.025),), kinks=((2.0, -1, 11.404800000000002),))
    v = SparseFunction.from_json(u.to_json())
    assert v == u


# ------------------------------------------------------------------- assemble


def test_assemble_matches_manual_sum():
    atoms = [ExtremalAtom(JUMP, 4.0, 1), ExtremalAtom(KINK, 6.0, -1)]
    u = assemble(atoms, [2.0, 3.0], 1.0, -1.0, 2.0, 3.0, 10.0)
    manual = (
        atom_function(atoms[0], 2.0, 3.0, 10.0).scaled(2.0)
        + atom_function(atoms[1], 2.0, 3.0, 10.0).scaled(3.0)
        + mk(a=1.0, b=-1.0)
    )
    x = np.linspace(0.0, 10.0, 301)
    np.testing.assert_allclose(u(x), manual(x))


def test_assemble_validates():
    atoms = [ExtremalAtom(JUMP, 4.0, 1)]
    with pytest.raises(ValueError):
        assemble(atoms, [1.0, 2.0], 0.0, 0.0, 2.0, 3.0, 10.0)
    with pytest.raises(ValueError):
        assemble(atoms, [-1.0], 0.0, 0.0, 2.0, 3.0, 10.0)


# ------------------------------------------------------------------ l2 inner


def test_l2_inner_matches_quadrature():
    u = mk(a=0.5, b=1.0, jumps=((2.5, 1, 2.0),), kinks=((6.0, -1, 3.0),))
    v = mk(a=-0.2, b=0.3, jumps=((7.5, -1, 1.0),), kinks=((4.0, 1, 1.5),))
    ref, _ = quad(lambda x: u(x) * v(x), 0.0, 10.0,
                  points=[2.5, 4.0, 6.0, 7.5], limit=200)
    assert l2_inner(u, v) == pytest.approx(ref, abs=1e-10)
    assert l2_norm(u) == pytest.approx(math.sqrt(l2_inner(u, u)))
    with pytest.raises(ValueError):
        l2_inner(u, mk(T=5.0))
