import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from popdisp.grid import (GridMismatch, GridSpec, ScalarField, gradient, integrate, inf_norm_diff,
                          neumann_laplacian, trapezoid_weights)


def field(n, fn, x0=0.0, x1=1.0):
    g = GridSpec(x0, x1, n)
    return ScalarField(g, fn(g.nodes()))


def test_gridspec_invariants():
    g = GridSpec(0, 1, 512)
    assert g.h == 1 / 512 and g.size == 513
    assert g.nodes()[0] == 0.0 and g.nodes()[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GridSpec(1, 0, 16)
    with pytest.raises(ValueError):
        GridSpec(0, 1, 4)


def test_field_is_read_only_and_sized():
    f = field(16, np.cos)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        ScalarField(GridSpec(0, 1, 16), np.ones(3))
    with pytest.raises(ValueError):
        ScalarField(GridSpec(0, 1, 8), np.full(9, np.nan))


def test_laplacian_of_constant_is_zero():
    f = ScalarField.constant(GridSpec(0, 1, 64), 3.7)
    assert np.all(neumann_laplacian(f).values == 0.0)


def test_laplacian_boundary_rows():
    f = field(8, lambda x: x**2)
    h = f.grid.h
    L = neumann_laplacian(f).values
    assert L[0] == pytest.approx(2 * (f.values[1] - f.values[0]) / h**2)
    assert L[-1] == pytest.approx(2 * (f.values[-2] - f.values[-1]) / h**2)


def _lap_error(n):
    f = field(n, lambda x: np.cos(np.pi * x))
    exact = -np.pi**2 * np.cos(np.pi * f.x)
    return np.abs(neumann_laplacian(f).values - exact).max()


def test_laplacian_second_order():
    errs = [_lap_error(n) for n in (64, 128, 256, 512)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(abs(q - 4) <= 0.4 for q in ratios), ratios
    assert _lap_error(256) < 1e-3


def test_gradient_exact_for_affine_and_constant():
    assert np.allclose(gradient(field(32, lambda x: x)).values, 1.0, atol=1e-12)
    assert np.all(gradient(ScalarField.constant(GridSpec(0, 1, 32), 2.0)).values == 0.0)


def test_gradient_second_order():
    def err(n):
        f = field(n, lambda x: np.cos(2 * np.pi * x))
        return np.abs(gradient(f).values + 2 * np.pi * np.sin(2 * np.pi * f.x)).max()
    e1, e2 = err(256), err(512)
    assert 3.6 <= e1 / e2 <= 4.4
    assert e1 < 1e-3


def test_integrate_examples():
    assert integrate(ScalarField.constant(GridSpec(0, 1, 16), 1.0)) == 1.0
    assert integrate(field(16, lambda x: x)) == pytest.approx(0.5, abs=1e-15)
    assert integrate(field(512, lambda x: 2 + np.cos(np.pi * x))) == pytest.approx(2.0, abs=1e-5)


def test_inf_norm_diff():
    K = field(64, lambda x: 2 + np.cos(np.pi * x))
    P = ScalarField.constant(K.grid, 1.0)
    assert inf_norm_diff(K, K) == 0.0
    assert inf_norm_diff(K, K + 0.25 * P) == pytest.approx(0.25, abs=1e-15)
    a = field(64, lambda x: 2 + np.cos(np.pi * x))
    b = field(64, lambda x: 2 - np.cos(np.pi * x))
    assert inf_norm_diff(a, b) == pytest.approx(2.0, abs=1e-15)
    assert np.argmax(np.abs(a.values - b.values)) == 0
    with pytest.raises(GridMismatch):
        inf_norm_diff(a, field(32, np.cos))


def test_field_arithmetic_requires_same_grid():
    with pytest.raises(GridMismatch):
        field(16, np.cos) + field(32, np.cos)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 300), st.data())
def test_discrete_conservation(n, data):
    g = GridSpec(0.0, data.draw(st.floats(0.5, 5.0)), n)
    w = ScalarField(g, data.draw(arrays(float, g.size, elements=finite)))
    total = float(trapezoid_weights(g) @ neumann_laplacian(w).values)
    assert abs(total) <= 1e-11 * max(w.sup_norm(), 1e-300) / g.h**2


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 200), st.data(), finite, finite)
def test_integrate_linear(n, data, a, b):
    g = GridSpec(0, 1, n)
    f = ScalarField(g, data.draw(arrays(float, g.size, elements=finite)))
    k = ScalarField(g, data.draw(arrays(float, g.size, elements=finite)))
    lhs = integrate(a * f + b * k)
    rhs = a * integrate(f) + b * integrate(k)
    scale = (abs(a) * np.abs(f.values).max() + abs(b) * np.abs(k.values).max() + 1.0)
    assert abs(lhs - rhs) <= 1e-13 * scale
