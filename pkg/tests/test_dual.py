import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mslab import dual
from mslab.dual import Dual


def fd_derivative(fn, x, eps=1e-6):
    return (fn(x + eps) - fn(x - eps)) / (2.0 * eps)


class TestArithmetic:
    def test_add_mul(self):
        a = Dual(2.0, 1.0)
        out = a * a + 3.0 * a - 1.0
        assert out.re == pytest.approx(9.0)
        assert out.du == pytest.approx(7.0)  # d/dx (x^2 + 3x - 1) at 2

    def test_division(self):
        a = Dual(4.0, 1.0)
        out = 1.0 / a
        assert out.re == pytest.approx(0.25)
        assert out.du == pytest.approx(-1.0 / 16.0)

    def test_integer_power(self):
        a = Dual(3.0, 1.0)
        out = a ** 4
        assert out.re == pytest.approx(81.0)
        assert out.du == pytest.approx(4.0 * 27.0)

    def test_float_power(self):
        a = Dual(2.0, 1.0)
        out = a ** 0.5
        assert out.re == pytest.approx(math.sqrt(2.0))
        assert out.du == pytest.approx(0.5 / math.sqrt(2.0))

    def test_comparisons_use_value(self):
        assert Dual(1.0, 99.0) < Dual(2.0, -99.0)
        assert Dual(2.0, 0.0) >= 2.0

    def test_float_strips(self):
        assert float(Dual(1.5, 2.0)) == 1.5
        assert dual.value(Dual(Dual(1.5, 1.0), 1.0)) == 1.5


class TestElementaryFunctions:
    @pytest.mark.parametrize("fn,dfn", [
        (dual.sin, math.cos),
        (dual.exp, math.exp),
        (dual.sqrt, lambda x: 0.5 / math.sqrt(x)),
        (dual.log, lambda x: 1.0 / x),
    ])
    def test_first_derivative(self, fn, dfn):
        x = 0.7
        out = fn(Dual(x, 1.0))
        assert out.du == pytest.approx(dfn(x), rel=1e-12)

    def test_cos(self):
        out = dual.cos(Dual(0.7, 1.0))
        assert out.du == pytest.approx(-math.sin(0.7), rel=1e-12)


class TestDerivativeHelpers:
    def test_derivative(self):
        fn = lambda x: x * dual.sin(x)
        assert dual.derivative(fn, 1.2) == pytest.approx(
            math.sin(1.2) + 1.2 * math.cos(1.2), rel=1e-12)

    def test_gradient(self):
        fn = lambda x, y: x * x * y + dual.exp(y)
        gx, gy = dual.gradient(fn, (2.0, 0.3))
        assert gx == pytest.approx(2.0 * 2.0 * 0.3, rel=1e-12)
        assert gy == pytest.approx(4.0 + math.exp(0.3), rel=1e-12)

    def test_hessian_symmetric_and_exact(self):
        fn = lambda x, y: x ** 3 * y + y * y
        h = dual.hessian(fn, (1.5, -0.5))
        assert h[0][0] == pytest.approx(6.0 * 1.5 * -0.5, rel=1e-12)
        assert h[0][1] == pytest.approx(3.0 * 1.5 ** 2, rel=1e-12)
        assert h[1][0] == pytest.approx(h[0][1], rel=1e-14)
        assert h[1][1] == pytest.approx(2.0, rel=1e-12)

    def test_partial_plain_floats(self):
        fn = lambda x, y: x * y + y
        assert dual.partial(fn, 0, (2.0, 3.0)) == pytest.approx(3.0)
        assert dual.partial(fn, 1, (2.0, 3.0)) == pytest.approx(3.0)

    def test_partial_inside_seeded_jacobian(self):
        # partial must stay differentiable when its arguments already carry
        # a tangent from an outer seeding (nested first derivatives).
        def grad0(x, y):
            return dual.partial(lambda a, b: a * a * b, 0, (x, y))

        outer = grad0(Dual(2.0, 1.0), 3.0)
        assert isinstance(outer, Dual)
        assert outer.re == pytest.approx(12.0)   # 2xy
        assert outer.du == pytest.approx(6.0)    # d/dx 2xy = 2y


@settings(max_examples=200, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_product_rule_property(x, y):
    f = lambda t: (t * t + 1.0) * dual.sin(t)
    expected = 2.0 * x * math.sin(x) + (x * x + 1.0) * math.cos(x)
    assert dual.derivative(f, x) == pytest.approx(expected, rel=1e-10, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 3.0))
def test_chain_rule_matches_fd(x):
    f = lambda t: dual.exp(dual.sin(t)) / dual.sqrt(t)
    exact = dual.derivative(f, x)
    approx = fd_derivative(lambda t: math.exp(math.sin(t)) / math.sqrt(t), x)
    assert exact == pytest.approx(approx, rel=1e-5, abs=1e-7)
