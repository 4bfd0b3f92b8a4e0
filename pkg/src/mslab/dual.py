"""Forward-mode dual numbers for exact first and second derivatives.

A :class:`Dual` carries a value and a tangent.  Arithmetic follows the usual
truncated-Taylor rules, and because the components may themselves be duals,
nesting two levels gives exact second derivatives (the tangent of the outer
tangent).  This is all the automatic differentiation the package needs:
densities and mechanical Lagrangians are smooth scalar maps of a handful of
arguments, so forward mode with a few seeded evaluations beats dragging in a
tape-based AD dependency.

Only the operations the model problems require are implemented
(+, -, *, /, powers, sin/cos/exp/log/sqrt); each elementary function recurses
through nesting, so the same definitions serve first and second order.
"""

from __future__ import annotations

import math

_SCALARS = (int, float)


def _zero_like(x):
    """A zero of the same algebraic level as ``x`` (float or nested Dual)."""
    if isinstance(x, Dual):
        return Dual(_zero_like(x.re), _zero_like(x.du))
    return 0.0


class Dual:
    """Truncated first-order Taylor number ``re + eps * du`` with eps**2 = 0."""

    __slots__ = ("re", "du")

    def __init__(self, re, du=0.0):
        self.re = re
        self.du = du

    def _coerce(self, other):
        if isinstance(other, Dual):
            return other
        if isinstance(other, _SCALARS):
            return Dual(other, _zero_like(self.re))
        return None

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r})"

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.re + o.re, self.du + o.du)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.re, -self.du)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.re - o.re, self.du - o.du)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(o.re - self.re, o.du - self.du)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.re * o.re, self.re * o.du + self.du * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        q = self.re / o.re
        return Dual(q, (self.du - q * o.du) / o.re)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            if exponent == 0:
                return Dual(1.0 + _zero_like(self.re), _zero_like(self.re))
            if exponent < 0:
                return 1.0 / (self ** (-exponent))
            result = self
            for _ in range(exponent - 1):
                result = result * self
            return result
        if isinstance(exponent, float):
            return exp(exponent * log(self))
        return NotImplemented

    # Ordering acts on the value part (used by line searches and tolerances).

    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)

    def __float__(self):
        return value(self)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.du)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -(sin(x.re)) * x.du)
    return math.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.du)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.du / x.re)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.re)
        return Dual(s, 0.5 * x.du / s)
    return math.sqrt(x)


def value(x):
    """Strip all tangent parts, returning the underlying float."""
    while isinstance(x, Dual):
        x = x.re
    return float(x)


def _tangent(y):
    return value(y.du) if isinstance(y, Dual) else 0.0


def derivative(fn, x):
    """d fn / dx at a scalar point by one dual evaluation."""
    return _tangent(fn(Dual(float(x), 1.0)))


def gradient(fn, args):
    """Gradient of ``fn(*args)`` (scalar args) via one dual pass per argument."""
    args = [float(a) for a in args]
    out = []
    for k in range(len(args)):
        seeded = [Dual(a, 1.0 if j == k else 0.0) for j, a in enumerate(args)]
        out.append(_tangent(fn(*seeded)))
    return out


def partial(fn, index, args):
    """Partial derivative of ``fn`` w.r.t. ``args[index]``, level-preserving.

    Unlike :func:`gradient` the arguments may themselves be duals; the
    result then carries their tangent structure, so this composes inside
    outer dual computations (e.g. building exact Newton Jacobians of
    residuals that contain first derivatives).
    """
    seeded = []
    for j, a in enumerate(args):
        if isinstance(a, Dual):
            tang = a * 0.0
            if j == index:
                tang = tang + 1.0
        else:
            tang = 1.0 if j == index else 0.0
        seeded.append(Dual(a, tang))
    out = fn(*seeded)
    if isinstance(out, Dual):
        return out.du
    return 0.0


def hessian(fn, args):
    """Dense symmetric Hessian of ``fn(*args)`` via nested dual evaluations."""
    args = [float(a) for a in args]
    m = len(args)
    h = [[0.0] * m for _ in range(m)]
    for a in range(m):
        for b in range(a, m):
            seeded = []
            for j, x in enumerate(args):
                inner = Dual(x, 1.0 if j == a else 0.0)
                seeded.append(Dual(inner, Dual(1.0 if j == b else 0.0, 0.0)))
            y = fn(*seeded)
            h_ab = 0.0
            if isinstance(y, Dual) and isinstance(y.du, Dual):
                h_ab = value(y.du.du)
            h[a][b] = h_ab
            h[b][a] = h_ab
    return h
