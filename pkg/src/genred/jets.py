"""Second-order forward-mode automatic differentiation on array values.

A :class:`Jet` carries the value of an array-valued function of ``m`` chart
coordinates together with its first and (optionally) second partial
derivatives. Derivative axes are appended after the value axes::

    v : S
    d : S + (m,)
    h : S + (m, m)

This is the multivariate form of a hyper-dual number truncated at order two.
Operations that differentiate (:meth:`Jet.deriv`) lower the order by one, so a
chain like ``bracket(e1, bracket(e2, e3))`` evaluated on an order-2 coordinate
jet ends with plain values.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "Jet",
    "variable",
    "constant",
    "as_jet",
    "einsum",
    "stack",
    "concatenate",
    "block",
    "inv",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "value",
]

_DERIV_LETTERS = ("Y", "Z")


class Jet:
    """Truncated Taylor expansion (order 0, 1 or 2) of an array-valued map."""

    __slots__ = ("v", "d", "h")
    __array_ufunc__ = None

    def __init__(self, v, d=None, h=None):
        self.v = np.asarray(v)
        self.d = None if d is None else np.asarray(d)
        self.h = None if h is None else np.asarray(h)
        if self.h is not None and self.d is None:
            raise ValueError("second derivatives given without first derivatives")

    # -- introspection -----------------------------------------------------
    @property
    def order(self) -> int:
        if self.d is None:
            return 0
        return 1 if self.h is None else 2

    @property
    def shape(self) -> tuple:
        return self.v.shape

    @property
    def ndim(self) -> int:
        return self.v.ndim

    @property
    def nvars(self) -> int | None:
        return None if self.d is None else self.d.shape[-1]

    def __len__(self) -> int:
        return len(self.v)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order == 0:
            return Jet(self.v)
        return Jet(self.v, self.d)

    def deriv(self) -> "Jet":
        """Jet of the derivative; the new trailing axis is the derivative index."""
        if self.d is None:
            raise ValueError("cannot differentiate an order-0 jet; evaluate at higher order")
        return Jet(self.d, self.h)

    # -- indexing and shape manipulation -----------------------------------
    def __getitem__(self, idx) -> "Jet":
        if idx is Ellipsis or (isinstance(idx, tuple) and any(i is Ellipsis for i in idx)):
            raise IndexError("Ellipsis indexing is ambiguous on jets")
        return Jet(
            self.v[idx],
            None if self.d is None else self.d[idx],
            None if self.h is None else self.h[idx],
        )

    def transpose(self, *axes) -> "Jet":
        n = self.ndim
        if not axes:
            axes = tuple(reversed(range(n)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        d = None if self.d is None else self.d.transpose(*axes, n)
        h = None if self.h is None else self.h.transpose(*axes, n, n + 1)
        return Jet(self.v.transpose(*axes), d, h)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def moveaxis(self, source: int, destination: int) -> "Jet":
        n = self.ndim
        source %= n
        destination %= n
        return Jet(
            np.moveaxis(self.v, source, destination),
            None if self.d is None else np.moveaxis(self.d, source, destination),
            None if self.h is None else np.moveaxis(self.h, source, destination),
        )

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        v = self.v.reshape(shape)
        d = None if self.d is None else self.d.reshape(v.shape + self.d.shape[-1:])
        h = None if self.h is None else self.h.reshape(v.shape + self.h.shape[-2:])
        return Jet(v, d, h)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis % self.ndim,)
        else:
            axis = tuple(a % self.ndim for a in axis)
        return Jet(
            self.v.sum(axis=axis),
            None if self.d is None else self.d.sum(axis=axis),
            None if self.h is None else self.h.sum(axis=axis),
        )

    def conj(self) -> "Jet":
        return Jet(
            np.conj(self.v),
            None if self.d is None else np.conj(self.d),
            None if self.h is None else np.conj(self.h),
        )

    @property
    def real(self) -> "Jet":
        return Jet(
            self.v.real,
            None if self.d is None else self.d.real,
            None if self.h is None else self.h.real,
        )

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.v, None if self.d is None else -self.d, None if self.h is None else -self.h)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = np.asarray(other)
            v = self.v + other
            return Jet(v, _broadcast_d(self.d, v.shape), _broadcast_h(self.h, v.shape))
        order = min(self.order, other.order)
        v = self.v + other.v
        d = h = None
        if order >= 1:
            d = self.d + other.d
        if order >= 2:
            h = self.h + other.h
        return Jet(v, d, h)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            c = np.asarray(other)
            return Jet(
                self.v * c,
                None if self.d is None else self.d * c[..., None],
                None if self.h is None else self.h * c[..., None, None],
            )
        order = min(self.order, other.order)
        a, b = self, other
        v = a.v * b.v
        d = h = None
        if order >= 1:
            d = a.d * b.v[..., None] + a.v[..., None] * b.d
        if order >= 2:
            h = (
                a.h * b.v[..., None, None]
                + a.v[..., None, None] * b.h
                + a.d[..., :, None] * b.d[..., None, :]
                + a.d[..., None, :] * b.d[..., :, None]
            )
        return Jet(v, d, h)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.v
        return _chain(self, r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, n) -> "Jet":
        if isinstance(n, (int, np.integer)):
            if n == 0:
                return Jet(np.ones_like(self.v), _zeros_like_d(self), _zeros_like_h(self))
            if n < 0:
                return (self ** (-n)).reciprocal()
            result = self
            for _ in range(n - 1):
                result = result * self
            return result
        n = float(n)
        v = self.v**n
        return _chain(self, v, n * self.v ** (n - 1), n * (n - 1) * self.v ** (n - 2))

    def __matmul__(self, other) -> "Jet":
        return _matmul(self, other)

    def __rmatmul__(self, other) -> "Jet":
        return _matmul(other, self)


def _zeros_like_d(a: Jet):
    return None if a.d is None else np.zeros_like(a.d)


def _zeros_like_h(a: Jet):
    return None if a.h is None else np.zeros_like(a.h)


def _broadcast_d(d, shape):
    if d is None:
        return None
    return np.broadcast_to(d, shape + d.shape[-1:])


def _broadcast_h(h, shape):
    if h is None:
        return None
    return np.broadcast_to(h, shape + h.shape[-2:])


def _chain(a: Jet, f0, f1, f2) -> Jet:
    """Apply an elementwise function with value f0 and derivatives f1, f2."""
    d = h = None
    if a.order >= 1:
        d = f1[..., None] * a.d
    if a.order >= 2:
        h = f1[..., None, None] * a.h + f2[..., None, None] * a.d[..., :, None] * a.d[..., None, :]
    return Jet(f0, d, h)


def _matmul(a, b) -> Jet:
    a_nd = np.ndim(a.v if isinstance(a, Jet) else a)
    b_nd = np.ndim(b.v if isinstance(b, Jet) else b)
    if a_nd == 2 and b_nd == 2:
        return einsum("ij,jk->ik", a, b)
    if a_nd == 2 and b_nd == 1:
        return einsum("ij,j->i", a, b)
    if a_nd == 1 and b_nd == 2:
        return einsum("i,ij->j", a, b)
    if a_nd == 1 and b_nd == 1:
        return einsum("i,i->", a, b)
    raise ValueError("jet matmul supports 1-D and 2-D operands only")


# -- construction --------------------------------------------------------------
def variable(p, order: int = 2) -> Jet:
    """Coordinate jet of the identity map at the chart point ``p``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("chart point must be 1-D")
    m = p.shape[0]
    if order == 0:
        return Jet(p.copy())
    d = np.eye(m)
    h = np.zeros((m, m, m)) if order >= 2 else None
    return Jet(p.copy(), d, h)


def constant(v, m: int, order: int) -> Jet:
    v = np.asarray(v)
    d = np.zeros(v.shape + (m,), dtype=v.dtype) if order >= 1 else None
    h = np.zeros(v.shape + (m, m), dtype=v.dtype) if order >= 2 else None
    return Jet(v, d, h)


def as_jet(x, like: Jet | None = None) -> Jet:
    if isinstance(x, Jet):
        return x
    if like is None or like.order == 0:
        return Jet(np.asarray(x))
    return constant(x, like.nvars, like.order)


def value(x):
    return x.v if isinstance(x, Jet) else np.asarray(x)


def _common(items) -> list[Jet]:
    """Bring jets and constants to a common order (the lowest among the jets)."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets or any(j.order == 0 for j in jets):
        return [Jet(value(it)) for it in items]
    ref = min(jets, key=lambda j: j.order)
    return [as_jet(it, ref).truncate(ref.order) for it in items]


def stack(items: Sequence, axis: int = 0) -> Jet:
    items = _common(list(items))
    n = items[0].ndim + 1
    axis %= n
    v = np.stack([it.v for it in items], axis=axis)
    d = h = None
    if items[0].order >= 1:
        d = np.stack([it.d for it in items], axis=axis)
    if items[0].order >= 2:
        h = np.stack([it.h for it in items], axis=axis)
    return Jet(v, d, h)


def concatenate(items: Sequence, axis: int = 0) -> Jet:
    items = _common(list(items))
    axis %= items[0].ndim
    v = np.concatenate([it.v for it in items], axis=axis)
    d = h = None
    if items[0].order >= 1:
        d = np.concatenate([it.d for it in items], axis=axis)
    if items[0].order >= 2:
        h = np.concatenate([it.h for it in items], axis=axis)
    return Jet(v, d, h)


def block(rows) -> Jet:
    """Assemble a 2-D jet from a nested list; ``None`` entries become zeros."""
    all_items = [it for row in rows for it in row if it is not None]
    ref_shapes_r = []
    for row in rows:
        hs = [value(it).shape[0] for it in row if it is not None]
        ref_shapes_r.append(hs[0])
    ref_shapes_c = []
    for j in range(len(rows[0])):
        ws = [value(row[j]).shape[1] for row in rows if row[j] is not None]
        ref_shapes_c.append(ws[0])
    dtype = np.result_type(*[value(it).dtype for it in all_items])
    filled = []
    for i, row in enumerate(rows):
        new_row = []
        for j, it in enumerate(row):
            new_row.append(np.zeros((ref_shapes_r[i], ref_shapes_c[j]), dtype=dtype) if it is None else it)
        filled.append(new_row)
    flat = _common([it for row in filled for it in row])
    ncols = len(rows[0])
    rows_j = [flat[i * ncols:(i + 1) * ncols] for i in range(len(filled))]
    return concatenate([concatenate(row, axis=1) for row in rows_j], axis=0)


# -- contractions --------------------------------------------------------------
def einsum(spec: str, *operands) -> Jet:
    """Multilinear contraction of jets and constant arrays with the product rule.

    ``spec`` uses explicit lowercase subscripts (no ellipsis).
    """
    if "->" not in spec:
        raise ValueError("einsum spec must be explicit")
    ins, out = spec.split("->")
    subs = ins.split(",")
    if len(subs) != len(operands):
        raise ValueError("operand count does not match subscripts")
    jets = [op for op in operands if isinstance(op, Jet)]
    if any(j.order == 0 for j in jets) or not jets:
        return Jet(np.einsum(spec, *[value(op) for op in operands]))
    order = min(j.order for j in jets)
    vals = [value(op) for op in operands]
    v = np.einsum(spec, *vals)
    active = [i for i, op in enumerate(operands) if isinstance(op, Jet)]
    Y, Z = _DERIV_LETTERS
    d = None
    for i in active:
        s = list(subs)
        s[i] = subs[i] + Y
        args = list(vals)
        args[i] = operands[i].d
        term = np.einsum(",".join(s) + "->" + out + Y, *args)
        d = term if d is None else d + term
    h = None
    if order >= 2:
        for i in active:
            s = list(subs)
            s[i] = subs[i] + Y + Z
            args = list(vals)
            args[i] = operands[i].h
            term = np.einsum(",".join(s) + "->" + out + Y + Z, *args)
            h = term if h is None else h + term
        for i in active:
            for j in active:
                if i == j:
                    continue
                s = list(subs)
                s[i] = subs[i] + Y
                s[j] = subs[j] + Z
                args = list(vals)
                args[i] = operands[i].d
                args[j] = operands[j].d
                h = h + np.einsum(",".join(s) + "->" + out + Y + Z, *args)
    return Jet(v, d, h)


def inv(a: Jet) -> Jet:
    """Matrix inverse of a square 2-D jet."""
    if not isinstance(a, Jet):
        return Jet(np.linalg.inv(np.asarray(a)))
    ainv = np.linalg.inv(a.v)
    d = h = None
    if a.order >= 1:
        d = -np.einsum("ij,jkY,kl->ilY", ainv, a.d, ainv)
    if a.order >= 2:
        t = np.einsum("ij,jkY,kl->ilY", ainv, a.d, ainv)  # A^-1 dA_Y A^-1
        h = -np.einsum("ij,jkYZ,kl->ilYZ", ainv, a.h, ainv)
        h = h + np.einsum("ijY,jk,klZ->ilYZ", t, a.v, t) + np.einsum("ijZ,jk,klY->ilYZ", t, a.v, t)
    return Jet(ainv, d, h)


# -- elementwise functions -------------------------------------------------------
def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    s, c = np.sin(a.v), np.cos(a.v)
    return _chain(a, s, c, -s)


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    s, c = np.sin(a.v), np.cos(a.v)
    return _chain(a, c, -s, -c)


def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    e = np.exp(a.v)
    return _chain(a, e, e, e)


def log(a):
    if not isinstance(a, Jet):
        return np.log(a)
    r = 1.0 / a.v
    return _chain(a, np.log(a.v), r, -r * r)


def sqrt(a):
    if not isinstance(a, Jet):
        return np.sqrt(a)
    s = np.sqrt(a.v)
    return _chain(a, s, 0.5 / s, -0.25 / (s * a.v))

