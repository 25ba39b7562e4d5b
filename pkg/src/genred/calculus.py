"""Smooth fields on a coordinate chart of R^m and the twisted Courant bracket.

Fields are closures ``x -> Jet`` over a coordinate jet ``x`` (see
:mod:`genred.jets`). Component conventions:

* vector field: shape ``(m,)``, components ``X^a``;
* k-form: fully antisymmetric array of shape ``(m,)*k`` with
  ``alpha[i1..ik] = alpha(d_i1, .., d_ik)``;
* generalized section ``X + xi``: shape ``(2m,)``, vector part first.

Frames of sections carry a trailing batch axis, ``(2m, k)``; the bracket of two
frames of widths p and q has shape ``(2m, p, q)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .jets import Jet

__all__ = [
    "Field",
    "scalar_field",
    "vector_field",
    "form_field",
    "section_field",
    "matrix_field",
    "constant_field",
    "zero_form",
    "section",
    "pairing",
    "pairing_jet",
    "exterior_derivative",
    "d_jet",
    "interior",
    "evaluate_form",
    "wedge_basis",
    "lie_bracket_jet",
    "bracket_jet",
    "courant_bracket",
    "b_transform",
    "b_transform_matrix",
    "form_to_map",
    "map_to_form",
    "axioms_residual",
    "AxiomResiduals",
    "splitting_curvature",
    "random_polynomial_field",
    "antisymmetrize",
    "axiom_suite",
    "nonclosed_twist",
]

KINDS = ("scalar", "vector", "form", "section", "matrix")


@dataclass(frozen=True)
class Field:
    """A smooth map from chart coordinates to an array, evaluable on jets.

    ``kind`` is one of scalar / vector / form / section / matrix; ``degree``
    is the form degree (0 for non-forms).
    """

    fn: Callable[[Jet], Jet]
    m: int
    kind: str = "matrix"
    degree: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")

    def __call__(self, x: Jet) -> Jet:
        out = self.fn(x)
        if not isinstance(out, Jet):
            out = jets.as_jet(out, x)
        return out

    def at(self, p, order: int = 0) -> Jet:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.m,):
            raise ValueError(f"point has shape {p.shape}, chart dimension is {self.m}")
        return self(jets.variable(p, order))

    def value(self, p) -> np.ndarray:
        # order 2 so that fields built from up to two derivatives still evaluate
        return self.at(p, 2).v

    # convenience for the generalized-section kind
    @property
    def vector_part(self) -> "Field":
        if self.kind != "section":
            raise TypeError("vector_part is defined for generalized sections")
        m = self.m
        return Field(lambda x: self(x)[:m], m, "vector")

    @property
    def form_part(self) -> "Field":
        if self.kind != "section":
            raise TypeError("form_part is defined for generalized sections")
        m = self.m
        return Field(lambda x: self(x)[m:], m, "form", 1)


def scalar_field(fn, m: int, name: str = "") -> Field:
    return Field(fn, m, "scalar", 0, name)


def vector_field(fn, m: int, name: str = "") -> Field:
    return Field(fn, m, "vector", 0, name)


def form_field(fn, m: int, degree: int, name: str = "") -> Field:
    return Field(fn, m, "form", degree, name)


def section_field(fn, m: int, name: str = "") -> Field:
    return Field(fn, m, "section", 0, name)


def matrix_field(fn, m: int, name: str = "") -> Field:
    return Field(fn, m, "matrix", 0, name)


def constant_field(array, m: int, kind: str = "matrix", degree: int = 0, name: str = "") -> Field:
    array = np.array(array)
    return Field(lambda x: jets.as_jet(array, x), m, kind, degree, name)


def zero_form(m: int, degree: int) -> Field:
    return constant_field(np.zeros((m,) * degree), m, "form", degree)


def section(vector: Field | None, form: Field | None, m: int | None = None) -> Field:
    """The generalized section X + xi from its two parts (either may be None)."""
    m = m or (vector.m if vector is not None else form.m)
    zero = np.zeros(m)

    def fn(x):
        X = vector(x) if vector is not None else jets.as_jet(zero, x)
        xi = form(x) if form is not None else jets.as_jet(zero, x)
        return jets.concatenate([X, xi])

    return section_field(fn, m)


# -- algebra ------------------------------------------------------------------
def antisymmetrize(t: np.ndarray) -> np.ndarray:
    """Antisymmetric part of a k-tensor (average over signed permutations)."""
    k = t.ndim
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        out = out + _perm_sign(perm) * np.transpose(t, perm)
    return out / math.factorial(k)


def antisymmetrize_leading(t: np.ndarray) -> np.ndarray:
    """Antisymmetrize all axes but the first (a batch of k-tensors)."""
    k = t.ndim - 1
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        out = out + _perm_sign(perm) * np.transpose(t, (0,) + tuple(p + 1 for p in perm))
    return out / math.factorial(k)


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def wedge_basis(m: int, *indices: int) -> np.ndarray:
    """Components of dx^{i1} ^ ... ^ dx^{ik} (0-based indices)."""
    k = len(indices)
    t = np.zeros((m,) * k)
    for perm in itertools.permutations(range(k)):
        t[tuple(indices[p] for p in perm)] = _perm_sign(perm)
    return t


def form_to_map(omega):
    """Matrix of X -> i_X omega for a 2-form given by components."""
    return omega.T


def map_to_form(a):
    """Components of the 2-form whose map X -> i_X omega has matrix ``a``."""
    return a.T


def pairing_jet(a, b):
    """<a, b> for sections (2m,) or frames (2m, p) x (2m, q)."""
    m = jets.value(a).shape[0] // 2
    if jets.value(a).ndim == 1 and jets.value(b).ndim == 1:
        return jets.einsum("i,i->", a[:m], b[m:]) + jets.einsum("i,i->", a[m:], b[:m])
    a2 = _as_frame(a)
    b2 = _as_frame(b)
    return jets.einsum("ip,iq->pq", a2[:m], b2[m:]) + jets.einsum("ip,iq->pq", a2[m:], b2[:m])


def pairing(e1: Field, e2: Field, p) -> float:
    """<X + xi, Y + eta> = eta(X) + xi(Y) at a chart point."""
    if e1.m != e2.m:
        raise ValueError("sections live on charts of different dimension")
    return float(np.real_if_close(pairing_jet(e1.value(p), e2.value(p)).v))


def interior(X, alpha):
    """i_X alpha (contraction into the first slot)."""
    k = jets.value(alpha).ndim
    letters = "abcdefgh"[:k]
    return jets.einsum(f"a,{letters}->{letters[1:]}", X, alpha)


def evaluate_form(alpha, *vectors):
    k = jets.value(alpha).ndim
    if len(vectors) != k:
        raise ValueError("number of vectors must equal the form degree")
    letters = "abcdefgh"[:k]
    spec = letters + "," + ",".join(letters) + "->"
    return jets.einsum(spec, alpha, *vectors)


def d_jet(alpha: Jet) -> Jet:
    """Exterior derivative on components: (d a)_{i0..ik} = sum_p (-1)^p d_{ip} a_{..^ip..}."""
    D = alpha.deriv()  # shape (m,)*k + (m,)
    k = jets.value(alpha).ndim
    out = None
    for p in range(k + 1):
        term = D.moveaxis(-1, p) if k > 0 else D
        term = term * ((-1) ** p)
        out = term if out is None else out + term
    return out


def exterior_derivative(field: Field) -> Field:
    """d of a k-form field (k <= 3); scalar fields are 0-forms."""
    if field.kind == "scalar":
        degree = 0
    elif field.kind == "form":
        degree = field.degree
    else:
        raise TypeError("exterior derivative needs a scalar or form field")
    if degree > 3:
        raise ValueError("exterior derivative is implemented up to degree 3")
    return form_field(lambda x: d_jet(field(x)), field.m, degree + 1)


# -- brackets -----------------------------------------------------------------
def _as_frame(a):
    if jets.value(a).ndim == 1:
        return a.reshape(jets.value(a).shape[0], 1)
    return a


def lie_bracket_jet(X, Y):
    """[X, Y]^j = X^i d_i Y^j - Y^i d_i X^j for frames (m, p) and (m, q)."""
    single = jets.value(X).ndim == 1 and jets.value(Y).ndim == 1
    X = _as_frame(X)
    Y = _as_frame(Y)
    DX = X.deriv()  # (m, p, m)
    DY = Y.deriv()
    Xt = X.truncate(DX.order)
    Yt = Y.truncate(DY.order)
    out = jets.einsum("ip,jqi->jpq", Xt, DY) - jets.einsum("iq,jpi->jpq", Yt, DX)
    return out[:, 0, 0] if single else out


def bracket_jet(a, b, H=None):
    """Twisted Courant (Dorfman) bracket [X+xi, Y+eta]_H on frames.

    [X,Y] + L_X eta - i_Y d xi + i_Y i_X H.
    Inputs of shape (2m,) return (2m,); frames (2m,p), (2m,q) return (2m,p,q).
    """
    single = jets.value(a).ndim == 1 and jets.value(b).ndim == 1
    a = _as_frame(a)
    b = _as_frame(b)
    m = jets.value(a).shape[0] // 2
    X, xi = a[:m], a[m:]
    Y, eta = b[:m], b[m:]
    DX, Dxi = X.deriv(), xi.deriv()
    DY, Deta = Y.deriv(), eta.deriv()
    order = min(DX.order, DY.order)
    X, xi, Y, eta = (t.truncate(order) for t in (X, xi, Y, eta))

    vec = jets.einsum("ip,jqi->jpq", X, DY) - jets.einsum("iq,jpi->jpq", Y, DX)
    # L_X eta = X^a d_a eta_b + eta_a d_b X^a
    lie = jets.einsum("ap,bqa->bpq", X, Deta) + jets.einsum("aq,apb->bpq", eta, DX)
    # i_Y d xi = Y^a (d_a xi_b - d_b xi_a)
    iyd = jets.einsum("aq,bpa->bpq", Y, Dxi) - jets.einsum("aq,apb->bpq", Y, Dxi)
    form = lie - iyd
    if H is not None:
        Hj = H.truncate(order) if isinstance(H, Jet) else H
        form = form + jets.einsum("ap,bq,abc->cpq", X, Y, Hj)
    out = jets.concatenate([vec, form], axis=0)
    if single:
        out = out[:, 0, 0]
    return out


def courant_bracket(e1: Field, e2: Field, H: Field | None = None) -> Field:
    """The H-twisted Courant bracket of two section fields, as a section field."""
    if H is None:
        return section_field(lambda x: bracket_jet(e1(x), e2(x)), e1.m)
    return section_field(lambda x: bracket_jet(e1(x), e2(x), H(x)), e1.m)


def b_transform_matrix(B):
    """Block matrix [[1, 0], [b, 1]] of X + xi -> X + xi + i_X B (B as components)."""
    b = jets.value(B) if not isinstance(B, Jet) else B
    m = jets.value(B).shape[0]
    eye = np.eye(m)
    return jets.block([[eye, None], [form_to_map(b), eye]])


def b_transform(e: Field, B: Field, sign: float = 1.0) -> Field:
    """X + xi -> X + xi + sign * i_X B."""
    m = e.m

    def fn(x):
        s = e(x)
        return jets.concatenate([s[:m], s[m:] + interior(s[:m], B(x)) * sign])

    return section_field(fn, m)


# -- Courant algebroid axioms ------------------------------------------------------
@dataclass(frozen=True)
class AxiomResiduals:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float

    def max(self) -> float:
        return max(self.C1, self.C2, self.C3, self.C4, self.C5)

    def as_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "C3": self.C3, "C4": self.C4, "C5": self.C5}


def axioms_residual(H: Field | None, e1: Field, e2: Field, e3: Field, f: Field, p) -> AxiomResiduals:
    """Norms of the five Courant algebroid identities at ``p`` in the split model."""
    x = jets.variable(p, 2)
    m = len(p)
    E1, E2, E3 = e1(x), e2(x), e3(x)
    Hx = H(x) if H is not None else None
    F = f(x)

    def br(a, b):
        return bracket_jet(a, b, Hx)

    # C1 Leibniz identity
    lhs = br(E1, br(E2, E3))
    rhs = br(br(E1, E2), E3) + br(E2, br(E1, E3))
    c1 = np.abs(lhs.v - rhs.v).max()

    # C2 [e1, f e2] = f [e1, e2] + (pi(e1) f) e2
    x1 = jets.variable(p, 1)
    E1b, E2b, Fb = e1(x1), e2(x1), f(x1)
    Hb = H(x1) if H is not None else None
    lhs = bracket_jet(E1b, E2b * Fb, Hb)
    dF = Fb.deriv().v
    rhs = bracket_jet(E1b, E2b, Hb).v * Fb.v + (E1b.v[:m] @ dF) * E2b.v
    c2 = np.abs(lhs.v - rhs).max()

    # C3 pi(e1) <e2, e3> = <[e1,e2], e3> + <e2, [e1,e3]>
    E3b = e3(x1)
    ip = pairing_jet(E2b, E3b)
    lhs = E1b.v[:m] @ ip.deriv().v
    rhs = pairing_jet(bracket_jet(E1b, E2b, Hb).v, E3b.v).v + pairing_jet(E2b.v, bracket_jet(E1b, E3b, Hb).v).v
    c3 = abs(lhs - rhs)

    # C4 pi [e1, e2] = [pi e1, pi e2]
    lhs = bracket_jet(E1b, E2b, Hb).v[:m]
    rhs = lie_bracket_jet(E1b[:m], E2b[:m]).v
    c4 = np.abs(lhs - rhs).max()

    # C5 [e1, e1] = 1/2 d <e1, e1>
    lhs = bracket_jet(E1b, E1b, Hb).v
    half_d = 0.5 * pairing_jet(E1b, E1b).deriv().v
    rhs = np.concatenate([np.zeros(m), half_d])
    c5 = np.abs(lhs - rhs).max()
    return AxiomResiduals(float(c1), float(c2), float(c3), float(c4), float(c5))


def splitting_curvature(B: Field, H0: Field | None, X: Field, Y: Field, Z: Field, p) -> float:
    """<[nabla X, nabla Y]_{H0}, nabla Z> for the splitting nabla X = X + i_X B."""
    x = jets.variable(p, 1)
    Bx = B(x)

    def nabla(V):
        v = V(x)
        return jets.concatenate([v, interior(v, Bx)])

    Hx = H0(x) if H0 is not None else None
    br = bracket_jet(nabla(X), nabla(Y), Hx)
    return float(pairing_jet(br.v, nabla(Z).v).v)


# -- builders ---------------------------------------------------------------------
def _monomial_exponents(m: int, degree: int):
    out = []
    for deg in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), deg):
            e = [0] * m
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _monomials(x: Jet, exps) -> Jet:
    m = len(jets.value(x))
    powers = [[jets.as_jet(np.ones(()), x[i])] for i in range(m)]
    maxdeg = max(max(e) for e in exps) if exps else 0
    for i in range(m):
        for _ in range(maxdeg):
            powers[i].append(powers[i][-1] * x[i])
    terms = []
    for e in exps:
        t = powers[0][e[0]]
        for i in range(1, m):
            if e[i]:
                t = t * powers[i][e[i]]
        terms.append(t)
    return jets.stack(terms)


def random_polynomial_field(rng: np.random.Generator, m: int, kind: str, degree: int = 3,
                            form_degree: int = 0, scale: float = 1.0) -> Field:
    """Field with independent Gaussian polynomial coefficients of total degree <= ``degree``.

    kind: "scalar", "vector", "form" (antisymmetrized, ``form_degree``) or "section".
    """
    exps = _monomial_exponents(m, degree)
    if kind == "scalar":
        shape = ()
    elif kind == "vector":
        shape = (m,)
    elif kind == "section":
        shape = (2 * m,)
    elif kind == "form":
        shape = (m,) * form_degree
    else:
        raise ValueError(f"unsupported kind {kind!r}")
    coeffs = rng.normal(size=shape + (len(exps),)) * scale
    if kind == "form" and form_degree >= 2:
        coeffs = np.moveaxis(antisymmetrize_leading(np.moveaxis(coeffs, -1, 0)), 0, -1)
    letters = "abcd"[: len(shape)]

    def fn(x):
        mon = _monomials(x, exps)
        return jets.einsum(f"{letters}z,z->{letters}", coeffs, mon)

    return Field(fn, m, kind, form_degree if kind == "form" else 0)


# -- randomized property suite ----------------------------------------------------------
def nonclosed_twist(m: int = 4) -> Field:
    """H = x^4 dx^1 ^ dx^2 ^ dx^3, with dH = -dx^1^dx^2^dx^3^dx^4 != 0."""
    base = wedge_basis(m, 0, 1, 2)
    return form_field(lambda x: jets.as_jet(base, x) * x[3], m, 3)


def axiom_suite(seed: int = 0, twist: str = "closed", samples: int = 100, m: int = 4,
                tol: float = 1e-8) -> dict:
    """C1-C5, b-transform and ker(ad) residuals over random polynomial data.

    ``twist`` is "closed" (H = dB for a random polynomial 2-form B), "nonclosed"
    (x^4 dx^1^dx^2^dx^3) or "zero".
    """
    rng = np.random.default_rng(seed)
    if twist == "closed":
        H = exterior_derivative(random_polynomial_field(rng, m, "form", 2, form_degree=2, scale=0.5))
    elif twist == "nonclosed":
        H = nonclosed_twist(m)
    elif twist == "zero":
        H = None
    else:
        raise ValueError(f"unknown twist {twist!r}")
    maxima = {k: 0.0 for k in ("C1", "C2", "C3", "C4", "C5", "b_transform", "ker_ad", "dH")}
    for _ in range(samples):
        e1, e2, e3 = (random_polynomial_field(rng, m, "section", 3, scale=0.5) for _ in range(3))
        f = random_polynomial_field(rng, m, "scalar", 3, scale=0.5)
        p = rng.uniform(-1.0, 1.0, size=m)
        for k, v in axioms_residual(H, e1, e2, e3, f, p).as_dict().items():
            maxima[k] = max(maxima[k], v)
        x = jets.variable(p, 1)
        Hx = None if H is None else H(x)
        # closed B = d(beta): [e^B e1, e^B e2] = e^B [e1, e2]
        beta = random_polynomial_field(rng, m, "form", 2, form_degree=1, scale=0.5)
        x2 = jets.variable(p, 2)
        B = d_jet(beta(x2))
        E1, E2 = e1(x), e2(x)
        bt = lambda s, Bj: jets.concatenate([s[:m], s[m:] + interior(s[:m], Bj)])
        lhs = bracket_jet(bt(E1, B), bt(E2, B), Hx).v
        rhs = bracket_jet(E1, E2, Hx).v
        rhs = np.concatenate([rhs[:m], rhs[m:] + rhs[:m] @ B.v])
        maxima["b_transform"] = max(maxima["b_transform"], float(np.abs(lhs - rhs).max()))
        # [d phi, e] = 0
        phi = random_polynomial_field(rng, m, "scalar", 3, scale=0.5)
        dphi = phi(x2).deriv()
        xi = jets.concatenate([jets.as_jet(np.zeros(m), dphi), dphi])
        maxima["ker_ad"] = max(maxima["ker_ad"], float(np.abs(bracket_jet(xi, E1, Hx).v).max()))
        if H is not None:
            maxima["dH"] = max(maxima["dH"], float(np.abs(d_jet(H(x2)).v).max()))
    passed = all(v < tol for k, v in maxima.items() if k != "dH")
    return {"seed": seed, "twist": twist, "samples": samples, "tol": tol,
            "max_residuals": maxima, "pass": passed}
