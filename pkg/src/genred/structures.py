"""Generalized complex structures, generalized metrics, Dirac structures.

Structures are matrix fields on a chart acting on fiber vectors ``X + xi``
(vector part first). Conventions:

* a 2-form with components ``w`` acts as the map ``X -> i_X w`` with matrix
  ``w.T``;
* ``I*`` acts on covectors by ``xi -> xi o I``, i.e. by the matrix ``I.T``;
* the b-transform is ``[[1, 0], [b, 1]]`` (b as a map).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import jets
from .calculus import Field, bracket_jet, d_jet, form_field, matrix_field, pairing_jet
from .linalg import RANK_TOL, Subspace, image, pairing_matrix

__all__ = [
    "StructureField",
    "GCStructureField",
    "GMetricField",
    "DiracField",
    "BihermitianData",
    "StructureError",
    "StructureReport",
    "as_field",
    "from_symplectic",
    "from_complex",
    "metric_from",
    "gk_from_bihermitian",
    "bihermitian_from_gk",
    "generalized_eigenspaces",
    "eigenbundle",
    "eigenbundle_eig",
    "dirac_from_gcs",
    "dirac_graph_form",
    "dirac_graph_bivector",
    "algebraic_residuals",
    "integrability_residual",
    "check_gk",
    "check_ghk",
    "dc_form_residual",
]

DET_TOL = 1e-12
ALG_TOL = 1e-9


class StructureError(ValueError):
    """Algebraic precondition of a structure failed at an evaluation point."""


def as_field(obj, m: int, kind: str = "matrix", degree: int = 0) -> Field:
    """Wrap a constant array or a ``x -> Jet`` callable as a Field."""
    if isinstance(obj, Field):
        return obj
    if callable(obj):
        return Field(obj, m, kind, degree)
    arr = np.array(obj, dtype=float)
    return Field(lambda x: jets.as_jet(arr, x), m, kind, degree)


@dataclass(frozen=True)
class StructureField:
    """A 2m x 2m operator field with an algebraic-type tag."""

    field: Field
    tag: str
    label: str = ""

    @property
    def m(self) -> int:
        return self.field.m

    def __call__(self, x):
        return self.field(x)

    def at(self, p, order: int = 0):
        return self.field.at(p, order)

    def value(self, p) -> np.ndarray:
        return self.field.at(np.asarray(p, dtype=float), 0).v

    def compose(self, other: "StructureField", tag: str, label: str = "") -> "StructureField":
        f1, f2 = self.field, other.field
        composed = matrix_field(lambda x: f1(x) @ f2(x), self.m)
        cls = GCStructureField if tag == "gcs" else StructureField
        return cls(composed, tag, label)


class GCStructureField(StructureField):
    def __init__(self, fld: Field, tag: str = "gcs", label: str = ""):
        super().__init__(fld, "gcs", label)


class GMetricField(StructureField):
    def __init__(self, fld: Field, tag: str = "metric", label: str = ""):
        super().__init__(fld, "metric", label)


class DiracField(StructureField):
    """Field of (not necessarily orthogonal) projectors onto a Lagrangian L."""

    def __init__(self, fld: Field, tag: str = "dirac", label: str = ""):
        super().__init__(fld, "dirac", label)

    def subspace(self, p, tol: float = RANK_TOL) -> Subspace:
        return image(self.value(p), tol)


def _btransform(b, sign: float = 1.0):
    eye = np.eye(jets.value(b).shape[0])
    return jets.block([[eye, None], [b.T * sign, eye]])


def _dim(obj, m):
    if m is not None:
        return m
    if isinstance(obj, Field):
        return obj.m
    return np.shape(obj)[0]


# -- constructors ------------------------------------------------------------------
def from_symplectic(omega, m: int | None = None, label: str = "J_omega") -> GCStructureField:
    """[[0, -w^-1], [w, 0]] with w the map X -> i_X omega."""
    omega = as_field(omega, _dim(omega, m), "form", 2)
    m = omega.m

    def fn(x):
        w = omega(x).T
        if abs(np.linalg.det(jets.value(w))) < DET_TOL:
            raise StructureError("degenerate omega")
        return jets.block([[None, -jets.inv(w)], [w, None]])

    return GCStructureField(matrix_field(fn, m), label=label)


def from_complex(I, m: int | None = None, label: str = "J_I") -> GCStructureField:
    """[[-I, 0], [0, I*]]."""
    I = as_field(I, _dim(I, m))
    m = I.m

    def fn(x):
        a = I(x)
        av = jets.value(a)
        if np.abs(av @ av + np.eye(m)).max() > ALG_TOL:
            raise StructureError("I does not square to -Id")
        return jets.block([[-a, None], [None, a.T]])

    return GCStructureField(matrix_field(fn, m), label=label)


def metric_from(g, b=None, m: int | None = None, label: str = "G") -> GMetricField:
    """e^b [[0, g^-1], [g, 0]] e^-b."""
    g = as_field(g, _dim(g, m))
    m = g.m
    b = as_field(np.zeros((m, m)) if b is None else b, m, "form", 2)

    def fn(x):
        gx = g(x)
        gv = jets.value(gx)
        if np.abs(gv - gv.T).max() > ALG_TOL or np.linalg.eigvalsh(0.5 * (gv + gv.T)).min() <= 0:
            raise StructureError("g is not positive definite")
        core = jets.block([[None, jets.inv(gx)], [gx, None]])
        bx = b(x)
        return _btransform(bx, 1.0) @ core @ _btransform(bx, -1.0)

    return GMetricField(matrix_field(fn, m), label=label)


@dataclass(frozen=True)
class BihermitianData:
    """Quadruple (I+, I-, g, b): two g-Hermitian complex structures and a 2-form."""

    I_plus: Field
    I_minus: Field
    g: Field
    b: Field

    @classmethod
    def build(cls, I_plus, I_minus, g, b=None, m: int | None = None) -> "BihermitianData":
        m = _dim(I_plus, m)
        b = np.zeros((m, m)) if b is None else b
        return cls(as_field(I_plus, m), as_field(I_minus, m), as_field(g, m), as_field(b, m, "form", 2))

    @property
    def m(self) -> int:
        return self.g.m

    def omega(self, sign: int, x):
        """Components of w_+ (sign=+1) or w_- (sign=-1); the map is g I."""
        I = self.I_plus(x) if sign > 0 else self.I_minus(x)
        return (self.g(x) @ I).T

    def check(self, p, tol: float = ALG_TOL) -> dict:
        """Algebraic residuals: I^2 + 1, g symmetric, Hermitian condition, b antisymmetric."""
        x = jets.variable(p, 0)
        Ip, Im, g, b = (f(x).v for f in (self.I_plus, self.I_minus, self.g, self.b))
        eye = np.eye(self.m)
        out = {
            "I_plus_square": float(np.abs(Ip @ Ip + eye).max()),
            "I_minus_square": float(np.abs(Im @ Im + eye).max()),
            "g_symmetric": float(np.abs(g - g.T).max()),
            "hermitian_plus": float(np.abs(Ip.T @ g @ Ip - g).max()),
            "hermitian_minus": float(np.abs(Im.T @ g @ Im - g).max()),
            "b_antisymmetric": float(np.abs(b + b.T).max()),
        }
        if np.linalg.eigvalsh(0.5 * (g + g.T)).min() <= 0:
            raise StructureError("g is not positive definite")
        bad = {k: v for k, v in out.items() if v > tol}
        if bad:
            raise StructureError(f"bihermitian invariants violated: {bad}")
        return out


def gk_from_bihermitian(data: BihermitianData, check_at: Sequence | None = None):
    """(J, J', G) of the generalized Kahler structure with bihermitian data ``data``.

    J = 1/2 e^b [[I+ + I-, -(w+^-1 - w-^-1)], [w+ - w-, -(I+* + I-*)]] e^-b and J' = J G.
    """
    m = data.m
    if check_at is not None:
        data.check(np.asarray(check_at, dtype=float))

    def fn(x):
        Ip, Im, g, b = data.I_plus(x), data.I_minus(x), data.g(x), data.b(x)
        wp = g @ Ip
        wm = g @ Im
        core = jets.block([
            [(Ip + Im) * 0.5, (jets.inv(wp) - jets.inv(wm)) * -0.5],
            [(wp - wm) * 0.5, (Ip.T + Im.T) * -0.5],
        ])
        return _btransform(b, 1.0) @ core @ _btransform(b, -1.0)

    J = GCStructureField(matrix_field(fn, m), label="J")
    G = metric_from(data.g, data.b, label="G")
    Jp = J.compose(G, "gcs", "J'")
    return J, Jp, G


def generalized_eigenspaces(G: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Bases of the +1 and -1 eigenspaces C+ and C- of a generalized metric."""
    n = G.shape[0]
    eye = np.eye(n)
    # G is an involution, so (1 +- G)/2 project onto C+-.
    cp = image(0.5 * (eye + G), tol).basis
    cm = image(0.5 * (eye - G), tol).basis
    if cp.shape[1] != n // 2 or cm.shape[1] != n // 2:
        raise StructureError("eigenspaces of G are not half-dimensional")
    return cp, cm


def bihermitian_from_gk(J: np.ndarray, G: np.ndarray):
    """Recover (I+, I-, g, b) at a point from fiber matrices of J and G.

    C+- are graphs {X + (b +- g) X}; J restricted to C+- is I+- transported by
    the anchor.
    """
    n = J.shape[0]
    m = n // 2
    out = []
    graphs = []
    for basis in generalized_eigenspaces(G):
        T, F = basis[:m], basis[m:]
        A = F @ np.linalg.inv(T)
        graphs.append(A)
        lift = np.vstack([np.eye(m), A])
        out.append((J @ lift)[:m])
    Ap, Am = graphs
    g = 0.5 * (Ap - Am)
    bmap = 0.5 * (Ap + Am)
    return out[0], out[1], 0.5 * (g + g.T), 0.5 * (bmap.T - bmap)


# -- eigenbundles and Dirac structures -------------------------------------------------
def eigenbundle(J: StructureField | np.ndarray, p=None, tol: float = RANK_TOL) -> Subspace:
    """+i eigenbundle L of J at p, as the image of (1 - iJ)/2."""
    Jp = J.value(p) if isinstance(J, StructureField) else np.asarray(J)
    n = Jp.shape[0]
    if np.abs(Jp @ Jp + np.eye(n)).max() > 1e-8:
        raise StructureError("J does not square to -Id")
    L = image(0.5 * (np.eye(n) - 1j * Jp), tol)
    if L.dim != n // 2:
        raise StructureError("defective eigenbundle")
    return L


def eigenbundle_eig(Jp: np.ndarray, tol: float = 1e-8) -> Subspace:
    """Independent +i eigenspace from a general eigen-solver."""
    w, v = np.linalg.eig(np.asarray(Jp, dtype=complex))
    sel = np.abs(w - 1j) < 1e-6
    if sel.sum() != Jp.shape[0] // 2:
        raise StructureError("eigen-solver did not find a half-dimensional +i eigenspace")
    return image(v[:, sel], RANK_TOL)


def dirac_from_gcs(J: StructureField) -> DiracField:
    f = J.field
    n = 2 * f.m
    return DiracField(matrix_field(lambda x: (np.eye(n) - f(x) * 1j) * 0.5, f.m), label="L")


def _graph_projector(T, F):
    # orthogonal projector onto the column span of [T; F]
    B = jets.concatenate([T, F], axis=0)
    return B @ jets.inv(B.T @ B) @ B.T


def dirac_graph_form(omega, m: int | None = None) -> DiracField:
    """Graph {X + i_X omega}."""
    omega = as_field(omega, _dim(omega, m), "form", 2)
    eye = np.eye(omega.m)
    return DiracField(matrix_field(lambda x: _graph_projector(jets.as_jet(eye, x), omega(x).T), omega.m),
                      label="graph")


def dirac_graph_bivector(pi, m: int | None = None) -> DiracField:
    """Graph {i_xi pi + xi} of a bivector with antisymmetric components pi^{ij}."""
    pi = as_field(pi, _dim(pi, m))
    eye = np.eye(pi.m)
    return DiracField(matrix_field(lambda x: _graph_projector(pi(x).T, jets.as_jet(eye, x)), pi.m),
                      label="graph")


# -- residuals ----------------------------------------------------------------------------
def algebraic_residuals(S: StructureField, p) -> dict:
    A = S.value(p)
    n = A.shape[0]
    Q = pairing_matrix(n // 2)
    eye = np.eye(n)
    out = {"orthogonal": float(np.abs(A.T @ Q @ A - Q).max())}
    if S.tag == "gcs":
        out["square"] = float(np.abs(A @ A + eye).max())
    elif S.tag == "metric":
        out["square"] = float(np.abs(A @ A - eye).max())
        out["positivity"] = float(np.linalg.eigvalsh(0.5 * (Q @ A + (Q @ A).T)).min())
    elif S.tag == "dirac":
        L = image(A)
        out["isotropy"] = float(np.abs(L.basis.T @ Q @ L.basis).max()) if L.dim else 0.0
        out["dim"] = L.dim
    return out


def integrability_residual(S: StructureField, p, H: Field | None = None) -> float:
    """Integrability defect of a GCS (Nijenhuis form) or of a Dirac projector field."""
    x = jets.variable(np.asarray(p, dtype=float), 1)
    Hx = None if H is None else H(x)
    A = S(x)
    n = jets.value(A).shape[0]
    if S.tag == "dirac":
        # sections e_i = P(x) c_i span L; <[e_i, e_j], e_k> is tensorial on isotropic L
        br = bracket_jet(A, A, Hx)
        Pv = A.v
        Q = pairing_matrix(n // 2)
        T = np.einsum("apq,ab,bk->pqk", br.v, Q, Pv)
        return float(np.abs(T).max())
    if S.tag != "gcs":
        raise TypeError("integrability is defined for generalized complex and Dirac structures")
    E = jets.as_jet(np.eye(n), x)
    JE = A
    Jv = A.v
    nij = (bracket_jet(JE, JE, Hx).v - bracket_jet(E, E, Hx).v
           - np.einsum("ij,jpq->ipq", Jv, bracket_jet(JE, E, Hx).v + bracket_jet(E, JE, Hx).v))
    return float(np.abs(nij).max())


@dataclass
class StructureReport:
    residuals: dict
    tol: float
    passed: bool = field(init=False)
    failures: list = field(init=False)

    def __post_init__(self):
        self.failures = sorted(k for k, v in self.residuals.items() if not v < self.tol)
        self.passed = not self.failures


def _gk_residuals(J: StructureField, G: StructureField, pts, H) -> dict:
    res = {"commute": 0.0, "J_square": 0.0, "J_orthogonal": 0.0, "Jprime_square": 0.0,
           "G_square": 0.0, "J_integrable": 0.0, "Jprime_integrable": 0.0}
    Jp = J.compose(G, "gcs")
    for p in pts:
        Jv, Gv = J.value(p), G.value(p)
        n = Jv.shape[0]
        eye = np.eye(n)
        Q = pairing_matrix(n // 2)
        Jpv = Jv @ Gv
        res["commute"] = max(res["commute"], float(np.abs(Jv @ Gv - Gv @ Jv).max()))
        res["J_square"] = max(res["J_square"], float(np.abs(Jv @ Jv + eye).max()))
        res["J_orthogonal"] = max(res["J_orthogonal"], float(np.abs(Jv.T @ Q @ Jv - Q).max()))
        res["Jprime_square"] = max(res["Jprime_square"], float(np.abs(Jpv @ Jpv + eye).max()))
        res["G_square"] = max(res["G_square"], float(np.abs(Gv @ Gv - eye).max()))
        res["J_integrable"] = max(res["J_integrable"], integrability_residual(J, p, H))
        res["Jprime_integrable"] = max(res["Jprime_integrable"], integrability_residual(Jp, p, H))
    return res


def check_gk(J: StructureField, G: StructureField, points: Iterable, H: Field | None = None,
             tol: float = 1e-8) -> StructureReport:
    """Generalized Kahler checks: [J, G] = 0, J and J' = JG complex and integrable."""
    return StructureReport(_gk_residuals(J, G, [np.asarray(p, float) for p in points], H), tol)


def check_ghk(J1: StructureField, J2: StructureField, J3: StructureField, G: StructureField,
              points: Iterable, H: Field | None = None, tol: float = 1e-8) -> StructureReport:
    """Generalized hyper-Kahler checks: J1 J2 = -J2 J1 = J3 and each (Ji, G) generalized Kahler."""
    pts = [np.asarray(p, float) for p in points]
    res = {"J1J2_minus_J3": 0.0, "J2J1_plus_J3": 0.0}
    for p in pts:
        a, b, c = J1.value(p), J2.value(p), J3.value(p)
        res["J1J2_minus_J3"] = max(res["J1J2_minus_J3"], float(np.abs(a @ b - c).max()))
        res["J2J1_plus_J3"] = max(res["J2J1_plus_J3"], float(np.abs(b @ a + c).max()))
    for i, J in enumerate((J1, J2, J3), start=1):
        for k, v in _gk_residuals(J, G, pts, H).items():
            res[f"J{i}.{k}"] = v
    return StructureReport(res, tol)


def dc_form_residual(data: BihermitianData, p, dc_sign: float = 1.0) -> float:
    """max(|d^c_- w_- - db|, |d^c_+ w_+ + db|) with d^c a = -dc_sign * da(I., I., I.)."""
    x = jets.variable(np.asarray(p, dtype=float), 1)
    db = d_jet(data.b(x)).v
    out = 0.0
    for sign in (1, -1):
        dw = d_jet(data.omega(sign, x)).v
        I = (data.I_plus if sign > 0 else data.I_minus)(x).v
        dcw = -dc_sign * np.einsum("abc,ai,bj,ck->ijk", dw, I, I, I)
        target = -db if sign > 0 else db
        out = max(out, float(np.abs(dcw - target).max()))
    return out
