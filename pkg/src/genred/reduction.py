"""Reduction data, extended actions and fiberwise reduction of generalized structures.

The extended action of the hemisemidirect product g + h sends (u, w) to
``psi~(u) + d<mu, w>``; its image K is isotropic over the moment level set.
The reduced fiber K^perp / K is modeled on the G-orthogonal complement
``K^G = G K^perp  cap  K^perp``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .calculus import Field, bracket_jet, d_jet, pairing_jet
from .linalg import (
    ANGLE_TOL,
    RANK_TOL,
    Subspace,
    SubspaceNotInvariant,
    apply,
    image,
    inclusion_angle,
    intersect,
    pairing_matrix,
    perp_pairing,
    restrict_operator,
    span,
    subspace_equal,
    subspace_sum,
)
from .structures import StructureField, eigenbundle, metric_from

__all__ = [
    "Tolerances",
    "LieAlgebraData",
    "GModuleData",
    "ReductionData",
    "ReducedFiberReport",
    "LevelSetError",
    "ReductionConditionError",
    "RankDrop",
    "hemisemi_bracket",
    "extended_action",
    "extended_frame",
    "lifted_frame",
    "K_at",
    "Kperp_at",
    "KG_at",
    "KG_from",
    "freeness",
    "project_to_level",
    "conditions_fiber",
    "check_condition",
    "reduce_at",
    "quotient_map",
    "dirac_reduce_at",
    "aux_metric_independence",
    "rank_stability",
    "invariance_residual",
    "morphism_residual",
    "pairing_residual",
    "tangent_half",
    "covector_half",
    "tangent_half_dim",
    "transport_map",
    "compare_expected",
    "complex_type_leakage",
    "flow",
]

CONDITIONS = ("JKK", "RED", "JKG", "EASY")


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = RANK_TOL
    angle_tol: float = ANGLE_TOL
    level_tol: float = 1e-12
    residual_tol: float = 1e-8

    def __post_init__(self):
        for k in ("rank_tol", "angle_tol", "level_tol", "residual_tol"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")

    def as_dict(self) -> dict:
        return {"rank_tol": self.rank_tol, "angle_tol": self.angle_tol,
                "level_tol": self.level_tol, "residual_tol": self.residual_tol}


class LevelSetError(RuntimeError):
    """Newton projection onto the moment level failed."""


class ReductionConditionError(RuntimeError):
    def __init__(self, label: str, condition: str, angle: float):
        super().__init__(f"{label}: condition {condition} fails (angle {angle:.3e})")
        self.label = label
        self.condition = condition
        self.angle = angle


class RankDrop(RuntimeError):
    """The extended action has smaller rank than dim g + dim h at a point."""


# -- algebraic data -------------------------------------------------------------------
@dataclass(frozen=True)
class LieAlgebraData:
    """Structure constants c[i, j, k] = c^k_ij and the action generators psi(u_i)."""

    structure_constants: np.ndarray
    psi: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        n = len(self.psi)
        if c.shape != (n, n, n):
            raise ValueError(f"structure constants must have shape {(n, n, n)}")
        object.__setattr__(self, "structure_constants", c)
        object.__setattr__(self, "psi", tuple(self.psi))

    @classmethod
    def abelian(cls, psi: Sequence[Field]) -> "LieAlgebraData":
        n = len(psi)
        return cls(np.zeros((n, n, n)), tuple(psi))

    @property
    def dim(self) -> int:
        return len(self.psi)

    def bracket(self, u1, u2) -> np.ndarray:
        return np.einsum("i,j,ijk->k", u1, u2, self.structure_constants)

    def jacobi_residual(self) -> float:
        c = self.structure_constants
        if self.dim == 0:
            return 0.0
        # [[u_i, u_j], u_k] + cyclic
        t = np.einsum("ijl,lkn->ijkn", c, c)
        cyc = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
        return float(np.abs(cyc).max())

    def antisymmetry_residual(self) -> float:
        c = self.structure_constants
        return float(np.abs(c + c.transpose(1, 0, 2)).max()) if self.dim else 0.0

    def psi_jet(self, x):
        """Frame (m, dim g) of the generators at a coordinate jet."""
        return jets.stack([f(x) for f in self.psi], axis=1)

    def homomorphism_residual(self, p) -> float:
        if self.dim == 0:
            return 0.0
        x = jets.variable(np.asarray(p, float), 1)
        P = self.psi_jet(x)
        DP = P.deriv().v
        Pv = P.v
        lie = np.einsum("ip,jqi->jpq", Pv, DP) - np.einsum("iq,jpi->jpq", Pv, DP)
        expected = np.einsum("pqk,jk->jpq", self.structure_constants, Pv)
        return float(np.abs(lie - expected).max())


@dataclass(frozen=True)
class GModuleData:
    """Representation rho[i] (dim h x dim h) of the generators of g on h."""

    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        if self.rho.ndim != 3 or self.rho.shape[1] != self.rho.shape[2]:
            raise ValueError("rho must have shape (dim g, dim h, dim h)")

    @classmethod
    def trivial(cls, dim_g: int, dim_h: int) -> "GModuleData":
        return cls(np.zeros((dim_g, dim_h, dim_h)))

    @property
    def dim(self) -> int:
        return self.rho.shape[1]

    def act(self, u, w) -> np.ndarray:
        return np.einsum("i,ikl,l->k", u, self.rho, w)

    def representation_residual(self, lie: LieAlgebraData) -> float:
        if lie.dim == 0 or self.dim == 0:
            return 0.0
        r = self.rho
        lhs = np.einsum("ijk,kab->ijab", lie.structure_constants, r)
        rhs = np.einsum("iab,jbc->ijac", r, r) - np.einsum("jab,ibc->ijac", r, r)
        return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class ReductionData:
    """Lifted action psi~(u_i) = psi(u_i) + lift_forms[i], module h, moment map mu.

    ``mu`` evaluates to a jet of shape (dim h,); ``twist`` is the 3-form H of the
    ambient bracket (None for H = 0).
    """

    lie: LieAlgebraData
    module: GModuleData
    mu: Field | None
    m: int
    lift_forms: tuple = ()
    twist: Field | None = None

    def __post_init__(self):
        if self.module.rho.shape[0] != self.lie.dim:
            raise ValueError("module action must have one matrix per generator of g")
        if self.lift_forms and len(self.lift_forms) != self.lie.dim:
            raise ValueError("one lift 1-form per generator is required")
        if self.module.dim and self.mu is None:
            raise ValueError("a moment map is required when h is nonzero")
        object.__setattr__(self, "lift_forms", tuple(self.lift_forms))

    @staticmethod
    def lift_from_nu(nu: Field, dim_g: int) -> tuple:
        """Lift 1-forms d<nu, u_i> from an equivariant map nu: M -> g*."""
        return tuple(Field(lambda x, i=i: d_jet(nu(x)[i]), nu.m, "form", 1) for i in range(dim_g))

    @property
    def dim_g(self) -> int:
        return self.lie.dim

    @property
    def dim_h(self) -> int:
        return self.module.dim

    def mu_value(self, p) -> np.ndarray:
        if self.dim_h == 0:
            return np.zeros(0)
        return self.mu.at(np.asarray(p, float), 0).v

    def dmu(self, p) -> np.ndarray:
        """Jacobian (dim h, m) of the moment map."""
        if self.dim_h == 0:
            return np.zeros((0, self.m))
        return self.mu.at(np.asarray(p, float), 1).d

    def check(self, points, level_points=()) -> dict:
        """Residuals of the structural invariants (Jacobi, representation, homomorphism,
        isotropy of the lift, equivariance; rank of dmu at level points)."""
        out = {
            "jacobi": self.lie.jacobi_residual(),
            "antisymmetry": self.lie.antisymmetry_residual(),
            "representation": self.module.representation_residual(self.lie),
            "homomorphism": 0.0,
            "lift_isotropy": 0.0,
            "equivariance": 0.0,
        }
        for p in points:
            p = np.asarray(p, float)
            out["homomorphism"] = max(out["homomorphism"], self.lie.homomorphism_residual(p))
            F = extended_frame(self, jets.variable(p, 1)).v
            lifted = F[:, : self.dim_g]
            gram = lifted.T @ pairing_matrix(self.m) @ lifted
            out["lift_isotropy"] = max(out["lift_isotropy"], float(np.abs(gram).max()) if gram.size else 0.0)
            out["equivariance"] = max(out["equivariance"], equivariance_residual(self, p))
        ranks = [int(np.linalg.matrix_rank(self.dmu(p), tol=1e-10)) for p in level_points]
        out["regular_value"] = all(r == self.dim_h for r in ranks)
        return out


def equivariance_residual(rd: ReductionData, p) -> float:
    """max |psi(u_i) <mu, w_j> - <mu, u_i . w_j>|."""
    if rd.dim_g == 0 or rd.dim_h == 0:
        return 0.0
    x = jets.variable(np.asarray(p, float), 0)
    P = rd.lie.psi_jet(x).v
    lhs = rd.dmu(p) @ P  # (h, g): d mu_j (psi_i)
    mu = rd.mu_value(p)
    rhs = np.einsum("k,ikj->ji", mu, rd.module.rho)
    return float(np.abs(lhs - rhs).max())


def hemisemi_bracket(a1, a2, lie: LieAlgebraData, module: GModuleData):
    """[(u1, w1), (u2, w2)] = ([u1, u2], u1 . w2)."""
    u1, w1 = (np.asarray(t, float) for t in a1)
    u2, w2 = (np.asarray(t, float) for t in a2)
    if u1.shape != (lie.dim,) or u2.shape != (lie.dim,) or w1.shape != (module.dim,) or w2.shape != (module.dim,):
        raise ValueError("element dimensions do not match (g, h)")
    return lie.bracket(u1, u2), module.act(u1, w2)


def lifted_frame(rd: ReductionData, x):
    """Frame (2m, dim g) of the lifted generators psi~(u_i)."""
    m = rd.m
    cols = []
    for i, f in enumerate(rd.lie.psi):
        X = f(x)
        xi = rd.lift_forms[i](x) if rd.lift_forms else jets.as_jet(np.zeros(m), x)
        cols.append(jets.concatenate([X, xi]))
    if not cols:
        return jets.Jet(np.zeros((2 * m, 0)))
    return jets.stack(cols, axis=1)


def extended_frame(rd: ReductionData, x):
    """Frame (2m, dim g + dim h): lifted generators then d mu_j.

    Evaluated at a coordinate jet; the d mu part costs one derivative order.
    """
    m = rd.m
    cols = []
    if rd.dim_g:
        F = lifted_frame(rd, x)
        cols = [F[:, i] for i in range(rd.dim_g)]
    if rd.dim_h:
        D = rd.mu(x).deriv()  # (h, m)
        for j in range(rd.dim_h):
            cols.append(jets.concatenate([jets.as_jet(np.zeros(m), D), D[j]]))
    if not cols:
        return jets.Jet(np.zeros((2 * m, 0)))
    return jets.stack(cols, axis=1)


def extended_action(rd: ReductionData, a) -> Field:
    """Section field Psi(u, w) = psi~(u) + d<mu, w>."""
    u, w = (np.asarray(t, float) for t in a)
    coeff = np.concatenate([u, w])

    def fn(x):
        return jets.einsum("ap,p->a", extended_frame(rd, x), coeff)

    return Field(fn, rd.m, "section")


def _hemisemi_constants(rd: ReductionData) -> np.ndarray:
    """Bracket constants of g + h on the basis (u_1..u_g, w_1..w_h)."""
    g, h = rd.dim_g, rd.dim_h
    n = g + h
    C = np.zeros((n, n, n))
    C[:g, :g, :g] = rd.lie.structure_constants
    # [u_i, w_j] = u_i . w_j = rho_i w_j
    C[:g, g:, g:] = np.transpose(rd.module.rho, (0, 2, 1))
    return C


def morphism_residual(rd: ReductionData, p) -> float:
    """max over basis pairs of |[Psi(a), Psi(b)]_H - Psi([a, b])|."""
    if rd.dim_g + rd.dim_h == 0:
        return 0.0
    x = jets.variable(np.asarray(p, float), 2)
    F = extended_frame(rd, x)
    H = rd.twist(x) if rd.twist is not None else None
    br = bracket_jet(F, F, H).v
    Fv = F.v
    expected = np.einsum("abk,ik->iab", _hemisemi_constants(rd), Fv)
    return float(np.abs(br - expected).max())


def pairing_residual(rd: ReductionData, p, off_level: bool = False) -> float:
    """max |<Psi(a), Psi(b)>| over basis pairs; with ``off_level`` the deviation from
    <mu, u_a . w_b> + <mu, u_b . w_a> instead."""
    F = extended_frame(rd, jets.variable(np.asarray(p, float), 1)).v
    gram = F.T @ pairing_matrix(rd.m) @ F
    if off_level and rd.dim_g and rd.dim_h:
        g = rd.dim_g
        mu = rd.mu_value(p)
        cross = np.einsum("k,ikj->ij", mu, rd.module.rho)  # <mu, u_i . w_j>
        expected = np.zeros_like(gram)
        expected[:g, g:] = cross
        expected[g:, :g] = cross.T
        gram = gram - expected
    return float(np.abs(gram).max()) if gram.size else 0.0


# -- distributions ---------------------------------------------------------------------
def K_at(rd: ReductionData, p, tol: float = RANK_TOL, strict: bool = False) -> Subspace:
    F = extended_frame(rd, jets.variable(np.asarray(p, float), 1)).v
    K = image(F, tol) if F.shape[1] else Subspace.zero(2 * rd.m, tol=tol)
    if strict and K.dim < rd.dim_g + rd.dim_h:
        raise RankDrop(f"rank drop: dim K = {K.dim} < {rd.dim_g + rd.dim_h}")
    return K


def Kperp_at(rd: ReductionData, p, tol: float = RANK_TOL) -> Subspace:
    return perp_pairing(K_at(rd, p, tol))


def KG_from(K: Subspace, G: np.ndarray) -> Subspace:
    Kp = perp_pairing(K)
    return intersect(apply(G, Kp), Kp)


def KG_at(rd: ReductionData, G, p, tol: float = RANK_TOL) -> Subspace:
    Gv = G.value(p) if isinstance(G, StructureField) else np.asarray(G)
    return KG_from(K_at(rd, p, tol), Gv)


def freeness(rd: ReductionData, p, tol: float = RANK_TOL) -> bool:
    if rd.dim_g == 0:
        return True
    P = rd.lie.psi_jet(jets.variable(np.asarray(p, float), 0)).v
    return image(P, tol).dim == rd.dim_g


def tangent_half(S: Subspace) -> Subspace:
    n = S.ambient_dim
    m = n // 2
    TM = Subspace(np.vstack([np.eye(m), np.zeros((m, m))]), S.tol)
    return intersect(S, TM)


def covector_half(S: Subspace) -> Subspace:
    n = S.ambient_dim
    m = n // 2
    TsM = Subspace(np.vstack([np.zeros((m, m)), np.eye(m)]), S.tol)
    return intersect(S, TsM)


def tangent_half_dim(K: Subspace) -> int:
    """rank pi(K^perp) - rank pi(K): the dimension of the reduced base."""
    m = K.ambient_dim // 2
    Kp = perp_pairing(K)
    r1 = image(Kp.basis[:m], K.tol).dim if Kp.dim else 0
    r0 = image(K.basis[:m], K.tol).dim if K.dim else 0
    return r1 - r0


def project_to_level(rd: ReductionData, p0, level_tol: float = 1e-12, max_iter: int = 50,
                     rank_tol: float = 1e-10) -> np.ndarray:
    """Newton projection x <- x - pinv(dmu) mu onto the level mu = 0."""
    p = np.array(p0, dtype=float)
    if rd.dim_h == 0:
        return p
    for _ in range(max_iter + 1):
        mu = rd.mu_value(p)
        D = rd.dmu(p)
        s = np.linalg.svd(D, compute_uv=False)
        if s.size < rd.dim_h or s[-1] <= rank_tol * max(1.0, s[0]):
            raise LevelSetError("singular level: dmu is rank deficient")
        if np.abs(mu).max() < level_tol:
            return p
        p = p - np.linalg.pinv(D) @ mu
    raise LevelSetError(f"no convergence after {max_iter} Newton steps (|mu| = {np.abs(mu).max():.2e})")


# -- conditions ----------------------------------------------------------------------------
def conditions_fiber(K: Subspace, J: np.ndarray, G: np.ndarray | None = None,
                     angle_tol: float = ANGLE_TOL) -> dict:
    """Evaluate JKK, RED and (with G) JKG and EASY on one fiber."""
    Kp = perp_pairing(K)
    JK = apply(J, K)
    out = {}
    out["JKK"] = subspace_equal(JK, K, angle_tol)
    ang = inclusion_angle(intersect(JK, Kp), K)
    out["RED"] = (ang < angle_tol, ang)
    if G is not None:
        KG = intersect(apply(G, Kp), Kp)
        out["JKG"] = subspace_equal(apply(J, KG), KG, angle_tol)
        S = subspace_sum(K, apply(G, K))
        out["EASY"] = subspace_equal(apply(J, S), S, angle_tol)
    return {k: (bool(v[0]), float(v[1])) for k, v in out.items()}


def _values(structures: Mapping, p) -> tuple[dict, np.ndarray | None]:
    Js, G = {}, None
    for label, S in structures.items():
        A = S.value(p) if isinstance(S, StructureField) else np.asarray(S)
        tag = S.tag if isinstance(S, StructureField) else ("metric" if label == "G" else "gcs")
        if tag == "metric":
            G = A
        else:
            Js[label] = A
    return Js, G


def check_condition(cid: str, rd: ReductionData, structures: Mapping, p,
                    tol: Tolerances = Tolerances()) -> tuple[bool, float]:
    """Condition ``cid`` for the (single) complex structure in ``structures`` at p."""
    if cid not in CONDITIONS:
        raise ValueError(f"unknown condition {cid!r}")
    Js, G = _values(structures, p)
    if len(Js) != 1:
        raise ValueError("check_condition expects exactly one complex structure")
    if cid in ("JKG", "EASY") and G is None:
        raise ValueError(f"{cid} needs a generalized metric")
    K = K_at(rd, p, tol.rank_tol)
    return conditions_fiber(K, next(iter(Js.values())), G, tol.angle_tol)[cid]


# -- reduced fiber --------------------------------------------------------------------------
@dataclass
class ReducedFiberReport:
    point: np.ndarray
    K: Subspace
    Kperp: Subspace
    KG: Subspace
    dims: dict
    condition_flags: dict
    reduced: dict
    reduced_G: np.ndarray | None
    reduced_pairing: np.ndarray
    algebra_residuals: dict
    model: str = "metric"
    free: bool = True
    rank_drop: bool = False
    notes: list = field(default_factory=list)

    @property
    def reduced_J(self) -> np.ndarray | None:
        return self.reduced.get("J")


def quotient_map(A: np.ndarray, K: Subspace, model: Subspace) -> np.ndarray:
    """Matrix of the map induced by A on K^perp/K, in the basis of a complement ``model``.

    A must preserve K^perp; the image is split along K by least squares.
    """
    B = model.basis
    W = np.hstack([B, K.basis])
    coef, *_ = np.linalg.lstsq(W, A @ B, rcond=None)
    resid = W @ coef - A @ B
    if np.abs(resid).max() > 1e-8 * max(1.0, np.abs(A).max()):
        raise SubspaceNotInvariant(float(np.abs(resid).max()), 1e-8)
    return coef[: B.shape[1]]


def reduce_at(rd: ReductionData, structures: Mapping, p, kind: str = "gcs",
              tol: Tolerances = Tolerances(), require: str = "auto") -> ReducedFiberReport:
    """Reduce every complex structure in ``structures`` (and the metric) onto the fiber at p.

    kind: "gcs" (structures only), "gk" (J, G and J' = J G) or "ghk" (J1, J2, J3, G).
    Without a metric the flat auxiliary metric models K^perp/K and reduction needs JKK.
    """
    p = np.asarray(p, float)
    Js, G = _values(structures, p)
    model = "metric"
    if G is None:
        G_model = metric_from(np.eye(rd.m)).value(p)
        model = "auxiliary"
    else:
        G_model = G
    m = rd.m
    K = K_at(rd, p, tol.rank_tol)
    Kp = perp_pairing(K)
    KG = intersect(apply(G_model, Kp), Kp)
    B = KG.basis
    Q = pairing_matrix(m)
    Qr = B.T @ Q @ B
    flags, reduced, res = {}, {}, {}
    for label, J in Js.items():
        flags[label] = conditions_fiber(K, J, G, tol.angle_tol)
        if G is not None and flags[label]["JKG"][0] and require in ("auto", "JKG"):
            reduced[label] = restrict_operator(J, KG)
        elif flags[label]["JKK"][0] and require in ("auto", "JKK"):
            reduced[label] = quotient_map(J, K, KG)
        else:
            cid = "JKG" if G is not None else "JKK"
            raise ReductionConditionError(label, cid, flags[label][cid][1])
        M = reduced[label]
        k = M.shape[0]
        res[f"{label}.square"] = float(np.abs(M @ M + np.eye(k)).max()) if k else 0.0
        res[f"{label}.orthogonal"] = float(np.abs(M.T @ Qr @ M - Qr).max()) if k else 0.0
    Gr = None
    if G is not None:
        Gr = restrict_operator(G, KG)
        k = Gr.shape[0]
        QG = Qr @ Gr
        res["G.square"] = float(np.abs(Gr @ Gr - np.eye(k)).max()) if k else 0.0
        res["G.positivity"] = float(np.linalg.eigvalsh(0.5 * (QG + QG.T)).min()) if k else 1.0
        for label, M in reduced.items():
            res[f"{label}.commute_G"] = float(np.abs(M @ Gr - Gr @ M).max()) if k else 0.0
        if kind == "gk":
            for label, J in Js.items():
                Jpr = restrict_operator(J @ G, KG)
                reduced[f"{label}'"] = Jpr
                res[f"{label}'.equals_JG"] = float(np.abs(Jpr - reduced[label] @ Gr).max()) if k else 0.0
                res[f"{label}'.square"] = float(np.abs(Jpr @ Jpr + np.eye(k)).max()) if k else 0.0
    if kind == "ghk":
        J1, J2, J3 = (reduced[k_] for k_ in ("J1", "J2", "J3"))
        res["J1J2_minus_J3"] = float(np.abs(J1 @ J2 - J3).max()) if J1.size else 0.0
        res["J2J1_plus_J3"] = float(np.abs(J2 @ J1 + J3).max()) if J1.size else 0.0
    gram = K.basis.T @ Q @ K.basis
    res["K_isotropy"] = float(np.abs(gram).max()) if gram.size else 0.0
    dims = {"K": K.dim, "Kperp": Kp.dim, "KG": KG.dim, "reduced_base": tangent_half_dim(K)}
    rank_drop = K.dim < rd.dim_g + rd.dim_h
    return ReducedFiberReport(p, K, Kp, KG, dims, flags, reduced, Gr, Qr, res, model,
                              freeness(rd, p, tol.rank_tol), rank_drop)


def _split_along(v: np.ndarray, K: Subspace, model: Subspace) -> np.ndarray:
    W = np.hstack([model.basis, K.basis]).astype(complex)
    coef, *_ = np.linalg.lstsq(W, v, rcond=None)
    return coef[: model.dim]


def dirac_reduce_at(rd: ReductionData, L: Subspace, p, G=None, tol: Tolerances = Tolerances(),
                    check: bool = True) -> Subspace:
    """((L cap K^perp_C) + K_C) / K_C in the coordinates of the K^G basis.

    Without ``G`` the flat auxiliary metric picks the complement.
    """
    p = np.asarray(p, float)
    Gv = metric_from(np.eye(rd.m)).value(p) if G is None else (
        G.value(p) if isinstance(G, StructureField) else np.asarray(G))
    K = K_at(rd, p, tol.rank_tol)
    KG = KG_from(K, Gv)
    Kp = perp_pairing(K).complexify()
    Lk = intersect(L.complexify(), Kp)
    if Lk.dim == 0:
        return Subspace.zero(KG.dim, dtype=complex, tol=tol.rank_tol)
    coords = _split_along(Lk.basis, K, KG)
    Lr = image(coords, tol.rank_tol)
    if check:
        Qr = KG.basis.T @ pairing_matrix(rd.m) @ KG.basis
        iso = np.abs(Lr.basis.T @ Qr @ Lr.basis).max() if Lr.dim else 0.0
        if iso > 1e-8 or 2 * Lr.dim != KG.dim:
            raise ValueError(f"reduced subspace is not Lagrangian (isotropy {iso:.2e}, dim {Lr.dim})")
    return Lr


def aux_metric_independence(rd: ReductionData, L: Subspace, p, G1, G2,
                            tol: Tolerances = Tolerances()) -> float:
    """Principal angle between L^red built with two auxiliary metrics, compared in model 2."""
    p = np.asarray(p, float)
    K = K_at(rd, p, tol.rank_tol)
    M1 = KG_from(K, G1)
    M2 = KG_from(K, G2)
    L1 = dirac_reduce_at(rd, L, p, G1, tol)
    L2 = dirac_reduce_at(rd, L, p, G2, tol)
    moved = _split_along(M1.basis @ L1.basis, K, M2)
    return subspace_equal(image(moved, tol.rank_tol), L2, tol.angle_tol)[1]


def rank_stability(rd: ReductionData, L_field: StructureField, p, rng: np.random.Generator,
                   eps: float = 1e-3, count: int = 4, tol: Tolerances = Tolerances()) -> bool:
    """dim(L cap K_C) agrees at p and at nearby level-set points."""
    def dim_at(q):
        L = image(L_field.value(q), tol.rank_tol).complexify()
        return intersect(L, K_at(rd, q, tol.rank_tol).complexify()).dim

    d0 = dim_at(p)
    for _ in range(count):
        q = project_to_level(rd, np.asarray(p) + eps * rng.normal(size=rd.m), tol.level_tol)
        if dim_at(q) != d0:
            return False
    return True


def invariance_residual(S: StructureField, rd: ReductionData, p) -> float:
    """max |[psi~(u), S e] - S [psi~(u), e]| over generators and a constant frame."""
    if rd.dim_g == 0:
        return 0.0
    x = jets.variable(np.asarray(p, float), 1)
    n = 2 * rd.m
    Psi = lifted_frame(rd, x)
    H = rd.twist(x) if rd.twist is not None else None
    A = S(x)
    E = jets.as_jet(np.eye(n), x)
    lhs = bracket_jet(Psi, A, H).v
    rhs = np.einsum("ab,bpq->apq", A.v, bracket_jet(Psi, E, H).v)
    return float(np.abs(lhs - rhs).max())


# -- comparison with closed-form quotients ------------------------------------------------------
def transport_map(KG: Subspace, dp: np.ndarray) -> np.ndarray:
    """Phi: TM^red + T*M^red -> K^G through the tangent and covector halves of K^G."""
    m = KG.ambient_dim // 2
    T = tangent_half(KG)
    C = covector_half(KG)
    n = dp.shape[0]
    if T.dim != n or C.dim != n:
        raise ValueError(f"K^G does not split into halves of dimension {n} (got {T.dim}, {C.dim})")
    Tv = T.basis[:m]
    DT = dp @ Tv
    if np.linalg.svd(DT, compute_uv=False)[-1] < 1e-10:
        raise ValueError("dp is not an isomorphism on the horizontal space")
    vec = T.basis @ np.linalg.inv(DT)
    Cf = C.basis[m:]
    cov = C.basis @ np.linalg.solve(Tv.T @ Cf, DT.T)
    return np.hstack([vec, cov])


def compare_expected(report: ReducedFiberReport, dp: np.ndarray, expected: Mapping) -> dict:
    """Max entrywise error between transported reduced operators and closed-form matrices.

    ``expected`` maps labels of ``report.reduced`` (or "G") to 2n x 2n matrices on
    TM^red + T*M^red.
    """
    Phi = transport_map(report.KG, dp)
    B = report.KG.basis
    left = np.linalg.pinv(Phi)
    out = {}
    for label, target in expected.items():
        M = report.reduced_G if label == "G" else report.reduced[label]
        N = left @ (B @ M @ B.T) @ Phi
        out[label] = float(np.abs(N - np.asarray(target)).max())
    return out


def transported(report: ReducedFiberReport, dp: np.ndarray, label: str) -> np.ndarray:
    Phi = transport_map(report.KG, dp)
    B = report.KG.basis
    M = report.reduced_G if label == "G" else report.reduced[label]
    return np.linalg.pinv(Phi) @ (B @ M @ B.T) @ Phi


def complex_type_leakage(report: ReducedFiberReport, label: str) -> float:
    """How far the reduced structure moves the tangent half of K^G out of itself."""
    T = tangent_half(report.KG)
    B = report.KG.basis
    A = B @ report.reduced[label] @ B.T
    img = A @ T.basis
    return float(np.linalg.norm(img - T.basis @ (T.basis.T @ img), 2)) if T.dim else 0.0


def flow(rd: ReductionData, p, u, t: float, steps: int = 20) -> np.ndarray:
    """RK4 integration of the vector field psi(u) for time t."""
    u = np.asarray(u, float)

    def vf(q):
        return rd.lie.psi_jet(jets.variable(q, 0)).v @ u

    q = np.array(p, float)
    h = t / steps
    for _ in range(steps):
        k1 = vf(q)
        k2 = vf(q + 0.5 * h * k1)
        k3 = vf(q + 0.5 * h * k2)
        k4 = vf(q + h * k3)
        q = q + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return q
