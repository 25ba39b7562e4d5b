"""Tolerance-aware subspace algebra on the fiber of TM + T*M.

Subspaces are stored as column-orthonormal bases (unitary for complex
scalars). Rank decisions use singular values relative to the largest one, and
subspace comparisons use principal angles computed from sines, which keeps
tiny angles (1e-12 and below) resolvable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RANK_TOL",
    "ANGLE_TOL",
    "FiberMetric",
    "Subspace",
    "SubspaceNotInvariant",
    "pairing_matrix",
    "span",
    "perp_pairing",
    "intersect",
    "subspace_sum",
    "subspace_equal",
    "inclusion_angle",
    "max_principal_angle",
    "restrict_operator",
    "image",
    "apply",
    "is_isotropic",
]

RANK_TOL = 1e-10
ANGLE_TOL = 1e-8


def pairing_matrix(m: int) -> np.ndarray:
    """The split-signature pairing [[0, Id], [Id, 0]] on R^m + R^m."""
    z = np.zeros((m, m))
    e = np.eye(m)
    return np.block([[z, e], [e, z]])


@dataclass(frozen=True)
class FiberMetric:
    """The canonical pairing <X+xi, Y+eta> = eta(X) + xi(Y) on a 2m-dimensional fiber."""

    dim_m: int
    pairing: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim_m < 1:
            raise ValueError("chart dimension must be positive")
        object.__setattr__(self, "pairing", pairing_matrix(self.dim_m))

    @property
    def Q(self) -> np.ndarray:
        return self.pairing

    def __call__(self, a, b):
        return np.asarray(a) @ self.pairing @ np.asarray(b)

    def signature(self) -> tuple[int, int]:
        w = np.linalg.eigvalsh(self.pairing)
        return int((w > 0).sum()), int((w < 0).sum())


class SubspaceNotInvariant(ValueError):
    """Raised when an operator does not map a subspace into itself."""

    def __init__(self, leakage: float, tol: float):
        super().__init__(f"subspace not invariant: leakage {leakage:.3e} exceeds {tol:.1e}")
        self.leakage = leakage


class Subspace:
    """Orthonormal basis of a linear subspace of R^n or C^n."""

    __slots__ = ("basis", "ambient_dim", "tol")

    def __init__(self, basis: np.ndarray, tol: float = RANK_TOL):
        basis = np.asarray(basis)
        if basis.ndim != 2:
            raise ValueError("basis must be a 2-D array (ambient_dim x k)")
        self.basis = basis
        self.ambient_dim = basis.shape[0]
        self.tol = tol

    @classmethod
    def zero(cls, n: int, dtype=float, tol: float = RANK_TOL) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=dtype), tol)

    @classmethod
    def full(cls, n: int, dtype=float, tol: float = RANK_TOL) -> "Subspace":
        return cls(np.eye(n, dtype=dtype), tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.basis)

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def conj(self) -> "Subspace":
        return Subspace(self.basis.conj(), self.tol)

    def complexify(self) -> "Subspace":
        return Subspace(self.basis.astype(complex), self.tol)

    def contains(self, v, angle_tol: float = ANGLE_TOL) -> bool:
        return inclusion_angle(span([v]), self) < angle_tol

    def __repr__(self) -> str:
        kind = "complex" if self.is_complex else "real"
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim}, {kind})"


def _orth(a: np.ndarray, tol: float) -> np.ndarray:
    n = a.shape[0]
    if a.shape[1] == 0:
        return np.zeros((n, 0), dtype=a.dtype)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, 0), dtype=a.dtype)
    r = int((s > tol * s[0]).sum())
    return u[:, :r]


def _null(a: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of {x : a x = 0}, rank decided relative to the largest singular value."""
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=a.dtype)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n, dtype=a.dtype)
    r = int((s > tol * s[0]).sum())
    return vh[r:].conj().T


def span(vectors, tol: float = RANK_TOL, ambient_dim: int | None = None) -> Subspace:
    """Orthonormalized span; numerically dependent vectors are dropped."""
    vecs = [np.asarray(v) for v in vectors]
    if not vecs:
        if ambient_dim is None:
            raise ValueError("ambient_dim is required for an empty span")
        return Subspace.zero(ambient_dim, tol=tol)
    n = vecs[0].shape[0]
    if any(v.ndim != 1 or v.shape[0] != n for v in vecs):
        raise ValueError("dimension mismatch among spanning vectors")
    if ambient_dim is not None and ambient_dim != n:
        raise ValueError("dimension mismatch with ambient_dim")
    return Subspace(_orth(np.stack(vecs, axis=1), tol), tol)


def image(a: np.ndarray, tol: float = RANK_TOL) -> Subspace:
    """Column space of a matrix."""
    a = np.asarray(a)
    return Subspace(_orth(a, tol), tol)


def _check_same(s1: Subspace, s2: Subspace):
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError(f"ambient dimensions differ: {s1.ambient_dim} vs {s2.ambient_dim}")


def perp_pairing(s: Subspace, q: np.ndarray | FiberMetric | None = None) -> Subspace:
    """Complement {e : <e, s> = 0 for all s in S} for the split pairing.

    The pairing is bilinear (no conjugation) on complex subspaces.
    """
    if q is None:
        q = pairing_matrix(s.ambient_dim // 2)
    elif isinstance(q, FiberMetric):
        q = q.pairing
    if q.shape[0] != s.ambient_dim:
        raise ValueError("pairing and subspace dimensions differ")
    if s.dim == 0:
        return Subspace.full(s.ambient_dim, dtype=s.basis.dtype, tol=s.tol)
    return Subspace(_null(s.basis.T @ q, s.tol), s.tol)


def intersect(s1: Subspace, s2: Subspace) -> Subspace:
    """Intersection as the null space of the stacked [P1 - Id; P2 - Id]."""
    _check_same(s1, s2)
    tol = max(s1.tol, s2.tol)
    if s1.dim == 0 or s2.dim == 0:
        dtype = np.result_type(s1.basis, s2.basis)
        return Subspace.zero(s1.ambient_dim, dtype=dtype, tol=tol)
    n = s1.ambient_dim
    eye = np.eye(n)
    stacked = np.vstack([s1.projector - eye, s2.projector - eye])
    # Rank is decided against the identity scale (singular values of P - Id are 0 or 1).
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    r = int((s > tol).sum())
    return Subspace(vh[r:].conj().T, tol)


def subspace_sum(s1: Subspace, s2: Subspace) -> Subspace:
    _check_same(s1, s2)
    tol = max(s1.tol, s2.tol)
    return Subspace(_orth(np.hstack([s1.basis, s2.basis]), tol), tol)


def inclusion_angle(s1: Subspace, s2: Subspace) -> float:
    """Largest angle between a unit vector of S1 and the subspace S2 (0 when S1 is in S2)."""
    _check_same(s1, s2)
    if s1.dim == 0:
        return 0.0
    if s2.dim == 0:
        return float(np.pi / 2)
    resid = s1.basis - s2.basis @ (s2.basis.conj().T @ s1.basis)
    sig = np.linalg.norm(resid, 2)
    return float(np.arcsin(min(1.0, sig)))


def max_principal_angle(s1: Subspace, s2: Subspace) -> float:
    """Largest principal angle between equal-dimensional subspaces."""
    _check_same(s1, s2)
    if s1.dim != s2.dim:
        return float(np.pi / 2)
    return max(inclusion_angle(s1, s2), inclusion_angle(s2, s1))


def subspace_equal(s1: Subspace, s2: Subspace, angle_tol: float = ANGLE_TOL) -> tuple[bool, float]:
    """(equal?, largest principal angle). Unequal dimensions report pi/2."""
    angle = max_principal_angle(s1, s2)
    return (s1.dim == s2.dim and angle < angle_tol), angle


def is_isotropic(s: Subspace, q=None, angle_tol: float = ANGLE_TOL) -> bool:
    return inclusion_angle(s, perp_pairing(s, q)) < angle_tol


def apply(a: np.ndarray, s: Subspace) -> Subspace:
    """Image A(S) of a subspace under a linear map."""
    if s.dim == 0:
        return Subspace.zero(a.shape[0], dtype=np.result_type(a, s.basis), tol=s.tol)
    return Subspace(_orth(a @ s.basis, s.tol), s.tol)


def restrict_operator(a: np.ndarray, s: Subspace, tol: float = 1e-8) -> np.ndarray:
    """Matrix B^H A B of A restricted to an invariant subspace with basis B."""
    a = np.asarray(a)
    b = s.basis
    ab = a @ b
    leak = ab - b @ (b.conj().T @ ab)
    leakage = float(np.linalg.norm(leak, 2)) if leak.size else 0.0
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    if leakage > tol * scale:
        raise SubspaceNotInvariant(leakage, tol)
    return b.conj().T @ ab
