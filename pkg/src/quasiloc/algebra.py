"""Dense operators on finite tensor products, with tracked support.

An operator on region ``ambient`` is a ``d^n x d^n`` matrix whose tensor legs
follow the lexicographic order of the sites of ``ambient``.  Conditional
expectations are normalised partial traces followed by re-embedding with the
identity, so ``cond_expect(A, X)`` lives on the same ambient region as A.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DomainError
from .lattice import Region, fatten_within

MAX_DIM = 2**14
MAX_LOCAL_DIM = 4
# below this size the spectral norm is computed by a full decomposition
_DENSE_NORM_LIMIT = 1024


def _check_dim(d: int, n: int):
    if not 2 <= d <= MAX_LOCAL_DIM:
        raise DomainError(f"local dimension {d} outside [2, {MAX_LOCAL_DIM}]")
    if d**n > MAX_DIM:
        raise DomainError(f"dimension {d}^{n} exceeds the cap {MAX_DIM}")


def embed_matrix(M: np.ndarray, sub: Region, ambient: Region, d: int = 2) -> np.ndarray:
    """Tensor ``M`` (acting on ``sub``) with the identity on ``ambient - sub``."""
    if not sub.issubset(ambient):
        raise DomainError("embedding region is not contained in the target region")
    n, k = len(ambient), len(sub)
    if M.shape != (d**k, d**k):
        raise DomainError(f"matrix shape {M.shape} does not fit {k} sites of dimension {d}")
    if k == n:
        return np.array(M, dtype=complex, copy=True)
    rest = ambient - sub
    big = np.kron(M, np.eye(d ** (n - k)))
    # legs are currently ordered [sub..., rest...]; move them into ambient order
    order = ambient.positions(sub) + ambient.positions(rest)
    perm = np.argsort(order)
    t = big.reshape((d,) * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return np.ascontiguousarray(t.reshape(d**n, d**n))


def reduce_matrix(M: np.ndarray, ambient: Region, keep: Region, d: int = 2) -> np.ndarray:
    """Normalised partial trace of ``M`` over ``ambient - keep``; result acts on ``keep``."""
    n = len(ambient)
    keep = keep & ambient
    k = len(keep)
    if k == n:
        return np.array(M, dtype=complex, copy=True)
    kp = ambient.positions(keep)
    tp = ambient.positions(ambient - keep)
    dk, dt = d**k, d ** (n - k)
    t = M.reshape((d,) * (2 * n))
    t = t.transpose(kp + tp + [n + p for p in kp] + [n + p for p in tp])
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("iaja->ij", t) / dt


def cond_expect_matrix(M: np.ndarray, ambient: Region, X: Region, d: int = 2) -> np.ndarray:
    keep = X & ambient
    return embed_matrix(reduce_matrix(M, ambient, keep, d), keep, ambient, d)


def spectral_norm(M, hermitian: bool | None = None) -> float:
    """Largest singular value of a dense matrix or a scipy ``LinearOperator``."""
    if isinstance(M, spla.LinearOperator):
        return _krylov_norm(M, hermitian)
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if hermitian is None:
        hermitian = M.shape[0] <= 2048 and np.allclose(M, M.conj().T, atol=1e-13, rtol=0)
    n = M.shape[0]
    if n <= _DENSE_NORM_LIMIT:
        if hermitian:
            return float(np.max(np.abs(np.linalg.eigvalsh(M))))
        return float(np.linalg.norm(M, 2))
    return _krylov_norm(spla.aslinearoperator(M), hermitian)


def _krylov_norm(op: spla.LinearOperator, hermitian) -> float:
    n = op.shape[0]
    if n <= 2:
        return float(np.linalg.norm(op @ np.eye(n, dtype=complex), 2))
    v0 = np.random.default_rng(12345).standard_normal(n).astype(complex)
    if hermitian:
        vals = spla.eigsh(op, k=1, which="LM", tol=1e-13, v0=v0,
                          return_eigenvectors=False, maxiter=20 * n)
        return float(np.max(np.abs(vals)))
    vals = spla.svds(op, k=1, tol=1e-13, v0=v0, return_singular_vectors=False,
                     maxiter=20 * n)
    return float(np.max(vals))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Matrix on the tensor product over ``ambient`` that acts trivially off ``support``."""

    support: Region
    ambient: Region
    matrix: np.ndarray
    hermitian: bool = False
    d: int = 2

    def __post_init__(self):
        if not self.support.issubset(self.ambient):
            raise DomainError("support must be contained in the ambient region")
        _check_dim(self.d, len(self.ambient))
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.d ** len(self.ambient)
        if m.shape != (dim, dim):
            raise DomainError(f"matrix shape {m.shape} != ({dim}, {dim})")
        if self.hermitian and not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
            raise DomainError("matrix flagged Hermitian but is not")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_local(cls, M, support: Region, ambient: Region | None = None, d: int = 2,
                   hermitian: bool | None = None) -> "LocalOperator":
        """Build from a matrix acting on ``support`` only."""
        M = np.asarray(M, dtype=complex)
        ambient = support if ambient is None else ambient
        if hermitian is None:
            hermitian = bool(np.allclose(M, M.conj().T, atol=1e-12, rtol=0))
        return cls(support, ambient, embed_matrix(M, support, ambient, d), hermitian, d)

    @classmethod
    def identity(cls, ambient: Region, d: int = 2) -> "LocalOperator":
        return cls(Region(), ambient, np.eye(d ** len(ambient)), True, d)

    @classmethod
    def zero(cls, ambient: Region, d: int = 2) -> "LocalOperator":
        dim = d ** len(ambient)
        return cls(Region(), ambient, np.zeros((dim, dim)), True, d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def local_matrix(self) -> np.ndarray:
        """The matrix restricted to ``support`` (exact when the support claim holds)."""
        return reduce_matrix(self.matrix, self.ambient, self.support, self.d)

    def with_matrix(self, M, support=None, hermitian=None) -> "LocalOperator":
        return LocalOperator(self.support if support is None else support, self.ambient, M,
                             self.hermitian if hermitian is None else hermitian, self.d)

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        _same_ambient(self, other)
        return LocalOperator(self.support | other.support, self.ambient,
                             self.matrix + other.matrix, self.hermitian and other.hermitian,
                             self.d)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        _same_ambient(self, other)
        return LocalOperator(self.support | other.support, self.ambient,
                             self.matrix - other.matrix, self.hermitian and other.hermitian,
                             self.d)

    def __neg__(self) -> "LocalOperator":
        return self.with_matrix(-self.matrix)

    def __mul__(self, c) -> "LocalOperator":
        c = complex(c)
        return self.with_matrix(c * self.matrix, hermitian=self.hermitian and c.imag == 0)

    __rmul__ = __mul__

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        _same_ambient(self, other)
        return LocalOperator(self.support | other.support, self.ambient,
                             self.matrix @ other.matrix, False, self.d)

    def dag(self) -> "LocalOperator":
        return self.with_matrix(self.matrix.conj().T)

    def to_json(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {"support": self.support.to_json(), "ambient": self.ambient.to_json(),
                "d": self.d, "matrix": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_json(cls, data: dict) -> "LocalOperator":
        amb = Region.from_json(data["ambient"])
        d = int(data.get("d", 2))
        arr = np.array(data["matrix"], dtype=float)
        dim = d ** len(amb)
        M = (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)
        herm = bool(np.allclose(M, M.conj().T, atol=1e-12, rtol=0))
        return cls(Region.from_json(data["support"]), amb, M, herm, d)


def _same_ambient(a: LocalOperator, b: LocalOperator):
    if a.ambient != b.ambient or a.d != b.d:
        raise DomainError("operators live on different ambient regions")


def embed(A: LocalOperator, into: Region) -> LocalOperator:
    """Tensor A with the identity on ``into - A.ambient``."""
    if not A.ambient.issubset(into):
        raise DomainError("target region must contain the operator's ambient region")
    if A.ambient == into:
        return A
    return LocalOperator(A.support, into, embed_matrix(A.matrix, A.ambient, into, A.d),
                         A.hermitian, A.d)


def op_norm(A) -> float:
    """Spectral norm of a LocalOperator or an array."""
    if isinstance(A, LocalOperator):
        if not A.support and A.dim > _DENSE_NORM_LIMIT:
            # multiple of the identity
            return float(abs(A.matrix[0, 0]))
        return spectral_norm(A.matrix, A.hermitian or None)
    return spectral_norm(A)


def cond_expect(A: LocalOperator, X: Region) -> LocalOperator:
    """``Pi_X(A)``: normalised partial trace over ``ambient - X``, re-embedded."""
    if not X.issubset(A.ambient):
        raise DomainError("conditional expectation region must lie in the ambient region")
    M = cond_expect_matrix(A.matrix, A.ambient, X, A.d)
    return LocalOperator(A.support & X, A.ambient, M, A.hermitian, A.d)


def delta_m(A: LocalOperator, X: Region, m: int) -> LocalOperator:
    """``Pi_{X(m)}(A) - Pi_{X(m-1)}(A)``, with ``Pi_{X(0)}(A)`` for ``m = 0``.

    Fattenings are taken inside ``A.ambient``: on operators over the ambient
    region, ``Pi_Y`` coincides with ``Pi_{Y & ambient}``.
    """
    if m < 0:
        raise DomainError("m must be non-negative")
    outer = fatten_within(X, m, A.ambient)
    hi = cond_expect(A, outer)
    if m == 0:
        return hi
    inner = fatten_within(X, m - 1, A.ambient)
    if inner == outer:
        return LocalOperator(Region(), A.ambient, np.zeros_like(A.matrix), True, A.d)
    lo = cond_expect(A, inner)
    return LocalOperator(outer, A.ambient, hi.matrix - lo.matrix, A.hermitian, A.d)


def commutator(A: LocalOperator, B: LocalOperator) -> LocalOperator:
    _same_ambient(A, B)
    return LocalOperator(A.support | B.support, A.ambient,
                         A.matrix @ B.matrix - B.matrix @ A.matrix, False, A.d)


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    """GUE-like Hermitian matrix normalised to spectral norm ``scale``."""
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    H = (G + G.conj().T) / 2
    return H * (scale / spectral_norm(H, True))


def random_local(rng: np.random.Generator, support: Region, ambient: Region, d: int = 2,
                 hermitian: bool = True) -> LocalOperator:
    dim = d ** len(support)
    if hermitian:
        M = random_hermitian(rng, dim)
    else:
        M = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        M /= spectral_norm(M, False)
    return LocalOperator.from_local(M, support, ambient, d, hermitian)


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch.upper()])
    return out


def fixed_order_sum(mats) -> np.ndarray:
    """Pairwise summation in a fixed order, for reproducible reductions."""
    mats = list(mats)
    if not mats:
        raise DomainError("empty sum")
    while len(mats) > 1:
        nxt = [mats[i] + mats[i + 1] for i in range(0, len(mats) - 1, 2)]
        if len(mats) % 2:
            nxt.append(mats[-1])
        mats = nxt
    return mats[0]


def unitarity_defect(U: np.ndarray) -> float:
    return spectral_norm(U.conj().T @ U - np.eye(U.shape[0]), True)


__all__ = [
    "LocalOperator", "embed", "op_norm", "cond_expect", "delta_m", "commutator",
    "embed_matrix", "reduce_matrix", "cond_expect_matrix", "spectral_norm",
    "random_hermitian", "random_local", "pauli_string", "PAULI", "fixed_order_sum",
    "unitarity_defect", "MAX_DIM",
]
