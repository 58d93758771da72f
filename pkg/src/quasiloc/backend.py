"""Operator backends used by the time-stepping pipelines.

Two interchangeable "spaces" describe the full Hilbert space of a region:

* :class:`DenseSpace` stores operators as plain ``numpy`` arrays.
* :class:`BlockSpace` stores operators that conserve a U(1) charge (the sum of
  per-site charges of the computational basis states) as lists of dense
  blocks, one per charge sector.  Products then cost ``sum_k n_k^3`` instead
  of ``N^3``.

Both expose the same small vocabulary (embed local terms, conditional
expectations, products, exponentials from eigendecompositions, norms), so
the integrators and the factorization pipeline never branch on the storage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .algebra import cond_expect_matrix, embed_matrix, spectral_norm
from .errors import BlockStructureError, DomainError
from .lattice import Region


# ------------------------------------------------------------------ helpers

def dag(x):
    if isinstance(x, BlockMatrix):
        return x.dag()
    return x.conj().T


def err_norm(x) -> float:
    """Cheap upper bound on the spectral norm: ``sqrt(||x||_1 ||x||_inf)``."""
    if isinstance(x, BlockMatrix):
        return max((err_norm(b) for b in x.blocks), default=0.0)
    a = np.abs(x)
    return float(math.sqrt(a.sum(0).max() * a.sum(1).max())) if a.size else 0.0


def _apply_local(M: np.ndarray, pos: list[int], n: int, d: int, x: np.ndarray) -> np.ndarray:
    """Apply a matrix acting on tensor legs ``pos`` to a state vector on n legs."""
    k = len(pos)
    t = x.reshape((d,) * n)
    Mt = M.reshape((d,) * (2 * k))
    out = np.tensordot(Mt, t, axes=(list(range(k, 2 * k)), pos))
    # tensordot puts the k new legs first; move them back
    rest = [i for i in range(n) if i not in pos]
    order = pos + rest
    return np.moveaxis(out, list(range(n)), order).reshape(-1)


@dataclass
class BlockMatrix:
    """Block-diagonal operator; ``blocks[k]`` acts on sector ``k`` of its space."""

    space: "BlockSpace"
    blocks: list

    def _wrap(self, blocks):
        return BlockMatrix(self.space, blocks)

    def __matmul__(self, other):
        if isinstance(other, BlockMatrix):
            return self._wrap([a @ b for a, b in zip(self.blocks, other.blocks)])
        if isinstance(other, np.ndarray) and other.ndim == 1:
            return self.space.apply(self, other)
        return NotImplemented

    def __add__(self, other):
        return self._wrap([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        return self._wrap([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return self._wrap([-a for a in self.blocks])

    def __mul__(self, c):
        return self._wrap([c * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._wrap([a / c for a in self.blocks])

    def dag(self):
        return self._wrap([a.conj().T for a in self.blocks])

    def copy(self):
        return self._wrap([a.copy() for a in self.blocks])

    def trace(self) -> complex:
        return complex(sum(np.trace(a) for a in self.blocks))


# ------------------------------------------------------------------ spaces

class DenseSpace:
    """Full tensor-product space of ``region`` with local dimension ``d``."""

    kind = "dense"

    def __init__(self, region: Region, d: int = 2):
        self.region = region
        self.d = d
        self.n = len(region)
        self.dim = d**self.n

    def zeros(self):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def eye(self):
        return np.eye(self.dim, dtype=complex)

    def embed(self, M: np.ndarray, sub: Region) -> np.ndarray:
        return embed_matrix(np.asarray(M, dtype=complex), sub, self.region, self.d)

    def from_dense(self, M: np.ndarray) -> np.ndarray:
        return np.asarray(M, dtype=complex)

    def to_dense(self, X) -> np.ndarray:
        return X

    def cond_expect(self, X: np.ndarray, keep: Region) -> np.ndarray:
        return cond_expect_matrix(X, self.region, keep, self.d)

    def eigh(self, H):
        return np.linalg.eigh(H)

    def expm_from_eigh(self, eig, tau: float):
        """``exp(-i tau H)`` from ``eig = (w, V)``."""
        w, V = eig
        return (V * np.exp(-1j * tau * w)) @ V.conj().T

    def norm(self, X) -> float:
        return spectral_norm(X)

    def apply(self, X, v):
        return X @ v

    def polar(self, U):
        return _polar(U)

    def unitarity_defect(self, U) -> float:
        return spectral_norm(dag(U) @ U - self.eye(), True)

    def conj_diff_norm(self, X1, X2, A: np.ndarray, sub: Region) -> float:
        """``||X1 A X1^* - X2 A X2^*||`` for a Hermitian A acting on ``sub``.

        The difference is Hermitian, so a Lanczos iteration on matrix-vector
        products gives the norm without forming any full matrix.
        """
        if self.dim <= 512:
            Af = self.to_dense(self.embed_any(A, sub))
            D1, D2 = self.to_dense(X1), self.to_dense(X2)
            return spectral_norm(D1 @ Af @ D1.conj().T - D2 @ Af @ D2.conj().T, True)
        pos = self.region.positions(sub)
        X1d, X2d = dag(X1), dag(X2)

        def loc(x):
            return _apply_local(A, pos, self.n, self.d, x)

        def mv(x):
            x = np.asarray(x, dtype=complex).reshape(-1)
            return (self.apply(X1, loc(self.apply(X1d, x)))
                    - self.apply(X2, loc(self.apply(X2d, x))))

        op = spla.LinearOperator((self.dim, self.dim), matvec=mv, rmatvec=mv, dtype=complex)
        return _lanczos_norm(op)

    def commutator_norm(self, Y, A: np.ndarray, sub: Region) -> float:
        """``||Y A Y^* - A||``, equal to ``||[Y, A]||`` when Y is unitary."""
        return self.conj_diff_norm(Y, self.eye(), A, sub)

    def embed_any(self, A, sub):
        """Embed a local matrix even if it breaks the charge structure (dense result)."""
        return embed_matrix(np.asarray(A, dtype=complex), sub, self.region, self.d)


def _polar(U: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition.

    The default divide-and-conquer SVD occasionally fails to converge on
    nearly unitary input; the QR-iteration driver is the fallback.
    """
    try:
        u, _, vh = np.linalg.svd(U)
    except np.linalg.LinAlgError:
        u, _, vh = sla.svd(U, lapack_driver="gesvd")
    return u @ vh


def _lanczos_norm(op) -> float:
    n = op.shape[0]
    v0 = np.random.default_rng(2024).standard_normal(n).astype(complex)
    vals = spla.eigsh(op, k=1, which="LM", tol=1e-10, v0=v0, ncv=40,
                      return_eigenvectors=False, maxiter=50 * n)
    return float(np.max(np.abs(vals)))


class BlockSpace(DenseSpace):
    """Charge-sector decomposition of the tensor-product space.

    The charge of local basis state ``k`` is ``charges[k]`` (default ``k``), and
    a basis state of the region carries the sum of its site charges.  Only
    operators commuting with the total charge can be stored.
    """

    kind = "block"

    def __init__(self, region: Region, d: int = 2, charges=None):
        super().__init__(region, d)
        self.local_charges = np.arange(d) if charges is None else np.asarray(charges)
        idx = np.arange(self.dim)
        # digits[i, j] = local basis index of site j in basis state i (leg 0 most significant)
        self.digits = np.stack([(idx // d ** (self.n - 1 - j)) % d for j in range(self.n)], 1)
        total = self.local_charges[self.digits].sum(1)
        self.charges = sorted(set(total.tolist()))
        self.sectors = [np.nonzero(total == q)[0] for q in self.charges]
        self.sizes = [len(s) for s in self.sectors]
        self._ce_cache: dict = {}

    # construction ---------------------------------------------------------
    def zeros(self):
        return BlockMatrix(self, [np.zeros((k, k), dtype=complex) for k in self.sizes])

    def eye(self):
        return BlockMatrix(self, [np.eye(k, dtype=complex) for k in self.sizes])

    def _codes(self, sub: Region):
        """Integer codes of the ``sub`` digits and of the remaining digits."""
        pos = self.region.positions(sub)
        rest = [j for j in range(self.n) if j not in pos]
        w_sub = self.d ** np.arange(len(pos) - 1, -1, -1)
        w_rest = self.d ** np.arange(len(rest) - 1, -1, -1)
        s = self.digits[:, pos] @ w_sub if pos else np.zeros(self.dim, dtype=int)
        e = self.digits[:, rest] @ w_rest if rest else np.zeros(self.dim, dtype=int)
        return s, e

    def check_local(self, M: np.ndarray, sub: Region):
        k = len(sub)
        idx = np.arange(self.d**k)
        dig = np.stack([(idx // self.d ** (k - 1 - j)) % self.d for j in range(k)], 1)
        q = self.local_charges[dig].sum(1) if k else np.zeros(1)
        off = np.abs(M[q[:, None] != q[None, :]])
        if off.size and off.max() > 1e-12:
            raise BlockStructureError(
                f"operator on {sub.sites} does not conserve the charge (leak {off.max():.2e})")

    def embed(self, M: np.ndarray, sub: Region) -> BlockMatrix:
        M = np.asarray(M, dtype=complex)
        if not sub.issubset(self.region):
            raise DomainError("embedding region not contained in the space's region")
        self.check_local(M, sub)
        s, e = self._codes(sub)
        blocks = []
        for sec in self.sectors:
            ss, ee = s[sec], e[sec]
            blocks.append(M[ss[:, None], ss[None, :]] * (ee[:, None] == ee[None, :]))
        return BlockMatrix(self, blocks)

    def from_dense(self, M: np.ndarray) -> BlockMatrix:
        M = np.asarray(M, dtype=complex)
        out = BlockMatrix(self, [M[np.ix_(sec, sec)].copy() for sec in self.sectors])
        leak = np.abs(M).sum() - sum(np.abs(b).sum() for b in out.blocks)
        if leak > 1e-10 * max(1.0, np.abs(M).sum()):
            raise BlockStructureError("dense matrix has weight outside the charge sectors")
        return out

    def to_dense(self, X) -> np.ndarray:
        if isinstance(X, np.ndarray):
            return X
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for sec, b in zip(self.sectors, X.blocks):
            out[np.ix_(sec, sec)] = b
        return out

    # conditional expectation -----------------------------------------------
    def _ce_plan(self, keep: Region):
        key = keep.sites
        if key not in self._ce_cache:
            s, e = self._codes(keep)
            plan = []
            for sec in self.sectors:
                ss, ee = s[sec], e[sec]
                same = ee[:, None] == ee[None, :]
                flat = (ss[:, None] * self.d ** len(keep) + ss[None, :])
                plan.append((same, flat))
            self._ce_cache[key] = plan
        return self._ce_cache[key]

    def cond_expect(self, X: BlockMatrix, keep: Region) -> BlockMatrix:
        keep = keep & self.region
        dk = self.d ** len(keep)
        dt = self.dim // dk
        plan = self._ce_plan(keep)
        acc = np.zeros(dk * dk, dtype=complex)
        for (same, flat), b in zip(plan, X.blocks):
            f = flat[same]
            v = b[same]
            acc += np.bincount(f, weights=v.real, minlength=dk * dk)
            acc += 1j * np.bincount(f, weights=v.imag, minlength=dk * dk)
        acc /= dt
        return BlockMatrix(self, [np.where(same, acc[flat], 0.0) for same, flat in plan])

    # spectral tools ---------------------------------------------------------
    def eigh(self, H: BlockMatrix):
        return [np.linalg.eigh(b) for b in H.blocks]

    def expm_from_eigh(self, eig, tau: float) -> BlockMatrix:
        return BlockMatrix(self, [(V * np.exp(-1j * tau * w)) @ V.conj().T for w, V in eig])

    def norm(self, X: BlockMatrix) -> float:
        return max((spectral_norm(b) for b in X.blocks), default=0.0)

    def apply(self, X: BlockMatrix, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=complex)
        for sec, b in zip(self.sectors, X.blocks):
            out[sec] = b @ v[sec]
        return out

    def polar(self, U: BlockMatrix) -> BlockMatrix:
        return BlockMatrix(self, [_polar(b) for b in U.blocks])

    def unitarity_defect(self, U: BlockMatrix) -> float:
        return max(spectral_norm(b.conj().T @ b - np.eye(len(b)), True) for b in U.blocks)



def make_space(region: Region, d: int = 2, kind: str = "dense", charges=None):
    if kind == "dense":
        return DenseSpace(region, d)
    if kind == "block":
        return BlockSpace(region, d, charges)
    raise DomainError(f"unknown backend {kind!r}")
