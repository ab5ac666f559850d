"""Finite-dimensional W*-probability spaces.

A space is a finite direct sum of full matrix blocks carrying a faithful
state ``phi(x) = Tr(a x)``.  The density ``a`` lives inside the algebra, so
it is block diagonal too.  It is diagonalized once when the space is built
and every power of ``a`` afterwards goes through that cached eigenbasis.

Elements are :class:`BlockMatrix` values.  All arithmetic is blockwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadRank,
    BadWeights,
    MultiBlockUnsupported,
    NotHermitian,
    NotPositiveDefinite,
    ShapeMismatch,
    TraceNotOne,
    ValidationError,
)

POSDEF_TOL = 1e-12
TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


class BlockMatrix:
    """Block-diagonal complex matrix, stored as its list of square blocks."""

    __slots__ = ("blocks",)

    def __init__(self, blocks: Iterable):
        blocks = tuple(_frozen(b) for b in blocks)
        for k, b in enumerate(blocks):
            if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
                raise ShapeMismatch(f"block {k} has shape {b.shape}, expected a nonempty square matrix",
                                    field=f"blocks[{k}]")
        if not blocks:
            raise ShapeMismatch("a block matrix needs at least one block", field="blocks")
        self.blocks = blocks

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "BlockMatrix":
        return cls(np.eye(n) for n in dims)

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "BlockMatrix":
        return cls(np.zeros((n, n)) for n in dims)

    @classmethod
    def from_dense(cls, mat, dims: Sequence[int]) -> "BlockMatrix":
        """Cut the diagonal blocks out of a dense matrix (off-block entries are dropped)."""
        mat = np.asarray(mat)
        total = int(sum(dims))
        if mat.shape != (total, total):
            raise ShapeMismatch(f"dense matrix has shape {mat.shape}, dims {tuple(dims)} need {(total, total)}")
        out, off = [], 0
        for n in dims:
            out.append(mat[off:off + n, off:off + n])
            off += n
        return cls(out)

    def dense(self) -> np.ndarray:
        total = sum(self.dims)
        out = np.zeros((total, total), dtype=complex)
        off = 0
        for b in self.blocks:
            n = b.shape[0]
            out[off:off + n, off:off + n] = b
            off += n
        return out

    @property
    def H(self) -> "BlockMatrix":
        return BlockMatrix(b.conj().T for b in self.blocks)

    def _check(self, other: "BlockMatrix"):
        if not isinstance(other, BlockMatrix):
            return NotImplemented
        if other.dims != self.dims:
            raise ShapeMismatch(f"block dims {self.dims} and {other.dims} differ")
        return None

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return BlockMatrix(a @ b for a, b in zip(self.blocks, other.blocks))

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return BlockMatrix(a + b for a, b in zip(self.blocks, other.blocks))

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return BlockMatrix(a - b for a, b in zip(self.blocks, other.blocks))

    def __mul__(self, scalar):
        if isinstance(scalar, BlockMatrix):
            return NotImplemented
        return BlockMatrix(scalar * b for b in self.blocks)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return BlockMatrix(b / scalar for b in self.blocks)

    def __neg__(self):
        return BlockMatrix(-b for b in self.blocks)

    def trace(self) -> complex:
        return complex(sum(np.trace(b) for b in self.blocks))

    def op_norm(self) -> float:
        return max(float(np.linalg.norm(b, 2)) for b in self.blocks)

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in self.blocks)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return all(np.max(np.abs(b - b.conj().T), initial=0.0) <= tol for b in self.blocks)

    def allclose(self, other: "BlockMatrix", atol: float = 1e-10) -> bool:
        return self.dims == other.dims and all(
            np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        return f"BlockMatrix(dims={self.dims})"


def commutator(x: BlockMatrix, y: BlockMatrix) -> BlockMatrix:
    return x @ y - y @ x


@dataclass(frozen=True, eq=False)
class WStarSpace:
    """A finite-dimensional von Neumann algebra with a faithful state.

    ``eigvals[k]`` holds the eigenvalues of block ``k`` of the density in
    descending order; ``eigvecs[k]`` holds the matching orthonormal columns.
    Build instances through :func:`make_space` or the constructors below.
    """

    dims: tuple[int, ...]
    density: BlockMatrix
    eigvals: tuple[np.ndarray, ...]
    eigvecs: tuple[np.ndarray, ...]

    @property
    def n_blocks(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(sum(self.dims))

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))

    @cached_property
    def lam(self) -> np.ndarray:
        """All density eigenvalues, in the order of the columns of :attr:`basis`."""
        out = np.concatenate(self.eigvals)
        out.setflags(write=False)
        return out

    @cached_property
    def basis(self) -> np.ndarray:
        out = BlockMatrix(self.eigvecs).dense()
        out.setflags(write=False)
        return out

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean N x N pattern of the positions an element may occupy."""
        out = np.zeros((self.total_dim,) * 2, dtype=bool)
        for off, n in zip(self.offsets, self.dims):
            out[off:off + n, off:off + n] = True
        out.setflags(write=False)
        return out

    @cached_property
    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_blocks), self.dims)

    def identity(self) -> BlockMatrix:
        return BlockMatrix.identity(self.dims)

    def check(self, x: BlockMatrix, name: str = "x") -> BlockMatrix:
        if not isinstance(x, BlockMatrix):
            raise ShapeMismatch(f"{name} must be a BlockMatrix", field=name)
        if x.dims != self.dims:
            raise ShapeMismatch(f"{name} has block dims {x.dims}, space has {self.dims}", field=name)
        return x

    # eigen coordinates: dense matrices in which the density is diagonal
    def to_eigen(self, x: BlockMatrix) -> np.ndarray:
        self.check(x)
        out = np.zeros((self.total_dim,) * 2, dtype=complex)
        for off, n, v, b in zip(self.offsets, self.dims, self.eigvecs, x.blocks):
            out[off:off + n, off:off + n] = _conjugate(b, v)
        return out

    def from_eigen(self, m: np.ndarray) -> BlockMatrix:
        m = np.asarray(m)
        return BlockMatrix(_conjugate(m[off:off + n, off:off + n], v.conj().T)
                           for off, n, v in zip(self.offsets, self.dims, self.eigvecs))

    def power_diag(self, z: complex) -> np.ndarray:
        """Eigenvalues raised to ``z`` with the real logarithm, ``exp(z ln lam)``."""
        return np.exp(z * np.log(self.lam))


def _conjugate(b, v):
    """``v* b v``, exact when ``b`` is a multiple of the identity (central elements stay central)."""
    if np.array_equal(b, b[0, 0] * np.eye(len(b))):
        return np.array(b, dtype=complex)
    return v.conj().T @ b @ v


def _eigh_desc(block):
    w, v = np.linalg.eigh(block)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _assemble(dims, density, eigvals, eigvecs, check_reassembly=True) -> WStarSpace:
    lam_min = min(float(np.min(w)) for w in eigvals)
    if lam_min <= POSDEF_TOL:
        raise NotPositiveDefinite(
            f"density has eigenvalue {lam_min:.3e} <= {POSDEF_TOL:g}; the state is not faithful", field="density")
    tr = float(sum(np.sum(w) for w in eigvals))
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"density trace is {tr!r}, expected 1 within {TRACE_TOL:g}", field="density")
    frozen_w, frozen_v = [], []
    for w, v in zip(eigvals, eigvecs):
        w = np.array(w, dtype=float)
        v = np.array(v, dtype=complex)
        w.setflags(write=False)
        v.setflags(write=False)
        frozen_w.append(w)
        frozen_v.append(v)
    if check_reassembly:
        for k, (w, v, b) in enumerate(zip(frozen_w, frozen_v, density.blocks)):
            err = np.max(np.abs((v * w) @ v.conj().T - b))
            if err > 1e-12 * max(1.0, len(w) ** 0.5):
                raise NotPositiveDefinite(f"eigendecomposition of block {k} does not reproduce the density "
                                          f"(error {err:.2e})", field="density")
    return WStarSpace(tuple(int(n) for n in dims), density, tuple(frozen_w), tuple(frozen_v))


def make_space(dims: Sequence[int], density) -> WStarSpace:
    """Validate a density and build the space with its eigen cache."""
    dims = tuple(int(n) for n in dims)
    if not dims or any(n <= 0 for n in dims):
        raise ShapeMismatch(f"dims must be positive integers, got {dims}", field="dims")
    if not isinstance(density, BlockMatrix):
        density = BlockMatrix(density)
    if density.dims != dims:
        raise ShapeMismatch(f"density block dims {density.dims} do not match dims {dims}", field="density")
    if not density.is_hermitian(HERMITIAN_TOL):
        raise NotPositiveDefinite("density is not Hermitian", field="density")
    herm = BlockMatrix((b + b.conj().T) / 2 for b in density.blocks)
    pairs = [_eigh_desc(b) for b in herm.blocks]
    return _assemble(dims, herm, [p[0] for p in pairs], [p[1] for p in pairs])


def diagonal_space(weights: Sequence[float]) -> WStarSpace:
    """Single matrix block with a diagonal density."""
    w = np.asarray(weights, dtype=float)
    return make_space([len(w)], [np.diag(w)])


def tracial_space(n: int) -> WStarSpace:
    return diagonal_space(np.full(n, 1.0 / n))


def commutative_space(weights: Sequence[float]) -> WStarSpace:
    """The abelian algebra C^k with the given point masses."""
    return make_space([1] * len(weights), [[[w]] for w in weights])


def state_eval(space: WStarSpace, x: BlockMatrix) -> complex:
    """``phi(x) = Tr(a x)``."""
    space.check(x)
    return complex(sum(np.sum(a * b.T) for a, b in zip(space.density.blocks, x.blocks)))


@dataclass(frozen=True)
class NormReport:
    op_norm: float
    phi_norm: float
    sharp_norm: float


def phi_norm(space: WStarSpace, x: BlockMatrix) -> float:
    return float(np.sqrt(max(0.0, state_eval(space, x.H @ x).real)))


def sharp_norm(space: WStarSpace, x: BlockMatrix) -> float:
    """``sqrt((phi(x*x) + phi(x x*)) / 2)``."""
    s = state_eval(space, x.H @ x).real + state_eval(space, x @ x.H).real
    return float(np.sqrt(max(0.0, s / 2)))


def norms(space: WStarSpace, x: BlockMatrix) -> NormReport:
    space.check(x)
    return NormReport(x.op_norm(), phi_norm(space, x), sharp_norm(space, x))


def _single_block(space: WStarSpace, what: str):
    if space.n_blocks != 1:
        raise MultiBlockUnsupported(f"{what} needs single-block spaces, got dims {space.dims}")


def tensor(space_a: WStarSpace, space_b: WStarSpace) -> WStarSpace:
    """Tensor product of two single-block spaces with the product state."""
    _single_block(space_a, "tensor")
    _single_block(space_b, "tensor")
    dens = np.kron(space_a.density.blocks[0], space_b.density.blocks[0])
    w = np.kron(space_a.eigvals[0], space_b.eigvals[0])
    v = np.kron(space_a.eigvecs[0], space_b.eigvecs[0])
    order = np.argsort(-w, kind="stable")
    return _assemble((dens.shape[0],), BlockMatrix([dens]), [w[order]], [v[:, order]], check_reassembly=False)


def tensor_power(space: WStarSpace, n: int) -> WStarSpace:
    _single_block(space, "tensor_power")
    if n < 1:
        raise ValidationError(f"tensor power needs n >= 1, got {n}", field="n")
    out = space
    for _ in range(n - 1):
        out = tensor(out, space)
    return out


def lift(x: BlockMatrix, y: BlockMatrix) -> BlockMatrix:
    """``x (x) y`` for single-block elements."""
    if len(x.blocks) != 1 or len(y.blocks) != 1:
        raise MultiBlockUnsupported("lift needs single-block elements")
    return BlockMatrix([np.kron(x.blocks[0], y.blocks[0])])


def lift_power(x: BlockMatrix, n: int) -> BlockMatrix:
    out = x
    for _ in range(n - 1):
        out = lift(out, x)
    return out


def direct_sum(space_a: WStarSpace, space_b: WStarSpace, weights=(0.5, 0.5)) -> WStarSpace:
    wa, wb = (float(w) for w in weights)
    if wa <= 0 or wb <= 0 or abs(wa + wb - 1) > TRACE_TOL:
        raise BadWeights(f"weights must be positive and sum to 1, got {(wa, wb)}", field="weights")
    blocks = [wa * b for b in space_a.density.blocks] + [wb * b for b in space_b.density.blocks]
    return _assemble(space_a.dims + space_b.dims, BlockMatrix(blocks),
                     [wa * w for w in space_a.eigvals] + [wb * w for w in space_b.eigvals],
                     list(space_a.eigvecs) + list(space_b.eigvecs))


def block_unit(space: WStarSpace, k: int) -> BlockMatrix:
    """The central projection onto block ``k``."""
    return BlockMatrix(np.eye(n) if j == k else np.zeros((n, n)) for j, n in enumerate(space.dims))


def central_projections(space: WStarSpace) -> list[BlockMatrix]:
    return [block_unit(space, k) for k in range(space.n_blocks)]


def complex_power(space: WStarSpace, z: complex) -> BlockMatrix:
    """``a**z`` computed as ``exp(z ln lam)`` in the cached eigenbasis."""
    return BlockMatrix((v * np.exp(z * np.log(w))) @ v.conj().T for w, v in zip(space.eigvals, space.eigvecs))


def spectral_projection(y: BlockMatrix, lo: float, hi: float) -> BlockMatrix:
    """Projection onto the eigenvectors of Hermitian ``y`` with eigenvalue in ``[lo, hi]``."""
    if not y.is_hermitian(HERMITIAN_TOL):
        raise NotHermitian("spectral projection needs a Hermitian argument", field="y")
    out = []
    for b in y.blocks:
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        keep = v[:, (w >= lo) & (w <= hi)]
        out.append(keep @ keep.conj().T)
    return BlockMatrix(out)


def is_projection(p: BlockMatrix, tol: float = 1e-10) -> bool:
    return p.is_hermitian(tol) and (p @ p - p).op_norm() <= tol


def _ginibre(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample(space: WStarSpace, kind: str = "element", seed=0, rank=None) -> BlockMatrix:
    """Seeded random element of the algebra.

    ``kind`` is one of ``element``, ``hermitian``, ``unitary`` or ``projection``.
    For projections ``rank`` is an int on a single block or one int per block.
    """
    rng = np.random.default_rng(seed)
    if kind == "element":
        x = BlockMatrix(_ginibre(rng, n) for n in space.dims)
        return x / x.op_norm()
    if kind == "hermitian":
        g = BlockMatrix(_ginibre(rng, n) for n in space.dims)
        h = (g + g.H) * 0.5
        return h / h.op_norm()
    if kind == "unitary":
        return BlockMatrix(haar_unitary(rng, n) for n in space.dims)
    if kind == "projection":
        if rank is None:
            raise BadRank("projection sampling needs a rank", field="rank")
        ranks = (rank,) if np.isscalar(rank) else tuple(rank)
        if len(ranks) != space.n_blocks:
            raise BadRank(f"need one rank per block ({space.n_blocks}), got {ranks}", field="rank")
        out = []
        for n, k in zip(space.dims, ranks):
            if not 0 <= int(k) <= n:
                raise BadRank(f"rank {k} is not between 0 and {n}", field="rank")
            u = haar_unitary(rng, n)[:, :int(k)]
            out.append(u @ u.conj().T)
        return BlockMatrix(out)
    raise ValidationError(f"unknown sample kind {kind!r}", field="kind")


def random_faithful_space(dims: Sequence[int], seed=0, floor: float = 0.0) -> WStarSpace:
    """Space with a random faithful density: Dirichlet spectrum, Haar eigenbasis per block.

    ``floor`` mixes in that fraction of the normalized trace.
    """
    rng = np.random.default_rng(seed)
    total = int(sum(dims))
    lam = rng.dirichlet(np.ones(total))
    lam = (1 - floor) * lam + floor / total
    lam = np.maximum(lam, 1e-6)
    lam /= lam.sum()
    blocks, off = [], 0
    for n in dims:
        u = haar_unitary(rng, n)
        blocks.append((u * lam[off:off + n]) @ u.conj().T)
        off += n
    return make_space(dims, blocks)


# JSON files -----------------------------------------------------------------

def _encode(mat) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(mat, dtype=complex)]


def _decode(rows, n, where) -> np.ndarray:
    try:
        out = np.array([[complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in row]
                        for row in rows], dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise ShapeMismatch(f"{where}: entries must be numbers or [re, im] pairs ({exc})", field=where)
    if out.shape != (n, n):
        raise ShapeMismatch(f"{where}: expected a {n}x{n} matrix, got shape {out.shape}", field=where)
    return out


def space_to_json(space: WStarSpace) -> dict:
    return {"blocks": [{"dim": n, "density": _encode(b)} for n, b in zip(space.dims, space.density.blocks)]}


def space_from_json(doc: dict) -> WStarSpace:
    try:
        blocks = doc["blocks"]
        dims = [int(b["dim"]) for b in blocks]
    except (KeyError, TypeError) as exc:
        raise ShapeMismatch(f"space file needs blocks[].dim and blocks[].density ({exc})", field="blocks")
    mats = []
    for k, (n, b) in enumerate(zip(dims, blocks)):
        if "density" not in b:
            raise ShapeMismatch(f"blocks[{k}] has no density", field=f"blocks[{k}].density")
        mats.append(_decode(b["density"], n, f"blocks[{k}].density"))
    return make_space(dims, mats)


def element_to_json(x: BlockMatrix) -> dict:
    return {"blocks": [{"dim": n, "entries": _encode(b)} for n, b in zip(x.dims, x.blocks)]}


def element_from_json(doc: dict) -> BlockMatrix:
    try:
        blocks = doc["blocks"]
        return BlockMatrix(_decode(b["entries"], int(b["dim"]), f"blocks[{k}].entries")
                           for k, b in enumerate(blocks))
    except (KeyError, TypeError) as exc:
        raise ShapeMismatch(f"element file needs blocks[].dim and blocks[].entries ({exc})", field="blocks")


def load_space(path) -> WStarSpace:
    with open(path) as fh:
        return space_from_json(json.load(fh))


def load_element(path) -> BlockMatrix:
    with open(path) as fh:
        return element_from_json(json.load(fh))
