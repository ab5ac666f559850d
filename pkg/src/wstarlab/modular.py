"""Tomita-Takesaki data of a finite-dimensional W*-probability space.

The GNS space of ``(M, phi)`` is identified with ``M`` itself under the
Hilbert-Schmidt inner product ``<v, w> = Tr(w* v)``, with ``eta(x) = x a^{1/2}``.
On representatives:

* ``S v = a^{-1/2} v* a^{1/2}`` and ``F v = a^{1/2} v* a^{-1/2}``
* ``Delta^s v = a^s v a^{-s}`` and ``J v = v*``
* ``sigma_t(x) = a^{it} x a^{-it}``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .algebra import BlockMatrix, WStarSpace, complex_power, state_eval
from .errors import OutsideStrip, ValidationError

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class GNSVector:
    rep: BlockMatrix
    space: WStarSpace = field(repr=False)

    def inner(self, other: "GNSVector") -> complex:
        """``<self, other> = Tr(other* self)``."""
        return complex(sum(np.vdot(b, a) for a, b in zip(self.rep.blocks, other.rep.blocks)))

    def norm(self) -> float:
        return self.rep.frobenius()

    def allclose(self, other: "GNSVector", atol=1e-10) -> bool:
        return self.rep.allclose(other.rep, atol=atol)


def _halves(space):
    return complex_power(space, 0.5), complex_power(space, -0.5)


def gns_embed(space: WStarSpace, x: BlockMatrix) -> GNSVector:
    space.check(x)
    return GNSVector(x @ complex_power(space, 0.5), space)


def tomita_S(space: WStarSpace, v: GNSVector) -> GNSVector:
    h, hi = _halves(space)
    return GNSVector(hi @ v.rep.H @ h, space)


def tomita_F(space: WStarSpace, v: GNSVector) -> GNSVector:
    h, hi = _halves(space)
    return GNSVector(h @ v.rep.H @ hi, space)


def modular_delta_action(space: WStarSpace, v: GNSVector, power: float = 1.0) -> GNSVector:
    """``Delta^power`` acting on a GNS vector: ``a^s v a^{-s}``."""
    return GNSVector(complex_power(space, power) @ v.rep @ complex_power(space, -power), space)


def modular_J(space: WStarSpace, v: GNSVector) -> GNSVector:
    return GNSVector(v.rep.H, space)


def left_action(x: BlockMatrix, v: GNSVector) -> GNSVector:
    return GNSVector(x @ v.rep, v.space)


# modular data ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModularData:
    """Eigen-structure of ``Delta``.

    ``freq[i, j] = log(lam_i / lam_j)`` in the cached eigenbasis; entries that
    pair indices from different blocks are zero and excluded from the spectrum.
    """

    freq: np.ndarray
    delta_spectrum: np.ndarray
    half_power: BlockMatrix
    half_power_inv: BlockMatrix


def _cluster_logs(logs: np.ndarray, tol: float) -> np.ndarray:
    logs = np.sort(logs)
    reps, start = [], 0
    for k in range(1, len(logs) + 1):
        if k == len(logs) or logs[k] - logs[k - 1] > tol:
            reps.append(float(np.mean(logs[start:k])))
            start = k
    return np.array(reps)


def modular_frequencies(space: WStarSpace) -> np.ndarray:
    lg = np.log(space.lam)
    return np.where(space.mask, lg[:, None] - lg[None, :], 0.0)


def delta_spectrum(space: WStarSpace, tol: float = 1e-10) -> np.ndarray:
    """Distinct eigenvalues of ``Delta``, i.e. the ratios ``lam_i / lam_j`` within each block."""
    freq = modular_frequencies(space)
    pos = np.abs(freq[space.mask])
    reps = _cluster_logs(np.concatenate([[0.0], pos]), tol)
    reps = reps[reps > tol / 2]
    return np.concatenate([np.exp(-reps[::-1]), [1.0], np.exp(reps)])


def modular_data(space: WStarSpace) -> ModularData:
    return _modular_data_cached(space)


@lru_cache(maxsize=64)
def _modular_data_cached(space):
    h, hi = _halves(space)
    return ModularData(modular_frequencies(space), delta_spectrum(space), h, hi)


# modular automorphism group -------------------------------------------------

def phases(space: WStarSpace, t: float) -> np.ndarray:
    """``lam_i^{it}`` with the angle ``t ln lam_i`` reduced mod 2 pi first."""
    ang = np.mod(t * np.log(space.lam), TWO_PI)
    return np.exp(1j * ang)


def sigma_eigen(space: WStarSpace, m: np.ndarray, t: float) -> np.ndarray:
    """``sigma_t`` on matrices written in eigen coordinates (broadcasts over leading axes)."""
    ph = phases(space, t)
    return m * (ph[:, None] * ph.conj()[None, :])


def sigma_t(space: WStarSpace, x: BlockMatrix, t: float, method: str = "coefficient") -> BlockMatrix:
    space.check(x)
    if method == "conjugation":
        return complex_power(space, 1j * t) @ x @ complex_power(space, -1j * t)
    if method == "coefficient":
        return space.from_eigen(sigma_eigen(space, space.to_eigen(x), t))
    raise ValidationError(f"unknown sigma method {method!r}", field="method")


# KMS ------------------------------------------------------------------------

STRIP_TOL = 1e-12


def kms_function(space: WStarSpace, x: BlockMatrix, y: BlockMatrix, z: complex) -> complex:
    """``F_{x,y}(z) = Tr(a^{1+iz} x a^{-iz} y)`` on the strip ``0 <= Im z <= 1``."""
    z = complex(z)
    if not -STRIP_TOL <= z.imag <= 1 + STRIP_TOL:
        raise OutsideStrip(f"Im(z) = {z.imag} is outside [0, 1]", field="z")
    left = complex_power(space, 1 + 1j * z)
    right = complex_power(space, -1j * z)
    return (left @ x @ right @ y).trace()


def kms_bound(space: WStarSpace, x: BlockMatrix, y: BlockMatrix) -> float:
    """``||x|| ||y|| sum_k 1/lam_k``, a bound for ``|F_{x,y}|`` on the strip."""
    return x.op_norm() * y.op_norm() * float(np.sum(1.0 / space.lam))


@dataclass(frozen=True)
class KMSReport:
    t: float
    lower_error: float
    upper_error: float
    strip_max_ratio: float
    strip_samples: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.lower_error <= self.tol and self.upper_error <= self.tol and self.strip_max_ratio <= 1.0 + 1e-12


def kms_check(space: WStarSpace, x: BlockMatrix, y: BlockMatrix, t: float, tol: float = 1e-8,
              strip_samples: int = 64, seed=0) -> KMSReport:
    """Check both KMS boundary identities at ``t`` and the strip bound on sampled points.

    ``sigma_t`` is computed by conjugation here, independently of the
    eigen-coefficient route used by :func:`kms_function`.
    """
    sx = sigma_t(space, x, t, method="conjugation")
    lower = abs(kms_function(space, x, y, t) - state_eval(space, sx @ y))
    upper = abs(kms_function(space, x, y, t + 1j) - state_eval(space, y @ sx))
    bound = kms_bound(space, x, y)
    rng = np.random.default_rng(seed)
    ratio = 0.0
    if strip_samples:
        re = rng.uniform(-10, 10, strip_samples)
        im = rng.uniform(0, 1, strip_samples)
        im[:2] = (0.0, 1.0)
        for zr, zi in zip(re, im):
            ratio = max(ratio, abs(kms_function(space, x, y, complex(zr, zi))) / bound)
    return KMSReport(float(t), float(lower), float(upper), float(ratio), int(strip_samples), float(tol))


# boundedness ----------------------------------------------------------------

@dataclass(frozen=True)
class BoundednessReport:
    K: float
    op_norm: float
    right_norm: float
    right_norm_adj: float


def right_action_norm(space: WStarSpace, x: BlockMatrix) -> float:
    """``||a^{-1/2} x a^{1/2}||``: the norm of right multiplication by ``x`` on the GNS space."""
    md = modular_data(space)
    return (md.half_power_inv @ space.check(x) @ md.half_power).op_norm()


def bounded_constant(space: WStarSpace, x: BlockMatrix) -> BoundednessReport:
    op = space.check(x).op_norm()
    r = right_action_norm(space, x)
    ra = right_action_norm(space, x.H)
    return BoundednessReport(max(op, r, ra), op, r, ra)


def in_S1(space: WStarSpace, x: BlockMatrix, tol: float = 1e-10) -> bool:
    return bounded_constant(space, x).K <= 1 + tol


def project_to_S1(space: WStarSpace, x: BlockMatrix) -> BlockMatrix:
    return x / max(1.0, bounded_constant(space, x).K)


def ratio_matrix(space: WStarSpace) -> np.ndarray:
    """``R[i, j] = sqrt(lam_j / lam_i)``, so ``a^{-1/2} m a^{1/2} = m * R`` in eigen coordinates."""
    lam = space.lam
    return np.sqrt(lam[None, :] / lam[:, None])


def k_constant_eigen(space: WStarSpace, m: np.ndarray) -> np.ndarray:
    """K-constant of eigen-coordinate matrices, vectorized over leading axes."""
    R = ratio_matrix(space)
    mh = np.swapaxes(m, -1, -2).conj()
    stack = np.stack([m, m * R, mh * R], axis=-3)
    s = np.linalg.svd(stack, compute_uv=False)
    return s.max(axis=(-1, -2))


# spectral truncation --------------------------------------------------------

def spectral_truncate(space: WStarSpace, x: BlockMatrix, a_bound: float) -> BlockMatrix:
    """Keep only the eigen-coefficients whose modular frequency is at most ``a_bound``."""
    if a_bound < 0:
        raise ValidationError("a_bound must be nonnegative", field="a_bound")
    freq = modular_frequencies(space)
    m = space.to_eigen(x)
    return space.from_eigen(np.where(np.abs(freq) <= a_bound + 1e-12, m, 0.0))
