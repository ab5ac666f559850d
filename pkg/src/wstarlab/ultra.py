"""Finite-stage proxies for bounded sequences along tensor or direct-sum towers.

A sequence is materialized lazily.  Families of the form ``x_n = s f^{(x)n}``
on the tower ``(M, phi)^{(x)n}`` keep their factor ``f`` and evaluate norms
factorwise, so arbitrarily late stages cost nothing:
``||s f^{(x)n}||^#^2 = |s|^2 (phi(f*f)^n + phi(ff*)^n) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .algebra import (BlockMatrix, WStarSpace, diagonal_space, is_projection, phi_norm, sample, sharp_norm,
                      spectral_projection, tensor_power)
from .errors import BoundViolated, DimensionCap, NotPositive, ProbeNotInIdeal, UnknownFamily, ValidationError
from .logic import OptConfig, beta_lower, center_expectation
from .powers import DIM_CAP, PowersSpec

BOUND_TOL = 1e-12
EAGER_STAGES = 8
FAMILIES = ("constant_element", "tensor_power_diag", "twisted", "twist_unitary", "matrix_unit",
            "random", "block_scalars", "custom")


@dataclass(frozen=True, eq=False)
class StageSequence:
    family: str
    params: dict
    uniform_bound: float
    base: Optional[WStarSpace] = None
    factor: Optional[np.ndarray] = None
    scalar: complex = 1.0
    space_fn: Optional[Callable[[int], WStarSpace]] = None
    element_fn: Optional[Callable[[int, WStarSpace], BlockMatrix]] = None
    cap: int = DIM_CAP

    @property
    def product(self) -> bool:
        return self.factor is not None

    def space(self, n: int) -> WStarSpace:
        if n < 1:
            raise ValidationError("stages start at 1", field="n")
        if self.base is not None:
            if self.base.total_dim ** n > self.cap:
                raise DimensionCap(f"stage {n} exceeds the dimension cap {self.cap}", field="n")
            return tensor_power(self.base, n)
        return self.space_fn(n)

    def op_norm(self, n: int) -> float:
        if self.product:
            return abs(self.scalar) * np.linalg.norm(self.factor, 2) ** n
        return self.element(n).op_norm()

    def element(self, n: int) -> BlockMatrix:
        sp = self.space(n)
        if self.product:
            f = self.factor
            out = np.array([[1.0 + 0j]])
            for _ in range(n):
                out = np.kron(out, f)
            x = BlockMatrix([self.scalar * out])
        else:
            x = sp.check(self.element_fn(n, sp))
        if x.op_norm() > self.uniform_bound + BOUND_TOL:
            raise BoundViolated(f"stage {n} has operator norm {x.op_norm():.6g} > bound {self.uniform_bound}",
                                field="params")
        return x

    def _moments(self, f):
        a = self.base.density.blocks[0]
        fh = f.conj().T
        return np.trace(a @ fh @ f).real, np.trace(a @ f @ fh).real

    def sharp_norm(self, n: int) -> float:
        if self.product:
            self._check_bound(n)
            q1, q2 = self._moments(self.factor)
            return float(abs(self.scalar) * math.sqrt(0.5 * (q1 ** n + q2 ** n)))
        return sharp_norm(self.space(n), self.element(n))

    def product_norm(self, other: "StageSequence", n: int, side: str = "left") -> float:
        """``||x_n z_n||^#`` (``side="left"``) or ``||z_n x_n||^#`` for a probe ``z``."""
        if self.product and other.product and _same_base(self.base, other.base):
            self._check_bound(n)
            f = self.factor @ other.factor if side == "left" else other.factor @ self.factor
            q1, q2 = self._moments(f)
            return float(abs(self.scalar * other.scalar) * math.sqrt(0.5 * (q1 ** n + q2 ** n)))
        x, z = self.element(n), other.element(n)
        return sharp_norm(self.space(n), x @ z if side == "left" else z @ x)

    def _check_bound(self, n):
        if self.op_norm(n) > self.uniform_bound + BOUND_TOL:
            raise BoundViolated(f"stage {n} has operator norm {self.op_norm(n):.6g} > bound {self.uniform_bound}",
                                field="params")


def _same_base(a: WStarSpace, b: WStarSpace) -> bool:
    return a is b or (a.dims == b.dims and a.density.allclose(b.density, atol=0))


def _base_space(space_family) -> WStarSpace:
    if space_family is None:
        space_family = PowersSpec()
    if isinstance(space_family, PowersSpec):
        return diagonal_space(space_family.eigs())
    if isinstance(space_family, WStarSpace):
        if space_family.n_blocks != 1:
            raise ValidationError("tensor towers need a single-block base space", field="space_family")
        return space_family
    return None


def make_sequence(family: str, params: dict = None, space_family=None) -> StageSequence:
    """Build a stage sequence.

    ``space_family`` is a :class:`PowersSpec` or single-block space (tensor
    tower) or a callable ``n -> WStarSpace``.  Families:

    * ``constant_element``: ``value * 1``
    * ``tensor_power_diag``: ``diag(c, ..., c)^{(x)n}``
    * ``twisted``: ``(a^{it})^{(x)n} diag(c, ..., c)^{(x)n}``
    * ``twist_unitary``: ``(a^{it})^{(x)n}``
    * ``matrix_unit``: ``e_{ij}^{(x)n}`` (eigenbasis indices ``i``, ``j``)
    * ``random``: seeded element of norm 1 at each stage
    * ``block_scalars``: ``(+) values[k] 1_k`` on direct sums
    * ``custom``: ``elements`` is a list or a callable ``(n, space) -> BlockMatrix``
    """
    params = dict(params or {})
    if family not in FAMILIES:
        raise UnknownFamily(f"unknown family {family!r}; known: {', '.join(FAMILIES)}", field="family")
    base = _base_space(space_family) if not callable(space_family) or isinstance(space_family, PowersSpec) else None
    space_fn = space_family if base is None and callable(space_family) else None
    if base is None and space_fn is None:
        raise ValidationError("space_family must be a PowersSpec, a single-block space or a callable",
                              field="space_family")
    bound = float(params.get("bound", 1.0))
    kw = dict(family=family, params=params, base=base, space_fn=space_fn)

    def need_base():
        if base is None:
            raise ValidationError(f"family {family} needs a tensor tower", field="space_family")

    if family == "constant_element":
        v = complex(params.get("value", 1.0))
        bound = float(params.get("bound", max(1.0, abs(v))))
        if base is not None:
            return _finish(StageSequence(uniform_bound=bound, factor=np.eye(base.total_dim, dtype=complex),
                                         scalar=v, **kw))
        return _finish(StageSequence(uniform_bound=bound, element_fn=lambda n, sp: sp.identity() * v, **kw))
    if family in ("tensor_power_diag", "twisted", "twist_unitary"):
        need_base()
        d = base.total_dim
        c = float(params.get("c", 1.0))
        if family != "twist_unitary" and not 0 < c <= 1:
            raise ValidationError(f"c must lie in (0, 1], got {c}", field="c")
        f = np.eye(d, dtype=complex) * (1.0 if family == "twist_unitary" else c)
        if family != "tensor_power_diag":
            t = float(params.get("t", 0.0))
            lam, vecs = base.eigvals[0], base.eigvecs[0]
            ph = np.exp(1j * np.mod(t * np.log(lam), 2 * np.pi))
            f = ((vecs * ph) @ vecs.conj().T) @ f
        return _finish(StageSequence(uniform_bound=bound, factor=f, **kw))
    if family == "matrix_unit":
        need_base()
        i, j = int(params.get("i", 0)), int(params.get("j", 0))
        v = base.eigvecs[0]
        f = np.outer(v[:, i], v[:, j].conj())
        return _finish(StageSequence(uniform_bound=bound, factor=f, scalar=complex(params.get("scale", 1.0)), **kw))
    if family == "random":
        seed = int(params.get("seed", 0))
        return _finish(StageSequence(uniform_bound=bound, element_fn=lambda n, sp: sample(sp, "element", seed=[seed, n]),
                                     **kw))
    if family == "block_scalars":
        vals = [complex(v) for v in params.get("values", (1.0, -1.0))]
        bound = float(params.get("bound", max(1.0, max(abs(v) for v in vals))))

        def elem(n, sp):
            if sp.n_blocks != len(vals):
                raise ValidationError(f"stage {n} has {sp.n_blocks} blocks, values give {len(vals)}", field="values")
            return BlockMatrix(v * np.eye(m) for v, m in zip(vals, sp.dims))
        return _finish(StageSequence(uniform_bound=bound, element_fn=elem, **kw))
    # custom
    elements = params.get("elements")
    if elements is None:
        raise ValidationError("custom family needs 'elements'", field="elements")
    if callable(elements):
        fn = elements
    else:
        seq = list(elements)

        def fn(n, sp):
            if n > len(seq):
                raise ValidationError(f"custom list has only {len(seq)} stages", field="elements")
            x = seq[n - 1]
            return x if isinstance(x, BlockMatrix) else BlockMatrix([np.asarray(x, dtype=complex)])
    # the callable is kept on the sequence, not in the JSON-facing params
    return _finish(StageSequence(uniform_bound=bound, element_fn=fn, **{**kw, "params": {
        k: v for k, v in params.items() if k != "elements"}}))


def _finish(seq: StageSequence) -> StageSequence:
    """Check the uniform bound on the first stages that exist."""
    if seq.product:
        if np.linalg.norm(seq.factor, 2) > 1 + BOUND_TOL and abs(seq.scalar) > 0:
            raise BoundViolated("factor norm exceeds 1, so the stages are unbounded", field="params")
        seq._check_bound(1)
        return seq
    for n in range(1, EAGER_STAGES + 1):
        try:
            seq.element(n)
        except (DimensionCap, IndexError):
            break
        except ValidationError as err:
            if isinstance(err, BoundViolated):
                raise
            break
    return seq


# ideal membership ---------------------------------------------------------------

@dataclass(frozen=True)
class MembershipVerdict:
    stages: tuple
    tail_values: tuple
    limsup_estimate: float
    in_ideal: bool
    threshold: float
    proxy: str = "max over the final quartile of computed stages; no ultrafilter is evaluated"


def _stage_list(stages) -> tuple:
    if isinstance(stages, (int, np.integer)):
        if stages < 8:
            raise ValidationError(f"need at least 8 stages, got {stages}", field="stages")
        return tuple(range(1, int(stages) + 1))
    out = tuple(int(n) for n in stages)
    if len(out) < 8:
        raise ValidationError(f"need at least 8 stages, got {len(out)}", field="stages")
    return out


def _verdict(stages, vals, threshold):
    q = max(1, math.ceil(len(vals) / 4))
    lim = float(max(vals[-q:]))
    return MembershipVerdict(stages, tuple(float(v) for v in vals), lim, lim < threshold, float(threshold))


def i_u_check(seq: StageSequence, stages=16, threshold: float = 1e-3) -> MembershipVerdict:
    """Does ``||x_n||^#`` vanish along the computed stages?"""
    st = _stage_list(stages)
    return _verdict(st, [seq.sharp_norm(n) for n in st], threshold)


@dataclass(frozen=True)
class ProbeResult:
    name: str
    left: MembershipVerdict
    right: MembershipVerdict

    @property
    def ok(self) -> bool:
        return self.left.in_ideal and self.right.in_ideal


@dataclass(frozen=True)
class NormalizerReport:
    probes: tuple
    stages: tuple
    threshold: float

    @property
    def normalizes(self) -> bool:
        return all(p.ok for p in self.probes)


def default_probes(seq: StageSequence) -> dict:
    """Ideal probes on the tower of ``seq``: corner matrix units, a shrinking
    diagonal and a twisted shrinking family."""
    if seq.base is None:
        raise ValidationError("default probes need a tensor tower", field="probes")
    d = seq.base.total_dim
    sf = seq.base
    return {
        "e_11": make_sequence("matrix_unit", {"i": 0, "j": 0}, sf),
        f"e_{d}{d}": make_sequence("matrix_unit", {"i": d - 1, "j": d - 1}, sf),
        f"e_1{d}": make_sequence("matrix_unit", {"i": 0, "j": d - 1}, sf),
        "diag_0.5": make_sequence("tensor_power_diag", {"c": 0.5}, sf),
        "twisted_0.5": make_sequence("twisted", {"c": 0.5, "t": 1.0}, sf),
    }


def normalizer_check(seq: StageSequence, probes: dict = None, stages=64, threshold: float = 1e-3) -> NormalizerReport:
    """Probe-relative test of ``x I + I x`` inside the ideal."""
    st = _stage_list(stages)
    probes = default_probes(seq) if probes is None else probes
    out = []
    for name, z in probes.items():
        if not i_u_check(z, st, threshold).in_ideal:
            raise ProbeNotInIdeal(f"probe {name} does not vanish along the stages", field="probes")
        left = _verdict(st, [seq.product_norm(z, n, "left") for n in st], threshold)
        right = _verdict(st, [seq.product_norm(z, n, "right") for n in st], threshold)
        out.append(ProbeResult(name, left, right))
    return NormalizerReport(tuple(out), st, float(threshold))


# projection repair -------------------------------------------------------------

@dataclass(frozen=True)
class RepairResult:
    epsilon: float
    projection: BlockMatrix
    residual: float
    interval: tuple


def repair_projection(space: WStarSpace, y: BlockMatrix, rule: str = "default") -> RepairResult:
    """Round an almost-idempotent positive ``y`` to a projection.

    ``epsilon = ||y - y^2||_phi``.  The default rule keeps the spectrum in
    ``[min(1 - epsilon, 1/2), inf)``; ``rule="literal"`` keeps ``[1 - epsilon, 1]``.
    """
    space.check(y, "y")
    if not y.is_hermitian(1e-10):
        raise NotPositive("y must be Hermitian", field="y")
    lo_eig = min(float(np.linalg.eigvalsh((b + b.conj().T) / 2)[0]) for b in y.blocks)
    if lo_eig < -1e-10:
        raise NotPositive(f"y has eigenvalue {lo_eig:.3e} < 0", field="y")
    eps = phi_norm(space, y - y @ y)
    if rule == "default":
        interval = (min(1 - eps, 0.5), math.inf)
    elif rule == "literal":
        interval = (1 - eps, 1.0)
    else:
        raise ValidationError(f"unknown rule {rule!r}", field="rule")
    p = spectral_projection(y, *interval)
    if not is_projection(p, 1e-10):
        raise ValidationError("spectral projection failed the projection test")
    return RepairResult(eps, p, sharp_norm(space, y - p), interval)


# center along direct-sum stages -------------------------------------------------

def center_dimension(space: WStarSpace, tol: float = 1e-9) -> int:
    """Dimension of the center, from the joint kernel of commutators with two random elements."""
    gens = [sample(space, "element", seed=s).dense() for s in (11, 12)]
    N = space.total_dim
    # coordinates of the algebra: entries inside the block pattern
    rows, cols = np.nonzero(space.mask)
    basis = np.zeros((len(rows), N, N), dtype=complex)
    basis[np.arange(len(rows)), rows, cols] = 1
    cols_ = []
    for g in gens:
        comm = basis @ g - g @ basis
        cols_.append(comm[:, rows, cols].T)
    op = np.vstack(cols_)
    s = np.linalg.svd(op, compute_uv=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return len(rows) - rank


@dataclass(frozen=True)
class CenterReport:
    stages: tuple
    distances: tuple
    betas: tuple
    witnessed: tuple
    center_dims: tuple
    block_counts: tuple
    slack: float

    @property
    def fraction_witnessed(self) -> float:
        return sum(self.witnessed) / len(self.witnessed)


def center_limit_check(seq: StageSequence, stages: Sequence[int] = range(1, 9), cfg: OptConfig = None,
                       slack: float = 0.05) -> CenterReport:
    """Per stage: distance of ``x_n`` to the center, a lower bound for its commutator
    supremum, and the center dimension."""
    cfg = cfg or OptConfig()
    st = tuple(int(n) for n in stages)
    dist, betas, wit, cdims, blocks = [], [], [], [], []
    for n in st:
        sp = seq.space(n)
        x = seq.element(n)
        d = sharp_norm(sp, x - center_expectation(sp, x))
        b = beta_lower(sp, x, cfg).value
        dist.append(float(d))
        betas.append(float(b))
        wit.append(bool(b >= d - slack))
        cdims.append(center_dimension(sp))
        blocks.append(sp.n_blocks)
    return CenterReport(st, tuple(dist), tuple(betas), tuple(wit), tuple(cdims), tuple(blocks), slack)
