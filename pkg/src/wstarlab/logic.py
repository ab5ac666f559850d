"""Sentence-level estimators: xi, beta, the factoriality and fullness
sentences, the modular-invariance sentence ``phi_t`` and helpers.

All searches go through :mod:`wstarlab.search`, so a dedicated estimator
and the same sentence written in the formula language share one schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dsl
from .algebra import BlockMatrix, WStarSpace, central_projections, sharp_norm, state_eval
from .errors import BadDimension, MultiBlockUnsupported, NumericError, ValidationError
from .modular import phases
from .search import CERTIFIED, OptConfig, SentenceEstimate, evaluate

__all__ = [
    "OptConfig", "SentenceEstimate", "CenterWitness", "xi", "beta_lower", "chi_factor_estimate",
    "dixmier_residual", "central_witness", "center_expectation", "phi_t_estimate",
    "herrero_szarek_witness", "theta_estimate", "min_commutator_projection",
]

ZERO_PHASE_TOL = 1e-9


def xi(space: WStarSpace, x: BlockMatrix, variant: str = "centered") -> float:
    """Distance-to-scalars functional.

    ``centered``: ``||x - phi(x) 1||^#``.  ``literal``: ``sqrt(max(0, ||x||^#^2 - Re(phi(x)^2)))``,
    which is larger when ``phi(x)`` is not real.
    """
    f = state_eval(space, x)
    if variant == "centered":
        # direct form avoids cancellation in ||x||^2 - |phi(x)|^2
        return float(sharp_norm(space, x - space.identity() * f))
    if variant == "literal":
        return float(np.sqrt(max(0.0, sharp_norm(space, x) ** 2 - (f * f).real)))
    raise ValidationError(f"unknown xi variant {variant!r}", field="variant")


def beta_lower(space: WStarSpace, x: BlockMatrix, cfg: OptConfig = None) -> SentenceEstimate:
    """Certified lower bound for ``sup_{y in S1} ||[x, y]||^#`` with the maximizing ``y``."""
    return evaluate(dsl.parse(dsl.BETA), space, cfg, env={"x": x})


@dataclass(frozen=True, eq=False)
class CenterWitness:
    projection: BlockMatrix
    xi_value: float
    block: int


def central_witness(space: WStarSpace) -> Optional[CenterWitness]:
    """The block unit with the largest ``xi``; ``None`` on a factor."""
    if space.n_blocks < 2:
        return None
    best = None
    for k, p in enumerate(central_projections(space)):
        v = xi(space, p)
        if best is None or v > best.xi_value:
            best = CenterWitness(p, v, k)
    return best


def center_expectation(space: WStarSpace, x: BlockMatrix) -> BlockMatrix:
    """State-preserving conditional expectation onto the center."""
    space.check(x)
    out = []
    for a, b in zip(space.density.blocks, x.blocks):
        w = np.trace(a).real
        out.append(np.sum(a * b.T) / w * np.eye(len(b)))
    return BlockMatrix(out)


def chi_factor_estimate(space: WStarSpace, cfg: OptConfig = None) -> SentenceEstimate:
    """Factoriality sentence.

    With a nontrivial center the value ``xi(p)`` of the best block unit is
    certified (``beta(p) = 0`` exactly).  On a factor the sentence is searched
    adversarially and the result is a heuristic residual.
    """
    cfg = cfg or OptConfig()
    cw = central_witness(space)
    if cw is not None:
        return SentenceEstimate(
            value=cw.xi_value, kind=CERTIFIED, witnesses={"x": cw.projection},
            diagnostics={"block": cw.block, "xi_literal": xi(space, cw.projection, "literal"),
                         "center_dim": space.n_blocks, "seed": cfg.seed})
    est = evaluate(dsl.library("chi_factor"), space, cfg)
    x = est.witnesses.get("x")
    if x is not None:
        est.diagnostics["xi_literal"] = xi(space, x, "literal")
        est.diagnostics["xi_centered"] = xi(space, x, "centered")
    return est


def dixmier_residual(space: WStarSpace, x: BlockMatrix, cfg: OptConfig = None) -> float:
    """``||x - phi(x) 1||^# - beta_lower(x)``; nonpositive once a good ``y`` is found."""
    if space.n_blocks != 1:
        raise MultiBlockUnsupported("the residual is defined for a single matrix block", field="space")
    return xi(space, x) - beta_lower(space, x, cfg).value


def phi_t_estimate(space: WStarSpace, t: float, cfg: OptConfig = None) -> SentenceEstimate:
    """``sup_{x in S1} ||sigma_t(x) - x||^#``; exactly 0 when ``sigma_t`` is the identity."""
    cfg = cfg or OptConfig()
    ph = phases(space, t)
    gap = np.abs(ph[:, None] * ph.conj()[None, :] - 1)[space.mask]
    if gap.max() <= ZERO_PHASE_TOL:
        return SentenceEstimate(0.0, CERTIFIED, {"x": space.identity()},
                                {"max_phase_gap": float(gap.max()), "seed": cfg.seed})
    est = evaluate(dsl.library("phi_t", t), space, cfg)
    est.diagnostics["max_phase_gap"] = float(gap.max())
    return est


def herrero_szarek_witness(n: int) -> BlockMatrix:
    """Nilpotent Jordan block ``J_n``.

    Its commutant is checked to be ``n``-dimensional (polynomials in ``J_n``),
    whose only idempotents are 0 and 1.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise BadDimension(f"need n >= 2, got {n}", field="n")
    J = np.diag(np.ones(n - 1), 1).astype(complex)
    I = np.eye(n)
    op = np.kron(I, J) - np.kron(J.T, I)
    s = np.linalg.svd(op, compute_uv=False)
    if int(np.sum(s < 1e-9)) != n:
        raise NumericError("commutant of the Jordan block has unexpected dimension")
    return BlockMatrix([J])


def theta_estimate(space: WStarSpace, cfg: OptConfig = None) -> SentenceEstimate:
    """Fullness sentence, searched with a per-rank Grassmannian inner maximization."""
    if space.n_blocks != 1:
        raise MultiBlockUnsupported("the fullness sentence is evaluated on a single matrix block", field="space")
    return evaluate(dsl.library("theta"), space, cfg)


def min_commutator_projection(x: np.ndarray, rank: int, starts: int = 1000, steps: int = 300,
                              seed=0) -> np.ndarray:
    """Local minima of ``||[x, p]||_F`` over rank-``rank`` projections.

    Runs Riemannian gradient descent from ``starts`` Haar-random frames at once
    and returns the final commutator norms.
    """
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if not 0 < rank < n:
        raise ValidationError(f"rank must be in 1..{n - 1}", field="rank")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((starts, 2, n, rank))
    Q, _ = np.linalg.qr(z[:, 0] + 1j * z[:, 1])
    xh = x.conj().T
    eta = 0.25 / max(1.0, np.linalg.norm(x, 2) ** 2)

    def value_grad(Q):
        P = Q @ np.swapaxes(Q, -1, -2).conj()
        C = x @ P - P @ x
        G = xh @ C - C @ xh
        G = G + np.swapaxes(G, -1, -2).conj()
        return np.linalg.norm(C, axis=(-2, -1)), G

    for _ in range(steps):
        _, G = value_grad(Q)
        e = G @ Q
        rg = e - Q @ (np.swapaxes(Q, -1, -2).conj() @ e)
        Q, _ = np.linalg.qr(Q - eta * rg)
    return value_grad(Q)[0]
