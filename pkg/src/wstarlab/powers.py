"""Powers states, the modulus test for modular periodicity, type
classification of constant-state tensor sequences and twisted decay."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .algebra import WStarSpace, diagonal_space, tensor_power
from .errors import BadEigs, BadParameter, DimensionCap, RationalLogRatio, ScanTooCoarse

DIM_CAP = 2 ** 12
ROOT_TOL = 1e-9
GAP_RTOL = 1e-4
MAX_DENOMINATOR = 10 ** 6


@dataclass(frozen=True)
class PowersSpec:
    """``variant="lambda"`` uses ``lam``; ``variant="infinity"`` uses ``lam`` and ``mu``."""

    variant: str = "lambda"
    lam: float = 0.5
    mu: Optional[float] = None

    def __post_init__(self):
        if self.variant == "lambda":
            if not 0 < self.lam <= 1:
                raise BadParameter(f"lambda must lie in (0, 1], got {self.lam}", field="lambda")
        elif self.variant == "infinity":
            for name, v in (("lambda", self.lam), ("mu", self.mu)):
                if v is None or not 0 < v < 1:
                    raise BadParameter(f"{name} must lie in (0, 1), got {v}", field=name)
            if log_ratio_is_rational(self.lam, self.mu):
                raise RationalLogRatio(
                    f"log({self.lam})/log({self.mu}) is rational to within the test depth", field="mu")
        else:
            raise BadParameter(f"unknown variant {self.variant!r}", field="variant")

    def eigs(self) -> np.ndarray:
        if self.variant == "lambda":
            return np.array([self.lam, 1.0]) / (1 + self.lam)
        return np.array([self.lam, self.mu, 1.0]) / (1 + self.lam + self.mu)


def log_ratio_is_rational(lam: float, mu: float) -> bool:
    """True when ``log lam / log mu`` has a continued-fraction convergent with
    denominator at most 10^6 matching it to 1e-14 relative."""
    r = np.log(lam) / np.log(mu)
    approx = Fraction(r).limit_denominator(MAX_DENOMINATOR)
    return abs(float(approx) - r) <= 1e-14 * max(1.0, abs(r))


def powers_space(lam: float) -> WStarSpace:
    return diagonal_space(PowersSpec("lambda", lam).eigs())


def powers_inf_space(lam: float, mu: float) -> WStarSpace:
    return diagonal_space(PowersSpec("infinity", lam, mu).eigs())


def powers_stage(spec: PowersSpec, n: int, cap: int = DIM_CAP) -> WStarSpace:
    """``n``-fold tensor power of the Powers space."""
    if n < 1:
        raise BadParameter(f"stage must be >= 1, got {n}", field="n")
    d = len(spec.eigs())
    if d ** n > cap:
        raise DimensionCap(f"stage {n} has dimension {d ** n} > cap {cap}", field="n")
    return tensor_power(diagonal_space(spec.eigs()), n)


def _check_eigs(eigs) -> np.ndarray:
    e = np.asarray(eigs, dtype=float).ravel()
    if e.size == 0 or np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise BadEigs("eigenvalues must be positive", field="eigs")
    if abs(e.sum() - 1) > 1e-10:
        raise BadEigs(f"eigenvalues sum to {e.sum()!r}, not 1", field="eigs")
    return e


def tinv_modulus(eigs, t):
    """``|sum_k e_k^{1 + it}|``; vectorized over ``t``."""
    e = _check_eigs(eigs)
    t = np.asarray(t, dtype=float)
    ang = np.mod(np.multiply.outer(t, np.log(e)), 2 * np.pi)
    out = np.abs(np.sum(e * np.exp(1j * ang), axis=-1))
    return float(out) if out.ndim == 0 else out


def lattice_period(lam: float) -> float:
    if not 0 < lam < 1:
        raise BadParameter(f"lambda must lie in (0, 1), got {lam}", field="lambda")
    return 2 * np.pi / abs(np.log(lam))


@dataclass(frozen=True)
class TypeVerdict:
    tag: str
    lam: Optional[float] = None
    evidence: tuple = ()
    resolution: float = 0.0
    reason: str = ""
    gap_rtol: float = GAP_RTOL

    def to_dict(self) -> dict:
        out = {"tag": self.tag}
        if self.lam is not None:
            out["lambda"] = self.lam
        out.update({"evidence": list(self.evidence), "resolution": self.resolution,
                    "gap_rtol": self.gap_rtol})
        if self.reason:
            out["reason"] = self.reason
        return out


def _slope(e, t):
    """Derivative of ``|sum_k e_k^{1+it}|^2`` in ``t``."""
    lg = np.log(e)
    z = e * np.exp(1j * np.mod(t * lg, 2 * np.pi))
    return 2.0 * float(np.real(np.conj(z.sum()) * (1j * lg * z).sum()))


def _roots(e, t_max, steps):
    t = np.linspace(0.0, t_max, steps + 1)
    m = tinv_modulus(e, t)
    roots = []
    for i in range(len(t)):
        left = m[i - 1] if i > 0 else -np.inf
        right = m[i + 1] if i + 1 < len(t) else -np.inf
        if m[i] < 1 - 1e-3 or m[i] < left or m[i] < right:
            continue
        if i == 0:
            cand = 0.0
        else:
            lo = t[i - 1]
            hi = t[i + 1] if i + 1 < len(t) else t[i] + (t[i] - t[i - 1])
            if _slope(e, lo) > 0 > _slope(e, hi):
                # the derivative has a simple zero; polishing the value itself would stall at sqrt(eps)
                cand = float(brentq(lambda s: _slope(e, s), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
                if cand > t_max:
                    continue
            else:
                hi = min(hi, t_max)
                res = minimize_scalar(lambda s: -tinv_modulus(e, s), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-13})
                cand = float(res.x)
        if tinv_modulus(e, cand) >= 1 - ROOT_TOL and (not roots or cand - roots[-1] > 1e-6):
            roots.append(cand)
    return roots, m


def classify_type(eigs, t_max: float = 30.0, steps: int = 30000, constant: bool = True) -> TypeVerdict:
    """Type of the ultraproduct of a constant-state tensor sequence, read off
    from where the modulus ``|sum e_k^{1+it}|`` returns to 1."""
    e = _check_eigs(eigs)
    res = t_max / steps if steps > 0 else np.inf
    if not t_max > 0 or res > 1e-3:
        raise ScanTooCoarse(f"grid spacing {res:.3g} exceeds 1e-3; increase steps", field="steps")
    if not constant:
        return TypeVerdict("undetermined", resolution=res, reason="ultrafilter-dependent")
    roots, m = _roots(e, t_max, steps)
    if np.all(m >= 1 - ROOT_TOL):
        return TypeVerdict("tracial_II1", evidence=(0.0, float(t_max)), resolution=res)
    if roots == [0.0]:
        return TypeVerdict("III_1", evidence=(0.0,), resolution=res)
    if len(roots) >= 3:
        gaps = np.diff(roots)
        g = float(np.mean(gaps))
        if np.all(np.abs(gaps - g) <= GAP_RTOL * g):
            # least-squares slope through k -> root_k sharpens the period
            k = np.arange(len(roots))
            g = float(np.dot(k, roots) / np.dot(k, k))
            return TypeVerdict("III_lambda", lam=float(np.exp(-2 * np.pi / g)),
                               evidence=tuple(roots), resolution=res)
        return TypeVerdict("undetermined", evidence=tuple(roots), resolution=res,
                           reason="roots are not evenly spaced")
    return TypeVerdict("undetermined", evidence=tuple(roots), resolution=res,
                       reason="fewer than three roots in the scan window")


# twisted decay ----------------------------------------------------------------

@dataclass(frozen=True)
class DecayCurve:
    """Stage-wise data for ``y_n = (a^{it})^{(x)n} diag(c,...,c)^{(x)n}``.

    ``values``: ``|phi^{(x)n}(y_n)| = (c m(t))^n`` from the per-factor product;
    ``direct``: the same from explicit stage matrices (``nan`` past the cap);
    ``sharp_norms``: ``||y_n||^#``, which equals ``c^n`` for every ``t``.
    """

    stages: tuple
    values: tuple
    direct: tuple
    sharp_norms: tuple
    factor: float
    modulus: float
    tail_stages: tuple
    tail_values: tuple
    threshold: float
    decays_to_zero: bool


def twisted_decay(spec: PowersSpec, c: float, t: float, stages=range(1, 11), threshold: float = 1e-3,
                  tail_stages=(10 ** 4, 10 ** 5, 10 ** 6), direct_cap: int = 2 ** 10) -> DecayCurve:
    if not 0 < c < 1:
        raise BadParameter(f"c must lie in (0, 1), got {c}", field="c")
    stages = tuple(int(n) for n in stages)
    if any(n < 1 for n in stages):
        raise BadParameter("stages must be positive", field="stages")
    e = spec.eigs()
    m = tinv_modulus(e, t)
    factor = c * m
    values = tuple(float(factor ** n) for n in stages)
    ph = np.exp(1j * np.mod(t * np.log(e), 2 * np.pi))
    direct, sharp = [], []
    for n in stages:
        if len(e) ** n > direct_cap:
            direct.append(float("nan"))
            sharp.append(float(c ** n))
            continue
        space = powers_stage(spec, n, cap=direct_cap)
        a = space.density.blocks[0]
        u = np.diag(ph)
        for _ in range(n - 1):
            u = np.kron(u, np.diag(ph))
        y = u @ (c ** n * np.eye(len(a)))
        direct.append(float(abs(np.trace(a @ y))))
        s2 = 0.5 * (np.trace(a @ y.conj().T @ y) + np.trace(a @ y @ y.conj().T)).real
        sharp.append(float(np.sqrt(s2)))
    tail = tuple(float(np.exp(n * np.log(factor))) for n in tail_stages)
    return DecayCurve(stages, values, tuple(direct), tuple(sharp), float(factor), float(m),
                      tuple(tail_stages), tail, float(threshold), bool(max(tail) < threshold))
