"""Numerical evaluation of formulas: batched interpretation plus binder search.

Everything runs in eigen coordinates of the density, where
``||T||^#^2 = 1/2 sum |T_ij|^2 (lam_i + lam_j)`` and ``phi(T) = sum lam_i T_ii``.

A binder is searched by screening a candidate set (a fixed catalog,
candidates derived from the enclosing variables, seeded random samples),
refining the best few by local ascent and keeping the best value seen.
Inner binders met while screening or refining are resolved against a pool
of earlier witnesses (the envelope approximation); the final value of each
refined candidate is computed with a genuine nested search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import dsl
from .algebra import WStarSpace
from .errors import UnboundVariable, ValidationError
from .modular import k_constant_eigen, phases, ratio_matrix

SMOOTH_P = (8, 32, 128)
POOL_EXTRA = 128


@dataclass(frozen=True)
class OptConfig:
    """Search budget.

    ``sample_budget`` random candidates per binder (per projection rank for
    ``Proj``), ``restarts`` of them refined by ``ascent_steps`` iterations.
    """

    sample_budget: int = 2000
    restarts: int = 3
    ascent_steps: int = 60
    step_size: float = 0.5
    tol: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("sample_budget", "restarts", "ascent_steps", "seed"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValidationError(f"{name} must be an integer", field=name)
        for name in ("sample_budget", "restarts", "ascent_steps"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive", field=name)
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative", field="seed")
        if not self.step_size > 0:
            raise ValidationError("step_size must be positive", field="step_size")
        if not self.tol > 0:
            raise ValidationError("tol must be positive", field="tol")


CERTIFIED = "certified_lower"
HEURISTIC = "heuristic_residual"


@dataclass(frozen=True, eq=False)
class SentenceEstimate:
    value: float
    kind: str
    witnesses: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.kind == CERTIFIED


# geometry ---------------------------------------------------------------------

class _Geometry:
    def __init__(self, space: WStarSpace):
        self.space = space
        self.lam = np.asarray(space.lam)
        self.N = space.total_dim
        self.mask = np.asarray(space.mask)
        self.R = ratio_matrix(space)
        self.L = self.lam[:, None] + self.lam[None, :]
        self.eye = np.eye(self.N, dtype=complex)
        self.blocks = list(zip(space.offsets, space.dims))
        self.rows, self.cols = np.nonzero(self.mask)
        self._phase = {}

    def phi_matrix(self, t):
        if t not in self._phase:
            ph = phases(self.space, t)
            self._phase[t] = ph[:, None] * ph.conj()[None, :]
        return self._phase[t]

    def K(self, m):
        return k_constant_eigen(self.space, m)

    def to_s1(self, m):
        k = self.K(m)
        return m / np.maximum(1.0, k)[..., None, None]

    def block_ranks(self, p):
        return tuple(int(round(np.trace(p[..., o:o + n, o:o + n]).real)) for o, n in self.blocks)

    def smooth_k(self, z, p):
        """Schatten-p smoothing of ``K`` (an upper bound for it) and its gradient."""
        stack = np.stack([z, z * self.R, z.conj().T * self.R])
        U, S, Vh = np.linalg.svd(stack)
        smax = S.max()
        if smax == 0:
            return 0.0, np.zeros_like(z)
        Sn = S / smax
        tot = np.sum(Sn ** p)
        W = (U * (Sn ** (p - 1))[:, None, :]) @ Vh
        grad = tot ** (1 / p - 1) * (W[0] + W[1] * self.R + (W[2] * self.R).conj().T)
        return smax * tot ** (1 / p), grad


def _adj(m):
    return np.swapaxes(m, -1, -2).conj()


def _diag(m):
    return np.diagonal(m, axis1=-2, axis2=-1)


# catalogs -----------------------------------------------------------------------

def _unit(N, i, j):
    m = np.zeros((N, N), dtype=complex)
    m[i, j] = 1.0
    return m


def s1_catalog(g: _Geometry) -> np.ndarray:
    """Deterministic S1 candidates: central elements, matrix units, sign and
    clock unitaries, shifts and the Jordan block in the standard basis."""
    N = g.N
    items = [g.eye.copy(), np.zeros((N, N), dtype=complex)]
    if len(g.blocks) > 1:
        for o, n in g.blocks:
            p = np.zeros((N, N), dtype=complex)
            p[o:o + n, o:o + n] = np.eye(n)
            items += [p, 2 * p - g.eye]
    for b, (o, n) in enumerate(g.blocks):
        idx = range(o, o + n)
        for i in idx:
            for j in idx:
                items.append(_unit(N, i, j))
                if i < j:
                    items.append(_unit(N, i, j) + _unit(N, j, i))
                    items.append(1j * (_unit(N, i, j) - _unit(N, j, i)))
        if n < 2:
            continue
        for k in range(1, n):
            d = np.ones(N, dtype=complex)
            d[o + k:o + n] = -1
            items.append(np.diag(d))
        d = np.ones(N, dtype=complex)
        d[o:o + n] = np.exp(2j * np.pi * np.arange(n) / n)
        items.append(np.diag(d))
        shift = np.zeros((N, N), dtype=complex)
        shift[o:o + n - 1, o + 1:o + n] = np.eye(n - 1)
        items += [shift, shift.T.copy(), shift + shift.T]
        cyc = shift.copy()
        cyc[o + n - 1, o] = 1.0
        items.append(cyc)
        lam = g.lam[o:o + n]
        weighted = np.zeros((N, N), dtype=complex)
        weighted[o:o + n - 1, o + 1:o + n] = np.diag(np.sqrt(np.minimum(lam[:-1], lam[1:]) / np.maximum(lam[:-1], lam[1:])))
        items.append(weighted)
        U = g.space.eigvecs[b]
        jordan = np.diag(np.ones(n - 1), 1)
        std = np.zeros((N, N), dtype=complex)
        std[o:o + n, o:o + n] = U.conj().T @ jordan @ U
        items += [std, std.conj().T, std + std.conj().T]
    return g.to_s1(np.array(items))


def rank_tuples(g: _Geometry, cap: int = 64):
    """Non-central rank patterns of projections, one entry per block."""
    dims = [n for _, n in g.blocks]
    full = [t for t in itertools.product(*(range(n + 1) for n in dims))
            if any(0 < r < n for r, n in zip(t, dims))]
    if len(full) <= cap:
        return full
    out = []
    for k, n in enumerate(dims):
        for r in range(1, n):
            t = [0] * len(dims)
            t[k] = r
            out.append(tuple(t))
    return out


def proj_catalog(g: _Geometry) -> np.ndarray:
    N = g.N
    items = []
    m = len(g.blocks)
    subsets = itertools.product((0, 1), repeat=m) if m <= 8 else \
        [tuple(int(i == k) for i in range(m)) for k in range(m)] + [(0,) * m, (1,) * m]
    for s in subsets:
        d = np.zeros(N)
        for bit, (o, n) in zip(s, g.blocks):
            d[o:o + n] = bit
        items.append(np.diag(d).astype(complex))
    for o, n in g.blocks:
        for r in range(1, n):
            for sl in (slice(o, o + r), slice(o + n - r, o + n)):
                d = np.zeros(N)
                d[sl] = 1
                items.append(np.diag(d).astype(complex))
        if n > 2:
            for i in range(o, o + n):
                d = np.zeros(N)
                d[i] = 1
                items.append(np.diag(d).astype(complex))
                d2 = np.zeros(N)
                d2[o:o + n] = 1
                d2[i] = 0
                items.append(np.diag(d2).astype(complex))
    return np.array(items)


def _frames_to_proj(g, frames, B, ranks):
    out = np.zeros((B, g.N, g.N), dtype=complex)
    for (o, n), r, Q in zip(g.blocks, ranks, frames):
        if Q is None:
            if r == n:
                out[:, o:o + n, o:o + n] = np.eye(n)
            continue
        out[:, o:o + n, o:o + n] = Q @ _adj(Q)
    return out


def sample_proj(g: _Geometry, rng, B: int, ranks) -> np.ndarray:
    """``B`` Haar-random projections with the given per-block ranks."""
    frames = []
    for (o, n), r in zip(g.blocks, ranks):
        if 0 < r < n:
            z = rng.standard_normal((B, 2, n, r))
            Q, _ = np.linalg.qr(z[:, 0] + 1j * z[:, 1])
            frames.append(Q)
        else:
            frames.append(None)
    return _frames_to_proj(g, frames, B, ranks)


def sample_s1(g: _Geometry, rng, B: int) -> np.ndarray:
    z = rng.standard_normal((B, 2, g.N, g.N))
    return g.to_s1((z[:, 0] + 1j * z[:, 1]) * g.mask)


# the engine -----------------------------------------------------------------------

class Engine:
    """Evaluates formulas on one space under one configuration."""

    def __init__(self, space: WStarSpace, cfg: OptConfig):
        self.space = space
        self.cfg = cfg
        self.g = _Geometry(space)
        self.ids = {}
        self.pools = {}
        self.calls = {}
        self.last = {}
        self.trace = {}
        self._catalog = {}
        self._choice = {}

    # bookkeeping
    def catalog(self, domain):
        if domain not in self._catalog:
            self._catalog[domain] = s1_catalog(self.g) if domain == "S1" else proj_catalog(self.g)
        return self._catalog[domain]

    def register(self, root):
        for b in dsl.binders(root):
            if id(b) in self.ids:
                continue
            idx = len(self.ids)
            self.ids[id(b)] = idx
            self.calls[idx] = 0
            base = self.catalog(b.domain)
            if b.domain == "Proj":
                rng = np.random.default_rng([self.cfg.seed, idx, 0])
                extra = [sample_proj(self.g, rng, max(1, self.cfg.restarts), r) for r in rank_tuples(self.g)]
                base = np.concatenate([base] + extra) if extra else base
            self.pools[idx] = (base, [])

    def pool(self, idx):
        base, extra = self.pools[idx]
        return np.concatenate([base, np.array(extra[-POOL_EXTRA:])]) if extra else base

    def remember(self, idx, w):
        self.pools[idx][1].append(np.array(w))

    # derived candidates
    def derived(self, domain, env):
        vals = list(env.values())
        if not vals:
            return None
        out = []
        for v in vals:
            vh = _adj(v)
            if domain == "S1":
                out += [v, vh, v + vh, 1j * (v - vh), v @ vh - vh @ v]
            else:
                for h in ((v + vh) / 2, (v - vh) / 2j):
                    out += self._spectral(h)
        if not out:
            return None
        out = np.stack(np.broadcast_arrays(*out), axis=-3)
        return self.g.to_s1(out) if domain == "S1" else out

    def _spectral(self, h):
        res = []
        g = self.g
        for o, n in g.blocks:
            if n < 2:
                continue
            _, V = np.linalg.eigh(h[..., o:o + n, o:o + n])
            for r in range(1, n):
                Q = V[..., :, n - r:]
                p = np.zeros(h.shape, dtype=complex)
                p[..., o:o + n, o:o + n] = Q @ _adj(Q)
                res.append(p)
        return res

    # batched forward evaluation
    def ev(self, node, env, r, full=False):
        k, ch = node.kind, node.children
        g = self.g
        if k == "var":
            try:
                return env[node.name]
            except KeyError:
                raise UnboundVariable(f"variable {node.name!r} is not bound", field=node.name)
        if k == "one":
            return g.eye
        if k == "tscale":
            return node.value * self.ev(ch[0], env, r, full)
        if k in ("tadd", "tsub", "tmul", "comm"):
            a = self.ev(ch[0], env, r, full)
            b = self.ev(ch[1], env, r, full)
            if k == "tadd":
                return a + b
            if k == "tsub":
                return a - b
            if k == "tmul":
                return a @ b
            return a @ b - b @ a
        if k == "adj":
            return _adj(self.ev(ch[0], env, r, full))
        if k == "sigma":
            return self.ev(ch[0], env, r, full) * g.phi_matrix(node.value)
        if k == "sharp":
            t = self.ev(ch[0], env, r, full)
            return np.sqrt(0.5 * np.sum((t.real ** 2 + t.imag ** 2) * g.L, axis=(-2, -1)))
        if k == "re_state":
            return (_diag(self.ev(ch[0], env, r, full)) @ g.lam).real
        if k == "im_state":
            return (_diag(self.ev(ch[0], env, r, full)) @ g.lam).imag
        if k == "abs":
            return np.abs(self.ev(ch[0], env, r, full))
        if k == "sqrt":
            return np.sqrt(np.maximum(self.ev(ch[0], env, r, full), 0.0))
        if k in ("max", "min"):
            f = np.maximum if k == "max" else np.minimum
            out = self.ev(ch[0], env, r, full)
            for c in ch[1:]:
                out = f(out, self.ev(c, env, r, full))
            return out
        if k in ("add", "sub", "mul"):
            a = self.ev(ch[0], env, r, full)
            b = self.ev(ch[1], env, r, full)
            return a + b if k == "add" else a - b if k == "sub" else a * b
        if k == "scale":
            return node.value * self.ev(ch[0], env, r, full)
        if k == "const":
            return np.float64(node.value)
        if k in dsl.BINDERS:
            return self._binder(node, env, r, full)
        raise ValidationError(f"cannot evaluate node kind {k!r}")

    def _binder(self, node, env, r, full):
        if full and all(np.prod(v.shape[:-2]) == 1 for v in env.values()):
            point = {n: v.reshape(v.shape[-2:]) for n, v in env.items()}
            val, _, _ = self.search(node, point)
            return np.full((1,) * r, val)
        idx = self.ids[id(node)]
        bshape = np.broadcast_shapes(*(v.shape[:-2] for v in env.values())) if env else (1,) * r
        pool = self.pool(idx)
        parts = [np.broadcast_to(pool, bshape + pool.shape)]
        der = self.derived(node.domain, env)
        if der is not None:
            parts.append(np.broadcast_to(der, bshape + der.shape[-3:]))
        cands = np.concatenate(parts, axis=-3)
        inner = {n: v[..., None, :, :] for n, v in env.items()}
        inner[node.name] = cands
        val = self._reduce_ready(self.ev(node.children[0], inner, r + 1), r + 1, bshape + (cands.shape[-3],))
        return val.max(axis=-1) if node.kind == "sup" else val.min(axis=-1)

    @staticmethod
    def _reduce_ready(val, ndim, shape):
        val = np.asarray(val, dtype=float)
        val = val.reshape((1,) * (ndim - val.ndim) + val.shape)
        return np.broadcast_to(val, np.broadcast_shapes(val.shape, shape))

    # value and gradient at a single point (pool mode for inner binders)
    def vg(self, node, env):
        k, ch = node.kind, node.children
        g = self.g
        if k == "var":
            name = node.name
            if name not in env:
                raise UnboundVariable(f"variable {name!r} is not bound", field=name)

            def back(gr, acc):
                acc[name] = acc[name] + gr if name in acc else gr
            return env[name], back
        if k in ("one", "const"):
            return (g.eye if k == "one" else float(node.value)), (lambda gr, acc: None)
        if k in ("tscale", "scale"):
            a, ba = self.vg(ch[0], env)
            s = node.value
            return s * a, (lambda gr, acc: ba(s * gr, acc))
        if k in ("tadd", "tsub", "add", "sub"):
            (a, ba), (b, bb) = self.vg(ch[0], env), self.vg(ch[1], env)
            sgn = 1.0 if k in ("tadd", "add") else -1.0

            def back(gr, acc):
                ba(gr, acc)
                bb(sgn * gr, acc)
            return a + sgn * b, back
        if k == "tmul":
            (a, ba), (b, bb) = self.vg(ch[0], env), self.vg(ch[1], env)

            def back(gr, acc):
                ba(gr @ _adj(b), acc)
                bb(_adj(a) @ gr, acc)
            return a @ b, back
        if k == "comm":
            (a, ba), (b, bb) = self.vg(ch[0], env), self.vg(ch[1], env)

            def back(gr, acc):
                ah, bh = _adj(a), _adj(b)
                ba(gr @ bh - bh @ gr, acc)
                bb(ah @ gr - gr @ ah, acc)
            return a @ b - b @ a, back
        if k == "adj":
            a, ba = self.vg(ch[0], env)
            return _adj(a), (lambda gr, acc: ba(_adj(gr), acc))
        if k == "sigma":
            a, ba = self.vg(ch[0], env)
            P = g.phi_matrix(node.value)
            return a * P, (lambda gr, acc: ba(gr * P.conj(), acc))
        if k == "sharp":
            t, bt = self.vg(ch[0], env)
            s = float(np.sqrt(0.5 * np.sum((t.real ** 2 + t.imag ** 2) * g.L)))

            def back(gr, acc):
                if s > 0:
                    bt(gr * t * g.L / (2 * s), acc)
            return s, back
        if k in ("re_state", "im_state"):
            t, bt = self.vg(ch[0], env)
            z = complex(_diag(t) @ g.lam)
            D = np.diag(g.lam).astype(complex) * (1.0 if k == "re_state" else 1j)
            return (z.real if k == "re_state" else z.imag), (lambda gr, acc: bt(gr * D, acc))
        if k == "abs":
            a, ba = self.vg(ch[0], env)
            return abs(a), (lambda gr, acc: ba(gr * np.sign(a), acc))
        if k == "sqrt":
            a, ba = self.vg(ch[0], env)
            v = float(np.sqrt(max(a, 0.0)))

            def back(gr, acc):
                if a > 0:
                    ba(gr / (2 * v), acc)
            return v, back
        if k in ("max", "min"):
            parts = [self.vg(c, env) for c in ch]
            vals = [p[0] for p in parts]
            i = int(np.argmax(vals) if k == "max" else np.argmin(vals))
            return vals[i], parts[i][1]
        if k == "mul":
            (a, ba), (b, bb) = self.vg(ch[0], env), self.vg(ch[1], env)

            def back(gr, acc):
                ba(gr * b, acc)
                bb(gr * a, acc)
            return a * b, back
        if k in dsl.BINDERS:
            idx = self.ids[id(node)]
            cands = self.pool(idx)
            der = self.derived(node.domain, env)
            if der is not None:
                cands = np.concatenate([cands, der])
            inner = {n: v[None] for n, v in env.items()}
            inner[node.name] = cands
            vals = self._reduce_ready(self.ev(ch[0], inner, 1), 1, (len(cands),))
            i = int(np.argmax(vals) if k == "sup" else np.argmin(vals))
            self._choice[idx] = cands[i]
            point = dict(env)
            point[node.name] = cands[i]
            v, bb = self.vg(ch[0], point)
            name = node.name

            def back(gr, acc):
                tmp = {}
                bb(gr, tmp)
                tmp.pop(name, None)
                for n2, gv in tmp.items():
                    acc[n2] = acc[n2] + gv if n2 in acc else gv
            return v, back
        raise ValidationError(f"cannot differentiate node kind {k!r}")

    def value_grad(self, body, env, name):
        v, back = self.vg(body, env)
        acc = {}
        back(1.0, acc)
        gr = acc.get(name)
        return float(v), (np.zeros((self.g.N,) * 2, dtype=complex) if gr is None else gr * self.g.mask)

    # binder search
    def _screen(self, body, env, name, cands):
        n_inner = 1
        for b in dsl.binders(body):
            n_inner *= len(self.pool(self.ids[id(b)])) + 16
        chunk = max(8, int(4e6 // (n_inner * self.g.N ** 2)))
        out = []
        for s in range(0, len(cands), chunk):
            c = cands[s:s + chunk]
            inner = {n: v[None] for n, v in env.items()}
            inner[name] = c
            out.append(self._reduce_ready(self.ev(body, inner, 1), 1, (len(c),)))
        return np.concatenate(out) if out else np.zeros(0)

    def _candidates(self, node, env, rng):
        g, cfg = self.g, self.cfg
        parts = [self.catalog(node.domain)]
        der = self.derived(node.domain, env)
        if der is not None:
            parts.append(der)
        if node.domain == "S1":
            if cfg.sample_budget:
                parts.append(sample_s1(g, rng, cfg.sample_budget))
        else:
            for ranks in rank_tuples(g):
                if cfg.sample_budget:
                    parts.append(sample_proj(g, rng, cfg.sample_budget, ranks))
        return np.concatenate(parts)

    def full_value(self, body, env):
        val = self.ev(body, env, 0, full=True)
        sub = {}
        for b in dsl.binders(body):
            rec = self.last.get(self.ids[id(b)])
            if rec is not None:
                sub[b.name] = rec[1]
        return float(np.asarray(val).reshape(-1)[0]), sub

    def search(self, node, env):
        """Search one binder at a fixed assignment of the enclosing variables."""
        idx = self.ids[id(node)]
        self.calls[idx] += 1
        rng = np.random.default_rng([self.cfg.seed, idx, self.calls[idx]])
        sign = 1.0 if node.kind == "sup" else -1.0
        body, name = node.children[0], node.name
        cands = self._candidates(node, env, rng)
        groups = [self.g.block_ranks(p) for p in cands] if node.domain == "Proj" else [()] * len(cands)
        nested = bool(dsl.binders(body))
        found, trace = [], []
        for rnd in range(2 if nested else 1):
            vals = self._screen(body, env, name, cands)
            order = np.argsort(-sign * vals, kind="stable")
            if not nested:
                i = int(order[0])
                found.append((float(vals[i]), cands[i], {}))
            starts, seen = [], {}
            for i in order:
                key = groups[i]
                if seen.get(key, 0) < self.cfg.restarts:
                    seen[key] = seen.get(key, 0) + 1
                    starts.append(int(i))
            if nested:
                starts = [int(order[0])] + [i for i in starts if i != order[0]]
            for rank, i in enumerate(starts):
                w = self.refine(node, env, cands[i], float(vals[i]))
                v, sub = self.full_value(body, {**env, name: w})
                found.append((v, w, sub))
                trace.append({"round": rnd, "start": i, "screened": float(vals[i]), "value": v})
                self.remember(idx, w)
        if nested:
            # inner pools now hold every inner witness found so far, so the
            # pool-mode value at each point is at least as sharp as its first estimate
            found = [self._rescore(body, env, name, w) for _, w, _ in found]
        best = found[0]
        for f in found[1:]:
            if sign * f[0] > sign * best[0]:
                best = f
        self.last[idx] = best
        self.remember(idx, best[1])
        self.trace[idx] = trace
        return best

    # local refinement
    def refine(self, node, env, start, start_val):
        if self.cfg.ascent_steps == 0:
            return start
        if node.domain == "S1":
            return self._refine_s1(node, env, start, start_val)
        return self._refine_proj(node, env, start)

    def _rescore(self, body, env, name, w):
        v = self._point(body, env, name, w)
        sub = {b.name: self._choice[self.ids[id(b)]] for b in dsl.binders(body)}
        return v, w, sub

    def _point(self, body, env, name, w):
        v, _ = self.vg(body, {**env, name: w})
        return float(v)

    def _refine_s1(self, node, env, start, start_val):
        g = self.g
        sign = 1.0 if node.kind == "sup" else -1.0
        body, name = node.children[0], node.name
        rows, cols, m = g.rows, g.cols, len(g.rows)

        def unpack(vec):
            z = np.zeros((g.N, g.N), dtype=complex)
            z[rows, cols] = vec[:m] + 1j * vec[m:]
            return z

        def pack(z):
            return np.concatenate([z[rows, cols].real, z[rows, cols].imag])

        def fg(vec, p):
            z = unpack(vec)
            kp, gk = g.smooth_k(z, p)
            scale = max(1.0, kp)
            v, G = self.value_grad(body, {**env, name: z / scale}, name)
            if kp > 1:
                G = G / kp - (np.real(np.vdot(G, z)) / kp ** 2) * gk
            return -sign * v, -sign * pack(G)

        vec = pack(start)
        if not np.any(vec):
            vec = pack(g.to_s1(g.mask * (1.0 + 0.5j))[()])
        for p in SMOOTH_P:
            res = minimize(fg, vec, args=(p,), jac=True, method="L-BFGS-B",
                           options={"maxiter": self.cfg.ascent_steps})
            vec = res.x
            kp, _ = g.smooth_k(unpack(vec), p)
            if kp > 1:
                vec = vec / kp
        z = unpack(vec)
        options = [z / max(1.0, g.smooth_k(z, SMOOTH_P[-1])[0]), g.to_s1(z)]
        best, best_v = start, sign * start_val
        for w in options:
            v = sign * self._point(body, env, name, w)
            if v > best_v:
                best, best_v = w, v
        return best

    def _refine_proj(self, node, env, start):
        g = self.g
        sign = 1.0 if node.kind == "sup" else -1.0
        body, name = node.children[0], node.name
        frames, fixed = [], start.copy()
        for o, n in g.blocks:
            w, V = np.linalg.eigh(start[o:o + n, o:o + n])
            r = int(np.sum(w > 0.5))
            frames.append(V[:, n - r:] if 0 < r < n else None)
        if all(f is None for f in frames):
            return start

        def build(fr):
            p = fixed.copy()
            for (o, n), Q in zip(g.blocks, fr):
                if Q is not None:
                    p[o:o + n, o:o + n] = Q @ Q.conj().T
            return p

        eta = self.cfg.step_size
        p = build(frames)
        v, G = self.value_grad(body, {**env, name: p}, name)
        for _ in range(self.cfg.ascent_steps):
            Gh = sign * (G + G.conj().T) / 2
            rg = []
            for (o, n), Q in zip(g.blocks, frames):
                if Q is None:
                    rg.append(None)
                    continue
                e = 2 * Gh[o:o + n, o:o + n] @ Q
                rg.append(e - Q @ (Q.conj().T @ e))
            gn2 = sum(float(np.sum(np.abs(x) ** 2)) for x in rg if x is not None)
            if gn2 < 1e-20:
                break
            moved = False
            while eta > 1e-8:
                trial = [None if Q is None else np.linalg.qr(Q + eta * d)[0] for Q, d in zip(frames, rg)]
                pt = build(trial)
                vt, Gt = self.value_grad(body, {**env, name: pt}, name)
                if sign * vt > sign * v + 1e-4 * eta * gn2:
                    frames, p, v, G = trial, pt, vt, Gt
                    eta *= 1.5
                    moved = True
                    break
                eta /= 2
            if not moved:
                break
        return p


def evaluate(ast, space: WStarSpace, cfg: OptConfig = None, env=None, engine: Engine = None) -> SentenceEstimate:
    """Evaluate a closed real formula (or one whose free variables are in ``env``)."""
    cfg = cfg or OptConfig()
    env = env or {}
    dsl.check(ast, free=env.keys())
    eng = engine or Engine(space, cfg)
    eng.register(ast)
    point = {k: space.to_eigen(space.check(v, k)) for k, v in env.items()}
    nested_root = ast.kind in dsl.BINDERS
    if nested_root:
        value, w, sub = eng.search(ast, point)
        wit = {ast.name: w, **sub}
        trace = eng.trace.get(eng.ids[id(ast)], [])
    else:
        value, wit = eng.full_value(ast, point)
        trace = []
    certified = (ast.kind == "sup" and not dsl.binders(ast.children[0])) or not dsl.binders(ast)
    return SentenceEstimate(
        value=float(value),
        kind=CERTIFIED if certified else HEURISTIC,
        witnesses={k: space.from_eigen(v) for k, v in wit.items()},
        diagnostics={"restarts": trace, "binders": len(eng.ids), "seed": cfg.seed},
    )
