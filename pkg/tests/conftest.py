import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from wstarlab.algebra import BlockMatrix, random_faithful_space

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit(n, i, j):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1
    return m


def bm(*blocks):
    return BlockMatrix([np.asarray(b, dtype=complex) for b in blocks])


seeds = st.integers(min_value=0, max_value=2 ** 31 - 1)
block_dims = st.lists(st.integers(1, 4), min_size=1, max_size=3).map(tuple)


@st.composite
def spaces(draw, dims=block_dims):
    d = draw(dims)
    return random_faithful_space(d, seed=draw(seeds), floor=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_ast(rng, depth=6, scope=()):
    """Seeded well-sorted closed real formula of depth at most ``depth``."""
    from wstarlab.dsl import binder, const, one, op, var

    def num():
        r = rng.random()
        if r < 0.4:
            return float(rng.integers(-20, 21))
        if r < 0.8:
            return float(rng.normal() * 10.0 ** rng.integers(-6, 6))
        return float(rng.random())

    def term(d, sc):
        if d <= 0 or rng.random() < 0.3:
            return var(sc[rng.integers(len(sc))]) if sc and rng.random() < 0.7 else one()
        k = rng.integers(5)
        if k == 0:
            return op("tscale", term(d - 1, sc), value=num())
        if k == 1:
            return op(["tadd", "tsub", "tmul", "comm"][rng.integers(4)], term(d - 1, sc), term(d - 1, sc))
        if k == 2:
            return op("adj", term(d - 1, sc))
        if k == 3:
            return op("sigma", term(d - 1, sc), value=num())
        return one()

    def real(d, sc):
        if d <= 0 or rng.random() < 0.15:
            if rng.random() < 0.3:
                return const(num())
            return op(["sharp", "re_state", "im_state"][rng.integers(3)], term(max(d - 1, 0), sc))
        k = rng.integers(6)
        if k == 0:
            return op(["abs", "sqrt"][rng.integers(2)], real(d - 1, sc))
        if k == 1:
            return op(["add", "sub", "mul"][rng.integers(3)], real(d - 1, sc), real(d - 1, sc))
        if k == 2:
            return op(["max", "min"][rng.integers(2)], *[real(d - 1, sc) for _ in range(rng.integers(2, 4))])
        if k == 3:
            return op("scale", real(d - 1, sc), value=num())
        fresh = [n for n in ("x", "y", "p", "q") if n not in sc]
        if fresh:
            name = fresh[rng.integers(len(fresh))]
            return binder(["sup", "inf"][rng.integers(2)], name, ["S1", "Proj"][rng.integers(2)],
                          real(d - 1, sc + (name,)))
        return op("sharp", term(d - 1, sc))

    return real(depth, tuple(scope))
