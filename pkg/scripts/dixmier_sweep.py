"""Commutator witnesses against the distance to scalars.

For random states and elements on M_n, compares ``||x - phi(x)1||^#`` with the
best ``||[x, y]||^#`` found over the unit ball S1.  A second pass evaluates
the element ``2 e_11 - 1`` (eigenbasis of the density), which is where the gap
opens for states with one dominant eigenvalue.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from wstarlab.algebra import random_faithful_space, sample
from wstarlab.logic import OptConfig, beta_lower, xi


@dataclass
class Config:
    dims: tuple = (2, 3, 4)
    states: int = 10
    elements: int = 5
    budget: int = 2000
    tol: float = 0.05
    seed: int = 0


def sweep(cfg: Config):
    out = []
    for n in cfg.dims:
        for s in range(cfg.states):
            sp = random_faithful_space([n], seed=cfg.seed + s)
            skew = float(sp.lam.max())
            for k in range(cfg.elements):
                x = sample(sp, "element", seed=[cfg.seed, s, k])
                b = beta_lower(sp, x, OptConfig(sample_budget=cfg.budget, seed=k)).value
                out.append((n, s, "random", skew, xi(sp, x), b))
            d = np.diag([1.0] + [-1.0] * (n - 1)).astype(complex)
            x = sp.from_eigen(d)
            b = beta_lower(sp, x, OptConfig(sample_budget=cfg.budget)).value
            out.append((n, s, "2e11-1", skew, xi(sp, x), b))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--states", type=int, default=Config.states)
    ap.add_argument("--elements", type=int, default=Config.elements)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    cfg = Config(states=a.states, elements=a.elements, seed=a.seed)
    rows = sweep(cfg)
    print(f"{'n':>2} {'kind':>7} {'count':>6} {'max xi-beta':>12} {'over tol':>9}")
    for n in cfg.dims:
        for kind in ("random", "2e11-1"):
            gaps = [r[4] - r[5] for r in rows if r[0] == n and r[2] == kind]
            print(f"{n:2d} {kind:>7} {len(gaps):6d} {max(gaps):12.4f} {sum(g > cfg.tol for g in gaps):9d}")
    worst = max(rows, key=lambda r: r[4] - r[5])
    print(f"largest gap: n={worst[0]} state {worst[1]} ({worst[2]}), max eigenvalue {worst[3]:.3f}, "
          f"xi {worst[4]:.4f}, beta {worst[5]:.4f}")


if __name__ == "__main__":
    main()
