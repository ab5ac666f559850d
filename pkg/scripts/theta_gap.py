"""Fullness sentence on M_n.

Prints the search estimate of ``inf_x sup_p max(0, min(||p||^#, ||1-p||^#) -
||[x, p]||^#)`` next to a dense sweep for M_2 (tracial), where the inner
sup at the scaled Jordan block is ``sqrt(1/2) - 1/2``: every rank-one ``p``
has ``||[e_12, p]||^# >= 1/2``.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from wstarlab.algebra import diagonal_space, tracial_space
from wstarlab.logic import OptConfig, herrero_szarek_witness, min_commutator_projection, theta_estimate


@dataclass
class Config:
    budget: int = 10 ** 4
    sweep: int = 721


def rank_one_sweep(x, m):
    th, ph = np.meshgrid(np.linspace(0, np.pi, m), np.linspace(0, 2 * np.pi, m // 4 + 1))
    v = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], -1)
    p = v[..., :, None] * v[..., None, :].conj()
    c = x @ p - p @ x
    # tracial M_2: ||c||^# = ||c||_F / sqrt(2)
    return float(np.max(np.sqrt(0.5) - np.linalg.norm(c, axis=(-2, -1)) / np.sqrt(2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=int, default=Config.budget)
    a = ap.parse_args()
    cfg = Config(budget=a.budget)
    x = herrero_szarek_witness(2).blocks[0]
    print(f"M_2 tracial, x = e_12: dense sweep inner sup {rank_one_sweep(x, cfg.sweep):.6f}, "
          f"closed form {np.sqrt(0.5) - 0.5:.6f}")
    spaces = [("M_2 tracial", tracial_space(2)), ("M_3 tracial", tracial_space(3)),
              ("M_3 diag(1/2,1/3,1/6)", diagonal_space([1 / 2, 1 / 3, 1 / 6])), ("M_4 tracial", tracial_space(4))]
    for name, sp in spaces:
        est = theta_estimate(sp, OptConfig(sample_budget=cfg.budget))
        print(f"{name:>24}: theta estimate {est.value:.6f}")
    for n in (2, 3, 4):
        xn = herrero_szarek_witness(n).blocks[0]
        mins = [min_commutator_projection(xn, k, starts=2000).min() for k in range(1, n)]
        print(f"J_{n}: smallest ||[J, p]||_F over located minima by rank {np.round(mins, 4).tolist()}")


if __name__ == "__main__":
    main()
