"""Modulus |sum e_k^(1+it)| on and off the lattice (2 pi / ln lambda) Z, plus the
classifier verdict, for a list of Powers parameters."""

import argparse
import csv
from dataclasses import dataclass

import numpy as np

from wstarlab.powers import PowersSpec, classify_type, lattice_period, tinv_modulus


@dataclass
class Config:
    lambdas: tuple = (0.3, 0.5, 0.8)
    periods: float = 4.0
    points_per_unit: int = 1000
    out: str = ""


def run(cfg: Config):
    rows = []
    for lam in cfg.lambdas:
        e = PowersSpec("lambda", lam).eigs()
        p = lattice_period(lam)
        ks = np.arange(-3, 4)
        on = float(np.max(np.abs(tinv_modulus(e, ks * p) - 1)))
        off = float(np.max(tinv_modulus(e, (ks + 0.5) * p)))
        tmax = cfg.periods * p
        v = classify_type(e, t_max=tmax, steps=int(tmax * cfg.points_per_unit) + 1)
        rows.append((lam, p, on, off, v.tag, v.lam, len(v.evidence)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", type=lambda s: tuple(float(v) for v in s.split(",")), default=Config.lambdas)
    ap.add_argument("--periods", type=float, default=Config.periods)
    ap.add_argument("--out", default="")
    a = ap.parse_args()
    cfg = Config(lambdas=a.lambdas, periods=a.periods, out=a.out)
    rows = run(cfg)
    print(f"{'lambda':>7} {'period':>10} {'|m-1| on':>10} {'max m off':>10}  verdict")
    for lam, p, on, off, tag, lam2, nroots in rows:
        extra = f" lambda'={lam2:.12f}" if lam2 is not None else ""
        print(f"{lam:7.3f} {p:10.5f} {on:10.1e} {off:10.6f}  {tag}{extra} ({nroots} roots)")
    inf = classify_type(PowersSpec("infinity", 0.5, 1 / 3).eigs(), t_max=60, steps=60000)
    print(f"a_inf(1/2, 1/3): {inf.tag}, roots {inf.evidence}")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "period", "lattice_error", "half_lattice_max", "tag", "lambda_est"])
            w.writerows([r[:6] for r in rows])


if __name__ == "__main__":
    main()
