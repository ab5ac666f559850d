"""Stage values of ``(a^{it})^{(x)n} diag(c, c)^{(x)n}`` on Powers towers.

``|phi(y_n)|`` shrinks like ``(c m(t))^n`` while ``||y_n||^#`` is ``c^n`` for
every ``t``; both columns are printed, together with the decay verdict.
"""

import argparse
import csv
from dataclasses import dataclass

from wstarlab.powers import PowersSpec, lattice_period, twisted_decay


@dataclass
class Config:
    lam: float = 0.5
    cs: tuple = (0.3, 0.6, 0.9, 0.99, 0.999)
    stages: int = 10
    out: str = ""


def table(cfg: Config):
    spec = PowersSpec("lambda", cfg.lam)
    p = lattice_period(cfg.lam)
    ts = (0.0, 1.0, p / 2, p)
    rows = []
    for c in cfg.cs:
        for t in ts:
            curve = twisted_decay(spec, c, t, stages=range(1, cfg.stages + 1))
            rows.append((c, t, curve.modulus, curve.factor, curve.values[-1], curve.sharp_norms[-1],
                         curve.decays_to_zero))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lam", type=float, default=Config.lam)
    ap.add_argument("--stages", type=int, default=Config.stages)
    ap.add_argument("--out", default="")
    a = ap.parse_args()
    cfg = Config(lam=a.lam, stages=a.stages, out=a.out)
    rows = table(cfg)
    n = cfg.stages
    print(f"{'c':>6} {'t':>8} {'m(t)':>9} {'c m(t)':>9} {f'|phi(y_{n})|':>12} {f'sharp(y_{n})':>12}  decays")
    for c, t, m, f, v, s, d in rows:
        print(f"{c:6.3f} {t:8.4f} {m:9.6f} {f:9.6f} {v:12.4e} {s:12.4e}  {d}")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["c", "t", "modulus", "factor", "phi_value", "sharp_norm", "decays"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
