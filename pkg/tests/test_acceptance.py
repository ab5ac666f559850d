"""Acceptance criteria 1-10.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion is one test that prints a ``PASS``/``FAIL`` line; run this
file directly to print all ten lines without pytest.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_ast  # noqa: E402
from wstarlab import dsl  # noqa: E402
from wstarlab.algebra import (BlockMatrix, central_projections, commutative_space, complex_power,  # noqa: E402
                              random_faithful_space, sample, sharp_norm, state_eval, tracial_space)
from wstarlab.logic import (OptConfig, beta_lower, chi_factor_estimate, herrero_szarek_witness,  # noqa: E402
                            min_commutator_projection, theta_estimate, xi)
from wstarlab.modular import (gns_embed, kms_function, modular_delta_action, modular_J, right_action_norm,  # noqa: E402
                              sigma_t, tomita_F, tomita_S)
from wstarlab.powers import PowersSpec, classify_type, lattice_period, tinv_modulus, twisted_decay  # noqa: E402
from wstarlab.search import evaluate  # noqa: E402
from wstarlab.ultra import center_dimension, repair_projection  # noqa: E402


def criterion_1():
    """Tomita relations and the two sigma_t routes, 100 spaces."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for s in range(100):
        n = (2, 3, 4, 8, 12)[s % 5]
        sp = random_faithful_space([n], seed=s)
        x = sample(sp, "element", seed=10_000 + s)
        v = gns_embed(sp, x)
        fs = tomita_F(sp, tomita_S(sp, v)).rep - modular_delta_action(sp, v).rep
        j = modular_J(sp, v).rep - modular_delta_action(sp, tomita_S(sp, v), 0.5).rep
        t = rng.uniform(-10, 10)
        sg = sigma_t(sp, x, t) - sigma_t(sp, x, t, "conjugation")
        worst = max(worst, fs.op_norm(), j.op_norm(), sg.op_norm())
    dt = time.perf_counter() - t0
    return worst <= 1e-10 and dt < 10, f"max error {worst:.2e}, {dt:.1f} s"


def criterion_2():
    """KMS boundary identities and strip bound, 100 triples x 1000 strip points."""
    rng = np.random.default_rng(2)
    worst_id, worst_ratio = 0.0, 0.0
    for s in range(100):
        sp = random_faithful_space([int(rng.integers(1, 6))], seed=s, floor=0.02)
        x = sample(sp, "element", seed=s + 1) * rng.uniform(0.5, 2)
        y = sample(sp, "element", seed=s + 2) * rng.uniform(0.5, 2)
        t = rng.uniform(-10, 10)
        sx = complex_power(sp, 1j * t) @ x @ complex_power(sp, -1j * t)
        worst_id = max(worst_id, abs(kms_function(sp, x, y, t) - state_eval(sp, sx @ y)),
                       abs(kms_function(sp, x, y, t + 1j) - state_eval(sp, y @ sx)))
        bound = x.op_norm() * y.op_norm() * np.sum(1 / sp.lam)
        # vectorized strip samples: F(z) = sum_ij lam_i^{1+iz} lam_j^{-iz} X_ij Y_ji in eigen coordinates
        X, Y = sp.to_eigen(x), sp.to_eigen(y)
        z = rng.uniform(-10, 10, 1000) + 1j * rng.uniform(0, 1, 1000)
        z[:2] = (0.0, 1j)
        L = np.log(sp.lam)
        vals = np.einsum("zi,zj,ij,ji->z", np.exp(np.outer(1 + 1j * z, L)), np.exp(np.outer(-1j * z, L)), X, Y)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(vals)) / bound))
    ok = worst_id <= 1e-8 and worst_ratio <= 1 + 1e-12
    return ok, f"max boundary error {worst_id:.2e}, max |F|/B {worst_ratio:.3f}"


def criterion_3():
    """Right-action norm against the explicit N^2 x N^2 operator."""
    worst = 0.0
    for s in range(50):
        n = 1 + s % 6
        sp = random_faithful_space([n], seed=s)
        x = sample(sp, "element", seed=500 + s)
        h = complex_power(sp, 0.5).blocks[0]
        hi = complex_power(sp, -0.5).blocks[0]
        xm = x.blocks[0]
        # columns: images of the orthonormal GNS basis e_ab a^{-1/2}... built explicitly
        basis = np.eye(n * n).reshape(n * n, n, n)
        cols = [(b @ hi @ xm @ h).ravel() for b in basis]  # v -> v a^{-1/2} x a^{1/2}
        op = np.array(cols).T
        oracle = np.linalg.norm(op, 2)
        worst = max(worst, abs(right_action_norm(sp, x) - oracle) / max(1.0, oracle))
    return worst <= 1e-9, f"max relative error {worst:.2e}"


def criterion_4():
    """Factoriality: residuals on matrix algebras, certified values on direct sums."""
    worst, over = 0.0, []
    for s in range(50):
        n = (2, 3, 4)[s % 3]
        sp = random_faithful_space([n], seed=s)
        est = chi_factor_estimate(sp, OptConfig(sample_budget=2000, seed=s))
        worst = max(worst, est.value)
        if est.value > 0.05:
            over.append(f"seed {s} M_{n} {est.value:.3f}")
    cert_err, dims_ok = 0.0, True
    rng = np.random.default_rng(4)
    cases = [commutative_space(rng.dirichlet(np.ones(k))) for k in (2, 3, 4, 5)]
    cases.append(random_faithful_space([2, 3], seed=4))
    for sp in cases:
        est = chi_factor_estimate(sp)
        w = [state_eval(sp, p).real for p in central_projections(sp)]
        expect = max(np.sqrt(v - v * v) for v in w)
        cert_err = max(cert_err, abs(est.value - expect))
        dims_ok &= est.certified and center_dimension(sp) == sp.n_blocks
    ok = worst <= 0.05 and cert_err <= 1e-9 and dims_ok
    above = f" (above 0.05: {'; '.join(over)})" if over else ""
    return ok, (f"max residual {worst:.4f} over 50 states{above}; certified error {cert_err:.1e}; "
                f"center dims ok {dims_ok}")


def criterion_5():
    """Dixmier witnesses for 100 random x."""
    t0 = time.perf_counter()
    worst = -np.inf
    for s in range(100):
        n = 1 + s % 4
        sp = random_faithful_space([n], seed=s)
        x = sample(sp, "element", seed=900 + s)
        est = beta_lower(sp, x)
        y = est.witnesses["y"]
        found = sharp_norm(sp, x @ y - y @ x)
        worst = max(worst, xi(sp, x) - found)
    dt = time.perf_counter() - t0
    return worst <= 0.05 and dt < 60, f"max gap {worst:.4f}, {dt:.1f} s"


def criterion_6():
    """T-invariant lattice and type classification."""
    lat_err, half_max, lam_err = 0.0, 0.0, 0.0
    tags = []
    for lam in (0.3, 0.5, 0.8):
        e = PowersSpec("lambda", lam).eigs()
        p = 2 * np.pi / np.log(lam)
        ks = np.arange(-3, 4)
        lat_err = max(lat_err, float(np.max(np.abs(tinv_modulus(e, ks * p) - 1))))
        half_max = max(half_max, float(np.max(tinv_modulus(e, (ks + 0.5) * p))))
        tmax = 4 * lattice_period(lam)
        v = classify_type(e, t_max=tmax, steps=int(tmax * 1000) + 1)
        tags.append(v.tag)
        lam_err = max(lam_err, abs(v.lam - lam) if v.lam is not None else np.inf)
    inf_tag = classify_type(PowersSpec("infinity", 0.5, 1 / 3).eigs(), t_max=60, steps=60000).tag
    tr_tag = classify_type([1 / 3] * 3).tag
    ok = (lat_err <= 1e-12 and half_max < 1 - 1e-6 and lam_err <= 1e-6 and set(tags) == {"III_lambda"}
          and inf_tag == "III_1" and tr_tag == "tracial_II1")
    return ok, (f"lattice error {lat_err:.1e}, half-lattice max {half_max:.4f}, lambda error {lam_err:.1e}, "
                f"a_inf {inf_tag}, uniform {tr_tag}")


def criterion_7():
    """Twisted decay: direct vs closed form, and the verdict grid."""
    spec = PowersSpec("lambda", 0.5)
    p = lattice_period(0.5)
    worst, mismatches = 0.0, 0
    for c in (0.3, 0.6, 0.9, 0.99, 0.999):
        for t in (0.0, 1.0, p / 2, p, 7.3):
            curve = twisted_decay(spec, c, t)
            worst = max(worst, float(np.max(np.abs(np.array(curve.direct) - curve.values))))
            mismatches += curve.decays_to_zero != (c * curve.modulus < 1)
    return worst <= 1e-10 and mismatches == 0, f"max direct/closed gap {worst:.1e}, {mismatches} verdict mismatches"


def criterion_8():
    """Projection repair on 100 perturbed projections."""
    rng = np.random.default_rng(8)
    worst_proj, worst_ratio = 0.0, 0.0
    for s in range(100):
        n = int(rng.integers(1, 9))
        delta = rng.uniform(0, 0.05)
        k = int(rng.integers(0, n + 1))
        q = np.diag([1.0] * k + [0.0] * (n - k))
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (z + z.conj().T) / 2
        h /= np.linalg.norm(h, 2)
        u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        m = q + delta * h
        y = BlockMatrix([u @ m @ m @ u.conj().T])
        sp = random_faithful_space([n], seed=s)
        r = repair_projection(sp, y)
        pm = r.projection.blocks[0]
        worst_proj = max(worst_proj, np.abs(pm @ pm - pm).max(), np.abs(pm - pm.conj().T).max())
        if delta > 0:
            worst_ratio = max(worst_ratio, r.residual / delta)
        elif r.residual > 1e-12:
            worst_ratio = np.inf
    return worst_proj <= 1e-10 and worst_ratio <= 5, f"projection error {worst_proj:.1e}, max residual/delta {worst_ratio:.2f}"


def criterion_9():
    """Fullness sentence with the Jordan-block witness."""
    cfg = OptConfig(sample_budget=10 ** 4)
    values = {}
    min_comm = np.inf
    for n in (2, 3, 4):
        values[n] = theta_estimate(tracial_space(n), cfg).value
        x = herrero_szarek_witness(n).blocks[0]
        for k in range(1, n):
            min_comm = min(min_comm, float(min_commutator_projection(x, k, starts=10 ** 4, steps=300, seed=k).min()))
    ok = max(values.values()) <= 0.05 and min_comm > 1e-3
    detail = ", ".join(f"theta(M_{n}) = {v:.4f}" for n, v in values.items())
    return ok, f"{detail}; min ||[J_n, p]||_F at located minima {min_comm:.3f}"


def criterion_10():
    """Formula language round trip and evaluator agreement."""
    lib = [dsl.library("chi_factor"), dsl.library("phi_t", 1.5), dsl.library("phi_t", -0.25), dsl.library("theta")]
    rng = np.random.default_rng(10)
    asts = lib + [random_ast(rng) for _ in range(1000)]
    bad = sum(dsl.parse(dsl.to_text(a)) != a for a in asts)
    diffs = []
    for s, n in enumerate((2, 3, 2)):
        sp = random_faithful_space([n], seed=100 + s)
        cfg = OptConfig(seed=s)
        a = evaluate(dsl.library("chi_factor"), sp, cfg).value
        b = chi_factor_estimate(sp, cfg).value
        diffs.append(a == b)
    ok = bad == 0 and all(diffs)
    return ok, f"{bad} round-trip failures over {len(asts)} formulas; bit-identical chi on {sum(diffs)}/{len(diffs)} spaces"


CRITERIA = {
    1: ("Tomita consistency", criterion_1),
    2: ("KMS verification", criterion_2),
    3: ("right-action norm", criterion_3),
    4: ("factoriality sentence", criterion_4),
    5: ("Dixmier witnesses", criterion_5),
    6: ("T-invariant lattice", criterion_6),
    7: ("twisted decay", criterion_7),
    8: ("projection repair", criterion_8),
    9: ("fullness sentence", criterion_9),
    10: ("formula language fidelity", criterion_10),
}


def _line(k):
    name, fn = CRITERIA[k]
    passed, detail = fn()
    return passed, f"criterion {k:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    passed, line = _line(k)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [_line(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
