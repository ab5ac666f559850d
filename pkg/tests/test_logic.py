import numpy as np
import pytest
from hypothesis import given

from conftest import bm, seeds, spaces, unit
from wstarlab.algebra import (block_unit, commutative_space, diagonal_space, random_faithful_space,
                              sample, sharp_norm, state_eval, tensor_power, tracial_space)
from wstarlab.errors import BadDimension, MultiBlockUnsupported, ValidationError
from wstarlab.logic import (beta_lower, center_expectation, central_witness, chi_factor_estimate,
                            dixmier_residual, herrero_szarek_witness, min_commutator_projection, phi_t_estimate,
                            theta_estimate, xi)
from wstarlab.modular import in_S1, project_to_S1, sigma_t
from wstarlab.powers import powers_space
from wstarlab.search import OptConfig, evaluate
from wstarlab import dsl

FAST = OptConfig(sample_budget=400, restarts=2, ascent_steps=30)
A_HALF = diagonal_space([1 / 3, 2 / 3])


class TestXi:
    def test_central_half(self):
        sp = commutative_space([0.5, 0.5])
        p = block_unit(sp, 0)
        assert xi(sp, p) == pytest.approx(0.5) and xi(sp, p, "literal") == pytest.approx(0.5)

    def test_scalars(self):
        one = A_HALF.identity()
        assert xi(A_HALF, one) == pytest.approx(0, abs=1e-7)
        assert xi(A_HALF, one, "literal") == pytest.approx(0, abs=1e-7)

    def test_imaginary_scalar_gap(self):
        x = A_HALF.identity() * 1j
        assert xi(A_HALF, x) == pytest.approx(0, abs=1e-7)
        assert xi(A_HALF, x, "literal") == pytest.approx(np.sqrt(2))

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            xi(A_HALF, A_HALF.identity(), "other")

    @given(spaces(), seeds)
    def test_centered_identity(self, sp, seed):
        x = sample(sp, "element", seed=seed)
        lhs = sharp_norm(sp, x - sp.identity() * state_eval(sp, x))
        assert xi(sp, x) == pytest.approx(lhs, abs=1e-12)

    @given(spaces(), seeds)
    def test_literal_dominates(self, sp, seed):
        x = sample(sp, "element", seed=seed)
        assert xi(sp, x, "literal") >= xi(sp, x) - 1e-12
        h = sample(sp, "hermitian", seed=seed)
        assert xi(sp, h, "literal") == pytest.approx(xi(sp, h), abs=1e-7)


class TestBeta:
    def test_central_is_zero(self):
        sp = random_faithful_space([2, 3], seed=1)
        for x in (block_unit(sp, 0), sp.identity() * 3):
            est = beta_lower(sp, x, FAST)
            assert est.value == 0.0

    def test_diag_tracial(self):
        sp = tracial_space(2)
        x = bm(np.diag([1.0, -1.0]))
        est = beta_lower(sp, x, FAST)
        assert est.certified and est.value >= 2 - 1e-9
        y = bm(unit(2, 0, 1) + unit(2, 1, 0))
        assert sharp_norm(sp, x @ y - y @ x) == pytest.approx(2)

    @pytest.mark.parametrize("seed", range(4))
    def test_witness_realizes_value(self, seed):
        sp = random_faithful_space([3], seed=seed)
        x = sample(sp, "element", seed=seed + 10)
        est = beta_lower(sp, x, FAST)
        y = est.witnesses["y"]
        assert in_S1(sp, y, tol=1e-9)
        assert sharp_norm(sp, x @ y - y @ x) == pytest.approx(est.value, abs=1e-9)

    def test_reproducible(self):
        sp = random_faithful_space([3], seed=2)
        x = sample(sp, "element", seed=3)
        assert beta_lower(sp, x, FAST).value == beta_lower(sp, x, FAST).value


class TestChi:
    def test_two_points(self):
        est = chi_factor_estimate(commutative_space([0.5, 0.5]))
        assert est.certified and est.value == pytest.approx(0.5, abs=1e-12)
        assert est.witnesses["x"].allclose(bm([[1]], [[0]]))

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_equal_weights(self, k):
        est = chi_factor_estimate(commutative_space([1 / k] * k))
        assert est.value == pytest.approx(np.sqrt(1 / k - 1 / k ** 2), abs=1e-12)

    def test_two_blocks(self):
        sp = random_faithful_space([2, 3], seed=6)
        est = chi_factor_estimate(sp)
        ws = [state_eval(sp, block_unit(sp, k)).real for k in range(2)]
        assert est.value == pytest.approx(max(np.sqrt(w - w * w) for w in ws), abs=1e-9)
        assert est.diagnostics["center_dim"] == 2

    @pytest.mark.parametrize("seed", [0, 1])
    def test_matrix_algebra_residual(self, seed):
        sp = random_faithful_space([2], seed=seed)
        est = chi_factor_estimate(sp, OptConfig(seed=seed))
        assert not est.certified
        assert est.value <= 0.05


class TestDixmier:
    def test_scalar(self):
        assert dixmier_residual(A_HALF, A_HALF.identity() * 2, FAST) == pytest.approx(0, abs=1e-7)

    def test_diag_tracial(self):
        assert dixmier_residual(tracial_space(2), bm(np.diag([1.0, -1.0])), FAST) <= -1 + 1e-9

    def test_multi_block(self):
        sp = random_faithful_space([1, 1], seed=0)
        with pytest.raises(MultiBlockUnsupported):
            dixmier_residual(sp, sp.identity())

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_random(self, n):
        for s in range(3):
            sp = random_faithful_space([n], seed=s)
            assert dixmier_residual(sp, sample(sp, "element", seed=100 + s)) <= 0.05


class TestCenter:
    def test_factor_has_no_witness(self):
        assert central_witness(A_HALF) is None

    def test_witness_is_central(self):
        sp = random_faithful_space([2, 3], seed=3)
        cw = central_witness(sp)
        x = sample(sp, "element", seed=0)
        assert (cw.projection @ x - x @ cw.projection).op_norm() == 0

    def test_single_block_expectation(self):
        x = sample(A_HALF, "element", seed=0)
        assert center_expectation(A_HALF, x).allclose(A_HALF.identity() * state_eval(A_HALF, x))

    @given(spaces(), seeds)
    def test_expectation_properties(self, sp, seed):
        x = sample(sp, "element", seed=seed)
        e = center_expectation(sp, x)
        assert center_expectation(sp, e).allclose(e, atol=1e-12)
        assert state_eval(sp, e) == pytest.approx(state_eval(sp, x), abs=1e-12)

    def test_is_gns_projection(self):
        sp = random_faithful_space([2, 3], seed=8)
        x = sample(sp, "element", seed=1)
        units = [block_unit(sp, k) for k in range(2)]
        gram = np.array([[state_eval(sp, p.H @ q) for q in units] for p in units])
        rhs = np.array([state_eval(sp, p.H @ x) for p in units])
        coef = np.linalg.solve(gram, rhs)
        oracle = units[0] * coef[0] + units[1] * coef[1]
        assert center_expectation(sp, x).allclose(oracle, atol=1e-12)


class TestPhiT:
    def test_t_zero(self):
        sp = random_faithful_space([3], seed=0)
        est = phi_t_estimate(sp, 0.0)
        assert est.value == 0 and est.certified

    @pytest.mark.parametrize("lam,n", [(0.5, 1), (0.5, 3), (0.3, 2)])
    def test_lattice_point(self, lam, n):
        sp = tensor_power(powers_space(lam), n)
        assert phi_t_estimate(sp, 2 * np.pi / np.log(lam)).value == 0

    def test_half_period(self):
        t = np.pi / np.log(0.5)
        est = phi_t_estimate(A_HALF, t, FAST)
        assert est.certified
        catalog = 2 * np.sqrt(0.5) * sharp_norm(A_HALF, bm(unit(2, 0, 1)))
        assert est.value >= catalog - 1e-12
        assert est.value == pytest.approx(np.sqrt(2), abs=1e-9)
        x = est.witnesses["x"]
        assert in_S1(A_HALF, x, tol=1e-9)
        assert sharp_norm(A_HALF, sigma_t(A_HALF, x, t) - x) == pytest.approx(est.value, abs=1e-9)

    def test_tiny_phase_detected(self):
        sp = powers_space(0.5)
        t = 2 * np.pi / np.log(0.5) + 1e-5
        assert phi_t_estimate(sp, t, FAST).value > 0


class TestHerreroSzarek:
    def test_shape(self):
        assert herrero_szarek_witness(2).allclose(bm(unit(2, 0, 1)))

    @pytest.mark.parametrize("n", [1, 0, 2.5])
    def test_bad_dimension(self, n):
        with pytest.raises(BadDimension):
            herrero_szarek_witness(n)

    def test_rank_one_sweep_n2(self):
        x = herrero_szarek_witness(2).blocks[0]
        th, ph = np.meshgrid(np.linspace(0, np.pi, 181), np.linspace(0, 2 * np.pi, 361))
        v = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], -1)
        p = v[..., :, None] * v[..., None, :].conj()
        c = x @ p - p @ x
        assert np.linalg.norm(c, axis=(-2, -1)).min() > 1e-3

    def test_trivial_projections_commute(self):
        x = herrero_szarek_witness(3).blocks[0]
        assert np.allclose(x @ np.eye(3) - np.eye(3) @ x, 0)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_local_minima_n4(self, k):
        x = herrero_szarek_witness(4).blocks[0]
        assert min_commutator_projection(x, k, starts=300, steps=200, seed=k).min() > 1e-3

    def test_descent_finds_commuting_projection(self):
        x = np.diag([1.0, 2.0, 3.0]).astype(complex)
        assert min_commutator_projection(x, 1, starts=50, steps=300).min() < 1e-6

    def test_rank_validation(self):
        with pytest.raises(ValidationError):
            min_commutator_projection(np.eye(2), 2)


class TestTheta:
    def test_multi_block(self):
        with pytest.raises(MultiBlockUnsupported):
            theta_estimate(random_faithful_space([1, 2], seed=0))

    def test_identity_inner_sup(self):
        sp = tracial_space(2)
        inner = dsl.parse("sup p:Proj. max(0, min(sharp(p), sharp(one - p)) - sharp(x * p - p * x))")
        est = evaluate(inner, sp, FAST, env={"x": sp.identity()})
        assert est.value == pytest.approx(np.sqrt(0.5), abs=1e-9)

    def test_jordan_inner_sup_matches_sweep(self):
        sp = tracial_space(2)
        x = project_to_S1(sp, herrero_szarek_witness(2))
        inner = dsl.parse("sup p:Proj. max(0, min(sharp(p), sharp(one - p)) - sharp(x * p - p * x))")
        est = evaluate(inner, sp, OptConfig(sample_budget=10 ** 4), env={"x": x})
        th, ph = np.meshgrid(np.linspace(0, np.pi, 721), np.linspace(0, 2 * np.pi, 73))
        v = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], -1)
        p = v[..., :, None] * v[..., None, :].conj()
        xm = x.blocks[0]
        c = xm @ p - p @ xm
        sharp = np.sqrt(0.25 * (np.linalg.norm(c, axis=(-2, -1)) ** 2 * 2))
        oracle = np.max(np.sqrt(0.5) - sharp)
        assert est.value >= oracle - 1e-9
        assert est.value == pytest.approx(oracle, abs=1e-4)

    def test_tracial_m2_value(self):
        est = theta_estimate(tracial_space(2), FAST)
        assert est.value == pytest.approx(np.sqrt(0.5) - 0.5, abs=1e-6)


class TestFactorialityGap:
    """A skewed state on M_4 where no element of S1 witnesses the commutator bound.

    For ``x = diag(1, -1, -1, -1)`` in the eigenbasis only row 1 and column 1
    of ``y`` enter ``[x, y]``; the column bounds implied by the K-constant give
    ``beta(x)^2 <= 4 max_j (lam_1 + lam_j) lam_j / lam_1``.
    """

    def setup_method(self):
        self.sp = random_faithful_space([4], seed=29)
        self.x = self.sp.from_eigen(np.diag([1.0, -1, -1, -1]).astype(complex))

    def analytic_beta_bound(self):
        lam = self.sp.lam
        return float(np.sqrt(4 * max((lam[0] + lam[j]) * lam[j] / lam[0] for j in range(1, 4))))

    def test_witness_in_unit_ball(self):
        assert in_S1(self.sp, self.x)

    def test_search_attains_the_bound(self):
        est = beta_lower(self.sp, self.x)
        assert est.value == pytest.approx(self.analytic_beta_bound(), abs=1e-6)

    def test_chi_is_positive(self):
        gap = xi(self.sp, self.x) - self.analytic_beta_bound()
        assert gap > 0.2
        assert chi_factor_estimate(self.sp, OptConfig(seed=29)).value >= gap - 1e-6
