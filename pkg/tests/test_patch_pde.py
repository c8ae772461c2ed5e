import numpy as np
import pytest

from turingmarket.dispersion import DiffusionMatrix2, exact_turing_threshold, mode_matrix
from turingmarket.errors import DomainError
from turingmarket.kinetics import KineticParams, State2, interior_equilibrium, ratio_interior_jacobian
from turingmarket.patch import (
    MigrationFunction,
    PatchParams,
    b_matrix,
    block_factor,
    gamma_matrix,
    patch_jacobian,
)
from turingmarket.patch_pde import (
    DiffusionMatrix4,
    TwoCountryDomain,
    check_thm44,
    factor_under_equal_diffusion,
    mode_matrix4,
    rescale_diffusion,
)

RATIO_EXAMPLE = KineticParams(r=1, K=10, m=2, d=1, a=2)
EQ = State2(5.0, 2.5)


def patch_params(delta1=0.1, delta2=0.2, alpha=2.0, beta=2.0):
    return PatchParams(delta1, delta2, MigrationFunction.rational(alpha),
                       MigrationFunction.rational(beta))


def eig_union_matches(union, mat4, tol=1e-10):
    got = sorted(union, key=lambda z: (z.real, z.imag))
    want = sorted(np.linalg.eigvals(mat4), key=lambda z: (z.real, z.imag))
    return all(abs(g - w) <= tol for g, w in zip(got, want))


class TestRescale:
    def test_equal_lengths_identity(self):
        D = DiffusionMatrix2(1, 0.5, 0.5, 1)
        assert rescale_diffusion(D, 3.0, 3.0) == D

    def test_factor_four(self):
        got = rescale_diffusion(DiffusionMatrix2(1, 0.5, 0.5, 1), 2.0, 1.0)
        assert got == DiffusionMatrix2(4.0, 2.0, 2.0, 4.0)

    def test_determinant_stays_positive(self):
        D = DiffusionMatrix2(1.3, 0.9, 0.4, 0.8)
        scaled = rescale_diffusion(D, 5.0, 2.0)
        assert scaled.det == pytest.approx(D.det * (5.0 / 2.0) ** 4, rel=1e-12)
        assert scaled.det > 0


class TestModeMatrix4:
    def test_lambda_zero_reduces_to_patch_matrix(self):
        q = patch_params()
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(q, EQ)
        D4 = DiffusionMatrix4.equal(DiffusionMatrix2(1, 1, 0.5, 1))
        assert np.array_equal(mode_matrix4(A_p, gamma, D4, 0.0), A_p + gamma)

    def test_decoupled_countries_block_diagonal(self):
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = np.zeros((4, 4))
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        got = mode_matrix4(A_p, gamma, DiffusionMatrix4.equal(D), 2.0)
        A_r = ratio_interior_jacobian(RATIO_EXAMPLE)
        block = A_r - 2.0 * D.signed()
        assert np.array_equal(got[:2, :2], block)
        assert np.array_equal(got[2:, 2:], block)
        assert np.abs(got[:2, 2:]).max() == 0.0

    def test_entrywise_against_independent_assembly(self):
        q = patch_params()
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(q, EQ)
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        lam = 1.0
        expected = np.zeros((4, 4))
        signs = np.array([[1, -1], [-1, 1]], dtype=float)
        coeff = np.array([[D.d11, D.d12], [D.d21, D.d22]])
        for country in (0, 1):
            sl = slice(2 * country, 2 * country + 2)
            expected[sl, sl] = (A_p + gamma)[sl, sl] - lam * signs * coeff
        expected[:2, 2:] = gamma[:2, 2:]
        expected[2:, :2] = gamma[2:, :2]
        got = mode_matrix4(A_p, gamma, DiffusionMatrix4.equal(D), lam)
        assert np.allclose(got, expected, atol=1e-15)


class TestFactorization:
    def test_lambda_zero_matches_block_factor(self):
        q = patch_params()
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(q, EQ)
        D4 = DiffusionMatrix4.equal(DiffusionMatrix2(1, 1, 0.5, 1))
        f1, f2 = factor_under_equal_diffusion(A_p, gamma, D4, 0.0)
        A_r, B = block_factor(A_p, gamma)
        assert np.array_equal(f1, A_r)
        assert np.array_equal(f2, B)

    @pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
    def test_spectral_union_matches_dense_eigensolve(self, lam):
        q = patch_params()
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(q, EQ)
        D4 = DiffusionMatrix4.equal(DiffusionMatrix2(1, 1, 0.5, 1))
        f1, f2 = factor_under_equal_diffusion(A_p, gamma, D4, lam)
        union = list(np.linalg.eigvals(f1)) + list(np.linalg.eigvals(f2))
        assert eig_union_matches(union, mode_matrix4(A_p, gamma, D4, lam))

    def test_random_spectral_union_dense_lambda(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            p = KineticParams(*rng.uniform(0.1, 4.0, size=5))
            if not interior_equilibrium("ratio", p).positive:
                continue
            eqm = interior_equilibrium("ratio", p).state
            q = patch_params(rng.uniform(0, 2), rng.uniform(0, 2),
                             rng.uniform(1.01, 8), rng.uniform(1.01, 8))
            A_p = patch_jacobian(p)
            gamma = gamma_matrix(q, eqm)
            D4 = DiffusionMatrix4.equal(DiffusionMatrix2(1.1, 0.4, 0.3, 0.9))
            for lam in rng.uniform(0.0, 30.0, size=4):
                f1, f2 = factor_under_equal_diffusion(A_p, gamma, D4, lam)
                union = list(np.linalg.eigvals(f1)) + list(np.linalg.eigvals(f2))
                assert eig_union_matches(union, mode_matrix4(A_p, gamma, D4, lam))

    def test_unequal_blocks_rejected(self):
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(patch_params(), EQ)
        D4 = DiffusionMatrix4(DiffusionMatrix2(1, 1, 0.5, 1),
                              DiffusionMatrix2(1.5, 1, 0.5, 1))
        with pytest.raises(DomainError):
            factor_under_equal_diffusion(A_p, gamma, D4, 1.0)


class TestThm44:
    def test_two_country_bound_value(self):
        q = patch_params()
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        rep = check_thm44(RATIO_EXAMPLE, q, D, TwoCountryDomain(100.0, 100.0, 200))
        # independent arithmetic with the equilibrium migration weights
        num = 0.2 * (7 / 6) * 1.0 + 0.1 * (9 / 7) * 1.0 + 0.1 * (-1 / 12.25) * 5.0 * 0.5
        den = 0.2 * (1 / 36) * 2.5
        assert rep.quantities["d12_bound_two_country"] == pytest.approx(num / den, rel=1e-12)
        assert rep.quantities["d12_bound_two_country"] == pytest.approx(24.587755102040816,
                                                                        rel=1e-12)
        for cid in ("h:3rd", "h:2rd", "h:4rd", "plusmas", "h:7rd", "1.feltetel",
                    "2.feltetelujalak", "pathdkepletmas", "d-k", "det1", "det2"):
            assert rep.condition(cid).holds, cid
        assert rep.verdict == "stable"

    def test_zero_velocities_reduce_to_single_country(self):
        q = patch_params(0.0, 0.0)
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        rep = check_thm44(RATIO_EXAMPLE, q, D, TwoCountryDomain(100.0, 100.0, 200))
        det1 = rep.condition("det1")
        det2 = rep.condition("det2")
        assert det1.margin == pytest.approx(det2.margin, rel=1e-12)
        assert rep.condition("pathdkepletmas").holds
        assert rep.condition("h:7rd").margin == pytest.approx((4.0 - 1.0) / 4.0, rel=1e-12)

    def test_det1_matches_dispersion_determinant(self):
        q = patch_params()
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        A_r = ratio_interior_jacobian(RATIO_EXAMPLE)
        det_A, det_D = np.linalg.det(A_r), D.det
        S = (A_r[0, 0] * D.d22 + A_r[1, 1] * D.d11
             + A_r[0, 1] * D.d21 + A_r[1, 0] * D.d12)
        for lam in (0.0, 0.3, 1.7, 9.0):
            poly = det_A - S * lam + det_D * lam * lam
            direct = np.linalg.det(mode_matrix(A_r, D, lam))
            assert poly == pytest.approx(direct, rel=1e-12, abs=1e-12)

    def test_crossing_exact_thresholds_destabilizes(self):
        q = patch_params()
        A_r = ratio_interior_jacobian(RATIO_EXAMPLE)
        B = b_matrix(RATIO_EXAMPLE, q)
        thr1 = exact_turing_threshold(A_r, 1, 0.1, 1)
        thr2 = exact_turing_threshold(B, 1, 0.1, 1)
        d12 = max(thr1, thr2) + 0.3
        D = DiffusionMatrix2(1, d12, 0.1, 1)
        rep = check_thm44(RATIO_EXAMPLE, q, D, TwoCountryDomain(100.0, 100.0, 300))
        assert not (rep.condition("det1").holds and rep.condition("det2").holds)
        assert rep.verdict == "unstable"
        # oracle: a dense eigensolve over the mode grid finds the instability
        lams = TwoCountryDomain(100.0, 100.0, 300).lambdas()
        growth = []
        for lam in lams:
            growth.append(max(np.linalg.eigvals(A_r - lam * D.signed()).real.max(),
                              np.linalg.eigvals(B - lam * D.signed()).real.max()))
        assert max(growth) > 0

    def test_sufficient_set_keeps_every_mode_stable(self):
        rng = np.random.default_rng(97)
        checked = 0
        while checked < 50:
            p = KineticParams(*rng.uniform(0.1, 4.0, size=5))
            if not interior_equilibrium("ratio", p).positive:
                continue
            q = patch_params(rng.uniform(0, 1.0), rng.uniform(0, 1.0),
                             rng.uniform(1.01, 6), rng.uniform(1.01, 6))
            d11, d21, d22 = rng.uniform(0.05, 2.0, size=3)
            d12 = rng.uniform(0.0, 2.0)
            if d11 * d22 - d12 * d21 <= 0:
                continue
            D = DiffusionMatrix2(d11, d12, d21, d22)
            for L1 in (1.0, 10.0, 100.0):
                rep = check_thm44(p, q, D, TwoCountryDomain(L1, L1, 200))
                if rep.all_hold():
                    assert rep.verdict == "stable", f"counterexample {p} {q} {D} L1={L1}"
            checked += 1

    def test_constant_labour_migration_removes_bound(self):
        q = PatchParams(0.1, 0.2, MigrationFunction.rational(2.0), MigrationFunction.constant())
        D = DiffusionMatrix2(1, 1, 0.5, 1)
        rep = check_thm44(RATIO_EXAMPLE, q, D, TwoCountryDomain(50.0, 50.0, 100))
        assert rep.quantities["d12_bound_two_country"] is None
        assert rep.condition("pathdkepletmas").holds

    def test_requires_interior_equilibrium(self):
        with pytest.raises(DomainError):
            check_thm44(KineticParams(r=1, K=10, m=1, d=2, a=2), patch_params(),
                        DiffusionMatrix2(1, 1, 0.5, 1), TwoCountryDomain(10.0, 10.0, 50))
