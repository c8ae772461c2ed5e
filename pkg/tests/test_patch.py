import math

import numpy as np
import pytest

from turingmarket.errors import DomainError
from turingmarket.kinetics import KineticParams, State2, interior_equilibrium, ratio_interior_jacobian
from turingmarket.patch import (
    MigrationFunction,
    PatchParams,
    State4,
    b_matrix,
    block_factor,
    check_thm42,
    check_thm43,
    coupling_block,
    gamma_matrix,
    patch_jacobian,
    patch_rhs,
)

RATIO_EXAMPLE = KineticParams(r=1, K=10, m=2, d=1, a=2)
EQ = State2(5.0, 2.5)
RHO2 = MigrationFunction.rational(2.0)


def patch_params(delta1=0.1, delta2=0.2, alpha=2.0, beta=2.0):
    return PatchParams(delta1, delta2, MigrationFunction.rational(alpha),
                       MigrationFunction.rational(beta))


def eig_union_matches(union, mat4, tol=1e-10):
    """Compare a spectral union against a dense 4x4 eigensolve (oracle)."""
    got = sorted(union, key=lambda z: (z.real, z.imag))
    want = sorted(np.linalg.eigvals(mat4), key=lambda z: (z.real, z.imag))
    return all(abs(g - w) <= tol for g, w in zip(got, want))


def random_positive_kinetics(rng):
    while True:
        p = KineticParams(*rng.uniform(0.1, 4.0, size=5))
        if interior_equilibrium("ratio", p).positive:
            return p


class TestMigrationFunction:
    def test_rational_values(self):
        assert RHO2.rho(2.5) == pytest.approx(4.5 / 3.5, rel=1e-15)
        assert RHO2.drho(2.5) == pytest.approx(-1.0 / 12.25, rel=1e-15)
        assert RHO2.rho(5.0) == pytest.approx(7.0 / 6.0, rel=1e-15)
        assert RHO2.drho(5.0) == pytest.approx(-1.0 / 36.0, rel=1e-15)

    def test_rational_positive_decreasing_everywhere(self):
        rng = np.random.default_rng(2)
        for alpha in rng.uniform(1.0 + 1e-6, 50.0, size=25):
            f = MigrationFunction.rational(alpha)
            w = np.linspace(0.0, 200.0, 400)
            assert np.all(f.rho(w) > 1.0)
            assert np.all(f.drho(w) < 0.0)

    def test_rational_requires_alpha_above_one(self):
        with pytest.raises(ValueError):
            MigrationFunction.rational(1.0)

    def test_constant_family(self):
        f = MigrationFunction.constant()
        assert f.rho(3.7) == 1.0
        assert f.drho(3.7) == 0.0

    def test_custom_accepts_valid_pair(self):
        f = MigrationFunction.custom(lambda w: math.exp(-0.3 * w) + 0.05,
                                     lambda w: -0.3 * math.exp(-0.3 * w))
        assert f.rho(1.0) > 0
        assert f.drho(1.0) < 0

    def test_custom_rejects_sign_violations(self):
        with pytest.raises(ValueError):
            MigrationFunction.custom(lambda w: 1.0 - 0.1 * w, lambda w: -0.1)
        with pytest.raises(ValueError):
            MigrationFunction.custom(lambda w: 1.0 + w, lambda w: 1.0)

    def test_patch_params_reject_negative_velocity(self):
        with pytest.raises(ValueError):
            PatchParams(-0.1, 0.1, RHO2, RHO2)


class TestPatchRhs:
    def test_symmetric_equilibrium_is_fixed_point(self):
        q = patch_params()
        out = patch_rhs(RATIO_EXAMPLE, q, State4(5.0, 2.5, 5.0, 2.5))
        assert np.abs(out.as_array()).max() < 1e-12

    def test_symmetric_equilibrium_fixed_for_random_migration(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            p = random_positive_kinetics(rng)
            eqm = interior_equilibrium("ratio", p).state
            q = patch_params(rng.uniform(0, 2), rng.uniform(0, 2),
                             rng.uniform(1.01, 8), rng.uniform(1.01, 8))
            out = patch_rhs(p, q, State4(eqm.u, eqm.v, eqm.u, eqm.v))
            assert np.abs(out.as_array()).max() < 1e-12

    def test_pure_migration_conserves_totals_exactly(self):
        rng = np.random.default_rng(17)
        q = patch_params(0.7, 1.3, 3.0, 1.5)
        for _ in range(50):
            s = State4(*rng.uniform(0.01, 20.0, size=4))
            out = patch_rhs(RATIO_EXAMPLE, q, s, include_kinetics=False)
            assert out.u1 + out.u2 == 0.0
            assert out.v1 + out.v2 == 0.0

    def test_migration_increment_example(self):
        q = patch_params(0.1, 0.1)
        out = patch_rhs(RATIO_EXAMPLE, q, State4(5.0, 2.5, 6.0, 2.5))
        # (u1, v1) sits at the kinetic equilibrium, so component 1 is pure inflow
        assert out.u1 == pytest.approx(0.1 * (4.5 / 3.5), rel=1e-12)

    def test_propagates_domain_errors(self):
        with pytest.raises(DomainError):
            patch_rhs(RATIO_EXAMPLE, patch_params(), State4(-2.0, 1.0, 5.0, 2.5))


class TestGammaMatrix:
    def test_zero_velocities_give_zero_matrix(self):
        q = patch_params(0.0, 0.0)
        assert np.array_equal(gamma_matrix(q, EQ), np.zeros((4, 4)))

    def test_constant_migration_has_no_cross_terms(self):
        q = PatchParams(0.3, 0.8, MigrationFunction.constant(), MigrationFunction.constant())
        gamma = gamma_matrix(q, EQ)
        expected = np.array([
            [-0.3, 0.0, 0.3, 0.0],
            [0.0, -0.8, 0.0, 0.8],
            [0.3, 0.0, -0.3, 0.0],
            [0.0, 0.8, 0.0, -0.8],
        ])
        assert np.allclose(gamma, expected, atol=1e-15)

    def test_ratio_example_entries(self):
        gamma = gamma_matrix(patch_params(), EQ)
        assert gamma[0, 0] == pytest.approx(-0.1 * 4.5 / 3.5, rel=1e-12)
        assert gamma[0, 1] == pytest.approx(0.1 * (1.0 / 12.25) * 5.0, rel=1e-12)

    def test_matches_finite_differences_of_patch_rhs(self):
        q = patch_params()
        x0 = np.array([5.0, 2.5, 5.0, 2.5])

        def rhs_vec(x):
            out = patch_rhs(RATIO_EXAMPLE, q, State4(*x))
            return out.as_array()

        fd = np.zeros((4, 4))
        for j in range(4):
            h = 1e-6 * max(1.0, abs(x0[j]))
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (rhs_vec(xp) - rhs_vec(xm)) / (2.0 * h)
        got = patch_jacobian(RATIO_EXAMPLE) + gamma_matrix(q, EQ)
        assert np.abs(got - fd).max() < 1e-6

    def test_paired_columns_cancel(self):
        gamma = gamma_matrix(patch_params(0.4, 0.9, 3.0, 2.2), EQ)
        assert np.abs(gamma[:, 0] + gamma[:, 2]).max() == 0.0
        assert np.abs(gamma[:, 1] + gamma[:, 3]).max() == 0.0


class TestBlockFactor:
    def test_zero_migration_doubles_spectrum(self):
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(patch_params(0.0, 0.0), EQ)
        A_r, B = block_factor(A_p, gamma)
        assert np.array_equal(A_r, B)
        assert np.array_equal(A_r, ratio_interior_jacobian(RATIO_EXAMPLE))

    def test_example_spectral_union(self):
        q = patch_params()
        A_p = patch_jacobian(RATIO_EXAMPLE)
        gamma = gamma_matrix(q, EQ)
        A_r, B = block_factor(A_p, gamma)
        union = list(np.linalg.eigvals(A_r)) + list(np.linalg.eigvals(B))
        assert eig_union_matches(union, A_p + gamma)

    def test_random_spectral_union(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            p = random_positive_kinetics(rng)
            eqm = interior_equilibrium("ratio", p).state
            q = patch_params(rng.uniform(0, 3), rng.uniform(0, 3),
                             rng.uniform(1.01, 10), rng.uniform(1.01, 10))
            A_p = patch_jacobian(p)
            gamma = gamma_matrix(q, eqm)
            A_r, B = block_factor(A_p, gamma)
            union = list(np.linalg.eigvals(A_r)) + list(np.linalg.eigvals(B))
            assert eig_union_matches(union, A_p + gamma)

    def test_rejects_wrong_structure(self):
        A_p = patch_jacobian(RATIO_EXAMPLE)
        bad = A_p.copy()
        bad[0, 2] = 0.5
        with pytest.raises(DomainError):
            block_factor(bad, np.zeros((4, 4)))
        gamma = gamma_matrix(patch_params(), EQ)
        gamma_bad = gamma.copy()
        gamma_bad[2, 0] *= -1.0
        with pytest.raises(DomainError):
            block_factor(A_p, gamma_bad)


class TestThm42:
    def test_velocity_bound_value(self):
        rep = check_thm42(RATIO_EXAMPLE, patch_params())
        assert rep.quantities["delta1_bound"] == pytest.approx(0.6125, abs=1e-15)
        assert rep.condition("p:5").holds
        assert rep.verdict == "stable"

    def test_sign_stability_flips_at_bound(self):
        below = check_thm42(RATIO_EXAMPLE, patch_params(delta1=0.6125 - 1e-3))
        above = check_thm42(RATIO_EXAMPLE, patch_params(delta1=0.6125 + 1e-3))
        assert below.condition("p:5").holds
        assert not above.condition("p:5").holds
        B_below = b_matrix(RATIO_EXAMPLE, patch_params(delta1=0.6125 - 1e-3))
        assert B_below[0, 0] < 0 and B_below[0, 1] < 0
        assert B_below[1, 0] > 0 and B_below[1, 1] < 0
        B_above = b_matrix(RATIO_EXAMPLE, patch_params(delta1=0.6125 + 1e-3))
        assert B_above[0, 1] > 0

    def test_constant_rho1_never_binds(self):
        q = PatchParams(5.0, 0.2, MigrationFunction.constant(), RHO2)
        rep = check_thm42(RATIO_EXAMPLE, q)
        assert rep.quantities["delta1_bound"] is None
        assert rep.condition("p:5").holds

    def test_zero_velocity_holds_trivially(self):
        rep = check_thm42(RATIO_EXAMPLE, patch_params(delta1=0.0))
        assert rep.condition("p:5").holds

    def test_conditions_imply_four_dim_stability(self):
        rng = np.random.default_rng(53)
        tried = 0
        while tried < 100:
            p = random_positive_kinetics(rng)
            q = patch_params(rng.uniform(0, 1.5), rng.uniform(0, 1.5),
                             rng.uniform(1.01, 6), rng.uniform(1.01, 6))
            rep = check_thm42(p, q)
            if not (rep.all_hold() and p.a > 1):
                continue
            eqm = interior_equilibrium("ratio", p).state
            full = patch_jacobian(p) + gamma_matrix(q, eqm)
            assert max(np.linalg.eigvals(full).real) < 0, f"counterexample {p} {q}"
            tried += 1


class TestThm43:
    def test_example_margins(self):
        rep = check_thm43(RATIO_EXAMPLE, patch_params())
        elasticity1 = (-1.0 / 12.25) * 5.0 / (4.5 / 3.5)
        elasticity2 = (-1.0 / 36.0) * 2.5 / (7.0 / 6.0)
        assert rep.quantities["elasticity_product"] == pytest.approx(
            elasticity1 * elasticity2, rel=1e-12)
        assert rep.condition("1.feltetel").holds
        cond2 = rep.condition("2.feltetelujalak")
        assert cond2.holds
        # -0.4 < rho1'/rho1 ~ -0.0635 at the equilibrium
        assert cond2.margin == pytest.approx((-(1 / 12.25) / (4.5 / 3.5) + 0.4) / 0.4, rel=1e-9)

    def test_constant_family_trivially_holds(self):
        q = PatchParams(1.0, 1.0, MigrationFunction.constant(), MigrationFunction.constant())
        rep = check_thm43(RATIO_EXAMPLE, q)
        assert rep.condition("1.feltetel").holds
        assert rep.condition("2.feltetelujalak").holds

    def test_rational_family_holds_automatically(self):
        # (alpha + w)/(1 + w) keeps rho'/rho above -1/(1+w) > -1/w, so the
        # labour-density bound can never fail, however large alpha gets
        rng = np.random.default_rng(61)
        for _ in range(100):
            p = random_positive_kinetics(rng)
            q = patch_params(rng.uniform(0, 2), rng.uniform(0, 2),
                             rng.uniform(1.01, 1e6), rng.uniform(1.01, 1e6))
            rep = check_thm43(p, q)
            assert rep.condition("1.feltetel").holds
            assert rep.condition("2.feltetelujalak").holds

    def test_steep_custom_migration_flips_density_bound(self):
        # an exponential migration profile can violate the bound; locate the
        # flip with a 1-D sweep over the decay rate
        def family(c):
            return MigrationFunction.custom(lambda w: math.exp(-c * w) + 0.05,
                                            lambda w: -c * math.exp(-c * w))

        margins = []
        for c in np.linspace(0.3, 0.7, 9):
            q = PatchParams(0.1, 0.1, family(c), RHO2)
            margins.append(check_thm43(RATIO_EXAMPLE, q).condition("2.feltetelujalak").margin)
        assert margins[0] > 0 > margins[-1]
        signs = np.sign(margins)
        assert np.count_nonzero(np.diff(signs)) == 1

    def test_conditions_force_positive_det_and_negative_diagonal(self):
        rng = np.random.default_rng(71)
        tried = 0
        while tried < 100:
            p = random_positive_kinetics(rng)
            q = patch_params(rng.uniform(0, 1.5), rng.uniform(0, 1.5),
                             rng.uniform(1.01, 6), rng.uniform(1.01, 6))
            rep = check_thm43(p, q)
            if not rep.all_hold():
                continue
            B = b_matrix(p, q)
            assert np.linalg.det(B) > 0
            assert B[0, 0] < 0 and B[1, 1] < 0
            eqm = interior_equilibrium("ratio", p).state
            full = patch_jacobian(p) + gamma_matrix(q, eqm)
            assert max(np.linalg.eigvals(full).real) < 0, f"counterexample {p} {q}"
            tried += 1

    def test_requires_interior_equilibrium(self):
        with pytest.raises(DomainError):
            check_thm43(KineticParams(r=1, K=10, m=1, d=2, a=2), patch_params())
