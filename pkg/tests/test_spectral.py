import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from levyhunt.errors import CapabilityError, ConvergenceError
from levyhunt.spectral import (
    decompose,
    jacobi_eigh,
    rotate_triplet,
    solve_condition_S,
    transform_triplet,
)
from levyhunt.triplet import Atomic, LevyTriplet, RadialPower, exponent, symmetric_stable

from conftest import random_psd


class TestDecomposeExamples:
    def test_identity(self):
        s = decompose(np.eye(3))
        np.testing.assert_array_equal(s.D, [1.0, 1.0, 1.0])
        assert s.k == 3
        np.testing.assert_allclose(s.sqrtA, np.eye(3), atol=1e-15)

    def test_diagonal_rank_one(self):
        s = decompose(np.diag([4.0, 0.0]))
        np.testing.assert_array_equal(s.D, [4.0, 0.0])
        assert s.k == 1
        np.testing.assert_allclose(s.sqrtA, np.diag([2.0, 0.0]), atol=1e-15)

    def test_two_by_two(self):
        s = decompose([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(s.D, [3.0, 1.0], rtol=1e-14)
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(s.O, [[r, r], [r, -r]], atol=1e-14)

    def test_zero_matrix(self):
        s = decompose(np.zeros((3, 3)))
        assert s.k == 0 and s.rank_tol == 0.0
        np.testing.assert_array_equal(s.range_basis.shape, (0, 3))

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            decompose([[1.0, 2.0], [0.0, 1.0]])

    def test_sweep_limit_reports_iterations(self, rng):
        A = random_psd(rng, 8)
        with pytest.raises(ConvergenceError) as info:
            jacobi_eigh(A, sweep_limit=1)
        assert info.value.iterations == 1

    def test_sign_convention(self, rng):
        s = decompose(random_psd(rng, 5))
        for row in s.O:
            assert row[np.flatnonzero(np.abs(row) > 1e-8)[0]] > 0


class TestInvariants:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 10), data=st.data())
    def test_type_invariants(self, seed, n, data):
        rank = data.draw(st.integers(0, n))
        rng = np.random.default_rng(seed)
        A = random_psd(rng, n, rank) * 10.0 ** rng.uniform(-3, 3)
        s = decompose(A)
        lam1 = max(s.D[0], 1e-300)
        np.testing.assert_allclose(s.O @ s.O.T, np.eye(n), atol=1e-10)
        np.testing.assert_allclose(s.O @ A @ s.O.T, np.diag(s.D), atol=1e-9 * lam1)
        np.testing.assert_allclose(s.sqrtA @ s.sqrtA, A, atol=1e-9 * lam1)
        np.testing.assert_allclose(s.O.T @ np.diag(s.D) @ s.O, A, atol=1e-9 * lam1)
        assert np.all(np.diff(s.D) <= 0)
        assert np.all(s.D[s.k:] <= s.rank_tol)
        assert s.k == rank
        np.testing.assert_allclose(s.D, np.sort(np.linalg.eigvalsh(A))[::-1].clip(0), atol=1e-9 * lam1)

    def test_projector_is_basis_independent(self, rng):
        # repeated eigenvalue: any basis of the eigenspace must give the same range
        Q = special_ortho_group.rvs(4, random_state=1)
        A = Q.T @ np.diag([2.0, 2.0, 0.0, 0.0]) @ Q
        B = np.diag([2.0, 2.0, 0.0, 0.0])
        sa, sb = decompose(A), decompose(B)
        np.testing.assert_allclose(sa.projector, Q.T @ sb.projector @ Q, atol=1e-12)
        x = rng.normal(size=(10, 4))
        np.testing.assert_array_equal(sa.in_range(x), sb.in_range(x @ Q.T))


class TestTransform:
    def test_identity_transform(self):
        t = LevyTriplet([1.0, 2.0], np.eye(2), Atomic([[1.0, 0.0]], [1.0]))
        s = decompose(t.A)
        assert transform_triplet(t, s) == t

    def test_atom_is_rotated(self):
        t = LevyTriplet([0.0, 0.0], [[2.0, 1.0], [1.0, 2.0]], Atomic([[1.0, 0.0]], [1.0]))
        y = transform_triplet(t, decompose(t.A))
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(y.mu.locations, [[r, r]], atol=1e-14)
        np.testing.assert_allclose(y.A, np.diag([3.0, 1.0]), atol=1e-14)

    @pytest.mark.parametrize("mu", [
        Atomic([[0.3, -0.2, 1.0], [2.0, 0.0, 0.1]], [1.0, 0.4]),
        RadialPower(3, 1.2, cutoff=2.0, directions=[[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]], weights=[1.0, 2.0]),
        RadialPower(3, 0.8),
    ])
    def test_exponent_consistency(self, rng, mu):
        t = LevyTriplet(rng.normal(size=3), random_psd(rng, 3, 2), mu)
        s = decompose(t.A)
        y = transform_triplet(t, s)
        z = rng.normal(size=(100, 3)) * 3
        np.testing.assert_allclose(exponent(y, z), exponent(t, z @ s.O), rtol=1e-10, atol=1e-12)
        back = rotate_triplet(y, s.O.T)
        np.testing.assert_allclose(exponent(back, z), exponent(t, z), rtol=1e-10, atol=1e-12)

    def test_exponent_only_rejected(self):
        with pytest.raises(CapabilityError):
            transform_triplet(symmetric_stable(1.0), decompose([[1.0]]))


class TestConditionS:
    @pytest.mark.parametrize("A, b, solvable, y", [
        (np.eye(2), [3.0, 4.0], True, [3.0, 4.0]),
        (np.diag([1.0, 0.0]), [0.0, 1.0], False, None),
        (np.diag([4.0, 0.0]), [6.0, 0.0], True, [3.0, 0.0]),
        (np.zeros((2, 2)), [0.0, 0.0], True, [0.0, 0.0]),
        (np.zeros((2, 2)), [1e-3, 0.0], False, None),
    ])
    def test_examples(self, A, b, solvable, y):
        res = solve_condition_S(decompose(A), b)
        assert res.solvable is solvable
        if solvable:
            np.testing.assert_allclose(res.y, y, atol=1e-14)
        else:
            assert res.y is None

    def test_unsolvable_residual(self):
        res = solve_condition_S(decompose(np.diag([1.0, 0.0])), [0.0, 1.0])
        assert res.residual == pytest.approx(1.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            solve_condition_S(decompose(np.eye(2)), [np.nan, 0.0])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), rank=st.integers(1, 3))
    def test_solvability_oracle(self, seed, rank):
        rng = np.random.default_rng(seed)
        A = random_psd(rng, 4, rank)
        s = decompose(A)
        inside = A @ rng.normal(size=4)
        res = solve_condition_S(s, inside)
        assert res.solvable and res.residual <= 1e-8 * (1 + np.linalg.norm(inside))
        # unit component orthogonal to range(A), found independently by SVD
        u, sv, _ = np.linalg.svd(A)
        w = u[:, rank:] @ rng.normal(size=4 - rank)
        w /= np.linalg.norm(w)
        res = solve_condition_S(s, inside + w)
        assert not res.solvable and res.residual >= 0.99

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_minimal_norm(self, seed):
        rng = np.random.default_rng(seed)
        A = random_psd(rng, 5, 3)
        s = decompose(A)
        res = solve_condition_S(s, A @ rng.normal(size=5))
        for _ in range(50):
            w = s.null_basis.T @ rng.normal(size=2)
            assert np.linalg.norm(res.y) <= np.linalg.norm(res.y + w) + 1e-9
            # null eigenvalues are rounding-sized, so sqrt(A) maps w to O(sqrt(eps)) |w|
            bound = 1e-7 * np.linalg.norm(s.sqrtA) * np.linalg.norm(w)
            np.testing.assert_allclose(s.sqrtA @ (res.y + w), s.sqrtA @ res.y, rtol=0, atol=bound)

    def test_matches_pseudoinverse(self, rng):
        A = random_psd(rng, 6, 4)
        s = decompose(A)
        b = A @ rng.normal(size=6)
        np.testing.assert_allclose(solve_condition_S(s, b).y, np.linalg.pinv(s.sqrtA, rcond=1e-8) @ b, rtol=1e-8)
