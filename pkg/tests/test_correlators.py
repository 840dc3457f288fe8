import numpy as np
import pytest

from loopsys.algebra import gl_representation, sl_representation, diagonal_cartan
from loopsys.correlators import (
    connected_w,
    det_w,
    full_w,
    kernel,
    kernel_normal,
    set_partitions,
    w_kn,
)
from loopsys.errors import CoincidentPoints, DistinctnessViolation
from loopsys.flatsection import FlatSolution, HiggsField, higgs_eval
from loopsys.geometry import DressedPoint, Path, cover_point

GL2 = gl_representation(2)
E11 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
E22 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def zero_solution(base=5.0):
    return FlatSolution(HiggsField(GL2, []), base_point=base)


def random_sl2_fuchsian(seed, scale=0.2):
    rng = np.random.default_rng(seed)
    rep = sl_representation(2)
    poles = []
    for loc in (-1.0, 0.5 + 0.8j, 1.2 - 0.4j):
        a = scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        a -= np.trace(a) / 2 * np.eye(2)
        poles.append((loc, (a,)))
    return FlatSolution(HiggsField(rep, poles), base_point=3.0)


def dress(sol, x, e):
    return DressedPoint(cover_point(sol.base_point, x), np.asarray(e, dtype=complex))


class TestKernel:
    def test_flat_kernel(self):
        sol = zero_solution()
        k = kernel(sol, cover_point(5.0, 1.0), cover_point(5.0, 3.0))
        assert np.allclose(k.value, np.eye(2) / (1.0 - 3.0), atol=1e-11)

    def test_diagonal_closed_form(self):
        h = HiggsField(GL2, [(0.0, (np.diag([1.0, -1.0]).astype(complex),))])
        sol = FlatSolution(h, base_point=1.0)
        k = kernel(sol, cover_point(1.0, 1.0), cover_point(1.0, 2.0))
        assert np.allclose(k.value, np.diag([2.0, 0.5]) / (-1.0), atol=1e-9)

    def test_coincident_raises(self):
        sol = zero_solution()
        pt = cover_point(5.0, 1.0)
        with pytest.raises(CoincidentPoints):
            kernel(sol, pt, cover_point(5.0, 1.0))

    def test_equal_projection_different_lift(self):
        sol = zero_solution()
        a = cover_point(5.0, 1.0)
        b = type(a)(Path((5.0, 4.0 + 1j, 1.0)))
        with pytest.raises(DistinctnessViolation):
            kernel(sol, a, b)

    def test_inverse_product_identity(self):
        sol = random_sl2_fuchsian(0)
        a = cover_point(3.0, 2.0 + 1j)
        b = cover_point(3.0, -2.0 + 0.5j)
        kab = kernel(sol, a, b).value
        kba = kernel(sol, b, a).value
        ea = (a.projection - b.projection) * (b.projection - a.projection)
        assert np.allclose(kab @ kba * ea, np.eye(2), atol=1e-9)


class TestKernelNormal:
    def test_coincident_value(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        h = HiggsField(GL2, [(0.0, (a,))])
        sol = FlatSolution(h, base_point=2.0)
        pt = cover_point(2.0, 2.0)
        k = kernel_normal(sol, pt, pt)
        psi, psi_inv = sol.psi_at(pt)
        assert np.allclose(k.value, psi_inv @ (a / 2.0) @ psi, atol=1e-10)
        assert np.allclose(k.value, a / 2.0, atol=1e-10)  # trivial path: Psi = Id

    def test_coincident_flat_zero(self):
        sol = zero_solution()
        pt = cover_point(5.0, 1.0)
        assert np.allclose(kernel_normal(sol, pt, pt).value, np.zeros((2, 2)))

    def test_distinct_matches_kernel(self):
        sol = random_sl2_fuchsian(1)
        a = cover_point(3.0, 2.0 + 1j)
        b = cover_point(3.0, -2.0 + 0.5j)
        assert np.allclose(
            kernel_normal(sol, a, b).value, kernel(sol, a, b).value
        )


class TestConnected:
    def test_flat_w1_vanishes(self):
        sol = zero_solution()
        assert connected_w(sol, dress(sol, 1.0, E11)).value == pytest.approx(0.0)

    def test_flat_w2_value(self):
        sol = zero_solution()
        x1 = dress(sol, 0.0, E11)
        x2 = dress(sol, 1.0, E11)
        # -Tr(E11 E11) / ((x1-x2)(x2-x1)) = 1
        assert connected_w(sol, x1, x2).value == pytest.approx(1.0, abs=1e-10)

    def test_diagonal_w1(self):
        a, b = 0.7, -0.4
        h = HiggsField(GL2, [(0.0, (np.diag([a, b]).astype(complex),))])
        sol = FlatSolution(h, base_point=1.0)
        val = connected_w(sol, dress(sol, 1.0, E11)).value
        assert val == pytest.approx(a, abs=1e-10)

    def test_symmetry(self):
        sol = random_sl2_fuchsian(2)
        pts = [
            dress(sol, 2.0 + 1j, np.diag([1.0, -1.0])),
            dress(sol, -2.0 + 0.5j, np.array([[0.0, 1.0], [0.5, 0.0]])),
            dress(sol, 2.5 - 1j, np.array([[0.2, 0.0], [1.0, -0.2]])),
        ]
        ref2 = connected_w(sol, pts[0], pts[1]).value
        assert connected_w(sol, pts[1], pts[0]).value == pytest.approx(ref2, rel=1e-10)
        ref3 = connected_w(sol, *pts).value
        for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
            val = connected_w(sol, *(pts[i] for i in perm)).value
            assert val == pytest.approx(ref3, rel=1e-10, abs=1e-12)

    def test_multilinearity(self):
        sol = random_sl2_fuchsian(3)
        rng = np.random.default_rng(4)
        e1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        e2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        other = dress(sol, -2.0 + 0.5j, np.diag([1.0, -1.0]))
        alpha, beta = 0.3 - 1j, 2.2
        combo = dress(sol, 2.0 + 1j, alpha * e1 + beta * e2)
        lhs = connected_w(sol, combo, other).value
        rhs = (
            alpha * connected_w(sol, dress(sol, 2.0 + 1j, e1), other).value
            + beta * connected_w(sol, dress(sol, 2.0 + 1j, e2), other).value
        )
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_distinctness_guard(self):
        sol = zero_solution()
        with pytest.raises(DistinctnessViolation):
            connected_w(sol, dress(sol, 1.0, E11), dress(sol, 1.0, E22))

    def test_w2_diagonal_normalization(self):
        # flat system: W2hat = Tr(E1 E2)/(x1-x2)^2 exactly, also as x2 -> x1
        sol = zero_solution()
        rng = np.random.default_rng(5)
        e1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        e2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        for gap in (1.0, 1e-2, 1e-4):
            x1, x2 = 0.3, 0.3 + gap
            val = connected_w(sol, dress(sol, x1, e1), dress(sol, x2, e2)).value
            want = np.trace(e1 @ e2) / (x1 - x2) ** 2
            assert val == pytest.approx(want, rel=1e-12)


class TestFull:
    def test_partition_counts(self):
        assert len(list(set_partitions([0]))) == 1
        assert len(list(set_partitions([0, 1]))) == 2
        assert len(list(set_partitions([0, 1, 2]))) == 5
        assert len(list(set_partitions(list(range(4))))) == 15

    def test_w2_structure(self):
        sol = random_sl2_fuchsian(6)
        x1 = dress(sol, 2.0 + 1j, np.diag([1.0, -1.0]))
        x2 = dress(sol, -2.0 + 0.5j, np.array([[0.0, 1.0], [1.0, 0.0]]))
        lhs = full_w(sol, x1, x2).value
        rhs = (
            connected_w(sol, x1).value * connected_w(sol, x2).value
            + connected_w(sol, x1, x2).value
        )
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_flat_w2(self):
        sol = zero_solution()
        x1 = dress(sol, 0.0, E11)
        x2 = dress(sol, 1.0, E11)
        assert full_w(sol, x1, x2).value == pytest.approx(1.0, abs=1e-10)


class TestDeterminantal:
    def test_n1_equals_connected(self):
        sol = random_sl2_fuchsian(7)
        x1 = dress(sol, 2.0 + 1j, np.diag([1.0, -1.0]))
        assert det_w(sol, [x1]).value == pytest.approx(
            connected_w(sol, x1).value, rel=1e-12
        )

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_full(self, n):
        sol = random_sl2_fuchsian(8)
        rng = np.random.default_rng(20 + n)
        xs = [2.0 + 1j, -2.2 + 0.6j, 2.4 - 1.1j, -1.8 + 2.2j][:n]
        pts = [
            dress(sol, x, rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
            for x in xs
        ]
        lhs = det_w(sol, pts).value
        rhs = full_w(sol, *pts).value
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_flat_n3(self):
        sol = zero_solution()
        pts = [dress(sol, x, E11) for x in (0.0, 1.0, 2.0)]
        assert det_w(sol, pts).value == pytest.approx(
            full_w(sol, *pts).value, rel=1e-10, abs=1e-12
        )

    def test_gauge_invariance(self):
        higgs = random_sl2_fuchsian(9).higgs
        rng = np.random.default_rng(10)
        c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) + 3 * np.eye(2)
        cinv = np.linalg.inv(c)
        sol_id = FlatSolution(higgs, base_point=3.0)
        sol_c = FlatSolution(higgs, base_point=3.0, base_value=c)
        es = [np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])]
        xs = [2.0 + 1j, -2.0 + 0.5j]
        pts_id = [dress(sol_id, x, e) for x, e in zip(xs, es)]
        pts_c = [dress(sol_c, x, cinv @ e @ c) for x, e in zip(xs, es)]
        ref = det_w(sol_id, pts_id).value
        val = det_w(sol_c, pts_c).value
        assert val == pytest.approx(ref, rel=1e-8, abs=1e-10)


class TestWkn:
    def test_k0_is_full(self):
        sol = random_sl2_fuchsian(11)
        x_t = cover_point(3.0, 1.4 + 1.8j)
        pts = [
            dress(sol, 2.0 + 1j, np.diag([1.0, -1.0])),
            dress(sol, -2.0 + 0.5j, np.array([[0.0, 1.0], [1.0, 0.0]])),
        ]
        val = w_kn(sol, x_t, 0, *pts).value
        assert val == pytest.approx(full_w(sol, *pts).value, rel=1e-10)

    def test_top_degree_is_det_phi(self):
        # k = r, n = 0: the Casimir-weighted sum gives the determinant of Phi
        sol = random_sl2_fuchsian(12)
        x = 1.7 + 1.2j
        val = w_kn(sol, cover_point(3.0, x), 2).value
        phi = higgs_eval(sol.higgs, x)
        assert val == pytest.approx(complex(np.linalg.det(phi)), rel=1e-8)

    def test_gl2_linear_sum_matches_w2(self):
        # k=1, n=1 with the diagonal Cartan equals sum_i W2(x~.E_ii, X1)
        sol = random_sl2_fuchsian(13)
        x_t = cover_point(3.0, 1.4 + 1.8j)
        x1 = dress(sol, -2.0 + 0.5j, E11)
        val = w_kn(sol, x_t, 1, x1).value
        direct = sum(
            full_w(sol, DressedPoint(x_t, e), x1).value for e in (E11, E22)
        )
        assert val == pytest.approx(direct, rel=1e-9)

    def test_insertion_collision_rejected(self):
        sol = random_sl2_fuchsian(14)
        with pytest.raises(DistinctnessViolation):
            w_kn(sol, cover_point(3.0, -2.0 + 0.5j), 1, dress(sol, -2.0 + 0.5j, E11))

    def test_linked_k0(self):
        sol = random_sl2_fuchsian(15)
        x_t = cover_point(3.0, 1.4 + 1.8j)
        assert w_kn(sol, x_t, 0, linked_only=True).value == 1.0
        pt = dress(sol, -2.0 + 0.5j, E11)
        assert w_kn(sol, x_t, 0, pt, linked_only=True).value == 0.0
