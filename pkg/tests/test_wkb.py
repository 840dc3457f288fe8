import numpy as np
import pytest
from scipy.integrate import solve_ivp

from loopsys.algebra import gl_representation
from loopsys.errors import RamificationHit, SingularJ
from loopsys.flatsection import HiggsField
from loopsys.wkb import (
    HbarFamily,
    correlator_expansion,
    parity_test,
    spectral_curve,
    tt_checks,
    wkb_expand,
)

GL2 = gl_representation(2)
E11 = np.diag([1.0, 0.0]).astype(complex)
E22 = np.diag([0.0, 1.0]).astype(complex)


def airy_family():
    return HbarFamily(
        [
            HiggsField(
                GL2,
                [],
                poly_part=(
                    np.array([[0.0, 1.0], [0.0, 0.0]]),
                    np.array([[0.0, 0.0], [1.0, 0.0]]),
                ),
            )
        ]
    )


def diagonal_family(a=0.7, b=-0.3):
    return HbarFamily(
        [HiggsField(GL2, [], poly_part=(np.diag([a, b]).astype(complex),))]
    )


class TestSpectralCurve:
    def test_airy(self):
        curve = spectral_curve(airy_family())
        # P(x, y) = y^2 - x
        assert np.allclose(curve.num_coeffs[0], [1.0])
        assert abs(curve.y_coefficient(1, 1.7)) < 1e-12
        assert curve.y_coefficient(2, 1.7) == pytest.approx(-1.7, abs=1e-12)
        assert abs(curve.eval(4.0, 2.0)) < 1e-12
        assert len(curve.ramification_candidates) == 1
        assert abs(curve.ramification_candidates[0]) < 1e-9

    def test_diagonal(self):
        curve = spectral_curve(diagonal_family(0.7, -0.3))
        # (y - 0.7)(y + 0.3)
        for x in (0.5, 2.0 + 1j):
            assert abs(curve.eval(x, 0.7)) < 1e-12
            assert abs(curve.eval(x, -0.3)) < 1e-12

    def test_symmetric_pole(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        fam = HbarFamily([HiggsField(GL2, [(0.0, (a,))])])
        curve = spectral_curve(fam)
        # det(y - A/x) = y^2 - 1/x^2
        for x in (2.0, -1.5 + 1j):
            assert curve.eval(x, 1.0 / x) == pytest.approx(0.0, abs=1e-12)

    def test_eigenvalues_are_roots(self):
        rng = np.random.default_rng(0)
        a = 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        b = 0.2 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        fam = HbarFamily([HiggsField(GL2, [(0.5, (a,)), (-1.2, (b,))])])
        curve = spectral_curve(fam)
        from loopsys.flatsection import higgs_eval

        for _ in range(50):
            x = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            if min(abs(x - 0.5), abs(x + 1.2)) < 0.3:
                continue
            for lam in np.linalg.eigvals(higgs_eval(fam.leading, x)):
                assert abs(curve.eval(x, lam)) < 1e-9 * max(1.0, abs(lam) ** 2)


class TestWkbExpand:
    def test_order_zero_is_identity(self):
        sol = wkb_expand(airy_family(), 2, [1.0], anchor=2.0, n_nodes=128)
        assert np.allclose(sol.data(1.0).psi_orders[0], np.eye(2))

    def test_diagonal_family_vanishes(self):
        sol = wkb_expand(diagonal_family(), 3, [1.5], anchor=0.2, n_nodes=64)
        pt = sol.data(1.5)
        for k in (1, 2, 3):
            assert np.linalg.norm(pt.psi_orders[k]) < 1e-12

    def test_frame_reconstructs_leading_order(self):
        sol = wkb_expand(airy_family(), 1, [1.0, 1.5], anchor=2.0, n_nodes=128)
        for x in (1.0, 1.5):
            pt = sol.data(x)
            recon = pt.v @ np.diag(pt.t_prime) @ pt.v_inv
            want = np.array([[0.0, 1.0], [x, 0.0]])
            assert np.linalg.norm(recon - want) < 1e-10

    def test_ramification_hit(self):
        with pytest.raises(RamificationHit):
            wkb_expand(airy_family(), 1, [-1.0], anchor=1.0, n_nodes=64)

    def test_series_inverse_consistency(self):
        sol = wkb_expand(airy_family(), 3, [1.2], anchor=2.0, n_nodes=256)
        from loopsys.wkb import _series_inverse

        orders = sol.data(1.2).psi_orders
        inv = _series_inverse(orders)
        for k in range(4):
            acc = sum(orders[l] @ inv[k - l] for l in range(k + 1))
            want = np.eye(2) if k == 0 else np.zeros((2, 2))
            assert np.linalg.norm(acc - want) < 1e-10

    def test_hbar_fit_oracle(self):
        """Recessive column of the exact flow matches orders 1 and 2."""
        K = 3
        sol = wkb_expand(airy_family(), K, [1.0, 2.0], anchor=2.0, n_nodes=800)
        pa, p1 = sol.data(2.0), sol.data(1.0)

        def phi(x):
            return np.array([[0.0, 1.0], [x, 0.0]], dtype=complex)

        # integrate the lam_0-rescaled column (the one whose companion
        # solution decays along 2 -> 1, so truncation error is not blown up)
        hbars = [1e-2, 5e-3, 2.5e-3]
        cols = []
        for hb in hbars:
            y0 = (pa.v @ sum(hb ** k * pa.psi_orders[k] for k in range(K + 1)))[:, 0]

            def rhs(t, y):
                x = 2.0 - t
                lam0 = -np.sqrt(x)
                return (-(phi(x) - lam0 * np.eye(2)) @ y) / hb

            s = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=1e-12, atol=1e-14)
            w = s.y[:, -1]
            cols.append(p1.v_inv @ w)

        a = np.array([[hb, hb ** 2, hb ** 3] for hb in hbars])
        rhs_fit = np.stack([c - np.array([1.0, 0.0]) for c in cols])
        coeffs = np.linalg.solve(a, rhs_fit)
        assert np.abs(coeffs[0] - p1.psi_orders[1][:, 0]).max() < 1e-4
        assert np.abs(coeffs[1] - p1.psi_orders[2][:, 0]).max() < 1e-4

    def test_defect_slope(self):
        """Residual of the truncated series scales like h^(K+1)."""
        K = 2
        fam = airy_family()
        sol = wkb_expand(fam, K + 1, [1.3], anchor=2.0, n_nodes=512)
        grid = sol.grids[1.3]
        j = len(grid.ts) // 2
        hbars = np.array([1e-2, 5e-3, 2.5e-3])
        defects = []
        for hb in hbars:
            psi = sum(hb ** k * grid.psi[k][j] for k in range(K + 1))
            dpsi = sum(hb ** k * grid.dpsi[k][j] for k in range(K + 1))
            xi = np.diag(grid.lam[j]).astype(complex)
            for l in range(1, len(grid.a_orders) + 1):
                xi = xi + hb ** l * grid.a_orders[l - 1][j]
            xi = xi - hb * grid.g[j]
            res = hb * dpsi - xi @ psi + psi @ np.diag(grid.lam[j])
            defects.append(np.linalg.norm(res))
        slope = np.polyfit(np.log(hbars), np.log(defects), 1)[0]
        assert slope >= K + 0.5


class TestCorrelatorExpansion:
    def test_one_point_leading(self):
        sol = wkb_expand(airy_family(), 2, [1.0], anchor=2.0, n_nodes=256)
        exp = correlator_expansion(sol, [1.0], [E11], 2)
        pt = sol.data(1.0)
        want = pt.t_prime[0]  # <T'(x), E11> picks the first eigenvalue
        assert exp[-1] == pytest.approx(want, rel=1e-10)

    def test_m_leading_order(self):
        sol = wkb_expand(airy_family(), 1, [1.1], anchor=2.0, n_nodes=128)
        pt = sol.data(1.1)
        m0 = sol.m_orders(1.1, E22)[0]
        assert np.allclose(m0, pt.v @ E22 @ pt.v_inv)

    def test_diagonal_family_two_point(self):
        sol = wkb_expand(diagonal_family(), 2, [1.0, 1.5], anchor=0.2, n_nodes=64)
        exp = correlator_expansion(sol, [1.0, 1.5], [E11, E11], 2)
        # frame sorts eigenvalues; E11 tracks one sheet either way
        want = 1.0 / (1.0 - 1.5) ** 2
        assert exp[0] == pytest.approx(want, rel=1e-10)
        assert abs(exp[1]) < 1e-12
        assert abs(exp[2]) < 1e-12

    def test_w2_leading_matches_pairing_normalization(self):
        sol = wkb_expand(diagonal_family(), 1, [1.0, 1.5], anchor=0.2, n_nodes=64)
        mixed = correlator_expansion(sol, [1.0, 1.5], [E11, E22], 1)
        # Tr(E11 E22) = 0 kills the leading order on distinct sheets
        assert abs(mixed[0]) < 1e-13


class TestParity:
    def test_airy_antidiagonal(self):
        assert parity_test(airy_family(), np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_identity_fails_for_nonsymmetric(self):
        assert not parity_test(airy_family(), np.eye(2))

    def test_singular_j(self):
        with pytest.raises(SingularJ):
            parity_test(airy_family(), np.zeros((2, 2)))

    def test_even_order_violation(self):
        # a family with an hbar^1 term symmetric under J breaks parity
        j = np.array([[0.0, 1.0], [1.0, 0.0]])
        base = airy_family().orders[0]
        sym = HiggsField(GL2, [], poly_part=(np.array([[0.0, 1.0], [1.0, 0.0]]),))
        fam = HbarFamily([base, sym])
        assert not parity_test(fam, j)
        # while an antisymmetric odd-order term keeps it
        h = np.diag([1.0, -1.0]).astype(complex)
        odd_ok = HiggsField(GL2, [], poly_part=(h,))
        assert parity_test(HbarFamily([base, odd_ok]), j)


class TestTTChecks:
    def test_airy_passes(self):
        fam = airy_family()
        sol = wkb_expand(fam, 3, [1.0, 1.3, 1.7], anchor=2.0, n_nodes=400)
        report = tt_checks(sol, n_max=3)
        by_name = {c.name: c for c in report.conditions}
        assert by_name["parity-pattern"].passed
        assert by_name["leading-order"].passed
        assert by_name["asymptotic-expansion"].kind == "info"
        assert by_name["pole-structure"].kind == "info"
        assert report.passed

    def test_diagonal_family_trivial(self):
        sol = wkb_expand(diagonal_family(), 2, [1.0, 1.5], anchor=0.2, n_nodes=64)
        report = tt_checks(sol, n_max=2)
        assert report.passed

    def test_wgn_reindexing(self):
        # surviving orders sit at k = 2g - 2 + n with g >= 0
        fam = airy_family()
        sol = wkb_expand(fam, 3, [1.0, 1.4], anchor=2.0, n_nodes=400)
        exp = correlator_expansion(sol, [1.0, 1.4], [E11, E22], 3)
        allowed = {0, 2}  # n = 2: k in {2g | g >= 0}
        scale = max(abs(v) for v in exp.values())
        for k, val in exp.items():
            if k >= 0 and k not in allowed:
                assert abs(val) < 1e-8 * max(1.0, scale)
