"""Supermatrix product signs, OSp membership, named elements, serialization."""

import numpy as np
import pytest

from superteich.grassmann import GrassmannNumber, random_element
from superteich import superlinalg as sl

RANK = 8


def rng():
    return np.random.default_rng(7)


def odd(r, terms=2):
    return random_element(r, RANK, parity="odd", terms=terms)


def even(r, body=None, terms=3):
    return random_element(r, RANK, parity="even", terms=terms, body=body)


def random_parity_matrix(r):
    """Random parity-structured 3x3 (not a group member)."""
    e = lambda: even(r, body=r.normal())
    o = lambda: odd(r)
    return sl.SuperMatrix([[e(), e(), o()], [e(), e(), o()], [o(), o(), e()]], RANK)


# entrywise transcription of the 3x3 signed product used to cross-check smul
def transcribed_product(g, h):
    (a1, b1, al1), (c1, d1, be1), (ga1, de1, f1) = g.rows
    (a2, b2, al2), (c2, d2, be2), (ga2, de2, f2) = h.rows
    return sl.SuperMatrix(
        [
            [a1 * a2 + b1 * c2 - al1 * ga2, a1 * b2 + b1 * d2 - al1 * de2, a1 * al2 + b1 * be2 + al1 * f2],
            [c1 * a2 + d1 * c2 - be1 * ga2, c1 * b2 + d1 * d2 - be1 * de2, c1 * al2 + d1 * be2 + be1 * f2],
            [ga1 * a2 + de1 * c2 + f1 * ga2, ga1 * b2 + de1 * d2 + f1 * de2, -ga1 * al2 - de1 * be2 + f1 * f2],
        ],
        RANK,
    )


class TestProduct:
    def test_identity_is_neutral(self):
        r = rng()
        for _ in range(5):
            g = sl.random_osp(r, RANK)
            assert sl.smul(sl.identity(RANK), g).isclose(g, 1e-12)
            assert sl.smul(g, sl.identity(RANK)).isclose(g, 1e-12)

    def test_matches_entrywise_transcription(self):
        r = rng()
        for _ in range(10):
            g, h = random_parity_matrix(r), random_parity_matrix(r)
            assert sl.smul(g, h).isclose(transcribed_product(g, h), 1e-12)

    def test_reflection_is_involution(self):
        gr = sl.fermionic_reflection(RANK)
        assert sl.smul(gr, gr).isclose(sl.identity(RANK), 1e-15)

    def test_associative(self):
        r = rng()
        g, h, k = (random_parity_matrix(r) for _ in range(3))
        assert sl.smul(sl.smul(g, h), k).isclose(sl.smul(g, sl.smul(h, k)), 1e-10)


class TestSupertranspose:
    def test_identity(self):
        assert sl.supertranspose(sl.identity(RANK)).isclose(sl.identity(RANK))

    def test_layout(self):
        r = rng()
        g = random_parity_matrix(r)
        (a, b, al), (c, d, be), (ga, de, f) = g.rows
        st = sl.supertranspose(g)
        want = sl.SuperMatrix([[a, c, ga], [b, d, de], [-al, -be, f]], RANK)
        assert st.isclose(want, 0)

    def test_order_four(self):
        r = rng()
        g = sl.random_osp(r, RANK)
        st2 = sl.supertranspose(sl.supertranspose(g))
        assert not st2.isclose(g, 1e-12)  # odd entries flip sign
        st4 = sl.supertranspose(sl.supertranspose(st2))
        assert st4.isclose(g, 1e-15)

    def test_antihomomorphism(self):
        r = rng()
        for _ in range(5):
            g, h = sl.random_osp(r, RANK), sl.random_osp(r, RANK)
            lhs = sl.supertranspose(sl.smul(g, h))
            rhs = sl.smul(sl.supertranspose(h), sl.supertranspose(g))
            assert lhs.isclose(rhs, 1e-10)


class TestSdet:
    def test_identity(self):
        assert (sl.sdet(sl.identity(RANK)) - 1).is_zero(1e-15)

    def test_invariant_quadratic_form_matrix(self):
        # sdet of the symmetric-form matrix with the y -/+ c split equals
        # (x1 x2 - y^2 + 2 phi theta + c^2)/c
        r = rng()
        for c in (1.0, 0.5, 3.0):
            x1, x2, y = even(r, 1.2), even(r, 0.7), even(r, -0.4)
            phi, theta = odd(r), odd(r)
            m = sl.SuperMatrix(
                [[x1, y - c, phi], [y + c, x2, theta], [-phi, -theta, c]], RANK
            )
            rhs = (x1 * x2 - y * y + 2 * phi * theta + c * c) * (1.0 / c)
            assert (sl.sdet(m) - rhs).is_zero(1e-10)

    def test_multiplicative(self):
        r = rng()
        for _ in range(5):
            g, h = sl.random_osp(r, RANK), sl.random_osp(r, RANK)
            lhs = sl.sdet(sl.smul(g, h))
            assert (lhs - sl.sdet(g) * sl.sdet(h)).is_zero(1e-10)

    def test_zero_body_f_rejected(self):
        m = sl.SuperMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 0]], RANK)
        with pytest.raises(ZeroDivisionError):
            sl.sdet(m)


class TestMembership:
    def test_identity_and_named_elements(self):
        r = rng()
        assert sl.is_osp(sl.identity(RANK))
        assert sl.is_osp(sl.fermionic_reflection(RANK))
        assert sl.is_osp(sl.rotate90(RANK))
        assert sl.is_osp(sl.diag(2.0, 0.5, RANK))
        assert sl.is_osp(sl.stabilizer(r.normal(), odd(r), odd(r)))
        assert sl.is_osp(sl.gt(1.8, odd(r), odd(r)))
        assert sl.is_osp(sl.exp_odd_plus(odd(r)))
        assert sl.is_osp(sl.exp_odd_minus(odd(r)))

    def test_perturbed_member_rejected(self):
        r = rng()
        g = sl.random_osp(r, RANK)
        g.rows[0][1] = g.rows[0][1] + 1e-3
        assert not sl.is_osp(g, 1e-9)
        assert sl.osp_residual(g) > 1e-5

    def test_parity_violation_rejected(self):
        g = sl.identity(RANK)
        g.rows[0][0] = g.rows[0][0] + GrassmannNumber.generator(1, RANK) * 1e-3
        assert not sl.is_osp(g)

    def test_closure(self):
        r = rng()
        for _ in range(10):
            g, h = sl.random_osp(r, RANK), sl.random_osp(r, RANK)
            assert sl.osp_residual(sl.smul(g, h)) < 1e-9

    def test_nontrivial_diag_rejected(self):
        assert not sl.is_osp(sl.diag(2.0, 1.0, RANK))


class TestInverse:
    def test_identity(self):
        assert sl.inverse_osp(sl.identity(RANK)).isclose(sl.identity(RANK))

    def test_reflection(self):
        gr = sl.fermionic_reflection(RANK)
        assert sl.inverse_osp(gr).isclose(gr, 1e-15)

    def test_round_trip(self):
        r = rng()
        for _ in range(8):
            g = sl.random_osp(r, RANK)
            gi = sl.inverse_osp(g)
            assert sl.smul(g, gi).isclose(sl.identity(RANK), 1e-10)
            assert sl.smul(gi, g).isclose(sl.identity(RANK), 1e-10)

    def test_j_relations(self):
        r = rng()
        J, Ji = sl.j_matrix(RANK), sl.j_inverse(RANK)
        assert sl.smul(J, Ji).isclose(sl.identity(RANK))
        # J^{-1} = -J except the corner entry
        mJ = sl.SuperMatrix([[0, -1, 0], [1, 0, 0], [0, 0, -1]], RANK)
        assert Ji.isclose(mJ, 0)
        for _ in range(5):
            g = sl.random_osp(r, RANK)
            lhs = sl.smul_many(J, sl.inverse_osp(g), Ji)
            assert lhs.isclose(sl.supertranspose(g), 1e-10)


class TestBosonicReduction:
    def test_identity(self):
        np.testing.assert_allclose(sl.bosonic_reduction(sl.identity(RANK)), np.eye(2))

    def test_reflection_is_minus_identity(self):
        np.testing.assert_allclose(
            sl.bosonic_reduction(sl.fermionic_reflection(RANK)), -np.eye(2)
        )

    def test_determinant_one(self):
        r = rng()
        for _ in range(10):
            g = sl.random_osp(r, RANK)
            assert abs(np.linalg.det(sl.bosonic_reduction(g)) - 1) < 1e-9


class TestNamedElements:
    def test_gt_at_unit_params(self):
        want = sl.SuperMatrix([[0, -1, 0], [1, 1, 0], [0, 0, 1]], RANK)
        z = GrassmannNumber(RANK)
        assert sl.gt(1.0, z, z).isclose(want, 1e-15)

    def test_diag_sdet_one(self):
        t = 2.7
        g = sl.diag(np.sqrt(t), 1 / np.sqrt(t), RANK)
        assert (sl.sdet(g) - 1).is_zero(1e-12)

    def test_stabilizer_family_closed_at_theta_zero(self):
        r = rng()
        z = GrassmannNumber(RANK)
        g1 = sl.stabilizer(r.normal(), odd(r), z)
        g2 = sl.stabilizer(r.normal(), odd(r), z)
        prod = sl.smul(g1, g2)
        # the product is again of the theta=0 stabilizer shape
        c, beta = prod.rows[1][0], prod.rows[1][2]
        assert prod.isclose(sl.stabilizer(c, beta, z), 1e-12)

    def test_sl2_embed(self):
        m = [[1.0, 2.0], [0.5, 2.0]]  # det 1
        assert sl.is_osp(sl.sl2_embed(m, RANK))
        assert sl.is_osp(sl.upper_shear(0.3, RANK))
        assert sl.is_osp(sl.lower_shear(-1.2, RANK))


class TestSerialization:
    def test_round_trip(self):
        r = rng()
        g = sl.random_osp(r, RANK)
        text = sl.format_supermatrix(g)
        back = sl.parse_supermatrix(text, RANK)
        assert back.isclose(g, 1e-12)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            sl.parse_supermatrix("1 | 0\n0 | 1", RANK)
        with pytest.raises(ValueError):
            sl.parse_supermatrix("1 | 0 | 0", RANK)
