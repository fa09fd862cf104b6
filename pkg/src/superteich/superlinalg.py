"""(2|1)x(2|1) supermatrices and the supergroup OSp(1|2).

Layout is fixed as rows (a b | alpha / c d | beta / gamma delta | f) with the
2x2 block and f even, the remaining entries odd.  Products carry the signs of
the super tensor structure (see smul); the supertranspose is NOT an involution
on odd entries, st has order 4.

Membership: g is in OSp(1|2) when st(g) J g = J and sdet(g) = 1, where

    J = (0 1 0 / -1 0 0 / 0 0 -1)

and sdet uses the det(A + B D^-1 C) / det(D) convention (plus sign).
"""

import numpy as np

from .grassmann import DEFAULT_RANK, GrassmannNumber, grassmann, format_grassmann, parse_grassmann

# slots holding even entries; the complement is odd
_EVEN_SLOTS = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 2))


class SuperMatrix:
    """3x3 matrix of GrassmannNumbers with the even|odd block layout."""

    __slots__ = ("rank", "rows")

    def __init__(self, rows, rank=None):
        flat = [e for row in rows for e in row]
        if len(flat) != 9:
            raise ValueError("SuperMatrix needs a 3x3 entry grid")
        if rank is None:
            for e in flat:
                if isinstance(e, GrassmannNumber):
                    rank = e.rank
                    break
            else:
                rank = DEFAULT_RANK
        self.rank = rank
        self.rows = [[grassmann(e, rank) for e in row] for row in rows]
        for row in self.rows:
            for e in row:
                if e.rank != rank:
                    raise ValueError("rank mismatch in SuperMatrix entries")

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]

    def __mul__(self, other):
        if isinstance(other, SuperMatrix):
            return smul(self, other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return all(self.rows[i][j] == other.rows[i][j] for i in range(3) for j in range(3))

    __hash__ = None

    def isclose(self, other, tol=1e-9):
        return all(
            self.rows[i][j].isclose(other.rows[i][j], tol) for i in range(3) for j in range(3)
        )

    def max_coeff_diff(self, other):
        return max(
            float(np.max(np.abs(self.rows[i][j].coeffs - other.rows[i][j].coeffs)))
            for i in range(3)
            for j in range(3)
        )

    def scale(self):
        return max(self.rows[i][j].max_abs() for i in range(3) for j in range(3))

    def parity_violation(self):
        """Largest coefficient sitting in the wrong parity sector of any entry."""
        worst = 0.0
        for i in range(3):
            for j in range(3):
                e = self.rows[i][j]
                bad = e.odd_part() if (i, j) in _EVEN_SLOTS else e.even_part()
                worst = max(worst, bad.max_abs())
        return worst

    def __str__(self):
        return format_supermatrix(self)

    def __repr__(self):
        return "SuperMatrix(\n%s\n)" % format_supermatrix(self)


def smul(g, h):
    """Signed product: odd rows of g pick up a sign against the odd column of h.

    With blocks g = (A B / C D), h = (A' B' / C' D') (D the 1x1 corner):
    out = (AA' - BC', AB' + BD' / CA' + DC', DD' - CB').
    """
    if g.rank != h.rank:
        raise ValueError("rank mismatch")
    a, b = g.rows, h.rows
    out = [[None] * 3 for _ in range(3)]
    for i in range(2):
        for j in range(2):
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] - a[i][2] * b[2][j]
        out[i][2] = a[i][0] * b[0][2] + a[i][1] * b[1][2] + a[i][2] * b[2][2]
    for j in range(2):
        out[2][j] = a[2][0] * b[0][j] + a[2][1] * b[1][j] + a[2][2] * b[2][j]
    out[2][2] = a[2][2] * b[2][2] - a[2][0] * b[0][2] - a[2][1] * b[1][2]
    return SuperMatrix(out, g.rank)


def smul_many(*gs):
    """Product g1 * g2 * ... (left to right)."""
    out = gs[0]
    for g in gs[1:]:
        out = smul(out, g)
    return out


def supertranspose(g):
    r = g.rows
    return SuperMatrix(
        [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [-r[0][2], -r[1][2], r[2][2]],
        ],
        g.rank,
    )


def sdet(g):
    """Superdeterminant with the det(A + B D^-1 C)/det(D) convention."""
    r = g.rows
    finv = r[2][2].inverse()
    m00 = r[0][0] + r[0][2] * finv * r[2][0]
    m01 = r[0][1] + r[0][2] * finv * r[2][1]
    m10 = r[1][0] + r[1][2] * finv * r[2][0]
    m11 = r[1][1] + r[1][2] * finv * r[2][1]
    return (m00 * m11 - m01 * m10) * finv


def j_matrix(rank=DEFAULT_RANK):
    return SuperMatrix([[0, 1, 0], [-1, 0, 0], [0, 0, -1]], rank)


def j_inverse(rank=DEFAULT_RANK):
    return SuperMatrix([[0, -1, 0], [1, 0, 0], [0, 0, -1]], rank)


def osp_residual(g):
    """Scale-free residual of the membership conditions (0 for exact members)."""
    rel = smul_many(supertranspose(g), j_matrix(g.rank), g)
    s = max(1.0, g.scale())
    worst = rel.max_coeff_diff(j_matrix(g.rank)) / (s * s)
    worst = max(worst, g.parity_violation() / s)
    f = g.rows[2][2]
    if abs(f.body) < 1e-12:
        return max(worst, 1.0)
    worst = max(worst, (sdet(g) - 1).max_abs())
    return worst


def is_osp(g, tol=1e-9):
    return osp_residual(g) <= tol


def inverse_osp(g):
    """g^{-1} = J^{-1} st(g) J; valid for members."""
    return smul_many(j_inverse(g.rank), supertranspose(g), j_matrix(g.rank))


def bosonic_reduction(g):
    """Bodies of the upper-left 2x2 block, as a numpy array (SL(2,R) for members)."""
    return np.array(
        [[g.rows[0][0].body, g.rows[0][1].body], [g.rows[1][0].body, g.rows[1][1].body]]
    )


# -- named elements ----------------------------------------------------------

def identity(rank=DEFAULT_RANK):
    return SuperMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]], rank)


def fermionic_reflection(rank=DEFAULT_RANK):
    return SuperMatrix([[-1, 0, 0], [0, -1, 0], [0, 0, 1]], rank)


def rotate90(rank=DEFAULT_RANK):
    return SuperMatrix([[0, 1, 0], [-1, 0, 0], [0, 0, 1]], rank)


def diag(p, q, rank=None):
    """diag(p, q, 1); a member when pq = 1."""
    p = grassmann(p, rank or DEFAULT_RANK)
    q = grassmann(q, p.rank)
    z = GrassmannNumber(p.rank)
    one = GrassmannNumber.scalar(1, p.rank)
    return SuperMatrix([[p, z, z], [z, q, z], [z, z, one]], p.rank)


def sl2_embed(m, rank=DEFAULT_RANK):
    """Embed a real 2x2 matrix of determinant 1 into the bosonic subgroup."""
    return SuperMatrix([[m[0][0], m[0][1], 0], [m[1][0], m[1][1], 0], [0, 0, 1]], rank)


def lower_shear(c, rank=DEFAULT_RANK):
    return SuperMatrix([[1, 0, 0], [c, 1, 0], [0, 0, 1]], rank)


def upper_shear(b, rank=DEFAULT_RANK):
    return SuperMatrix([[1, b, 0], [0, 1, 0], [0, 0, 1]], rank)


def stabilizer(c, beta, theta, rank=None):
    """Two-parameter family (plus the fixed fermion theta) fixing e_theta.

    Rows: (1 + c theta beta, theta beta, -c theta /
           c, 1 + c theta beta, beta /
           beta + c^2 theta, c theta, 1 + c beta theta).
    """
    if rank is None:
        for v in (c, beta, theta):
            if isinstance(v, GrassmannNumber):
                rank = v.rank
                break
        else:
            rank = DEFAULT_RANK
    c = grassmann(c, rank)
    beta = grassmann(beta, rank)
    theta = grassmann(theta, rank)
    one = GrassmannNumber.scalar(1, rank)
    ctb = c * theta * beta
    return SuperMatrix(
        [
            [one + ctb, theta * beta, -(c * theta)],
            [c, one + ctb, beta],
            [beta + c * c * theta, c * theta, one + c * beta * theta],
        ],
        rank,
    )


def gt(t, phi, psi, rank=None):
    """The normal-form transporter: maps t(1,1,1+phi psi, phi, psi) to e_theta.

    Rows: (0, -sqrt(t), 0 / 1/sqrt(t), sqrt(t)(1+phi psi), -psi / 0, sqrt(t) psi, 1).
    """
    if rank is None:
        for v in (t, phi, psi):
            if isinstance(v, GrassmannNumber):
                rank = v.rank
                break
        else:
            rank = DEFAULT_RANK
    t = grassmann(t, rank)
    phi = grassmann(phi, rank)
    psi = grassmann(psi, rank)
    rt = t.sqrt()
    one = GrassmannNumber.scalar(1, rank)
    z = GrassmannNumber(rank)
    return SuperMatrix(
        [
            [z, -rt, z],
            [rt.inverse(), rt * (one + phi * psi), -psi],
            [z, rt * psi, one],
        ],
        rank,
    )


def exp_odd_plus(alpha, rank=None):
    """One-parameter odd subgroup (1 0 alpha / 0 1 0 / 0 -alpha 1)."""
    rank = rank or (alpha.rank if isinstance(alpha, GrassmannNumber) else DEFAULT_RANK)
    alpha = grassmann(alpha, rank)
    return SuperMatrix([[1, 0, alpha], [0, 1, 0], [0, -alpha, 1]], rank)


def exp_odd_minus(alpha, rank=None):
    """One-parameter odd subgroup (1 0 0 / 0 1 alpha / alpha 0 1)."""
    rank = rank or (alpha.rank if isinstance(alpha, GrassmannNumber) else DEFAULT_RANK)
    alpha = grassmann(alpha, rank)
    return SuperMatrix([[1, 0, 0], [0, 1, alpha], [alpha, 0, 1]], rank)


def random_osp(rng, rank=DEFAULT_RANK, blocks=2, odd_terms=2, scale=0.4):
    """Random member built by multiplying exact members (closure sampling)."""
    from .grassmann import random_element

    g = identity(rank)
    for _ in range(blocks):
        c = rng.normal(0.0, scale)
        beta = random_element(rng, rank, parity="odd", terms=odd_terms, scale=scale)
        b = rng.normal(0.0, scale)
        p = float(np.exp(rng.normal(0.0, scale)))
        k = int(rng.integers(0, 4))
        piece = smul_many(
            stabilizer(c, beta, GrassmannNumber(rank)),
            upper_shear(b, rank),
            diag(p, 1.0 / p, rank),
        )
        for _ in range(k):
            piece = smul(piece, rotate90(rank))
        g = smul(g, piece)
    return g


# -- serialization -----------------------------------------------------------

def format_supermatrix(g):
    return "\n".join(
        " | ".join(format_grassmann(g.rows[i][j]) for j in range(3)) for i in range(3)
    )


def parse_supermatrix(text, rank=DEFAULT_RANK):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 3:
        raise ValueError("SuperMatrix text must have exactly 3 nonempty lines")
    rows = []
    for ln in lines:
        cells = ln.split("|")
        if len(cells) != 3:
            raise ValueError("each SuperMatrix line must have 3 '|'-separated entries")
        rows.append([parse_grassmann(cell, rank) for cell in cells])
    return SuperMatrix(rows, rank)
