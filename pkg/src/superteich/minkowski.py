"""Super Minkowski space R^{2,1|2} and its OSp(1|2) orbit theory.

A point is A = (x1, x2, y, phi, theta) with the pairing

    <A,A'> = (x1 x2' + x1' x2)/2 - y y' + phi theta' + phi' theta,

so <A,A> = x1 x2 - y^2 + 2 phi theta.  The group acts through the matrix
form M_A = (x1 y phi / y x2 theta / -phi -theta 0) by A -> st(g) M_A g,
which makes it a right action: acting by g then h equals acting by g*h.

Light cone: <A,A> = 0 with non-negative x1, x2 bodies.  The fermion label
(odd, defined up to sign) separates orbits; the label-zero orbit of
(1,0,0,0,0) is the special light cone, home of all decorated lifts.
lambda-lengths are square roots of pairings; the mu-invariant is the odd
invariant of a positive triple read off in standard position

    A -> r(0,1,0,0,0),  B -> t(1,1,1,phi,phi),  C -> s(1,0,0,0,0).
"""

import numpy as np

from .grassmann import (
    DEFAULT_RANK,
    GrassmannNumber,
    canonicalize_sign,
    fourth_root,
    grassmann,
    format_grassmann,
    parse_grassmann,
    random_element,
)
from . import superlinalg as sl


class SuperVector:
    """Point of R^{2,1|2}: three even and two odd Grassmann coordinates."""

    __slots__ = ("rank", "x1", "x2", "y", "phi", "theta")

    def __init__(self, x1, x2, y, phi, theta, rank=None):
        if rank is None:
            for v in (x1, x2, y, phi, theta):
                if isinstance(v, GrassmannNumber):
                    rank = v.rank
                    break
            else:
                rank = DEFAULT_RANK
        self.rank = rank
        self.x1 = grassmann(x1, rank)
        self.x2 = grassmann(x2, rank)
        self.y = grassmann(y, rank)
        self.phi = grassmann(phi, rank)
        self.theta = grassmann(theta, rank)
        for v in self.components():
            if v.rank != rank:
                raise ValueError("rank mismatch in SuperVector components")

    def components(self):
        return (self.x1, self.x2, self.y, self.phi, self.theta)

    def scale(self, s):
        s = grassmann(s, self.rank)
        return SuperVector(*(s * v for v in self.components()), rank=self.rank)

    def __add__(self, other):
        return SuperVector(
            *(a + b for a, b in zip(self.components(), other.components())),
            rank=self.rank,
        )

    def __sub__(self, other):
        return SuperVector(
            *(a - b for a, b in zip(self.components(), other.components())),
            rank=self.rank,
        )

    def __neg__(self):
        return SuperVector(*(-v for v in self.components()), rank=self.rank)

    def isclose(self, other, tol=1e-9):
        return all(
            a.isclose(b, tol) for a, b in zip(self.components(), other.components())
        )

    def max_coeff_diff(self, other):
        return max(
            float(np.max(np.abs(a.coeffs - b.coeffs)))
            for a, b in zip(self.components(), other.components())
        )

    def body3(self):
        """Bosonic body (x1, x2, y) as a numpy vector."""
        return np.array([self.x1.body, self.x2.body, self.y.body])

    def __str__(self):
        return format_supervector(self)

    def __repr__(self):
        return "SuperVector%s" % format_supervector(self)


def zero_vector(rank=DEFAULT_RANK):
    z = GrassmannNumber(rank)
    return SuperVector(z, z, z, z, z, rank=rank)


def e_theta(theta, rank=None):
    rank = rank or (theta.rank if isinstance(theta, GrassmannNumber) else DEFAULT_RANK)
    z = GrassmannNumber(rank)
    one = GrassmannNumber.scalar(1, rank)
    return SuperVector(one, z, z, z, grassmann(theta, rank), rank=rank)


def e_zero(rank=DEFAULT_RANK):
    return e_theta(GrassmannNumber(rank), rank)


def pairing(a, b):
    if a.rank != b.rank:
        raise ValueError("rank mismatch")
    return (
        (a.x1 * b.x2 + b.x1 * a.x2) * 0.5
        - a.y * b.y
        + a.phi * b.theta
        + b.phi * a.theta
    )


def lambda_length(a, b):
    return pairing(a, b).sqrt()


def matrix_form(a, c=0.0):
    """The symmetric matrix presentation (with optional diagonal shift c)."""
    return sl.SuperMatrix(
        [
            [a.x1, a.y - c, a.phi],
            [a.y + c, a.x2, a.theta],
            [-a.phi, -a.theta, grassmann(c, a.rank)],
        ],
        a.rank,
    )


def act(g, a):
    """Right action st(g) M_a g, read back off the matrix form."""
    m = sl.smul_many(sl.supertranspose(g), matrix_form(a), g)
    r = m.rows
    return SuperVector(
        r[0][0], r[1][1], (r[0][1] + r[1][0]) * 0.5, r[0][2], r[1][2], rank=a.rank
    )


def is_light_cone(a, tol=1e-9):
    if pairing(a, a).max_abs() > tol:
        return False
    return a.x1.body >= -tol and a.x2.body >= -tol


def is_hyperboloid(a, tol=1e-9):
    if (pairing(a, a) - 1).max_abs() > tol:
        return False
    return a.x1.body >= -tol and a.x2.body >= -tol


def fermion_label(a, tol=1e-9):
    """Odd orbit invariant of a light-cone point, canonical up to sign.

    Returns (representative, sign); the raw value is sign * representative.
    """
    if a.x1.body > tol:
        raw = a.x1.sqrt() * a.theta - (a.y * a.x1.sqrt().inverse()) * a.phi
    elif a.x2.body > tol:
        raw = a.x2.sqrt() * a.phi - (a.y * a.x2.sqrt().inverse()) * a.theta
    else:
        raise ValueError("fermion label needs an invertible x1 or x2")
    return canonicalize_sign(raw)


def is_special(a, tol=1e-9):
    if not is_light_cone(a, tol):
        return False
    rep, _ = fermion_label(a, tol)
    return rep.is_zero(tol)


# -- orbit normal forms -------------------------------------------------------


def normalize_point(a, tol=1e-9):
    """Group element g and odd theta with act(g, a) = (1,0,0,0,theta).

    Constructive: rotate x1/x2 if needed, shear y positive, equalize x1 = x2
    by a diagonal, finish with the t(1,1,1+phi psi,phi,psi) transporter.
    """
    rank = a.rank
    steps = []
    b = a
    if b.x1.body < b.x2.body:
        r = sl.rotate90(rank)
        steps.append(r)
        b = act(r, b)
    if b.x1.body <= tol:
        raise ValueError("degenerate light-cone point (zero body)")
    shear = (1.0 + abs(b.y.body)) / b.x1.body
    u = sl.upper_shear(shear, rank)
    steps.append(u)
    b = act(u, b)
    p = fourth_root(b.x2 * b.x1.inverse())
    d = sl.diag(p, p.inverse())
    steps.append(d)
    b = act(d, b)
    t = b.x1
    tinv = t.inverse()
    g_t = sl.gt(t, b.phi * tinv, b.theta * tinv)
    steps.append(g_t)
    g = sl.smul_many(*steps)
    out = act(g, a)
    return g, out.theta


def normalize_pair(a, b, tol=1e-9):
    """Send special-light-cone a to (1,0,0,0,0) and b to s(0,1,0,0,0).

    Returns (g, s); s equals twice the pairing <a,b>.
    """
    g1, th = normalize_point(a, tol)
    if not th.is_zero(1e-7):
        raise ValueError("first point is not on the special light cone")
    b1 = act(g1, b)
    if abs(b1.x2.body) <= tol:
        raise ValueError("pair is not linearly independent")
    x2inv = b1.x2.inverse()
    g2 = sl.stabilizer(-(b1.y * x2inv), -(x2inv * b1.theta), GrassmannNumber(a.rank))
    g = sl.smul(g1, g2)
    return g, act(g, b).x2


def triple_orientation(a, b, c):
    """Determinant of the bosonic bodies; positive for a positive triple."""
    return float(np.linalg.det(np.array([a.body3(), b.body3(), c.body3()])))


def is_positive_triple(a, b, c, tol=1e-9):
    return (
        is_special(a, tol)
        and is_special(b, tol)
        and is_special(c, tol)
        and triple_orientation(a, b, c) > 1e-12
    )


class PositiveTriple:
    """Ordered triple of special-light-cone points, positively oriented."""

    def __init__(self, a, b, c, tol=1e-9):
        if not is_positive_triple(a, b, c, tol):
            raise ValueError("not a positive triple on the special light cone")
        self.a, self.b, self.c = a, b, c

    def normalize(self):
        return normalize_triple(self.a, self.b, self.c)

    def mu(self):
        return mu_invariant(self.a, self.b, self.c)


class TripleInvariants:
    """Edge lambda-lengths, odd invariant and normalization scales of a
    positive triple, computed from pairings alone (no group element)."""

    __slots__ = ("lambda_a", "lambda_b", "lambda_e", "mu", "r", "s", "t")

    def __init__(self, a, b, c, tol=1e-9):
        self.lambda_a = pairing(a, b).sqrt()
        self.lambda_b = pairing(b, c).sqrt()
        self.lambda_e = pairing(c, a).sqrt()
        self.mu = mu_invariant(a, b, c, tol)[0]
        root2 = np.sqrt(2.0)
        la, lb, le = self.lambda_a, self.lambda_b, self.lambda_e
        self.r = root2 * le * la * lb.inverse()
        self.s = root2 * lb * le * la.inverse()
        self.t = root2 * la * lb * le.inverse()


def normalize_triple(a, b, c, tol=1e-9):
    """Standard position of a positive triple (a, b, c).

    Returns (g, r, s, t, phi) with act(g,a) = r(0,1,0,0,0),
    act(g,b) = t(1,1,1,phi,phi), act(g,c) = s(1,0,0,0,0); deterministic, so
    the other lift of the same triple is obtained by the fermionic reflection.
    """
    det = triple_orientation(a, b, c)
    if det <= 1e-12:
        raise ValueError("triple is not positively oriented (body determinant %g)" % det)
    g1, th = normalize_point(c, tol)
    if not th.is_zero(1e-7):
        raise ValueError("third point is not on the special light cone")
    a1 = act(g1, a)
    if abs(a1.x2.body) <= tol:
        raise ValueError("triple is not linearly independent")
    x2inv = a1.x2.inverse()
    g2 = sl.stabilizer(-(a1.y * x2inv), -(x2inv * a1.theta), GrassmannNumber(a.rank))
    g12 = sl.smul(g1, g2)
    b2 = act(g12, b)
    if b2.x1.body <= tol or b2.x2.body <= tol:
        raise ValueError("middle point degenerates under normalization")
    p = fourth_root(b2.x2 * b2.x1.inverse())
    g = sl.smul(g12, sl.diag(p, p.inverse()))
    af, bf, cf = act(g, a), act(g, b), act(g, c)
    if bf.y.body <= 0:
        raise ValueError("triple is not positive (middle y-body %g)" % bf.y.body)
    t = bf.x1
    phi = bf.phi * t.inverse()
    return g, af.x2, cf.x1, t, phi


def mu_invariant(a, b, c, tol=1e-9):
    """Odd invariant of a positive triple, canonical up to the sign gauge.

    Returns (representative, sign).  The representative is the average of the
    sign-aligned standard-position values of the three cyclic rotations,
    summed in a labeling-independent order, so cyclic relabelings return the
    identical representative; reflecting all three points flips the sign.
    """
    reps, signs = [], []
    for trip in ((a, b, c), (b, c, a), (c, a, b)):
        _, _, _, _, phi = normalize_triple(*trip, tol=tol)
        rep, sign = canonicalize_sign(phi)
        reps.append(rep)
        signs.append(sign)
    for other in reps[1:]:
        if not reps[0].isclose(other, 1e-7):
            raise ValueError("cyclic standard positions disagree on the invariant")
    reps.sort(key=lambda r: tuple(r.coeffs))
    avg = (reps[0] + reps[1] + reps[2]) * (1.0 / 3.0)
    return avg, signs[0]


def prime_element(phi, rank=None):
    """Order-3 element rotating a standard triple one slot, fixing phi."""
    rank = rank or (phi.rank if isinstance(phi, GrassmannNumber) else DEFAULT_RANK)
    phi = grassmann(phi, rank)
    one = GrassmannNumber.scalar(1, rank)
    z = GrassmannNumber(rank)
    return sl.SuperMatrix([[z, one, z], [-one, -one, -phi], [z, -phi, one]], rank)


def prime_transform(r, s, t, phi):
    """Standard-position data after one prime rotation, with its group element."""
    return (s, t, r, phi), prime_element(phi)


def switch_transform(a, c, d, tol=1e-9):
    """Restandardize (a at (0,1..)-slot, c at (1,0..)-slot, d as computed)
    so that d becomes the middle point.

    Returns (g, s_hat, r_hat, t_hat, sigma) with act(g,a) = s_hat(1,0,0,0,0),
    act(g,c) = r_hat(0,1,0,0,0), act(g,d) = t_hat(1,1,1,sigma,sigma).
    """
    if d.x1.body <= tol or d.x2.body <= tol:
        raise ValueError("switch needs invertible x1, x2 on the new point")
    q = fourth_root(d.x1 * d.x2.inverse())
    g = sl.smul(sl.rotate90(a.rank), sl.diag(q, q.inverse()))
    ahat, chat, dhat = act(g, a), act(g, c), act(g, d)
    t_hat = dhat.x1
    sigma = dhat.phi * t_hat.inverse()
    return g, ahat.x1, chat.x2, t_hat, sigma


# -- quadrilateral moves -------------------------------------------------------


def basic_calculation(a, b, c, d, e, sigma, rank=None):
    """Fourth point of a quadrilateral from five lambda-lengths and the odd
    invariant sigma of the far triangle, in the frame where the near triangle
    sits in standard position."""
    if rank is None:
        for v in (a, b, c, d, e, sigma):
            if isinstance(v, GrassmannNumber):
                rank = v.rank
                break
        else:
            rank = DEFAULT_RANK
    a, b, c, d, e, sigma = (grassmann(v, rank) for v in (a, b, c, d, e, sigma))
    chi = a * c * (d * b).inverse()
    k = np.sqrt(2.0) * c * d * e.inverse()
    rootchi = chi.sqrt()
    return SuperVector(
        k * chi.inverse(),
        k * chi,
        -k,
        k * rootchi.inverse() * sigma,
        -(k * rootchi * sigma),
        rank=rank,
    )


def ptolemy_even(a, b, c, d, e, sigma, theta, rank=None):
    """Flipped-diagonal lambda-length f with the odd correction term."""
    if rank is None:
        for v in (a, b, c, d, e, sigma, theta):
            if isinstance(v, GrassmannNumber):
                rank = v.rank
                break
        else:
            rank = DEFAULT_RANK
    a, b, c, d, e, sigma, theta = (
        grassmann(v, rank) for v in (a, b, c, d, e, sigma, theta)
    )
    chi = a * c * (d * b).inverse()
    rootchi = chi.sqrt()
    corr = 1 + sigma * theta * rootchi * (1 + chi).inverse()
    return (a * c + b * d) * corr * e.inverse()


def ptolemy_odd(sigma, theta, chi):
    """Odd invariants (nu, mu) of the two triangles after the flip."""
    if chi.body <= 0:
        raise ValueError("cross-ratio must have positive body")
    rootchi = chi.sqrt()
    denom = (1 + chi).sqrt().inverse()
    nu = (theta * rootchi + sigma) * denom
    mu = (sigma * rootchi - theta) * denom
    return nu, mu


# -- projective models ---------------------------------------------------------


class ComplexGrassmann:
    """Complex number with Grassmann real/imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = re
        self.im = im

    def __add__(self, other):
        return ComplexGrassmann(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        return ComplexGrassmann(self.re - other.re, self.im - other.im)

    def __mul__(self, other):
        return ComplexGrassmann(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def inverse(self):
        n = (self.re * self.re + self.im * self.im).inverse()
        return ComplexGrassmann(self.re * n, -(self.im * n))

    def isclose(self, other, tol=1e-9):
        return self.re.isclose(other.re, tol) and self.im.isclose(other.im, tol)

    def __repr__(self):
        return "(%s) + i(%s)" % (self.re, self.im)


def superplane_map(a, tol=1e-9):
    """Hyperboloid point to the super upper half-plane.

    Returns (z_re, z_im, eta_re, eta_im) as GrassmannNumbers.
    """
    if a.x2.body <= tol:
        raise ValueError("superplane map needs positive-body x2")
    x2inv = a.x2.inverse()
    return (
        -(a.y * x2inv),
        (1 - a.phi * a.theta) * x2inv,
        a.theta * x2inv,
        a.theta * x2inv * a.y - a.phi,
    )


def superconformal(g, plane):
    """Action on the super half-plane matching act: feeding the same group
    element here and to act commutes with superplane_map.

    The point action is a right action through the matrix form, so the
    half-plane picture uses the mirrored entries (a, -c, .. / -b, d, .. /
    -alpha, beta, ..) of g in the fractional-linear formula.
    """
    rank = g.rank
    z_re, z_im, eta_re, eta_im = plane
    z = ComplexGrassmann(z_re, z_im)
    eta = ComplexGrassmann(eta_re, eta_im)
    (a0, b0, al), (c0, d0, be), (_, _, _) = g.rows
    a, b, c, d = a0, -c0, -b0, d0
    ga, de = -al, be

    def cg(x):
        return ComplexGrassmann(grassmann(x, rank), GrassmannNumber(rank))

    czd = cg(c) * z + cg(d)
    czdi = czd.inverse()
    gzd = cg(ga) * z + cg(de)
    z_new = (cg(a) * z + cg(b)) * czdi + eta * gzd * czdi * czdi
    eta_new = gzd * czdi + eta * cg(1 + 0.5 * (de * ga)) * czdi
    return z_new.re, z_new.im, eta_new.re, eta_new.im


def rp11_map(a, tol=1e-9):
    """Special light cone to RP^{1|1}: z = -y/x2, eta = theta/x2."""
    if abs(a.x2.body) <= tol:
        raise ValueError("rp11 map needs invertible x2")
    x2inv = a.x2.inverse()
    return -(a.y * x2inv), a.theta * x2inv


# -- sampling ------------------------------------------------------------------


def _cone_params(rng):
    u = rng.normal(0.0, 1.0)
    v = rng.normal(0.0, 1.0)
    u += np.sign(u or 1.0) * 0.3
    v += np.sign(v or 1.0) * 0.3
    return u, v


def random_special_point(rng, rank=DEFAULT_RANK, odd_terms=2):
    """Direct sample: bodies on the cone, odd part with vanishing label."""
    u, v = _cone_params(rng)
    phi = random_element(rng, rank, parity="odd", terms=odd_terms)
    return SuperVector(
        grassmann(u * u, rank), grassmann(v * v, rank), grassmann(u * v, rank),
        phi, (v / u) * phi, rank=rank,
    )


def random_light_cone_point(rng, rank=DEFAULT_RANK, odd_terms=2):
    """Direct sample: odd parts free, x1 corrected to keep the point isotropic."""
    u, v = _cone_params(rng)
    rho = random_element(rng, rank, parity="odd", terms=odd_terms)
    lam = random_element(rng, rank, parity="odd", terms=odd_terms)
    x1 = u * u - 2.0 / (v * v) * (rho * lam)
    return SuperVector(
        x1, grassmann(v * v, rank), grassmann(u * v, rank), rho, lam, rank=rank
    )


# -- serialization ---------------------------------------------------------------


def format_supervector(a):
    return "(%s)" % ", ".join(format_grassmann(v) for v in a.components())


def _split_top_level(s):
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_supervector(text, rank=DEFAULT_RANK):
    s = text.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ValueError("SuperVector text must be parenthesized")
    parts = _split_top_level(s[1:-1])
    if len(parts) != 5:
        raise ValueError("SuperVector text must have 5 components")
    return SuperVector(*(parse_grassmann(p, rank) for p in parts), rank=rank)
