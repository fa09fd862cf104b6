"""Finite-rank Grassmann (exterior) algebra over the reals.

An element of the rank-N algebra is stored as a dense vector of 2**N real
coefficients, one per subset of the generators; bit k of the index encodes
generator k+1.  The empty subset's coefficient is the body, everything else
is the soul.  Odd generators anticommute and square to zero, so the soul is
nilpotent and inverse / sqrt are finite series.

All public arithmetic rejects mixed ranks instead of promoting.  Equality is
coefficientwise within a configurable tolerance (default 1e-9) because the
downstream geometry forces irrational coefficients like sqrt(2).
"""

import re

import numpy as np

from . import _kernels

DEFAULT_RANK = 8

# per-coefficient tolerance used by __eq__ / is_even / is_odd
EQ_TOL = 1e-9

_popcounts = {}


def _popcount(rank):
    pc = _popcounts.get(rank)
    if pc is None:
        pc = np.bitwise_count(np.arange(1 << rank, dtype=np.int64)).astype(np.int64)
        _popcounts[rank] = pc
    return pc


class GrassmannNumber:
    """Element of the rank-N real Grassmann algebra."""

    __slots__ = ("rank", "coeffs")

    def __init__(self, rank, coeffs=None):
        if not (isinstance(rank, (int, np.integer)) and rank >= 1):
            raise ValueError("rank must be a positive integer")
        self.rank = int(rank)
        n = 1 << self.rank
        if coeffs is None:
            self.coeffs = np.zeros(n)
        else:
            c = np.asarray(coeffs, dtype=float)
            if c.shape != (n,):
                raise ValueError("coefficient vector must have length 2**rank")
            self.coeffs = c.copy()

    # -- constructors ------------------------------------------------------

    @staticmethod
    def scalar(value, rank=DEFAULT_RANK):
        g = GrassmannNumber(rank)
        g.coeffs[0] = float(value)
        return g

    @staticmethod
    def generator(i, rank=DEFAULT_RANK):
        """The i-th odd generator, 1-based."""
        if not 1 <= i <= rank:
            raise ValueError("generator index out of range")
        g = GrassmannNumber(rank)
        g.coeffs[1 << (i - 1)] = 1.0
        return g

    @staticmethod
    def monomial(indices, coeff=1.0, rank=DEFAULT_RANK):
        """coeff * product of generators with the given 1-based indices."""
        mask = 0
        for i in indices:
            if not 1 <= i <= rank:
                raise ValueError("generator index out of range")
            bit = 1 << (i - 1)
            if mask & bit:
                raise ValueError("repeated generator index")
            mask |= bit
        g = GrassmannNumber(rank)
        g.coeffs[mask] = float(coeff)
        return g

    # -- structure ---------------------------------------------------------

    @property
    def body(self):
        return float(self.coeffs[0])

    def soul(self):
        g = GrassmannNumber(self.rank, self.coeffs)
        g.coeffs[0] = 0.0
        return g

    def even_part(self):
        g = GrassmannNumber(self.rank)
        even = (_popcount(self.rank) & 1) == 0
        g.coeffs[even] = self.coeffs[even]
        return g

    def odd_part(self):
        g = GrassmannNumber(self.rank)
        odd = (_popcount(self.rank) & 1) == 1
        g.coeffs[odd] = self.coeffs[odd]
        return g

    def parity(self, tol=None):
        """'even', 'odd' or 'mixed'; the zero element counts as even."""
        tol = EQ_TOL if tol is None else tol
        pc = _popcount(self.rank)
        has_even = np.any(np.abs(self.coeffs[(pc & 1) == 0]) > tol)
        has_odd = np.any(np.abs(self.coeffs[(pc & 1) == 1]) > tol)
        if has_even and has_odd:
            return "mixed"
        if has_odd:
            return "odd"
        return "even"

    def is_even(self, tol=None):
        tol = EQ_TOL if tol is None else tol
        return not np.any(np.abs(self.odd_part().coeffs) > tol)

    def is_odd(self, tol=None):
        tol = EQ_TOL if tol is None else tol
        return not np.any(np.abs(self.even_part().coeffs) > tol)

    def coeff(self, mask):
        return float(self.coeffs[mask])

    def extract_coefficient(self, indices):
        """Coefficient of the monomial on the given 1-based generator set."""
        mask = 0
        for i in indices:
            if not 1 <= i <= self.rank:
                raise ValueError("generator index out of range")
            mask |= 1 << (i - 1)
        return float(self.coeffs[mask])

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs)))

    def is_zero(self, tol=None):
        tol = EQ_TOL if tol is None else tol
        return not np.any(np.abs(self.coeffs) > tol)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, GrassmannNumber):
            if other.rank != self.rank:
                raise ValueError("rank mismatch: %d vs %d" % (self.rank, other.rank))
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return GrassmannNumber.scalar(float(other), self.rank)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GrassmannNumber(self.rank, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GrassmannNumber(self.rank, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GrassmannNumber(self.rank, o.coeffs - self.coeffs)

    def __neg__(self):
        return GrassmannNumber(self.rank, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return GrassmannNumber(self.rank, self.coeffs * float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GrassmannNumber(
            self.rank, _kernels.multiply_coeffs(self.coeffs, o.coeffs, self.rank)
        )

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return GrassmannNumber(self.rank, self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return GrassmannNumber(self.rank, self.coeffs / float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = GrassmannNumber.scalar(1.0, self.rank)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return bool(np.all(np.abs(self.coeffs - o.coeffs) <= EQ_TOL))

    __hash__ = None

    def isclose(self, other, tol=EQ_TOL):
        o = self._coerce(other)
        if o is None:
            raise TypeError("cannot compare with %r" % (other,))
        return bool(np.all(np.abs(self.coeffs - o.coeffs) <= tol))

    # -- inverse / sqrt ----------------------------------------------------

    def inverse(self):
        b = self.body
        if b == 0.0:
            raise ZeroDivisionError("Grassmann element with zero body is not invertible")
        # x = b(1+n), n nilpotent: 1/x = (1/b) sum (-n)^k, terminates by rank
        n = self.soul() * (1.0 / b)
        out = GrassmannNumber.scalar(1.0, self.rank)
        term = GrassmannNumber.scalar(1.0, self.rank)
        for k in range(1, self.rank + 1):
            term = term * n
            if not np.any(term.coeffs):
                break
            out = out - term if k % 2 == 1 else out + term
        return out * (1.0 / b)

    def sqrt(self):
        """Square root with positive body; requires an even element, body > 0."""
        if not self.is_even():
            raise ValueError("sqrt requires an even element")
        b = self.body
        if b <= 0.0:
            raise ValueError("sqrt requires positive body")
        n = self.soul() * (1.0 / b)
        out = GrassmannNumber.scalar(1.0, self.rank)
        term = GrassmannNumber.scalar(1.0, self.rank)
        c = 1.0
        for k in range(1, self.rank + 1):
            c *= (0.5 - (k - 1)) / k  # binomial(1/2, k), recursively
            term = term * n
            if not np.any(term.coeffs):
                break
            out = out + term * c
        return out * np.sqrt(b)

    # -- text form ---------------------------------------------------------

    def __str__(self):
        return format_grassmann(self)

    def __repr__(self):
        return "GrassmannNumber(rank=%d, %s)" % (self.rank, format_grassmann(self))


def grassmann(value, rank=DEFAULT_RANK):
    """Coerce a real number or GrassmannNumber to a GrassmannNumber."""
    if isinstance(value, GrassmannNumber):
        return value
    return GrassmannNumber.scalar(float(value), rank)


# module-level aliases matching the operation names used elsewhere

def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def inverse(a):
    return a.inverse()


def sqrt(a):
    return a.sqrt()


def parity(a):
    return a.parity()


def extract_coefficient(a, indices):
    return a.extract_coefficient(indices)


def fourth_root(a):
    # (x)^(1/4) with positive body both times, used by the normal forms
    return a.sqrt().sqrt()


def odd_derivative(a, i):
    """Left derivative with respect to generator i (1-based): each monomial
    containing g_i loses it, signed by the generators written before it."""
    bit = 1 << (i - 1)
    below = bit - 1
    pc = _popcount(a.rank)
    out = GrassmannNumber(a.rank)
    masks = np.nonzero(a.coeffs)[0]
    for m in masks:
        if m & bit:
            sign = -1.0 if (pc[m & below] & 1) else 1.0
            out.coeffs[m ^ bit] += sign * a.coeffs[m]
    return out


def canonicalize_sign(a, tol=1e-9):
    """Canonical representative of {a, -a}: first significant coefficient in
    bitmask order made positive.  Returns (representative, sign) with
    a = sign * representative; sign is +1.0 for (near-)zero input.

    Significance is judged relative to the largest coefficient so that
    roundoff junk below real terms never decides the sign."""
    thresh = tol * max(1.0, a.max_abs())
    for c in a.coeffs:
        if abs(c) > thresh:
            if c < 0:
                return -a, -1.0
            return a, 1.0
    return a, 1.0


# -- serialization ----------------------------------------------------------

_TERM_RE = re.compile(
    r"^\s*(?:(?P<coeff>[0-9.eE+-]+)\s*\*\s*)?g\{(?P<idx>[0-9,\s]*)\}\s*$"
)


def format_grassmann(a, precision=None):
    """`c` for the body, `c*g{i,j}` for soul terms, joined by ' + ' / ' - '."""
    parts = []
    fmt = (lambda v: repr(float(v))) if precision is None else (lambda v: "%.*g" % (precision, v))
    for mask in range(1 << a.rank):
        c = a.coeffs[mask]
        if c == 0.0:
            continue
        if mask == 0:
            term = fmt(abs(c))
        else:
            idx = [str(k + 1) for k in range(a.rank) if mask >> k & 1]
            term = "%s*g{%s}" % (fmt(abs(c)), ",".join(idx))
        if not parts:
            parts.append(term if c > 0 else "-" + term)
        else:
            parts.append(("+ " if c > 0 else "- ") + term)
    if not parts:
        return "0"
    return " ".join(parts)


def parse_grassmann(text, rank=DEFAULT_RANK):
    g = GrassmannNumber(rank)
    s = text.strip()
    if not s:
        raise ValueError("empty Grassmann literal")
    # split into signed terms; the lookbehind keeps exponents like 1e-05 intact
    pieces = re.split(r"(?<![eE])([+-])", s)
    terms = []
    if pieces[0].strip():
        terms.append((1.0, pieces[0].strip()))
    for k in range(1, len(pieces) - 1, 2):
        tok = pieces[k + 1].strip()
        if not tok:
            raise ValueError("dangling sign in %r" % text)
        terms.append((-1.0 if pieces[k] == "-" else 1.0, tok))
    if not terms:
        raise ValueError("empty Grassmann literal")
    for sign, t in terms:
        if "g{" not in t:
            g.coeffs[0] += sign * float(t)
            continue
        m = _TERM_RE.match(t)
        if m is None:
            raise ValueError("bad Grassmann term: %r" % t)
        coeff = float(m.group("coeff")) if m.group("coeff") else 1.0
        mask = 0
        idx = m.group("idx").strip()
        if idx:
            for tok in idx.split(","):
                i = int(tok)
                if not 1 <= i <= rank:
                    raise ValueError("generator index %d out of range for rank %d" % (i, rank))
                bit = 1 << (i - 1)
                if mask & bit:
                    raise ValueError("repeated generator index in %r" % t)
                mask |= bit
        g.coeffs[mask] += sign * coeff
    return g


# -- sampling ----------------------------------------------------------------

def random_element(rng, rank=DEFAULT_RANK, parity=None, terms=6, scale=1.0, body=None):
    """Random element for tests: `terms` monomials with N(0, scale) coefficients.

    parity: None for mixed, 'even'/'odd' to restrict subset cardinalities.
    body: if given, the empty-subset coefficient is forced to this value.
    """
    n = 1 << rank
    pc = _popcount(rank)
    if parity == "even":
        pool = np.nonzero((pc & 1) == 0)[0]
    elif parity == "odd":
        pool = np.nonzero((pc & 1) == 1)[0]
    else:
        pool = np.arange(n)
    g = GrassmannNumber(rank)
    take = min(terms, pool.size)
    for mask in rng.choice(pool, size=take, replace=False):
        g.coeffs[mask] = rng.normal(0.0, scale)
    if body is not None:
        g.coeffs[0] = body
    return g
