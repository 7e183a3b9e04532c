"""Exact scalar arithmetic: exp-polynomials and their fractions.

The coefficient domain used throughout the package is the ring of
"exp-polynomials": finite sums of terms

    (rational coefficient) * (monomial in symbols) * exp(linear form in symbols)

with all numbers kept as exact ``fractions.Fraction`` values.  The class is
closed under addition, multiplication, differentiation and substitution by
linear forms, which is exactly what products of adjoint matrix exponentials
with rational spectra produce.  Trigonometric entries are outside the class
and are rejected rather than approximated.

``RatExpr`` is the fraction field element num/den of two exp-polynomials.  It
appears as an intermediate during matrix inversion and as the coefficient
domain of a few parametrized catalog entries (entries rational in a parameter
such as ``1/alpha``).  Equality is decided by cross multiplication, which is
sound because exp-polynomials form an integral domain (terms are indexed by a
totally ordered cancellative monoid).

Symbols are globally ordered: coordinates ``x1, x2, ...`` first by index,
every other name alphabetically.  This makes canonical forms, and therefore
rendered output, reproducible byte for byte.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache

__all__ = [
    "ExprError",
    "UnsupportedExpressionError",
    "ExpPoly",
    "RatExpr",
    "Q",
    "as_scalar",
    "as_ratexpr",
    "scalar_eq",
    "scalar_is_zero",
    "parse_expr",
    "parse_poly",
    "canonicalize",
    "tree_eval",
]

Q = Fraction

_COORD_RE = re.compile(r"x(\d+)$")


class ExprError(ValueError):
    """Base error for the expression layer."""


class UnsupportedExpressionError(ExprError):
    """Raised when an operation would leave the exp-polynomial class."""


@lru_cache(maxsize=None)
def symbol_key(name: str):
    """Global sort key: coordinates by index first, then names alphabetically."""
    m = _COORD_RE.fullmatch(name)
    if m:
        return (0, int(m.group(1)), name)
    return (1, 0, name)


def _sorted_items(d):
    return tuple(sorted(d.items(), key=lambda kv: symbol_key(kv[0])))


class ExpPoly:
    """Canonical exp-polynomial.

    Terms are stored as a dict ``(mono, expf) -> Fraction`` where ``mono`` is a
    sorted tuple of (symbol, positive int exponent) pairs and ``expf`` a sorted
    tuple of (symbol, nonzero Fraction) pairs describing the linear form inside
    the exponential.  No zero coefficients are stored; the zero polynomial is
    the empty dict.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms) if terms else {}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "ExpPoly":
        return ExpPoly()

    @staticmethod
    def number(value) -> "ExpPoly":
        q = Q(value)
        if q == 0:
            return ExpPoly()
        return ExpPoly({((), ()): q})

    @staticmethod
    def one() -> "ExpPoly":
        return ExpPoly.number(1)

    @staticmethod
    def symbol(name: str) -> "ExpPoly":
        return ExpPoly({(((name, 1),), ()): Q(1)})

    @staticmethod
    def exp_linear(form) -> "ExpPoly":
        """exp(sum c_s * s) for a dict/mapping ``form`` of rational coefficients."""
        expf = {s: Q(c) for s, c in dict(form).items() if Q(c) != 0}
        return ExpPoly({((), _sorted_items(expf)): Q(1)})

    @staticmethod
    def term(coeff, mono=None, expf=None) -> "ExpPoly":
        """Single term with canonicalized key; zero exponents are dropped."""
        c = Q(coeff)
        if c == 0:
            return ExpPoly()
        m = {s: int(k) for s, k in dict(mono or {}).items() if k}
        e = {s: Q(k) for s, k in dict(expf or {}).items() if Q(k) != 0}
        return ExpPoly({(_sorted_items(m), _sorted_items(e)): c})

    # -- basic structure ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_number(self) -> bool:
        return not self.terms or set(self.terms) == {((), ())}

    def as_number(self) -> Q:
        if not self.terms:
            return Q(0)
        if set(self.terms) != {((), ())}:
            raise ExprError("not a constant: %s" % self)
        return self.terms[((), ())]

    def free_symbols(self) -> set:
        syms = set()
        for mono, expf in self.terms:
            syms.update(s for s, _ in mono)
            syms.update(s for s, _ in expf)
        return syms

    def has_exp(self) -> bool:
        return any(expf for _, expf in self.terms)

    def depends_on(self, name: str) -> bool:
        for mono, expf in self.terms:
            if any(s == name for s, _ in mono) or any(s == name for s, _ in expf):
                return True
        return False

    def linear_form(self):
        """Return {symbol: coeff} if self is a homogeneous linear polynomial."""
        form = {}
        for (mono, expf), c in self.terms.items():
            if expf or len(mono) != 1 or mono[0][1] != 1:
                return None
            form[mono[0][0]] = c
        return form

    # -- arithmetic --------------------------------------------------------

    def _add_term(self, terms, key, coeff):
        c = terms.get(key, Q(0)) + coeff
        if c == 0:
            terms.pop(key, None)
        else:
            terms[key] = c

    def __add__(self, other):
        other = as_scalar(other)
        if isinstance(other, RatExpr):
            return as_ratexpr(self) + other
        terms = dict(self.terms)
        for key, c in other.terms.items():
            self._add_term(terms, key, c)
        return ExpPoly(terms)

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-as_scalar(other))

    def __rsub__(self, other):
        return as_scalar(other) + (-self)

    def __mul__(self, other):
        other = as_scalar(other)
        if isinstance(other, RatExpr):
            return as_ratexpr(self) * other
        out = {}
        for (m1, e1), c1 in self.terms.items():
            for (m2, e2), c2 in other.terms.items():
                mono = dict(m1)
                for s, k in m2:
                    mono[s] = mono.get(s, 0) + k
                expf = dict(e1)
                for s, k in e2:
                    v = expf.get(s, Q(0)) + k
                    if v == 0:
                        expf.pop(s, None)
                    else:
                        expf[s] = v
                key = (_sorted_items(mono), _sorted_items(expf))
                self._add_term(out, key, c1 * c2)
        return ExpPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise ExprError("powers must be integers")
        if n < 0:
            return as_ratexpr(self) ** n
        out = ExpPoly.one()
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, other):
        return as_ratexpr(self) / as_ratexpr(other)

    def __rtruediv__(self, other):
        return as_ratexpr(other) / as_ratexpr(self)

    def __eq__(self, other):
        if isinstance(other, RatExpr):
            return other == self
        try:
            other = as_scalar(other)
        except (TypeError, ExprError):
            return NotImplemented
        if isinstance(other, RatExpr):
            return other == self
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return not self.is_zero()

    # -- calculus ----------------------------------------------------------

    def diff(self, name: str) -> "ExpPoly":
        """Exact partial derivative (product rule over monomial*exp terms)."""
        out = {}
        for (mono, expf), c in self.terms.items():
            mdict = dict(mono)
            # monomial part
            k = mdict.get(name, 0)
            if k:
                m2 = dict(mdict)
                if k == 1:
                    del m2[name]
                else:
                    m2[name] = k - 1
                self._add_term(out, (_sorted_items(m2), expf), c * k)
            # exponential part
            rate = dict(expf).get(name)
            if rate:
                self._add_term(out, (mono, expf), c * rate)
        return ExpPoly(out)

    def subs(self, bindings):
        """Simultaneous substitution symbol -> scalar, then canonicalization.

        Substituting into an exponential argument requires the replacement to
        be a homogeneous linear form with rational coefficients; anything else
        raises UnsupportedExpressionError.  The result is an ExpPoly when every
        binding is polynomial, otherwise a RatExpr.
        """
        bindings = {s: as_scalar(v) for s, v in bindings.items()}
        result = ExpPoly.zero()
        for (mono, expf), c in self.terms.items():
            factor = as_scalar(ExpPoly.number(c))
            new_exp = {}
            for s, rate in expf:
                if s in bindings:
                    val = bindings[s]
                    if isinstance(val, RatExpr):
                        raise UnsupportedExpressionError(
                            "cannot substitute a fraction into exp(): %s" % s)
                    form = val.linear_form()
                    if form is None:
                        raise UnsupportedExpressionError(
                            "substitution makes exp() argument non-linear: %s" % s)
                    for v, cv in form.items():
                        new_exp[v] = new_exp.get(v, Q(0)) + rate * cv
                else:
                    new_exp[s] = new_exp.get(s, Q(0)) + rate
            factor = factor * ExpPoly.exp_linear(new_exp)
            for s, k in mono:
                base = bindings.get(s, ExpPoly.symbol(s))
                factor = factor * (base ** k)
            result = result + factor
        return result

    def subs_exp_power(self, name: str, rate, value):
        """Rewrite every factor exp(c*name) with c an integer multiple of
        ``rate`` as value**(c/rate).  Polynomial occurrences of ``name`` and
        non-multiple rates raise UnsupportedExpressionError.  Used by recorded
        coordinate changes such as x3 -> exp(3*x3)."""
        rate = Q(rate)
        value = as_scalar(value)
        result = as_scalar(ExpPoly.zero())
        for (mono, expf), c in self.terms.items():
            if any(s == name for s, _ in mono):
                raise UnsupportedExpressionError(
                    "polynomial occurrence of %s has no rewrite rule" % name)
            edict = dict(expf)
            factor = as_scalar(ExpPoly.number(c))
            crate = edict.pop(name, None)
            if crate is not None:
                k = crate / rate
                if k.denominator != 1:
                    raise UnsupportedExpressionError(
                        "exp(%s*%s) is not an integer power of the rule" % (crate, name))
                factor = factor * (value ** int(k))
            mono_poly = ExpPoly({(mono, _sorted_items(edict)): Q(1)})
            result = result + factor * mono_poly
        return result

    # -- queries used by linear algebra and verification --------------------

    def split_by(self, names):
        """Group terms by their (monomial, exp) part restricted to ``names``.

        Returns dict mapping the restricted key to the ExpPoly cofactor in the
        remaining symbols.  Used to split realization coefficients into a
        coordinate part and a parameter part.
        """
        names = set(names)
        out = {}
        for (mono, expf), c in self.terms.items():
            m_in = tuple((s, k) for s, k in mono if s in names)
            m_out = tuple((s, k) for s, k in mono if s not in names)
            e_in = tuple((s, k) for s, k in expf if s in names)
            e_out = tuple((s, k) for s, k in expf if s not in names)
            key = (m_in, e_in)
            rest = out.setdefault(key, ExpPoly())
            rest._add_term(rest.terms, (m_out, e_out), c)
        return out

    def term_count(self) -> int:
        return len(self.terms)

    def content_and_leading(self):
        """(leading key, leading coefficient) in the global term order."""
        key = max(self.terms, key=_term_order_key)
        return key, self.terms[key]

    # -- evaluation ---------------------------------------------------------

    def eval_float(self, bindings) -> float:
        """Numeric evaluation with float exponentials (testing oracle)."""
        total = 0.0
        for (mono, expf), c in self.terms.items():
            v = float(c)
            for s, k in mono:
                v *= float(bindings[s]) ** k
            for s, r in expf:
                v *= math.exp(float(r) * float(bindings[s]))
            total += v
        return total

    # -- rendering -----------------------------------------------------------

    def __repr__(self):
        return "ExpPoly(%s)" % str(self)

    def __str__(self):
        return render_poly(self)


def _term_order_key(key):
    mono, expf = key
    deg = sum(k for _, k in mono)
    return (
        deg,
        tuple((symbol_key(s), k) for s, k in mono),
        tuple((symbol_key(s), k) for s, k in expf),
    )


class RatExpr:
    """Fraction num/den of exp-polynomials with light normalization.

    Normalization folds the denominator into the numerator whenever the exact
    division succeeds (always the case when the denominator is a single
    exponential term), strips common single-term content and scales the
    denominator's leading coefficient to one.  Zero testing therefore reduces
    to the numerator being the zero polynomial.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _normalized=False):
        num = _expoly(num)
        den = ExpPoly.one() if den is None else _expoly(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in RatExpr")
        if not _normalized:
            num, den = _normalize_fraction(num, den)
        self.num = num
        self.den = den

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den == ExpPoly.one()

    def as_expoly(self) -> ExpPoly:
        if not self.is_poly():
            raise ExprError("nontrivial denominator: %s" % self)
        return self.num

    def free_symbols(self) -> set:
        return self.num.free_symbols() | self.den.free_symbols()

    def depends_on(self, name: str) -> bool:
        return self.num.depends_on(name) or self.den.depends_on(name)

    def __add__(self, other):
        other = as_ratexpr(other)
        return RatExpr(self.num * other.den + other.num * self.den,
                       self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatExpr(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        return self + (-as_ratexpr(other))

    def __rsub__(self, other):
        return as_ratexpr(other) + (-self)

    def __mul__(self, other):
        other = as_ratexpr(other)
        return RatExpr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_ratexpr(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero expression")
        return RatExpr(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return as_ratexpr(other) / self

    def __pow__(self, n: int):
        if n >= 0:
            return RatExpr(self.num ** n, self.den ** n)
        if self.is_zero():
            raise ZeroDivisionError("negative power of zero")
        return RatExpr(self.den ** (-n), self.num ** (-n))

    def __eq__(self, other):
        try:
            other = as_ratexpr(other)
        except (TypeError, ExprError):
            return NotImplemented
        return (self.num * other.den) == (other.num * self.den)

    def __hash__(self):
        return hash((self.num, self.den))

    def __bool__(self):
        return not self.is_zero()

    def diff(self, name: str) -> "RatExpr":
        return RatExpr(self.num.diff(name) * self.den - self.num * self.den.diff(name),
                       self.den * self.den)

    def subs(self, bindings):
        num = as_ratexpr(self.num.subs(bindings))
        den = as_ratexpr(self.den.subs(bindings))
        return num / den

    def subs_exp_power(self, name, rate, value):
        num = as_ratexpr(self.num.subs_exp_power(name, rate, value))
        den = as_ratexpr(self.den.subs_exp_power(name, rate, value))
        return num / den

    def eval_float(self, bindings) -> float:
        return self.num.eval_float(bindings) / self.den.eval_float(bindings)

    def __repr__(self):
        return "RatExpr(%s)" % str(self)

    def __str__(self):
        if self.is_poly():
            return str(self.num)
        num = render_poly(self.num)
        if self.num.term_count() > 1:
            num = "(%s)" % num
        den = render_poly(self.den)
        if self.den.term_count() > 1 or "*" in den or den.startswith("-"):
            den = "(%s)" % den
        return "%s/%s" % (num, den)


def _expoly(v) -> ExpPoly:
    if isinstance(v, ExpPoly):
        return v
    if isinstance(v, RatExpr):
        return v.as_expoly()
    if isinstance(v, (int, Fraction)):
        return ExpPoly.number(v)
    raise TypeError("cannot coerce %r to ExpPoly" % (v,))


def as_scalar(v):
    """Coerce to ExpPoly or RatExpr, preferring the polynomial form."""
    if isinstance(v, ExpPoly):
        return v
    if isinstance(v, RatExpr):
        return v.num if v.is_poly() else v
    if isinstance(v, (int, Fraction)):
        return ExpPoly.number(v)
    if isinstance(v, str):
        return parse_expr(v)
    raise TypeError("cannot coerce %r to a scalar" % (v,))


def as_ratexpr(v) -> RatExpr:
    if isinstance(v, RatExpr):
        return v
    if isinstance(v, str):
        v = parse_expr(v)
        if isinstance(v, RatExpr):
            return v
    return RatExpr(_expoly(v), None, _normalized=True)


def scalar_eq(a, b) -> bool:
    return as_ratexpr(a) == as_ratexpr(b)


def scalar_is_zero(a) -> bool:
    a = as_scalar(a)
    return a.is_zero()


# -- exact division and fraction normalization -------------------------------

def _term_divide(key_num, key_den):
    """Divide two term keys; None when monomial exponents would go negative.

    Exponential exponents live in a lattice over Q and always divide.
    """
    (mn, en), (md, ed) = key_num, key_den
    mono = dict(mn)
    for s, k in md:
        v = mono.get(s, 0) - k
        if v < 0:
            return None
        if v == 0:
            mono.pop(s, None)
        else:
            mono[s] = v
    expf = dict(en)
    for s, k in ed:
        v = expf.get(s, Q(0)) - k
        if v == 0:
            expf.pop(s, None)
        else:
            expf[s] = v
    return (_sorted_items(mono), _sorted_items(expf))


def divide_exact(num: ExpPoly, den: ExpPoly):
    """Exact division in the exp-polynomial ring; None when not divisible.

    Greedy leading-term division is complete for exact quotients because the
    term monoid is totally ordered and cancellative.
    """
    if den.is_zero():
        raise ZeroDivisionError("division by zero expression")
    if num.is_zero():
        return ExpPoly.zero()
    den_key, den_c = den.content_and_leading()
    quo = {}
    rem = ExpPoly(dict(num.terms))
    # exact quotients terminate in len(quotient) steps; the cap only guards
    # runaway inexact divisions, whose callers treat None as "keep fraction"
    for _ in range(10000):
        if rem.is_zero():
            return ExpPoly(quo)
        rkey, rc = rem.content_and_leading()
        qkey = _term_divide(rkey, den_key)
        if qkey is None:
            return None
        qc = rc / den_c
        quo[qkey] = quo.get(qkey, Q(0)) + qc
        rem = rem - ExpPoly({qkey: qc}) * den
    return None


def _single_term_content(p: ExpPoly):
    """Largest single term dividing every term of p (unit coefficient).

    Monomial exponents intersect by positive minimum; exponential exponents
    take the componentwise minimum over Q (symbols absent from a term count
    as zero), so e.g. 1 + exp(-x) has content exp(-x).
    """
    keys = list(p.terms)
    mono = dict(keys[0][0])
    expf = dict(keys[0][1])
    for mk, ek in keys[1:]:
        md, ed = dict(mk), dict(ek)
        mono = {s: min(k, md.get(s, 0)) for s, k in mono.items() if md.get(s, 0) > 0}
        expf = {s: v for s in set(expf) | set(ed)
                if (v := min(expf.get(s, Q(0)), ed.get(s, Q(0)))) != 0}
    return (_sorted_items(mono), _sorted_items(expf))


def _normalize_fraction(num: ExpPoly, den: ExpPoly):
    if num.is_zero():
        return num, ExpPoly.one()
    if den.is_number():
        c = den.as_number()
        return ExpPoly({k: v / c for k, v in num.terms.items()}), ExpPoly.one()
    q = divide_exact(num, den)
    if q is not None:
        return q, ExpPoly.one()
    # strip common single-term content from the denominator side
    content = _single_term_content(den)
    if content != ((), ()):
        one = ExpPoly({content: Q(1)})
        den_r = divide_exact(den, one)
        num_r = divide_exact(num, one)
        if num_r is not None:
            num, den = num_r, den_r
        else:
            # exp content always cancels; keep monomial part in the denominator
            exp_only = ((), content[1])
            if exp_only != ((), ()):
                num = divide_exact(num, ExpPoly({exp_only: Q(1)}))
                den = divide_exact(den, ExpPoly({exp_only: Q(1)}))
    _, lead = den.content_and_leading()
    if lead != 1:
        num = ExpPoly({k: v / lead for k, v in num.terms.items()})
        den = ExpPoly({k: v / lead for k, v in den.terms.items()})
    return num, den


# -- rendering ----------------------------------------------------------------

def _render_number(q: Q) -> str:
    return str(q)


def _render_linear_form(expf) -> str:
    parts = []
    for s, c in expf:
        if c == 1:
            term = s
        elif c == -1:
            term = "-%s" % s
        else:
            term = "%s*%s" % (_render_number(c), s)
        if parts and not term.startswith("-"):
            parts.append("+ " + term)
        elif parts:
            parts.append("- " + term[1:])
        else:
            parts.append(term)
    return " ".join(parts)


def _render_term(key, coeff) -> str:
    mono, expf = key
    factors = []
    for s, k in mono:
        factors.append(s if k == 1 else "%s^%d" % (s, k))
    if expf:
        factors.append("exp(%s)" % _render_linear_form(expf))
    if not factors:
        return _render_number(coeff)
    body = "*".join(factors)
    if coeff == 1:
        return body
    if coeff == -1:
        return "-" + body
    return "%s*%s" % (_render_number(coeff), body)


def render_poly(p: ExpPoly, wrap_for_product: bool = False) -> str:
    """Deterministic plain-text form; graded, then lexicographic term order."""
    if p.is_zero():
        return "0"
    keys = sorted(p.terms, key=_term_order_key)
    parts = []
    for key in keys:
        term = _render_term(key, p.terms[key])
        if not parts:
            parts.append(term)
        elif term.startswith("-"):
            parts.append("- " + term[1:])
        else:
            parts.append("+ " + term)
    text = " ".join(parts)
    if wrap_for_product and len(keys) > 1:
        return "(%s)" % text
    return text


_GREEK = {
    "alpha": r"\alpha", "beta": r"\beta", "gamma": r"\gamma", "delta": r"\delta",
    "epsilon": r"\epsilon", "lambda": r"\lambda", "mu": r"\mu", "rho": r"\rho",
    "theta": r"\theta", "phi": r"\varphi", "q": "q", "qt": r"\tilde q",
    "qh": r"\hat q",
}


def latex_symbol(name: str) -> str:
    m = _COORD_RE.fullmatch(name)
    if m:
        return "x_%s" % m.group(1)
    if name in _GREEK:
        return _GREEK[name]
    if "_" in name:
        head, tail = name.split("_", 1)
        return "%s_{%s}" % (head, tail)
    return name


def _latex_number(q: Q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    sign = "-" if q < 0 else ""
    return r"%s\tfrac{%d}{%d}" % (sign, abs(q.numerator), q.denominator)


def latex_poly(p: ExpPoly) -> str:
    if p.is_zero():
        return "0"
    keys = sorted(p.terms, key=_term_order_key)
    parts = []
    for key in keys:
        mono, expf = key
        coeff = p.terms[key]
        factors = []
        for s, k in mono:
            base = latex_symbol(s)
            factors.append(base if k == 1 else "%s^{%d}" % (base, k))
        if expf:
            arg = []
            for s, c in expf:
                cs = latex_symbol(s)
                if c == 1:
                    piece = cs
                elif c == -1:
                    piece = "-" + cs
                else:
                    piece = _latex_number(c) + cs
                if arg and not piece.startswith("-"):
                    arg.append("+" + piece)
                else:
                    arg.append(piece)
            factors.append("e^{%s}" % "".join(arg))
        body = "".join(factors)
        if not body:
            term = _latex_number(coeff)
        elif coeff == 1:
            term = body
        elif coeff == -1:
            term = "-" + body
        else:
            term = _latex_number(coeff) + body
        if parts and not term.startswith("-"):
            parts.append("+" + term)
        else:
            parts.append(term)
    return "".join(parts)


def latex_scalar(v) -> str:
    v = as_scalar(v)
    if isinstance(v, ExpPoly):
        return latex_poly(v)
    return r"\frac{%s}{%s}" % (latex_poly(v.num), latex_poly(v.den))


# -- parsing ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ExprError("cannot tokenize %r" % text[pos:])
            break
        pos = m.end()
        if m.group("num"):
            out.append(("num", int(m.group("num"))))
        elif m.group("name"):
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
    out.append(("end", None))
    return out


class _Parser:
    """Recursive-descent parser for the shared expression syntax.

    Grammar: integers, fractions a/b (general '/' builds a RatExpr), symbols,
    + - * / ^ with nonnegative integer powers, and exp(<linear form>).
    """

    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ExprError("expected %r, found %r" % (op, val))

    def parse(self):
        v = self.expr()
        kind, val = self.peek()
        if kind != "end":
            raise ExprError("unexpected trailing token %r" % (val,))
        return v

    def expr(self):
        kind, val = self.peek()
        negate = False
        if kind == "op" and val in "+-":
            self.take()
            negate = val == "-"
        v = self.term()
        if negate:
            v = -v
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                v = v - rhs if val == "-" else v + rhs
            else:
                return v

    def term(self):
        v = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.power()
                v = v * rhs if val == "*" else as_ratexpr(v) / as_ratexpr(rhs)
            else:
                return v

    def power(self):
        v = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, n = self.take()
            neg = False
            if kind == "op" and n == "-":
                neg = True
                kind, n = self.take()
            if kind != "num":
                raise ExprError("exponent must be an integer")
            v = as_ratexpr(v) ** (-n) if neg else v ** n
        return v

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ExpPoly.number(val)
        if kind == "op" and val == "-":
            return -self.atom()
        if kind == "op" and val == "(":
            v = self.expr()
            self.expect_op(")")
            return v
        if kind == "name":
            if val == "exp":
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                arg = as_scalar(arg)
                if isinstance(arg, RatExpr):
                    raise UnsupportedExpressionError("exp() argument must be linear")
                form = arg.linear_form()
                if form is None and not arg.is_zero():
                    raise UnsupportedExpressionError(
                        "exp() argument must be a linear form: %s" % arg)
                return ExpPoly.exp_linear(form or {})
            return ExpPoly.symbol(val)
        raise ExprError("unexpected token %r" % (val,))


def parse_expr(text: str):
    """Parse to ExpPoly when possible, RatExpr when a true fraction remains."""
    v = _Parser(_tokenize(text)).parse()
    return as_scalar(v)


def parse_poly(text: str) -> ExpPoly:
    v = parse_expr(text)
    if isinstance(v, RatExpr):
        return v.as_expoly()
    return v


# -- raw expression trees (canonicalize oracle interface) ---------------------

def canonicalize(tree):
    """Canonical ExpPoly of a raw tree of +, *, rationals, symbols, exp().

    Trees are nested tuples ('add', ...), ('mul', ...), ('pow', t, n),
    ('exp', t), ('neg', t), plus leaves: numbers, Fraction, symbol strings.
    The result is zero exactly when the input is identically zero.
    """
    if isinstance(tree, (int, Fraction)):
        return ExpPoly.number(tree)
    if isinstance(tree, str):
        return ExpPoly.symbol(tree)
    if isinstance(tree, ExpPoly):
        return ExpPoly(dict(tree.terms))
    op = tree[0]
    if op == "add":
        out = ExpPoly.zero()
        for sub in tree[1:]:
            out = out + canonicalize(sub)
        return out
    if op == "mul":
        out = ExpPoly.one()
        for sub in tree[1:]:
            out = out * canonicalize(sub)
        return out
    if op == "neg":
        return -canonicalize(tree[1])
    if op == "pow":
        return canonicalize(tree[1]) ** tree[2]
    if op == "exp":
        arg = canonicalize(tree[1])
        form = arg.linear_form()
        if form is None and not arg.is_zero():
            raise UnsupportedExpressionError(
                "exp() argument must be a linear form: %s" % arg)
        return ExpPoly.exp_linear(form or {})
    raise ExprError("unknown tree node %r" % (op,))


def tree_eval(tree, bindings) -> float:
    """Float evaluation of a raw tree, independent of canonicalize."""
    if isinstance(tree, (int, Fraction)):
        return float(tree)
    if isinstance(tree, str):
        return float(bindings[tree])
    if isinstance(tree, ExpPoly):
        return tree.eval_float(bindings)
    op = tree[0]
    if op == "add":
        return sum(tree_eval(s, bindings) for s in tree[1:])
    if op == "mul":
        out = 1.0
        for s in tree[1:]:
            out *= tree_eval(s, bindings)
        return out
    if op == "neg":
        return -tree_eval(tree[1], bindings)
    if op == "pow":
        return tree_eval(tree[1], bindings) ** tree[2]
    if op == "exp":
        return math.exp(tree_eval(tree[1], bindings))
    raise ExprError("unknown tree node %r" % (op,))
