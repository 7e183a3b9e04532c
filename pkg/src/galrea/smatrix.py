"""Symbolic matrices over exp-polynomial scalars.

Provides exact matrix algebra (products, fraction-field Gauss-Jordan
inversion, row reduction and nullspaces) plus the exact matrix exponential
used to build left-invariant one-forms:

* rational matrices with rational spectrum go through Putzer's recurrence,
  whose auxiliary functions are solved in closed form inside the
  exp-polynomial class, so the result exp(sign*t*A) is exact;
* matrices with parameter entries are admitted only when nilpotent, in which
  case the truncated series is already exact.

Eigenvalues are found by exact rational root extraction from the
characteristic polynomial (Faddeev-LeVerrier); irrational or complex spectra
raise RationalSpectrumError instead of being approximated.
"""

from __future__ import annotations

from .expr import (
    ExpPoly,
    ExprError,
    Q,
    RatExpr,
    as_ratexpr,
    as_scalar,
)

__all__ = [
    "SymMatrix",
    "SingularMatrixError",
    "RationalSpectrumError",
    "mat_inverse",
    "mat_exp_ad",
    "char_poly",
    "rational_eigenvalues",
    "rref",
    "nullspace",
    "in_row_span",
]


class SingularMatrixError(ExprError):
    """Symbolic determinant is identically zero."""


class RationalSpectrumError(ExprError):
    """The adjoint matrix does not have the rational spectrum the exact
    exponential requires."""


class SymMatrix:
    """Dense rectangular matrix with ExpPoly/RatExpr entries."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data):
        self.data = [[as_scalar(v) for v in row] for row in data]
        self.rows = len(self.data)
        self.cols = len(self.data[0]) if self.data else 0
        if any(len(row) != self.cols for row in self.data):
            raise ExprError("ragged matrix")

    @staticmethod
    def identity(n: int) -> "SymMatrix":
        return SymMatrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def zeros(rows: int, cols: int) -> "SymMatrix":
        return SymMatrix([[0] * cols for _ in range(rows)])

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def __setitem__(self, ij, value):
        i, j = ij
        self.data[i][j] = as_scalar(value)

    def column(self, j: int):
        return [self.data[i][j] for i in range(self.rows)]

    def row(self, i: int):
        return list(self.data[i])

    def copy(self) -> "SymMatrix":
        return SymMatrix([list(r) for r in self.data])

    def transpose(self) -> "SymMatrix":
        return SymMatrix([[self.data[i][j] for i in range(self.rows)]
                          for j in range(self.cols)])

    def __mul__(self, other):
        if isinstance(other, SymMatrix):
            if self.cols != other.rows:
                raise ExprError("dimension mismatch in matrix product")
            out = []
            for i in range(self.rows):
                row = []
                for j in range(other.cols):
                    acc = as_scalar(0)
                    for k in range(self.cols):
                        a = self.data[i][k]
                        if a.is_zero():
                            continue
                        b = other.data[k][j]
                        if b.is_zero():
                            continue
                        acc = acc + a * b
                    row.append(acc)
                out.append(row)
            return SymMatrix(out)
        return SymMatrix([[v * other for v in row] for row in self.data])

    __rmul__ = __mul__

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ExprError("dimension mismatch in matrix sum")
        return SymMatrix([[self.data[i][j] + other.data[i][j]
                           for j in range(self.cols)] for i in range(self.rows)])

    def __sub__(self, other):
        return self + (other * (-1))

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        if self.rows != other.rows or self.cols != other.cols:
            return False
        return all(self.data[i][j] == other.data[i][j]
                   for i in range(self.rows) for j in range(self.cols))

    def __hash__(self):
        return hash(tuple(tuple(str(v) for v in row) for row in self.data))

    def is_identity(self) -> bool:
        if self.rows != self.cols:
            return False
        one, zero = as_scalar(1), as_scalar(0)
        return all(self.data[i][j] == (one if i == j else zero)
                   for i in range(self.rows) for j in range(self.cols))

    def is_zero(self) -> bool:
        return all(v.is_zero() for row in self.data for v in row)

    def apply(self, vector):
        """Matrix times coordinate column (list of scalars)."""
        if len(vector) != self.cols:
            raise ExprError("vector length mismatch")
        out = []
        for i in range(self.rows):
            acc = as_scalar(0)
            for j, v in enumerate(vector):
                v = as_scalar(v)
                if not v.is_zero() and not self.data[i][j].is_zero():
                    acc = acc + self.data[i][j] * v
            out.append(acc)
        return out

    def subs(self, bindings) -> "SymMatrix":
        return SymMatrix([[v.subs(bindings) for v in row] for row in self.data])

    def rational_entries(self):
        """All entries as Fractions, or None when any entry is symbolic."""
        out = []
        for row in self.data:
            r = []
            for v in row:
                if isinstance(v, RatExpr):
                    if not v.is_poly():
                        return None
                    v = v.num
                if not v.is_number():
                    return None
                r.append(v.as_number())
            out.append(r)
        return out

    def __repr__(self):
        body = "; ".join(", ".join(str(v) for v in row) for row in self.data)
        return "SymMatrix[%s]" % body


def _pivot_cost(v) -> tuple:
    v = as_ratexpr(v)
    return (v.den.term_count(), v.num.term_count())


def mat_inverse(M: SymMatrix) -> SymMatrix:
    """Exact inverse by Gauss-Jordan over the fraction field.

    Pivots are chosen among symbolically nonzero entries, preferring the
    sparsest fraction to limit intermediate growth.  Entries of the result
    simplify back to ExpPoly whenever the denominator divides exactly.
    """
    if M.rows != M.cols:
        raise ExprError("inverse of a non-square matrix")
    n = M.rows
    a = [[as_ratexpr(M[i, j]) for j in range(n)] for i in range(n)]
    b = [[as_ratexpr(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivots = [(r, a[r][col]) for r in range(col, n) if not a[r][col].is_zero()]
        if not pivots:
            raise SingularMatrixError("matrix is symbolically singular")
        r, _ = min(pivots, key=lambda p: _pivot_cost(p[1]))
        a[col], a[r] = a[r], a[col]
        b[col], b[r] = b[r], b[col]
        piv = a[col][col]
        inv = as_ratexpr(1) / piv
        a[col] = [v * inv for v in a[col]]
        b[col] = [v * inv for v in b[col]]
        for r2 in range(n):
            if r2 == col or a[r2][col].is_zero():
                continue
            f = a[r2][col]
            a[r2] = [v - f * w for v, w in zip(a[r2], a[col])]
            b[r2] = [v - f * w for v, w in zip(b[r2], b[col])]
    return SymMatrix(b)


# -- row reduction over the fraction field ------------------------------------

def rref(rows):
    """Reduced row echelon form of a list of scalar rows.

    Returns (reduced nonzero rows, pivot column indices).  Exact arithmetic
    over RatExpr; pivoting takes the first symbolically nonzero entry, and any
    denominators introduced are parameter expressions (generic-parameter
    semantics for catalog computations).
    """
    work = [[as_ratexpr(v) for v in row] for row in rows]
    ncols = len(work[0]) if work else 0
    pivots = []
    rank = 0
    for col in range(ncols):
        pr = None
        for r in range(rank, len(work)):
            if not work[r][col].is_zero():
                pr = r
                break
        if pr is None:
            continue
        work[rank], work[pr] = work[pr], work[rank]
        piv = work[rank][col]
        inv = as_ratexpr(1) / piv
        work[rank] = [v * inv for v in work[rank]]
        for r in range(len(work)):
            if r == rank or work[r][col].is_zero():
                continue
            f = work[r][col]
            work[r] = [v - f * w for v, w in zip(work[r], work[rank])]
        pivots.append(col)
        rank += 1
    return work[:rank], pivots


def in_row_span(rows, vector) -> bool:
    """Whether ``vector`` lies in the row span (exact, generic parameters)."""
    base, _ = rref(rows)
    red = _reduce_against(base, [as_ratexpr(v) for v in vector])
    return all(v.is_zero() for v in red)


def _reduce_against(rref_rows, vector):
    vec = list(vector)
    for row in rref_rows:
        lead = next(i for i, v in enumerate(row) if not v.is_zero())
        f = vec[lead]
        if not f.is_zero():
            vec = [v - f * w for v, w in zip(vec, row)]
    return vec


def nullspace(rows, ncols=None):
    """Basis of the right nullspace of the row list (list of coordinate lists)."""
    if not rows:
        return [[as_ratexpr(1 if i == j else 0) for i in range(ncols)]
                for j in range(ncols)] if ncols else []
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [as_ratexpr(0)] * ncols
        vec[fc] = as_ratexpr(1)
        for row, pc in zip(red, pivots):
            vec[pc] = -row[fc]
        basis.append(vec)
    return basis


# -- characteristic polynomial and eigenvalues --------------------------------

def char_poly(entries):
    """Coefficients c_0..c_n of det(lambda*I - A) via Faddeev-LeVerrier.

    ``entries`` is a square list of Fractions.  Returned list has c_n == 1.
    """
    n = len(entries)
    a = [[Q(v) for v in row] for row in entries]
    coeffs = [Q(0)] * (n + 1)
    coeffs[n] = Q(1)
    m = [[Q(0)] * n for _ in range(n)]
    c = Q(1)
    for k in range(1, n + 1):
        # M_k = A*M_{k-1} + c_{n-k+1} I ; c_{n-k} = -tr(A*M_k)/k
        am = [[sum(a[i][t] * m[t][j] for t in range(n)) for j in range(n)]
              for i in range(n)]
        for i in range(n):
            am[i][i] += c
        trace = sum(sum(a[i][t] * am[t][i] for t in range(n)) for i in range(n))
        c = -trace / k
        coeffs[n - k] = c
        m = am
    return coeffs


def _rational_roots_monic(coeffs):
    """All rational roots (with multiplicity) of a monic Fraction polynomial.

    Returns (roots, residual) where residual is the non-factored part
    (constant [1] when the polynomial splits over Q).
    """
    poly = list(coeffs)
    roots = []
    while len(poly) > 1:
        # strip lambda^k factors first: root 0 with multiplicity
        if poly[0] == 0:
            roots.append(Q(0))
            poly = poly[1:]
            continue
        den_lcm = 1
        for c in poly:
            den_lcm = den_lcm * c.denominator // _gcd(den_lcm, c.denominator)
        ints = [int(c * den_lcm) for c in poly]
        p0, pn = abs(ints[0]), abs(ints[-1])
        found = None
        for p in _divisors(p0):
            for q in _divisors(pn):
                for cand in (Q(p, q), Q(-p, q)):
                    if _poly_eval(poly, cand) == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            break
        roots.append(found)
        poly = _deflate(poly, found)
    return roots, poly


def rational_eigenvalues(entries):
    """Eigenvalues (with multiplicity) of a rational matrix; all must be
    rational, otherwise RationalSpectrumError names the residual factor."""
    coeffs = char_poly(entries)
    roots, residual = _rational_roots_monic(coeffs)
    if len(residual) > 1:
        txt = " + ".join("%s*L^%d" % (c, k) for k, c in enumerate(residual) if c != 0)
        raise RationalSpectrumError(
            "characteristic polynomial has a non-rational factor: %s" % txt)
    return roots


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _divisors(n: int):
    n = abs(n)
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def _poly_eval(coeffs, x: Q) -> Q:
    acc = Q(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _deflate(coeffs, root: Q):
    """Synthetic division by (lambda - root); exact for true roots."""
    n = len(coeffs) - 1
    out = [Q(0)] * n
    acc = coeffs[n]
    for k in range(n - 1, -1, -1):
        out[k] = acc
        acc = coeffs[k] + acc * root
    assert acc == 0
    return out


# -- exact matrix exponential --------------------------------------------------

def _integrate_in(p: ExpPoly, sym: str) -> ExpPoly:
    """Definite integral of an exp-polynomial in ``sym`` from 0 to sym.

    Each term c * sym^k * exp(mu*sym) integrates in closed form; the
    antiderivative stays in the class because mu is rational.
    """
    total = ExpPoly.zero()
    t = ExpPoly.symbol(sym)
    for (mono, expf), c in p.terms.items():
        mdict = dict(mono)
        k = mdict.pop(sym, 0)
        edict = dict(expf)
        mu = edict.pop(sym, Q(0))
        rest = ExpPoly.term(c, mdict, edict)
        if mu == 0:
            part = (t ** (k + 1)) * Q(1, k + 1)
        else:
            # integral of s^k e^(mu s) ds = e^(mu s) * sum_i (-1)^i k!/(k-i)! s^(k-i) / mu^(i+1)
            e_mu = ExpPoly.exp_linear({sym: mu})
            series = ExpPoly.zero()
            fall = 1
            for i in range(k + 1):
                series = series + (t ** (k - i)) * Q((-1) ** i * fall) / ExpPoly.number(mu ** (i + 1))
                fall *= (k - i)
            part = e_mu * series
            const = Q((-1) ** k * _factorial(k)) / mu ** (k + 1)
            part = part - ExpPoly.number(const)
        total = total + rest * part
    return total


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def _is_nilpotent(M: SymMatrix):
    n = M.rows
    power = M
    for _ in range(n):
        if power.is_zero():
            return True
        power = power * M
    return power.is_zero()


def mat_exp_ad(A: SymMatrix, t: str, sign: int = 1) -> SymMatrix:
    """Exact exp(sign*t*A) with entries exp-polynomial in the symbol ``t``.

    Rational matrices must have rational spectrum (Putzer's recurrence with
    exact eigenvalues); matrices with parameter entries are accepted only when
    nilpotent, where the truncated series is exact.
    """
    if A.rows != A.cols:
        raise ExprError("matrix exponential of a non-square matrix")
    if sign not in (1, -1):
        raise ExprError("sign must be +1 or -1")
    n = A.rows
    entries = A.rational_entries()
    signed = A * sign
    if entries is None:
        if not _is_nilpotent(signed):
            raise RationalSpectrumError(
                "parameter-dependent matrix must be nilpotent for an exact exponential")
        term = SymMatrix.identity(n)
        total = SymMatrix.identity(n)
        ts = ExpPoly.symbol(t)
        for k in range(1, n):
            term = term * signed * (ts * Q(1, k))
            if term.is_zero():
                break
            total = total + term
        return total
    lams = rational_eigenvalues([[sign * v for v in row] for row in entries])
    lams.sort()
    # Putzer: exp(tB) = sum_j r_{j+1}(t) P_j with P_0 = I,
    # P_j = prod_{k<=j} (B - lam_k I), r_1' = lam_1 r_1, r_j' = lam_j r_j + r_{j-1}
    ts = ExpPoly.symbol(t)
    r = ExpPoly.exp_linear({t: lams[0]})
    p = SymMatrix.identity(n)
    total = p * r
    for j in range(1, n):
        lam = lams[j]
        shift = SymMatrix([[as_scalar(entries[a][b] * sign) - (lams[j - 1] if a == b else 0)
                            for b in range(n)] for a in range(n)])
        p = p * shift
        if p.is_zero():
            break
        # r_j(t) = e^(lam t) * integral_0^t e^(-lam s) r_{j-1}(s) ds
        integrand = ExpPoly.exp_linear({t: -lam}) * r
        r = ExpPoly.exp_linear({t: lam}) * _integrate_in(integrand, t)
        total = total + p * r
    return total
