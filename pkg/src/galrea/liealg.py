"""Finite-dimensional Lie algebras over exact exp-polynomial scalars.

Structure constants may depend polynomially (or, for a few catalog entries,
rationally) on parameter symbols; all linear algebra runs over the fraction
field of parameter expressions, so results hold for generic parameter values.
Parameter range strings such as "alpha >= 0" are carried as metadata only:
they record the classification-theoretic restriction, not an algebraic one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import ExprError, as_ratexpr, as_scalar, scalar_is_zero
from .smatrix import SymMatrix, in_row_span, nullspace, rref

__all__ = [
    "LieAlgebra",
    "Subalgebra",
    "LinearMap",
    "JacobiReport",
    "jacobi_check",
    "adjoint",
    "change_basis",
    "is_automorphism",
    "subalgebra_closed",
    "largest_ideal_in",
    "basis_vector",
    "span_equal",
]


def basis_vector(n: int, i: int):
    return [as_scalar(1 if j == i else 0) for j in range(n)]


class LieAlgebra:
    """Lie algebra given by structure constants on a named basis.

    ``brackets`` maps ordered index pairs (i, j) with i < j to the coefficient
    vector of [e_i, e_j]; antisymmetry is built into the accessors.  The
    constructor does not assume the Jacobi identity; jacobi_check verifies it.
    """

    def __init__(self, name, basis, brackets, params=None, param_ranges=None):
        self.name = name
        self.basis = list(basis)
        self.dim = len(self.basis)
        self.params = list(params or [])
        self.param_ranges = dict(param_ranges or {})
        self.brackets = {}
        for (i, j), vec in brackets.items():
            if i == j:
                if any(not scalar_is_zero(v) for v in vec):
                    raise ExprError("nonzero bracket [e_i, e_i]")
                continue
            vec = [as_scalar(v) for v in vec]
            if len(vec) != self.dim:
                raise ExprError("bracket vector of wrong length")
            if i > j:
                i, j = j, i
                vec = [-v for v in vec]
            if any(not v.is_zero() for v in vec):
                self.brackets[(i, j)] = vec

    def index(self, label: str) -> int:
        return self.basis.index(label)

    def bracket_basis(self, i: int, j: int):
        if i == j:
            return [as_scalar(0)] * self.dim
        if i < j:
            vec = self.brackets.get((i, j))
            return list(vec) if vec else [as_scalar(0)] * self.dim
        vec = self.brackets.get((j, i))
        return [-v for v in vec] if vec else [as_scalar(0)] * self.dim

    def bracket(self, u, v):
        """Bracket of two coefficient vectors."""
        u = [as_scalar(c) for c in u]
        v = [as_scalar(c) for c in v]
        out = [as_scalar(0)] * self.dim
        for (i, j), vec in self.brackets.items():
            c = u[i] * v[j] - u[j] * v[i]
            if scalar_is_zero(c):
                continue
            out = [o + c * w for o, w in zip(out, vec)]
        return out

    def structure_constant(self, i: int, j: int, k: int):
        return self.bracket_basis(i, j)[k]

    def constants_equal(self, other: "LieAlgebra") -> bool:
        if self.dim != other.dim:
            return False
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                a = self.bracket_basis(i, j)
                b = other.bracket_basis(i, j)
                if any(x != y for x, y in zip(a, b)):
                    return False
        return True

    def vector(self, combo) -> list:
        """Coefficient vector from a {label: scalar} mapping."""
        out = [as_scalar(0)] * self.dim
        for label, c in combo.items():
            out[self.index(label)] = out[self.index(label)] + as_scalar(c)
        return out

    def __repr__(self):
        return "LieAlgebra(%s, dim=%d)" % (self.name, self.dim)


@dataclass
class JacobiReport:
    holds: bool
    violations: list = field(default_factory=list)


def jacobi_check(L: LieAlgebra) -> JacobiReport:
    """Cyclic-sum test; violations list (i, j, k, residual vector)."""
    n = L.dim
    violations = []
    for i in range(n):
        for j in range(i + 1, n):
            cij = L.bracket_basis(i, j)
            for k in range(j + 1, n):
                res = L.bracket(cij, basis_vector(n, k))
                res2 = L.bracket(L.bracket_basis(j, k), basis_vector(n, i))
                res3 = L.bracket(L.bracket_basis(k, i), basis_vector(n, j))
                total = [a + b + c for a, b, c in zip(res, res2, res3)]
                if any(not scalar_is_zero(v) for v in total):
                    violations.append((i, j, k, total))
    return JacobiReport(holds=not violations, violations=violations)


def adjoint(L: LieAlgebra, v) -> SymMatrix:
    """Matrix of ad_v; column i holds the coefficients of [v, e_i]."""
    if len(v) != L.dim:
        raise ExprError("adjoint argument has wrong length")
    cols = [L.bracket(v, basis_vector(L.dim, i)) for i in range(L.dim)]
    return SymMatrix([[cols[i][k] for i in range(L.dim)] for k in range(L.dim)])


class LinearMap:
    """Invertible linear map, acting from the left on coordinate columns.

    Columns of the matrix are the images of the basis vectors; determinant
    must not vanish identically in the parameters.
    """

    def __init__(self, matrix):
        self.matrix = matrix if isinstance(matrix, SymMatrix) else SymMatrix(matrix)
        if self.matrix.rows != self.matrix.cols:
            raise ExprError("linear map must be square")
        reduced, _ = rref(self.matrix.data)
        if len(reduced) != self.matrix.rows:
            raise ExprError("linear map is symbolically singular")

    @property
    def n(self):
        return self.matrix.rows

    def apply(self, vector):
        return self.matrix.apply(vector)

    def column(self, i):
        return self.matrix.column(i)


def change_basis(L: LieAlgebra, U, new_basis=None, name=None) -> LieAlgebra:
    """Structure constants of the same bracket in the basis f_i = sum_j U_ji e_j.

    Columns of U are the new basis vectors in old coordinates; the inverse
    transform recovers the original constants exactly.
    """
    if isinstance(U, LinearMap):
        U = U.matrix
    elif not isinstance(U, SymMatrix):
        U = SymMatrix(U)
    from .smatrix import mat_inverse

    n = L.dim
    w = mat_inverse(U)
    brackets = {}
    for i in range(n):
        fi = U.column(i)
        for j in range(i + 1, n):
            fj = U.column(j)
            vec = w.apply(L.bracket(fi, fj))
            if any(not scalar_is_zero(v) for v in vec):
                brackets[(i, j)] = vec
    basis = list(new_basis) if new_basis else ["f%d" % (i + 1) for i in range(n)]
    return LieAlgebra(name or (L.name + "'"), basis, brackets,
                      params=L.params, param_ranges=L.param_ranges)


def is_automorphism(L: LieAlgebra, U) -> bool:
    """U[x,y] == [Ux, Uy] identically in algebra and map parameters."""
    if isinstance(U, LinearMap):
        U = U.matrix
    elif not isinstance(U, SymMatrix):
        U = SymMatrix(U)
    n = L.dim
    for i in range(n):
        for j in range(i + 1, n):
            lhs = U.apply(L.bracket_basis(i, j))
            rhs = L.bracket(U.column(i), U.column(j))
            if any(a != b for a, b in zip(lhs, rhs)):
                return False
    return True


class Subalgebra:
    """Subspace given by generator vectors, checked for independence."""

    def __init__(self, parent: LieAlgebra, gens, labels=None):
        self.parent = parent
        self.gens = [[as_scalar(c) for c in g] for g in gens]
        self.labels = list(labels) if labels else None
        for g in self.gens:
            if len(g) != parent.dim:
                raise ExprError("generator of wrong length")
        reduced, _ = rref(self.gens) if self.gens else ([], [])
        if len(reduced) != len(self.gens):
            raise ExprError("subalgebra generators are linearly dependent")

    @property
    def dim(self):
        return len(self.gens)

    def reduced_basis(self):
        reduced, _ = rref(self.gens) if self.gens else ([], [])
        return reduced

    def contains(self, vector) -> bool:
        if not self.gens:
            return all(scalar_is_zero(v) for v in vector)
        return in_row_span(self.gens, vector)

    def __repr__(self):
        return "Subalgebra(dim=%d of %s)" % (self.dim, self.parent.name)


def subalgebra_closed(S: Subalgebra) -> bool:
    L = S.parent
    for a in range(len(S.gens)):
        for b in range(a + 1, len(S.gens)):
            if not S.contains(L.bracket(S.gens[a], S.gens[b])):
                return False
    return True


def largest_ideal_in(L: LieAlgebra, S: Subalgebra) -> Subalgebra:
    """Maximal ideal of L contained in span(S).

    Stabilizing iteration I_{k+1} = { v in I_k : [L, v] subset I_k }.  The
    limit is an ideal and contains every ideal inside S; it equals the kernel
    of the realization respective to S.
    """
    n = L.dim
    current = [list(r) for r in S.reduced_basis()]
    while True:
        if not current:
            return Subalgebra(L, [])
        reduced, pivots = rref(current)
        nonpivots = [c for c in range(n) if c not in pivots]
        # v = sum_t c_t B_t must satisfy ad_a v in span(B) for every basis ad_a
        rows = []
        for a in range(n):
            images = [L.bracket(basis_vector(n, a), b) for b in reduced]
            for out_col in nonpivots:
                row = []
                for img in images:
                    rem = list(img)
                    for rrow, pc in zip(reduced, pivots):
                        f = rem[pc]
                        if not scalar_is_zero(f):
                            rem = [x - as_ratexpr(f) * y for x, y in zip(rem, rrow)]
                    row.append(rem[out_col])
                rows.append(row)
        coeff_basis = nullspace(rows, ncols=len(reduced))
        if len(coeff_basis) == len(reduced):
            return Subalgebra(L, reduced)
        nxt = []
        for coeffs in coeff_basis:
            vec = [as_scalar(0)] * n
            for c, b in zip(coeffs, reduced):
                vec = [x + c * y for x, y in zip(vec, b)]
            nxt.append(vec)
        current = nxt


def span_equal(rows_a, rows_b) -> bool:
    """Equality of row spans via reduced row echelon bases."""
    ra, _ = rref(rows_a) if rows_a else ([], [])
    rb, _ = rref(rows_b) if rows_b else ([], [])
    if len(ra) != len(rb):
        return False
    return all(all(x == y for x, y in zip(p, q)) for p, q in zip(ra, rb))
