"""Independent verification of realizations.

Everything in this module re-derives its answers from the vector-field side:
brackets of fields, conformance to the structure constants, kernels (the
failure of faithfulness), duality of forms and fields, and equivalence of two
realizations under an explicitly supplied coordinate change plus optional
automorphism.  Equivalence is only ever checked, never searched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import (
    ExpPoly,
    ExprError,
    as_ratexpr,
    as_scalar,
    scalar_is_zero,
)
from .liealg import LieAlgebra, Subalgebra, is_automorphism
from .realize import Realization
from .smatrix import SymMatrix, nullspace

__all__ = [
    "RelationReport",
    "CoordinateMap",
    "vf_bracket",
    "check_relations",
    "realization_kernel",
    "duality_check",
    "compare_realizations",
    "push_field",
]


def vf_bracket(x, y, coords):
    """Lie bracket of vector fields: [X,Y]^a = X(Y^a) - Y(X^a)."""
    if len(x) != len(y) or len(x) != len(coords):
        raise ExprError("field coordinate counts differ")
    out = []
    for a in range(len(coords)):
        acc = as_scalar(0)
        for k, ck in enumerate(coords):
            xk = as_scalar(x[k])
            yk = as_scalar(y[k])
            if not xk.is_zero():
                d = as_scalar(y[a]).diff(ck)
                if not d.is_zero():
                    acc = acc + xk * d
            if not yk.is_zero():
                d = as_scalar(x[a]).diff(ck)
                if not d.is_zero():
                    acc = acc - yk * d
        out.append(acc)
    return out


@dataclass
class RelationReport:
    ok: bool
    failures: list = field(default_factory=list)


def check_relations(R: Realization) -> RelationReport:
    """Homomorphism test: [R(e_i), R(e_j)] = R([e_i, e_j]) identically."""
    L = R.algebra
    coords = R.coords
    failures = []
    images = [R.images[label] for label in L.basis]
    for i in range(L.dim):
        for j in range(i + 1, L.dim):
            lhs = vf_bracket(images[i], images[j], coords)
            rhs = R.image_of_vector(L.bracket_basis(i, j))
            residual = [a - b for a, b in zip(lhs, rhs)]
            if any(not scalar_is_zero(v) for v in residual):
                failures.append((i, j, residual))
    return RelationReport(ok=not failures, failures=failures)


def _coordinate_rows(R: Realization):
    """Linear system over the parameter field for sum_j c_j R(e_j) = 0.

    Each coordinate equation is cleared of (parameter-only) denominators and
    split by its coordinate monomial/exponential key; the cofactors are the
    row entries.
    """
    L = R.algebra
    coords = set(R.coords)
    rows = []
    for a in range(R.m):
        col = [as_ratexpr(R.images[label][a]) for label in L.basis]
        lcd = ExpPoly.one()
        for v in col:
            if not v.is_poly():
                lcd = lcd * v.den
        cleared = []
        for v in col:
            factor = (as_ratexpr(lcd) / as_ratexpr(v.den)).as_expoly()
            cleared.append(v.num * factor)
        keys = set()
        splits = []
        for p in cleared:
            s = p.split_by(coords)
            splits.append(s)
            keys.update(s)
        for key in keys:
            rows.append([s.get(key, ExpPoly.zero()) for s in splits])
    return rows


def realization_kernel(R: Realization):
    """Basis of { c : sum_j c_j R(e_j) = 0 identically }; faithful iff empty.

    Coefficients live in the fraction field of the parameter expressions, so
    the kernel is the generic-parameter one.
    """
    rows = _coordinate_rows(R)
    return nullspace(rows, ncols=R.algebra.dim)


def kernel_subalgebra(R: Realization) -> Subalgebra:
    return Subalgebra(R.algebra, realization_kernel(R))


def duality_check(W: SymMatrix, fields) -> bool:
    """Pairing of one-forms with fields is exactly the Kronecker delta."""
    flds = fields.fields if hasattr(fields, "fields") else fields
    n = W.rows
    if len(flds) != n or any(len(f) != n for f in flds):
        return False
    F = SymMatrix([[flds[k][i] for k in range(n)] for i in range(n)])
    return (W * F).is_identity()


class CoordinateMap:
    """Coordinate change with a declared inverse.

    ``forward`` lists the new coordinates as expressions in the old ones
    (missing entries default to the identity).  The inverse is declared as
    rewrite rules: direct substitutions old -> expression(new) and
    exponential rules exp(rate*old) -> expression(new) for coordinates that
    enter only through an exponential (e.g. x3 -> exp(3*x3)).  Invertibility
    is checked by composing both ways, never by symbolic inversion.
    """

    def __init__(self, m, forward=None, inverse=None, exp_rules=None):
        self.m = m
        names = ["x%d" % (i + 1) for i in range(m)]
        fwd = dict(forward or {})
        self.forward = [as_scalar(fwd.get(nm, ExpPoly.symbol(nm))) for nm in names]
        self.inverse = {k: as_scalar(v) for k, v in (inverse or {}).items()}
        from .expr import Q
        self.exp_rules = [(nm, Q(rate), as_scalar(val))
                          for nm, rate, val in (exp_rules or [])]
        overlap = set(self.inverse) & {nm for nm, _, _ in self.exp_rules}
        if overlap:
            raise ExprError("coordinate %s has both a direct and an exp rule" % overlap)
        self._check_inverse()

    @staticmethod
    def identity(m):
        return CoordinateMap(m)

    def rewrite_back(self, expr):
        """Express a function of the old coordinates in the new ones."""
        expr = as_scalar(expr)
        if self.inverse:
            expr = as_scalar(expr.subs(self.inverse))
        for nm, rate, val in self.exp_rules:
            expr = as_scalar(expr.subs_exp_power(nm, rate, val))
        return expr

    def _check_inverse(self):
        names = ["x%d" % (i + 1) for i in range(self.m)]
        fwd_subs = dict(zip(names, self.forward))
        for nm, phi in zip(names, self.forward):
            back = self.rewrite_back(phi)
            if back != ExpPoly.symbol(nm):
                raise ExprError("declared inverse fails on %s: %s" % (nm, back))
        for nm, psi in self.inverse.items():
            again = as_scalar(psi.subs(fwd_subs))
            if again != ExpPoly.symbol(nm):
                raise ExprError("forward after inverse fails on %s" % nm)
        for nm, rate, val in self.exp_rules:
            again = as_scalar(val.subs(fwd_subs))
            if again != ExpPoly.exp_linear({nm: rate}):
                raise ExprError("forward after exp rule fails on %s" % nm)


def push_field(x, cmap: CoordinateMap):
    """Pushforward: Y^b = (X applied to forward_b), rewritten in new coords."""
    coords = ["x%d" % (i + 1) for i in range(cmap.m)]
    out = []
    for b in range(cmap.m):
        acc = as_scalar(0)
        phi = cmap.forward[b]
        for k, ck in enumerate(coords):
            xk = as_scalar(x[k])
            if xk.is_zero():
                continue
            d = phi.diff(ck)
            if not scalar_is_zero(d):
                acc = acc + xk * d
        out.append(cmap.rewrite_back(acc))
    return out


def compare_realizations(r1: Realization, r2: Realization, cmap=None, U=None) -> bool:
    """Whether pushing r1 through the map and recombining generators through
    the automorphism U (rows convention: new image_i = sum_j U_ij image_j)
    reproduces r2 exactly.  Check only, no search."""
    if r1.m != r2.m:
        return False
    if cmap is None:
        cmap = CoordinateMap.identity(r1.m)
    L = r1.algebra
    if U is not None:
        mat = U.matrix if hasattr(U, "matrix") else (U if isinstance(U, SymMatrix) else SymMatrix(U))
        if not is_automorphism(L, mat):
            raise ExprError("supplied map is not an automorphism")
    pushed = {label: push_field(r1.images[label], cmap) for label in L.basis}
    for i, label in enumerate(r2.algebra.basis):
        if U is None:
            combo = pushed[L.basis[i]]
        else:
            combo = [as_scalar(0)] * r1.m
            for j, src in enumerate(L.basis):
                c = mat[i, j]
                if scalar_is_zero(c):
                    continue
                combo = [a + c * b for a, b in zip(combo, pushed[src])]
        target = r2.images[label]
        if any(a != b for a, b in zip(combo, target)):
            return False
    return True
