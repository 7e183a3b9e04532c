"""One-parametric deformation families and contractions.

A deformation family is a Lie algebra whose structure constants depend on a
designated parameter q, with the base algebra sitting at q = 0.  Families are
built either directly from bracket data or by applying a contraction matrix:
the rows of the matrix are the new basis vectors in old coordinates, and the
deformed constants are those of the old bracket in the new basis.  Taking
q -> 0 afterwards recovers the contracted algebra, which is how a contraction
and a deformation invert each other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import ExprError, Q, as_ratexpr, as_scalar, scalar_is_zero
from .liealg import LieAlgebra, Subalgebra, change_basis
from .realize import Realization, Splitting, realize
from .smatrix import SymMatrix, rref

__all__ = [
    "DeformationFamily",
    "LimitError",
    "deform_via_contraction",
    "contraction_limit",
    "specialize",
    "deformed_generic_realization",
    "reorder_basis",
]


class LimitError(ExprError):
    """A structure constant has a pole at q = 0."""


@dataclass
class DeformationFamily:
    """Bracket family polynomial (or, flagged, rational) in the parameter q."""

    algebra: LieAlgebra
    q: str
    rational_in_q: bool = False

    @property
    def basis(self):
        return self.algebra.basis

    def specialized(self, bindings) -> LieAlgebra:
        return specialize(self, bindings)

    def base(self) -> LieAlgebra:
        return contraction_limit(self)


def _subs_constants(L: LieAlgebra, bindings, name) -> LieAlgebra:
    brackets = {}
    for key, vec in L.brackets.items():
        brackets[key] = [as_ratexpr(v).subs(bindings) for v in vec]
    params = [p for p in L.params if p not in bindings]
    ranges = {p: r for p, r in L.param_ranges.items() if p not in bindings}
    return LieAlgebra(name, L.basis, brackets, params=params, param_ranges=ranges)


def reorder_basis(L: LieAlgebra, labels) -> LieAlgebra:
    """Same algebra with its basis listed in a different order."""
    perm = [[as_scalar(1 if L.basis[i] == labels[j] else 0)
             for j in range(L.dim)] for i in range(L.dim)]
    return change_basis(L, SymMatrix(perm), new_basis=labels, name=L.name)


def deform_via_contraction(L: LieAlgebra, U, q: str, names=None,
                           scales=None, name=None) -> DeformationFamily:
    """Deformed family from a contraction matrix at finite parameter.

    Convention (pinned by the three-dimensional fixture): row i of U lists the
    new basis vector f_i in old coordinates, optionally rescaled by
    ``scales``; the family's brackets are those of L in the basis f.  The
    matrix must be invertible for generic q.  Constants that stay rational in
    q after simplification set the ``rational_in_q`` flag instead of erroring.
    """
    mat = U if isinstance(U, SymMatrix) else SymMatrix(U)
    if scales:
        mat = SymMatrix([[as_scalar(s) * v for v in row]
                         for s, row in zip(scales, mat.data)])
    reduced, _ = rref(mat.data)
    if len(reduced) != mat.rows:
        raise ExprError("contraction matrix is singular for generic q")
    cols = mat.transpose()
    ordered = change_basis(L, cols, new_basis=names or L.basis,
                           name=name or (L.name + "^" + q))
    params = list(dict.fromkeys(list(L.params) + [q]))
    family = LieAlgebra(ordered.name, ordered.basis, ordered.brackets,
                        params=params, param_ranges=L.param_ranges)
    rational = any(not as_ratexpr(v).den.free_symbols().isdisjoint({q})
                   for vec in family.brackets.values() for v in vec)
    return DeformationFamily(family, q, rational_in_q=rational)


def contraction_limit(F) -> LieAlgebra:
    """q -> 0 limit of the structure constants; poles raise LimitError."""
    if isinstance(F, DeformationFamily):
        L, q = F.algebra, F.q
    else:
        L, q = F
    for (i, j), vec in L.brackets.items():
        for k, v in enumerate(vec):
            den0 = as_ratexpr(v).den.subs({q: 0})
            if scalar_is_zero(den0):
                raise LimitError(
                    "structure constant C[%d,%d]^%d has a pole at %s=0: %s"
                    % (i, j, k, q, v))
    return _subs_constants(L, {q: Q(0)}, L.name + "@%s=0" % q)


def specialize(F: DeformationFamily, bindings) -> "LieAlgebra | DeformationFamily":
    """Exact substitution into the family constants.

    Binding the deformation parameter yields a plain Lie algebra; leaving it
    unbound returns an updated family (other parameters may still be fixed).
    """
    bindings = {k: as_scalar(v) for k, v in bindings.items()}
    if not bindings:
        return F
    if F.q in bindings:
        return _subs_constants(F.algebra, bindings, F.algebra.name + "@spec")
    sub = _subs_constants(F.algebra, bindings, F.algebra.name + "@spec")
    return DeformationFamily(sub, F.q, rational_in_q=F.rational_in_q)


def deformed_generic_realization(F: DeformationFamily, order=None) -> Realization:
    """Generic realization of the family with q carried symbolically.

    Runs the coset pipeline with the zero subalgebra; the adjoint matrices hit
    by the exponentials must be nilpotent (entries depend on q) or have
    rational spectrum, which mat_exp_ad enforces.
    """
    L = F.algebra
    if order:
        L = reorder_basis(L, list(order))
    from .liealg import basis_vector

    split = Splitting(L, [basis_vector(L.dim, i) for i in range(L.dim)],
                      Subalgebra(L, []))
    return realize(L, split)
