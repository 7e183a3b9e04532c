"""Construction of realizations by first-order differential operators.

The pipeline: products of adjoint exponentials give the left-invariant
one-form matrix W column by column, the dual vector fields are the columns of
W^{-1}, and the realization respective to a subalgebra h is obtained by
reordering the basis to (complement, h), truncating the fields to the first
m = dim - dim(h) coordinates and recombining to express the original basis
elements.  Coordinates are always named x1..xm in complement order.

Index conventions are pinned by the golden generic fixtures: W[:, 0] is the
first identity column, W[:, i] is column i of exp(-x1*ad_1)...exp(-x_i*ad_i),
and the field realizing the i-th basis element is column i of W^{-1}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .expr import ExprError, as_scalar, scalar_is_zero
from .liealg import LieAlgebra, Subalgebra, adjoint, basis_vector, change_basis
from .smatrix import SymMatrix, mat_exp_ad, mat_inverse, rref

__all__ = [
    "Splitting",
    "VectorFieldSet",
    "Realization",
    "one_forms",
    "left_invariant_fields",
    "realize",
    "promote_parameter",
]


@dataclass
class Splitting:
    """Ordered complement vectors followed by a closed subalgebra."""

    algebra: LieAlgebra
    complement: list
    sub: Subalgebra

    def __post_init__(self):
        n = self.algebra.dim
        self.complement = [[as_scalar(c) for c in v] for v in self.complement]
        rows = self.complement + self.sub.gens
        if len(rows) != n:
            raise ExprError("complement + subalgebra must span the algebra")
        reduced, _ = rref(rows)
        if len(reduced) != n:
            raise ExprError("complement and subalgebra vectors are dependent")

    @property
    def m(self):
        return len(self.complement)

    def full_basis(self):
        return self.complement + self.sub.gens


@dataclass
class VectorFieldSet:
    """Fields as coordinate-coefficient lists, one per basis label."""

    ncoords: int
    fields: list

    def __post_init__(self):
        for f in self.fields:
            if len(f) != self.ncoords:
                raise ExprError("field coefficient list of wrong length")


@dataclass
class Realization:
    """Images of every basis element as vector fields in m coordinates."""

    algebra: LieAlgebra
    m: int
    images: dict
    provenance: object = "fixture"
    coord_ranges: dict = field(default_factory=dict)

    @property
    def coords(self):
        return ["x%d" % (i + 1) for i in range(self.m)]

    def image(self, label: str):
        return self.images[label]

    def image_of_vector(self, vector):
        """Image of a coefficient vector: same combination of images."""
        out = [as_scalar(0)] * self.m
        for c, label in zip(vector, self.algebra.basis):
            c = as_scalar(c)
            if c.is_zero():
                continue
            out = [o + c * v for o, v in zip(out, self.images[label])]
        return out

    def map_coefficients(self, fn) -> "Realization":
        return Realization(self.algebra, self.m,
                           {k: [fn(c) for c in v] for k, v in self.images.items()},
                           provenance=self.provenance,
                           coord_ranges=dict(self.coord_ranges))

    def equal_images(self, other: "Realization") -> bool:
        if self.m != other.m or set(self.images) != set(other.images):
            return False
        return all(all(a == b for a, b in zip(self.images[k], other.images[k]))
                   for k in self.images)


def _reordered(L: LieAlgebra, order):
    """Algebra in a new ordered basis given by labels or coefficient vectors."""
    if order is None:
        return L, None
    cols = []
    for item in order:
        if isinstance(item, str):
            cols.append(basis_vector(L.dim, L.index(item)))
        else:
            cols.append([as_scalar(c) for c in item])
    U = SymMatrix([[cols[j][i] for j in range(len(cols))] for i in range(L.dim)])
    return change_basis(L, U, name=L.name + "@order"), U


def one_forms(L: LieAlgebra, order=None) -> SymMatrix:
    """Left-invariant one-form matrix in second canonical coordinates.

    Column i (1-based) is column i of the partial product
    exp(-x1*ad_{e_1}) ... exp(-x_{i-1}*ad_{e_{i-1}}); the first column is the
    first identity column.  Entries are exp-polynomials in x1..x_{n-1} and the
    parameters; a non-rational adjoint spectrum raises RationalSpectrumError.
    """
    Lo, _ = _reordered(L, order)
    n = Lo.dim
    w = SymMatrix.identity(n)
    partial = SymMatrix.identity(n)
    for i in range(1, n):
        ad = adjoint(Lo, basis_vector(n, i - 1))
        partial = partial * mat_exp_ad(ad, "x%d" % i, -1)
        for r in range(n):
            w[r, i] = partial[r, i]
    return w


def left_invariant_fields(L: LieAlgebra, order=None) -> VectorFieldSet:
    """Dual fields of the one-forms; the i-th field is column i of W^{-1}."""
    w = one_forms(L, order)
    xi = mat_inverse(w)
    return VectorFieldSet(ncoords=L.dim,
                          fields=[xi.column(i) for i in range(L.dim)])


def realize(L: LieAlgebra, split: Splitting) -> Realization:
    """Realization respective to the splitting's subalgebra.

    Pipeline: change basis to (complement, sub) order, build one-forms and
    dual fields, truncate to the first m coordinates, then express the images
    of the original basis elements by solving the basis-change system back.
    """
    n = L.dim
    m = split.m
    ordered, U = _reordered(L, split.full_basis())
    fields = left_invariant_fields(ordered)
    truncated = [f[:m] for f in fields.fields]
    for f in truncated:
        for c in f:
            for k in range(m, n):
                if c.depends_on("x%d" % (k + 1)):
                    raise ExprError("projected field depends on a fiber coordinate")
    u_inv = mat_inverse(U)
    images = {}
    for j, label in enumerate(L.basis):
        img = [as_scalar(0)] * m
        for i in range(n):
            c = u_inv[i, j]
            if scalar_is_zero(c):
                continue
            img = [a + c * b for a, b in zip(img, truncated[i])]
        images[label] = img
    return Realization(L, m, images, provenance=split)


def promote_parameter(R: Realization, p: str) -> Realization:
    """Replace the parameter by a fresh coordinate x_{m+1}.

    The parametrized series of realizations becomes a single realization in
    one more variable; range metadata of the parameter transfers to the new
    coordinate.  Absent parameters produce a warning and leave R unchanged.
    """
    if not any(c.depends_on(p) for img in R.images.values() for c in img):
        warnings.warn("parameter %r does not occur in the realization" % p)
        return R
    new = "x%d" % (R.m + 1)
    binding = {p: as_scalar(new)}
    images = {k: [as_scalar(c.subs(binding)) for c in v] + [as_scalar(0)]
              for k, v in R.images.items()}
    ranges = dict(R.coord_ranges)
    rng = R.algebra.param_ranges.get(p)
    if rng:
        ranges[new] = rng.replace(p, new)
    return Realization(R.algebra, R.m + 1, images,
                       provenance=R.provenance, coord_ranges=ranges)
