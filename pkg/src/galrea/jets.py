"""Minimal jet calculus for point-symmetry verification.

Supports systems in explicit form (a distinguished leading derivative solved
for the rest), point symmetry candidates, exact total derivatives and the
recursive prolongation formula

    phi^{a, J+v} = D_v(phi^{a,J}) - sum_i D_v(xi^i) * u^a_{J+i}.

Coefficients are fractions of exp-polynomials over the jet coordinates with
monomial denominators (to host 1/x^3 or 1/r style right-hand sides).  Two
extensions, both confined to this module, keep sampled fixtures exact:

* auxiliary functions of one independent variable with a prescribed exact
  derivative (fractional powers of t enter through w = t^(1/3) with
  D_t w = 1/(3 w^2); sine/cosine pairs enter through bounded coordinates
  s, c with D_t s = 2 sqrt(eps) c, D_t c = -2 sqrt(eps) s);
* algebraic reduction rules such as s^2 -> 1 - c^2 applied before the final
  zero test.  The sine/cosine route is experimental and only used where a
  fixture records it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import ExpPoly, ExprError, Q, RatExpr, as_ratexpr, as_scalar
from .smatrix import rref

__all__ = [
    "JetSpace",
    "SymmetryCandidate",
    "total_derivative",
    "prolong",
    "check_point_symmetry",
    "point_bracket",
    "closes_on_constants",
    "extract_structure_constants",
]


class JetSpace:
    """Jet coordinates for maps (independents) -> (dependents).

    Derivative coordinates are named ``u_J`` with the multi-index J written as
    a string of independent names sorted in declaration order, so u_tx and
    u_xt share the canonical name u_tx.
    """

    def __init__(self, independents, dependents, max_order=2,
                 aux=None, relations=None):
        self.independents = list(independents)
        self.dependents = list(dependents)
        self.max_order = max_order
        # aux: name -> (base independent, derivative expression)
        self.aux = {k: (b, as_ratexpr(d)) for k, (b, d) in (aux or {}).items()}
        # relations: (symbol, power, replacement) rewffrite rules, e.g. s^2 -> 1-c^2
        self.relations = [(s, int(p), as_scalar(r)) for s, p, r in (relations or [])]
        self._order = {v: i for i, v in enumerate(self.independents)}

    def jet_name(self, dep: str, index) -> str:
        if not index:
            return dep
        letters = sorted(index, key=lambda v: self._order[v])
        return "%s_%s" % (dep, "".join(letters))

    def decompose(self, name: str):
        """(dependent, multi-index tuple) when ``name`` is a jet coordinate."""
        if name in self.dependents:
            return name, ()
        if "_" not in name:
            return None
        dep, tail = name.split("_", 1)
        if dep not in self.dependents:
            return None
        if any(ch not in self._order for ch in tail):
            return None
        return dep, tuple(sorted(tail, key=lambda v: self._order[v]))

    def base_coords(self):
        return self.independents + self.dependents

    def explicit_partial(self, f, v: str):
        """d/dv at fixed jet coordinates, chaining through aux functions of v."""
        f = as_ratexpr(f)
        out = f.diff(v)
        for name, (base, deriv) in self.aux.items():
            if base == v and f.depends_on(name):
                out = out + deriv * f.diff(name)
        return out

    def total_derivative(self, f, v: str):
        """D_v f = explicit d/dv + sum over jet coordinates u_J of u_{J+v} df/du_J."""
        if v not in self._order:
            raise ExprError("%r is not an independent variable" % v)
        f = as_ratexpr(f)
        out = self.explicit_partial(f, v)
        for s in sorted(f.free_symbols()):
            dec = self.decompose(s)
            if dec is None:
                continue
            dep, index = dec
            df = f.diff(s)
            if df.is_zero():
                continue
            out = out + as_ratexpr(ExpPoly.symbol(self.jet_name(dep, index + (v,)))) * df
        return out

    def reduce(self, f):
        """Apply the algebraic relation rules until no power can be lowered."""
        f = as_ratexpr(f)
        num = f.num
        for s, p, repl in self.relations:
            if f.den.depends_on(s):
                raise ExprError("relation symbol %s in a denominator" % s)
            changed = True
            while changed:
                changed = False
                out = ExpPoly.zero()
                for (mono, expf), c in num.terms.items():
                    md = dict(mono)
                    k = md.get(s, 0)
                    if k >= p:
                        md[s] = k - p
                        out = out + ExpPoly.term(c, md, dict(expf)) * repl
                        changed = True
                    else:
                        out = out + ExpPoly.term(c, md, dict(expf))
                num = out
        return RatExpr(num, f.den)


@dataclass
class SymmetryCandidate:
    """Point field xi^i d/dx_i + phi^a d/du_a with order-0 coefficients."""

    name: str
    xi: dict
    phi: dict

    def __post_init__(self):
        self.xi = {k: as_ratexpr(v) for k, v in self.xi.items()}
        self.phi = {k: as_ratexpr(v) for k, v in self.phi.items()}

    def coefficient(self, coord: str):
        if coord in self.xi:
            return self.xi[coord]
        if coord in self.phi:
            return self.phi[coord]
        return as_ratexpr(0)

    def scaled(self, c, name=None):
        return SymmetryCandidate(name or self.name,
                                 {k: as_ratexpr(c) * v for k, v in self.xi.items()},
                                 {k: as_ratexpr(c) * v for k, v in self.phi.items()})

    def plus(self, other, name=None):
        xi = {k: self.coefficient(k) + other.coefficient(k)
              for k in set(self.xi) | set(other.xi)}
        phi = {k: self.coefficient(k) + other.coefficient(k)
               for k in set(self.phi) | set(other.phi)}
        return SymmetryCandidate(name or self.name, xi, phi)


def total_derivative(jet: JetSpace, f, v: str):
    return jet.total_derivative(f, v)


def prolong(jet: JetSpace, X: SymmetryCandidate, order: int) -> dict:
    """Prolonged coefficients phi^{a,J} for all 1 <= |J| <= order."""
    coeffs = {}
    dxi = {(i, v): jet.total_derivative(X.coefficient(i), v)
           for i in jet.independents for v in jet.independents}
    for dep in jet.dependents:
        coeffs[(dep, ())] = X.coefficient(dep)
    frontier = [(dep, ()) for dep in jet.dependents]
    for _ in range(order):
        nxt = []
        for dep, index in frontier:
            base = coeffs[(dep, index)]
            for v in jet.independents:
                new_index = tuple(sorted(index + (v,),
                                         key=lambda s: jet.independents.index(s)))
                if (dep, new_index) in coeffs:
                    continue
                val = jet.total_derivative(base, v)
                for i in jet.independents:
                    uji = ExpPoly.symbol(jet.jet_name(dep, index + (i,)))
                    val = val - dxi[(i, v)] * as_ratexpr(uji)
                coeffs[(dep, new_index)] = val
                nxt.append((dep, new_index))
        frontier = nxt
    return coeffs


def apply_prolonged(jet: JetSpace, X: SymmetryCandidate, f, coeffs=None):
    """X^(k) applied to f, prolonging as far as f's jet order requires."""
    f = as_ratexpr(f)
    needed = 0
    jet_syms = []
    for s in f.free_symbols():
        dec = jet.decompose(s)
        if dec:
            jet_syms.append((s, dec))
            needed = max(needed, len(dec[1]))
    if coeffs is None or not all((d, i) in coeffs for _, (d, i) in jet_syms):
        coeffs = prolong(jet, X, needed)
    out = as_ratexpr(0)
    for v in jet.independents:
        xi = X.coefficient(v)
        if not xi.is_zero():
            out = out + xi * jet.explicit_partial(f, v)
    for s, (dep, index) in jet_syms:
        df = f.diff(s)
        if not df.is_zero():
            out = out + coeffs[(dep, index)] * df
    return out


def _contains(index, lead):
    """Multiset containment of multi-indices (sorted tuples)."""
    pool = list(index)
    for v in lead:
        if v in pool:
            pool.remove(v)
        else:
            return None
    return tuple(pool)


class _Eliminator:
    """Rewrites derivatives of the leading derivative via the equations."""

    def __init__(self, jet: JetSpace, equations):
        self.jet = jet
        self.leads = {}
        self.rhs = {}
        for lead_name, rhs in equations.items():
            dec = jet.decompose(lead_name)
            if dec is None:
                raise ExprError("leading derivative %r is not a jet coordinate" % lead_name)
            dep, index = dec
            if dep in self.leads:
                raise ExprError("two equations lead in the same dependent %r" % dep)
            self.leads[dep] = index
            self.rhs[dep] = as_ratexpr(rhs)
        self._cache = {}

    def rhs_derivative(self, dep, path):
        key = (dep, path)
        if key not in self._cache:
            if not path:
                val = self.rhs[dep]
            else:
                val = self.jet.total_derivative(self.rhs_derivative(dep, path[:-1]),
                                                path[-1])
            self._cache[key] = val
        return self._cache[key]

    def run(self, expr):
        expr = as_ratexpr(expr)
        while True:
            candidates = []
            for s in expr.num.free_symbols() | expr.den.free_symbols():
                dec = self.jet.decompose(s)
                if dec is None:
                    continue
                dep, index = dec
                lead = self.leads.get(dep)
                if lead is None:
                    continue
                rest = _contains(index, lead)
                if rest is not None:
                    candidates.append((len(index), s, dep, rest))
            if not candidates:
                return expr
            candidates.sort(reverse=True)
            _, s, dep, rest = candidates[0]
            if expr.den.depends_on(s):
                raise ExprError("leading derivative %s in a denominator" % s)
            value = self.rhs_derivative(dep, rest)
            num = _subs_symbol_ratexpr(expr.num, s, value)
            expr = num / as_ratexpr(expr.den)


def _subs_symbol_ratexpr(p: ExpPoly, sym: str, value: RatExpr) -> RatExpr:
    """Substitute sym -> value (a fraction) into a polynomial occurrence."""
    out = as_ratexpr(0)
    for (mono, expf), c in p.terms.items():
        if any(s == sym for s, _ in expf):
            raise ExprError("%s occurs inside exp()" % sym)
        md = dict(mono)
        k = md.pop(sym, 0)
        factor = as_ratexpr(ExpPoly.term(c, md, dict(expf)))
        if k:
            factor = factor * value ** k
        out = out + factor
    return out


def check_point_symmetry(jet: JetSpace, equations, X: SymmetryCandidate,
                         return_residuals=False):
    """Invariance test: X^(k) Delta = 0 after elimination on the system.

    ``equations`` maps the name of the leading derivative to the right-hand
    side of its solved form, e.g. {"u_t": mu*u_xx - u*u_x}.  The prolonged
    field is applied to Delta = lead - rhs, the leading derivatives and their
    total derivatives are eliminated, relation rules are applied, and the
    numerator of the residual must cancel identically.
    """
    elim = _Eliminator(jet, equations)
    max_order = max(len(jet.decompose(lead)[1]) for lead in equations)
    for rhs in equations.values():
        for s in as_ratexpr(rhs).free_symbols():
            dec = jet.decompose(s)
            if dec:
                max_order = max(max_order, len(dec[1]))
    coeffs = prolong(jet, X, max_order + 1)
    residuals = []
    ok = True
    for lead_name, rhs in equations.items():
        delta = as_ratexpr(ExpPoly.symbol(lead_name)) - as_ratexpr(rhs)
        applied = apply_prolonged(jet, X, delta, coeffs=coeffs)
        reduced = jet.reduce(elim.run(applied))
        if not reduced.is_zero():
            ok = False
        residuals.append(reduced)
    if return_residuals:
        return ok, residuals
    return ok


# -- point-field brackets and abstract-algebra matching ------------------------

def point_bracket(jet: JetSpace, X: SymmetryCandidate, Y: SymmetryCandidate,
                  name="[X,Y]") -> SymmetryCandidate:
    """Lie bracket of point fields on the space of independents + dependents."""

    def apply(Z, f):
        out = as_ratexpr(0)
        for v in jet.independents:
            c = Z.coefficient(v)
            if not c.is_zero():
                out = out + c * jet.explicit_partial(f, v)
        for a in jet.dependents:
            c = Z.coefficient(a)
            if not c.is_zero():
                out = out + c * as_ratexpr(f).diff(a)
        return out

    xi, phi = {}, {}
    for v in jet.independents:
        xi[v] = jet.reduce(apply(X, Y.coefficient(v)) - apply(Y, X.coefficient(v)))
    for a in jet.dependents:
        phi[a] = jet.reduce(apply(X, Y.coefficient(a)) - apply(Y, X.coefficient(a)))
    return SymmetryCandidate(name, xi, phi)


def closes_on_constants(jet: JetSpace, ops, algebra) -> bool:
    """Brackets of the operators reproduce the algebra's structure constants.

    ``ops`` lists one SymmetryCandidate per basis element of ``algebra`` in
    basis order; the check is exact and direct (no solving).
    """
    n = len(ops)
    if n != algebra.dim:
        return False
    coords = jet.base_coords()
    for i in range(n):
        for j in range(i + 1, n):
            lhs = point_bracket(jet, ops[i], ops[j])
            want = algebra.bracket_basis(i, j)
            for coord in coords:
                acc = as_ratexpr(0)
                for k in range(n):
                    c = as_ratexpr(want[k])
                    if not c.is_zero():
                        acc = acc + c * ops[k].coefficient(coord)
                if jet.reduce(lhs.coefficient(coord) - acc) != as_ratexpr(0):
                    return False
    return True


def extract_structure_constants(jet: JetSpace, ops):
    """Solve [X_i, X_j] = sum_k c_k X_k for rational constants.

    Returns {(i, j): [c_1..c_n]} or None if some bracket leaves the span.
    """
    n = len(ops)
    coords = jet.base_coords()
    all_syms = set()
    for op in ops:
        for c in list(op.xi.values()) + list(op.phi.values()):
            all_syms |= c.free_symbols()
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            br = point_bracket(jet, ops[i], ops[j])
            rows = []
            rhs_col = []
            for coord in coords:
                entries = [ops[k].coefficient(coord) for k in range(n)]
                target = br.coefficient(coord)
                lcd = ExpPoly.one()
                for v in entries + [target]:
                    lcd = lcd * v.den
                cleared = [(as_ratexpr(v.num) * (as_ratexpr(lcd) / as_ratexpr(v.den))).as_expoly()
                           for v in entries + [target]]
                keys = set()
                splits = [p.split_by(all_syms | set(coords) | set(jet.aux))
                          for p in cleared]
                for s in splits:
                    keys.update(s)
                for key in keys:
                    row = [splits[k].get(key, ExpPoly.zero()).as_number()
                           for k in range(n)]
                    rows.append(row)
                    rhs_col.append(splits[n].get(key, ExpPoly.zero()).as_number())
            sol = _solve_rational(rows, rhs_col, n)
            if sol is None:
                return None
            out[(i, j)] = sol
    return out


def _solve_rational(rows, rhs, n):
    aug = [[Q(v) for v in row] + [Q(b)] for row, b in zip(rows, rhs)]
    reduced, pivots = rref(aug)
    if n in pivots:
        return None
    sol = [Q(0)] * n
    for row, pc in zip(reduced, pivots):
        for c in range(pc + 1, n):
            if not row[c].is_zero():
                return None     # underdetermined; operators dependent
        sol[pc] = row[n].as_expoly().as_number()
    return sol
