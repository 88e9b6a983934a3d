"""Comparison with a translation-twisted coefficient complex.

A degree-n chain on the lattice can be re-indexed by the shape of each tuple:
a term on (x0, ..., xn) is recorded under the difference vector
t = (x1 - x0, ..., xn - x0) together with a coefficient function on the group,
evaluated at g = -x0.  Bounded chains of propagation R correspond exactly to
families (over the finitely many shapes with |t_i| <= R) of bounded functions
on the lattice, and the correspondence is a sup-norm isometry.

The boundary on the re-indexed side acts on shapes and twists the coefficient
function by a translation on the face that drops the base point:

    d[(t1..tn) (x) phi] = (t2-t1, ..., tn-t1) (x) ((-t1).phi)
                          + sum_{j>=1} (-1)^j (t1, .., ^tj, .., tn) (x) phi

with (h.phi)(g) = phi(g - h).  This module implements both sides separately
so the intertwining can be tested rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .chain import UFChain, boundary, chain_from_terms, sup_norm
from .errors import ContractViolation
from .space import Lattice

__all__ = [
    "TwistedChain",
    "rho_forward",
    "rho_inverse",
    "twisted_boundary",
    "twisted_translate",
    "translate_chain",
    "RhoReport",
    "rho_roundtrip_check",
]


def _vadd(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _vsub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def _vneg(a: tuple) -> tuple:
    return tuple(-x for x in a)


@dataclass(frozen=True)
class TwistedChain:
    """Shape-indexed form of a lattice chain.

    Keys of ``terms`` are pairs (t, g): t is the tuple of difference vectors
    (length = degree) and g is a group element.  Zero coefficients are never
    stored.
    """

    degree: int
    dim: int
    terms: Mapping[tuple, Fraction]
    ring: str = "Q"

    def coefficient(self, t: tuple, g: tuple) -> Fraction:
        return self.terms.get((t, g), Fraction(0))

    def shapes(self) -> tuple:
        return tuple(sorted({t for (t, _g) in self.terms}))

    @property
    def sup_norm(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return max(abs(v) for v in self.terms.values())

    def add(self, other: "TwistedChain") -> "TwistedChain":
        if (self.degree, self.dim) != (other.degree, other.dim):
            raise ContractViolation("degree or dimension mismatch in add")
        out = dict(self.terms)
        for k, v in other.terms.items():
            nv = out.get(k, Fraction(0)) + v
            if nv == 0:
                out.pop(k, None)
            else:
                out[k] = nv
        ring = "Z" if self.ring == other.ring == "Z" else "Q"
        return TwistedChain(self.degree, self.dim, out, ring)

    def scale(self, factor) -> "TwistedChain":
        f = Fraction(factor)
        if f == 0:
            return TwistedChain(self.degree, self.dim, {}, self.ring)
        terms = {k: v * f for k, v in self.terms.items()}
        ring = self.ring if f.denominator == 1 else "Q"
        return TwistedChain(self.degree, self.dim, terms, ring)


def _check_lattice(presentation) -> int:
    if not isinstance(presentation, Lattice):
        raise ContractViolation("the shape re-indexing needs a lattice presentation")
    return presentation.dim


def rho_forward(chain: UFChain, presentation: Lattice) -> TwistedChain:
    """Re-index a lattice chain by tuple shape and base-point inverse."""
    dim = _check_lattice(presentation)
    terms = {}
    for tup, v in chain.terms.items():
        base = tup[0]
        if len(base) != dim:
            raise ContractViolation(f"point {base} does not live in dimension {dim}")
        t = tuple(_vsub(p, base) for p in tup[1:])
        g = _vneg(base)
        terms[(t, g)] = v
    return TwistedChain(chain.degree, dim, terms, chain.ring)


def rho_inverse(tc: TwistedChain) -> UFChain:
    """Back to the tuple-indexed chain: (t, g) names the tuple
    (-g, -g + t1, ..., -g + tn)."""
    terms = {}
    prop = 0
    for (t, g), v in tc.terms.items():
        base = _vneg(g)
        tup = (base,) + tuple(_vadd(base, ti) for ti in t)
        terms[tup] = v
        offsets = ((0,) * tc.dim,) + tuple(t)
        for i, oi in enumerate(offsets):
            for oj in offsets[i + 1 :]:
                prop = max(prop, sum(abs(c) for c in _vsub(oi, oj)))
    return chain_from_terms(tc.degree, terms, ring=tc.ring, propagation=prop)


def twisted_boundary(tc: TwistedChain) -> TwistedChain:
    """Boundary on the shape-indexed side (independent implementation)."""
    if tc.degree < 1:
        raise ContractViolation("boundary needs degree >= 1")
    out: dict = {}

    def bump(key, delta):
        nv = out.get(key, Fraction(0)) + delta
        if nv == 0:
            out.pop(key, None)
        else:
            out[key] = nv

    for (t, g), v in tc.terms.items():
        t1 = t[0]
        # dropping the base point shifts the frame and twists the function
        face0 = tuple(_vsub(ti, t1) for ti in t[1:])
        bump((face0, _vsub(g, t1)), v)
        for j in range(1, len(t) + 1):
            face = t[: j - 1] + t[j:]
            bump((face, g), v if j % 2 == 0 else -v)
    return TwistedChain(tc.degree - 1, tc.dim, out, tc.ring)


def twisted_translate(tc: TwistedChain, a: tuple) -> TwistedChain:
    """The group action: shapes fixed, coefficient functions shifted."""
    terms = {(t, _vsub(g, a)): v for (t, g), v in tc.terms.items()}
    return TwistedChain(tc.degree, tc.dim, terms, tc.ring)


def translate_chain(chain: UFChain, a: tuple) -> UFChain:
    """Shift every point of every tuple by a."""
    terms = {tuple(_vadd(p, a) for p in tup): v for tup, v in chain.terms.items()}
    return chain_from_terms(
        chain.degree, terms, ring=chain.ring, propagation=chain.propagation
    )


@dataclass(frozen=True)
class RhoReport:
    chains_checked: int
    roundtrip_exact: bool
    isometric: bool
    chain_map: bool
    equivariant: bool

    @property
    def all_hold(self) -> bool:
        return (
            self.roundtrip_exact
            and self.isometric
            and self.chain_map
            and self.equivariant
        )


def rho_roundtrip_check(
    presentation: Lattice,
    chains,
    translations=((1,),),
) -> RhoReport:
    """Exercise the comparison map on concrete chains.

    Checks, exactly in rational arithmetic: the roundtrip restores every
    term, sup norms agree, the two boundaries intertwine, and translating
    before or after re-indexing gives the same result.
    """
    dim = _check_lattice(presentation)
    roundtrip = isometric = chain_map = equivariant = True
    count = 0
    for c in chains:
        count += 1
        tc = rho_forward(c, presentation)
        back = rho_inverse(tc)
        if back.terms != c.terms:
            roundtrip = False
        if tc.sup_norm != sup_norm(c):
            isometric = False
        if c.degree >= 1:
            lhs = rho_forward(boundary(c), presentation)
            rhs = twisted_boundary(tc)
            if lhs.terms != rhs.terms:
                chain_map = False
        for a in translations:
            if len(a) != dim:
                continue
            moved = rho_forward(translate_chain(c, a), presentation)
            if moved.terms != twisted_translate(tc, a).terms:
                equivariant = False
    return RhoReport(
        chains_checked=count,
        roundtrip_exact=roundtrip,
        isometric=isometric,
        chain_map=chain_map,
        equivariant=equivariant,
    )
