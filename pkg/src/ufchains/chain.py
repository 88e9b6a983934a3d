"""Bounded-coefficient chains with exact arithmetic.

A degree-n chain is a finitely supported map from (n+1)-tuples of points to
exact rationals, together with two declared bounds: ``norm_bound`` (sup of
coefficient magnitudes) and ``propagation`` (sup of tuple diameters).  Chains
over ring "Z" must have integer coefficients; ring "Q" allows any Fraction.

Infinite periodic or rule-generated cycles are carried as patterns and
materialized per window; patterns also answer pointwise coefficient queries so
averages over Folner sets need no window at all.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ContractViolation, PresentationError, WindowFitError
from .space import Lattice, SpacePresentation, SubsetOfLattice, Window

__all__ = [
    "UFChain",
    "chain_from_terms",
    "zero_chain",
    "boundary",
    "sup_norm",
    "pushforward",
    "validate",
    "ValidationReport",
    "CyclePattern",
    "constant_pattern",
    "fundamental_pattern",
    "periodic_pattern",
    "indicator_pattern",
    "finite_pattern",
    "sum_patterns",
    "scale_pattern",
    "periodic_edge_pattern",
    "parse_chain_literal",
    "format_chain_literal",
]

RINGS = ("Z", "Q")


def _as_fraction(v, ring: str) -> Fraction:
    f = Fraction(v)
    if ring == "Z" and f.denominator != 1:
        raise ContractViolation(f"coefficient {f} is not an integer (ring Z)")
    return f


@dataclass(frozen=True)
class UFChain:
    """Sparse chain.  ``terms`` maps (degree+1)-tuples of points to nonzero
    Fractions.  Treat instances as immutable values."""

    degree: int
    terms: Mapping[tuple, Fraction] = field(repr=False)
    ring: str = "Z"
    propagation: int = 0
    norm_bound: Fraction = Fraction(0)

    def coefficient(self, tup: tuple) -> Fraction:
        return self.terms.get(tup, Fraction(0))

    def support(self) -> list[tuple]:
        return sorted(self.terms.keys())

    def __len__(self) -> int:
        return len(self.terms)

    def add(self, other: "UFChain") -> "UFChain":
        if other.degree != self.degree:
            raise ContractViolation("cannot add chains of different degrees")
        ring = "Z" if self.ring == "Z" and other.ring == "Z" else "Q"
        terms = dict(self.terms)
        for t, v in other.terms.items():
            nv = terms.get(t, Fraction(0)) + v
            if nv == 0:
                terms.pop(t, None)
            else:
                terms[t] = nv
        return UFChain(
            degree=self.degree,
            terms=terms,
            ring=ring,
            propagation=max(self.propagation, other.propagation),
            norm_bound=max((abs(v) for v in terms.values()), default=Fraction(0)),
        )

    def scale(self, r) -> "UFChain":
        r = Fraction(r)
        if r == 0:
            return zero_chain(self.degree, self.ring)
        ring = self.ring if r.denominator == 1 else "Q"
        terms = {t: v * r for t, v in self.terms.items()}
        return UFChain(
            degree=self.degree,
            terms=terms,
            ring=ring,
            propagation=self.propagation,
            norm_bound=self.norm_bound * abs(r),
        )

    def neg(self) -> "UFChain":
        return self.scale(-1)

    def restrict(self, keep: Callable[[tuple], bool]) -> "UFChain":
        terms = {t: v for t, v in self.terms.items() if keep(t)}
        return UFChain(
            degree=self.degree,
            terms=terms,
            ring=self.ring,
            propagation=self.propagation,
            norm_bound=max((abs(v) for v in terms.values()), default=Fraction(0)),
        )


def chain_from_terms(
    degree: int,
    terms: Mapping[tuple, object],
    ring: str = "Z",
    window: Window | None = None,
    propagation: int | None = None,
) -> UFChain:
    """Normalize terms (drop zeros, exact Fractions) into a UFChain.

    When ``propagation`` is not declared it is measured: degree 0 gives 0, and
    higher degrees need a window (or presentation-bearing window) to measure
    tuple diameters.
    """
    if ring not in RINGS:
        raise ContractViolation(f"unknown ring {ring!r}")
    if degree < 0:
        raise ContractViolation(f"degree must be >= 0, got {degree}")
    clean: dict[tuple, Fraction] = {}
    for tup, v in terms.items():
        if not isinstance(tup, tuple) or len(tup) != degree + 1:
            raise ContractViolation(
                f"term {tup!r} does not have {degree + 1} entries for degree {degree}"
            )
        f = _as_fraction(v, ring)
        if f != 0:
            clean[tup] = f
    if propagation is None:
        if degree == 0 or not clean:
            propagation = 0
        elif window is not None:
            propagation = max(
                window.dist(a, b) for tup in clean for a in tup for b in tup
            )
        else:
            raise ContractViolation(
                "propagation must be declared (or a window given to measure it)"
            )
    norm = max((abs(v) for v in clean.values()), default=Fraction(0))
    return UFChain(
        degree=degree, terms=clean, ring=ring, propagation=propagation, norm_bound=norm
    )


def zero_chain(degree: int, ring: str = "Z") -> UFChain:
    return UFChain(degree=degree, terms={}, ring=ring, propagation=0, norm_bound=Fraction(0))


def boundary(chain: UFChain) -> UFChain:
    """Alternating-face boundary; degree must be >= 1.

    (x_0,...,x_n) maps to sum_j (-1)^j (x_0,...,x_{j-1},x_{j+1},...,x_n).
    The degree-0 boundary is the zero map by convention and asking for it is a
    contract violation, matching the operation's declared domain.
    """
    if chain.degree < 1:
        raise ContractViolation("boundary needs degree >= 1 (degree 0 bounds to zero)")
    out: dict[tuple, Fraction] = {}
    for tup, v in chain.terms.items():
        sign = 1
        for j in range(len(tup)):
            face = tup[:j] + tup[j + 1 :]
            nv = out.get(face, Fraction(0)) + (v if sign > 0 else -v)
            if nv == 0:
                out.pop(face, None)
            else:
                out[face] = nv
            sign = -sign
    return UFChain(
        degree=chain.degree - 1,
        terms=out,
        ring=chain.ring,
        propagation=chain.propagation,
        norm_bound=max((abs(v) for v in out.values()), default=Fraction(0)),
    )


def sup_norm(chain: UFChain) -> Fraction:
    return max((abs(v) for v in chain.terms.values()), default=Fraction(0))


def pushforward(
    f: Callable[[object], object],
    chain: UFChain,
    target_window: Window | None = None,
    stretch: tuple[Fraction, Fraction] | None = None,
) -> UFChain:
    """Apply a point map entrywise; colliding image tuples accumulate.

    When the map's quasi-isometry constants (C, D) are supplied via ``stretch``
    the result's declared propagation is C * R + D rounded up, else it is
    measured on the target window (which must contain the image).
    """
    out: dict[tuple, Fraction] = {}
    for tup, v in chain.terms.items():
        img = tuple(f(p) for p in tup)
        if target_window is not None:
            for p in img:
                if p not in target_window.index:
                    raise WindowFitError(
                        "pushforward image leaves the target window"
                    )
        nv = out.get(img, Fraction(0)) + v
        if nv == 0:
            out.pop(img, None)
        else:
            out[img] = nv
    if stretch is not None:
        C, D = Fraction(stretch[0]), Fraction(stretch[1])
        prop_bound = C * chain.propagation + D
        prop = int(prop_bound) if prop_bound.denominator == 1 else int(prop_bound) + 1
    elif chain.degree == 0 or not out:
        prop = 0
    elif target_window is not None:
        prop = max(target_window.dist(a, b) for t in out for a in t for b in t)
    else:
        raise ContractViolation("pushforward needs stretch constants or a target window")
    return UFChain(
        degree=chain.degree,
        terms=out,
        ring=chain.ring,
        propagation=prop,
        norm_bound=max((abs(v) for v in out.values()), default=Fraction(0)),
    )


@dataclass(frozen=True)
class ValidationReport:
    support_in_window: bool
    norm_ok: bool
    measured_norm: Fraction
    propagation_ok: bool
    measured_propagation: int
    is_cycle_on_interior: bool
    ok: bool


def validate(chain: UFChain, window: Window) -> ValidationReport:
    """Check the declared bounds and the cycle condition against a window.

    The cycle condition only inspects boundary terms landing on interior
    tuples: frontier effects of a window-truncated infinite cycle are not
    violations.
    """
    support_ok = all(p in window.index for tup in chain.terms for p in tup)
    measured_norm = sup_norm(chain)
    norm_ok = measured_norm <= chain.norm_bound
    if chain.degree == 0 or not chain.terms:
        measured_prop = 0
    else:
        measured_prop = max(
            window.dist(a, b) for tup in chain.terms for a in tup for b in tup
        )
    prop_ok = measured_prop <= chain.propagation
    if chain.degree == 0:
        cycle_ok = True
    else:
        b = boundary(chain)
        cycle_ok = all(
            v == 0
            for tup, v in b.terms.items()
            if all(window.is_interior(p) for p in tup)
        )
    return ValidationReport(
        support_in_window=support_ok,
        norm_ok=norm_ok,
        measured_norm=measured_norm,
        propagation_ok=prop_ok,
        measured_propagation=measured_prop,
        is_cycle_on_interior=cycle_ok,
        ok=support_ok and norm_ok and prop_ok and cycle_ok,
    )


# ---------------------------------------------------------------------------
# Patterns: window-independent descriptions of (possibly infinite) cycles.
# ---------------------------------------------------------------------------


class CyclePattern:
    """A degree-0 cycle given by a pointwise coefficient rule, or a degree-n
    cycle given by periodic tuple blocks.  Subclasses are immutable."""

    degree: int = 0
    ring: str = "Z"
    description: str = "pattern"

    def coefficient_at(self, point, presentation: SpacePresentation) -> Fraction:
        raise ContractViolation(f"{self.description} has no pointwise rule")

    def materialize(self, window: Window) -> UFChain:
        """Restrict the pattern to the window's points."""
        raise NotImplementedError

    def periodic_profile(self) -> tuple[tuple[int, ...], dict] | None:
        """(modulus, residue -> coefficient) for lattice-periodic degree-0
        patterns; None otherwise."""
        return None

    def periodic_mean(self) -> Fraction | None:
        prof = self.periodic_profile()
        if prof is None:
            return None
        modulus, coeffs = prof
        cells = 1
        for m in modulus:
            cells *= m
        return Fraction(sum(coeffs.values(), Fraction(0)), 1) / cells


class _PointwisePattern(CyclePattern):
    def __init__(self, fn, ring: str, description: str, profile=None):
        self._fn = fn
        self.ring = ring
        self.degree = 0
        self.description = description
        self._profile = profile

    def coefficient_at(self, point, presentation) -> Fraction:
        return self._fn(point, presentation)

    def materialize(self, window: Window) -> UFChain:
        terms = {}
        pres = window.presentation
        for p in window.points:
            v = self._fn(p, pres)
            if v != 0:
                terms[(p,)] = v
        return chain_from_terms(0, terms, ring=self.ring, propagation=0)

    def periodic_profile(self):
        return self._profile


def constant_pattern(value, ring: str = "Z") -> CyclePattern:
    v = _as_fraction(value, ring)
    return _PointwisePattern(
        lambda p, pres: v,
        ring,
        f"constant {v}",
        profile=((1,), {(0,): v}),
    )


def fundamental_pattern(ring: str = "Z") -> CyclePattern:
    """The all-ones degree-0 cycle."""
    pat = constant_pattern(1, ring)
    pat.description = "fundamental class"
    return pat


def periodic_pattern(
    modulus: Sequence[int], coeffs: Mapping[Sequence[int], object], ring: str = "Z"
) -> CyclePattern:
    """Lattice-periodic degree-0 pattern: coefficient of x is coeffs[x mod m]
    (0 for residues not listed)."""
    modulus = tuple(int(m) for m in modulus)
    if any(m <= 0 for m in modulus):
        raise ContractViolation(f"modulus must be positive, got {modulus}")
    table = {}
    for res, v in coeffs.items():
        res = tuple(int(r) % m for r, m in zip(res, modulus))
        if len(res) != len(modulus):
            raise ContractViolation("residue arity mismatch")
        f = _as_fraction(v, ring)
        if f != 0:
            table[res] = f

    def fn(p, pres):
        if len(p) != len(modulus):
            raise ContractViolation("point arity does not match pattern modulus")
        return table.get(tuple(x % m for x, m in zip(p, modulus)), Fraction(0))

    return _PointwisePattern(
        fn,
        ring,
        f"periodic mod {modulus}",
        profile=(modulus, dict(table)),
    )


def indicator_pattern(rule, scale=1, ring: str = "Z") -> CyclePattern:
    """Degree-0 indicator of a membership rule (e.g. NamedRuleMembership),
    optionally scaled."""
    s = _as_fraction(scale, ring)

    def fn(p, pres):
        return s if rule.contains(p) else Fraction(0)

    profile = None
    if hasattr(rule, "modulus"):
        profile = (rule.modulus, {res: s for res in rule.residues})
    return _PointwisePattern(fn, ring, f"indicator of {rule.describe()}", profile=profile)


def finite_pattern(chain: UFChain) -> CyclePattern:
    """Wrap an explicit finite chain as a pattern (degree 0 only for
    pointwise queries; any degree for materialization)."""

    class _Finite(CyclePattern):
        degree = chain.degree
        ring = chain.ring
        description = f"explicit chain ({len(chain)} terms)"
        source = chain

        def coefficient_at(self, point, presentation):
            if chain.degree != 0:
                raise ContractViolation("pointwise query needs a degree-0 pattern")
            return chain.coefficient((point,))

        def materialize(self, window: Window) -> UFChain:
            return chain.restrict(lambda t: all(p in window.index for p in t))

    return _Finite()


def sum_patterns(*patterns: CyclePattern) -> CyclePattern:
    degs = {p.degree for p in patterns}
    if len(degs) != 1:
        raise ContractViolation("summed patterns must share a degree")
    ring = "Z" if all(p.ring == "Z" for p in patterns) else "Q"

    class _Sum(CyclePattern):
        degree = degs.pop()
        description = " + ".join(p.description for p in patterns)

        def coefficient_at(self, point, presentation):
            return sum(
                (p.coefficient_at(point, presentation) for p in patterns), Fraction(0)
            )

        def materialize(self, window: Window) -> UFChain:
            out = patterns[0].materialize(window)
            for p in patterns[1:]:
                out = out.add(p.materialize(window))
            return out

        def periodic_profile(self):
            profs = [p.periodic_profile() for p in patterns]
            if any(pr is None for pr in profs):
                return None
            # common refinement of the moduli
            dim = len(profs[0][0])
            modulus = tuple(
                _lcm_many([pr[0][axis] for pr in profs]) for axis in range(dim)
            )
            table: dict[tuple, Fraction] = {}
            for res in _residue_box(modulus):
                v = Fraction(0)
                for mod, coeffs in profs:
                    v += coeffs.get(tuple(r % m for r, m in zip(res, mod)), Fraction(0))
                if v != 0:
                    table[res] = v
            return (modulus, table)

    s = _Sum()
    s.ring = ring
    return s


def scale_pattern(pattern: CyclePattern, r) -> CyclePattern:
    r = Fraction(r)
    ring = pattern.ring if r.denominator == 1 else "Q"

    class _Scaled(CyclePattern):
        degree = pattern.degree
        description = f"{r} * ({pattern.description})"

        def coefficient_at(self, point, presentation):
            return r * pattern.coefficient_at(point, presentation)

        def materialize(self, window: Window) -> UFChain:
            return pattern.materialize(window).scale(r)

        def periodic_profile(self):
            prof = pattern.periodic_profile()
            if prof is None:
                return None
            modulus, coeffs = prof
            return (modulus, {k: v * r for k, v in coeffs.items() if v * r != 0})

    s = _Scaled()
    s.ring = ring
    return s


def _lcm_many(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        g = _gcd(out, x)
        out = out // g * x
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _residue_box(modulus: tuple[int, ...]):
    cells = [()]
    for m in modulus:
        cells = [c + (r,) for c in cells for r in range(m)]
    return cells


class PeriodicEdgePattern(CyclePattern):
    """Degree-n pattern on Z: for z congruent to offset mod period, the term
    coeff * (z + shape_0, ..., z + shape_n)."""

    def __init__(self, period: int, offset: int, shape: Sequence[int], coeff, ring="Z"):
        if period < 1:
            raise ContractViolation(f"period must be >= 1, got {period}")
        self.period = period
        self.offset = offset % period
        self.shape = tuple(int(s) for s in shape)
        self.coeff = _as_fraction(coeff, ring)
        self.ring = ring
        self.degree = len(self.shape) - 1
        self.description = (
            f"periodic period={period} offset={self.offset} "
            f"coeff={self.coeff} shape={self.shape}"
        )

    def coefficient_at(self, point, presentation):
        if self.degree != 0:
            raise ContractViolation("pointwise query needs a degree-0 pattern")
        x = point[0]
        return self.coeff if (x - self.shape[0] - self.offset) % self.period == 0 else Fraction(0)

    def materialize(self, window: Window) -> UFChain:
        pres = window.presentation
        base = pres.base if isinstance(pres, SubsetOfLattice) else pres
        if not isinstance(base, Lattice) or base.dim != 1:
            raise ContractViolation("periodic tuple patterns are defined on Z")
        xs = [p[0] for p in window.points]
        lo, hi = min(xs), max(xs)
        terms: dict[tuple, Fraction] = {}
        z = lo - max(self.shape) + (self.offset - (lo - max(self.shape))) % self.period
        while z + min(self.shape) <= hi:
            tup = tuple((z + s,) for s in self.shape)
            if all(p in window.index for p in tup):
                terms[tup] = terms.get(tup, Fraction(0)) + self.coeff
            z += self.period
        span = max(self.shape) - min(self.shape)
        return chain_from_terms(self.degree, terms, ring=self.ring, propagation=span)

    def periodic_profile(self):
        if self.degree != 0:
            return None
        return ((self.period,), {((self.offset + self.shape[0]) % self.period,): self.coeff})


def periodic_edge_pattern(period: int, offset: int, shape: Sequence[int], coeff, ring="Z"):
    return PeriodicEdgePattern(period, offset, shape, coeff, ring)


# ---------------------------------------------------------------------------
# Chain literal text format.
#
#   # comment
#   1 : (0)
#   -2/3 : (3,4)
#   periodic period=2 offset=0 coeff=1 degree=1 shape=(0,1)
#
# Explicit term lines use the presentation's point syntax, one point per
# parenthesized slot separated by ';' for multi-coordinate presentations.
# ---------------------------------------------------------------------------

_PERIODIC_RE = re.compile(
    r"^periodic\s+period=(\S+)\s+offset=(\S+)\s+coeff=(\S+)\s+degree=(\S+)\s+shape=\((.*)\)$"
)


def _split_tuple_body(body: str) -> list[str]:
    return [s for s in (part.strip() for part in body.split(";")) if s]


def parse_chain_literal(
    text: str, presentation: SpacePresentation, ring: str = "Z"
) -> tuple[CyclePattern | None, UFChain | None]:
    """Parse the text format into (pattern, explicit chain); either may be
    None.  Pattern lines and term lines may be mixed; all term lines must
    share one degree."""
    patterns: list[CyclePattern] = []
    terms: dict[tuple, Fraction] = {}
    term_degree: int | None = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _PERIODIC_RE.match(line)
        if m:
            period, offset, coeff = m.group(1), m.group(2), m.group(3)
            degree, shape_body = m.group(4), m.group(5)
            shape = tuple(int(s.strip()) for s in shape_body.split(",") if s.strip())
            if len(shape) != int(degree) + 1:
                raise PresentationError(
                    f"line {ln}: shape arity {len(shape)} does not match degree {degree}"
                )
            patterns.append(
                periodic_edge_pattern(int(period), int(offset), shape, Fraction(coeff), ring)
            )
            continue
        if ":" not in line:
            raise PresentationError(f"line {ln}: expected 'coeff : (points)', got {raw!r}")
        coeff_text, _, tup_text = line.partition(":")
        try:
            coeff = Fraction(coeff_text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PresentationError(f"line {ln}: bad coefficient {coeff_text!r}") from exc
        tup_text = tup_text.strip()
        if not (tup_text.startswith("(") and tup_text.endswith(")")):
            raise PresentationError(f"line {ln}: tuple must be parenthesized")
        slots = _split_tuple_body(tup_text[1:-1])
        if not slots:
            raise PresentationError(f"line {ln}: empty tuple")
        tup = tuple(presentation.parse_point(s) for s in slots)
        if term_degree is None:
            term_degree = len(tup) - 1
        elif len(tup) - 1 != term_degree:
            raise PresentationError(f"line {ln}: mixed term degrees in literal")
        terms[tup] = terms.get(tup, Fraction(0)) + coeff
    pattern = None
    if patterns:
        pattern = patterns[0] if len(patterns) == 1 else sum_patterns(*patterns)
    explicit = None
    if term_degree is not None:
        if term_degree == 0:
            explicit = chain_from_terms(term_degree, terms, ring=ring, propagation=0)
        else:
            prop = max(
                (presentation.dist(a, b) for t in terms for a in t for b in t),
                default=0,
            )
            explicit = chain_from_terms(term_degree, terms, ring=ring, propagation=prop)
    return pattern, explicit


def format_chain_literal(chain: UFChain, presentation: SpacePresentation) -> str:
    """Deterministic inverse of the explicit-term part of the literal format."""
    key = presentation.point_key
    lines = []
    for tup in sorted(chain.terms.keys(), key=lambda t: tuple(key(p) for p in t)):
        body = ";".join(presentation.format_point(p) for p in tup)
        lines.append(f"{chain.terms[tup]} : ({body})")
    return "\n".join(lines) + ("\n" if lines else "")
