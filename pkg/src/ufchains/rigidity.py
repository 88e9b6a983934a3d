"""Quasi-isometry rigidity tools.

A quasi-isometry f is uniformly close to a bilipschitz equivalence exactly
when the pushforward of the all-ones class equals the all-ones class of the
target, i.e. when the preimage-count defect (|f^-1(y)| - 1) bounds in
homology.  This module builds that defect cycle for each supported map rule,
runs the degree-0 verdict machinery on it over the integers, and when the
verdict is TRIVIAL backs it with a concrete certificate: a bounded
displacement matching that hits every core target point exactly once.

Also here: pushforwards under group endomorphisms of lattices (kernel and
cokernel sizes against the determinant, with the exact 1/|det| mean identity)
and the averaged chain maps that transfer chains from a subspace complement
back to the whole space with norm close to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, Sequence

from .chain import (
    CyclePattern,
    UFChain,
    chain_from_terms,
    constant_pattern,
    periodic_pattern,
    pushforward,
    sum_patterns,
    zero_chain,
)
from .degree0 import VerdictReport, class_verdict
from .errors import ContractViolation, MapDomainError
from .space import (
    Doubling,
    Lattice,
    SpacePresentation,
    SubsetOfLattice,
    Window,
    build_window,
)
from .transport import _Arc, _solve_circulation

__all__ = [
    "QIMap",
    "verify_qi",
    "QIEstimate",
    "pushforward_fundamental",
    "preimage_counts",
    "obstruction_pattern",
    "MatchingCertificate",
    "extract_bounded_matching",
    "BilipschitzReport",
    "bilipschitz_verdict",
    "GroupHomReport",
    "group_hom_report",
    "averaging_maps",
    "averaging_pushforward",
]


def _det(rows: tuple[tuple[int, ...], ...]) -> int:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = 0
    sign = 1
    for j in range(n):
        minor = tuple(r[:j] + r[j + 1 :] for r in rows[1:])
        total += sign * rows[0][j] * _det(minor)
        sign = -sign
    return total


def _adjugate(rows: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    n = len(rows)
    if n == 1:
        return ((1,),)
    cof = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = tuple(
                tuple(r[c] for c in range(n) if c != j)
                for k, r in enumerate(rows)
                if k != i
            )
            row.append((-1) ** (i + j) * _det(minor))
        cof.append(tuple(row))
    return tuple(zip(*cof))  # transpose of cofactors


_RULES = ("identity", "inclusion", "scale", "floor_half", "shift", "sheet_projection", "matrix")


@dataclass(frozen=True)
class QIMap:
    """A concrete quasi-isometry between presentations, with declared
    constants (C, D): dist(x, y)/C - D <= dist(f x, f y) <= C dist(x, y) + D."""

    source: SpacePresentation
    target: SpacePresentation
    rule: str
    params: tuple = ()
    declared: tuple = ()

    def __post_init__(self):
        if self.rule not in _RULES:
            raise ContractViolation(f"unknown map rule {self.rule!r}")
        if self.rule == "identity" and type(self.source) is not type(self.target):
            raise ContractViolation("identity needs equal presentations")
        if self.rule == "inclusion" and not isinstance(self.source, SubsetOfLattice):
            raise ContractViolation("inclusion maps a lattice subset into its lattice")
        if self.rule == "sheet_projection" and not isinstance(self.source, Doubling):
            raise ContractViolation("sheet projection needs a doubled source")
        if self.rule == "scale":
            (k,) = self.params
            if k == 0:
                raise MapDomainError("scale 0 collapses the space")
        if self.rule == "matrix":
            (rows,) = self.params
            if _det(rows) == 0:
                raise MapDomainError("singular matrix is not a quasi-isometry")
        if not self.declared:
            object.__setattr__(self, "declared", self._default_constants())

    def _default_constants(self) -> tuple:
        if self.rule in ("identity", "inclusion", "shift"):
            return (Fraction(1), Fraction(0))
        if self.rule == "scale":
            (k,) = self.params
            return (Fraction(abs(k)), Fraction(0))
        if self.rule == "floor_half":
            return (Fraction(2), Fraction(1))
        if self.rule == "sheet_projection":
            return (Fraction(1), Fraction(1))
        (rows,) = self.params
        n = len(rows)
        fwd = max(sum(abs(rows[i][j]) for i in range(n)) for j in range(n))
        adj = _adjugate(rows)
        det = abs(_det(rows))
        inv = max(
            Fraction(sum(abs(adj[i][j]) for i in range(n)), det) for j in range(n)
        )
        return (max(Fraction(fwd), inv), Fraction(0))

    def apply(self, point):
        if not self.source.contains(point):
            raise MapDomainError(f"point {point!r} is outside the map's source")
        if self.rule in ("identity", "inclusion"):
            return point
        if self.rule == "scale":
            (k,) = self.params
            return tuple(k * c for c in point)
        if self.rule == "floor_half":
            return (point[0] // 2,)
        if self.rule == "shift":
            (s,) = self.params
            return tuple(c + d for c, d in zip(point, s))
        if self.rule == "sheet_projection":
            return point[0]
        (rows,) = self.params
        return tuple(sum(r[j] * point[j] for j in range(len(r))) for r in rows)

    def describe(self) -> str:
        if self.params:
            return f"{self.rule}{self.params}"
        return self.rule


@dataclass(frozen=True)
class QIEstimate:
    C: Fraction
    D: Fraction  # tightest additive slack observed at C
    declared_D: Fraction
    holds: bool  # measured slack within the declared allowance
    pairs_checked: int
    sample_radius: int


def verify_qi(f: QIMap, sample_radius: int = 6) -> QIEstimate:
    """Check the map's declared multiplicative constant against every pair of
    points in a sample ball, reporting the tightest additive constant that
    makes both quasi-isometry inequalities hold there."""
    pts = f.source.ball(f.source.origin(), sample_radius)
    images = {p: f.apply(p) for p in pts}
    C, declared_D = Fraction(f.declared[0]), Fraction(f.declared[1])
    if C < 1:
        raise ContractViolation(f"multiplicative constant must be >= 1, got {C}")
    slack = Fraction(0)
    pairs = 0
    for i, x in enumerate(pts):
        for y in pts[i + 1 :]:
            d = f.source.dist(x, y)
            df = f.target.dist(images[x], images[y])
            slack = max(slack, df - C * d, Fraction(d) / C - df)
            pairs += 1
    if not pairs:
        raise ContractViolation("sample ball has a single point")
    return QIEstimate(
        C=C,
        D=slack,
        declared_D=declared_D,
        holds=slack <= declared_D,
        pairs_checked=pairs,
        sample_radius=sample_radius,
    )


def pushforward_fundamental(f: QIMap, source_window: Window, target_window: Window) -> UFChain:
    """Image of the all-ones cycle: coefficient of y counts its preimages."""
    ones = chain_from_terms(
        0,
        {(p,): Fraction(1) for p in source_window.points},
        ring="Z",
        propagation=0,
    )
    return pushforward(f.apply, ones, target_window=target_window)


def _source_radius_for(f: QIMap, target_radius: int) -> int:
    C, D = f.declared
    off = f.target.dist(f.apply(f.source.origin()), f.target.origin())
    bound = C * (target_radius + off + D)
    return (int(bound) if bound.denominator == 1 else int(bound) + 1) + 1


def preimage_counts(f: QIMap, target_window: Window) -> dict:
    """Exact |f^-1(y)| for every window point, by enumerating a source ball
    large enough (via the declared constants) to contain every preimage."""
    rad = _source_radius_for(f, target_window.radius)
    counts = {p: 0 for p in target_window.points}
    for x in f.source.ball(f.source.origin(), rad):
        y = f.apply(x)
        if y in target_window.index:
            counts[y] += 1
    return counts


def obstruction_pattern(f: QIMap) -> CyclePattern:
    """The defect cycle |f^-1(y)| - 1 as a closed-form pattern."""
    if f.rule in ("identity", "shift"):
        return constant_pattern(0)
    if f.rule == "inclusion":
        member = f.source.membership
        if hasattr(member, "modulus"):
            modulus = member.modulus
            box = [()]
            for m in modulus:
                box = [res + (x,) for res in box for x in range(m)]
            table = {res: -1 for res in box if res not in member.residues}
            return periodic_pattern(modulus, table)
        from .chain import indicator_pattern

        return sum_patterns(indicator_pattern(member), constant_pattern(-1))
    if f.rule == "scale":
        (k,) = f.params
        k = abs(k)
        dim = f.target.dim
        box = [()]
        for _ in range(dim):
            box = [res + (x,) for res in box for x in range(k)]
        table = {res: -1 for res in box if any(res)}
        return periodic_pattern((k,) * dim, table)
    if f.rule in ("floor_half", "sheet_projection"):
        return constant_pattern(1)
    (rows,) = f.params
    det = abs(_det(rows))
    dim = len(rows)
    image = set()
    box = [()]
    for _ in range(dim):
        box = [res + (x,) for res in box for x in range(det)]
    for z in box:
        image.add(tuple(sum(r[j] * z[j] for j in range(dim)) % det for r in rows))
    table = {res: -1 for res in box if res not in image}
    return periodic_pattern((det,) * dim, table)


@dataclass(frozen=True)
class MatchingCertificate:
    """An injective assignment source point -> target point with
    dist(f(x), target) <= displacement, matching every source whose image
    lies in the core and covering every core target exactly once."""

    displacement: int
    pairs: tuple
    core_size: int
    source_count: int
    target_radius: int

    def verify(self, f: QIMap, target_window: Window) -> bool:
        used = set()
        covered = 0
        core = set(target_window.interior)
        for x, y in self.pairs:
            if y in used:
                return False
            used.add(y)
            if y not in target_window.index:
                return False
            if f.target.dist(f.apply(x), y) > self.displacement:
                return False
            if y in core:
                covered += 1
        return covered == len(core) == self.core_size


def extract_bounded_matching(
    f: QIMap,
    target_radius: int,
    max_displacement: int = 8,
) -> MatchingCertificate | None:
    """Search for a bounded-displacement matching certificate, escalating the
    displacement cap.  Sources are the points mapping into the window's
    interior; all of them must be matched, to pairwise distinct window
    points, and jointly they must cover the interior.  Returns None when no
    cap up to the limit works (e.g. when preimage counts genuinely mismatch)."""
    w = build_window(f.target, radius=target_radius, margin=1)
    core = list(w.interior)
    core_set = set(core)
    rad = _source_radius_for(f, target_radius)
    sources = [x for x in f.source.ball(f.source.origin(), rad) if f.apply(x) in core_set]
    if len(sources) < len(core):
        return None
    skey = f.source.point_key
    sources.sort(key=skey)
    disp = 0
    while disp <= max_displacement:
        pairs = _match_with_cap(f, w, sources, disp)
        if pairs is not None:
            return MatchingCertificate(
                displacement=disp,
                pairs=tuple(sorted(pairs, key=lambda xy: skey(xy[0]))),
                core_size=len(core),
                source_count=len(sources),
                target_radius=target_radius,
            )
        disp = 1 if disp == 0 else disp * 2
    return None


def _match_with_cap(f: QIMap, w: Window, sources, disp: int):
    # circulation: S* -> source (exactly 1) -> candidate target -> T*;
    # interior targets demand exactly one unit, frontier targets at most one
    n_src = len(sources)
    t_index = {p: n_src + i for i, p in enumerate(w.points)}
    S, T = n_src + len(w.points), n_src + len(w.points) + 1
    arcs = [_Arc(S, i, Fraction(1), Fraction(1)) for i in range(n_src)]
    one = Fraction(1)
    for i, x in enumerate(sources):
        fx = f.apply(x)
        for y in f.target.ball(fx, disp):
            j = t_index.get(y)
            if j is not None:
                arcs.append(_Arc(i, j, Fraction(0), one))
    for i, p in enumerate(w.points):
        low = one if w.interior_flags[i] else Fraction(0)
        arcs.append(_Arc(n_src + i, T, low, one))
    arcs.append(_Arc(T, S, Fraction(0), Fraction(n_src + 1)))
    ok, flows, _ = _solve_circulation(S + 2, arcs)
    if not ok:
        return None
    pairs = []
    for a, v in zip(arcs, flows):
        if a.u < n_src and n_src <= a.v < n_src + len(w.points) and v == 1:
            pairs.append((sources[a.u], w.points[a.v - n_src]))
    return pairs


@dataclass(frozen=True)
class BilipschitzReport:
    answer: str  # "YES" | "NO" | "INCONCLUSIVE"
    map_description: str
    verdict: VerdictReport
    matching: MatchingCertificate | None
    note: str = ""


def bilipschitz_verdict(
    f: QIMap,
    schedule: Sequence = (6, 10, 16),
    r: int = 1,
    max_displacement: int = 8,
) -> BilipschitzReport:
    """Is f uniformly close to a bilipschitz equivalence?  Runs the integral
    degree-0 verdict on the preimage defect cycle; TRIVIAL verdicts are
    backed by an explicit bounded-displacement matching on the largest
    scheduled window."""
    pattern = obstruction_pattern(f)
    rep = class_verdict(f.target, pattern, schedule=schedule, r=r, ring="Z")
    if rep.verdict == "NONTRIVIAL":
        return BilipschitzReport(
            answer="NO",
            map_description=f.describe(),
            verdict=rep,
            matching=None,
            note="preimage defect class does not bound",
        )
    if rep.verdict == "TRIVIAL":
        radius = rep.rows[-1].radius
        matching = extract_bounded_matching(f, radius, max_displacement=max_displacement)
        if matching is not None:
            return BilipschitzReport(
                answer="YES",
                map_description=f.describe(),
                verdict=rep,
                matching=matching,
                note="defect bounds; matching realizes the correction",
            )
        return BilipschitzReport(
            answer="INCONCLUSIVE",
            map_description=f.describe(),
            verdict=rep,
            matching=None,
            note=f"defect bounds but no matching within displacement {max_displacement}",
        )
    return BilipschitzReport(
        answer="INCONCLUSIVE",
        map_description=f.describe(),
        verdict=rep,
        matching=None,
        note="verdict machinery did not settle the defect class",
    )


# ---------------------------------------------------------------------------
# Lattice endomorphisms.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupHomReport:
    matrix: tuple
    det: int
    kernel_size: int
    cokernel_size: int
    image_mean: Fraction
    mean_identity_holds: bool


def group_hom_report(presentation: Lattice, matrix) -> GroupHomReport:
    """Injective lattice endomorphism x -> Ax: kernel is trivial, cokernel
    has |det A| elements, and the image lattice has exact density 1/|det A|
    (the invariant-mean form of the index)."""
    if isinstance(matrix, int):
        rows = ((matrix,),)
    else:
        rows = tuple(tuple(int(c) for c in row) for row in matrix)
    if len(rows) != presentation.dim or any(len(r) != presentation.dim for r in rows):
        raise ContractViolation("matrix shape does not fit the lattice dimension")
    det = _det(rows)
    if det == 0:
        raise MapDomainError("determinant 0: infinite kernel and cokernel")
    d = abs(det)
    dim = presentation.dim
    image = set()
    box = [()]
    for _ in range(dim):
        box = [res + (x,) for res in box for x in range(d)]
    for z in box:
        image.add(tuple(sum(r[j] * z[j] for j in range(dim)) % d for r in rows))
    # |box| / |image residues| equals the index; density is their ratio
    mean = Fraction(len(image), d**dim)
    return GroupHomReport(
        matrix=rows,
        det=det,
        kernel_size=1,
        cokernel_size=d,
        image_mean=mean,
        mean_identity_holds=(mean == Fraction(1, d)),
    )


# ---------------------------------------------------------------------------
# Averaged chain maps off the squares.
# ---------------------------------------------------------------------------


def _is_square(x: int) -> bool:
    return x >= 0 and isqrt(x) ** 2 == x


def averaging_maps(n: int) -> list[Callable[[tuple], tuple]]:
    """The n shifted self-maps of the integers that displace only perfect
    squares: large squares move right by j, small squares jump far left,
    everything else stays put."""
    if n < 1:
        raise ContractViolation(f"need n >= 1, got {n}")

    def make(j: int):
        def fj(p: tuple) -> tuple:
            x = p[0]
            if not _is_square(x):
                return p
            if x >= n * n:
                return (x + j,)
            return (-n * x - j,)

        return fj

    return [make(j) for j in range(n)]


def averaging_pushforward(chain: UFChain, n: int, target_window: Window) -> UFChain:
    """Average of the n pushforwards; a chain map of norm at most
    1 + (2^(degree+1) - 1)/n that restores chains living off the squares."""
    acc = zero_chain(chain.degree, ring="Q")
    share = Fraction(1, n)
    for fj in averaging_maps(n):
        img = pushforward(fj, chain, target_window=target_window)
        acc = acc.add(img.scale(share))
    return acc
