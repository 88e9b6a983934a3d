"""Space presentations and finite windows.

A presentation describes an infinite metric space of bounded geometry with an
integer-valued metric (points at least distance 1 apart, balls of uniformly
bounded size).  Five kinds are provided:

* ``Lattice(dim)``            -- Z^d with the l^1 word metric,
* ``SubsetOfLattice(base,m)`` -- a decidable subset with the induced metric,
* ``FreeGroup(rank)``         -- reduced words, word-length metric,
* ``Tree(degree)``            -- the regular tree of the given vertex degree,
* ``Doubling(base)``          -- two sheets X x {0,1} with the sum metric.

A ``Window`` is a finite centered ball together with a margin: points within
``radius - margin`` of the center form the *interior*, the rest the *frontier*.
Computations that claim anything about the ambient space only ever evaluate on
the interior, where the margin guarantees the window sees every ambient point
that could matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import (
    ContractViolation,
    MarginError,
    PresentationError,
    ResourceError,
)

__all__ = [
    "SpacePresentation",
    "Lattice",
    "SubsetOfLattice",
    "FreeGroup",
    "Tree",
    "Doubling",
    "PeriodicMembership",
    "NamedRuleMembership",
    "Window",
    "build_window",
    "r_boundary",
    "FolnerFamily",
    "folner_intervals",
    "folner_boxes",
    "folner_centered_balls",
    "isoperimetric_profile",
    "DEFAULT_POINT_BUDGET",
]

# Hard cap on window enumeration; build_window raises ResourceError past this.
DEFAULT_POINT_BUDGET = 500_000

Point = object


def _is_perfect_square(x: int) -> bool:
    return x >= 0 and math.isqrt(x) ** 2 == x


class PeriodicMembership:
    """Membership by residues: x in S iff (x mod modulus) in residues."""

    def __init__(self, modulus: Sequence[int], residues: Iterable[Sequence[int]]):
        modulus = tuple(int(m) for m in modulus)
        if not modulus or any(m <= 0 for m in modulus):
            raise PresentationError(f"modulus must be positive, got {modulus}")
        self.modulus = modulus
        self.residues = frozenset(
            tuple(int(r) % m for r, m in zip(res, modulus)) for res in residues
        )
        for res in self.residues:
            if len(res) != len(modulus):
                raise PresentationError("residue arity does not match modulus")
        if not self.residues:
            raise PresentationError("empty residue set presents the empty space")

    def contains(self, point: tuple[int, ...]) -> bool:
        return tuple(x % m for x, m in zip(point, self.modulus)) in self.residues

    def describe(self) -> str:
        return f"periodic mod {self.modulus} residues {sorted(self.residues)}"


class NamedRuleMembership:
    """Membership by a named decidable rule on Z (dimension 1 only)."""

    RULES: dict[str, Callable[[int], bool]] = {
        "squares": _is_perfect_square,
        "nonsquares": lambda x: not _is_perfect_square(x),
    }

    def __init__(self, name: str):
        if name not in self.RULES:
            raise PresentationError(
                f"unknown membership rule {name!r}; known: {sorted(self.RULES)}"
            )
        self.name = name
        self._fn = self.RULES[name]

    def contains(self, point: tuple[int, ...]) -> bool:
        if len(point) != 1:
            raise PresentationError("named rules are defined on Z only")
        return self._fn(point[0])

    def describe(self) -> str:
        return f"rule {self.name}"


class SpacePresentation:
    """Base interface.  All metrics are integer valued and all distinct points
    are at least distance 1 apart (separation gap 1)."""

    separation_gap: Fraction = Fraction(1)
    description: str = "abstract"

    def contains(self, point: Point) -> bool:
        raise NotImplementedError

    def dist(self, a: Point, b: Point) -> int:
        raise NotImplementedError

    def ball(self, center: Point, radius: int) -> list[Point]:
        """All presentation points within distance ``radius`` of ``center``,
        in canonical order."""
        raise NotImplementedError

    def max_ball_size(self, r: int) -> int:
        """Geometry bound: an upper bound on |B_r(x)| valid for every x."""
        raise NotImplementedError

    def point_key(self, p: Point):
        """Canonical sort key; all orderings in the toolkit derive from it."""
        raise NotImplementedError

    def format_point(self, p: Point) -> str:
        raise NotImplementedError

    def parse_point(self, text: str) -> Point:
        raise NotImplementedError

    def origin(self) -> Point:
        """A canonical basepoint, used when callers do not supply a center."""
        raise NotImplementedError

    def _check_member(self, p: Point) -> None:
        if not self.contains(p):
            raise PresentationError(
                f"{self.format_point(p)} is not a point of ({self.description})"
            )


def _parse_int_tuple(text: str, dim: int) -> tuple[int, ...]:
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [p for p in body.split(",") if p.strip() != ""]
    try:
        coords = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise PresentationError(f"bad lattice point literal {text!r}") from exc
    if len(coords) != dim:
        raise PresentationError(
            f"lattice point {text!r} has arity {len(coords)}, expected {dim}"
        )
    return coords


class Lattice(SpacePresentation):
    """Z^dim with the l^1 metric (word metric of the standard generators)."""

    def __init__(self, dim: int):
        if dim < 1:
            raise PresentationError(f"lattice dimension must be >= 1, got {dim}")
        self.dim = dim
        self.description = f"Z^{dim}" if dim > 1 else "Z"

    def contains(self, point) -> bool:
        return (
            isinstance(point, tuple)
            and len(point) == self.dim
            and all(isinstance(c, int) for c in point)
        )

    def dist(self, a, b) -> int:
        return sum(abs(x - y) for x, y in zip(a, b))

    def ball(self, center, radius: int) -> list:
        self._check_member(center)
        if radius < 0:
            return []
        pts: list[tuple[int, ...]] = []

        def rec(prefix: tuple[int, ...], left: int, axis: int) -> None:
            if axis == self.dim - 1:
                c = center[axis]
                for x in range(c - left, c + left + 1):
                    pts.append(prefix + (x,))
                return
            c = center[axis]
            for x in range(c - left, c + left + 1):
                rec(prefix + (x,), left - abs(x - c), axis + 1)

        rec((), radius, 0)
        pts.sort()
        return pts

    def max_ball_size(self, r: int) -> int:
        # |B_r| in (Z^d, l^1): sum_k 2^k C(d,k) C(r,k) -- exact for every center.
        return sum(
            (2**k) * math.comb(self.dim, k) * math.comb(r, k)
            for k in range(0, min(self.dim, r) + 1)
        )

    def point_key(self, p):
        return p

    def format_point(self, p) -> str:
        if self.dim == 1:
            return str(p[0])
        return "(" + ",".join(str(c) for c in p) + ")"

    def parse_point(self, text: str):
        return _parse_int_tuple(text, self.dim)

    def origin(self):
        return (0,) * self.dim


class SubsetOfLattice(SpacePresentation):
    """A decidable subset of a lattice with the induced (restricted) metric."""

    def __init__(self, base: Lattice, membership):
        if not isinstance(base, Lattice):
            raise PresentationError("subset presentations take a Lattice base")
        self.base = base
        self.membership = membership
        self.description = f"{base.description} restricted to {membership.describe()}"

    def contains(self, point) -> bool:
        return self.base.contains(point) and self.membership.contains(point)

    def dist(self, a, b) -> int:
        return self.base.dist(a, b)

    def ball(self, center, radius: int) -> list:
        self._check_member(center)
        return [p for p in self.base.ball(center, radius) if self.membership.contains(p)]

    def max_ball_size(self, r: int) -> int:
        return self.base.max_ball_size(r)

    def point_key(self, p):
        return p

    def format_point(self, p) -> str:
        return self.base.format_point(p)

    def parse_point(self, text: str):
        p = self.base.parse_point(text)
        self._check_member(p)
        return p

    def origin(self):
        p = self.base.origin()
        if self.contains(p):
            return p
        # nearest member to the lattice origin, canonical tie-break
        for rad in range(1, 1 + 10_000):
            cands = [q for q in self.base.ball(p, rad) if self.membership.contains(q)]
            if cands:
                cands.sort(key=lambda q: (self.base.dist(p, q), q))
                return cands[0]
        raise PresentationError("no member point near the lattice origin")


# Free group letters: nonzero ints, -g is the inverse of g.  Words are reduced
# tuples (no letter followed by its inverse).
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class FreeGroup(SpacePresentation):
    """Free group of the given rank, reduced words, word-length metric."""

    def __init__(self, rank: int):
        if rank < 1:
            raise PresentationError(f"free group rank must be >= 1, got {rank}")
        if rank > len(_LETTERS):
            raise PresentationError(f"rank {rank} exceeds letter alphabet")
        self.rank = rank
        self.description = f"free group rank {rank}"

    def _reduced(self, word) -> bool:
        return all(word[i] != -word[i + 1] for i in range(len(word) - 1))

    def contains(self, point) -> bool:
        return (
            isinstance(point, tuple)
            and all(isinstance(g, int) and g != 0 and abs(g) <= self.rank for g in point)
            and self._reduced(point)
        )

    def dist(self, a, b) -> int:
        k = 0
        while k < len(a) and k < len(b) and a[k] == b[k]:
            k += 1
        return (len(a) - k) + (len(b) - k)

    def _neighbors(self, w):
        out = []
        for g in range(-self.rank, self.rank + 1):
            if g == 0:
                continue
            if w and w[-1] == -g:
                out.append(w[:-1])
            else:
                out.append(w + (g,))
        return out

    def ball(self, center, radius: int) -> list:
        self._check_member(center)
        if radius < 0:
            return []
        seen = {center}
        frontier = [center]
        for _ in range(radius):
            nxt = []
            for w in frontier:
                for v in self._neighbors(w):
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return sorted(seen, key=self.point_key)

    def max_ball_size(self, r: int) -> int:
        if r == 0 or self.rank == 1:
            return 2 * r + 1
        q = 2 * self.rank
        # 1 + q + q(q-1) + ... + q(q-1)^{r-1}
        return 1 + q * ((q - 1) ** r - 1) // (q - 2)

    def point_key(self, p):
        return (len(p), p)

    def format_point(self, p) -> str:
        if not p:
            return "e"
        return "".join(
            _LETTERS[abs(g) - 1] if g > 0 else _LETTERS[abs(g) - 1].upper() for g in p
        )

    def parse_point(self, text: str):
        text = text.strip()
        if text == "e":
            return ()
        word = []
        for ch in text:
            low = ch.lower()
            if low not in _LETTERS[: self.rank]:
                raise PresentationError(f"bad free group letter {ch!r} in {text!r}")
            g = _LETTERS.index(low) + 1
            word.append(g if ch.islower() else -g)
        w = tuple(word)
        if not self._reduced(w):
            raise PresentationError(f"word {text!r} is not reduced")
        return w

    def origin(self):
        return ()


class Tree(SpacePresentation):
    """The (degree)-regular tree: words over {0..degree-1} with no letter
    repeated consecutively; each vertex has exactly ``degree`` neighbors."""

    def __init__(self, degree: int):
        if degree < 3:
            raise PresentationError(f"tree degree must be >= 3, got {degree}")
        if degree > 10:
            raise PresentationError("tree degree above 10 not supported")
        self.degree = degree
        self.description = f"{degree}-regular tree"

    def contains(self, point) -> bool:
        return (
            isinstance(point, tuple)
            and all(isinstance(g, int) and 0 <= g < self.degree for g in point)
            and all(point[i] != point[i + 1] for i in range(len(point) - 1))
        )

    def dist(self, a, b) -> int:
        k = 0
        while k < len(a) and k < len(b) and a[k] == b[k]:
            k += 1
        return (len(a) - k) + (len(b) - k)

    def _neighbors(self, w):
        out = []
        if w:
            out.append(w[:-1])
        last = w[-1] if w else None
        for g in range(self.degree):
            if g != last:
                out.append(w + (g,))
        return out

    def ball(self, center, radius: int) -> list:
        self._check_member(center)
        if radius < 0:
            return []
        seen = {center}
        frontier = [center]
        for _ in range(radius):
            nxt = []
            for w in frontier:
                for v in self._neighbors(w):
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return sorted(seen, key=self.point_key)

    def max_ball_size(self, r: int) -> int:
        if r == 0:
            return 1
        k = self.degree
        # 1 + k + k(k-1) + ... + k(k-1)^{r-1}
        return 1 + k * ((k - 1) ** r - 1) // (k - 2)

    def point_key(self, p):
        return (len(p), p)

    def format_point(self, p) -> str:
        return "e" if not p else "".join(str(g) for g in p)

    def parse_point(self, text: str):
        text = text.strip()
        if text == "e":
            return ()
        try:
            w = tuple(int(ch) for ch in text)
        except ValueError as exc:
            raise PresentationError(f"bad tree word {text!r}") from exc
        if not self.contains(w):
            raise PresentationError(f"tree word {text!r} invalid for {self.description}")
        return w

    def origin(self):
        return ()


class Doubling(SpacePresentation):
    """Two disjoint copies of the base: points (x, sheet), sheet in {0,1},
    d((x,i),(y,j)) = d_base(x,y) + |i-j|."""

    def __init__(self, base: SpacePresentation):
        self.base = base
        self.description = f"doubling of ({base.description})"

    def contains(self, point) -> bool:
        return (
            isinstance(point, tuple)
            and len(point) == 2
            and point[1] in (0, 1)
            and self.base.contains(point[0])
        )

    def dist(self, a, b) -> int:
        return self.base.dist(a[0], b[0]) + abs(a[1] - b[1])

    def ball(self, center, radius: int) -> list:
        self._check_member(center)
        x, j = center
        pts = [(y, j) for y in self.base.ball(x, radius)]
        if radius >= 1:
            pts += [(y, 1 - j) for y in self.base.ball(x, radius - 1)]
        pts.sort(key=self.point_key)
        return pts

    def max_ball_size(self, r: int) -> int:
        return self.base.max_ball_size(r) + (self.base.max_ball_size(r - 1) if r >= 1 else 0)

    def point_key(self, p):
        return (self.base.point_key(p[0]), p[1])

    def format_point(self, p) -> str:
        return f"{self.base.format_point(p[0])}|{p[1]}"

    def parse_point(self, text: str):
        if "|" not in text:
            raise PresentationError(f"doubling point {text!r} needs 'base|sheet'")
        body, sheet = text.rsplit("|", 1)
        j = int(sheet)
        if j not in (0, 1):
            raise PresentationError(f"sheet must be 0 or 1 in {text!r}")
        return (self.base.parse_point(body), j)

    def origin(self):
        return (self.base.origin(), 0)


@dataclass(frozen=True)
class Window:
    """A finite centered ball with margin.

    ``points`` is the full ball of ``radius`` around ``center`` in canonical
    order; ``interior`` the sub-ball of radius ``radius - margin``.  The margin
    guarantee: for interior x, every ambient point within ``margin`` of x is in
    the window, so radius-<=-margin constructions on the interior agree with the
    ambient space.
    """

    presentation: SpacePresentation
    center: Point
    radius: int
    margin: int
    points: tuple = field(repr=False)
    index: dict = field(repr=False, compare=False)
    interior_flags: tuple = field(repr=False, compare=False)

    @property
    def interior(self) -> tuple:
        return tuple(p for p, f in zip(self.points, self.interior_flags) if f)

    @property
    def frontier(self) -> tuple:
        return tuple(p for p, f in zip(self.points, self.interior_flags) if not f)

    def is_interior(self, p) -> bool:
        i = self.index.get(p)
        return i is not None and self.interior_flags[i]

    def __contains__(self, p) -> bool:
        return p in self.index

    def dist(self, a, b) -> int:
        return self.presentation.dist(a, b)

    def __len__(self) -> int:
        return len(self.points)

    def to_tsv(self) -> str:
        fmt = self.presentation.format_point
        lines = ["point_id\tcoordinates\tinterior_flag"]
        for i, p in enumerate(self.points):
            lines.append(f"{i}\t{fmt(p)}\t{1 if self.interior_flags[i] else 0}")
        return "\n".join(lines) + "\n"


def build_window(
    presentation: SpacePresentation,
    center: Point | None = None,
    radius: int = 0,
    margin: int = 0,
    point_budget: int = DEFAULT_POINT_BUDGET,
) -> Window:
    """Enumerate the ball of ``radius`` around ``center`` as a Window.

    Raises ResourceError when the geometry bound says the ball may exceed the
    point budget, PresentationError for invalid centers, ContractViolation for
    a margin that leaves no interior.
    """
    if center is None:
        center = presentation.origin()
    presentation._check_member(center)
    if radius < 0:
        raise ContractViolation(f"window radius must be >= 0, got {radius}")
    if margin < 0 or margin > radius:
        raise ContractViolation(
            f"window margin must satisfy 0 <= margin <= radius, got {margin}"
        )
    bound = presentation.max_ball_size(radius)
    if bound > point_budget:
        raise ResourceError(
            f"ball of radius {radius} may hold {bound} points, over budget {point_budget}"
        )
    pts = presentation.ball(center, radius)
    if len(pts) > point_budget:
        raise ResourceError(f"window holds {len(pts)} points, over budget {point_budget}")
    inner = radius - margin
    flags = tuple(presentation.dist(center, p) <= inner for p in pts)
    index = {p: i for i, p in enumerate(pts)}
    return Window(
        presentation=presentation,
        center=center,
        radius=radius,
        margin=margin,
        points=tuple(pts),
        index=index,
        interior_flags=flags,
    )


def r_boundary(window: Window, subset: Iterable, r: int) -> list:
    """Two-sided collar: points of the window within distance r of ``subset``
    AND within distance r of its complement.

    Ambient-correct when subset lies in the interior and r <= margin: every
    ambient point of the collar is then a window point.
    """
    if r < 0:
        raise ContractViolation(f"collar radius must be >= 0, got {r}")
    F = set(subset)
    for p in F:
        if not window.is_interior(p):
            raise ContractViolation(
                "subset must lie in the window interior for an ambient-correct collar"
            )
    if r > window.margin:
        raise MarginError(
            f"collar radius {r} exceeds window margin {window.margin}; "
            "result would not be ambient-correct"
        )
    pres = window.presentation
    near_F: set = set()
    for p in F:
        for q in pres.ball(p, r):
            if q in window.index:
                near_F.add(q)
    comp = [p for p in window.points if p not in F]
    near_comp: set = set()
    for p in comp:
        for q in pres.ball(p, r):
            near_comp.add(q)
    collar = [p for p in near_F if p in near_comp]
    collar.sort(key=pres.point_key)
    return collar


@dataclass(frozen=True)
class FolnerFamily:
    """An indexed family n -> finite point set, with a symbolic description."""

    presentation: SpacePresentation
    description: str
    sets: Callable[[int], list] = field(compare=False)

    def set_at(self, n: int) -> list:
        if n < 1:
            raise ContractViolation(f"family index must be >= 1, got {n}")
        pts = list(self.sets(n))
        if not pts:
            raise ContractViolation(f"family member {n} is empty")
        seen = set()
        for p in pts:
            self.presentation._check_member(p)
            if p in seen:
                raise ContractViolation("family member repeats a point")
            seen.add(p)
        return sorted(pts, key=self.presentation.point_key)


def folner_intervals(presentation: Lattice) -> FolnerFamily:
    """S_n = {0, ..., n-1} on Z."""
    if not isinstance(presentation, Lattice) or presentation.dim != 1:
        raise PresentationError("interval family is defined on Z")
    return FolnerFamily(
        presentation=presentation,
        description="S_n = {0,...,n-1}",
        sets=lambda n: [(x,) for x in range(n)],
    )


def folner_boxes(presentation: Lattice) -> FolnerFamily:
    """S_n = {0, ..., n-1}^d on Z^d."""
    if not isinstance(presentation, Lattice):
        raise PresentationError("box family is defined on lattices")
    d = presentation.dim

    def box(n: int) -> list:
        pts = [()]
        for _ in range(d):
            pts = [p + (x,) for p in pts for x in range(n)]
        return pts

    return FolnerFamily(
        presentation=presentation,
        description=f"S_n = {{0,...,n-1}}^{d}",
        sets=box,
    )


def folner_centered_balls(presentation: SpacePresentation, center=None) -> FolnerFamily:
    """S_n = ball of radius n around the center (origin by default)."""
    c = presentation.origin() if center is None else center
    presentation._check_member(c)
    return FolnerFamily(
        presentation=presentation,
        description=f"S_n = B_n({presentation.format_point(c)})",
        sets=lambda n: presentation.ball(c, n),
    )


def isoperimetric_profile(
    presentation: SpacePresentation,
    family: FolnerFamily,
    r: int,
    n_max: int,
    point_budget: int = DEFAULT_POINT_BUDGET,
) -> list[Fraction]:
    """|boundary_r(S_n)| / |S_n| for n = 1..n_max, exact rationals.

    Each S_n is wrapped in a window with margin r so the collar is the ambient
    one.
    """
    if r < 1:
        raise ContractViolation(f"profile radius must be >= 1, got {r}")
    if n_max < 1:
        raise ContractViolation(f"n_max must be >= 1, got {n_max}")
    values: list[Fraction] = []
    for n in range(1, n_max + 1):
        S = family.set_at(n)
        center = S[0]
        reach = max(presentation.dist(center, p) for p in S)
        w = build_window(
            presentation,
            center=center,
            radius=reach + 2 * r,
            margin=r,
            point_budget=point_budget,
        )
        collar = r_boundary(w, S, r)
        values.append(Fraction(len(collar), len(S)))
    return values
