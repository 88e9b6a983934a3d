"""Degree-0 class analysis.

A degree-0 cycle c vanishes in homology when some bounded, finite-propagation
edge chain b has boundary c.  On a window this is the divergence flow problem
from the transport module, and three escalation rules turn the per-window
minimal capacities into a verdict:

* a nonzero invariant mean proves the class nontrivial outright (boundaries
  average to zero along any isoperimetrically vanishing exhaustion);
* for lattice-periodic cycles, a feasible flow on the quotient torus tiles to
  a genuine global primitive, proving the class trivial outright;
* otherwise, capacities that keep growing are reported as NONTRIVIAL evidence
  and capacities that stabilize as TRIVIAL evidence, neither conclusive.

Semi-norm estimates use the same machinery with interval divergences: the
distance from c to the boundaries reachable with propagation <= r and edge
bound <= cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Mapping, Sequence

from .chain import CyclePattern, UFChain, finite_pattern
from .errors import ContractViolation
from .space import (
    FolnerFamily,
    Lattice,
    SpacePresentation,
    Window,
    build_window,
    folner_centered_balls,
)
from .transport import (
    CutWitness,
    DivergenceProblem,
    FlowCertificate,
    PeriodicFlow,
    feasible_divergence_flow,
    feasible_interval_flow,
    feasible_torus_interval_flow,
    min_feasible_capacity,
    min_torus_capacity,
    simplest_in_interval,
)

__all__ = [
    "WindowRow",
    "VerdictReport",
    "class_verdict",
    "folner_mean",
    "SeminormUpperReport",
    "seminorm_upper",
    "SeminormLowerReport",
    "seminorm_lower_via_mean",
]


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _as_pattern(cycle) -> CyclePattern:
    if isinstance(cycle, UFChain):
        if cycle.degree != 0:
            raise ContractViolation(f"expected a degree-0 cycle, got degree {cycle.degree}")
        return finite_pattern(cycle)
    if not isinstance(cycle, CyclePattern):
        raise ContractViolation(f"not a cycle pattern: {cycle!r}")
    return cycle


def _normalize_schedule(schedule) -> list[tuple[object, int]]:
    out = []
    for entry in schedule:
        if isinstance(entry, int):
            out.append((None, entry))
        else:
            center, radius = entry
            out.append((center, int(radius)))
    if not out:
        raise ContractViolation("empty window schedule")
    if [rad for _, rad in out] != sorted(rad for _, rad in out):
        raise ContractViolation("window schedule must be nondecreasing in radius")
    return out


@dataclass(frozen=True)
class WindowRow:
    center: object
    radius: int
    interior_size: int
    support_size: int
    c_min: Fraction


@dataclass(frozen=True)
class VerdictReport:
    verdict: str  # "TRIVIAL" | "NONTRIVIAL" | "INCONCLUSIVE"
    conclusive: bool
    basis: str
    ring: str
    r: int
    rows: tuple[WindowRow, ...]
    mean: Fraction | None = None
    witness: CutWitness | None = None
    witness_capacity: Fraction | None = None
    witness_radius: int | None = None
    primitive: FlowCertificate | None = None
    quotient: tuple | None = None  # (modulus, c_min, PeriodicFlow)

    def to_text(self, presentation: SpacePresentation | None = None) -> str:
        lines = [
            f"verdict\t{self.verdict}",
            f"conclusive\t{'yes' if self.conclusive else 'no'}",
            f"basis\t{self.basis}",
            f"ring\t{self.ring}",
            f"edge_radius\t{self.r}",
        ]
        if self.mean is not None:
            lines.append(f"mean\t{self.mean}")
        lines.append("window_radius\tinterior\tsupport\tc_min")
        for row in self.rows:
            lines.append(
                f"{row.radius}\t{row.interior_size}\t{row.support_size}\t{row.c_min}"
            )
        if self.witness is not None:
            lines.append(
                "witness\t"
                f"|F|={len(self.witness.points)}\t"
                f"demand={self.witness.demand_sum}\t"
                f"crossing={self.witness.crossing_edges}\t"
                f"refuted_capacity={self.witness_capacity}\t"
                f"deficit={self.witness.deficit}"
            )
        if self.quotient is not None:
            modulus, c_min, _ = self.quotient
            lines.append(f"quotient\tmodulus={modulus}\tc_min={c_min}")
        return "\n".join(lines) + "\n"


def class_verdict(
    presentation: SpacePresentation,
    cycle,
    schedule: Sequence = (8, 16, 32),
    r: int = 1,
    ring: str = "Q",
    use_quotient: bool = True,
    use_mean: bool = True,
) -> VerdictReport:
    """Decide (or gather evidence about) whether the degree-0 class of the
    cycle vanishes, by escalating windows from the schedule.

    Schedule entries are radii, or (center, radius) pairs for windows not
    centered at the origin.  ring 'Z' asks for integral primitives.
    """
    pattern = _as_pattern(cycle)
    rows: list[WindowRow] = []
    solved = []
    for center, radius in _normalize_schedule(schedule):
        w = build_window(presentation, center=center, radius=radius, margin=r)
        demands: dict = {}
        for p in w.interior:
            v = Fraction(pattern.coefficient_at(p, presentation))
            if v == 0:
                continue
            if ring == "Z" and v.denominator != 1:
                raise ContractViolation("ring Z requires integral coefficients")
            demands[p] = v
        res = min_feasible_capacity(w, r, demands, ring=ring)
        rows.append(
            WindowRow(
                center=w.center,
                radius=radius,
                interior_size=len(w.interior),
                support_size=len(demands),
                c_min=res.c_min,
            )
        )
        solved.append((w, demands, res))

    profile = pattern.periodic_profile()
    on_lattice = isinstance(presentation, Lattice)
    # the averaging argument needs vanishing collar ratios, so lattices only
    mean = pattern.periodic_mean() if (profile is not None and on_lattice) else None
    quotient = None
    if use_quotient and profile is not None and on_lattice:
        modulus, table = profile
        got = min_torus_capacity(modulus, r, table, ring=ring)
        if got is not None:
            quotient = (modulus, got[0], got[1])

    caps = [row.c_min for row in rows]
    if use_mean and on_lattice and mean is not None and mean != 0:
        verdict, conclusive, basis = (
            "NONTRIVIAL",
            True,
            "nonzero invariant mean; boundaries average to zero",
        )
    elif quotient is not None:
        verdict, conclusive, basis = (
            "TRIVIAL",
            True,
            "periodic primitive found on the quotient torus",
        )
    elif len(caps) >= 3 and caps[-3] < caps[-2] < caps[-1] and caps[-1] >= 2 * caps[-3]:
        verdict, conclusive, basis = (
            "NONTRIVIAL",
            False,
            "minimal capacity keeps growing with the window",
        )
    elif len(caps) >= 2 and caps[-1] == caps[-2]:
        verdict, conclusive, basis = (
            "TRIVIAL",
            False,
            "minimal capacity stabilized across windows",
        )
    else:
        verdict, conclusive, basis = ("INCONCLUSIVE", False, "no escalation rule fired")

    witness = None
    witness_cap = None
    witness_radius = None
    primitive = None
    if verdict == "NONTRIVIAL" and caps[-1] > 0:
        w, demands, _ = solved[-1]
        witness_cap = caps[-1] / 2
        cert = feasible_divergence_flow(
            DivergenceProblem(window=w, r=r, cap=witness_cap, demands=demands)
        )
        if cert.kind == "cut":
            witness = cert.cut
            witness_radius = rows[-1].radius
    if verdict == "TRIVIAL":
        primitive = solved[-1][2].certificate

    return VerdictReport(
        verdict=verdict,
        conclusive=conclusive,
        basis=basis,
        ring=ring,
        r=r,
        rows=tuple(rows),
        mean=mean,
        witness=witness,
        witness_capacity=witness_cap,
        witness_radius=witness_radius,
        primitive=primitive,
        quotient=quotient,
    )


def folner_mean(pattern, family: FolnerFamily, n: int) -> Fraction:
    """Exact average of the cycle's coefficients over the n-th family set."""
    pat = _as_pattern(pattern)
    points = family.set_at(n)
    pres = family.presentation
    total = sum((Fraction(pat.coefficient_at(p, pres)) for p in points), Fraction(0))
    return total / len(points)


# ---------------------------------------------------------------------------
# Semi-norm estimates.
# ---------------------------------------------------------------------------


def _pattern_sup(pattern: CyclePattern, window: Window | None) -> Fraction:
    profile = pattern.periodic_profile()
    if profile is not None:
        _, table = profile
        return max((abs(v) for v in table.values()), default=Fraction(0))
    chain = getattr(pattern, "source", None)
    if isinstance(chain, UFChain):
        return max((abs(v) for v in chain.terms.values()), default=Fraction(0))
    if window is None:
        raise ContractViolation("cannot bound a non-periodic pattern without a window")
    pres = window.presentation
    return max(
        (abs(Fraction(pattern.coefficient_at(p, pres))) for p in window.points),
        default=Fraction(0),
    )


def _window_distance(window: Window, pattern: CyclePattern, r: int, cap: Fraction) -> Fraction:
    pres = window.presentation
    c = {p: Fraction(pattern.coefficient_at(p, pres)) for p in window.interior}
    hi = max((abs(v) for v in c.values()), default=Fraction(0))

    def feas(t: Fraction) -> bool:
        lower = {p: v - t for p, v in c.items()}
        upper = {p: v + t for p, v in c.items()}
        return feasible_interval_flow(window, r, cap, lower, upper) is not None

    if hi == 0 or feas(Fraction(0)):
        return Fraction(0)
    L = 1
    for v in c.values():
        L = _lcm(L, v.denominator)
    B = max(1, L * cap.denominator * len(c))
    lo, gap = Fraction(0), Fraction(1, B * B)
    while hi - lo >= gap:
        mid = (lo + hi) / 2
        if feas(mid):
            hi = mid
        else:
            lo = mid
    t = simplest_in_interval(lo, hi, B)
    if not feas(t):
        raise AssertionError("internal: snapped window distance is not feasible")
    return t


def _torus_distance(
    modulus: tuple[int, ...],
    table: Mapping[tuple[int, ...], Fraction],
    r: int,
    cap: Fraction,
) -> tuple[Fraction, PeriodicFlow]:
    residues = [()]
    for m in modulus:
        residues = [res + (x,) for res in residues for x in range(m)]
    full = {res: Fraction(table.get(res, 0)) for res in residues}
    hi = max((abs(v) for v in full.values()), default=Fraction(0))

    def feas(t: Fraction) -> PeriodicFlow | None:
        lower = {res: v - t for res, v in full.items()}
        upper = {res: v + t for res, v in full.items()}
        return feasible_torus_interval_flow(modulus, r, cap, lower, upper)

    flow = feas(Fraction(0))
    if flow is not None:
        return Fraction(0), flow
    n_res = 1
    for m in modulus:
        n_res *= m
    L = 1
    for v in table.values():
        L = _lcm(L, v.denominator)
    B = max(1, L * cap.denominator * n_res)
    lo, gap = Fraction(0), Fraction(1, B * B)
    hi_flow = feas(hi)
    if hi_flow is None:
        raise AssertionError("internal: zero correction must be feasible at sup capacity")
    while hi - lo >= gap:
        mid = (lo + hi) / 2
        fl = feas(mid)
        if fl is not None:
            hi, hi_flow = mid, fl
        else:
            lo = mid
    t = simplest_in_interval(lo, hi, B)
    fl = feas(t)
    if fl is None:
        raise AssertionError("internal: snapped torus distance is not feasible")
    return t, fl


@dataclass(frozen=True)
class SeminormUpperReport:
    """Certified upper bound on the semi-norm of the degree-0 class.

    'periodic-quotient': the bound is the sup norm of c - boundary(b) for a
    periodic correction b (propagation <= r, edge bound <= cap) found on the
    quotient torus; the correction tiles globally, so the bound is genuine.
    'representative': the bound is the sup norm of c itself (b = 0).

    window_estimates are exact optima of the same corrected distance on
    finite windows with free frontier.  They lower-bound the (r, cap)
    restricted distance and are reported as diagnostics, not certificates.
    """

    value: Fraction
    method: str
    r: int
    cap: Fraction
    correction: PeriodicFlow | None
    window_estimates: tuple[tuple[int, Fraction], ...]


def seminorm_upper(
    presentation: SpacePresentation,
    cycle,
    r: int = 1,
    cap: Fraction = Fraction(1),
    schedule: Sequence = (4, 8),
    use_quotient: bool = True,
) -> SeminormUpperReport:
    pattern = _as_pattern(cycle)
    cap = Fraction(cap)
    if cap < 0:
        raise ContractViolation(f"edge bound must be >= 0, got {cap}")
    estimates = []
    last_window = None
    for center, radius in _normalize_schedule(schedule):
        w = build_window(presentation, center=center, radius=radius, margin=r)
        last_window = w
        estimates.append((radius, _window_distance(w, pattern, r, cap)))
    profile = pattern.periodic_profile()
    if use_quotient and profile is not None and isinstance(presentation, Lattice):
        modulus, table = profile
        value, flow = _torus_distance(modulus, table, r, cap)
        return SeminormUpperReport(
            value=value,
            method="periodic-quotient",
            r=r,
            cap=cap,
            correction=flow,
            window_estimates=tuple(estimates),
        )
    return SeminormUpperReport(
        value=_pattern_sup(pattern, last_window),
        method="representative",
        r=r,
        cap=cap,
        correction=None,
        window_estimates=tuple(estimates),
    )


@dataclass(frozen=True)
class SeminormLowerReport:
    """Certified lower bound on the semi-norm.

    Boundaries of bounded finite-propagation chains average to zero along
    centered balls (or any family with vanishing collar ratio), so the
    absolute invariant mean of a periodic cycle bounds its class from below.
    Non-periodic cycles get the trivial bound 0, with tail means as evidence
    of where the mean is heading.
    """

    value: Fraction
    certified: bool
    basis: str
    evidence: tuple[tuple[int, Fraction], ...]


def seminorm_lower_via_mean(
    presentation: SpacePresentation,
    cycle,
    family: FolnerFamily | None = None,
    tail: Sequence[int] = (10, 50, 250),
) -> SeminormLowerReport:
    pattern = _as_pattern(cycle)
    if family is None and isinstance(presentation, Lattice):
        family = folner_centered_balls(presentation)
    evidence = tuple((n, folner_mean(pattern, family, n)) for n in tail) if family else ()
    profile = pattern.periodic_profile()
    if profile is not None and isinstance(presentation, Lattice):
        return SeminormLowerReport(
            value=abs(pattern.periodic_mean()),
            certified=True,
            basis="invariant mean of a periodic cycle",
            evidence=evidence,
        )
    return SeminormLowerReport(
        value=Fraction(0),
        certified=True,
        basis="no periodic structure; tail means reported as evidence",
        evidence=evidence,
    )
