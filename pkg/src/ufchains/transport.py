"""Exact flow transport on windows.

The degree-0 vanishing question "is the cycle c the boundary of a bounded edge
chain b with propagation <= r" is, on a window, a flow feasibility problem:
interior points carry divergence demands, frontier points are free (the
ambient space continues past them), and every r-edge carries at most C in
absolute value.

Everything is exact: rational data is scaled to integers, max flow runs over
Python ints (Dinic, deterministic iteration order), and results are rescaled
back to Fractions.  Infeasibility is returned as a violating subset F of the
interior with |sum of demands over F| > C * (number of r-edges crossing F) --
the max-flow/min-cut dual of the feasibility question, and the exact
window-level form of the degree-0 vanishing criterion's obstruction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Mapping, Sequence

from .errors import ContractViolation, MarginError, ResourceError
from .space import Lattice, Window, r_boundary

__all__ = [
    "window_edges",
    "DivergenceProblem",
    "FlowCertificate",
    "CutWitness",
    "feasible_divergence_flow",
    "feasible_interval_flow",
    "min_feasible_capacity",
    "MinCapacityResult",
    "brute_force_cut_oracle",
    "TorusProblem",
    "PeriodicFlow",
    "feasible_torus_flow",
    "feasible_torus_interval_flow",
    "min_torus_capacity",
    "simplest_in_interval",
]


# ---------------------------------------------------------------------------
# Integer max flow (Dinic), deterministic.
# ---------------------------------------------------------------------------


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        eid = len(self.to)
        self.head[u].append(eid)
        self.to.append(v)
        self.cap.append(cap)
        self.head[v].append(eid + 1)
        self.to.append(u)
        self.cap.append(0)
        return eid

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for eid in self.head[u]:
                    v = self.to[eid]
                    if self.cap[eid] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return total
            it = [0] * self.n
            # iterative blocking-flow DFS
            while True:
                stack = [s]
                path: list[int] = []
                found = False
                while stack:
                    u = stack[-1]
                    if u == t:
                        found = True
                        break
                    advanced = False
                    while it[u] < len(self.head[u]):
                        eid = self.head[u][it[u]]
                        v = self.to[eid]
                        if self.cap[eid] > 0 and level[v] == level[u] + 1:
                            stack.append(v)
                            path.append(eid)
                            advanced = True
                            break
                        it[u] += 1
                    if not advanced:
                        stack.pop()
                        if path:
                            path.pop()
                        if stack:
                            it[stack[-1]] += 1
                if not found:
                    break
                push = min(self.cap[eid] for eid in path)
                for eid in path:
                    self.cap[eid] -= push
                    self.cap[eid ^ 1] += push
                total += push

    def flow_on(self, eid: int, original_cap: int) -> int:
        return original_cap - self.cap[eid]

    def residual_reachable(self, s: int) -> set[int]:
        seen = {s}
        queue = [s]
        for u in queue:
            for eid in self.head[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


@dataclass(frozen=True)
class _Arc:
    u: int
    v: int
    low: Fraction
    cap: Fraction


def _solve_circulation(
    num_nodes: int, arcs: Sequence[_Arc]
) -> tuple[bool, list[Fraction] | None, set[int] | None]:
    """Feasible circulation with lower bounds, conservation at every node.

    Returns (feasible, per-arc flows, None) or (False, None, residual-reachable
    original node ids).
    """
    L = 1
    for a in arcs:
        L = _lcm(L, a.low.denominator)
        L = _lcm(L, a.cap.denominator)
    lows = [int(a.low * L) for a in arcs]
    caps = [int(a.cap * L) for a in arcs]
    for a, lo, cp in zip(arcs, lows, caps):
        if lo < 0 or lo > cp:
            raise ContractViolation(f"arc bounds [{a.low}, {a.cap}] invalid")
    S, T = num_nodes, num_nodes + 1
    net = _Dinic(num_nodes + 2)
    eids = []
    for a, lo, cp in zip(arcs, lows, caps):
        eids.append(net.add_edge(a.u, a.v, cp - lo))
    surplus = [0] * num_nodes
    for a, lo in zip(arcs, lows):
        surplus[a.v] += lo
        surplus[a.u] -= lo
    need = 0
    for v, s in enumerate(surplus):
        if s > 0:
            net.add_edge(S, v, s)
            need += s
        elif s < 0:
            net.add_edge(v, T, -s)
    got = net.max_flow(S, T)
    if got == need:
        flows = [
            Fraction(net.flow_on(eid, cp - lo) + lo, L)
            for eid, lo, cp in zip(eids, lows, caps)
        ]
        return True, flows, None
    reach = {v for v in net.residual_reachable(S) if v < num_nodes}
    return False, None, reach


# ---------------------------------------------------------------------------
# Window-level problems.
# ---------------------------------------------------------------------------


def window_edges(window: Window, r: int) -> list[tuple]:
    """Unordered pairs of window points at distance in [1, r], canonical order."""
    if r < 1:
        raise ContractViolation(f"edge radius must be >= 1, got {r}")
    pres = window.presentation
    key = pres.point_key
    edges = []
    for x in window.points:
        kx = key(x)
        for q in pres.ball(x, r):
            if q in window.index and key(q) > kx:
                edges.append((x, q))
    return edges


@dataclass(frozen=True)
class DivergenceProblem:
    """Find b on r-edges of the window, |b| <= cap on each edge, such that the
    net inflow at every interior point equals its demand; frontier free."""

    window: Window
    r: int
    cap: Fraction
    demands: Mapping[object, Fraction]

    def __post_init__(self):
        if self.r < 1:
            raise ContractViolation(f"r must be >= 1, got {self.r}")
        if self.r > self.window.margin:
            raise MarginError(
                f"r = {self.r} exceeds window margin {self.window.margin}"
            )
        if not self.window.interior:
            raise ContractViolation("window has empty interior")
        if self.cap < 0:
            raise ContractViolation(f"capacity must be >= 0, got {self.cap}")
        for p in self.demands:
            if not self.window.is_interior(p):
                raise ContractViolation("demand on a non-interior point")


@dataclass(frozen=True)
class CutWitness:
    """A subset F of the interior whose demand sum beats the cut capacity."""

    points: tuple
    demand_sum: Fraction
    crossing_edges: int
    collar_size: int
    capacity: Fraction
    convention: str = "crossing"

    @property
    def cut_count(self) -> int:
        return self.crossing_edges if self.convention == "crossing" else self.collar_size

    @property
    def deficit(self) -> Fraction:
        return abs(self.demand_sum) - self.capacity * self.cut_count

    def to_tsv(self, window: Window) -> str:
        fmt = window.presentation.format_point
        inF = set(self.points)
        lines = ["point\tin_F"]
        for p in window.points:
            lines.append(f"{fmt(p)}\t{1 if p in inF else 0}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FlowCertificate:
    """Either a feasible edge flow (kind 'flow') or a violating cut
    (kind 'cut').  Flow values are net, on canonically oriented edges; the
    divergence sign convention is that b on edge (x, y) adds +b at y and -b
    at x."""

    kind: str
    problem: DivergenceProblem
    flow: Mapping[tuple, Fraction] | None = None
    cut: CutWitness | None = None

    def divergence_at(self, p) -> Fraction:
        if self.kind != "flow":
            raise ContractViolation("divergence query on a cut certificate")
        total = Fraction(0)
        for (x, y), v in self.flow.items():
            if y == p:
                total += v
            if x == p:
                total -= v
        return total

    def is_integral(self) -> bool:
        if self.kind != "flow":
            return False
        return all(v.denominator == 1 for v in self.flow.values())

    def verify(self) -> bool:
        """Re-check the certificate against its problem from scratch."""
        prob = self.problem
        if self.kind == "flow":
            edges = set(window_edges(prob.window, prob.r))
            div: dict = {}
            for (x, y), v in self.flow.items():
                if (x, y) not in edges:
                    return False
                if abs(v) > prob.cap:
                    return False
                div[y] = div.get(y, Fraction(0)) + v
                div[x] = div.get(x, Fraction(0)) - v
            for p in prob.window.interior:
                want = prob.demands.get(p, Fraction(0))
                if div.get(p, Fraction(0)) != want:
                    return False
            return True
        F = set(self.cut.points)
        if not F:
            return False
        if not all(prob.window.is_interior(p) for p in F):
            return False
        total = sum((prob.demands.get(p, Fraction(0)) for p in F), Fraction(0))
        if total != self.cut.demand_sum:
            return False
        crossing = sum(
            1 for (x, y) in window_edges(prob.window, prob.r) if (x in F) != (y in F)
        )
        if crossing != self.cut.crossing_edges:
            return False
        return abs(total) > prob.cap * crossing

    def flow_tsv(self) -> str:
        fmt = self.problem.window.presentation.format_point
        lines = ["edge_tail\tedge_head\tflow"]
        key = self.problem.window.presentation.point_key
        for (x, y) in sorted(self.flow, key=lambda e: (key(e[0]), key(e[1]))):
            lines.append(f"{fmt(x)}\t{fmt(y)}\t{self.flow[(x, y)]}")
        return "\n".join(lines) + "\n"


def _window_arcs(window: Window, r: int, cap: Fraction):
    """Directed arc pairs for every unordered window edge, plus bookkeeping."""
    edges = window_edges(window, r)
    idx = window.index
    arcs: list[_Arc] = []
    for (x, y) in edges:
        arcs.append(_Arc(idx[x], idx[y], Fraction(0), cap))
        arcs.append(_Arc(idx[y], idx[x], Fraction(0), cap))
    return edges, arcs


def _net_flows(edges, flows, offset=0):
    out = {}
    for k, (x, y) in enumerate(edges):
        net = flows[offset + 2 * k] - flows[offset + 2 * k + 1]
        if net != 0:
            out[(x, y)] = net
    return out


def _cut_from_reachable(
    window: Window, r: int, demands, cap: Fraction, reach: set[int], delta: int
) -> CutWitness:
    if delta in reach:
        F = [
            p
            for i, p in enumerate(window.points)
            if window.interior_flags[i] and i not in reach
        ]
    else:
        F = [
            p
            for i, p in enumerate(window.points)
            if window.interior_flags[i] and i in reach
        ]
    Fset = set(F)
    total = sum((demands.get(p, Fraction(0)) for p in F), Fraction(0))
    crossing = sum(
        1 for (x, y) in window_edges(window, r) if (x in Fset) != (y in Fset)
    )
    collar = len(r_boundary(window, F, r)) if F else 0
    w = CutWitness(
        points=tuple(sorted(F, key=window.presentation.point_key)),
        demand_sum=total,
        crossing_edges=crossing,
        collar_size=collar,
        capacity=cap,
    )
    if w.deficit <= 0:
        raise AssertionError("internal: extracted cut does not violate the capacity")
    return w


def feasible_divergence_flow(problem: DivergenceProblem) -> FlowCertificate:
    """Solve the divergence problem; returns a flow certificate or a violating
    cut certificate.  Integral data yields an integral flow."""
    w, r, cap = problem.window, problem.r, problem.cap
    demands = {p: Fraction(v) for p, v in problem.demands.items() if v != 0}
    n = len(w.points)
    delta = n
    edges, arcs = _window_arcs(w, r, cap)
    d_abs = sum((abs(v) for v in demands.values()), Fraction(0))
    big = d_abs + 1
    idx = w.index
    for i, p in enumerate(w.points):
        if not w.interior_flags[i]:
            arcs.append(_Arc(i, delta, Fraction(0), big))
            arcs.append(_Arc(delta, i, Fraction(0), big))
    for p, d in sorted(demands.items(), key=lambda kv: w.presentation.point_key(kv[0])):
        if d > 0:
            arcs.append(_Arc(idx[p], delta, d, d))
        else:
            arcs.append(_Arc(delta, idx[p], -d, -d))
    ok, flows, reach = _solve_circulation(n + 1, arcs)
    if ok:
        return FlowCertificate(
            kind="flow", problem=problem, flow=_net_flows(edges, flows)
        )
    cut = _cut_from_reachable(w, r, demands, cap, reach, delta)
    return FlowCertificate(kind="cut", problem=problem, cut=cut)


def feasible_interval_flow(
    window: Window,
    r: int,
    cap: Fraction,
    lower: Mapping[object, Fraction],
    upper: Mapping[object, Fraction],
) -> Mapping[tuple, Fraction] | None:
    """Edge flow with net inflow at each interior point inside
    [lower[p], upper[p]] (default [0, 0]); frontier free.  Returns the net
    flows, or None when infeasible."""
    if r < 1 or r > window.margin:
        raise MarginError(f"r = {r} outside [1, margin={window.margin}]")
    n = len(window.points)
    delta = n
    edges, arcs = _window_arcs(window, r, cap)
    span = Fraction(0)
    for p in window.interior:
        lo = Fraction(lower.get(p, 0))
        hi = Fraction(upper.get(p, 0))
        if lo > hi:
            raise ContractViolation(f"empty divergence interval at {p!r}")
        span += max(abs(lo), abs(hi))
    big = span + 1
    idx = window.index
    for i, p in enumerate(window.points):
        if not window.interior_flags[i]:
            arcs.append(_Arc(i, delta, Fraction(0), big))
            arcs.append(_Arc(delta, i, Fraction(0), big))
        else:
            lo = Fraction(lower.get(p, 0))
            hi = Fraction(upper.get(p, 0))
            # net inflow d decomposes as (absorbed) - (injected)
            arcs.append(_Arc(idx[p], delta, max(Fraction(0), lo), max(Fraction(0), hi)))
            arcs.append(
                _Arc(delta, idx[p], max(Fraction(0), -hi), max(Fraction(0), -lo))
            )
    ok, flows, _ = _solve_circulation(n + 1, arcs)
    if not ok:
        return None
    return _net_flows(edges, flows)


def simplest_in_interval(lo: Fraction, hi: Fraction, max_den: int) -> Fraction:
    """The unique fraction with denominator <= max_den in (lo, hi], assuming
    the interval is narrower than 1/max_den^2 and contains one."""
    mid = (lo + hi) / 2
    cand = mid.limit_denominator(max_den)
    if not (lo < cand <= hi):
        # the closest approximant can fall just outside; nudge to the endpoint
        cand = hi.limit_denominator(max_den)
    return cand


@dataclass(frozen=True)
class MinCapacityResult:
    c_min: Fraction
    certificate: FlowCertificate  # feasible flow at c_min
    ring: str


def min_feasible_capacity(
    window: Window,
    r: int,
    demands: Mapping[object, Fraction],
    ring: str = "Q",
    max_doublings: int = 40,
) -> MinCapacityResult:
    """Smallest capacity C for which the divergence problem is feasible.

    ring 'Q': the exact rational optimum (a ratio |sum_F d| / crossing(F),
    recovered by binary search plus denominator snapping).  ring 'Z': the
    smallest integer capacity (what integral certificates use).
    """
    demands = {p: Fraction(v) for p, v in demands.items() if v != 0}

    def feasible(c: Fraction) -> FlowCertificate | None:
        cert = feasible_divergence_flow(
            DivergenceProblem(window=window, r=r, cap=c, demands=demands)
        )
        return cert if cert.kind == "flow" else None

    zero = feasible(Fraction(0))
    if zero is not None:
        return MinCapacityResult(Fraction(0), zero, ring)
    d_abs = sum((abs(v) for v in demands.values()), Fraction(0))
    hi = d_abs if d_abs > 0 else Fraction(1)
    hi_cert = feasible(hi)
    doublings = 0
    while hi_cert is None:
        doublings += 1
        if doublings > max_doublings:
            raise ResourceError("no feasible capacity found; frontier unreachable?")
        hi *= 2
        hi_cert = feasible(hi)
    if ring == "Z":
        lo = 0
        hi_int = int(hi) if hi.denominator == 1 else int(hi) + 1
        hi_cert = feasible(Fraction(hi_int)) or hi_cert
        while hi_int - lo > 1:
            mid = (lo + hi_int) // 2
            cert = feasible(Fraction(mid))
            if cert is not None:
                hi_int, hi_cert = mid, cert
            else:
                lo = mid
        return MinCapacityResult(Fraction(hi_int), hi_cert, "Z")
    E = len(window_edges(window, r))
    L = 1
    for v in demands.values():
        L = _lcm(L, v.denominator)
    B = max(1, L * E)
    lo = Fraction(0)
    gap = Fraction(1, B * B)
    while hi - lo >= gap:
        mid = (lo + hi) / 2
        cert = feasible(mid)
        if cert is not None:
            hi, hi_cert = mid, cert
        else:
            lo = mid
    c_star = simplest_in_interval(lo, hi, B)
    cert = feasible(c_star)
    if cert is None:
        raise AssertionError("internal: snapped capacity is not feasible")
    return MinCapacityResult(c_star, cert, "Q")


def brute_force_cut_oracle(
    window: Window,
    r: int,
    demands: Mapping[object, Fraction],
    cap: Fraction,
    convention: str = "collar",
    max_interior: int = 16,
) -> CutWitness:
    """Exhaustive maximizer of |sum_F demand| - cap * cut_count(F) over all
    subsets F of the interior.  cut_count follows the convention: 'collar'
    counts the two-sided collar points, 'crossing' the crossing r-edges (the
    convention under which the max-flow duality is exact).  Ties keep the
    first subset in (size, lexicographic) order, so the empty set wins when
    nothing violates."""
    if convention not in ("collar", "crossing"):
        raise ContractViolation(f"unknown convention {convention!r}")
    interior = list(window.interior)
    if len(interior) > max_interior:
        raise ResourceError(
            f"interior has {len(interior)} points, oracle cap is {max_interior}"
        )
    pres = window.presentation
    n_all = len(window.points)
    pos = {p: i for i, p in enumerate(window.points)}
    ball_mask = [0] * n_all
    for i, p in enumerate(window.points):
        m = 0
        for q in pres.ball(p, r):
            j = pos.get(q)
            if j is not None:
                m |= 1 << j
        ball_mask[i] = m
    adj_mask = [ball_mask[i] & ~(1 << i) for i in range(n_all)]
    dem = [Fraction(demands.get(p, 0)) for p in window.points]
    int_ids = [pos[p] for p in interior]
    full = (1 << n_all) - 1

    def stats(ids: tuple[int, ...]):
        fmask = 0
        for i in ids:
            fmask |= 1 << i
        total = sum((dem[i] for i in ids), Fraction(0))
        crossing = 0
        for i in ids:
            crossing += bin(adj_mask[i] & (full & ~fmask)).count("1")
        collar = 0
        for i in range(n_all):
            near_f = ball_mask[i] & fmask
            near_c = ball_mask[i] & (full & ~fmask)
            if near_f and near_c:
                collar += 1
        return total, crossing, collar

    best: CutWitness | None = None
    for size in range(0, len(int_ids) + 1):
        for ids in combinations(int_ids, size):
            total, crossing, collar = stats(ids)
            count = crossing if convention == "crossing" else collar
            value = abs(total) - cap * count
            if best is None or value > abs(best.demand_sum) - cap * best.cut_count:
                best = CutWitness(
                    points=tuple(window.points[i] for i in ids),
                    demand_sum=total,
                    crossing_edges=crossing,
                    collar_size=collar,
                    capacity=cap,
                    convention=convention,
                )
    return best


# ---------------------------------------------------------------------------
# Wraparound (quotient torus) problems for lattice-periodic cycles.
# ---------------------------------------------------------------------------


def _offsets_within(dim: int, r: int) -> list[tuple[int, ...]]:
    """Lex-positive l^1-ball offsets: one representative per +-pair."""
    lat = Lattice(dim)
    out = []
    for o in lat.ball((0,) * dim, r):
        if o == (0,) * dim:
            continue
        nz = next(c for c in o if c != 0)
        if nz > 0:
            out.append(o)
    return out


def _residues(modulus: tuple[int, ...]) -> list[tuple[int, ...]]:
    cells = [()]
    for m in modulus:
        cells = [c + (x,) for c in cells for x in range(m)]
    return cells


@dataclass(frozen=True)
class TorusProblem:
    """Quotient of Z^d by the modulus lattice: nodes are residues, one edge
    class per (residue, lex-positive offset with |o|_1 <= r).  A feasible
    torus flow tiles to a periodic ambient correction."""

    modulus: tuple[int, ...]
    r: int
    cap: Fraction
    demands: Mapping[tuple[int, ...], Fraction]


@dataclass(frozen=True)
class PeriodicFlow:
    """Periodic edge flow: value per (residue, offset) class.  Materializes on
    any window of the lattice as a degree-1 chain with propagation <= r."""

    modulus: tuple[int, ...]
    values: Mapping[tuple[tuple[int, ...], tuple[int, ...]], Fraction]

    def sup_norm(self) -> Fraction:
        return max((abs(v) for v in self.values.values()), default=Fraction(0))

    def materialize(self, window: Window):
        from .chain import chain_from_terms

        terms: dict[tuple, Fraction] = {}
        prop = 0
        for p in window.points:
            res = tuple(x % m for x, m in zip(p, self.modulus))
            for (rr, off), v in self.values.items():
                if rr != res:
                    continue
                q = tuple(x + o for x, o in zip(p, off))
                if q in window.index:
                    terms[(p, q)] = terms.get((p, q), Fraction(0)) + v
                    prop = max(prop, sum(abs(o) for o in off))
        ring = "Z" if all(v.denominator == 1 for v in terms.values()) else "Q"
        return chain_from_terms(1, terms, ring=ring, propagation=prop)


def _torus_arcs(modulus, r, cap):
    residues = _residues(modulus)
    rindex = {res: i for i, res in enumerate(residues)}
    offsets = _offsets_within(len(modulus), r)
    classes = []
    arcs: list[_Arc] = []
    for res in residues:
        for off in offsets:
            dst = tuple((a + b) % m for a, b, m in zip(res, off, modulus))
            classes.append((res, off))
            arcs.append(_Arc(rindex[res], rindex[dst], Fraction(0), cap))
            arcs.append(_Arc(rindex[dst], rindex[res], Fraction(0), cap))
    return residues, rindex, classes, arcs


def feasible_torus_flow(problem: TorusProblem) -> PeriodicFlow | None:
    """Periodic flow with exact divergence = demands on every residue, or
    None.  A nonzero demand total is unbalanced and never feasible (the torus
    has no frontier)."""
    modulus, r, cap = problem.modulus, problem.r, problem.cap
    demands = {tuple(k): Fraction(v) for k, v in problem.demands.items()}
    if r < 1:
        raise ContractViolation(f"r must be >= 1, got {r}")
    if any(m < 1 for m in modulus):
        raise ContractViolation(f"modulus must be positive, got {modulus}")
    residues, rindex, classes, arcs = _torus_arcs(modulus, r, cap)
    n = len(residues)
    delta = n
    for res in residues:
        d = demands.get(res, Fraction(0))
        if d > 0:
            arcs.append(_Arc(rindex[res], delta, d, d))
        elif d < 0:
            arcs.append(_Arc(delta, rindex[res], -d, -d))
    ok, flows, _ = _solve_circulation(n + 1, arcs)
    if not ok:
        return None
    values = {}
    for k, cls in enumerate(classes):
        net = flows[2 * k] - flows[2 * k + 1]
        if net != 0:
            values[cls] = net
    return PeriodicFlow(modulus=modulus, values=values)


def min_torus_capacity(
    modulus: Sequence[int],
    r: int,
    demands: Mapping[tuple[int, ...], Fraction],
    ring: str = "Q",
) -> tuple[Fraction, PeriodicFlow] | None:
    """Smallest capacity making the torus problem feasible, or None when the
    demands are unbalanced (no capacity works)."""
    modulus = tuple(int(m) for m in modulus)
    demands = {tuple(k): Fraction(v) for k, v in demands.items() if v != 0}
    total = sum(demands.values(), Fraction(0))
    if total != 0:
        return None

    def feasible(c: Fraction):
        return feasible_torus_flow(
            TorusProblem(modulus=modulus, r=r, cap=c, demands=demands)
        )

    z = feasible(Fraction(0))
    if z is not None:
        return Fraction(0), z
    d_abs = sum((abs(v) for v in demands.values()), Fraction(0))
    hi = d_abs
    hi_flow = feasible(hi)
    while hi_flow is None:
        hi *= 2
        hi_flow = feasible(hi)
        if hi > d_abs * (1 << 20):
            raise ResourceError("torus capacity search diverged")
    if ring == "Z":
        lo = 0
        hi_int = int(hi) if hi.denominator == 1 else int(hi) + 1
        hi_flow = feasible(Fraction(hi_int)) or hi_flow
        while hi_int - lo > 1:
            mid = (lo + hi_int) // 2
            fl = feasible(Fraction(mid))
            if fl is not None:
                hi_int, hi_flow = mid, fl
            else:
                lo = mid
        return Fraction(hi_int), hi_flow
    n_classes = 1
    for m in modulus:
        n_classes *= m
    n_classes *= len(_offsets_within(len(modulus), r))
    L = 1
    for v in demands.values():
        L = _lcm(L, v.denominator)
    B = max(1, L * n_classes)
    lo = Fraction(0)
    gap = Fraction(1, B * B)
    while hi - lo >= gap:
        mid = (lo + hi) / 2
        fl = feasible(mid)
        if fl is not None:
            hi, hi_flow = mid, fl
        else:
            lo = mid
    c_star = simplest_in_interval(lo, hi, B)
    fl = feasible(c_star)
    if fl is None:
        raise AssertionError("internal: snapped torus capacity is not feasible")
    return c_star, fl


def feasible_torus_interval_flow(
    modulus: Sequence[int],
    r: int,
    cap: Fraction,
    lower: Mapping[tuple[int, ...], Fraction],
    upper: Mapping[tuple[int, ...], Fraction],
) -> PeriodicFlow | None:
    """Torus flow with divergence at residue res inside [lower, upper]."""
    modulus = tuple(int(m) for m in modulus)
    residues, rindex, classes, arcs = _torus_arcs(modulus, r, cap)
    n = len(residues)
    delta = n
    for res in residues:
        lo = Fraction(lower.get(res, 0))
        hi = Fraction(upper.get(res, 0))
        if lo > hi:
            raise ContractViolation(f"empty divergence interval at {res!r}")
        arcs.append(_Arc(rindex[res], delta, max(Fraction(0), lo), max(Fraction(0), hi)))
        arcs.append(_Arc(delta, rindex[res], max(Fraction(0), -hi), max(Fraction(0), -lo)))
    ok, flows, _ = _solve_circulation(n + 1, arcs)
    if not ok:
        return None
    values = {}
    for k, cls in enumerate(classes):
        net = flows[2 * k] - flows[2 * k + 1]
        if net != 0:
            values[cls] = net
    return PeriodicFlow(modulus=tuple(modulus), values=values)
