"""Flow kernel tests.

Frozen values below were derived by hand from the cut side of the duality:
the best subset F of the interior maximizes |sum_F demand| - cap * cut_count.
On an interval window [-4, 4] with r = 1 and all-ones demands, F = full
interior [-3, 3] gives 7 - 1*4 = 3 in the collar convention (collar is
{-4, -3, 3, 4}) and 7 - 1*2 = 5 in the crossing convention (edges (-4, -3)
and (3, 4)).  Alternating demands admit the flow ..., -1/2, +1/2, ... so the
minimal capacity is 1/2.  All-ones demands on [-N, N] force capacity
(2N - 1)/2 through the full-interior cut.  On the 3-regular tree the
full-interior cut of a depth-D window gives 1 - 1/(3*2^(D-2)) and an integral
flow exists at capacity 1.
"""

import random
from fractions import Fraction

import pytest

from ufchains.chain import boundary, chain_from_terms
from ufchains.errors import ContractViolation, MarginError, ResourceError
from ufchains.space import Lattice, Tree, build_window, r_boundary
from ufchains.transport import (
    CutWitness,
    DivergenceProblem,
    brute_force_cut_oracle,
    feasible_divergence_flow,
    feasible_interval_flow,
    feasible_torus_flow,
    min_feasible_capacity,
    min_torus_capacity,
    simplest_in_interval,
    window_edges,
    TorusProblem,
)

Z = Lattice(1)
F0 = Fraction(0)


def interval_window(radius, margin=1):
    return build_window(Z, center=(0,), radius=radius, margin=margin)


def test_window_edges_interval():
    w = interval_window(4)
    edges = window_edges(w, 1)
    assert len(edges) == 8
    assert edges[0] == ((-4,), (-3,))
    assert all(y[0] - x[0] == 1 for x, y in edges)
    assert len(window_edges(w, 2)) == 8 + 7


def test_all_ones_cut_oracle_collar_and_crossing():
    w = interval_window(4)
    demands = {p: Fraction(1) for p in w.interior}
    best = brute_force_cut_oracle(w, 1, demands, Fraction(1), convention="collar")
    assert best.points == tuple(w.interior)
    assert best.demand_sum == 7
    assert best.collar_size == 4
    assert best.deficit == 3
    best_x = brute_force_cut_oracle(w, 1, demands, Fraction(1), convention="crossing")
    assert best_x.points == tuple(w.interior)
    assert best_x.crossing_edges == 2
    assert best_x.deficit == 5


def test_alternating_demands_admit_half_capacity():
    w = interval_window(4)
    demands = {p: Fraction((-1) ** p[0]) for p in w.interior}
    best = brute_force_cut_oracle(w, 1, demands, Fraction(1), convention="crossing")
    assert best.points == ()
    assert best.deficit == 0
    res = min_feasible_capacity(w, 1, demands, ring="Q")
    assert res.c_min == Fraction(1, 2)
    assert res.certificate.verify()


def test_zero_demands_trivially_feasible():
    w = interval_window(4)
    res = min_feasible_capacity(w, 1, {}, ring="Q")
    assert res.c_min == 0
    assert res.certificate.kind == "flow"
    best = brute_force_cut_oracle(w, 1, {}, F0, convention="collar")
    assert best.points == () and best.deficit == 0


def test_all_ones_min_capacity_matches_full_interior_cut():
    w = interval_window(6)
    demands = {p: Fraction(1) for p in w.interior}
    res = min_feasible_capacity(w, 1, demands, ring="Q")
    assert res.c_min == Fraction(11, 2)
    assert res.certificate.verify()
    # refute just below the optimum and inspect the dual cut
    cert = feasible_divergence_flow(
        DivergenceProblem(window=w, r=1, cap=Fraction(11, 2) - Fraction(1, 1000), demands=demands)
    )
    assert cert.kind == "cut"
    assert cert.verify()
    assert cert.cut.points == tuple(w.interior)
    assert cert.cut.demand_sum == 11
    assert cert.cut.crossing_edges == 2


def test_flow_divergence_matches_boundary_operator():
    w = interval_window(5)
    demands = {p: Fraction([1, -2, 0, 1, 2, -1, 0, 1, -2][i]) for i, p in enumerate(w.interior)}
    cert = feasible_divergence_flow(DivergenceProblem(window=w, r=1, cap=Fraction(9), demands=demands))
    assert cert.kind == "flow"
    b = chain_from_terms(1, cert.flow, ring="Q", window=w)
    db = boundary(b)
    for p in w.interior:
        assert db.coefficient((p,)) == demands.get(p, F0)
        assert cert.divergence_at(p) == demands.get(p, F0)


def test_integral_data_yields_integral_flow():
    w = interval_window(5)
    demands = {p: Fraction(1) for p in w.interior}
    cert = feasible_divergence_flow(DivergenceProblem(window=w, r=1, cap=Fraction(5), demands=demands))
    assert cert.kind == "flow"
    assert cert.is_integral()


@pytest.mark.parametrize("seed", range(6))
def test_duality_cross_check_interval(seed):
    rng = random.Random(1000 + seed)
    w = interval_window(4)
    for _ in range(10):
        demands = {p: Fraction(rng.randint(-3, 3)) for p in w.interior}
        cap = rng.choice([F0, Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)])
        cert = feasible_divergence_flow(DivergenceProblem(window=w, r=1, cap=cap, demands=demands))
        best = brute_force_cut_oracle(w, 1, demands, cap, convention="crossing")
        if cert.kind == "flow":
            assert best.deficit <= 0
            assert cert.verify()
        else:
            assert best.deficit > 0
            assert cert.verify()
            assert cert.cut.deficit > 0


def test_duality_cross_check_plane_and_r2():
    rng = random.Random(77)
    Z2 = Lattice(2)
    w2 = build_window(Z2, radius=2, margin=1)
    for _ in range(12):
        demands = {p: Fraction(rng.randint(-2, 2)) for p in w2.interior}
        cap = rng.choice([F0, Fraction(1, 2), Fraction(1)])
        cert = feasible_divergence_flow(DivergenceProblem(window=w2, r=1, cap=cap, demands=demands))
        best = brute_force_cut_oracle(w2, 1, demands, cap, convention="crossing")
        assert (cert.kind == "flow") == (best.deficit <= 0)
        assert cert.verify()
    wr = interval_window(4, margin=2)
    for _ in range(8):
        demands = {p: Fraction(rng.randint(-2, 2)) for p in wr.interior}
        cap = rng.choice([Fraction(1, 2), Fraction(1)])
        cert = feasible_divergence_flow(DivergenceProblem(window=wr, r=2, cap=cap, demands=demands))
        best = brute_force_cut_oracle(wr, 2, demands, cap, convention="crossing")
        assert (cert.kind == "flow") == (best.deficit <= 0)
        assert cert.verify()


def test_collar_crossing_sandwich():
    rng = random.Random(5)
    w = interval_window(4)
    edges = window_edges(w, 1)
    interior = list(w.interior)
    for _ in range(20):
        F = [p for p in interior if rng.random() < 0.5]
        if not F:
            continue
        Fset = set(F)
        crossing = sum(1 for (x, y) in edges if (x in Fset) != (y in Fset))
        collar = len(r_boundary(w, F, 1))
        assert collar <= 2 * crossing
        assert crossing >= 1


def test_tree_fundamental_capacities():
    T = Tree(3)
    w = build_window(T, radius=6, margin=1)
    demands = {p: Fraction(1) for p in w.interior}
    res_z = min_feasible_capacity(w, 1, demands, ring="Z")
    assert res_z.c_min == 1
    assert res_z.certificate.is_integral()
    assert res_z.certificate.verify()
    res_q = min_feasible_capacity(w, 1, demands, ring="Q")
    assert res_q.c_min == Fraction(47, 48)  # 1 - 1/(3*2^4), full-interior cut


def test_interval_flow_feasibility_threshold():
    # relaxed divergence: inflow at x within [c_x - t, c_x + t], c = 2 on evens
    w = interval_window(4)
    c = {p: Fraction(2 if p[0] % 2 == 0 else 0) for p in w.interior}

    def feasible_at(t):
        lower = {p: c[p] - t for p in w.interior}
        upper = {p: c[p] + t for p in w.interior}
        return feasible_interval_flow(w, 1, Fraction(1), lower, upper) is not None

    # best subset is [-2, 2]: (sum 6 - cap 1 * 2 crossings) / 5 points = 4/5
    assert feasible_at(Fraction(4, 5))
    assert not feasible_at(Fraction(3, 4))
    values = [
        (F, (sum(c[p] for p in F) - Fraction(cr)) / len(F))
        for F, cr in _all_interior_cuts(w)
    ]
    assert max(v for _, v in values) == Fraction(4, 5)


def _all_interior_cuts(w):
    from itertools import combinations

    interior = list(w.interior)
    edges = window_edges(w, 1)
    for size in range(1, len(interior) + 1):
        for F in combinations(interior, size):
            Fset = set(F)
            cr = sum(1 for (x, y) in edges if (x in Fset) != (y in Fset))
            yield F, cr


def test_torus_swap_demands():
    got = min_torus_capacity((2,), 1, {(0,): Fraction(1), (1,): Fraction(-1)})
    assert got is not None
    c_min, flow = got
    assert c_min == Fraction(1, 2)
    assert flow.sup_norm() == Fraction(1, 2)
    # tile onto a window and confirm the boundary reproduces the demands
    w = interval_window(5)
    chain = flow.materialize(w)
    db = boundary(chain)
    for p in w.interior:
        want = Fraction(1) if p[0] % 2 == 0 else Fraction(-1)
        assert db.coefficient((p,)) == want


def test_torus_unbalanced_demands_are_infeasible():
    assert min_torus_capacity((2,), 1, {(0,): Fraction(1)}) is None
    prob = TorusProblem(modulus=(3,), r=1, cap=Fraction(100), demands={(0,): Fraction(1)})
    assert feasible_torus_flow(prob) is None


def test_torus_plane_corner_to_corner():
    demands = {(0, 0): Fraction(1), (1, 1): Fraction(-1)}
    got = min_torus_capacity((2, 2), 1, demands)
    assert got is not None
    c_min, flow = got
    assert c_min == Fraction(1, 4)
    w = build_window(Lattice(2), radius=3, margin=1)
    db = boundary(flow.materialize(w))
    for p in w.interior:
        want = demands.get((p[0] % 2, p[1] % 2), F0)
        assert db.coefficient((p,)) == want


def test_simplest_in_interval_snaps():
    lo, hi = Fraction(333, 1000), Fraction(3337, 10000)
    assert simplest_in_interval(lo, hi, 3) == Fraction(1, 3)
    assert simplest_in_interval(Fraction(0), Fraction(1, 2), 2) == Fraction(1, 2)


def test_problem_guards():
    w = interval_window(4)
    with pytest.raises(MarginError):
        DivergenceProblem(window=w, r=2, cap=Fraction(1), demands={})
    with pytest.raises(ContractViolation):
        DivergenceProblem(window=w, r=1, cap=Fraction(1), demands={(-4,): Fraction(1)})
    with pytest.raises(ContractViolation):
        DivergenceProblem(window=w, r=1, cap=Fraction(-1), demands={})
    with pytest.raises(ContractViolation):
        brute_force_cut_oracle(w, 1, {}, F0, convention="edges")
    big = build_window(Z, radius=20, margin=1)
    with pytest.raises(ResourceError):
        brute_force_cut_oracle(big, 1, {}, F0)


def test_cut_witness_deficit_conventions():
    wit = CutWitness(
        points=((0,),),
        demand_sum=Fraction(5),
        crossing_edges=2,
        collar_size=3,
        capacity=Fraction(1),
        convention="crossing",
    )
    assert wit.deficit == 3
    wit2 = CutWitness(
        points=wit.points,
        demand_sum=wit.demand_sum,
        crossing_edges=2,
        collar_size=3,
        capacity=Fraction(1),
        convention="collar",
    )
    assert wit2.deficit == 2
