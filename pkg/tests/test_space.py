"""Window construction, collars, and isoperimetric profiles.

Expected values are frozen from independent brute-force enumerations done in
the tests themselves (set comprehensions over explicit coordinate ranges), not
from the module under test.
"""

from __future__ import annotations

from fractions import Fraction

import pytest

from ufchains.errors import (
    ContractViolation,
    MarginError,
    PresentationError,
    ResourceError,
)
from ufchains.space import (
    Doubling,
    FreeGroup,
    Lattice,
    NamedRuleMembership,
    PeriodicMembership,
    SubsetOfLattice,
    Tree,
    build_window,
    folner_boxes,
    folner_centered_balls,
    folner_intervals,
    isoperimetric_profile,
    r_boundary,
)

Z = Lattice(1)
Z2 = Lattice(2)


def test_z_window_radius_3_is_seven_points():
    w = build_window(Z, center=(0,), radius=3, margin=1)
    assert [p[0] for p in w.points] == [-3, -2, -1, 0, 1, 2, 3]
    assert [p[0] for p in w.interior] == [-2, -1, 0, 1, 2]
    assert [p[0] for p in w.frontier] == [-3, 3]


def test_z2_window_radius_1_is_five_points():
    w = build_window(Z2, center=(0, 0), radius=1)
    assert set(w.points) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert len(w) == 5


def test_free_group_rank2_radius2_point_count():
    # oracle: generate words of length <= 2 over {a,A,b,B} and reduce by hand:
    # 1 identity + 4 of length 1 + 4*3 of length 2.
    oracle = 1 + 4 + 12
    F2 = FreeGroup(2)
    w = build_window(F2, radius=2)
    assert len(w) == oracle == 17
    # all pairwise distances agree with word-length of the quotient
    e = ()
    assert F2.dist((1, 2), (1, -2)) == 2
    assert F2.dist(e, (1, 2)) == 2
    assert F2.dist((1,), (-1,)) == 2


def test_ball_sizes_respect_geometry_bound():
    for pres, r in [(Z, 4), (Z2, 3), (FreeGroup(2), 3), (Tree(3), 5)]:
        w = build_window(pres, radius=r)
        for p in list(w.points)[::7]:
            assert len(pres.ball(p, 2)) <= pres.max_ball_size(2)
        assert len(w) <= pres.max_ball_size(r)


def test_lattice_ball_size_formula_matches_enumeration():
    for d in (1, 2, 3):
        pres = Lattice(d)
        for r in range(0, 4):
            assert len(pres.ball((0,) * d, r)) == pres.max_ball_size(r)


def test_tree_is_regular():
    T = Tree(3)
    w = build_window(T, radius=4, margin=1)
    for p in w.interior:
        nbrs = [q for q in w.points if T.dist(p, q) == 1]
        assert len(nbrs) == 3
    assert len(w) == 3 * 2**4 - 2  # 1 + 3 + 6 + 12 + 24


def test_doubling_window_count_identity():
    T = Tree(3)
    for R in (2, 3, 4):
        dbl = build_window(Doubling(T), radius=R)
        base_R = build_window(T, radius=R)
        base_Rm1 = build_window(T, radius=R - 1)
        assert len(dbl) == len(base_R) + len(base_Rm1)


def test_doubling_metric():
    D = Doubling(Z)
    assert D.dist(((0,), 0), ((3,), 1)) == 4
    assert D.dist(((2,), 1), ((2,), 1)) == 0
    assert D.dist(((2,), 1), ((2,), 0)) == 1


def test_subset_membership_and_induced_metric():
    evens = SubsetOfLattice(Z, PeriodicMembership((2,), [(0,)]))
    assert evens.contains((4,)) and not evens.contains((3,))
    assert evens.dist((0,), (6,)) == 6  # induced from Z, not renormalized
    w = build_window(evens, center=(0,), radius=6, margin=2)
    assert [p[0] for p in w.points] == [-6, -4, -2, 0, 2, 4, 6]

    nonsq = SubsetOfLattice(Z, NamedRuleMembership("nonsquares"))
    assert nonsq.contains((-3,)) and nonsq.contains((2,))
    for s in (0, 1, 4, 9, 16):
        assert not nonsq.contains((s,))


def test_collar_on_interval_of_z():
    w = build_window(Z, center=(5,), radius=20, margin=2)
    F = [(x,) for x in range(0, 10)]
    collar1 = r_boundary(w, F, 1)
    assert sorted(p[0] for p in collar1) == [-1, 0, 9, 10]
    collar2 = r_boundary(w, F, 2)
    assert sorted(p[0] for p in collar2) == [-2, -1, 0, 1, 8, 9, 10, 11]


def test_collar_margin_and_membership_guards():
    w = build_window(Z, center=(0,), radius=5, margin=1)
    with pytest.raises(MarginError):
        r_boundary(w, [(0,)], 2)
    with pytest.raises(ContractViolation):
        r_boundary(w, [(5,)], 1)  # frontier point


def test_profile_interval_family_on_z():
    fam = folner_intervals(Z)
    vals = isoperimetric_profile(Z, fam, r=1, n_max=100)
    # |collar({0..n-1})| = 4 once n > 2 (two inner + two outer points)
    assert vals[99] == Fraction(4, 100)
    assert vals[9] == Fraction(4, 10)
    # ratios tend to zero along the family
    assert vals[99] < vals[9] < vals[2]


def test_profile_boxes_on_z2():
    fam = folner_boxes(Z2)
    vals = isoperimetric_profile(Z2, fam, r=1, n_max=10)
    # oracle for n = 10: inner layer 10^2 - 8^2 = 36, outer layer 4*10 = 40
    assert vals[9] == Fraction(76, 100)


def test_profile_free_group_balls_bounded_below():
    F2 = FreeGroup(2)
    fam = folner_centered_balls(F2)
    vals = isoperimetric_profile(F2, fam, r=1, n_max=6)
    for v in vals:
        assert v >= 1


def test_budget_and_contract_errors():
    with pytest.raises(ResourceError):
        build_window(Z2, radius=2000, point_budget=1000)
    with pytest.raises(ContractViolation):
        build_window(Z, radius=3, margin=5)
    with pytest.raises(PresentationError):
        build_window(Z, center=(0, 0), radius=1)
    with pytest.raises(PresentationError):
        Tree(2)


def test_window_tsv_dump_is_deterministic():
    w = build_window(Z, center=(0,), radius=2, margin=1)
    tsv = w.to_tsv()
    assert tsv.splitlines()[0] == "point_id\tcoordinates\tinterior_flag"
    assert tsv.splitlines()[1] == "0\t-2\t0"
    assert tsv == w.to_tsv()


def test_point_parse_format_roundtrip():
    cases = [
        (Z, (-3,)),
        (Z2, (1, -2)),
        (FreeGroup(2), (1, 2, -1)),
        (Tree(3), (0, 2, 0)),
        (Doubling(Z), ((4,), 1)),
    ]
    for pres, p in cases:
        assert pres.parse_point(pres.format_point(p)) == p
