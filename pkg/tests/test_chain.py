"""Chain algebra: boundary, norms, pushforward, validation, literals."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from ufchains.chain import (
    boundary,
    chain_from_terms,
    finite_pattern,
    format_chain_literal,
    fundamental_pattern,
    indicator_pattern,
    parse_chain_literal,
    periodic_edge_pattern,
    periodic_pattern,
    pushforward,
    sum_patterns,
    sup_norm,
    validate,
    zero_chain,
)
from ufchains.errors import ContractViolation, WindowFitError
from ufchains.space import Lattice, PeriodicMembership, SubsetOfLattice, build_window

Z = Lattice(1)


def pt(x: int):
    return (x,)


def test_boundary_of_edge_is_head_minus_tail():
    c = chain_from_terms(1, {(pt(0), pt(1)): 1}, propagation=1)
    b = boundary(c)
    assert b.terms == {(pt(1),): Fraction(1), (pt(0),): Fraction(-1)}


def test_boundary_telescopes_on_interval():
    N = 10
    c = chain_from_terms(
        1, {(pt(z), pt(z + 1)): 1 for z in range(N)}, propagation=1
    )
    b = boundary(c)
    assert b.terms == {(pt(N),): Fraction(1), (pt(0),): Fraction(-1)}


def test_boundary_squares_to_zero_random():
    rng = random.Random(7)
    w = build_window(Z, radius=15, margin=3)
    pts = list(w.points)
    for _ in range(50):
        degree = rng.choice([2, 3])
        terms = {}
        for _ in range(rng.randrange(1, 25)):
            tup = tuple(rng.choice(pts) for _ in range(degree + 1))
            terms[tup] = terms.get(tup, 0) + rng.randrange(-5, 6)
        c = chain_from_terms(degree, terms, window=w)
        assert boundary(boundary(c)).terms == {}


def test_degree_zero_boundary_is_contract_violation():
    c = chain_from_terms(0, {(pt(0),): 1})
    with pytest.raises(ContractViolation):
        boundary(c)


def test_norm_axioms_exact():
    a = chain_from_terms(0, {(pt(0),): Fraction(1, 3), (pt(2),): -2}, ring="Q")
    b = chain_from_terms(0, {(pt(0),): Fraction(2, 3), (pt(5),): 1}, ring="Q")
    assert sup_norm(a) == 2
    assert sup_norm(a.add(b)) <= sup_norm(a) + sup_norm(b)
    assert sup_norm(a.scale(Fraction(-3, 2))) == Fraction(3, 2) * sup_norm(a)
    assert sup_norm(zero_chain(0)) == 0
    assert sup_norm(a.add(a.neg())) == 0


def test_ring_z_rejects_fractions():
    with pytest.raises(ContractViolation):
        chain_from_terms(0, {(pt(0),): Fraction(1, 2)}, ring="Z")


def test_pushforward_floor_half_collides():
    N = 6
    w_src = build_window(Z, center=pt(N), radius=N, margin=0)  # {0..2N}
    c = chain_from_terms(0, {(pt(x),): 1 for x in range(2 * N)})
    w_tgt = build_window(Z, center=pt(N // 2), radius=N, margin=0)
    img = pushforward(lambda p: (p[0] // 2,), c, target_window=w_tgt)
    assert img.terms == {(pt(y),): Fraction(2) for y in range(N)}


def test_pushforward_inclusion_gives_indicator():
    evens = SubsetOfLattice(Z, PeriodicMembership((2,), [(0,)]))
    w_src = build_window(evens, center=pt(0), radius=8, margin=2)
    c = fundamental_pattern().materialize(w_src)
    w_tgt = build_window(Z, center=pt(0), radius=10, margin=2)
    img = pushforward(lambda p: p, c, target_window=w_tgt)
    assert img.terms == {(pt(x),): Fraction(1) for x in range(-8, 9, 2)}


def test_pushforward_window_fit_error():
    c = chain_from_terms(0, {(pt(100),): 1})
    w_tgt = build_window(Z, radius=3)
    with pytest.raises(WindowFitError):
        pushforward(lambda p: p, c, target_window=w_tgt)


def test_pushforward_propagation_bound_from_stretch():
    w = build_window(Z, radius=30, margin=1)
    c = chain_from_terms(1, {(pt(0), pt(3)): 1}, propagation=3)
    img = pushforward(lambda p: (2 * p[0],), c, target_window=w, stretch=(2, 1))
    assert img.propagation == 7  # 2*3 + 1
    assert validate(img, w).propagation_ok


def test_validate_flags_propagation_violation():
    w = build_window(Z, radius=60, margin=1)
    c = chain_from_terms(1, {(pt(0), pt(50)): 1}, propagation=1)
    rep = validate(c, w)
    assert not rep.propagation_ok
    assert rep.measured_propagation == 50
    assert not rep.ok


def test_validate_interior_cycle_flag():
    w = build_window(Z, radius=10, margin=1)
    edges = periodic_edge_pattern(1, 0, (0, 1), 1).materialize(w)
    rep = validate(edges, w)
    # telescoping boundary lands on the frontier only
    assert rep.is_cycle_on_interior
    assert rep.ok
    half = edges.restrict(lambda t: t[0][0] >= 0)
    assert not validate(half, w).is_cycle_on_interior


def test_patterns_materialize_and_means():
    w = build_window(Z, radius=9, margin=1)
    two_evens = periodic_pattern((2,), {(0,): 2})
    c = two_evens.materialize(w)
    assert c.coefficient((pt(4),)) == 2 and c.coefficient((pt(3),)) == 0
    assert two_evens.periodic_mean() == 1

    fund = fundamental_pattern()
    assert fund.periodic_mean() == 1
    assert len(fund.materialize(w)) == 19

    from ufchains.space import NamedRuleMembership

    sq = indicator_pattern(NamedRuleMembership("squares"))
    assert sq.periodic_mean() is None
    assert sq.coefficient_at(pt(4), Z) == 1
    assert sq.coefficient_at(pt(5), Z) == 0

    s = sum_patterns(fund, sq)
    assert s.coefficient_at(pt(4), Z) == 2


def test_sum_pattern_periodic_profile_refines_moduli():
    a = periodic_pattern((2,), {(0,): 1})
    b = periodic_pattern((3,), {(1,): 1})
    s = sum_patterns(a, b)
    mod, table = s.periodic_profile()
    assert mod == (6,)
    assert table[(4,)] == 2  # 4 is even and 4 = 1 mod 3
    assert s.periodic_mean() == Fraction(1, 2) + Fraction(1, 3)


def test_chain_literal_roundtrip_and_patterns():
    text = """
# sample
2 : (0)
-1/2 : (3;4)
periodic period=2 offset=0 coeff=1 degree=1 shape=(0,1)
"""
    with pytest.raises(Exception):
        parse_chain_literal(text, Z, ring="Q")  # mixed degrees 0 and 1 in terms

    pattern, explicit = parse_chain_literal(
        "periodic period=2 offset=0 coeff=1 degree=1 shape=(0,1)\n", Z
    )
    assert explicit is None
    w = build_window(Z, radius=6, margin=1)
    c = pattern.materialize(w)
    assert c.coefficient((pt(-2), pt(-1))) == 1
    assert c.coefficient((pt(-1), pt(0))) == 0

    _, chain = parse_chain_literal("1 : (2)\n-2 : (5)\n", Z)
    assert chain.terms == {(pt(2),): Fraction(1), (pt(5),): Fraction(-2)}
    out = format_chain_literal(chain, Z)
    _, again = parse_chain_literal(out, Z)
    assert again.terms == chain.terms
    assert format_chain_literal(again, Z) == out


def test_finite_pattern_wraps_chain():
    c = chain_from_terms(0, {(pt(1),): 3})
    pat = finite_pattern(c)
    assert pat.coefficient_at(pt(1), Z) == 3
    w = build_window(Z, radius=5)
    assert pat.materialize(w).terms == c.terms
