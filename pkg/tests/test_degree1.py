"""Prism fillings and disjoint-support rewriting on the integer line."""

from fractions import Fraction

import pytest

from ufchains.chain import boundary, sup_norm
from ufchains.degree1 import (
    long_edge_cycle,
    prism_block,
    prism_certificate,
    rewrite_disjoint,
)
from ufchains.errors import ContractViolation, MarginError
from ufchains.space import Lattice, build_window

Z = Lattice(1)


def pt(z):
    return (z,)


def test_prism_block_boundary_telescopes_exactly():
    for n in range(1, 7):
        for z in (-3, 0, 5):
            got = boundary(prism_block(n, z)).terms
            want = {}
            for j in range(n):
                key = (pt(z + j), pt(z + j + 1))
                want[key] = want.get(key, Fraction(0)) + 1
            key = (pt(z), pt(z + n))
            want[key] = want.get(key, Fraction(0)) - 1
            want = {k: v for k, v in want.items() if v != 0}
            assert got == want
    # the one-step prism is degenerate: its boundary cancels entirely
    assert boundary(prism_block(1, 4)).terms == {}


def test_prism_certificate_holds_for_small_steps():
    for n in range(1, 7):
        w = build_window(Z, radius=3 * n + 6, margin=n)
        cert = prism_certificate(n, w)
        assert cert.holds
        assert cert.checked_edges > 0
        assert sup_norm(cert.witness) == 1
        assert cert.witness.ring == "Z"
        assert cert.witness.propagation == n


def test_certificate_boundary_values_on_interior():
    w = build_window(Z, radius=8, margin=2)
    cert = prism_certificate(2, w)
    db = boundary(cert.witness)
    # two blocks cover each unit edge, none covers it twice
    assert db.coefficient((pt(0), pt(1))) == 2
    assert db.coefficient((pt(0), pt(2))) == -1
    assert db.coefficient((pt(-3), pt(-2))) == 2
    assert cert.step_cycle.coefficient((pt(0), pt(1))) == 2
    assert cert.long_cycle.coefficient((pt(0), pt(2))) == 1


def test_rewrite_disjoint_structure():
    for n in (2, 3, 5):
        w = build_window(Z, radius=4 * n + 4, margin=n)
        rep = rewrite_disjoint(n, w)
        assert rep.holds
        assert rep.supports_disjoint
        assert rep.combined_norm == 1
        assert len(rep.parts) == n
        seen = set()
        for part in rep.parts:
            assert part.terms
            assert sup_norm(part) == 1
            assert not (seen & set(part.terms))
            seen |= set(part.terms)
        assert rep.combined.terms == rep.certificate.long_cycle.terms


def test_rewrite_single_step_is_whole_cycle():
    w = build_window(Z, radius=9, margin=1)
    rep = rewrite_disjoint(1, w)
    assert rep.holds
    assert len(rep.parts) == 1
    assert rep.parts[0].terms == long_edge_cycle(1, w).terms


def test_margin_and_line_guards():
    w = build_window(Z, radius=10, margin=2)
    with pytest.raises(MarginError):
        prism_certificate(4, w)
    w2 = build_window(Lattice(2), radius=4, margin=2)
    with pytest.raises(ContractViolation):
        prism_certificate(2, w2)
    with pytest.raises(ContractViolation):
        prism_block(0, 0)
