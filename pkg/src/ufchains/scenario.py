"""Scenario files: declarative descriptions of one reproducible computation.

A scenario is a TOML file naming a presentation, a cycle or map, an operation,
and its parameters.  Running it writes TSV tables and certificate files into
an output directory.  Every value in those files is an exact rational printed
deterministically, and all iteration orders are fixed, so re-running a
scenario reproduces its outputs byte for byte.

Exit status convention: 0 when the operation reached a definite answer,
2 when it ran fine but stayed inconclusive, 1 on configuration or runtime
errors (the command line driver maps exceptions to 1).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import degree0, degree1, rigidity, twisted
from .chain import (
    CyclePattern,
    chain_from_terms,
    constant_pattern,
    format_chain_literal,
    fundamental_pattern,
    indicator_pattern,
    periodic_pattern,
    scale_pattern,
    sum_patterns,
    sup_norm,
)
from .errors import ScenarioError
from .space import (
    Doubling,
    FreeGroup,
    Lattice,
    NamedRuleMembership,
    PeriodicMembership,
    SpacePresentation,
    SubsetOfLattice,
    Tree,
    build_window,
    folner_boxes,
    folner_centered_balls,
    folner_intervals,
    isoperimetric_profile,
)

__all__ = [
    "Scenario",
    "ScenarioResult",
    "load_scenario",
    "run_scenario",
    "build_presentation",
    "build_pattern",
    "build_map",
    "OPERATIONS",
]

OPERATIONS = ("verdict", "seminorm", "mean", "bilip", "prism", "rho", "profile")


@dataclass(frozen=True)
class Scenario:
    name: str
    operation: str
    presentation: dict | None
    cycle: dict | None
    map_spec: dict | None
    params: dict = field(default_factory=dict)
    out: str = "out"
    path: Path | None = None


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    operation: str
    exit_code: int
    outputs: tuple[str, ...]
    summary: str


# ---------------------------------------------------------------------------
# parsing


def _frac(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ScenarioError(
            f"{where}: expected an integer or a fraction string, got {value!r}"
        )
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"{where}: bad fraction {value!r} ({exc})") from None


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    return value


def _vector(value, where: str) -> tuple:
    if not isinstance(value, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in value
    ):
        raise ScenarioError(f"{where}: expected a list of integers, got {value!r}")
    return tuple(value)


def build_presentation(table: dict, where: str = "presentation") -> SpacePresentation:
    if not isinstance(table, dict) or "kind" not in table:
        raise ScenarioError(f"{where}: missing 'kind'")
    kind = table["kind"]
    if kind == "lattice":
        return Lattice(_int(table.get("dim", 1), f"{where}.dim"))
    if kind == "subset":
        dim = _int(table.get("dim", 1), f"{where}.dim")
        pred = table.get("predicate")
        if not isinstance(pred, dict) or "type" not in pred:
            raise ScenarioError(f"{where}.predicate: missing 'type'")
        if pred["type"] == "periodic":
            modulus = _vector(pred.get("modulus", []), f"{where}.predicate.modulus")
            residues = pred.get("residues")
            if not isinstance(residues, list):
                raise ScenarioError(f"{where}.predicate.residues: expected a list")
            rset = frozenset(
                _vector(r, f"{where}.predicate.residues[{i}]")
                for i, r in enumerate(residues)
            )
            rule = PeriodicMembership(modulus, rset)
        elif pred["type"] == "rule":
            rule = NamedRuleMembership(pred.get("name", ""))
        else:
            raise ScenarioError(
                f"{where}.predicate.type: unknown type {pred['type']!r}"
            )
        return SubsetOfLattice(Lattice(dim), rule)
    if kind == "tree":
        return Tree(_int(table.get("degree", 3), f"{where}.degree"))
    if kind == "free_group":
        return FreeGroup(_int(table.get("rank", 2), f"{where}.rank"))
    if kind == "doubling":
        base = table.get("base")
        if not isinstance(base, dict):
            raise ScenarioError(f"{where}.base: missing base presentation")
        return Doubling(build_presentation(base, f"{where}.base"))
    raise ScenarioError(f"{where}: unknown presentation kind {kind!r}")


def build_pattern(table: dict, where: str = "cycle") -> CyclePattern:
    if not isinstance(table, dict) or "kind" not in table:
        raise ScenarioError(f"{where}: missing 'kind'")
    kind = table["kind"]
    ring = table.get("ring", "Z")
    if kind == "fundamental":
        return fundamental_pattern(ring=ring)
    if kind == "constant":
        return constant_pattern(_frac(table.get("value", 1), f"{where}.value"), ring=ring)
    if kind == "periodic":
        modulus = _vector(table.get("modulus", []), f"{where}.modulus")
        coeffs = {}
        entries = table.get("coeffs")
        if not isinstance(entries, list):
            raise ScenarioError(f"{where}.coeffs: expected a list of tables")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ScenarioError(f"{where}.coeffs[{i}]: expected a table")
            res = _vector(entry.get("residue", []), f"{where}.coeffs[{i}].residue")
            coeffs[res] = _frac(entry.get("value", 0), f"{where}.coeffs[{i}].value")
        return periodic_pattern(modulus, coeffs, ring=ring)
    if kind == "indicator":
        name = table.get("rule")
        if not isinstance(name, str):
            raise ScenarioError(f"{where}.rule: expected a rule name string")
        scale = _frac(table.get("scale", 1), f"{where}.scale")
        return indicator_pattern(NamedRuleMembership(name), scale=scale, ring=ring)
    if kind == "sum":
        parts = table.get("parts")
        if not isinstance(parts, list) or not parts:
            raise ScenarioError(f"{where}.parts: expected a nonempty list")
        return sum_patterns(
            *(build_pattern(p, f"{where}.parts[{i}]") for i, p in enumerate(parts))
        )
    if kind == "scale":
        inner = table.get("inner")
        if not isinstance(inner, dict):
            raise ScenarioError(f"{where}.inner: expected a cycle table")
        factor = _frac(table.get("factor", 1), f"{where}.factor")
        return scale_pattern(build_pattern(inner, f"{where}.inner"), factor)
    raise ScenarioError(f"{where}: unknown cycle kind {kind!r}")


def build_map(table: dict, where: str = "map") -> rigidity.QIMap:
    if not isinstance(table, dict) or "rule" not in table:
        raise ScenarioError(f"{where}: missing 'rule'")
    rule = table["rule"]
    source = build_presentation(table.get("source", {}), f"{where}.source")
    target = build_presentation(table.get("target", {}), f"{where}.target")
    params: tuple = ()
    if rule == "scale":
        params = (_int(table.get("factor", 2), f"{where}.factor"),)
    elif rule == "shift":
        params = (_vector(table.get("offset", []), f"{where}.offset"),)
    elif rule == "matrix":
        rows = table.get("rows")
        if not isinstance(rows, list):
            raise ScenarioError(f"{where}.rows: expected matrix rows")
        params = (
            tuple(_vector(r, f"{where}.rows[{i}]") for i, r in enumerate(rows)),
        )
    declared: tuple = ()
    if "declared" in table:
        pair = table["declared"]
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioError(f"{where}.declared: expected [C, D]")
        declared = (_frac(pair[0], f"{where}.declared[0]"),
                    _frac(pair[1], f"{where}.declared[1]"))
    return rigidity.QIMap(source, target, rule, params, declared)


def _family(presentation, name: str, where: str):
    if name == "balls":
        return folner_centered_balls(presentation)
    if name == "intervals":
        return folner_intervals(presentation)
    if name == "boxes":
        return folner_boxes(presentation)
    raise ScenarioError(f"{where}: unknown family {name!r}")


def _schedule(value, where: str):
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{where}: expected a nonempty list")
    out = []
    for i, entry in enumerate(value):
        if isinstance(entry, int) and not isinstance(entry, bool):
            out.append(entry)
        elif isinstance(entry, dict):
            center = _vector(entry.get("center", []), f"{where}[{i}].center")
            radius = _int(entry.get("radius", 0), f"{where}[{i}].radius")
            out.append((center, radius))
        else:
            raise ScenarioError(
                f"{where}[{i}]: expected an integer radius or a center/radius table"
            )
    return tuple(out)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read {p}: {exc}") from None
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"{p}: {exc}") from None
    head = doc.get("scenario")
    if not isinstance(head, dict):
        raise ScenarioError(f"{p}: missing [scenario] table")
    operation = head.get("operation")
    if operation not in OPERATIONS:
        raise ScenarioError(
            f"{p}: unknown operation {operation!r}; expected one of {OPERATIONS}"
        )
    name = head.get("name", p.stem)
    if not isinstance(name, str) or not name:
        raise ScenarioError(f"{p}: scenario name must be a nonempty string")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError(f"{p}: [params] must be a table")
    return Scenario(
        name=name,
        operation=operation,
        presentation=doc.get("presentation"),
        cycle=doc.get("cycle"),
        map_spec=doc.get("map"),
        params=params,
        out=head.get("out", "out"),
        path=p,
    )


# ---------------------------------------------------------------------------
# running


def _write(out_dir: Path, rel: str, text: str, outputs: list) -> None:
    target = out_dir / rel
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8", newline="\n")
    outputs.append(rel)


def _need(scenario: Scenario, attr: str, section: str) -> dict:
    table = getattr(scenario, attr)
    if not isinstance(table, dict):
        raise ScenarioError(
            f"scenario {scenario.name!r}: operation {scenario.operation!r} "
            f"needs a [{section}] table"
        )
    return table


def _p(scenario: Scenario, overrides: dict | None, key: str, default):
    if overrides and key in overrides and overrides[key] is not None:
        return overrides[key]
    return scenario.params.get(key, default)


def run_scenario(
    scenario: Scenario, out_root=None, overrides: dict | None = None
) -> ScenarioResult:
    """Execute one scenario, writing artifacts under <out_root>/<name>/."""
    root = Path(out_root) if out_root is not None else Path(scenario.out)
    out_dir = root / scenario.name
    outputs: list[str] = []
    op = scenario.operation
    if op == "verdict":
        code, summary = _run_verdict(scenario, overrides, out_dir, outputs)
    elif op == "seminorm":
        code, summary = _run_seminorm(scenario, overrides, out_dir, outputs)
    elif op == "mean":
        code, summary = _run_mean(scenario, overrides, out_dir, outputs)
    elif op == "bilip":
        code, summary = _run_bilip(scenario, overrides, out_dir, outputs)
    elif op == "prism":
        code, summary = _run_prism(scenario, overrides, out_dir, outputs)
    elif op == "rho":
        code, summary = _run_rho(scenario, overrides, out_dir, outputs)
    elif op == "profile":
        code, summary = _run_profile(scenario, overrides, out_dir, outputs)
    else:  # pragma: no cover - load_scenario rejects unknown operations
        raise ScenarioError(f"unknown operation {op!r}")
    return ScenarioResult(
        name=scenario.name,
        operation=op,
        exit_code=code,
        outputs=tuple(outputs),
        summary=summary,
    )


def _run_verdict(scenario, overrides, out_dir, outputs):
    pres = build_presentation(_need(scenario, "presentation", "presentation"))
    pattern = build_pattern(_need(scenario, "cycle", "cycle"))
    schedule = _schedule(
        _p(scenario, overrides, "schedule", [8, 16, 32]), "params.schedule"
    )
    r = _int(_p(scenario, overrides, "r", 1), "params.r")
    ring = scenario.params.get("ring", "Q")
    rep = degree0.class_verdict(pres, pattern, schedule=schedule, r=r, ring=ring)
    lines = ["window_radius\tc_min\tverdict\twitness_size"]
    wsize = len(rep.witness.points) if rep.witness is not None else 0
    for row in rep.rows:
        lines.append(f"{row.radius}\t{row.c_min}\t{rep.verdict}\t{wsize}")
    _write(out_dir, "verdict.tsv", "\n".join(lines) + "\n", outputs)
    _write(out_dir, "report.txt", rep.to_text(pres), outputs)
    if rep.witness is not None:
        w = build_window(
            pres,
            center=rep.rows[-1].center,
            radius=rep.witness_radius,
            margin=r,
        )
        _write(out_dir, "witness_cut.tsv", rep.witness.to_tsv(w), outputs)
    if rep.primitive is not None:
        _write(out_dir, "primitive_flow.tsv", rep.primitive.flow_tsv(), outputs)
    if rep.quotient is not None:
        modulus, c_min, flow = rep.quotient
        qlines = ["residue\toffset\tflow"]
        for (res, off), v in sorted(flow.values.items()):
            qlines.append(f"{res}\t{off}\t{v}")
        _write(out_dir, "quotient_flow.tsv", "\n".join(qlines) + "\n", outputs)
    code = 0 if rep.verdict != "INCONCLUSIVE" else 2
    return code, f"verdict={rep.verdict} conclusive={'yes' if rep.conclusive else 'no'}"


def _run_seminorm(scenario, overrides, out_dir, outputs):
    pres = build_presentation(_need(scenario, "presentation", "presentation"))
    pattern = build_pattern(_need(scenario, "cycle", "cycle"))
    r = _int(_p(scenario, overrides, "r", 1), "params.r")
    cap = _frac(_p(scenario, overrides, "cap", 1), "params.cap")
    schedule = _schedule(_p(scenario, overrides, "schedule", [4, 8]), "params.schedule")
    tail = tuple(
        _int(n, "params.tail") for n in scenario.params.get("tail", [10, 50, 250])
    )
    upper = degree0.seminorm_upper(pres, pattern, r=r, cap=cap, schedule=schedule)
    lower = degree0.seminorm_lower_via_mean(pres, pattern, tail=tail)
    lines = [
        "bound\tvalue\tbasis\tcertified",
        f"upper\t{upper.value}\t{upper.method}\tyes",
        f"lower\t{lower.value}\t{lower.basis}\t{'yes' if lower.certified else 'no'}",
    ]
    _write(out_dir, "seminorm.tsv", "\n".join(lines) + "\n", outputs)
    est = ["window_radius\testimate"]
    for radius, value in upper.window_estimates:
        est.append(f"{radius}\t{value}")
    _write(out_dir, "window_estimates.tsv", "\n".join(est) + "\n", outputs)
    if upper.correction is not None:
        clines = ["residue\toffset\tflow"]
        for (res, off), v in sorted(upper.correction.values.items()):
            clines.append(f"{res}\t{off}\t{v}")
        _write(out_dir, "correction.tsv", "\n".join(clines) + "\n", outputs)
    exact = lower.certified and lower.value == upper.value
    code = 0 if exact else 2
    gap = "exact" if exact else f"gap=[{lower.value}, {upper.value}]"
    return code, f"upper={upper.value} lower={lower.value} {gap}"


def _run_mean(scenario, overrides, out_dir, outputs):
    pres = build_presentation(_need(scenario, "presentation", "presentation"))
    pattern = build_pattern(_need(scenario, "cycle", "cycle"))
    family = _family(
        pres, scenario.params.get("family", "balls"), "params.family"
    )
    tail = tuple(_int(n, "params.tail") for n in scenario.params.get("tail", [5, 25, 125]))
    lines = ["n\tset_size\tmean"]
    for n in tail:
        value = degree0.folner_mean(pattern, family, n)
        lines.append(f"{n}\t{len(family.set_at(n))}\t{value}")
    _write(out_dir, "mean.tsv", "\n".join(lines) + "\n", outputs)
    profile = pattern.periodic_profile()
    if profile is not None:
        _write(out_dir, "limit.txt", f"{pattern.periodic_mean()}\n", outputs)
        return 0, f"limit={pattern.periodic_mean()}"
    return 0, "finite averages reported"


def _run_bilip(scenario, overrides, out_dir, outputs):
    f = build_map(_need(scenario, "map_spec", "map"))
    schedule = _schedule(
        _p(scenario, overrides, "schedule", [6, 10, 16]), "params.schedule"
    )
    r = _int(_p(scenario, overrides, "r", 1), "params.r")
    max_disp = _int(scenario.params.get("max_displacement", 8), "params.max_displacement")
    rep = rigidity.bilipschitz_verdict(f, schedule=schedule, r=r, max_displacement=max_disp)
    est = rigidity.verify_qi(f, sample_radius=_int(
        _p(scenario, overrides, "radius", 6), "params.radius"))
    lines = [
        "answer\tclass_verdict\tdisplacement\tqi_holds\tnote",
        "\t".join(
            [
                rep.answer,
                rep.verdict.verdict,
                str(rep.matching.displacement) if rep.matching else "-",
                "yes" if est.holds else "no",
                rep.note,
            ]
        ),
    ]
    _write(out_dir, "bilip.tsv", "\n".join(lines) + "\n", outputs)
    _write(out_dir, "report.txt", rep.verdict.to_text(f.target), outputs)
    if rep.matching is not None:
        fmt_s = f.source.format_point
        fmt_t = f.target.format_point
        mlines = ["source\ttarget"]
        for x, y in rep.matching.pairs:
            mlines.append(f"{fmt_s(x)}\t{fmt_t(y)}")
        _write(out_dir, "matching.tsv", "\n".join(mlines) + "\n", outputs)
    if rep.verdict.witness is not None:
        w = build_window(
            f.target,
            center=rep.verdict.rows[-1].center,
            radius=rep.verdict.witness_radius,
            margin=r,
        )
        _write(out_dir, "witness_cut.tsv", rep.verdict.witness.to_tsv(w), outputs)
    code = 0 if rep.answer in ("YES", "NO") else 2
    return code, f"answer={rep.answer} ({rep.note})"


def _run_prism(scenario, overrides, out_dir, outputs):
    pres = build_presentation(
        scenario.presentation or {"kind": "lattice", "dim": 1}
    )
    n = _int(scenario.params.get("n", 3), "params.n")
    radius = _int(_p(scenario, overrides, "radius", 4 * n + 4), "params.radius")
    margin = _int(_p(scenario, overrides, "margin", n), "params.margin")
    w = build_window(pres, radius=radius, margin=margin)
    rep = degree1.rewrite_disjoint(n, w)
    _write(out_dir, "witness.chain",
           format_chain_literal(rep.certificate.witness, pres), outputs)
    for k, part in enumerate(rep.parts):
        _write(out_dir, f"part_{k}.chain", format_chain_literal(part, pres), outputs)
    lines = [
        "n\tholds\tchecked_edges\twitness_norm\tcombined_norm\tdisjoint",
        "\t".join(
            [
                str(n),
                "yes" if rep.holds else "no",
                str(rep.certificate.checked_edges),
                str(sup_norm(rep.certificate.witness)),
                str(rep.combined_norm),
                "yes" if rep.supports_disjoint else "no",
            ]
        ),
    ]
    _write(out_dir, "prism.tsv", "\n".join(lines) + "\n", outputs)
    return (0 if rep.holds else 2), f"n={n} holds={'yes' if rep.holds else 'no'}"


def _run_rho(scenario, overrides, out_dir, outputs):
    pres = build_presentation(
        scenario.presentation or {"kind": "lattice", "dim": 1}
    )
    if not isinstance(pres, Lattice):
        raise ScenarioError("rho needs a lattice presentation")
    seed = _int(_p(scenario, overrides, "seed", 0), "params.seed")
    radius = _int(_p(scenario, overrides, "radius", 12), "params.radius")
    count = _int(scenario.params.get("count", 50), "params.count")
    degrees = tuple(
        _int(d, "params.degrees") for d in scenario.params.get("degrees", [0, 1, 2])
    )
    rng = random.Random(seed)
    w = build_window(pres, radius=radius, margin=1)
    pts = list(w.points)
    chains = []
    for _ in range(count):
        degree = rng.choice(degrees)
        terms: dict = {}
        for _ in range(rng.randrange(1, 15)):
            tup = tuple(rng.choice(pts) for _ in range(degree + 1))
            terms[tup] = terms.get(tup, 0) + rng.randrange(-4, 5)
        chains.append(chain_from_terms(degree, terms, window=w))
    shift = (1,) + (0,) * (pres.dim - 1)
    rep = twisted.rho_roundtrip_check(pres, chains, translations=(shift,))
    lines = [
        "chains\troundtrip\tisometric\tchain_map\tequivariant",
        "\t".join(
            [
                str(rep.chains_checked),
                "yes" if rep.roundtrip_exact else "no",
                "yes" if rep.isometric else "no",
                "yes" if rep.chain_map else "no",
                "yes" if rep.equivariant else "no",
            ]
        ),
    ]
    _write(out_dir, "rho.tsv", "\n".join(lines) + "\n", outputs)
    code = 0 if rep.all_hold else 2
    return code, f"checked={rep.chains_checked} all_hold={'yes' if rep.all_hold else 'no'}"


def _run_profile(scenario, overrides, out_dir, outputs):
    pres = build_presentation(_need(scenario, "presentation", "presentation"))
    family = _family(pres, scenario.params.get("family", "balls"), "params.family")
    r = _int(_p(scenario, overrides, "r", 1), "params.r")
    n_max = _int(scenario.params.get("n_max", 12), "params.n_max")
    values = isoperimetric_profile(pres, family, r=r, n_max=n_max)
    lines = ["n\tcollar_ratio"]
    for i, v in enumerate(values, start=1):
        lines.append(f"{i}\t{v}")
    _write(out_dir, "profile.tsv", "\n".join(lines) + "\n", outputs)
    return 0, f"profile up to n={n_max}, last ratio {values[-1]}"
