"""Executing scenarios and comparing against their expected blocks."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..base_arith import BaseRingSpec, FgAbelianShape
from ..graded_core import (
    CyclicQuotient,
    DirectSum,
    FreeOnBasis,
    PlainGradedModule,
    PresentedGradedAlgebra,
    generator,
    inverse_monomial_family,
)
from ..homalg import (
    AmbiguousExtension,
    BigradedTable,
    CyclicAction,
    MapDatum,
    cone_les_solve,
    discriminant_cokernel,
    periodic_resolution,
    resolve_cyclic_auto,
    tate_cyclic,
    tor_table,
    trace_gram,
)
from ..numtheory import brute_group_orders, norm_image
from ..specseq import (
    DifferentialSpec,
    Verdict,
    assemble_abutment,
    detect_collapse,
    page_from_ambient,
    page_from_table,
    run_spectral_sequence,
)
from .fileformat import Node, Scenario, ValidationError, compile_expression, load_scenario

DATA_DIR = Path(__file__).with_name("data")


@dataclass
class Report:
    name: str
    kind: str
    passed: bool
    diffs: list = field(default_factory=list)
    partial_expected: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)
    checks: int = 0
    seconds: float = field(default=0.0, compare=False)
    run: object = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "scenario": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "checks": self.checks,
            "diffs": list(self.diffs),
            "partial_expected": list(self.partial_expected),
            "sections": self.sections,
        }

    def format(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} {self.name} ({self.kind}): {self.checks} expected items checked"]
        for key, val in self.sections.items():
            if isinstance(val, str):
                lines.append(f"  {key}: {val}")
        for d in self.diffs:
            lines.append(f"  diff: {d}")
        for p in self.partial_expected:
            lines.append(f"  partial: {p}")
        return "\n".join(lines)


# -- building blocks -----------------------------------------------------------


def _options(args, start):
    """Split trailing 'key value' pairs and bare flags."""
    opts = {}
    flags = set()
    i = start
    while i < len(args):
        tok = args[i]
        if tok in ("weight", "filtration"):
            opts[tok] = int(args[i + 1])
            i += 2
        elif tok == "window":
            opts[tok] = (int(args[i + 1]), int(args[i + 2]))
            i += 3
        else:
            flags.add(tok)
            i += 1
    return opts, flags


def build_algebra(node: Node, ring: BaseRingSpec, label="") -> PresentedGradedAlgebra:
    gens = []
    windows = {}
    for g in node.all("gen"):
        opts, flags = _options(g.args, 2)
        unknown = flags - {"invertible", "square_zero"}
        if unknown:
            raise ValidationError(f"line {g.line}: unknown generator flag(s) {sorted(unknown)}")
        gens.append(generator(g.args[0], int(g.args[1]), opts.get("weight", 0), "invertible" in flags,
                              "square_zero" in flags, opts.get("filtration", 0)))
        if "window" in opts:
            windows[g.args[0]] = opts["window"]
    rules = [r.args[0] for r in node.all("rule")]
    return PresentedGradedAlgebra(ring, gens, rules, windows, label)


def _entry_json(key, e) -> dict:
    return {"n": key[0], "m": key[1], "shape": e.shape.format(), "names": sorted(e.names), "partial": e.partial}


def table_json(table: BigradedTable) -> list:
    return [_entry_json(k, e) for k, e in sorted(table.entries.items())]


def _shape_text(result) -> str:
    return result.format()


def abutment_json(abut: dict) -> list:
    out = []
    for d in sorted(abut):
        a = abut[d]
        if a.contributions or not a.complete:
            out.append({"degree": d, "result": _shape_text(a.result), "names": sorted(a.names), "complete": a.complete})
    return out


class Checker:
    """Accumulates diffs for one scenario."""

    def __init__(self, window=None):
        # with a window override, expectations outside it are not checked
        self.window = tuple(window) if window else None
        self.diffs: list[str] = []
        self.partial: list[str] = []
        self.count = 0

    def table(self, exp: Node, table: BigradedTable, label: str) -> None:
        entries = {}
        for ent in exp.all("entry"):
            n, m = int(ent.args[0]), int(ent.args[1])
            entries[(n, m)] = (FgAbelianShape.parse(ent.args[2]), set(ent.args[3:]))
        reg = exp.ints("region")
        rows = set(exp.ints("rows") or ())
        keys = set(entries)
        if reg is not None:
            nl, nh, ml, mh = reg
            keys |= {(n, m) for n in range(nl, nh + 1) for m in range(ml, mh + 1)}
        if rows:
            keys = {k for k in keys if k[0] in rows}
        if self.window:
            keys = {k for k in keys if self.window[0] <= k[1] <= self.window[1]}
        for key in sorted(keys):
            self.count += 1
            want_shape, want_names = entries.get(key, (FgAbelianShape(), set()))
            got = table.lookup(*key)
            if got is None:
                self.diffs.append(f"{label} {key}: outside the computed table")
                continue
            if got.partial:
                self.partial.append(f"{label} {key}")
            if got.shape != want_shape:
                self.diffs.append(f"{label} {key}: expected {want_shape.format()}, got {got.shape.format()}")
            elif want_names and set(got.names) != want_names:
                self.diffs.append(f"{label} {key}: classes {sorted(got.names)} != expected {sorted(want_names)}")

    def _skip(self, d) -> bool:
        return self.window is not None and not self.window[0] <= d <= self.window[1]

    def abutment(self, exp: Node, abut: dict, label: str) -> None:
        listed = set()
        for a in exp.all("abutment"):
            d = int(a.args[0])
            if self._skip(d):
                continue
            listed.add(d)
            self.count += 1
            got = abut.get(d)
            want = FgAbelianShape.parse(a.args[1])
            if got is None:
                self.diffs.append(f"{label} abutment {d}: not computed")
                continue
            if not got.complete:
                self.partial.append(f"{label} abutment {d}")
            if got.result != want:
                self.diffs.append(f"{label} abutment {d}: expected {want.format()}, got {_shape_text(got.result)}")
            elif a.args[2:] and set(got.names) != set(a.args[2:]):
                self.diffs.append(f"{label} abutment {d}: classes {sorted(got.names)} != expected {sorted(a.args[2:])}")
        rng = exp.ints("abutment_degrees")
        if rng is not None:
            for d in range(rng[0], rng[1] + 1):
                if d in listed or self._skip(d):
                    continue
                self.count += 1
                got = abut.get(d)
                if got is None:
                    self.diffs.append(f"{label} abutment {d}: not computed")
                    continue
                if not got.complete:
                    self.partial.append(f"{label} abutment {d}")
                if got.contributions:
                    self.diffs.append(f"{label} abutment {d}: expected 0, got {_shape_text(got.result)}")
        for c in exp.all("contains"):
            d = int(c.args[0])
            if self._skip(d):
                continue
            self.count += 1
            got = abut.get(d)
            missing = set(c.args[1:]) - set(got.names if got else ())
            if missing:
                self.diffs.append(f"{label} abutment {d}: missing classes {sorted(missing)}")
        for c in exp.all("free"):
            d = int(c.args[0])
            if self._skip(d):
                continue
            self.count += 1
            got = abut.get(d)
            if got is None or got.shape is None or got.shape.torsion or not got.contributions:
                self.diffs.append(f"{label} abutment {d}: expected a nonzero free group")

    def value(self, label: str, want, got) -> None:
        self.count += 1
        if want != got:
            self.diffs.append(f"{label}: expected {want}, got {got}")


def _expected_for(s: Scenario, case: str | None = None) -> list[Node]:
    out = []
    for e in s.blocks("expected"):
        if case is None or (e.args and e.args[0] == case) or (not e.args and case == ""):
            out.append(e)
    return out


# -- Tor scenarios -------------------------------------------------------------


def _coefficients(node: Node, alg, window):
    summands = []
    for q in node.all("quotient"):
        summands.append(CyclicQuotient(alg, list(q.args), window))
    for fam in node.all("family"):
        args = list(fam.args)
        gens, shift, ann = [], 0, []
        i = 0
        while i < len(args):
            if args[i] == "shift":
                shift = int(args[i + 1])
                i += 2
            elif args[i] == "annihilate":
                ann.extend(args[i + 1:])
                break
            else:
                gens.append(args[i])
                i += 1
        summands.append(inverse_monomial_family(alg, gens, shift, window, annihilators=ann))
    if not summands:
        raise ValidationError("coefficients block declares no summand")
    return summands[0] if len(summands) == 1 else DirectSum(summands, window)


def _tor_tables_equal(a: BigradedTable, b: BigradedTable) -> list:
    bad = []
    for key in sorted(set(a.entries) | set(b.entries)):
        x, y = a.lookup(*key), b.lookup(*key)
        if x.shape != y.shape or sorted(x.names) != sorted(y.names):
            bad.append(key)
    return bad


def run_tor(s: Scenario, ck: Checker, window_override=None):
    ring = s.base_ring()
    alg = build_algebra(s.block("algebra"), ring, s.name)
    win = s.block("window")
    declared = win.ints("internal")
    internal = window_override or declared
    fmax = win.ints("filtration")[0]
    mod_window = win.ints("module") or internal
    if window_override and win.has("module"):
        below = declared[0] - mod_window[0]
        mod_window = (internal[0] - below, max(internal[1], mod_window[1]))
    res_node = s.block("resolution")
    relations = [r.args[0] for r in res_node.all("relation")]
    maps = res_node.first("maps")
    auto = res_node.ints("auto")
    if maps is not None:
        res = periodic_resolution(alg, list(maps.args), fmax + 2, relations)
    else:
        res = resolve_cyclic_auto(alg, relations, (0, auto[0]), max_stages=fmax + 2)
    module = _coefficients(s.block("coefficients"), alg, mod_window)
    table = tor_table(res, module, internal, fmax, s.name)
    sections = {"resolution": "; ".join(res.describe()[: fmax + 2])}
    cross = res_node.ints("crosscheck_auto")
    if cross is not None and maps is not None:
        other = resolve_cyclic_auto(alg, relations, (0, cross[0]), max_stages=fmax + 2)
        bad = _tor_tables_equal(table, tor_table(other, module, internal, fmax))
        ck.count += 1
        sections["auto_resolution"] = "agrees" if not bad else f"differs at {bad[:5]}"
        if bad:
            ck.diffs.append(f"automatic resolution gives a different Tor table at {bad[:5]}")
    hints = s.block("hints")
    edge = bool(hints and hints.has("edge_protected"))
    verdict = detect_collapse(table, 2, "n", edge)
    zb = module.zero_below

    def row_bottom(n):
        if zb is None or n >= len(res) or not res.shifts(n):
            return None
        return min(res.shifts(n)) + zb

    abut = {}
    if verdict.kind != "Unknown":
        abut = assemble_abutment(table, verdict, range(internal[0], internal[1] + 1), "n", row_bottom)
    sections.update({"verdict": verdict.format(), "table": table_json(table), "abutment": abutment_json(abut)})
    for exp in _expected_for(s):
        ck.table(exp, table, "E2")
        ck.abutment(exp, abut, "")
        if exp.has("verdict"):
            ck.value("verdict", exp.first("verdict").args[0], verdict.format())
    return sections, {2: table}, None


# -- Tate and spectral sequence scenarios --------------------------------------


def _differentials(s: Scenario, ambient) -> dict:
    out = {}
    for d in s.blocks("differential"):
        r = int(d.args[0])
        gens = []
        for g in d.all("gen"):
            gens.append((g.args[0], g.args[1], set(g.args[2:])))
        rules = {rule.args[0]: rule.args[1] for rule in d.all("d")}
        out[r] = DifferentialSpec(r, ambient, gens, rules)
    return out


def _page_run(s: Scenario, ck: Checker, e2_table=None, window_override=None):
    page_node = s.block("page")
    field_ring = BaseRingSpec.parse(page_node.first("field").args[0]) if page_node.has("field") else s.base_ring()
    ambient = build_algebra(page_node.first("ambient"), field_ring, s.name + " page")
    weight = page_node.ints("weight")
    weight = weight[0] if weight else None
    support = None
    if page_node.has("support"):
        names = ambient.names
        pred = compile_expression(page_node.first("support").args[0], names)
        support = lambda mono: bool(pred(dict(zip(names, mono))))  # noqa: E731
    if e2_table is not None:
        page = page_from_table(e2_table, ambient, weight, support, s.name)
    else:
        win = s.block("window")
        cols = page_node.ints("columns") or win.ints("columns")
        internal = window_override or page_node.ints("internal") or win.ints("internal")
        page = page_from_ambient(ambient, (cols, internal), weight, support, s.name)
    start = page_node.ints("start")
    if start:
        page.r = start[0]
    diffs = _differentials(s, ambient)
    final = page_node.ints("final")[0]
    (nl, nh), (ml, mh) = page.region
    run = run_spectral_sequence(page, diffs, final, range(nl + ml, nh + mh + 1))
    tables = {r: p.table() for r, p in run.pages.items()}
    wanted = {e.ints("page")[0] for e in _expected_for(s) if e.has("page")}
    sections = {
        "verdict": run.verdict.format(),
        # pages with expectations, plus the last one; E2 can be very large
        "pages": {str(r): table_json(tables[r]) for r in sorted(tables) if r == final or r in wanted},
        "abutment": abutment_json(run.abutment),
    }
    for exp in _expected_for(s):
        pg = exp.ints("page")
        if pg is not None:
            r = pg[0]
            if r not in tables:
                ck.diffs.append(f"page {r} was never computed")
                continue
            ck.table(exp, tables[r], f"E{r}")
        ck.abutment(exp, run.abutment, "")
        if exp.has("verdict"):
            ck.value("verdict", exp.first("verdict").args[0], run.verdict.format())
    return sections, tables, run


def run_tate(s: Scenario, ck: Checker, window_override=None):
    if s.block("module") is None and s.block("algebra") is None:
        return _page_run(s, ck, None, window_override)
    ring = s.base_ring()
    win = s.block("window")
    internal = window_override or win.ints("internal")
    cols = win.ints("columns")
    mod_node = s.block("module")
    if mod_node is not None and mod_node.args and mod_node.args[0] == "plain":
        ranks = {int(r.args[0]): int(r.args[1]) for r in mod_node.all("rank")}
        lo, hi = min(ranks), max(ranks)
        module = PlainGradedModule(ring, ranks, (min(lo, internal[0]), max(hi, internal[1])), zero_below=lo)
        support = (lo, hi)
    else:
        alg = build_algebra(s.block("algebra"), ring, s.name)
        module = FreeOnBasis(alg, window=(min(0, internal[0]), internal[1]))
        support = None
    act = s.block("action")
    kind = act.args[0]
    if kind == "sign":
        action = CyclicAction.sign(module)
    elif kind == "trivial":
        action = CyclicAction.trivial(module, int(act.args[1]))
    else:
        raise ValidationError(f"unknown action {kind!r}")
    bad = action.check_order(range(internal[0], internal[1] + 1))
    if bad:
        raise ValidationError(f"the action does not have order {action.order} in degrees {bad[:5]}")
    periodic = win.first("periodic")
    table = tate_cyclic(action, internal, cols, periodic.args[0] if periodic else "zeta", s.name)
    table.m_support = support
    if s.block("page") is not None:
        sections, tables, run = _page_run(s, ck, table, window_override)
        sections = {"tate": table_json(table), **sections}
        for exp in _expected_for(s):
            if exp.has("tate"):
                ck.table(exp, table, "tate")
        return sections, {"tate": table, **tables}, run
    verdict = detect_collapse(table, 2, "m")
    sections = {"verdict": verdict.format(), "tate": table_json(table)}
    nonzero = bool(table.nonzero())
    tate_verdict = "NontrivialTate" if verdict.kind != "Unknown" and nonzero else "Undecided"
    sections["tate_verdict"] = tate_verdict
    for exp in _expected_for(s):
        ck.table(exp, table, "tate")
        if exp.has("verdict"):
            ck.value("verdict", exp.first("verdict").args[0], verdict.format())
        if exp.has("tate_verdict"):
            ck.value("tate verdict", exp.first("tate_verdict").args[0], tate_verdict)
    return sections, {2: table}, None


# -- one-degree scenarios ------------------------------------------------------


def run_discriminant(s: Scenario, ck: Checker, window_override=None):
    sections = {}
    for case in s.blocks("case"):
        name = case.args[0]
        ring = BaseRingSpec.parse(case.first("ring").args[0]) if case.has("ring") else s.base_ring()
        rule = compile_expression(case.first("rule").args[0], ["i", "j", "k"])
        sources = list(case.ints("sources"))
        targets = list(case.ints("targets")) if case.has("targets") else None
        poly = case.ints("poly_degree")[0]
        window = window_override or case.ints("window")
        gram = trace_gram(ring, sources, lambda i, j, k: rule({"i": i, "j": j, "k": k}), window, poly, targets)
        coker = discriminant_cokernel(gram)
        sections[name] = {str(d): c.format() for d, c in sorted(coker.items()) if not c.is_zero}
        for exp in _expected_for(s, name):
            listed = {}
            for c in exp.all("cokernel"):
                listed[int(c.args[0])] = FgAbelianShape.parse(c.args[1])
            for d in range(window[0], window[1] + 1):
                ck.value(f"{name} cokernel in degree {d}", listed.get(d, FgAbelianShape()).format(), coker[d].format())
    return sections, {}, None


def _matrix(text: str):
    if not text.strip():
        return []
    return [[int(x) for x in row.split(",")] for row in text.split(";")]


def run_cone(s: Scenario, ck: Checker, window_override=None):
    sections = {}
    for case in s.blocks("case"):
        name = case.args[0]
        ring = BaseRingSpec.parse(case.first("ring").args[0]) if case.has("ring") else s.base_ring()
        data = {}
        for d in case.all("degree"):
            src, tgt = FgAbelianShape.parse(d.args[1]), FgAbelianShape.parse(d.args[2])
            mat = _matrix(d.args[3]) if len(d.args) > 3 else [[0] * src.generator_count for _ in range(tgt.generator_count)]
            data[int(d.args[0])] = MapDatum(src, tgt, mat)
        hints = {int(h.args[0]): h.args[1] for h in case.all("hint")}
        window = case.ints("window")
        solved = cone_les_solve(ring, data, window, hints)
        sections[name] = {str(d): c.result.format() for d, c in sorted(solved.items())}
        for exp in _expected_for(s, name):
            for c in exp.all("cone"):
                d = int(c.args[0])
                got = solved[d].result
                if c.args[1] == "ambiguous":
                    want = "ambiguous{" + ", ".join(FgAbelianShape.parse(x).format() for x in c.args[2:]) + "}"
                else:
                    want = FgAbelianShape.parse(c.args[1]).format()
                ck.value(f"{name} cone degree {d}", want, got.format())
    return sections, {}, None


def run_norms(s: Scenario, ck: Checker, window_override=None):
    lo, hi = window_override or s.block("range").ints("n")
    reports = {n: norm_image(n) for n in range(lo, hi + 1)}
    sections = {"verdicts": {str(n): r.verdict for n, r in reports.items()},
                "orders": {str(n): [r.gl2_order, r.sl2_order] for n, r in reports.items()},
                "content": {str(n): r.image_gcd_content for n, r in reports.items()}}
    for exp in _expected_for(s):
        for v in exp.all("verdict"):
            n = int(v.args[0])
            if lo <= n <= hi:
                ck.value(f"verdict n={n}", v.args[1], reports[n].verdict)
        for o in exp.all("orders"):
            n = int(o.args[0])
            if lo <= n <= hi:
                ck.value(f"orders n={n}", (int(o.args[1]), int(o.args[2])), (reports[n].gl2_order, reports[n].sl2_order))
        b = exp.ints("brute_force_through")
        if b is not None:
            for n in range(max(2, lo), min(b[0], hi) + 1):
                ck.value(f"brute-force orders n={n}", brute_group_orders(n), (reports[n].gl2_order, reports[n].sl2_order))
    return sections, {}, None


RUNNERS = {
    "TorTHH": run_tor,
    "TateCyclic": run_tate,
    "TateSigma3": lambda s, ck, w=None: _page_run(s, ck, None, w),
    "DiscriminantTrace": run_discriminant,
    "ConeLES": run_cone,
    "NormVerdict": run_norms,
}


def run_scenario(s: Scenario, window_override=None) -> Report:
    """Run one scenario; ``window_override`` replaces its internal window."""
    if window_override is not None:
        window_override = tuple(int(x) for x in window_override)
        if len(window_override) != 2 or window_override[0] > window_override[1]:
            raise ValidationError(f"bad window override {window_override}")
    clip = window_override if s.kind in ("TorTHH", "TateCyclic", "TateSigma3") else None
    ck = Checker(clip)
    t0 = time.perf_counter()
    sections, tables, run = RUNNERS[s.kind](s, ck, window_override)
    seconds = time.perf_counter() - t0
    passed = not ck.diffs and not ck.partial
    rep = Report(s.name, s.kind, passed, ck.diffs, ck.partial, sections, ck.count, seconds)
    rep.run = (tables, run)
    return rep


def bundled_paths() -> list[Path]:
    return sorted(DATA_DIR.glob("*.scn"))


def select_scenarios(tag: str | None = None, paths=None) -> list[Scenario]:
    scenarios = [load_scenario(p) for p in (paths or bundled_paths())]
    if tag:
        scenarios = [s for s in scenarios if tag in s.tags or tag == s.kind]
    return sorted(scenarios, key=lambda s: s.name)


def reproduce_all(tag: str | None = None, paths=None, window_override=None, jobs: int = 1) -> list[Report]:
    """Run the bundled scenarios (or ``paths``), ordered by scenario name.

    With jobs > 1 scenarios run on a thread pool; the order of the returned
    reports does not depend on completion order.
    """
    scenarios = select_scenarios(tag, paths)
    if jobs <= 1:
        return [run_scenario(s, window_override) for s in scenarios]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: run_scenario(s, window_override), scenarios))


def format_suite(reports) -> str:
    width = max((len(r.name) for r in reports), default=8)
    lines = [f"{'scenario':<{width}}  {'kind':<17}  result  checks"]
    for r in reports:
        lines.append(f"{r.name:<{width}}  {r.kind:<17}  {'pass' if r.passed else 'FAIL':<6}  {r.checks}")
    npass = sum(r.passed for r in reports)
    lines.append(f"{npass}/{len(reports)} scenarios pass")
    return "\n".join(lines)
