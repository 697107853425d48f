"""Reading and writing .scn scenario files.

A file is a sequence of statements, one per line.  A statement is a keyword
followed by arguments; arguments are bare tokens or double-quoted strings.
A statement whose last token is ``{`` opens a block that runs until a line
holding a single ``}``.  ``#`` starts a comment outside quotes.  See
docs/scenario_format.md for the grammar.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field

from ..base_arith import BaseRingSpec, FgAbelianShape
from ..graded_core import UnknownGenerator, parse_polynomial

KINDS = ("TorTHH", "TateCyclic", "TateSigma3", "DiscriminantTrace", "ConeLES", "NormVerdict")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    key: str
    args: tuple = ()
    children: tuple | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def is_block(self) -> bool:
        return self.children is not None

    def all(self, key: str) -> list["Node"]:
        return [c for c in self.children or () if c.key == key]

    def first(self, key: str):
        for c in self.children or ():
            if c.key == key:
                return c
        return None

    def has(self, key: str) -> bool:
        return self.first(key) is not None

    def ints(self, key: str, default=None):
        n = self.first(key)
        if n is None:
            return default
        return tuple(_int(a, n) for a in n.args)


def _int(tok: str, node: Node) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ValidationError(f"line {node.line}: expected an integer in '{node.key}', got {tok!r}") from None


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    ring: str
    tags: tuple = ()
    body: tuple = ()

    def blocks(self, key: str) -> list[Node]:
        return [n for n in self.body if n.key == key]

    def block(self, key: str):
        found = self.blocks(key)
        return found[0] if found else None

    def base_ring(self) -> BaseRingSpec:
        return BaseRingSpec.parse(self.ring)


# -- tokenizing ----------------------------------------------------------------


def _tokens(text: str, lineno: int):
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        col = i + 1
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                buf.append(text[j])
                j += 1
            if j >= n:
                raise ParseError("unterminated string", lineno, col)
            out.append(("str", "".join(buf), col))
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t#\"":
            j += 1
        out.append(("bare", text[i:j], col))
        i = j
    return out


def parse_nodes(text: str) -> list[Node]:
    stack: list[tuple[str, tuple, int, int, list]] = []
    top: list[Node] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw, lineno)
        if not toks:
            continue
        kind, val, col = toks[0]
        if kind == "bare" and val == "}":
            if len(toks) > 1:
                raise ParseError("unexpected text after '}'", lineno, toks[1][2])
            if not stack:
                raise ParseError("'}' without an open block", lineno, col)
            key, args, l0, c0, kids = stack.pop()
            node = Node(key, args, tuple(kids), l0, c0)
            (stack[-1][4] if stack else top).append(node)
            continue
        if kind != "bare":
            raise ParseError("a statement must start with a keyword", lineno, col)
        opens = toks[-1][0] == "bare" and toks[-1][1] == "{"
        body = toks[1:-1] if opens else toks[1:]
        for k, v, c in body:
            if k == "bare" and v in ("{", "}"):
                raise ParseError(f"unexpected '{v}'", lineno, c)
        args = tuple(v for _, v, _ in body)
        if opens:
            stack.append((val, args, lineno, col, []))
        else:
            (stack[-1][4] if stack else top).append(Node(val, args, None, lineno, col))
    if stack:
        key, _, l0, c0, _ = stack[-1]
        raise ParseError(f"block '{key}' is never closed", l0, c0)
    return top


# -- printing ------------------------------------------------------------------


def _quote(tok: str) -> str:
    if tok and all(ch not in tok for ch in ' \t#"{}') :
        return tok
    return '"' + tok.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _print_node(node: Node, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    head = " ".join([node.key] + [_quote(a) for a in node.args])
    if node.is_block:
        out.append(f"{pad}{head} {{")
        for c in node.children:
            _print_node(c, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        out.append(pad + head)


def print_scenario(s: Scenario) -> str:
    out = [f"scenario {_quote(s.name)}", f"kind {s.kind}", f"ring {_quote(s.ring)}"]
    if s.tags:
        out.append("tags " + " ".join(_quote(t) for t in s.tags))
    for node in s.body:
        out.append("")
        _print_node(node, 0, out)
    return "\n".join(out) + "\n"


# -- safe expressions ----------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.FloorDiv: operator.floordiv, ast.Mod: operator.mod, ast.Pow: operator.pow,
}
_CMPS = {
    ast.Eq: operator.eq, ast.NotEq: operator.ne, ast.Lt: operator.lt,
    ast.LtE: operator.le, ast.Gt: operator.gt, ast.GtE: operator.ge,
}


def compile_expression(text: str, names):
    """Integer/boolean expression over ``names`` as a callable taking a dict.

    Allowed: integers, the given names, + - * // % **, comparisons, and/or/not,
    and ``a if cond else b``.
    """
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as e:
        raise ValidationError(f"cannot parse expression {text!r}: {e.msg}") from None
    allowed = set(names)

    def check(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return
        if isinstance(node, ast.Name):
            if node.id not in allowed:
                raise ValidationError(f"expression {text!r} uses undeclared name {node.id!r}")
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd, ast.Not)):
            check(node.operand)
            return
        if isinstance(node, ast.BoolOp):
            for v in node.values:
                check(v)
            return
        if isinstance(node, ast.Compare) and all(type(o) in _CMPS for o in node.ops):
            check(node.left)
            for c in node.comparators:
                check(c)
            return
        if isinstance(node, ast.IfExp):
            check(node.test)
            check(node.body)
            check(node.orelse)
            return
        raise ValidationError(f"expression {text!r} uses unsupported syntax")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, env)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.Not):
                return not v
            return v
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                return all(ev(v, env) for v in node.values)
            return any(ev(v, env) for v in node.values)
        if isinstance(node, ast.Compare):
            left = ev(node.left, env)
            for op, c in zip(node.ops, node.comparators):
                right = ev(c, env)
                if not _CMPS[type(op)](left, right):
                    return False
                left = right
            return True
        return ev(node.body, env) if ev(node.test, env) else ev(node.orelse, env)

    return lambda env: ev(tree, env)


# -- validation ----------------------------------------------------------------


def _need(cond, msg):
    if not cond:
        raise ValidationError(msg)


def _gen_names(block: Node | None) -> list[str]:
    if block is None:
        return []
    return [g.args[0] for g in block.all("gen") if g.args]


def _check_polys(node: Node, key: str, names: list[str], where: str, extra=()) -> None:
    for stmt in node.all(key):
        texts = []
        for text in stmt.args:
            if key == "rule":
                texts.extend(text.split("->" if "->" in text else "=", 1))
            else:
                texts.append(text)
        for text in texts:
            try:
                parse_polynomial(text, list(names) + list(extra))
            except UnknownGenerator as e:
                raise ValidationError(f"{where}: {key} refers to undeclared generator {e.args[0]}") from None
            except ValueError as e:
                raise ValidationError(f"{where}: cannot read {text!r}: {e}") from None


def _check_range(node: Node | None, key: str, where: str):
    if node is None or not node.has(key):
        return None
    vals = node.ints(key)
    _need(len(vals) == 2, f"{where}: '{key}' takes two bounds")
    _need(vals[0] <= vals[1], f"{where}: window '{key}' is empty")
    return vals


def _check_differentials(s: Scenario, ambient_names: list[str]) -> None:
    for d in s.blocks("differential"):
        _need(len(d.args) == 1, f"differential block at line {d.line} needs a page number")
        r = _int(d.args[0], d)
        _need(r >= 2, f"differential page {r} must be at least 2")
        pg = [g.args[0] for g in d.all("gen")]
        for g in d.all("gen"):
            _need(len(g.args) >= 2, f"line {g.line}: page generator needs a name and a monomial")
            _check_polys(Node("x", children=(Node("m", (g.args[1],)),)), "m", ambient_names, f"page {r}")
        for rule in d.all("d"):
            _need(len(rule.args) == 2, f"line {rule.line}: 'd' takes a generator and a target")
            _need(rule.args[0] in pg, f"page {r}: differential on undeclared generator {rule.args[0]}")
            shadow = [n for n in pg if n not in ambient_names]
            try:
                parse_polynomial(rule.args[1], ambient_names + shadow)
            except UnknownGenerator as e:
                raise ValidationError(f"page {r}: target refers to undeclared generator {e.args[0]}") from None


def _check_expected(s: Scenario, region) -> None:
    for e in s.blocks("expected"):
        _need(e.has("cite") and e.first("cite").args, f"expected block at line {e.line} has no citation")
        reg = e.ints("region")
        if reg is not None:
            _need(len(reg) == 4, f"line {e.line}: region takes four bounds")
            _need(reg[0] <= reg[1] and reg[2] <= reg[3], f"line {e.line}: expected region is empty")
            if region is not None:
                (nl, nh), (ml, mh) = region
                _need(nl <= reg[0] and reg[1] <= nh and ml <= reg[2] and reg[3] <= mh,
                      f"expected region {reg} lies outside the window")
        for ent in e.all("entry"):
            _need(len(ent.args) >= 3, f"line {ent.line}: entry needs n, m and a shape")
            n, m = _int(ent.args[0], ent), _int(ent.args[1], ent)
            try:
                FgAbelianShape.parse(ent.args[2])
            except ValueError as err:
                raise ValidationError(f"line {ent.line}: {err}") from None
            if reg is not None:
                _need(reg[0] <= n <= reg[1] and reg[2] <= m <= reg[3],
                      f"line {ent.line}: entry ({n}, {m}) lies outside the expected region")


def validate(s: Scenario) -> Scenario:
    _need(s.kind in KINDS, f"unknown scenario kind {s.kind!r}")
    try:
        ring = BaseRingSpec.parse(s.ring)
    except ValueError as e:
        raise ValidationError(str(e)) from None
    alg = s.block("algebra")
    names = _gen_names(alg)
    if alg is not None:
        for g in alg.all("gen"):
            _need(len(g.args) >= 2, f"line {g.line}: gen needs a name and a degree")
            _int(g.args[1], g)
        _check_polys(alg, "rule", names, "algebra")
    window = s.block("window")
    region = None
    if s.kind in ("TorTHH", "TateCyclic", "TateSigma3"):
        _need(window is not None, "scenario needs a window block")
    if window is not None:
        internal = _check_range(window, "internal", "window")
        cols = _check_range(window, "columns", "window")
        _check_range(window, "module", "window")
        if s.kind == "TorTHH":
            f = window.ints("filtration")
            _need(f is not None and len(f) == 1 and f[0] >= 0, "window needs a filtration bound")
            region = ((0, f[0]), internal)
        elif cols is not None and internal is not None:
            region = (cols, internal)
    if s.kind == "TorTHH":
        _need(alg is not None, "TorTHH needs an algebra")
        res = s.block("resolution")
        _need(res is not None, "TorTHH needs a resolution block")
        _check_polys(res, "relation", names, "resolution")
        _check_polys(res, "maps", names, "resolution")
        coeff = s.block("coefficients")
        _need(coeff is not None, "TorTHH needs a coefficients block")
        _check_polys(coeff, "quotient", names, "coefficients")
        for fam in coeff.all("family"):
            for tok in fam.args:
                if not tok.lstrip("-").isdigit() and tok not in ("shift", "annihilate", "window"):
                    _need(tok in names, f"coefficients: family refers to undeclared generator {tok}")
    page = s.block("page")
    if page is not None:
        amb = page.first("ambient")
        _need(amb is not None, "page block needs an ambient algebra")
        amb_names = _gen_names(amb)
        if page.has("support"):
            compile_expression(page.first("support").args[0], amb_names)
        prange = _check_range(page, "columns", "page")
        irange = _check_range(page, "internal", "page")
        if prange and irange:
            region = (prange, irange)
        _check_differentials(s, amb_names)
    if s.kind == "TateCyclic" and page is None:
        _need(s.block("module") is not None or alg is not None, "TateCyclic needs a module or an algebra")
    if s.kind == "DiscriminantTrace":
        for c in s.blocks("case"):
            _need(c.has("rule"), f"case at line {c.line} needs a trace rule")
            compile_expression(c.first("rule").args[0], ["i", "j", "k"])
            _need(c.has("sources"), f"case at line {c.line} needs source shifts")
    if s.kind == "ConeLES":
        for c in s.blocks("case"):
            for d in c.all("degree"):
                _need(len(d.args) >= 3, f"line {d.line}: degree needs d, source and target shapes")
                for tok in d.args[1:3]:
                    try:
                        FgAbelianShape.parse(tok)
                    except ValueError as err:
                        raise ValidationError(f"line {d.line}: {err}") from None
    if s.kind == "NormVerdict":
        r = s.block("range")
        _need(r is not None and r.ints("n") and len(r.ints("n")) == 2, "NormVerdict needs 'range { n A B }'")
        lo, hi = r.ints("n")
        _need(2 <= lo <= hi, "norm range must satisfy 2 <= A <= B")
    _check_expected(s, region if page is None or s.kind != "TorTHH" else region)
    return s


def parse_scenario(text: str) -> Scenario:
    nodes = parse_nodes(text)
    if not nodes:
        raise ParseError("empty scenario file", 1, 1)
    head: dict = {}
    body = []
    for n in nodes:
        if n.key in ("scenario", "kind", "ring", "tags") and not n.is_block:
            if n.key in head:
                raise ParseError(f"duplicate '{n.key}'", n.line, n.column)
            if n.key != "tags" and len(n.args) != 1:
                raise ParseError(f"'{n.key}' takes one value", n.line, n.column)
            head[n.key] = n.args
        else:
            body.append(n)
    for key in ("scenario", "kind", "ring"):
        if key not in head:
            raise ParseError(f"missing '{key}' line", 1, 1)
    s = Scenario(head["scenario"][0], head["kind"][0], head["ring"][0], tuple(head.get("tags", ())), tuple(body))
    return validate(s)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
