"""Block-structured run configuration.

Grammar (``#`` starts a comment)::

    file    := block*
    block   := NAME '{' (assign | block)* '}'
    assign  := NAME '=' value
    value   := number | 'inf' | '-inf' | STRING | NAME | list | pair
    list    := '[' (value (',' value)*)? ']'
    pair    := '(' value ',' value ')'
    number  := ['-'] DIGITS ['/' DIGITS | '.' DIGITS]

Numbers are read as exact rationals (decimals included).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import linalg
from .model import INF, ModelData, make_model
from .scalar import EXACT, FLOAT, EcsLabError, ParseError, parse_f
from .symmetry import DeckGroup, IsometryWitness

TASKS = ("verify", "classify", "homogeneity", "holonomy", "functions", "basis-demo")


class ConfigError(EcsLabError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>-?\d+(?:/\d+|\.\d+)?)
  | (?P<str>"[^"\n]*")
  | (?P<name>-?[A-Za-z_][A-Za-z0-9_\-]*)
  | (?P<sym>[{}\[\](),=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ConfigError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, m.start() - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


@dataclass
class Block:
    name: str
    entries: dict = field(default_factory=dict)
    children: list = field(default_factory=list)
    line: int = 0

    def get(self, key, default=None):
        return self.entries.get(key, (default, None))[0]

    def where(self, key):
        return self.entries.get(key, (None, (self.line, 1)))[1]

    def child(self, name: str):
        found = [b for b in self.children if b.name == name]
        return found[0] if found else None


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self, kind=None, text=None) -> Token:
        tok = self.peek()
        if (kind and tok.kind != kind) or (text and tok.text != text):
            want = text or kind
            got = tok.text or "end of file"
            raise ConfigError(f"expected {want!r}, found {got!r}", tok.line, tok.col)
        self.i += 1
        return tok

    def parse(self) -> Block:
        root = Block("<root>")
        while self.peek().kind != "eof":
            root.children.append(self.block())
        return root

    def block(self) -> Block:
        name = self.take("name")
        self.take("sym", "{")
        blk = Block(name.text, line=name.line)
        while not (self.peek().kind == "sym" and self.peek().text == "}"):
            key = self.take("name")
            if self.peek().text == "{":
                self.i -= 1
                blk.children.append(self.block())
                continue
            self.take("sym", "=")
            if key.text in blk.entries:
                raise ConfigError(f"duplicate key {key.text!r}", key.line, key.col)
            blk.entries[key.text] = (self.value(), (key.line, key.col))
        self.take("sym", "}")
        return blk

    def value(self):
        tok = self.peek()
        if tok.kind == "num":
            self.i += 1
            return Fraction(tok.text)
        if tok.kind == "str":
            self.i += 1
            return tok.text[1:-1]
        if tok.kind == "name":
            self.i += 1
            if tok.text == "inf":
                return INF
            if tok.text == "-inf":
                return -INF
            if tok.text in ("true", "false"):
                return tok.text == "true"
            return tok.text
        if tok.text == "[":
            self.i += 1
            items = []
            while self.peek().text != "]":
                items.append(self.value())
                if self.peek().text == ",":
                    self.i += 1
                elif self.peek().text != "]":
                    t = self.peek()
                    raise ConfigError(f"expected ',' or ']', found {t.text or 'end of file'!r}", t.line, t.col)
            self.i += 1
            return items
        if tok.text == "(":
            self.i += 1
            lo = self.value()
            self.take("sym", ",")
            hi = self.value()
            self.take("sym", ")")
            return ("interval", lo, hi)
        raise ConfigError(f"unexpected {tok.text or 'end of file'!r}", tok.line, tok.col)


def parse_config_text(text: str) -> Block:
    return _Parser(text).parse()


# -- typed config ---------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    count: int = 4
    t: tuple | None = None
    s: tuple = (Fraction(-2), Fraction(2))
    x: tuple = (Fraction(-2), Fraction(2))
    denominator: int = 12
    t_values: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    model: ModelData
    deck: DeckGroup | None = None
    tasks: tuple = TASKS
    mode: str = EXACT
    samples: SampleSpec = SampleSpec()
    seed: int = 0
    t0: Fraction | None = None
    witness_q: tuple = (Fraction(2),)
    chi: tuple = ()
    max_word_length: int = 6
    basis_demos: int = 5
    expect: dict = field(default_factory=dict)
    source: str = ""


def _err(block: Block, key: str, message: str):
    line, col = block.where(key)
    return ConfigError(f"{block.name}.{key}: {message}", line, col)


def _matrix(block: Block, key: str) -> list:
    m = block.get(key)
    if not isinstance(m, list) or not all(isinstance(r, list) for r in m):
        raise _err(block, key, "expected a matrix [[...], ...]")
    if any(not isinstance(v, Fraction) for r in m for v in r):
        raise _err(block, key, "matrix entries must be rationals")
    return m


def _interval(block: Block, key: str, default=None):
    v = block.get(key, default)
    if v is None:
        return None
    if not (isinstance(v, tuple) and v[0] == "interval"):
        raise _err(block, key, "expected an interval (lo, hi)")
    return v[1], v[2]


def _rational(block: Block, key: str, default=None):
    v = block.get(key, default)
    if v is None:
        return None
    if not isinstance(v, Fraction):
        raise _err(block, key, "expected a rational number")
    return v


def _build_model(block: Block) -> ModelData:
    n = _rational(block, "n")
    if n is None or n.denominator != 1:
        raise _err(block, "n", "expected an integer n")
    f_text = block.get("f")
    if not isinstance(f_text, str):
        raise _err(block, "f", "expected a quoted expression")
    try:
        f = parse_f(f_text)
    except ParseError as exc:
        line, col = block.where("f")
        raise ConfigError(f"model.f: {exc}", line, col) from None
    interval = _interval(block, "interval", ("interval", Fraction(0), INF))
    return make_model(
        int(n),
        _matrix(block, "gram"),
        _matrix(block, "A"),
        f,
        interval,
        f_text=f_text,
        probe=bool(block.get("probe", False)),
        name=str(block.get("name", "")),
    )


def _build_deck(block: Block, model: ModelData) -> DeckGroup:
    gens = []
    for g in block.children:
        if g.name != "generator":
            raise ConfigError(f"unknown block {g.name!r} in deck", g.line, 1)
        q = _rational(g, "q")
        if q is None or q <= 0:
            raise _err(g, "q", "expected a positive rational q")
        b = g.get("B")
        b = linalg.identity(model.dim_v) if b is None else _matrix(g, "B")
        if linalg.shape(b) != (model.dim_v, model.dim_v):
            raise _err(g, "B", "wrong size")
        gens.append(
            IsometryWitness(q, _rational(g, "p", Fraction(0)), _rational(g, "c", Fraction(0)), linalg.LinearIsometry.of(b))
        )
    return DeckGroup(tuple(gens))


def _t_values(block: Block, model: ModelData) -> tuple:
    vals = block.get("t_values", [])
    if not isinstance(vals, list) or any(not isinstance(v, Fraction) for v in vals):
        raise _err(block, "t_values", "expected a list of rationals")
    if any(not model.contains(v) for v in vals):
        raise _err(block, "t_values", "every t value must lie inside I")
    return tuple(vals)


def build_config(root: Block, source: str = "") -> RunConfig:
    mblock = root.child("model")
    if mblock is None:
        raise ConfigError("missing model block")
    model = _build_model(mblock)
    deck_block = root.child("deck")
    deck = _build_deck(deck_block, model) if deck_block is not None else None
    run = root.child("run") or Block("run")
    tasks = run.get("tasks", list(TASKS))
    if tasks == "all":
        tasks = list(TASKS)
    if not isinstance(tasks, list) or any(t not in TASKS for t in tasks):
        raise _err(run, "tasks", f"tasks must be a list drawn from {', '.join(TASKS)}")
    mode = run.get("mode", EXACT)
    if mode not in (EXACT, FLOAT):
        raise _err(run, "mode", "mode must be exact or float")
    seed = _rational(run, "seed", Fraction(0))
    sblock = root.child("samples") or Block("samples")
    count = _rational(sblock, "count", Fraction(4))
    t_range = _interval(sblock, "t")
    if t_range is not None:
        lo, hi = t_range
        if not (model.lo <= lo < hi <= model.hi):
            raise _err(sblock, "t", f"t range must lie inside I = ({model.lo}, {model.hi})")
    samples = SampleSpec(
        int(count),
        t_range,
        _interval(sblock, "s", ("interval", Fraction(-2), Fraction(2))),
        _interval(sblock, "x", ("interval", Fraction(-2), Fraction(2))),
        int(_rational(sblock, "denominator", Fraction(12))),
        _t_values(sblock, model),
    )
    fblock = root.child("functions") or Block("functions")
    chi = fblock.get("chi", [])
    if isinstance(chi, str):
        chi = [chi]
    for c in chi:
        try:
            parse_f(c)
        except ParseError as exc:
            line, col = fblock.where("chi")
            raise ConfigError(f"functions.chi: {exc}", line, col) from None
    t0 = _rational(fblock, "t0")
    if t0 is None and deck_block is not None:
        t0 = _rational(deck_block, "t0")
    hblock = root.child("homogeneity") or Block("homogeneity")
    qs = hblock.get("q", [Fraction(2)])
    qs = qs if isinstance(qs, list) else [qs]
    expect_block = root.child("expect")
    expect = {k: v for k, (v, _) in expect_block.entries.items()} if expect_block else {}
    return RunConfig(
        model=model,
        deck=deck,
        tasks=tuple(tasks),
        mode=mode,
        samples=samples,
        seed=int(seed),
        t0=t0,
        witness_q=tuple(qs),
        chi=tuple(chi),
        max_word_length=int(_rational(deck_block or Block("deck"), "max_word_length", Fraction(6))),
        basis_demos=int(_rational(run, "basis_demos", Fraction(5))),
        expect=expect,
        source=source,
    )


BUNDLED = ("m1", "m2", "m3", "m3_canonical", "probe_constant", "square")


def bundled_path(name: str):
    return resources.files("ecs_lab") / "data" / f"{name}.cfg"


def load_config(path) -> RunConfig:
    """Read and validate a config file; a bare bundled name such as ``m1`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = bundled_path(str(path)).read_text()
        source = f"bundled:{path}"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        source = p.name
    return build_config(parse_config_text(text), source)
