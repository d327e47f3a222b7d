"""Surface syntax: trace formulas, `.msr` protocol files and `.acc` specs.

Formulas follow Tamarin conventions. `'A'` is a public name, `$x` a pub
variable, `~x` a fresh variable, `#i` a temporal variable and a bare
identifier a message variable. A bare identifier used after `@` or in a
`<` comparison is temporal everywhere in the same formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from .errors import AccLabError, ParseError
from .formulas import (
    And, At, Eq, Exists, Falsum, Forall, Formula, Iff, Implies, Less, Not, Or, TEq, Verum,
)
from .terms import App, Fact, Name, PAIR, Sort, Term, Var, pair

_COMMON = r"""
?term: NAME                              -> var_msg
     | "$" NAME                          -> var_pub
     | "~" NAME                          -> var_fresh
     | "#" NAME                          -> var_temp
     | QUOTED                            -> pubname
     | NAME "(" [termlist] ")"           -> app
     | "<" termlist ">"                  -> tuple
termlist: term ("," term)*
fact: NAME "(" [termlist] ")"

NAME: /[A-Za-z_][A-Za-z0-9_]*/
QUOTED: /'[^'\n]*'/
INT: /[0-9]+/
STRING: /"[^"]*"/
COMMENT: /\/\/[^\n]*/ | /\/\*(.|\n)*?\*\//
%import common.WS
%ignore WS
%ignore COMMENT
"""

_FORMULA_GRAMMAR = r"""
start: formula
?formula: imp
        | imp "<=>" imp                  -> iff
?imp: disj
    | disj "==>" imp                     -> implies
?disj: conj
     | conj ("|" conj)+                  -> or_
?conj: unary
     | unary ("&" unary)+                -> and_
?unary: "not" "(" formula ")"            -> not_
      | "¬" unary                        -> not_
      | "Ex" qvars "." formula           -> exists
      | "All" qvars "." formula          -> forall
      | "(" formula ")"
      | atom
qvars: qvar (","? qvar)*
?qvar: NAME                              -> var_msg
     | "$" NAME                          -> var_pub
     | "~" NAME                          -> var_fresh
     | "#" NAME                          -> var_temp
?atom: fact "@" tpoint                   -> action
     | term "=" term                     -> eq
     | term "<" term                     -> less
     | NAME                              -> bare
     | "⊥"                               -> falsum
     | "⊤"                               -> verum
?tpoint: NAME                            -> var_msg
       | "#" NAME                        -> var_temp
""" + _COMMON

_MSR_GRAMMAR = r"""
start: item*
?item: functions | equations | parties | rule | restriction
functions: "functions" ":" fundecl ("," fundecl)*
fundecl: NAME "/" INT [PRIVATE]
PRIVATE: "[private]"
equations: "equations" ":" equation ("," equation)*
equation: term "=" term
parties: "parties" ":" INT               -> parties_count
       | "parties" ":" QUOTED ("," QUOTED)* -> parties_named
rule: "rule" NAME ":" [freshdecl] "[" [factlist] "]" arrow "[" [factlist] "]"
freshdecl: "fresh" "~" NAME ("," "~" NAME)*
arrow: "-->"                             -> plain_arrow
     | "--[" [factlist] "]->"            -> action_arrow
factlist: fact ("," fact)*
restriction: "restriction" NAME ":" STRING
""" + _COMMON

_ACC_GRAMMAR = r"""
start: item*
?item: test | lemma
test: "test" NAME ":" STRING
lemma: "lemma" NAME ":" NAME ("," NAME)* ACCOUNT "for" STRING
ACCOUNT: "accounts" | "account"
""" + _COMMON

_parsers: dict[str, Lark] = {}


def _parser(kind: str) -> Lark:
    p = _parsers.get(kind)
    if p is None:
        grammar = {"formula": _FORMULA_GRAMMAR, "msr": _MSR_GRAMMAR, "acc": _ACC_GRAMMAR}[kind]
        p = Lark(grammar, parser="lalr", propagate_positions=True, maybe_placeholders=True)
        _parsers[kind] = p
    return p


def _syntax_error(e: UnexpectedInput, source: str | None, line0: int = 1, col0: int = 1) -> ParseError:
    line = getattr(e, "line", 0) or 0
    col = getattr(e, "column", 0) or 0
    if isinstance(e, UnexpectedToken):
        what = f"unexpected {e.token!r}" if e.token.type != "$END" else "unexpected end of input"
    elif isinstance(e, UnexpectedCharacters):
        what = f"unexpected character {e.char!r}"
    elif isinstance(e, UnexpectedEOF):
        what = "unexpected end of input"
    else:
        what = "syntax error"
    if line <= 0:
        return ParseError(what, line0, col0, source)
    if line == 1:
        col += col0 - 1
    return ParseError(what, line0 + line - 1, col, source)


# ---------------------------------------------------------------- terms

class _TermBuilder(Transformer):
    """Shared term construction; variables keep a provisional sort."""

    def __init__(self, constants: frozenset = frozenset()):
        super().__init__()
        self.constants = constants

    def var_msg(self, items):
        (tok,) = items
        if str(tok) in self.constants:
            return App(str(tok), ())
        return _PosVar(Var(str(tok), Sort.MSG), tok.line, tok.column)

    def var_pub(self, items):
        return _PosVar(Var(str(items[0]), Sort.PUB), items[0].line, items[0].column)

    def var_fresh(self, items):
        return _PosVar(Var(str(items[0]), Sort.FRESH), items[0].line, items[0].column)

    def var_temp(self, items):
        return _PosVar(Var(str(items[0]), Sort.TEMP), items[0].line, items[0].column)

    def pubname(self, items):
        return Name(str(items[0])[1:-1], Sort.PUB)

    def termlist(self, items):
        return [_strip(t) for t in items]

    def app(self, items):
        name, args = items
        args = tuple(args or ())
        if name == PAIR and len(args) != 2:
            raise ParseError(f"pair expects 2 arguments, got {len(args)}", name.line, name.column)
        return App(str(name), args)

    def tuple(self, items):
        (args,) = items
        if len(args) < 2:
            return args[0]
        return pair(*args)

    def fact(self, items):
        name, args = items
        return Fact(str(name), tuple(args or ()))


@dataclass(frozen=True)
class _PosVar:
    """A variable occurrence with its source position (removed after resolution)."""

    var: Var
    line: int
    column: int


def _strip(t):
    if isinstance(t, _PosVar):
        return t.var
    return t


# ---------------------------------------------------------------- formulas

class _FormulaBuilder(_TermBuilder):
    def start(self, items):
        return items[0]

    def qvars(self, items):
        return tuple(_strip(v) for v in items)

    def exists(self, items):
        return Exists(items[0], items[1])

    def forall(self, items):
        return Forall(items[0], items[1])

    def not_(self, items):
        return Not(items[0])

    def and_(self, items):
        return And(tuple(items))

    def or_(self, items):
        return Or(tuple(items))

    def implies(self, items):
        return Implies(items[0], items[1])

    def iff(self, items):
        return Iff(items[0], items[1])

    def action(self, items):
        f, tp = items
        v = _strip(tp)
        return At(f, Var(v.name, Sort.TEMP))

    def eq(self, items):
        return Eq(_strip(items[0]), _strip(items[1]))

    def less(self, items):
        return Less(_strip(items[0]), _strip(items[1]))

    def bare(self, items):
        (tok,) = items
        if tok == "F":
            return Falsum()
        if tok == "T":
            return Verum()
        raise ParseError(f"expected a formula, found identifier {tok}", tok.line, tok.column)

    def falsum(self, items):
        return Falsum()

    def verum(self, items):
        return Verum()


def _temporal_names(phi: Formula, out: set[str]) -> None:
    if isinstance(phi, At):
        out.add(phi.tp.name)
    elif isinstance(phi, Less):
        for side in (phi.left, phi.right):
            if isinstance(side, Var):
                out.add(side.name)
    elif isinstance(phi, Eq):
        for side in (phi.left, phi.right):
            if isinstance(side, Var) and side.sort is Sort.TEMP:
                out.add(side.name)
    elif isinstance(phi, Not):
        _temporal_names(phi.body, out)
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            _temporal_names(a, out)
    elif isinstance(phi, (Implies, Iff)):
        _temporal_names(phi.left, out)
        _temporal_names(phi.right, out)
    elif isinstance(phi, (Exists, Forall)):
        for v in phi.vars:
            if v.sort is Sort.TEMP:
                out.add(v.name)
        _temporal_names(phi.body, out)


def _fix_var(v: Var, temporal: set[str]) -> Var:
    if v.sort is Sort.MSG and v.name in temporal:
        return Var(v.name, Sort.TEMP)
    return v


def _fix_term(t: Term, temporal: set[str], where: str) -> Term:
    if isinstance(t, Var):
        if t.sort is Sort.TEMP or (t.sort is Sort.MSG and t.name in temporal):
            raise ParseError(f"temporal variable #{t.name} used as a message in {where}")
        return t
    if isinstance(t, App):
        return App(t.fun, tuple(_fix_term(a, temporal, where) for a in t.args))
    return t


def _resolve(phi: Formula, temporal: set[str]) -> Formula:
    if isinstance(phi, (Falsum, Verum)):
        return phi
    if isinstance(phi, At):
        f = Fact(phi.fact.symbol, tuple(_fix_term(a, temporal, str(phi.fact.symbol)) for a in phi.fact.args))
        return At(f, phi.tp)
    if isinstance(phi, Less):
        l, r = phi.left, phi.right
        if not (isinstance(l, Var) and isinstance(r, Var)):
            raise ParseError("'<' compares temporal variables only")
        return Less(Var(l.name, Sort.TEMP), Var(r.name, Sort.TEMP))
    if isinstance(phi, Eq):
        l, r = phi.left, phi.right
        lt = isinstance(l, Var) and (l.sort is Sort.TEMP or (l.sort is Sort.MSG and l.name in temporal))
        rt = isinstance(r, Var) and (r.sort is Sort.TEMP or (r.sort is Sort.MSG and r.name in temporal))
        if lt and rt:
            return TEq(Var(l.name, Sort.TEMP), Var(r.name, Sort.TEMP))
        if lt or rt:
            raise ParseError("cannot equate a temporal variable with a message")
        return Eq(_fix_term(l, temporal, "an equation"), _fix_term(r, temporal, "an equation"))
    if isinstance(phi, Not):
        return Not(_resolve(phi.body, temporal))
    if isinstance(phi, And):
        return And(tuple(_resolve(a, temporal) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(_resolve(a, temporal) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(_resolve(phi.left, temporal), _resolve(phi.right, temporal))
    if isinstance(phi, Iff):
        return Iff(_resolve(phi.left, temporal), _resolve(phi.right, temporal))
    qvars = tuple(_fix_var(v, temporal) for v in phi.vars)
    return type(phi)(qvars, _resolve(phi.body, temporal))


def parse_formula(text: str, constants: frozenset | set = frozenset(), source: str | None = None,
                  line: int = 1, column: int = 1) -> Formula:
    """Parse a trace formula. `line`/`column` offset positions for embedded text."""
    try:
        tree = _parser("formula").parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(e, source, line, column) from None
    try:
        raw = _FormulaBuilder(frozenset(constants)).transform(tree)
        temporal: set[str] = set()
        _temporal_names(raw, temporal)
        return _resolve(raw, temporal)
    except VisitError as e:
        raise _reposition(e.orig_exc, source, line, column) from None
    except ParseError as e:
        raise _reposition(e, source, line, column) from None


def _reposition(exc: Exception, source: str | None, line0: int, col0: int) -> Exception:
    if not isinstance(exc, ParseError):
        return ParseError(str(exc), line0, col0, source)
    if exc.line <= 0:
        return ParseError(exc.message, line0, col0, source)
    col = exc.column + (col0 - 1 if exc.line == 1 else 0)
    return ParseError(exc.message, line0 + exc.line - 1, col, source)


def parse_term(text: str, constants: frozenset | set = frozenset()) -> Term:
    """Parse a single term by wrapping it in an equation."""
    phi = parse_formula(f"{text} = {text}", constants)
    if not isinstance(phi, Eq):
        raise ParseError(f"not a term: {text}")
    return phi.left


def _string_body(tok: Token) -> tuple[str, int, int]:
    """Contents of a STRING token plus the position of its first character."""
    return str(tok)[1:-1], tok.line, tok.column + 1


# ---------------------------------------------------------------- .msr protocols

class _MsrBuilder(_TermBuilder):
    def start(self, items):
        return items

    def functions(self, items):
        return ("functions", items)

    def fundecl(self, items):
        name, arity, private = items
        return (str(name), int(arity), private is not None, name.line, name.column)

    def equations(self, items):
        return ("equations", items)

    def equation(self, items):
        return (_strip(items[0]), _strip(items[1]))

    def parties_count(self, items):
        return ("parties", int(items[0]))

    def parties_named(self, items):
        return ("parties", [str(t)[1:-1] for t in items])

    def freshdecl(self, items):
        return [Var(str(t), Sort.FRESH) for t in items]

    def factlist(self, items):
        return list(items)

    def plain_arrow(self, items):
        return []

    def action_arrow(self, items):
        return items[0] or []

    def rule(self, items):
        name, fresh_vars, prem, acts, concl = items
        return ("rule", str(name), fresh_vars or [], prem or [], acts, concl or [], name.line, name.column)

    def restriction(self, items):
        name, text = items
        return ("restriction", str(name), text)


def parse_protocol(text: str, source: str | None = None):
    """Parse an `.msr` protocol description into a ProtocolSpec."""
    from .protocol import ProtocolSpec, Rule
    from .terms import FunctionSymbol, RewriteTheory, Signature

    try:
        tree = _parser("msr").parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(e, source) from None

    # constants must be known before terms are built, so collect them first
    constants = set()
    for node in tree.find_data("fundecl"):
        name, arity = node.children[0], node.children[1]
        if int(arity) == 0:
            constants.add(str(name))
    try:
        items = _MsrBuilder(frozenset(constants)).transform(tree)
    except VisitError as e:
        raise _reposition(e.orig_exc, source, 1, 1) from None

    symbols: list[FunctionSymbol] = []
    equations: list[tuple[Term, Term]] = []
    parties = None
    rules: list[Rule] = []
    restrictions: list[tuple[str, Formula]] = []
    for item in items:
        kind = item[0]
        if kind == "functions":
            for name, arity, private, ln, col in item[1]:
                symbols.append(FunctionSymbol(name, arity, private))
        elif kind == "equations":
            equations.extend(item[1])
        elif kind == "parties":
            parties = item[1]
        elif kind == "rule":
            _, name, fresh_vars, prem, acts, concl, ln, col = item
            try:
                rules.append(Rule.build(name, prem, acts, concl, fresh_vars))
            except AccLabError as e:
                raise ParseError(f"rule {name}: {e}", ln, col, source) from None
        else:
            _, name, tok = item
            body, ln, col = _string_body(tok)
            restrictions.append((name, parse_formula(body, constants, source, ln, col)))
    try:
        sig = Signature(symbols)
        theory = RewriteTheory(equations)
        return ProtocolSpec(sig, theory, tuple(rules), parties, tuple(restrictions))
    except ParseError:
        raise
    except AccLabError as e:
        raise ParseError(str(e), 1, 1, source) from None


# ---------------------------------------------------------------- .acc specs

@dataclass(frozen=True)
class TestDecl:
    name: str
    formula: Formula
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LemmaDecl:
    name: str
    tests: tuple
    prop: Formula
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AccountabilitySpec:
    tests: tuple       # of TestDecl, in declaration order
    lemmas: tuple      # of LemmaDecl

    def test(self, name: str) -> TestDecl:
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)


class _AccBuilder(Transformer):
    def start(self, items):
        return items

    def test(self, items):
        return ("test", items[0], items[1])

    def lemma(self, items):
        name, *rest = items
        *tests, _kw, text = rest
        return ("lemma", name, tests, text)


def parse_spec(text: str, constants: frozenset | set = frozenset(), source: str | None = None) -> AccountabilitySpec:
    """Parse `test` and `lemma` declarations."""
    try:
        tree = _parser("acc").parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(e, source) from None
    items = _AccBuilder().transform(tree)
    tests: list[TestDecl] = []
    lemmas: list[LemmaDecl] = []
    seen_tests: set[str] = set()
    seen_lemmas: set[str] = set()
    for item in items:
        if item[0] == "test":
            _, name, tok = item
            if str(name) in seen_tests:
                raise ParseError(f"duplicate test name {name}", name.line, name.column, source)
            body, ln, col = _string_body(tok)
            phi = parse_formula(body, constants, source, ln, col)
            tests.append(TestDecl(str(name), phi, name.line, name.column))
            seen_tests.add(str(name))
        else:
            _, name, refs, tok = item
            if str(name) in seen_lemmas:
                raise ParseError(f"duplicate lemma name {name}", name.line, name.column, source)
            for r in refs:
                if str(r) not in seen_tests:
                    raise ParseError(f"unknown test {r}", r.line, r.column, source)
            body, ln, col = _string_body(tok)
            phi = parse_formula(body, constants, source, ln, col)
            lemmas.append(LemmaDecl(str(name), tuple(str(r) for r in refs), phi, name.line, name.column))
            seen_lemmas.add(str(name))
    return AccountabilitySpec(tuple(tests), tuple(lemmas))


def print_spec(spec: AccountabilitySpec) -> str:
    out = []
    for t in spec.tests:
        out.append(f"test {t.name}:\n  \"{t.formula}\"\n")
    for lem in spec.lemmas:
        out.append(f"lemma {lem.name}:\n  {', '.join(lem.tests)} accounts for\n  \"{lem.prop}\"\n")
    return "\n".join(out)
