"""Concrete syntax: lexer, recursive-descent parser and pretty-printer.

The surface grammar:

    model      := "statechart" ID "{" eventdecl vardecl* statebody "}"
    eventdecl  := "events" ID ("," ID)* ";"
    statebody  := ["entry" block] ["exit" block] state*
                  ["init" ID ("," ID)* ";"] transition*
    state      := "state" ID [":" "shell"] "{" vardecl* statebody "}"
    vardecl    := ("static" | "local" | "param") ID ":" ("int" | "bool")
                  "=" expr ";"
    transition := "transition" ID ":" qualifiedID "->" qualifiedID
                  "on" ID ["[" expr "]"] ["/" block] ";"
    block      := "{" stmt* "}"
    stmt       := ID ":=" expr ";"
                | "if" "(" expr ")" block ["else" block]
                | "while" "(" expr ")" block
                | "skip" ";"

Expressions use the usual precedence: or < and < not < comparison <
additive < multiplicative < unary minus. Comparison operators do not
associate. `//` starts a line comment. Identifiers are Unicode words.

State types are inferred: an explicit `: shell` annotation wins, a state
with child states is composite, one without is atomic, and the outermost
`statechart` is its own type. A shell's initial set is implicitly all of
its children; an explicit `init` inside a shell must list exactly them.

`pretty_print` emits a canonical layout; parsing its output yields a
structurally equal model, and printing again is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, ParseError
from .model import (
    ARITH_OPS,
    BOOL_OPS,
    CMP_OPS,
    EMPTY_BLOCK,
    INT_MAX,
    TRUE,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    Expr,
    If,
    IntLit,
    Model,
    Skip,
    Span,
    State,
    StateType,
    Stmt,
    Storage,
    Transition,
    Unary,
    Var,
    VarDecl,
    While,
)

KEYWORDS = frozenset(
    {
        "statechart", "events", "state", "shell", "entry", "exit", "init",
        "transition", "on", "static", "local", "param", "int", "bool",
        "true", "false", "if", "else", "while", "skip", "and", "or", "not",
    }
)

_PUNCT2 = (":=", "->", "==", "!=", "<=", ">=")
_PUNCT1 = "{}()[];,:.<>+-*/="


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "punct" | "eof"
    value: str
    line: int
    col: int


class _Abort(Exception):
    """Internal: unwinds the parser after the first error diagnostic."""


class _Lexer:
    def __init__(self, text: str, file: str):
        self.text = text
        self.file = file

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        text = self.text
        i, line, col = 0, 1, 1
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == "\n":
                i, line, col = i + 1, line + 1, 1
                continue
            if ch in " \t\r":
                i, col = i + 1, col + 1
                continue
            if text.startswith("//", i):
                while i < n and text[i] != "\n":
                    i += 1
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                out.append(Token("ident", text[i:j], line, col))
                col += j - i
                i = j
                continue
            if ch.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                out.append(Token("int", text[i:j], line, col))
                col += j - i
                i = j
                continue
            two = text[i : i + 2]
            if two in _PUNCT2:
                out.append(Token("punct", two, line, col))
                i, col = i + 2, col + 2
                continue
            if ch in _PUNCT1:
                out.append(Token("punct", ch, line, col))
                i, col = i + 1, col + 1
                continue
            raise ParseError(
                [Diagnostic("error", self.file, line, col, "P001", f"unexpected character {ch!r}")]
            )
        out.append(Token("eof", "", line, col))
        return out


@dataclass
class _RawState:
    """A state body before type inference and reference resolution."""

    name: str
    parent: str | None
    shell: bool
    vars: tuple[VarDecl, ...]
    entry: Block
    exit: Block
    init: tuple[tuple[str, Span], ...] | None
    children: list[str]
    span: Span


@dataclass
class _RawTransition:
    name: str
    parent: str
    source: tuple[tuple[str, Span], ...]  # qualified path segments
    dest: tuple[tuple[str, Span], ...]
    event: str
    event_span: Span
    guard: Expr
    action: Block
    span: Span


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self.diags: list[Diagnostic] = []
        self.raw_states: dict[str, _RawState] = {}
        self.raw_transitions: dict[str, _RawTransition] = {}

    # -- token plumbing -----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, tok: Token, message: str, code: str = "P001") -> _Abort:
        self.diags.append(Diagnostic("error", self.file, tok.line, tok.col, code, message))
        return _Abort()

    def expect_punct(self, value: str) -> Token:
        t = self.peek()
        if t.kind == "punct" and t.value == value:
            return self.next()
        raise self.error(t, f"expected {value!r}, found {self._describe(t)}")

    def expect_keyword(self, word: str) -> Token:
        t = self.peek()
        if t.kind == "ident" and t.value == word:
            return self.next()
        raise self.error(t, f"expected {word!r}, found {self._describe(t)}")

    def at_keyword(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.value == word

    def expect_name(self, what: str) -> Token:
        t = self.peek()
        if t.kind == "ident" and t.value not in KEYWORDS:
            return self.next()
        raise self.error(t, f"expected {what} name, found {self._describe(t)}")

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.value)

    @staticmethod
    def _span(t: Token) -> Span:
        return Span(t.line, t.col, t.line, t.col + max(len(t.value), 1))

    # -- model --------------------------------------------------------------

    def parse_model(self) -> Model:
        self.expect_keyword("statechart")
        name_tok = self.expect_name("statechart")
        self.expect_punct("{")
        events = self.parse_eventdecl()
        root = self._parse_state_body(name_tok.value, parent=None, shell=False, span=self._span(name_tok))
        self.expect_punct("}")
        t = self.peek()
        if t.kind != "eof":
            raise self.error(t, f"expected end of input, found {self._describe(t)}")
        return self._resolve(name_tok.value, events)

    def parse_eventdecl(self) -> tuple[str, ...]:
        self.expect_keyword("events")
        names: list[str] = []
        while True:
            tok = self.expect_name("event")
            if tok.value in names:
                raise self.error(tok, f"duplicate event {tok.value!r}", "P002")
            names.append(tok.value)
            if self.peek().value == ",":
                self.next()
                continue
            break
        self.expect_punct(";")
        return tuple(names)

    def _parse_state_body(self, name: str, parent: str | None, shell: bool, span: Span) -> str:
        """Parse vardecls/entry/exit/children/init/transitions into raw_states."""
        if name in self.raw_states:
            raise self.error(
                Token("ident", name, span.line, span.col), f"duplicate state {name!r}", "P002"
            )
        raw = _RawState(name, parent, shell, (), EMPTY_BLOCK, EMPTY_BLOCK, None, [], span)
        self.raw_states[name] = raw

        decls: list[VarDecl] = []
        while self.at_keyword("static") or self.at_keyword("local") or self.at_keyword("param"):
            decls.append(self.parse_vardecl(decls))
        raw.vars = tuple(decls)

        if self.at_keyword("entry"):
            self.next()
            raw.entry = self.parse_block()
        if self.at_keyword("exit"):
            self.next()
            raw.exit = self.parse_block()

        while self.at_keyword("state"):
            self.next()
            child_tok = self.expect_name("state")
            child_shell = False
            if self.peek().value == ":":
                self.next()
                self.expect_keyword("shell")
                child_shell = True
            self.expect_punct("{")
            self._parse_state_body(child_tok.value, name, child_shell, self._span(child_tok))
            self.expect_punct("}")
            raw.children.append(child_tok.value)

        if self.at_keyword("init"):
            self.next()
            inits: list[tuple[str, Span]] = []
            while True:
                tok = self.expect_name("state")
                inits.append((tok.value, self._span(tok)))
                if self.peek().value == ",":
                    self.next()
                    continue
                break
            self.expect_punct(";")
            raw.init = tuple(inits)

        while self.at_keyword("transition"):
            self.parse_transition(name)

        return name

    def parse_vardecl(self, seen: list[VarDecl]) -> VarDecl:
        storage_tok = self.next()
        storage = Storage(storage_tok.value)
        name_tok = self.expect_name("variable")
        if any(d.name == name_tok.value for d in seen):
            raise self.error(name_tok, f"duplicate variable {name_tok.value!r}", "P002")
        self.expect_punct(":")
        type_tok = self.peek()
        if type_tok.value in ("int", "bool"):
            self.next()
        else:
            raise self.error(type_tok, f"expected 'int' or 'bool', found {self._describe(type_tok)}")
        self.expect_punct("=")
        init = self.parse_expr()
        self.expect_punct(";")
        return VarDecl(name_tok.value, storage, type_tok.value, init, self._span(name_tok))

    def parse_transition(self, parent: str) -> None:
        self.expect_keyword("transition")
        name_tok = self.expect_name("transition")
        if name_tok.value in self.raw_transitions:
            raise self.error(name_tok, f"duplicate transition {name_tok.value!r}", "P002")
        self.expect_punct(":")
        source = self.parse_qualified()
        self.expect_punct("->")
        dest = self.parse_qualified()
        self.expect_keyword("on")
        event_tok = self.expect_name("event")
        guard: Expr = TRUE
        if self.peek().value == "[":
            self.next()
            guard = self.parse_expr()
            self.expect_punct("]")
        action: Block = EMPTY_BLOCK
        if self.peek().value == "/":
            self.next()
            action = self.parse_block()
        self.expect_punct(";")
        self.raw_transitions[name_tok.value] = _RawTransition(
            name_tok.value,
            parent,
            source,
            dest,
            event_tok.value,
            self._span(event_tok),
            guard,
            action,
            self._span(name_tok),
        )

    def parse_qualified(self) -> tuple[tuple[str, Span], ...]:
        parts = [self.expect_name("state")]
        while self.peek().value == ".":
            self.next()
            parts.append(self.expect_name("state"))
        return tuple((t.value, self._span(t)) for t in parts)

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        self.expect_punct("{")
        stmts: list[Stmt] = []
        while not (self.peek().kind == "punct" and self.peek().value == "}"):
            stmts.append(self.parse_stmt())
        self.expect_punct("}")
        return tuple(stmts)

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "ident" and t.value == "skip":
            self.next()
            self.expect_punct(";")
            return Skip(self._span(t))
        if t.kind == "ident" and t.value == "if":
            self.next()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            then_body = self.parse_block()
            else_body: Block = EMPTY_BLOCK
            if self.at_keyword("else"):
                self.next()
                else_body = self.parse_block()
            return If(cond, then_body, else_body, self._span(t))
        if t.kind == "ident" and t.value == "while":
            self.next()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            body = self.parse_block()
            return While(cond, body, self._span(t))
        if t.kind == "ident" and t.value not in KEYWORDS:
            self.next()
            self.expect_punct(":=")
            value = self.parse_expr()
            self.expect_punct(";")
            return Assign(t.value, value, self._span(t))
        raise self.error(t, f"expected a statement, found {self._describe(t)}")

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at_keyword("or"):
            t = self.next()
            left = Binary("or", left, self.parse_and(), self._span(t))
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at_keyword("and"):
            t = self.next()
            left = Binary("and", left, self.parse_not(), self._span(t))
        return left

    def parse_not(self) -> Expr:
        if self.at_keyword("not"):
            t = self.next()
            return Unary("not", self.parse_not(), self._span(t))
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        t = self.peek()
        if t.kind == "punct" and t.value in CMP_OPS:
            self.next()
            right = self.parse_additive()
            return Binary(t.value, left, right, self._span(t))
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.peek().kind == "punct" and self.peek().value in ("+", "-"):
            t = self.next()
            left = Binary(t.value, left, self.parse_multiplicative(), self._span(t))
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.peek().kind == "punct" and self.peek().value in ("*", "/"):
            t = self.next()
            left = Binary(t.value, left, self.parse_unary(), self._span(t))
        return left

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t.kind == "punct" and t.value == "-":
            self.next()
            return Unary("-", self.parse_unary(), self._span(t))
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            value = int(t.value)
            if value > INT_MAX:
                raise self.error(t, f"integer literal {t.value} out of 64-bit range")
            return IntLit(value, self._span(t))
        if t.kind == "punct" and t.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if t.kind == "ident":
            if t.value == "true":
                self.next()
                return BoolLit(True, self._span(t))
            if t.value == "false":
                self.next()
                return BoolLit(False, self._span(t))
            if t.value in KEYWORDS:
                raise self.error(t, f"expected an expression, found {self._describe(t)}")
            self.next()
            if self.peek().kind == "punct" and self.peek().value == "(":
                self.next()
                args: list[Expr] = []
                if not (self.peek().kind == "punct" and self.peek().value == ")"):
                    args.append(self.parse_expr())
                    while self.peek().value == ",":
                        self.next()
                        args.append(self.parse_expr())
                self.expect_punct(")")
                return Call(t.value, tuple(args), self._span(t))
            return Var(t.value, self._span(t))
        raise self.error(t, f"expected an expression, found {self._describe(t)}")

    # -- resolution ----------------------------------------------------------

    def _resolve(self, root: str, events: tuple[str, ...]) -> Model:
        states: dict[str, State] = {}
        for raw in self.raw_states.values():
            if raw.parent is None:
                stype = StateType.STATECHART
            elif raw.shell:
                stype = StateType.SHELL
            elif raw.children:
                stype = StateType.COMPOSITE
            else:
                stype = StateType.ATOMIC
            initial = self._resolve_initial(raw, stype)
            states[raw.name] = State(
                raw.name, raw.parent, stype, initial, raw.vars, raw.entry, raw.exit, raw.span
            )

        transitions: dict[str, Transition] = {}
        for raw_t in self.raw_transitions.values():
            source = self._resolve_path(raw_t.source)
            dest = self._resolve_path(raw_t.dest)
            if raw_t.event not in events:
                raise self.error(
                    Token("ident", raw_t.event, raw_t.event_span.line, raw_t.event_span.col),
                    f"undeclared event {raw_t.event!r}",
                    "P004",
                )
            transitions[raw_t.name] = Transition(
                raw_t.name, raw_t.parent, source, dest, raw_t.event,
                raw_t.guard, raw_t.action, raw_t.span,
            )
        return Model(root, root, states, transitions, events, source=self.file)

    def _resolve_initial(self, raw: _RawState, stype: StateType) -> tuple[str, ...]:
        def err(span: Span, message: str, code: str = "P003") -> _Abort:
            return self.error(Token("ident", raw.name, span.line, span.col), message, code)

        declared = raw.init or ()
        for name, span in declared:
            if name not in raw.children:
                raise err(span, f"initial state {name!r} is not a child of {raw.name!r}", "P004")
        if stype == StateType.SHELL:
            # A shell's regions are all concurrently active; init is implied.
            if raw.init is not None and {n for n, _ in declared} != set(raw.children):
                raise err(raw.span, f"shell {raw.name!r} init must list all of its regions")
            return tuple(raw.children)
        if stype == StateType.ATOMIC:
            if raw.init is not None:
                raise err(raw.span, f"atomic state {raw.name!r} cannot declare init")
            return ()
        # composite or statechart
        if raw.init is None or len(declared) != 1:
            what = "statechart" if stype == StateType.STATECHART else "composite state"
            raise err(raw.span, f"{what} {raw.name!r} must declare exactly one initial child")
        return (declared[0][0],)

    def _resolve_path(self, path: tuple[tuple[str, Span], ...]) -> str:
        head, head_span = path[0]
        if head not in self.raw_states:
            raise self.error(
                Token("ident", head, head_span.line, head_span.col),
                f"unknown state {head!r}",
                "P004",
            )
        current = head
        for name, span in path[1:]:
            if name not in self.raw_states or self.raw_states[name].parent != current:
                raise self.error(
                    Token("ident", name, span.line, span.col),
                    f"{name!r} is not a child of {current!r}",
                    "P004",
                )
            current = name
        return current


def parse_model(text: str, file: str = "<input>") -> Model:
    """Parse model text; raises ParseError carrying diagnostics on failure."""
    tokens = _Lexer(text, file).tokens()
    p = _Parser(tokens, file)
    try:
        return p.parse_model()
    except _Abort:
        raise ParseError(p.diags) from None


def parse_model_file(path: str) -> Model:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_model(text, file=str(path))


def parse_expression(text: str, file: str = "<expr>") -> Expr:
    """Parse a standalone expression (used by fuzz config predicates)."""
    tokens = _Lexer(text, file).tokens()
    p = _Parser(tokens, file)
    try:
        expr = p.parse_expr()
        t = p.peek()
        if t.kind != "eof":
            raise p.error(t, f"expected end of expression, found {p._describe(t)}")
        return expr
    except _Abort:
        raise ParseError(p.diags) from None


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

_PRECEDENCE = {
    "or": 1, "and": 2,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6,
}
_UNARY_PREC = {"not": 3, "-": 7}


def format_expr(e: Expr, parent_prec: int = 0) -> str:
    match e:
        case IntLit(value=v):
            return str(v)
        case BoolLit(value=v):
            return "true" if v else "false"
        case Var(name=n):
            return n
        case Call(func=f, args=args):
            return f"{f}({', '.join(format_expr(a) for a in args)})"
        case Unary(op=op, operand=inner):
            prec = _UNARY_PREC[op]
            body = format_expr(inner, prec)
            text = f"not {body}" if op == "not" else f"-{body}"
            return f"({text})" if prec < parent_prec else text
        case Binary(op=op, left=l, right=r):
            prec = _PRECEDENCE[op]
            # comparisons are non-associative; everything else is left-associative
            right_prec = prec + 1
            text = f"{format_expr(l, prec)} {op} {format_expr(r, right_prec)}"
            return f"({text})" if prec < parent_prec or (prec == parent_prec and prec == 4) else text
    raise TypeError(f"not an expression: {e!r}")


def format_stmt(s: Stmt) -> str:
    """Single-line rendering, used for CFG dumps and instruction previews."""
    match s:
        case Assign(target=t, value=v):
            return f"{t} := {format_expr(v)}"
        case Skip():
            return "skip"
        case If(cond=c):
            return f"if ({format_expr(c)}) ..."
        case While(cond=c):
            return f"while ({format_expr(c)}) ..."
    raise TypeError(f"not a statement: {s!r}")


def _format_block_lines(block: Block, indent: int) -> list[str]:
    pad = "  " * indent
    lines: list[str] = []
    for s in block:
        match s:
            case Assign(target=t, value=v):
                lines.append(f"{pad}{t} := {format_expr(v)};")
            case Skip():
                lines.append(f"{pad}skip;")
            case If(cond=c, then_body=tb, else_body=eb):
                lines.append(f"{pad}if ({format_expr(c)}) {{")
                lines.extend(_format_block_lines(tb, indent + 1))
                if eb:
                    lines.append(f"{pad}}} else {{")
                    lines.extend(_format_block_lines(eb, indent + 1))
                lines.append(f"{pad}}}")
            case While(cond=c, body=b):
                lines.append(f"{pad}while ({format_expr(c)}) {{")
                lines.extend(_format_block_lines(b, indent + 1))
                lines.append(f"{pad}}}")
    return lines


def format_block_inline(block: Block) -> str:
    """A block on one line, `{ s1; s2; }`, for transitions."""
    if not block:
        return "{ }"
    parts: list[str] = []
    for s in block:
        match s:
            case Assign(target=t, value=v):
                parts.append(f"{t} := {format_expr(v)};")
            case Skip():
                parts.append("skip;")
            case If(cond=c, then_body=tb, else_body=eb):
                inner = f"if ({format_expr(c)}) {format_block_inline(tb)}"
                if eb:
                    inner += f" else {format_block_inline(eb)}"
                parts.append(inner)
            case While(cond=c, body=b):
                parts.append(f"while ({format_expr(c)}) {format_block_inline(b)}")
    return "{ " + " ".join(parts) + " }"


def pretty_print(model: Model) -> str:
    lines: list[str] = [f"statechart {model.name} {{"]
    lines.append(f"  events {', '.join(model.events)};")
    lines.extend(_print_state_body(model, model.root, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _print_state_body(model: Model, name: str, indent: int) -> list[str]:
    pad = "  " * indent
    s = model.states[name]
    lines: list[str] = []
    for v in s.vars:
        lines.append(f"{pad}{v.storage.value} {v.name}: {v.vtype} = {format_expr(v.init)};")
    if s.entry:
        lines.append(f"{pad}entry {{")
        lines.extend(_format_block_lines(s.entry, indent + 1))
        lines.append(f"{pad}}}")
    if s.exit:
        lines.append(f"{pad}exit {{")
        lines.extend(_format_block_lines(s.exit, indent + 1))
        lines.append(f"{pad}}}")
    for child in model.children(name):
        c = model.states[child]
        suffix = ": shell" if c.stype == StateType.SHELL else ""
        lines.append(f"{pad}state {child}{suffix} {{")
        lines.extend(_print_state_body(model, child, indent + 1))
        lines.append(f"{pad}}}")
    if s.stype in (StateType.COMPOSITE, StateType.STATECHART) and s.initial:
        lines.append(f"{pad}init {s.initial[0]};")
    for t in model.transitions.values():
        if t.parent != name:
            continue
        text = f"{pad}transition {t.name}: {t.source} -> {t.dest} on {t.event}"
        if t.guard != TRUE:
            text += f" [{format_expr(t.guard)}]"
        if t.action:
            text += f" / {format_block_inline(t.action)}"
        lines.append(text + ";")
    return lines
