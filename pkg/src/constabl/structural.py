"""Structural relations over the state tree and the static model checker.

Containment is strict: a state is never its own ancestor. The closest
common ancestor of a state set is the unique deepest member of its common
ancestors; it exists for every non-empty set not containing the root.

`check_model` enforces, in order per transition and with the most specific
rule winning:

  T3  neither endpoint may be the statechart root,
  T2  endpoints may not be related by containment,
  T1  the closest common ancestor of the endpoints may not be a shell
      (no transition may cross between regions of one shell).

plus the containment legality of the tree itself (code S-containment), and
name/type discipline for all embedded code: every variable reference must
resolve in its scope (V-scope), operands and assignments must be
well-typed (V-type), and guards must be boolean (G-bool).

Scope rules: code attached to a state sees that state's variables and its
ancestors'; transition guards and actions see the variables of the
transition's closest common ancestor and its ancestors. Inner declarations
shadow outer ones. Initializers are restricted to names whose values
already exist when the initializer runs: statics may only use
earlier-initialized statics, locals and parameters may use statics,
ancestor variables, and same-state variables declared above them.
"""

from __future__ import annotations

from .diagnostics import Diagnostic
from .model import (
    BOOL_OPS,
    BUILTINS,
    CMP_OPS,
    ARITH_OPS,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    Expr,
    If,
    IntLit,
    Model,
    ModelError,
    Skip,
    Span,
    State,
    StateType,
    Storage,
    Transition,
    Unary,
    Var,
    VarDecl,
    VType,
    While,
)

StateRef = "State | str"


class NoCommonAncestorError(ModelError):
    def __init__(self, names: list[str]):
        super().__init__(f"states {names} have no common ancestor")
        self.names = names


def _name(model: Model, s: State | str) -> str:
    if isinstance(s, str):
        model.state(s)  # raise on unknown names
        return s
    return s.name


def ancestor_chain(model: Model, s: State | str) -> list[State]:
    """Strict ancestors, innermost first, ending at the root."""
    name = _name(model, s)
    chain: list[State] = []
    current = model.states[name].parent
    while current is not None:
        st = model.state(current)
        chain.append(st)
        current = st.parent
    return chain


def is_ancestor(model: Model, s1: State | str, s2: State | str) -> bool:
    """True iff s2 lies on the strict parent chain of s1."""
    target = _name(model, s2)
    return any(a.name == target for a in ancestor_chain(model, s1))


def substates(model: Model, s: State | str) -> tuple[State, ...]:
    """Direct children in declaration order."""
    return tuple(model.states[c] for c in model.children(_name(model, s)))


def common_ancestors(model: Model, ss) -> list[State]:
    """Strict common ancestors of a non-empty state set, innermost first."""
    names = [_name(model, s) for s in ss]
    if not names:
        raise ValueError("common_ancestors of an empty set")
    first_chain = ancestor_chain(model, names[0])
    common = [a.name for a in first_chain]
    for n in names[1:]:
        chain = {a.name for a in ancestor_chain(model, n)}
        common = [c for c in common if c in chain]
    return [model.states[c] for c in common]


def closest_common_ancestor(model: Model, ss) -> State:
    """The deepest common ancestor. Errors only when the set contains the root."""
    ca = common_ancestors(model, ss)
    if not ca:
        raise NoCommonAncestorError([_name(model, s) for s in ss])
    return ca[0]


def cca_of_transitions(model: Model, ts) -> State:
    """Closest common ancestor of all endpoints of a set of transitions."""
    endpoints: list[str] = []
    for t in ts:
        tr = model.transition(t) if isinstance(t, str) else t
        endpoints.extend((tr.source, tr.dest))
    if not endpoints:
        raise ValueError("cca_of_transitions of an empty set")
    return closest_common_ancestor(model, endpoints)


# ---------------------------------------------------------------------------
# Static checking
# ---------------------------------------------------------------------------

def check_model(model: Model) -> list[Diagnostic]:
    """All structural and code diagnostics for a model, order-stable."""
    return _Checker(model).run()


class _Checker:
    def __init__(self, model: Model):
        self.model = model
        self.file = model.source or "<model>"
        self.diags: list[Diagnostic] = []

    def run(self) -> list[Diagnostic]:
        if not self._check_tree():
            return self.diags
        self._check_containment()
        for t in self.model.transitions.values():
            self._check_transition_shape(t)
        self._check_code()
        return self.diags

    def report(self, span: Span, code: str, message: str, severity: str = "error") -> None:
        self.diags.append(Diagnostic(severity, self.file, span.line, span.col, code, message))

    # -- tree sanity (guards against hand-built models) ----------------------

    def _check_tree(self) -> bool:
        m = self.model
        if m.root not in m.states:
            self.report(Span(), "S-containment", f"root state {m.root!r} is not declared")
            return False
        ok = True
        for s in m.states.values():
            if s.parent is not None and s.parent not in m.states:
                self.report(s.span, "S-containment", f"state {s.name!r} has unknown parent {s.parent!r}")
                ok = False
        if not ok:
            return False
        reached = {s.name for s in m.preorder()}
        for s in m.states.values():
            if s.name not in reached:
                self.report(s.span, "S-containment", f"state {s.name!r} is not reachable from the root")
                ok = False
        return ok

    # -- containment legality -------------------------------------------------

    def _check_containment(self) -> None:
        m = self.model
        for s in m.states.values():
            children = substates(m, s)
            if s.stype == StateType.STATECHART:
                if s.name != m.root:
                    self.report(s.span, "S-containment", f"statechart type on non-root state {s.name!r}")
                    continue
                if not children:
                    self.report(s.span, "S-containment", f"statechart {s.name!r} has no states")
                elif len(s.initial) != 1 or s.initial[0] not in {c.name for c in children}:
                    self.report(s.span, "S-containment",
                                f"statechart {s.name!r} must have exactly one initial child")
            elif s.parent is None:
                self.report(s.span, "S-containment", f"root state {s.name!r} is not a statechart")
            if s.stype == StateType.ATOMIC:
                if children:
                    self.report(s.span, "S-containment", f"atomic state {s.name!r} has children")
                if s.initial:
                    self.report(s.span, "S-containment", f"atomic state {s.name!r} has an initial set")
            elif s.stype == StateType.SHELL:
                if not children:
                    self.report(s.span, "S-containment", f"shell state {s.name!r} has no regions")
                elif len(children) == 1:
                    self.report(s.span, "W001",
                                f"shell state {s.name!r} has a single region (degenerate concurrency)",
                                severity="warning")
                for c in children:
                    if c.stype != StateType.COMPOSITE:
                        self.report(c.span, "S-containment",
                                    f"shell {s.name!r} region {c.name!r} must be a composite state")
                if children and set(s.initial) != {c.name for c in children}:
                    self.report(s.span, "S-containment",
                                f"shell {s.name!r} initial set must equal its regions")
            elif s.stype == StateType.COMPOSITE:
                if not children:
                    self.report(s.span, "S-containment", f"composite state {s.name!r} has no children")
                elif len(s.initial) != 1 or s.initial[0] not in {c.name for c in children}:
                    self.report(s.span, "S-containment",
                                f"composite state {s.name!r} must have exactly one initial child")
                for c in children:
                    if c.stype == StateType.STATECHART:
                        self.report(c.span, "S-containment",
                                    f"state {c.name!r} of statechart type nested under {s.name!r}")

    # -- transition legality (most specific rule wins, per transition) --------

    def _check_transition_shape(self, t: Transition) -> None:
        m = self.model
        for endpoint in (t.source, t.dest):
            if endpoint not in m.states:
                self.report(t.span, "P004", f"transition {t.name!r} references unknown state {endpoint!r}")
                return
        if t.event not in m.events:
            self.report(t.span, "P004", f"transition {t.name!r} uses undeclared event {t.event!r}")
            return
        src, dst = m.states[t.source], m.states[t.dest]
        if src.stype == StateType.STATECHART or dst.stype == StateType.STATECHART:
            self.report(t.span, "T3",
                        f"transition {t.name!r} touches the statechart state")
            return
        if t.source != t.dest and (
            is_ancestor(m, t.source, t.dest) or is_ancestor(m, t.dest, t.source)
        ):
            self.report(t.span, "T2",
                        f"transition {t.name!r} connects a state to one of its descendants")
            return
        try:
            cca = closest_common_ancestor(m, [t.source, t.dest])
        except NoCommonAncestorError:
            return
        if cca.stype == StateType.SHELL:
            self.report(t.span, "T1",
                        f"transition {t.name!r} crosses between regions of shell {cca.name!r}")

    # -- variable scope and types ---------------------------------------------

    def _decl_maps(self, state_name: str) -> list[tuple[str, dict[str, VarDecl]]]:
        """Scope chain as (state, decls) pairs, innermost first."""
        m = self.model
        chain = [m.states[state_name]] + ancestor_chain(m, state_name)
        return [(s.name, {v.name: v for v in s.vars}) for s in chain]

    def _check_code(self) -> None:
        m = self.model
        for s in m.preorder():
            scope = self._decl_maps(s.name)
            self._check_initializers(s, scope)
            self._check_block(s.entry, scope)
            self._check_block(s.exit, scope)
        for t in m.transitions.values():
            try:
                cca = cca_of_transitions(m, [t])
            except (NoCommonAncestorError, ModelError):
                continue  # already reported as a shape violation
            scope = self._decl_maps(cca.name)
            gtype = self._type_of(t.guard, scope)
            if gtype is not None and gtype != "bool":
                self.report(_span_of(t.guard), "G-bool",
                            f"guard of transition {t.name!r} has type {gtype}, expected bool")
            self._check_block(t.action, scope)

    def _check_initializers(self, s: State, scope: list[tuple[str, dict[str, VarDecl]]]) -> None:
        outer = scope[1:]
        for i, v in enumerate(s.vars):
            if v.storage == Storage.STATIC:
                # Statics are initialized before any frame exists.
                earlier = {d.name: d for d in s.vars[:i] if d.storage == Storage.STATIC}
                visible = [(s.name, earlier)] + [
                    (name, {k: d for k, d in decls.items() if d.storage == Storage.STATIC})
                    for name, decls in outer
                ]
            else:
                earlier = {d.name: d for d in s.vars[:i]}
                statics_here = {d.name: d for d in s.vars if d.storage == Storage.STATIC}
                visible = [(s.name, {**statics_here, **earlier})] + outer
            vtype = self._type_of(v.init, visible)
            if vtype is not None and vtype != v.vtype:
                self.report(v.span, "V-type",
                            f"initializer of {v.name!r} has type {vtype}, expected {v.vtype}")

    def _check_block(self, block: Block, scope: list[tuple[str, dict[str, VarDecl]]]) -> None:
        for stmt in block:
            match stmt:
                case Assign(target=target, value=value, span=span):
                    decl = _resolve(scope, target)
                    if decl is None:
                        self.report(span, "V-scope", f"assignment to undeclared variable {target!r}")
                        self._type_of(value, scope)
                        continue
                    vtype = self._type_of(value, scope)
                    if vtype is not None and vtype != decl.vtype:
                        self.report(span, "V-type",
                                    f"assigning {vtype} to {target!r} of type {decl.vtype}")
                case If(cond=cond, then_body=tb, else_body=eb):
                    self._require_bool(cond, scope, "if condition")
                    self._check_block(tb, scope)
                    self._check_block(eb, scope)
                case While(cond=cond, body=body):
                    self._require_bool(cond, scope, "while condition")
                    self._check_block(body, scope)
                case Skip():
                    pass

    def _require_bool(self, e: Expr, scope, what: str) -> None:
        t = self._type_of(e, scope)
        if t is not None and t != "bool":
            self.report(_span_of(e), "V-type", f"{what} has type {t}, expected bool")

    def _type_of(self, e: Expr, scope) -> VType | None:
        """Expression type, or None after reporting; None poisons silently."""
        match e:
            case IntLit():
                return "int"
            case BoolLit():
                return "bool"
            case Var(name=name, span=span):
                decl = _resolve(scope, name)
                if decl is None:
                    self.report(span, "V-scope", f"reference to undeclared variable {name!r}")
                    return None
                return decl.vtype
            case Unary(op=op, operand=inner, span=span):
                it = self._type_of(inner, scope)
                want: VType = "int" if op == "-" else "bool"
                if it is not None and it != want:
                    self.report(span, "V-type", f"operator {op!r} needs {want}, got {it}")
                    return None
                return want if it is not None else None
            case Binary(op=op, left=l, right=r, span=span):
                lt = self._type_of(l, scope)
                rt = self._type_of(r, scope)
                if lt is None or rt is None:
                    return None
                if op in ARITH_OPS or op in CMP_OPS:
                    if lt != "int" or rt != "int":
                        self.report(span, "V-type", f"operator {op!r} needs int operands, got {lt} and {rt}")
                        return None
                    return "int" if op in ARITH_OPS else "bool"
                if op in BOOL_OPS:
                    if lt != "bool" or rt != "bool":
                        self.report(span, "V-type", f"operator {op!r} needs bool operands, got {lt} and {rt}")
                        return None
                    return "bool"
                raise AssertionError(f"unknown operator {op!r}")
            case Call(func=func, args=args, span=span):
                sig = BUILTINS.get(func)
                if sig is None:
                    self.report(span, "V-scope", f"unknown function {func!r}")
                    for a in args:
                        self._type_of(a, scope)
                    return None
                arity, rtype = sig
                if len(args) != arity:
                    self.report(span, "V-type", f"{func} expects {arity} arguments, got {len(args)}")
                ok = True
                for a in args:
                    at = self._type_of(a, scope)
                    if at is not None and at != "int":
                        self.report(_span_of(a), "V-type", f"{func} arguments must be int, got {at}")
                        ok = False
                return rtype if ok else None
        raise TypeError(f"not an expression: {e!r}")


def _resolve(scope: list[tuple[str, dict[str, VarDecl]]], name: str) -> VarDecl | None:
    for _, decls in scope:
        if name in decls:
            return decls[name]
    return None


def _span_of(e: Expr) -> Span:
    return getattr(e, "span", Span())
