"""Mini-language binding annotated model scripts to the LP kernel.

Component spans of a ``.mhl`` file hold a small line-oriented language:

* Interface Object / Interface File spans may declare a literal default
  (``name = 1e-8`` or ``name = [1, 2]``); file inputs resolve to the numeric
  vector parsed from the uploaded file.
* Helper Object spans assign expressions over inputs and other helpers
  (``+ - *``, indexing, vector literals).
* Variable spans declare blocks: ``x = variable(2) >= 0 <= 10``.
* Constraint spans hold linear relations (``<= >= ==``), elementwise over
  vectors.
* Objective spans hold ``minimize <expr>`` or ``maximize <expr>``.
* Solver spans assign solver parameters (``feastol = feastol``); values may
  reference interface objects.
* Output Object spans assign post-solve expressions; ``objective`` names the
  optimal objective value.

Problem and Execution span bodies carry no kernel semantics; an Execution
component's result is the solver info map.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..core import ComponentKind, ModelManifest, validation_errors
from .problem import (
    EQ,
    GEQ,
    LEQ,
    MAXIMIZE,
    MINIMIZE,
    STATUS_OPTIMAL,
    LPProblem,
    LPSolution,
    Row,
    SolveParams,
)

KNOWN_SOLVER_PARAMS = ("feastol", "maxiter")
RESERVED = {"variable", "minimize", "maximize", "objective"}


class ScriptError(ValueError):
    """Mini-language failure, reported with component and line context."""

    def __init__(self, message: str, component: Optional[str] = None, line: Optional[int] = None):
        self.component = component
        self.line = line
        where = []
        if component:
            where.append(f"component {component!r}")
        if line:
            where.append(f"line {line}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


# ---------------------------------------------------------------------------
# Lexing and expression AST

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|[+\-*/()\[\],=<>])"
)


def _tokenize(text: str, comp: str, line: int) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ScriptError(f"unexpected character {text[pos]!r}", comp, line)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append((m.lastgroup, m.group()))
    return tokens


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Vec:
    items: tuple


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Index:
    base: object
    index: object


class _ExprParser:
    def __init__(self, tokens, comp, line):
        self.tokens = tokens
        self.pos = 0
        self.comp = comp
        self.line = line

    def fail(self, msg):
        raise ScriptError(msg, self.comp, self.line)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, kind=None, text=None):
        k, t = self.peek()
        if k is None:
            self.fail("unexpected end of line")
        if kind is not None and k != kind:
            self.fail(f"expected {kind}, found {t!r}")
        if text is not None and t != text:
            self.fail(f"expected {text!r}, found {t!r}")
        self.pos += 1
        return t

    def at_end(self):
        return self.pos >= len(self.tokens)

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take("op")
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take("op")
            if op == "/":
                self.fail("division is not supported; multiply by a literal instead")
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take("op")
            return Neg(self.unary())
        if self.peek() == ("op", "+"):
            self.take("op")
            return self.unary()
        return self.postfix()

    def postfix(self):
        node = self.atom()
        while self.peek() == ("op", "["):
            self.take("op")
            idx = self.expr()
            self.take("op", "]")
            node = Index(node, idx)
        return node

    def atom(self):
        kind, text = self.peek()
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "name":
            if text in ("minimize", "maximize", "variable"):
                self.fail(f"{text!r} is a keyword and cannot appear here")
            self.take()
            return Name(text)
        if (kind, text) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if (kind, text) == ("op", "["):
            self.take()
            items = []
            if self.peek() != ("op", "]"):
                items.append(self.expr())
                while self.peek() == ("op", ","):
                    self.take()
                    items.append(self.expr())
            self.take("op", "]")
            return Vec(tuple(items))
        self.fail(f"unexpected token {text!r}")


# ---------------------------------------------------------------------------
# Bindings and template

@dataclass
class InputBinding:
    name: str
    is_file: bool
    default: Union[float, list, None]
    line: int


@dataclass
class HelperBinding:
    component: str
    assignments: list  # (target, ast, line)


@dataclass
class VariableBinding:
    name: str
    size: int
    offset: int
    lower: Optional[object]
    upper: Optional[object]
    line: int


@dataclass
class ConstraintBinding:
    component: str
    relations: list  # (lhs ast, rel, rhs ast, line)


@dataclass
class OutputBinding:
    component: str
    assignments: list  # (target, ast, line)


@dataclass
class ScriptBinding:
    """Component name -> kernel entity kind, for the whole model."""

    entities: dict[str, str] = field(default_factory=dict)


@dataclass
class LPTemplate:
    """Parsed model with unresolved input references."""

    manifest: ModelManifest
    sense: str
    objective_expr: object
    objective_component: str
    inputs: dict[str, InputBinding]
    helpers: list[HelperBinding]
    variables: list[VariableBinding]
    constraints: list[ConstraintBinding]
    solver_params: list  # (param, ast, line, component)
    outputs: list[OutputBinding]
    executions: list[str]
    n: int
    warnings: list[str]

    def default_values(self) -> dict:
        """Interface defaults extractable without running anything."""
        return {
            b.name: b.default for b in self.inputs.values() if b.default is not None
        }

    def required_inputs(self) -> list[str]:
        return [b.name for b in self.inputs.values() if b.default is None]


@dataclass
class LPInstance:
    """Template with all references resolved to numbers."""

    template: LPTemplate
    problem: LPProblem
    params: SolveParams
    values: dict  # inputs and helpers, evaluated
    warnings: list[str]


def _line_of_offset(source: str, offset: int) -> int:
    return source.encode("utf-8")[:offset].count(b"\n") + 1


def _span_statements(source_bytes: bytes, span, tag: str):
    """Yield (line_number, text) for code lines inside a component span."""
    text = source_bytes[span.start:span.end].decode("utf-8")
    base_line = source_bytes[:span.start].count(b"\n") + 1
    for i, line in enumerate(text.split("\n")):
        stripped = line.strip()
        if not stripped or stripped.startswith(tag):
            continue
        if tag == "#" and "#" in line:
            line = line[: line.index("#")]
            if not line.strip():
                continue
        yield base_line + i, line


def _literal_value(ast, comp, line):
    """Evaluate a numeric literal (scalar or vector); None when not a literal."""
    if isinstance(ast, Num):
        return ast.value
    if isinstance(ast, Neg):
        inner = _literal_value(ast.operand, comp, line)
        if isinstance(inner, float):
            return -inner
        return None
    if isinstance(ast, Vec):
        items = []
        for item in ast.items:
            v = _literal_value(item, comp, line)
            if not isinstance(v, float):
                return None
            items.append(v)
        return items
    return None


def _walk_names(ast):
    if isinstance(ast, Name):
        yield ast.ident
    elif isinstance(ast, Bin):
        yield from _walk_names(ast.left)
        yield from _walk_names(ast.right)
    elif isinstance(ast, Neg):
        yield from _walk_names(ast.operand)
    elif isinstance(ast, Index):
        yield from _walk_names(ast.base)
        yield from _walk_names(ast.index)
    elif isinstance(ast, Vec):
        for item in ast.items:
            yield from _walk_names(item)


def parse_script(manifest: ModelManifest, source: str) -> tuple[LPTemplate, ScriptBinding]:
    """Interpret component spans as the LP mini-language.

    Static errors (unknown identifiers, products of two variable expressions,
    literal shape mismatches) raise :class:`ScriptError` naming the component
    and line. Input values stay unresolved until :func:`instantiate`.
    """
    errors = validation_errors(manifest)
    if errors:
        raise ScriptError("manifest has validation errors: " + errors[0].message)

    tag = manifest.comment_tag
    data = source.encode("utf-8")
    binding = ScriptBinding()
    inputs: dict[str, InputBinding] = {}
    helpers: list[HelperBinding] = []
    variables: list[VariableBinding] = []
    constraints: list[ConstraintBinding] = []
    solver_params: list = []
    outputs: list[OutputBinding] = []
    executions: list[str] = []
    warnings: list[str] = []
    objective = None  # (sense, expr, component, line)

    defined: set[str] = set()

    def define(name: str, comp: str, line: int):
        if name in RESERVED:
            raise ScriptError(f"name {name!r} is reserved", comp, line)
        if name in defined:
            raise ScriptError(f"name {name!r} is defined more than once", comp, line)
        defined.add(name)

    def parse_assignment(tokens, comp, line):
        p = _ExprParser(tokens, comp, line)
        target = p.take("name")
        p.take("op", "=")
        expr = p.expr()
        if not p.at_end():
            p.fail("trailing tokens after expression")
        return target, expr

    offset = 0
    for comp in manifest.components:
        kind = comp.kind
        stmts = list(_span_statements(data, comp.span, tag))
        binding.entities[comp.name] = kind.value

        if kind in (ComponentKind.INTERFACE_OBJECT, ComponentKind.INTERFACE_FILE):
            is_file = kind is ComponentKind.INTERFACE_FILE
            default = None
            decl_line = _line_of_offset(source, comp.span.start)
            if len(stmts) > 1:
                raise ScriptError(
                    "interface spans hold at most one default assignment",
                    comp.name,
                    stmts[1][0],
                )
            if stmts:
                line, text = stmts[0]
                target, expr = parse_assignment(_tokenize(text, comp.name, line), comp.name, line)
                if target != comp.name:
                    raise ScriptError(
                        f"interface span must assign {comp.name!r}, not {target!r}",
                        comp.name,
                        line,
                    )
                default = _literal_value(expr, comp.name, line)
                if default is None:
                    raise ScriptError(
                        "interface defaults must be numeric literals", comp.name, line
                    )
                decl_line = line
            define(comp.name, comp.name, decl_line)
            inputs[comp.name] = InputBinding(comp.name, is_file, default, decl_line)

        elif kind is ComponentKind.HELPER_OBJECT:
            assignments = []
            for line, text in stmts:
                target, expr = parse_assignment(_tokenize(text, comp.name, line), comp.name, line)
                define(target, comp.name, line)
                assignments.append((target, expr, line))
            if comp.name not in {t for t, _, _ in assignments}:
                raise ScriptError(
                    f"helper span never assigns its component name {comp.name!r}",
                    comp.name,
                    _line_of_offset(source, comp.span.start),
                )
            helpers.append(HelperBinding(comp.name, assignments))

        elif kind is ComponentKind.VARIABLE:
            if len(stmts) != 1:
                raise ScriptError(
                    "variable spans hold exactly one declaration",
                    comp.name,
                    _line_of_offset(source, comp.span.start),
                )
            line, text = stmts[0]
            p = _ExprParser(_tokenize(text, comp.name, line), comp.name, line)
            target = p.take("name")
            if target != comp.name:
                raise ScriptError(
                    f"variable span must declare {comp.name!r}, not {target!r}",
                    comp.name,
                    line,
                )
            p.take("op", "=")
            p.take("name", "variable")
            p.take("op", "(")
            size_tok = p.take("num")
            p.take("op", ")")
            size = int(float(size_tok))
            if size < 1 or size != float(size_tok):
                raise ScriptError("variable size must be a positive integer", comp.name, line)
            lower = upper = None
            while not p.at_end():
                rel = p.take("op")
                if rel == ">=":
                    lower = p.expr()
                elif rel == "<=":
                    upper = p.expr()
                else:
                    p.fail(f"unexpected {rel!r} in variable declaration")
            define(comp.name, comp.name, line)
            variables.append(VariableBinding(comp.name, size, offset, lower, upper, line))
            offset += size

        elif kind is ComponentKind.CONSTRAINT:
            relations = []
            for line, text in stmts:
                tokens = _tokenize(text, comp.name, line)
                rel_positions = [
                    i for i, (k, t) in enumerate(tokens) if t in ("<=", ">=", "==", "=")
                ]
                if len(rel_positions) != 1:
                    raise ScriptError(
                        "constraint lines hold exactly one relation (<=, >= or ==)",
                        comp.name,
                        line,
                    )
                i = rel_positions[0]
                rel_text = tokens[i][1]
                lhs = _ExprParser(tokens[:i], comp.name, line)
                lhs_ast = lhs.expr()
                if not lhs.at_end():
                    lhs.fail("trailing tokens before relation")
                rhs = _ExprParser(tokens[i + 1:], comp.name, line)
                rhs_ast = rhs.expr()
                if not rhs.at_end():
                    rhs.fail("trailing tokens after relation")
                rel = {"<=": LEQ, ">=": GEQ, "==": EQ, "=": EQ}[rel_text]
                relations.append((lhs_ast, rel, rhs_ast, line))
            constraints.append(ConstraintBinding(comp.name, relations))

        elif kind is ComponentKind.OBJECTIVE:
            if objective is not None:
                raise ScriptError(
                    "model declares more than one objective",
                    comp.name,
                    _line_of_offset(source, comp.span.start),
                )
            if len(stmts) != 1:
                raise ScriptError(
                    "objective spans hold exactly one minimize/maximize statement",
                    comp.name,
                    _line_of_offset(source, comp.span.start),
                )
            line, text = stmts[0]
            tokens = _tokenize(text, comp.name, line)
            if not tokens or tokens[0][1] not in ("minimize", "maximize"):
                raise ScriptError(
                    "objective must start with minimize or maximize", comp.name, line
                )
            sense = MINIMIZE if tokens[0][1] == "minimize" else MAXIMIZE
            p = _ExprParser(tokens[1:], comp.name, line)
            expr = p.expr()
            if not p.at_end():
                p.fail("trailing tokens after objective expression")
            objective = (sense, expr, comp.name, line)

        elif kind is ComponentKind.SOLVER:
            for line, text in stmts:
                param, expr, = parse_assignment(_tokenize(text, comp.name, line), comp.name, line)
                if param not in KNOWN_SOLVER_PARAMS:
                    warnings.append(
                        f"solver parameter {param!r} is not honored by the native kernel"
                    )
                solver_params.append((param, expr, line, comp.name))

        elif kind is ComponentKind.OUTPUT_OBJECT:
            assignments = []
            for line, text in stmts:
                target, expr = parse_assignment(_tokenize(text, comp.name, line), comp.name, line)
                assignments.append((target, expr, line))
            if comp.name not in {t for t, _, _ in assignments}:
                raise ScriptError(
                    f"output span never assigns its component name {comp.name!r}",
                    comp.name,
                    _line_of_offset(source, comp.span.start),
                )
            outputs.append(OutputBinding(comp.name, assignments))

        elif kind is ComponentKind.EXECUTION:
            executions.append(comp.name)

        elif kind is ComponentKind.OUTPUT_FILE:
            warnings.append(
                f"output file {comp.name!r}: the native kernel does not write output files"
            )

        else:
            # Problem and Function spans carry no kernel semantics.
            pass

    if objective is None:
        raise ScriptError("model declares no objective")
    if not variables:
        raise ScriptError("model declares no variables")

    template = LPTemplate(
        manifest=manifest,
        sense=objective[0],
        objective_expr=objective[1],
        objective_component=objective[2],
        inputs=inputs,
        helpers=helpers,
        variables=variables,
        constraints=constraints,
        solver_params=solver_params,
        outputs=outputs,
        executions=executions,
        n=offset,
        warnings=warnings,
    )
    _static_checks(template)
    return template, binding


def _static_checks(t: LPTemplate):
    """Name resolution and structural linearity, before any values exist."""
    var_names = {v.name for v in t.variables}
    value_names = set(t.inputs) | var_names
    for h in t.helpers:
        for target, _, _ in h.assignments:
            value_names.add(target)

    def check(ast, comp, line, allow_vars, extra=()):
        for ident in _walk_names(ast):
            if ident not in value_names and ident not in extra:
                raise ScriptError(f"unknown identifier {ident!r}", comp, line)
            if not allow_vars and ident in var_names:
                raise ScriptError(
                    f"variable {ident!r} cannot appear here (pre-optimization context)",
                    comp,
                    line,
                )
        _check_linear(ast, var_names, comp, line)

    for h in t.helpers:
        for target, expr, line in h.assignments:
            check(expr, h.component, line, allow_vars=False)
    for v in t.variables:
        for bound in (v.lower, v.upper):
            if bound is not None:
                check(bound, v.name, v.line, allow_vars=False)
    for c in t.constraints:
        for lhs, _, rhs, line in c.relations:
            check(lhs, c.component, line, allow_vars=True)
            check(rhs, c.component, line, allow_vars=True)
    check(t.objective_expr, t.objective_component, None, allow_vars=True)
    for param, expr, line, comp in t.solver_params:
        check(expr, comp, line, allow_vars=False)
    for o in t.outputs:
        for target, expr, line in o.assignments:
            for ident in _walk_names(expr):
                ok = (
                    ident in value_names
                    or ident == "objective"
                    or ident in {tt for tt, _, _ in o.assignments}
                )
                if not ok:
                    raise ScriptError(f"unknown identifier {ident!r}", o.component, line)


def _depends_on_vars(ast, var_names) -> bool:
    return any(ident in var_names for ident in _walk_names(ast))


def _check_linear(ast, var_names, comp, line):
    """Reject products of two variable-dependent subexpressions."""
    if isinstance(ast, Bin):
        if ast.op == "*":
            if _depends_on_vars(ast.left, var_names) and _depends_on_vars(ast.right, var_names):
                raise ScriptError(
                    "nonlinear term: product of two variable expressions", comp, line
                )
        _check_linear(ast.left, var_names, comp, line)
        _check_linear(ast.right, var_names, comp, line)
    elif isinstance(ast, Neg):
        _check_linear(ast.operand, var_names, comp, line)
    elif isinstance(ast, Index):
        if _depends_on_vars(ast.index, var_names):
            raise ScriptError("variables cannot appear inside an index", comp, line)
        _check_linear(ast.base, var_names, comp, line)
    elif isinstance(ast, Vec):
        for item in ast.items:
            _check_linear(item, var_names, comp, line)


# ---------------------------------------------------------------------------
# Evaluation: numeric and affine values

@dataclass
class Affine:
    """coeffs @ x + const; scalar when coeffs is 1-D, vector when 2-D."""

    coeffs: np.ndarray
    const: np.ndarray  # () scalar array or (k,) vector

    @property
    def is_scalar(self) -> bool:
        return self.coeffs.ndim == 1


def _as_affine(value, n) -> Affine:
    if isinstance(value, Affine):
        return value
    if isinstance(value, float):
        return Affine(np.zeros(n), np.array(value))
    return Affine(np.zeros((len(value), n)), np.asarray(value, dtype=float))


class _Evaluator:
    """Evaluates ASTs over numeric env; variables become Affine values."""

    def __init__(self, env, var_blocks, n, comp=None):
        self.env = env
        self.var_blocks = var_blocks  # name -> (offset, size) or None
        self.n = n
        self.comp = comp
        self.line = None

    def fail(self, msg):
        raise ScriptError(msg, self.comp, self.line)

    def eval(self, ast):
        if isinstance(ast, Num):
            return ast.value
        if isinstance(ast, Name):
            if self.var_blocks and ast.ident in self.var_blocks:
                off, size = self.var_blocks[ast.ident]
                coeffs = np.zeros((size, self.n))
                coeffs[np.arange(size), off + np.arange(size)] = 1.0
                return Affine(coeffs, np.zeros(size))
            if ast.ident not in self.env:
                self.fail(f"unknown identifier {ast.ident!r}")
            value = self.env[ast.ident]
            if isinstance(value, str):
                self.fail(f"{ast.ident!r} holds text and cannot be used in arithmetic")
            return value
        if isinstance(ast, Neg):
            v = self.eval(ast.operand)
            if isinstance(v, Affine):
                return Affine(-v.coeffs, -v.const)
            return -v
        if isinstance(ast, Bin):
            return self.binop(ast)
        if isinstance(ast, Index):
            return self.index(ast)
        if isinstance(ast, Vec):
            return self.vector(ast)
        raise AssertionError(f"unhandled AST node {ast!r}")

    def vector(self, ast: Vec):
        items = [self.eval(item) for item in ast.items]
        for v in items:
            if isinstance(v, np.ndarray) or (isinstance(v, Affine) and not v.is_scalar):
                self.fail("vector literals cannot nest vectors")
        if any(isinstance(v, Affine) for v in items):
            affs = [_as_affine(v, self.n) for v in items]
            return Affine(
                np.stack([a.coeffs for a in affs]),
                np.array([float(a.const) for a in affs]),
            )
        return np.array([float(v) for v in items])

    def index(self, ast: Index):
        idx_v = self.eval(ast.index)
        if isinstance(idx_v, (Affine, np.ndarray)):
            self.fail("index must be a number")
        idx = int(round(idx_v))
        if abs(idx_v - idx) > 1e-9:
            self.fail(f"index {idx_v} is not an integer")
        base = self.eval(ast.base)
        if isinstance(base, Affine):
            if base.is_scalar:
                self.fail("cannot index a scalar expression")
            if not 0 <= idx < base.coeffs.shape[0]:
                self.fail(f"index {idx} out of range for length {base.coeffs.shape[0]}")
            return Affine(base.coeffs[idx], base.const[idx])
        if isinstance(base, np.ndarray):
            if not 0 <= idx < len(base):
                self.fail(f"index {idx} out of range for length {len(base)}")
            return float(base[idx])
        self.fail("cannot index a scalar value")

    def binop(self, ast: Bin):
        left = self.eval(ast.left)
        right = self.eval(ast.right)
        if ast.op in ("+", "-"):
            return self.addsub(ast.op, left, right)
        return self.mul(left, right)

    def addsub(self, op, left, right):
        if isinstance(left, Affine) or isinstance(right, Affine):
            la, ra = _as_affine(left, self.n), _as_affine(right, self.n)
            # broadcast scalar <-> vector
            if la.is_scalar and not ra.is_scalar:
                la = Affine(np.tile(la.coeffs, (ra.coeffs.shape[0], 1)),
                            np.full(ra.coeffs.shape[0], float(la.const)))
            elif ra.is_scalar and not la.is_scalar:
                ra = Affine(np.tile(ra.coeffs, (la.coeffs.shape[0], 1)),
                            np.full(la.coeffs.shape[0], float(ra.const)))
            if la.coeffs.shape != ra.coeffs.shape:
                self.fail(
                    f"dimension mismatch: {la.coeffs.shape[0]} vs {ra.coeffs.shape[0]}"
                )
            sign = 1.0 if op == "+" else -1.0
            return Affine(la.coeffs + sign * ra.coeffs, la.const + sign * ra.const)
        lv, rv = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
        if lv.ndim == 1 and rv.ndim == 1 and lv.shape != rv.shape:
            self.fail(f"dimension mismatch: {lv.shape[0]} vs {rv.shape[0]}")
        out = lv + rv if op == "+" else lv - rv
        return float(out) if out.ndim == 0 else out

    def mul(self, left, right):
        laff, raff = isinstance(left, Affine), isinstance(right, Affine)
        if laff and raff:
            self.fail("nonlinear term: product of two variable expressions")
        if laff or raff:
            aff, num = (left, right) if laff else (right, left)
            num_arr = np.asarray(num, dtype=float)
            if num_arr.ndim != 0:
                self.fail("variable expressions can only be scaled by scalars")
            k = float(num_arr)
            return Affine(aff.coeffs * k, aff.const * k)
        lv, rv = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
        if lv.ndim == 1 and rv.ndim == 1 and lv.shape != rv.shape:
            self.fail(f"dimension mismatch: {lv.shape[0]} vs {rv.shape[0]}")
        out = lv * rv
        return float(out) if out.ndim == 0 else out


def parse_numeric_file(data: bytes, name: str = "file") -> np.ndarray:
    """Parse an uploaded interface file as a vector of numbers.

    Accepts whitespace- or comma-separated values; lines starting with ``#``
    or ``%`` are comments.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScriptError(f"interface file {name!r} is not text: {exc}") from None
    tokens: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped[0] in "#%":
            continue
        tokens.extend(tok for tok in re.split(r"[,\s]+", stripped) if tok)
    try:
        return np.array([float(tok) for tok in tokens])
    except ValueError:
        raise ScriptError(f"interface file {name!r} does not contain numbers") from None


def _coerce_input(name: str, value) -> Union[float, str, np.ndarray]:
    if isinstance(value, bytes):
        return parse_numeric_file(value, name)
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        try:
            return np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ScriptError(f"input {name!r} is not numeric") from None
    raise ScriptError(f"input {name!r} has unsupported type {type(value).__name__}")


def instantiate(template: LPTemplate, inputs: Optional[dict] = None) -> LPInstance:
    """Resolve inputs, evaluate helpers in dependency order, build the LP."""
    t = template
    env: dict = {}
    supplied = inputs or {}
    for name, b in t.inputs.items():
        if name in supplied:
            env[name] = _coerce_input(name, supplied[name])
        elif b.default is not None:
            env[name] = _coerce_input(name, b.default)
        else:
            raise ScriptError(f"missing required input {name!r}", name)

    # Helpers in dependency order.
    assign_by_target = {}
    for h in t.helpers:
        for target, expr, line in h.assignments:
            assign_by_target[target] = (expr, h.component, line)
    evaluator = _Evaluator(env, var_blocks={}, n=t.n)
    visiting: set[str] = set()

    def resolve(target: str):
        if target in env:
            return
        if target in visiting:
            raise ScriptError(f"cyclic helper dependency involving {target!r}", target)
        visiting.add(target)
        expr, comp, line = assign_by_target[target]
        for ident in _walk_names(expr):
            if ident in assign_by_target or ident in t.inputs:
                resolve(ident)
        evaluator.comp, evaluator.line = comp, line
        env[target] = evaluator.eval(expr)
        visiting.discard(target)

    for target in assign_by_target:
        resolve(target)

    # Variable bounds.
    bounds: list[tuple[Optional[float], Optional[float]]] = []
    names: list[str] = []
    var_blocks = {v.name: (v.offset, v.size) for v in t.variables}
    for v in t.variables:
        lo = hi = None
        evaluator.comp, evaluator.line = v.name, v.line
        if v.lower is not None:
            lo = evaluator.eval(v.lower)
        if v.upper is not None:
            hi = evaluator.eval(v.upper)

        def spread(bound, what):
            if bound is None:
                return [None] * v.size
            arr = np.asarray(bound, dtype=float)
            if arr.ndim == 0:
                return [float(arr)] * v.size
            if arr.shape != (v.size,):
                raise ScriptError(
                    f"{what} bound has length {arr.shape[0]}, expected {v.size}",
                    v.name,
                    v.line,
                )
            return [float(x) for x in arr]

        lows, highs = spread(lo, "lower"), spread(hi, "upper")
        bounds.extend(zip(lows, highs))
        names.extend(
            [v.name] if v.size == 1 else [f"{v.name}[{i}]" for i in range(v.size)]
        )

    # Constraint rows.
    aff_eval = _Evaluator(env, var_blocks=var_blocks, n=t.n)
    rows: list[Row] = []
    for c in t.constraints:
        aff_eval.comp = c.component
        for lhs, rel, rhs, line in c.relations:
            aff_eval.line = line
            diff = aff_eval.addsub("-", aff_eval.eval(lhs), aff_eval.eval(rhs))
            diff = _as_affine(diff, t.n)
            coeffs = np.atleast_2d(diff.coeffs)
            consts = np.atleast_1d(diff.const)
            for a, k in zip(coeffs, consts):
                rows.append(Row(a=a.copy(), rel=rel, b=-float(k)))

    # Objective.
    aff_eval.comp, aff_eval.line = t.objective_component, None
    obj = _as_affine(aff_eval.eval(t.objective_expr), t.n)
    if not obj.is_scalar:
        raise ScriptError("objective must be a scalar expression", t.objective_component)
    if abs(float(obj.const)) > 1e-12:
        raise ScriptError(
            "objective has a constant term; fold it into an output expression",
            t.objective_component,
        )

    problem = LPProblem(
        n=t.n, sense=t.sense, c=obj.coeffs, rows=rows, bounds=bounds, names=names
    )

    # Solver parameters.
    feastol, maxiter = SolveParams().feastol, SolveParams().maxiter
    for param, expr, line, comp in t.solver_params:
        if param not in KNOWN_SOLVER_PARAMS:
            continue
        evaluator.comp, evaluator.line = comp, line
        value = evaluator.eval(expr)
        if isinstance(value, np.ndarray):
            raise ScriptError(f"solver parameter {param!r} must be a scalar", comp, line)
        if param == "feastol":
            feastol = float(value)
        else:
            if abs(value - round(value)) > 1e-9:
                raise ScriptError("maxiter must be an integer", comp, line)
            maxiter = int(round(value))
    try:
        params = SolveParams(feastol=feastol, maxiter=maxiter)
    except ValueError as exc:
        raise ScriptError(f"invalid solver parameters: {exc}") from None

    return LPInstance(
        template=t,
        problem=problem,
        params=params,
        values=env,
        warnings=list(t.warnings),
    )


def evaluate_outputs(instance: LPInstance, solution: LPSolution) -> dict:
    """Per-component results at the optimum.

    Output Object expressions are evaluated at the optimal point, each
    Execution component reports the solver info map, and the objective
    component reports the objective value.
    """
    if solution.status != STATUS_OPTIMAL:
        raise ValueError(f"outputs require an optimal solution, got {solution.status!r}")
    t = instance.template
    env = dict(instance.values)
    env["objective"] = float(solution.objective)
    for v in t.variables:
        block = solution.x[v.offset:v.offset + v.size]
        env[v.name] = np.asarray(block, dtype=float)

    evaluator = _Evaluator(env, var_blocks={}, n=t.n)
    results: dict = {t.objective_component: float(solution.objective)}
    for name in t.executions:
        results[name] = dict(solution.info)
    for o in t.outputs:
        evaluator.comp = o.component
        for target, expr, line in o.assignments:
            evaluator.line = line
            env[target] = evaluator.eval(expr)
        results[o.component] = _to_plain(env[o.component])
    return results


def _to_plain(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return float(value)
    return value
