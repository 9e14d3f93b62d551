"""Parsing and evaluation of scalar math expressions.

Expressions are the text form used for displacement formulas, gauge
densities, right-hand sides and test functions.  The grammar is small
and fixed:

    expr    := addsub
    addsub  := muldiv (('+' | '-') muldiv)*
    muldiv  := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

'+', '-', '*', '/' associate to the left, '^' to the right, and '^'
binds tighter than unary minus, which binds tighter than '*' and '/'.
NUMBER is a plain decimal literal (digits, optional fraction); there is
no scientific notation, which keeps the identifier 'e' unambiguous as
Euler's constant.  Known constants are 'pi' and 'e'; known functions
are exp, ln, sin, cos, sqrt, abs (unary) and min, max (binary).  Any
other identifier must be declared as a variable at parse time.

Evaluation is strict about domains: division by zero, ln of a
non-positive number, sqrt of a negative number, fractional powers of
negative bases and indeterminate bit patterns (NaN) all raise
DomainError naming the offending sub-expression.  A finite expression
evaluated twice on the same bindings returns bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Mapping, Union

__all__ = [
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "ArityError",
    "EvalError",
    "DomainError",
    "MissingBindingError",
    "Expr",
    "parse",
    "evaluate",
    "substitute",
]


class ExprError(Exception):
    """Base class for expression parsing and evaluation failures."""


class ParseError(ExprError):
    """Syntax error, reported with position and the expected token set."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if expected:
            detail += " (expected " + " or ".join(expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    """Identifier that is not a constant, function, or declared variable."""

    def __init__(self, name: str, position: int):
        self.name = name
        super().__init__(f"unknown identifier '{name}'", position)


class ArityError(ParseError):
    """Function called with the wrong number of arguments."""

    def __init__(self, func: str, expected: int, got: int, position: int):
        self.func = func
        super().__init__(
            f"function '{func}' takes {expected} argument(s), got {got}", position
        )


class EvalError(ExprError):
    """Base class for evaluation failures."""


class DomainError(EvalError):
    """Mathematical domain violation, attributed to a sub-expression."""

    def __init__(self, message: str, fragment: str):
        self.fragment = fragment
        super().__init__(f"{message} in '{fragment}'")


class MissingBindingError(EvalError):
    """A free variable had no value in the bindings."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no binding for variable '{name}'")


# AST nodes.  All frozen, so Expr values are immutable and hashable.

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Num, Var, Const, Unary, Binary, Call]

_CONSTANTS = {"pi": math.pi, "e": math.e}
_ARITY = {"exp": 1, "ln": 1, "sin": 1, "cos": 1, "sqrt": 1, "abs": 1,
          "min": 2, "max": 2}


@dataclass(frozen=True)
class Expr:
    """A parsed expression: ast, original source, declared variables."""

    ast: Node
    source: str
    variables: frozenset[str]
    free: frozenset[str]

    def __call__(self, **bindings: float) -> float:
        return evaluate(self, bindings)

    def to_source(self) -> str:
        """Render the ast back to text; reparsing yields an equal ast."""
        return _unparse(self.ast, 0)


# --- tokenizer ---

_OPS = "+-*/^"


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("number", source[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("ident", source[i:j], i))
            i = j
            continue
        if ch in _OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch == "(":
            tokens.append(("lparen", ch, i))
            i += 1
            continue
        if ch == ")":
            tokens.append(("rparen", ch, i))
            i += 1
            continue
        if ch == ",":
            tokens.append(("comma", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character '{ch}'", i)
    tokens.append(("end", "", n))
    return tokens


# --- parser ---

class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], variables: frozenset[str]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.free: set[str] = set()

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(
                f"unexpected {tok[0] if tok[0] != 'end' else 'end of input'}"
                + (f" '{tok[1]}'" if tok[1] else ""),
                tok[2],
                expected,
            )
        return self.take()

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = Binary(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("-", self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            # exponent re-enters at unary so '2^-3' parses, right-associative
            return Binary("^", base, self.parse_unary())
        return base

    def parse_atom(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "number":
            self.take()
            return Num(float(text))
        if kind == "lparen":
            self.take()
            node = self.parse_expr()
            self.expect("rparen", (")",))
            return node
        if kind == "ident":
            self.take()
            if self.peek()[0] == "lparen":
                if text not in _ARITY:
                    raise UnknownIdentifierError(text, pos)
                self.take()
                args = [self.parse_expr()]
                while self.peek()[0] == "comma":
                    self.take()
                    args.append(self.parse_expr())
                self.expect("rparen", (")", ","))
                if len(args) != _ARITY[text]:
                    raise ArityError(text, _ARITY[text], len(args), pos)
                return Call(text, tuple(args))
            if text in _CONSTANTS:
                return Const(text)
            if text in self.variables:
                self.free.add(text)
                return Var(text)
            raise UnknownIdentifierError(text, pos)
        raise ParseError(
            f"unexpected {kind if kind != 'end' else 'end of input'}"
            + (f" '{text}'" if text else ""),
            pos,
            ("number", "identifier", "(", "-"),
        )


def parse(source: str, variables=()) -> Expr:
    """Parse source text into an Expr.

    Args:
        source: expression text.
        variables: iterable of identifier names allowed as free variables.

    Raises:
        ParseError: on syntax errors (with position and expected tokens),
            unknown identifiers, or arity mismatches.
    """
    declared = frozenset(variables)
    parser = _Parser(_tokenize(source), declared)
    ast = parser.parse_expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ParseError(
            f"trailing input '{tok[1]}'", tok[2], ("end of input",)
        )
    return Expr(ast=ast, source=source, variables=declared,
                free=frozenset(parser.free))


# --- evaluation ---

def _pow(base: float, exponent: float, node: Node) -> float:
    if base == 0.0 and exponent < 0.0:
        raise DomainError("zero raised to a negative power", _unparse(node, 0))
    if base < 0.0 and exponent != math.floor(exponent):
        raise DomainError("negative base with fractional exponent", _unparse(node, 0))
    try:
        return math.pow(base, exponent)
    except OverflowError:
        sign = -1.0 if (base < 0.0 and math.floor(exponent) % 2 == 1) else 1.0
        return math.copysign(math.inf, sign)


def _eval(node: Node, bindings: Mapping[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return _CONSTANTS[node.name]
    if isinstance(node, Var):
        if node.name not in bindings:
            raise MissingBindingError(node.name)
        return float(bindings[node.name])
    if isinstance(node, Unary):
        return -_eval(node.operand, bindings)
    if isinstance(node, Binary):
        left = _eval(node.left, bindings)
        right = _eval(node.right, bindings)
        if node.op == "+":
            value = left + right
        elif node.op == "-":
            value = left - right
        elif node.op == "*":
            value = left * right
        elif node.op == "/":
            if right == 0.0:
                raise DomainError("division by zero", _unparse(node, 0))
            value = left / right
        else:
            value = _pow(left, right, node)
        if math.isnan(value):
            raise DomainError("indeterminate value", _unparse(node, 0))
        return value
    if isinstance(node, Call):
        args = [_eval(arg, bindings) for arg in node.args]
        fragment = lambda: _unparse(node, 0)
        func = node.func
        if func == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                return math.inf
        if func == "ln":
            if args[0] <= 0.0:
                raise DomainError("ln of a non-positive number", fragment())
            return math.log(args[0])
        if func == "sin":
            return math.sin(args[0])
        if func == "cos":
            return math.cos(args[0])
        if func == "sqrt":
            if args[0] < 0.0:
                raise DomainError("sqrt of a negative number", fragment())
            return math.sqrt(args[0])
        if func == "abs":
            return abs(args[0])
        if func == "min":
            return min(args)
        return max(args)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(expr: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate an Expr on a variable binding.

    Raises:
        MissingBindingError: if a free variable has no value.
        DomainError: on mathematical domain violations; the message names
            the offending sub-expression.
    """
    return _eval(expr.ast, bindings)


# --- unparsing ---

# precedence levels used for minimal parenthesisation
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "u-": 3, "^": 4}
_ATOM_PREC = 5


def _num_source(value: float) -> str:
    # grammar has no scientific notation, so spell the digits out
    text = repr(value)
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    return text


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _PREC["u-"]
    return _ATOM_PREC


def _unparse(node: Node, parent_prec: int) -> str:
    if isinstance(node, Num):
        return _num_source(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return node.func + "(" + ", ".join(_unparse(a, 0) for a in node.args) + ")"
    if isinstance(node, Unary):
        text = "-" + _unparse(node.operand, _PREC["u-"])
        return "(" + text + ")" if parent_prec > _PREC["u-"] else text
    if isinstance(node, Binary):
        prec = _PREC[node.op]
        if node.op == "^":
            left = _unparse(node.left, prec + 1)
            right = _unparse(node.right, prec)
            text = f"{left}^{right}"
        else:
            left = _unparse(node.left, prec)
            right = _unparse(node.right, prec + 1)
            text = f"{left} {node.op} {right}"
        return "(" + text + ")" if parent_prec > prec else text
    raise TypeError(f"not an expression node: {node!r}")


def substitute(expr: Expr, mapping: Mapping[str, Union[Expr, float]]) -> Expr:
    """Replace variables with sub-expressions or numeric constants.

    Returns a new Expr whose source is the rendered result; variables not
    mentioned in the mapping are kept.
    """
    replacements: dict[str, Node] = {}
    for name, value in mapping.items():
        if isinstance(value, Expr):
            replacements[name] = value.ast
        else:
            v = float(value)
            replacements[name] = Unary("-", Num(-v)) if v < 0 else Num(v)

    def walk(node: Node) -> Node:
        if isinstance(node, Var) and node.name in replacements:
            return replacements[node.name]
        if isinstance(node, Unary):
            return Unary(node.op, walk(node.operand))
        if isinstance(node, Binary):
            return Binary(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return Call(node.func, tuple(walk(a) for a in node.args))
        return node

    new_ast = walk(expr.ast)
    # recompute free variables by walking the new tree
    free: set[str] = set()
    stack = [new_ast]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            free.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.operand)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
        elif isinstance(node, Call):
            stack.extend(node.args)
    source = _unparse(new_ast, 0)
    variables = (expr.variables - set(replacements)) | free
    return Expr(ast=new_ast, source=source, variables=frozenset(variables),
                free=frozenset(free))


def as_function(expr: Expr, *names: str) -> Callable[..., float]:
    """Wrap an Expr as a positional-argument callable, e.g. f(t) or f(t, u)."""
    def fn(*values: float) -> float:
        return evaluate(expr, dict(zip(names, values)))
    return fn
