"""
A small arithmetic expression language for user-supplied nonlinearities.

    expr   := unary (op expr)*          precedence climbing over OPERATORS
    unary  := "-" unary | power
    atom   := number | name | function "(" expr ")" | "(" expr ")"

Variables: t, y1..yn, yk_re / yk_im (real and imaginary parts of yk) and any
declared parameter. Constants: pi, e. Functions: sin cos abs sqrt exp sech.
Implicit multiplication ("2t", "a(t)") is rejected.
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Set, Union

import numpy as np

from services.errors import ExpressionError
from services.nonlinearity import NonlinearitySpec

logger = logging.getLogger(__name__)

# groups of increasing binding power
OPERATORS = [
    [("+", "left"), ("-", "left")],
    [("*", "left"), ("/", "left")],
    [("^", "right")],
]
OPERATOR_PREC = {name: idx for idx, group in enumerate(OPERATORS) for name, _ in group}
OPERATOR_ASSOC = {name: assoc for group in OPERATORS for name, assoc in group}
UNARY_PREC = OPERATOR_PREC["^"]


def _sech(x):
    return 1.0 / np.cosh(x)


FUNCTIONS: Dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "sech": _sech,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_STATE_VARIABLE = re.compile(r"^y([1-9][0-9]*)(_re|_im)?$")
_NUMBER = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class Token(NamedTuple):
    kind: str  # number | name | op | lparen | rparen
    value: Union[str, float]
    position: int


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    idx = 0
    while idx < len(source):
        c = source[idx]
        if c.isspace():
            idx += 1
            continue
        number = _NUMBER.match(source, idx)
        if number:
            tokens.append(Token("number", float(number.group()), idx))
            idx = number.end()
            continue
        name = _NAME.match(source, idx)
        if name:
            tokens.append(Token("name", name.group(), idx))
            idx = name.end()
            continue
        if c in OPERATOR_PREC:
            tokens.append(Token("op", c, idx))
        elif c == "(":
            tokens.append(Token("lparen", c, idx))
        elif c == ")":
            tokens.append(Token("rparen", c, idx))
        else:
            raise ExpressionError(f"unexpected character {c!r}", idx)
        idx += 1
    return tokens


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str
    position: int


@dataclass(frozen=True)
class Negate:
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    position: int


@dataclass(frozen=True)
class Call:
    function: str
    argument: "Node"


Node = Union[Number, Variable, Negate, Binary, Call]


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.idx = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.idx] if self.idx < len(self.tokens) else None

    def advance(self) -> Token:
        token = self.peek()
        if token is None:
            raise ExpressionError("unexpected end of input", len(self.source))
        self.idx += 1
        return token

    def expect_rparen(self) -> None:
        token = self.peek()
        if token is None or token.kind != "rparen":
            where = len(self.source) if token is None else token.position
            raise ExpressionError("expected closing parenthesis", where)
        self.idx += 1

    def atom(self) -> Node:
        token = self.advance()
        if token.kind == "op" and token.value == "-":
            return Negate(self.parse(UNARY_PREC))
        if token.kind == "lparen":
            inner = self.parse(0)
            self.expect_rparen()
            return inner
        if token.kind == "number":
            return Number(float(token.value))
        if token.kind == "name":
            following = self.peek()
            if token.value in FUNCTIONS:
                if following is None or following.kind != "lparen":
                    raise ExpressionError(f"function {token.value} needs an argument in parentheses", token.position)
                self.idx += 1
                argument = self.parse(0)
                self.expect_rparen()
                return Call(token.value, argument)
            if following is not None and following.kind == "lparen":
                raise ExpressionError(f"unknown function {token.value!r}", token.position)
            return Variable(token.value, token.position)
        raise ExpressionError(f"unexpected {token.value!r}", token.position)

    def parse(self, min_prec: int) -> Node:
        lhs = self.atom()
        while True:
            token = self.peek()
            if token is None or token.kind == "rparen":
                return lhs
            if token.kind != "op":
                raise ExpressionError("implicit multiplication is not allowed", token.position)
            prec = OPERATOR_PREC[token.value]
            if prec < min_prec:
                return lhs
            self.idx += 1
            next_prec = prec + 1 if OPERATOR_ASSOC[token.value] == "left" else prec
            rhs = self.parse(next_prec)
            lhs = Binary(token.value, lhs, rhs, token.position)


def _names(node: Node) -> Set[str]:
    if isinstance(node, Variable):
        return {node.name}
    if isinstance(node, Negate):
        return _names(node.operand)
    if isinstance(node, Binary):
        return _names(node.left) | _names(node.right)
    if isinstance(node, Call):
        return _names(node.argument)
    return set()


def _evaluate(node: Node, env: Dict[str, np.ndarray]):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise ExpressionError(f"unknown variable {node.name!r}", node.position)
    if isinstance(node, Negate):
        return -_evaluate(node.operand, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.function](_evaluate(node.argument, env))

    left = _evaluate(node.left, env)
    right = _evaluate(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            raise ExpressionError("division by zero", node.position)
        return left / right
    if np.any((np.asarray(left) == 0) & (np.real(np.asarray(right)) < 0)):
        raise ExpressionError("division by zero (zero to a negative power)", node.position)
    return np.power(left, right)


@dataclass(frozen=True)
class Expression:
    """A parsed expression and its source text."""

    source: str
    tree: Node

    def names(self) -> Set[str]:
        return _names(self.tree)

    def state_indices(self) -> Set[int]:
        indices = set()
        for name in self.names():
            match = _STATE_VARIABLE.match(name)
            if match:
                indices.add(int(match.group(1)))
        return indices

    def evaluate(self, env: Dict[str, np.ndarray]):
        return _evaluate(self.tree, env)


def parse_expression(source: str) -> Expression:
    parser = _Parser(source)
    if not parser.tokens:
        raise ExpressionError("empty expression", 0)
    tree = parser.parse(0)
    leftover = parser.peek()
    if leftover is not None:
        raise ExpressionError(f"unexpected {leftover.value!r}", leftover.position)
    return Expression(source=source, tree=tree)


def _check_names(expression: Expression, dim: int, parameters: Dict[str, complex]) -> None:
    for name in sorted(expression.names()):
        if name in ("t",) or name in CONSTANTS or name in parameters:
            continue
        match = _STATE_VARIABLE.match(name)
        if match is None:
            raise ExpressionError(f"unknown variable {name!r} in {expression.source!r}")
        if int(match.group(1)) > dim:
            raise ExpressionError(f"{name} exceeds the state dimension {dim} in {expression.source!r}")


def compile_nonlinearity(
    components: Sequence[str],
    parameters: Optional[Dict[str, complex]] = None,
    L: Optional[float] = None,
    g1: Optional[float] = None,
    g2: Optional[float] = None,
    c1_declared: bool = False,
    name: str = "expression",
    real_domain: bool = True,
) -> NonlinearitySpec:
    """
    Build g(t, y) = (component_1, ..., component_n) from expression strings.

    The dimension is the number of components; every state variable must lie
    within it.
    """
    parameters = dict(parameters or {})
    reserved = {"t"} | set(CONSTANTS) | set(FUNCTIONS)
    for key in parameters:
        if key in reserved or _STATE_VARIABLE.match(key):
            raise ExpressionError(f"parameter name {key!r} is reserved")
    dim = len(components)
    if dim == 0:
        raise ExpressionError("at least one component is required")
    expressions = [parse_expression(text) for text in components]
    for expression in expressions:
        _check_names(expression, dim, parameters)

    def evaluate(t, y):
        y = np.asarray(y, dtype=np.complex128)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(t.shape, y.shape[:-1])
        env: Dict[str, np.ndarray] = dict(parameters)
        env["t"] = t
        for i in range(dim):
            env[f"y{i + 1}"] = y[..., i]
            env[f"y{i + 1}_re"] = y[..., i].real
            env[f"y{i + 1}_im"] = y[..., i].imag
        columns = [np.broadcast_to(np.asarray(e.evaluate(env), dtype=np.complex128), shape) for e in expressions]
        return np.stack(columns, axis=-1)

    logger.debug("Compiled %s components: %s", dim, [e.source for e in expressions])
    return NonlinearitySpec(
        evaluate=evaluate,
        dim=dim,
        name=name,
        L=L,
        g1=g1,
        g2=g2,
        c1_declared=c1_declared,
        real_domain=real_domain,
        parameters=parameters,
    )
