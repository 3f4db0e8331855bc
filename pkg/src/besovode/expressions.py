"""Small arithmetic expression grammar for inline problem definitions.

Grammar: variables x0..x{d-1}, s, t; binary + - * / ^ (power is right
associative); unary minus; functions sin, cos, exp, abs, tanh (one
argument) and min, max (two arguments); constants pi and e.  Evaluation
is deterministic and vectorizes over numpy array bindings.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ExpressionError

__all__ = ["compile_expression", "expression_eval"]

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_FUNCTIONS_1 = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "tanh": np.tanh,
}
_FUNCTIONS_2 = {"min": np.minimum, "max": np.maximum}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN.match(src, pos)
        if match is None or match.end() == match.start():
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            at = len(src) - len(stripped)
            raise ExpressionError(f"unexpected character {stripped[0]!r}", at)
        if match.lastgroup == "number":
            tokens.append(("number", match.group("number"), match.start("number")))
        elif match.lastgroup == "name":
            tokens.append(("name", match.group("name"), match.start("name")))
        else:
            tokens.append(("op", match.group("op"), match.start("op")))
        pos = match.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variables: tuple[str, ...]):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value, at = self.peek()
        if kind != "op" or value != symbol:
            raise ExpressionError(f"expected {symbol!r}", at)
        self.advance()

    def parse(self):
        node = self.expression()
        kind, value, at = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected trailing {value!r}", at)
        return node

    def expression(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = ("add" if value == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.power()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.power()
                node = ("mul" if value == "*" else "div", node, rhs)
            else:
                return node

    def power(self):
        base = self.unary()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return ("pow", base, self.power())  # right associative
        return base

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return ("neg", self.unary())
        if kind == "op" and value == "+":
            self.advance()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, value, at = self.advance()
        if kind == "number":
            return ("const", float(value))
        if kind == "name":
            if value in _CONSTANTS:
                return ("const", _CONSTANTS[value])
            if value in _FUNCTIONS_1 or value in _FUNCTIONS_2:
                self.expect_op("(")
                first = self.expression()
                if value in _FUNCTIONS_2:
                    self.expect_op(",")
                    second = self.expression()
                    self.expect_op(")")
                    return ("call2", value, first, second)
                self.expect_op(")")
                return ("call1", value, first)
            if value in self.variables:
                return ("var", value)
            raise ExpressionError(
                f"unknown name {value!r} (variables here: {sorted(self.variables)})", at
            )
        if kind == "op" and value == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected {value!r}" if value else "unexpected end of input", at)


def _evaluate(node, env):
    op = node[0]
    if op == "const":
        return node[1]
    if op == "var":
        return env[node[1]]
    if op == "neg":
        return -_evaluate(node[1], env)
    if op == "add":
        return _evaluate(node[1], env) + _evaluate(node[2], env)
    if op == "sub":
        return _evaluate(node[1], env) - _evaluate(node[2], env)
    if op == "mul":
        return _evaluate(node[1], env) * _evaluate(node[2], env)
    if op == "div":
        return _evaluate(node[1], env) / _evaluate(node[2], env)
    if op == "pow":
        return _evaluate(node[1], env) ** _evaluate(node[2], env)
    if op == "call1":
        return _FUNCTIONS_1[node[1]](_evaluate(node[2], env))
    if op == "call2":
        return _FUNCTIONS_2[node[1]](_evaluate(node[2], env), _evaluate(node[3], env))
    raise ExpressionError(f"corrupt expression node {op!r}")


def compile_expression(src: str, variables: tuple[str, ...]):
    """Parse once, returning a callable over an environment dict."""
    tree = _Parser(src, variables).parse()

    def run(env: dict):
        return _evaluate(tree, env)

    run.source = src
    return run


def expression_eval(src: str, x=None, s: float | None = None, t=None):
    """One-shot evaluation with vector x bound to x0, x1, ... plus s, t."""
    env = {}
    variables = []
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        for i, xi in enumerate(x):
            env[f"x{i}"] = xi
            variables.append(f"x{i}")
    if s is not None:
        env["s"] = s
        variables.append("s")
    if t is not None:
        env["t"] = t
        variables.append("t")
    return compile_expression(src, tuple(variables))(env)
