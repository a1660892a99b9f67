"""Tiny arithmetic grammar for analytic fields in run files.

Supported: numbers, the coordinates ``x`` and ``y``, parentheses, unary
minus, and the operators ``+ - * / ^`` (with ``^`` right-associative).
Nothing else parses, which keeps run files language-agnostic and safe to
evaluate.
"""

from __future__ import annotations

import re

import numpy as np

__all__ = ["parse_expression", "ExpressionError"]


class ExpressionError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([xy])|([()+\-*/^]))")


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"cannot tokenize {text[pos:]!r}")
        num, var, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif var is not None:
            out.append(("var", var))
        else:
            out.append(("op", op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}, found {val!r}")

    # sum := product (('+'|'-') product)*
    def sum(self):
        node = self.product()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.take()
            rhs = self.product()
            node = ("+" if op == "+" else "-", node, rhs)
        return node

    # product := unary (('*'|'/') unary)*
    def product(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.take()
            rhs = self.unary()
            node = (op, node, rhs)
        return node

    # unary := ('-'|'+') unary | power      (so -x^2 means -(x^2))
    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    # power := atom ('^' unary)?            (right-associative, 2^-3 valid)
    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            return ("^", node, self.unary())
        return node

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ("num", val)
        if kind == "var":
            return ("var", val)
        if kind == "op" and val == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {val!r}")


def _evaluate(node, x, y):
    tag = node[0]
    if tag == "num":
        return np.full_like(x, node[1])
    if tag == "var":
        if node[1] == "y" and y is None:
            raise ExpressionError("variable 'y' used in a 1D field")
        return x if node[1] == "x" else y
    if tag == "neg":
        return -_evaluate(node[1], x, y)
    a = _evaluate(node[1], x, y)
    b = _evaluate(node[2], x, y)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        return a / b
    if tag == "^":
        return a ** b
    raise ExpressionError(f"unknown node {tag!r}")


def parse_expression(text):
    """Compile an expression into a callable of coordinate arrays.

    The callable takes ``coords`` of shape (n, dim) and returns (n,).
    """
    parser = _Parser(_tokenize(str(text)))
    tree = parser.sum()
    if parser.peek()[0] != "end":
        raise ExpressionError(f"trailing input near token {parser.peek()[1]!r}")

    def evaluate(coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        x = coords[:, 0]
        y = coords[:, 1] if coords.shape[1] > 1 else None
        out = _evaluate(tree, x, y)
        return np.asarray(out, dtype=float)

    return evaluate
