"""Parser for group-algebra expressions with symbolic coefficients.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (['*' | '/'] factor)*       juxtaposition multiplies
    factor := ('-' | '+') factor | atom ('^' int)?
    atom   := number | identifier | '(' expr ')'

Identifiers are split greedily into declared parameters, state names and
``e``; a state followed by ``'`` is its inverse.  Division is only allowed
by scalars.  The result maps reduced words to sympy coefficients.
"""

from __future__ import annotations

import re
from typing import Sequence

import sympy as sp

from .group import IDENTITY_NAME, MealyAutomaton


class ExpressionError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()']))")


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionError(f"unexpected character {text[pos:].strip()[:1]!r} at {pos}")
        num, ident, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif ident is not None:
            out.append(("id", ident))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


def _normalize(terms: dict) -> dict:
    terms = {k: sp.expand(c) if c.is_polynomial() else sp.cancel(c) for k, c in terms.items()}
    return {k: c for k, c in terms.items() if c != 0}


def _add(u: dict, w: dict, sign=1) -> dict:
    out = dict(u)
    for k, c in w.items():
        out[k] = out.get(k, sp.Integer(0)) + sign * c
    return _normalize(out)


class _Parser:
    def __init__(self, aut: MealyAutomaton, params: dict, text: str):
        self.aut = aut
        self.params = params
        self.toks = _tokens(text)
        self.i = 0
        self.names = {nm: k + 1 for k, nm in enumerate(aut.names)}
        self.vocab = sorted(set(params) | set(self.names) | {IDENTITY_NAME}, key=len, reverse=True)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, val=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (val and tok[1] != val):
            raise ExpressionError(f"expected {val or kind}, got {tok[1] or 'end of input'}")
        self.i += 1
        return tok

    def parse(self):
        if not self.toks:
            raise ExpressionError("empty expression")
        out = self.expr()
        if self.peek()[0] is not None:
            raise ExpressionError(f"unexpected {self.peek()[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            sign = 1 if self.take()[1] == "+" else -1
            out = _add(out, self.term(), sign)
        return out

    def _starts_atom(self):
        kind, val = self.peek()
        return kind in ("num", "id") or (kind == "op" and val == "(")

    def term(self):
        out = self.factor()
        while True:
            kind, val = self.peek()
            if (kind, val) == ("op", "*"):
                self.take()
                out = self.mul(out, self.factor())
            elif (kind, val) == ("op", "/"):
                self.take()
                den = self.factor()
                if set(den) != {()}:
                    raise ExpressionError("division is only defined by scalars")
                out = {k: sp.together(c / den[()]) for k, c in out.items()}
            elif self._starts_atom():
                out = self.mul(out, self.factor())
            else:
                return out

    def factor(self):
        kind, val = self.peek()
        if (kind, val) == ("op", "-"):
            self.take()
            return {k: -c for k, c in self.factor().items()}
        if (kind, val) == ("op", "+"):
            self.take()
            return self.factor()
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            k = int(self.take("num")[1])
            out = {(): sp.Integer(1)}
            for _ in range(k):
                out = self.mul(out, base)
            return out
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return {(): sp.Rational(val)}
        if kind == "op" and val == "(":
            out = self.expr()
            self.take("op", ")")
            return out
        if kind == "id":
            return self.identifier(val)
        raise ExpressionError(f"unexpected {val!r}")

    def identifier(self, text):
        out = {(): sp.Integer(1)}
        pos = 0
        while pos < len(text):
            for name in self.vocab:
                if text.startswith(name, pos):
                    break
            else:
                raise ExpressionError(
                    f"unknown symbol in {text!r}; generators: {', '.join(self.aut.names)}"
                    + (f"; parameters: {', '.join(self.params)}" if self.params else ""))
            pos += len(name)
            if name in self.params:
                piece = {(): self.params[name]}
            elif name == IDENTITY_NAME:
                piece = {(): sp.Integer(1)}
            else:
                code = self.names[name]
                if pos == len(text) and self.peek() == ("op", "'"):
                    self.take()
                    code = -code
                piece = {(code,): sp.Integer(1)}
            out = self.mul(out, piece)
        return out

    def mul(self, u, w):
        out: dict = {}
        for ku, cu in u.items():
            for kw, cw in w.items():
                k = self.aut.multiply(ku, kw)
                out[k] = out.get(k, sp.Integer(0)) + cu * cw
        return _normalize(out)


def parse_combination(aut: MealyAutomaton, text: str, params: Sequence[str] = ()) -> dict:
    """Parse ``text`` to a map from reduced words to sympy coefficients."""
    symbols = {p: sp.Symbol(p) for p in params}
    clash = set(symbols) & (set(aut.names) | {IDENTITY_NAME})
    if clash:
        raise ExpressionError(f"parameter names clash with generators: {sorted(clash)}")
    return _Parser(aut, symbols, text).parse()
