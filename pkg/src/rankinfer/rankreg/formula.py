"""Mini-grammar for model formulas.

    formula     := ranked_term "~" rhs
    rhs         := term_sum
                 | "(" term_sum ")" ":" identifier
                 | term ":" identifier
    term_sum    := term ("+" term)*
    term        := identifier | "r(" identifier ")"
    ranked_term := "r(" identifier ")" | identifier

Whitespace-insensitive. Wrapping a column in r() marks it for rank
transformation; ":" interacts every term (and the implicit intercept)
with a grouping column. Examples: "r(Y) ~ r(X)", "r(Y) ~ (r(X) + W):G",
"r(Y) ~ r(X):G".
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import FormulaError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<sym>[~+():]))"
)


@dataclass(frozen=True)
class ParsedFormula:
    response: str
    response_ranked: bool
    terms: tuple[tuple[str, bool], ...]
    group: str | None


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", one of "~+():", or "end"
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            bad = pos + (len(text) - pos - len(rest))
            raise FormulaError(f"unexpected character {text[bad]!r}", bad)
        if match.group("ident") is not None:
            tokens.append(_Token("ident", match.group("ident"), match.start("ident")))
        else:
            sym = match.group("sym")
            tokens.append(_Token(sym, sym, match.start("sym")))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.idx = 0

    def peek(self) -> _Token:
        return self.tokens[self.idx]

    def advance(self) -> _Token:
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise FormulaError(f"expected {what}", tok.pos)
        return self.advance()

    def parse_term(self) -> tuple[str, bool]:
        tok = self.expect("ident", "a column name or r(...)")
        if tok.value == "r" and self.peek().kind == "(":
            self.advance()
            name = self.expect("ident", "a column name inside r()")
            self.expect(")", "')' closing r()")
            return name.value, True
        return tok.value, False

    def parse_term_sum(self) -> list[tuple[str, bool]]:
        terms = [self.parse_term()]
        while self.peek().kind == "+":
            self.advance()
            terms.append(self.parse_term())
        return terms

    def parse(self) -> ParsedFormula:
        response, response_ranked = self.parse_term()
        self.expect("~", "'~' between response and regressors")
        group: str | None = None
        if self.peek().kind == "(":
            self.advance()
            terms = self.parse_term_sum()
            self.expect(")", "')' closing the grouped terms")
            self.expect(":", "':' and a grouping column after ')'")
            group = self.expect("ident", "a grouping column name").value
        else:
            terms = self.parse_term_sum()
            if self.peek().kind == ":":
                colon = self.advance()
                if len(terms) != 1:
                    raise FormulaError(
                        "group interaction over several terms needs parentheses",
                        colon.pos,
                    )
                group = self.expect("ident", "a grouping column name").value
        tail = self.peek()
        if tail.kind != "end":
            raise FormulaError("unexpected trailing input", tail.pos)
        return ParsedFormula(
            response=response,
            response_ranked=response_ranked,
            terms=tuple(terms),
            group=group,
        )


def parse_formula(text: str) -> ParsedFormula:
    """Parse a model formula; raises FormulaError with the 0-based
    offset of the first problem."""
    return _Parser(text).parse()


def format_formula_error(text: str, err: FormulaError) -> str:
    """Two-line rendering: the formula and a caret under the offending
    position (omitted for position-less validation errors)."""
    if err.position is None:
        return str(err)
    caret = " " * err.position + "^"
    return f"{err}\n  {text}\n  {caret}"
