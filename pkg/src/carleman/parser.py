"""Text format for recurrence systems.

A system is a `vars:` header followed by one equation per declared
variable, one equation per line:

    vars: u, v
    u[i] = 8*u[i-1] + 10*v[i-1] + u[i-1]^2
    v[i] = -3*u[i-1] + v[i-1]^2

Right-hand sides are polynomial expressions in lagged references
`name[i-j]` with j >= 1. Multiplication is always explicit (`*`),
exponents are non-negative integer literals, and `/` is legal only
inside a rational literal such as `3/4` (written without spaces).
Decimal literals like `0.5` mean the exact decimal fraction and are
converted per scalar mode when lowering.

Parsing is two-stage: parse() builds a span-carrying syntax tree and
validates names and lags; lower() turns the tree into a PolySystem over
the flattened lag variables (lag-1 variables first, then lag-2, and so
on). pretty_print() renders a system back to canonical text: terms in
descending total degree, ties in the monomial-basis order, coefficient
1 omitted, exponent 1 omitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import CarlemanError, NonPolynomialError, ParseError, SourceSpan
from .poly import Poly
from .scalars import Mode, Scalar, format_scalar
from .systems import PolySystem

# -- lexer ----------------------------------------------------------------

_SIMPLE_TOKENS = {
    "+": "PLUS", "-": "MINUS", "*": "STAR", "^": "CARET", "/": "SLASH",
    "(": "LPAREN", ")": "RPAREN", "[": "LBRACK", "]": "RBRACK",
    "=": "EQUALS", ",": "COMMA", ":": "COLON",
}


@dataclass
class Token:
    kind: str
    text: str
    span: SourceSpan
    value: Optional[Fraction] = None
    is_integer: bool = False


def _make_span(text: str, start: int, end: int) -> SourceSpan:
    line = text.count("\n", 0, start) + 1
    line_start = text.rfind("\n", 0, start) + 1
    return SourceSpan(start, end, line, start - line_start + 1)


def _tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r":
            i += 1
            continue
        if ch == "\n":
            if tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", _make_span(text, i, i + 1)))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_integer = True
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                is_integer = False
            elif j < n and text[j] == "/" and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                is_integer = False
            lexeme = text[i:j]
            span = _make_span(text, i, j)
            try:
                value = Fraction(lexeme)
            except ZeroDivisionError:
                raise ParseError(f"zero denominator in literal {lexeme!r}", span)
            tokens.append(Token("NUMBER", lexeme, span, value,
                                is_integer and value.denominator == 1))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], _make_span(text, i, j)))
            i = j
            continue
        kind = _SIMPLE_TOKENS.get(ch)
        if kind is None:
            raise ParseError(f"unexpected character {ch!r}", _make_span(text, i, i + 1))
        tokens.append(Token(kind, ch, _make_span(text, i, i + 1)))
        i += 1
    end_span = _make_span(text, n, n)
    if tokens and tokens[-1].kind != "NEWLINE":
        tokens.append(Token("NEWLINE", "", end_span))
    tokens.append(Token("EOF", "", end_span))
    return tokens


# -- syntax tree ------------------------------------------------------------


@dataclass
class NumberNode:
    value: Fraction
    span: SourceSpan


@dataclass
class VarRefNode:
    name: str
    lag: int
    span: SourceSpan


@dataclass
class BinaryNode:
    op: str  # '+', '-', '*'
    left: object
    right: object
    span: SourceSpan


@dataclass
class PowerNode:
    base: object
    exponent: int
    span: SourceSpan


@dataclass
class EquationNode:
    name: str
    name_span: SourceSpan
    rhs: object


@dataclass
class SystemNode:
    variables: List[str]
    variable_spans: List[SourceSpan]
    equations: List[EquationNode]
    max_lag: int


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {what}, found {tok.text!r}" if tok.text
                             else f"expected {what}, found end of input", tok.span)
        return self.advance()

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.advance()

    # header: 'vars' ':' ident (',' ident)*
    def parse_header(self) -> Tuple[List[str], List[SourceSpan]]:
        self.skip_newlines()
        lead = self.peek()
        if lead.kind != "IDENT" or lead.text != "vars":
            raise ParseError("expected 'vars:' header", lead.span)
        self.advance()
        self.expect("COLON", "':' after 'vars'")
        names: List[str] = []
        spans: List[SourceSpan] = []
        while True:
            tok = self.expect("IDENT", "a variable name")
            if tok.text == "i":
                raise ParseError("'i' is reserved for the recurrence index", tok.span)
            if tok.text in names:
                raise ParseError(f"variable {tok.text!r} declared twice", tok.span)
            names.append(tok.text)
            spans.append(tok.span)
            if self.peek().kind == "COMMA":
                self.advance()
                continue
            break
        self.expect("NEWLINE", "end of header line")
        return names, spans

    def parse_equation(self, declared: Sequence[str]) -> EquationNode:
        name_tok = self.expect("IDENT", "a variable name starting an equation")
        if name_tok.text not in declared:
            raise ParseError(f"undeclared variable {name_tok.text!r}", name_tok.span)
        self.expect("LBRACK", "'[' after the variable name")
        idx_tok = self.expect("IDENT", "the recurrence index 'i'")
        if idx_tok.text != "i":
            raise ParseError("the left side must be indexed by 'i'", idx_tok.span)
        self.expect("RBRACK", "']' closing the left side (left sides are not lagged)")
        self.expect("EQUALS", "'='")
        rhs = self.parse_expr(declared)
        trailing = self.peek()
        if trailing.kind not in ("NEWLINE", "EOF"):
            if trailing.kind == "SLASH":
                raise NonPolynomialError(
                    "division is only allowed inside a rational literal like 3/4",
                    trailing.span)
            raise ParseError(
                "expected '+', '-', or end of equation "
                "(multiplication must use an explicit '*')", trailing.span)
        self.skip_newlines()
        return EquationNode(name_tok.text, name_tok.span, rhs)

    def parse_expr(self, declared: Sequence[str]):
        node = self.parse_term(declared)
        while self.peek().kind in ("PLUS", "MINUS"):
            op_tok = self.advance()
            right = self.parse_term(declared)
            node = BinaryNode("+" if op_tok.kind == "PLUS" else "-",
                              node, right, op_tok.span)
        return node

    def parse_term(self, declared: Sequence[str]):
        node = self.parse_factor(declared)
        while True:
            tok = self.peek()
            if tok.kind == "STAR":
                self.advance()
                right = self.parse_factor(declared)
                node = BinaryNode("*", node, right, tok.span)
            elif tok.kind == "SLASH":
                raise NonPolynomialError(
                    "division is only allowed inside a rational literal like 3/4",
                    tok.span)
            else:
                return node

    def parse_factor(self, declared: Sequence[str]):
        node = self.parse_base(declared)
        if self.peek().kind == "CARET":
            caret = self.advance()
            exp_tok = self.peek()
            if exp_tok.kind != "NUMBER" or not exp_tok.is_integer or exp_tok.value < 0:
                raise ParseError("exponent must be a non-negative integer literal",
                                 exp_tok.span if exp_tok.kind != "EOF" else caret.span)
            self.advance()
            return PowerNode(node, int(exp_tok.value), caret.span)
        return node

    def parse_base(self, declared: Sequence[str]):
        tok = self.peek()
        if tok.kind in ("PLUS", "MINUS") and self.peek(1).kind == "NUMBER":
            sign_tok = self.advance()
            num_tok = self.advance()
            value = num_tok.value if sign_tok.kind == "PLUS" else -num_tok.value
            return NumberNode(value, sign_tok.span)
        if tok.kind == "NUMBER":
            self.advance()
            return NumberNode(tok.value, tok.span)
        if tok.kind == "IDENT":
            return self.parse_var_ref(declared)
        if tok.kind == "LPAREN":
            self.advance()
            node = self.parse_expr(declared)
            self.expect("RPAREN", "')'")
            return node
        if tok.kind == "SLASH":
            raise NonPolynomialError(
                "division is only allowed inside a rational literal like 3/4", tok.span)
        found = f", found {tok.text!r}" if tok.text else ""
        raise ParseError(f"expected a number, variable reference, or '('{found}",
                         tok.span)

    def parse_var_ref(self, declared: Sequence[str]) -> VarRefNode:
        name_tok = self.advance()
        if name_tok.text not in declared:
            raise ParseError(f"undeclared variable {name_tok.text!r}", name_tok.span)
        self.expect("LBRACK", "'[' after the variable name")
        idx_tok = self.expect("IDENT", "the recurrence index 'i'")
        if idx_tok.text != "i":
            raise ParseError("references must be indexed by 'i'", idx_tok.span)
        nxt = self.peek()
        if nxt.kind == "RBRACK":
            raise ParseError(
                f"right-side references need a positive lag: {name_tok.text}[i-1]",
                nxt.span)
        if nxt.kind != "MINUS":
            raise ParseError("expected '-' introducing the lag", nxt.span)
        self.advance()
        lag_tok = self.peek()
        if lag_tok.kind != "NUMBER" or not lag_tok.is_integer:
            raise ParseError("lag must be an integer literal", lag_tok.span)
        self.advance()
        lag = int(lag_tok.value)
        if lag < 1:
            raise ParseError(f"lag must be at least 1, got {lag}", lag_tok.span)
        close = self.expect("RBRACK", "']'")
        span = SourceSpan(name_tok.span.start, close.span.end,
                          name_tok.span.line, name_tok.span.column)
        return VarRefNode(name_tok.text, lag, span)


def parse(text: str) -> SystemNode:
    """Parse DSL text into a validated syntax tree."""
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    names, name_spans = parser.parse_header()
    equations: Dict[str, EquationNode] = {}
    parser.skip_newlines()
    while parser.peek().kind != "EOF":
        eq = parser.parse_equation(names)
        if eq.name in equations:
            raise ParseError(f"duplicate equation for {eq.name!r}", eq.name_span)
        equations[eq.name] = eq
        parser.skip_newlines()
    for name, span in zip(names, name_spans):
        if name not in equations:
            raise ParseError(f"missing equation for declared variable {name!r}", span)
    max_lag = 1
    ordered = [equations[name] for name in names]

    def walk(node) -> int:
        if isinstance(node, VarRefNode):
            return node.lag
        if isinstance(node, BinaryNode):
            return max(walk(node.left), walk(node.right))
        if isinstance(node, PowerNode):
            return walk(node.base)
        return 1

    for eq in ordered:
        max_lag = max(max_lag, walk(eq.rhs))
    return SystemNode(names, name_spans, ordered, max_lag)


# -- lowering ----------------------------------------------------------------


def lower(tree: SystemNode, mode: Mode) -> PolySystem:
    """Turn a syntax tree into a PolySystem over the flattened lag variables.

    Variable (name index l, lag j) becomes flattened index (j-1)*k + l, so
    all lag-1 variables come first. Literals are converted per mode here;
    a literal too large for a double raises a ParseError in Float mode.
    """
    k = len(tree.variables)
    depth = tree.max_lag
    width = depth * k
    index_of = {name: l for l, name in enumerate(tree.variables)}

    def lower_expr(node) -> Poly:
        if isinstance(node, NumberNode):
            try:
                value = mode.from_fraction(node.value)
            except CarlemanError as exc:
                raise ParseError(str(exc), node.span) from exc
            return Poly.constant(width, value)
        if isinstance(node, VarRefNode):
            flat = (node.lag - 1) * k + index_of[node.name]
            return Poly.variable(width, flat).scaled(mode.one)
        if isinstance(node, PowerNode):
            return lower_expr(node.base).pow_truncated(node.exponent).scaled(mode.one)
        if isinstance(node, BinaryNode):
            left, right = lower_expr(node.left), lower_expr(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            return left.mul_truncated(right)
        raise AssertionError(f"unknown node {node!r}")

    polys = tuple(lower_expr(eq.rhs) for eq in tree.equations)
    return PolySystem(k=k, depth=depth, polys=polys, mode=mode)


def parse_system(text: str, mode: Mode) -> Tuple[PolySystem, List[str]]:
    """Convenience wrapper: parse then lower, returning names as well."""
    tree = parse(text)
    return lower(tree, mode), list(tree.variables)


# -- rendering ----------------------------------------------------------------


def _render_monomial(mono, names: Sequence[str], k: int) -> str:
    parts = []
    for flat, e in enumerate(mono):
        if not e:
            continue
        lag = flat // k + 1
        factor = f"{names[flat % k]}[i-{lag}]"
        parts.append(factor if e == 1 else f"{factor}^{e}")
    return "*".join(parts)


def _render_poly(p: Poly, names: Sequence[str], k: int) -> str:
    if p.is_zero():
        return "0"
    ordered = sorted(p.terms.items(),
                     key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))
    pieces: List[str] = []
    for position, (mono, coeff) in enumerate(ordered):
        factors = _render_monomial(mono, names, k)
        magnitude = format_scalar(-coeff if _is_negative(coeff) else coeff)
        if factors and magnitude == "1":
            body = factors
        elif factors:
            body = f"{magnitude}*{factors}"
        else:
            body = magnitude
        if position == 0:
            if not _is_negative(coeff):
                pieces.append(body)
            elif factors and magnitude == "1":
                # a sign may only prefix a number literal, so spell out the 1
                pieces.append(f"-1*{factors}")
            else:
                pieces.append(f"-{body}")
        else:
            pieces.append(f" - {body}" if _is_negative(coeff) else f" + {body}")
    return "".join(pieces)


def _is_negative(coeff: Scalar) -> bool:
    if isinstance(coeff, Fraction):
        return coeff < 0
    if coeff.imag == 0:
        return coeff.real < 0
    return False


def pretty_print(system: PolySystem, names: Optional[Sequence[str]] = None) -> str:
    """Render a system to canonical DSL text (round-trips through parse
    and lower for exact and real-decimal coefficients)."""
    k = system.k
    if names is None:
        names = ["u"] if k == 1 else [f"u{l + 1}" for l in range(k)]
    if len(names) != k:
        raise CarlemanError(f"expected {k} names, got {len(names)}")
    lines = ["vars: " + ", ".join(names)]
    for l in range(k):
        lines.append(f"{names[l]}[i] = " + _render_poly(system.polys[l], names, k))
    return "\n".join(lines) + "\n"
