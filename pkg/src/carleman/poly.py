"""Sparse multivariate polynomial arithmetic over exact or float scalars.

A polynomial in k variables is a map from exponent tuples to nonzero
coefficients; the zero polynomial is the empty map:

    x0**2 + 3*x0*x1  ->  {(2, 0): Fraction(1), (1, 1): Fraction(3)}

Canonical form never stores a zero coefficient, so equality is plain map
equality. Iteration for output always happens in graded lexicographic
order: total degree ascending, and inside one degree the exponent of
variable 0 descending, then variable 1, and so on. For two variables and
degree <= 2 that order is

    1, x0, x1, x0**2, x0*x1, x1**2

which is also the monomial-basis order used by the linearization code.

Operations that can grow degree take a max_degree cutoff; terms above the
cutoff are dropped, never rounded. All binary operations require matching
variable counts and raise ArityError otherwise.
"""

from __future__ import annotations

import cmath
import itertools
import math
import random
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import ArityError, ZeroPolynomialError
from .scalars import Mode, Scalar

Monomial = Tuple[int, ...]


def total_degree(monomial: Monomial) -> int:
    return sum(monomial)


def grlex_key(monomial: Monomial):
    """Sort key for the graded order described in the module docstring."""
    return (sum(monomial), tuple(-e for e in monomial))


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


class Poly:
    """Immutable-by-convention sparse polynomial."""

    __slots__ = ("var_count", "terms")

    def __init__(self, var_count: int, terms: Optional[Dict[Monomial, Scalar]] = None):
        if var_count < 1:
            raise ArityError(f"polynomial needs at least one variable, got {var_count}")
        clean: Dict[Monomial, Scalar] = {}
        for mono, coeff in (terms or {}).items():
            if len(mono) != var_count:
                raise ArityError(
                    f"exponent tuple {mono} has {len(mono)} entries, expected {var_count}")
            if any(e < 0 for e in mono):
                raise ArityError(f"negative exponent in {mono}")
            if coeff != 0:
                clean[tuple(mono)] = coeff
        self.var_count = var_count
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, var_count: int) -> "Poly":
        return cls(var_count, {})

    @classmethod
    def constant(cls, var_count: int, value: Scalar) -> "Poly":
        return cls(var_count, {(0,) * var_count: value})

    @classmethod
    def variable(cls, var_count: int, index: int) -> "Poly":
        if not 0 <= index < var_count:
            raise ArityError(f"variable index {index} out of range for {var_count} variables")
        mono = tuple(1 if i == index else 0 for i in range(var_count))
        one = Fraction(1)
        return cls(var_count, {mono: one})

    @classmethod
    def from_monomial(cls, var_count: int, mono: Monomial, coeff: Scalar) -> "Poly":
        return cls(var_count, {tuple(mono): coeff})

    # -- views ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; the zero polynomial reports -1."""
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def coefficient(self, mono: Monomial) -> Scalar:
        return self.terms.get(tuple(mono), 0)

    def constant_term(self) -> Scalar:
        return self.terms.get((0,) * self.var_count, 0)

    def items_grlex(self) -> List[Tuple[Monomial, Scalar]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    # -- algebra ----------------------------------------------------------

    def _check_arity(self, other: "Poly") -> None:
        if self.var_count != other.var_count:
            raise ArityError(
                f"variable counts differ: {self.var_count} vs {other.var_count}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check_arity(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            acc = terms.get(mono, 0) + coeff
            if acc == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = acc
        return Poly(self.var_count, terms)

    def __neg__(self) -> "Poly":
        return Poly(self.var_count, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.var_count == other.var_count and self.terms == other.terms

    def __repr__(self) -> str:
        inside = ", ".join(f"{m}: {c}" for m, c in self.items_grlex())
        return f"Poly({self.var_count}, {{{inside}}})"

    def scaled(self, factor: Scalar) -> "Poly":
        if factor == 0:
            return Poly.zero(self.var_count)
        return Poly(self.var_count, {m: c * factor for m, c in self.terms.items()})

    def mul_truncated(self, other: "Poly", max_degree: Optional[int] = None) -> "Poly":
        """Product, dropping terms with total degree above max_degree."""
        self._check_arity(other)
        terms: Dict[Monomial, Scalar] = {}
        # iterate the smaller operand outside; skip pairs past the cutoff early
        a, b = (self, other) if len(self.terms) <= len(other.terms) else (other, self)
        b_items = sorted(b.terms.items(), key=lambda kv: sum(kv[0]))
        for mono_a, coeff_a in a.terms.items():
            deg_a = sum(mono_a)
            for mono_b, coeff_b in b_items:
                if max_degree is not None and deg_a + sum(mono_b) > max_degree:
                    break
                mono = monomial_mul(mono_a, mono_b)
                acc = terms.get(mono, 0) + coeff_a * coeff_b
                if acc == 0:
                    terms.pop(mono, None)
                else:
                    terms[mono] = acc
        return Poly(self.var_count, terms)

    def pow_truncated(self, exponent: int, max_degree: Optional[int] = None) -> "Poly":
        """Integer power by repeated squaring, truncating along the way."""
        if exponent < 0:
            raise ArityError(f"negative exponent {exponent}")
        result = Poly.constant(self.var_count, Fraction(1))
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result.mul_truncated(base, max_degree)
            e >>= 1
            if e:
                base = base.mul_truncated(base, max_degree)
        return result

    def substitute_affine(self, matrix: Sequence[Sequence[Scalar]],
                          offset: Sequence[Scalar],
                          max_degree: Optional[int] = None) -> "Poly":
        """Replace the variable vector z by matrix*z + offset."""
        k = self.var_count
        if len(matrix) != k or any(len(row) != k for row in matrix) or len(offset) != k:
            raise ArityError("affine substitution shape does not match variable count")
        images: List[Poly] = []
        for l in range(k):
            row_terms: Dict[Monomial, Scalar] = {}
            for j in range(k):
                if matrix[l][j] != 0:
                    mono = tuple(1 if t == j else 0 for t in range(k))
                    row_terms[mono] = matrix[l][j]
            if offset[l] != 0:
                row_terms[(0,) * k] = offset[l]
            images.append(Poly(k, row_terms))
        pow_cache: Dict[Tuple[int, int], Poly] = {}

        def image_power(l: int, e: int) -> Poly:
            key = (l, e)
            if key not in pow_cache:
                pow_cache[key] = images[l].pow_truncated(e, max_degree)
            return pow_cache[key]

        out = Poly.zero(k)
        for mono, coeff in self.terms.items():
            piece = Poly.constant(k, coeff)
            for l, e in enumerate(mono):
                if e:
                    piece = piece.mul_truncated(image_power(l, e), max_degree)
            out = out + piece
        return out

    def compose(self, arguments: Sequence["Poly"],
                max_degree: Optional[int] = None) -> "Poly":
        """Substitute a polynomial for each variable."""
        if len(arguments) != self.var_count:
            raise ArityError(
                f"expected {self.var_count} argument polynomials, got {len(arguments)}")
        if not arguments:
            raise ArityError("empty argument list")
        inner_vars = arguments[0].var_count
        for arg in arguments:
            if arg.var_count != inner_vars:
                raise ArityError("argument polynomials disagree on variable count")
        pow_cache: Dict[Tuple[int, int], Poly] = {}

        def arg_power(l: int, e: int) -> Poly:
            key = (l, e)
            if key not in pow_cache:
                pow_cache[key] = arguments[l].pow_truncated(e, max_degree)
            return pow_cache[key]

        out = Poly.zero(inner_vars)
        for mono, coeff in self.terms.items():
            piece = Poly.constant(inner_vars, coeff)
            for l, e in enumerate(mono):
                if e:
                    piece = piece.mul_truncated(arg_power(l, e), max_degree)
            out = out + piece
        return out

    def truncated(self, max_degree: int) -> "Poly":
        return Poly(self.var_count,
                    {m: c for m, c in self.terms.items() if sum(m) <= max_degree})

    def evaluate(self, point: Sequence[Scalar]) -> Scalar:
        """Value at a point, with per-variable power caching."""
        if len(point) != self.var_count:
            raise ArityError(
                f"point has {len(point)} coordinates, expected {self.var_count}")
        pow_cache: Dict[Tuple[int, int], Scalar] = {}

        def var_power(l: int, e: int) -> Scalar:
            key = (l, e)
            if key not in pow_cache:
                pow_cache[key] = point[l] ** e
            return pow_cache[key]

        total: Scalar = 0
        for mono, coeff in self.terms.items():
            value = coeff
            for l, e in enumerate(mono):
                if e:
                    value = value * var_power(l, e)
            total = total + value
        return total

    def derivative(self, var: int) -> "Poly":
        if not 0 <= var < self.var_count:
            raise ArityError(f"variable index {var} out of range")
        terms: Dict[Monomial, Scalar] = {}
        for mono, coeff in self.terms.items():
            e = mono[var]
            if e:
                lowered = tuple(x - 1 if i == var else x for i, x in enumerate(mono))
                terms[lowered] = terms.get(lowered, 0) + coeff * e
        return Poly(self.var_count, terms)

    def drop_small_terms(self, threshold: float) -> "Poly":
        """Float-mode cleanup: discard coefficients at or below threshold."""
        return Poly(self.var_count,
                    {m: c for m, c in self.terms.items() if abs(c) > threshold})


# -- univariate root finding -------------------------------------------


def univariate_coeffs(p: Poly) -> List[Scalar]:
    """Ascending coefficient list c0..cm of a one-variable polynomial."""
    if p.var_count != 1:
        raise ArityError(f"expected a univariate polynomial, got {p.var_count} variables")
    if p.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no defined root set")
    m = p.degree()
    return [p.terms.get((j,), 0) for j in range(m + 1)]


def _divisors(n: int) -> List[int]:
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def rational_roots(p: Poly) -> List[Fraction]:
    """All rational roots of an exact univariate polynomial, ascending.

    Uses the rational root bound on an integer-cleared copy; every
    candidate is verified by exact evaluation. No rational root means an
    empty list, not an error.
    """
    coeffs = univariate_coeffs(p)
    if len(coeffs) == 1:
        return []  # nonzero constant
    roots: List[Fraction] = []
    low = 0
    while coeffs[low] == 0:
        low += 1
    if low > 0:
        roots.append(Fraction(0))
    reduced = coeffs[low:]
    scale = math.lcm(*(c.denominator for c in reduced))
    ints = [int(c * scale) for c in reduced]
    trailing, leading = ints[0], ints[-1]
    seen = set(roots)
    for num in _divisors(trailing):
        for den in _divisors(leading):
            if math.gcd(num, den) != 1:
                continue
            for cand in (Fraction(num, den), Fraction(-num, den)):
                if cand in seen:
                    continue
                if p.evaluate([cand]) == 0:
                    roots.append(cand)
                    seen.add(cand)
    return sorted(roots)


def complex_roots(p: Poly, seed: int = 0, max_iterations: int = 500,
                  residual_tol: float = 1e-12) -> List[complex]:
    """All complex roots via the Durand-Kerner simultaneous iteration.

    Starts from a randomly perturbed circle (seeded, so deterministic),
    iterates until the worst residual of the monic polynomial drops below
    residual_tol, then polishes each root with a few Newton steps.
    """
    coeffs = [complex(c) for c in univariate_coeffs(p)]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    n = len(coeffs) - 1
    if n == 0:
        return []
    monic = [c / coeffs[-1] for c in coeffs]

    def eval_monic(x: complex) -> complex:
        acc = 0j
        for c in reversed(monic):
            acc = acc * x + c
        return acc

    deriv = [monic[j] * j for j in range(1, n + 1)]

    def eval_deriv(x: complex) -> complex:
        acc = 0j
        for c in reversed(deriv):
            acc = acc * x + c
        return acc

    rng = random.Random(seed)
    # Cauchy bound encloses every root of the monic polynomial
    radius = 1.0 + max(abs(c) for c in monic[:-1])
    guesses = [
        radius * (0.6 + 0.1 * rng.random())
        * cmath.exp(2j * cmath.pi * (j + 0.3 + 0.1 * rng.random()) / n)
        for j in range(n)
    ]
    for _ in range(max_iterations):
        worst = 0.0
        for j in range(n):
            denom = 1 + 0j
            for l in range(n):
                if l != j:
                    diff = guesses[j] - guesses[l]
                    if diff == 0:
                        diff = 1e-12 * (1 + rng.random())
                    denom *= diff
            step = eval_monic(guesses[j]) / denom
            guesses[j] -= step
            worst = max(worst, abs(eval_monic(guesses[j])))
        if worst <= residual_tol:
            break
    for j in range(n):
        for _ in range(3):
            d = eval_deriv(guesses[j])
            if abs(d) < 1e-300:
                break
            guesses[j] -= eval_monic(guesses[j]) / d
    guesses.sort(key=lambda z: (abs(z), cmath.phase(z), z.real, z.imag))
    return guesses


def roots_univariate(p: Poly, mode: Mode, seed: int = 0) -> List[Scalar]:
    """Mode dispatch: exact rational search or numeric Durand-Kerner."""
    if mode is Mode.EXACT:
        return list(rational_roots(p))
    return list(complex_roots(p, seed=seed))
