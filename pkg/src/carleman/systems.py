"""Polynomial recurrence systems and the transforms applied before
linearization: depth flattening, fixed-point shifts, and linear changes
of variables.

A depth-n system over k variables is stored as k polynomials in the
n*k flattened lag variables (all lag-1 variables first, then lag-2, and
so on). Depth reduction rewrites it as a depth-one system over n*k
variables by adding copy equations, after which every transform here
assumes depth one.

An affine transform holds a matrix A and offset B and defines the primed
coordinates as z' = A (z - B); the primed system is then

    z'_i = A (F(A^-1 z'_{i-1} + B) - B).

Shifting by a fixed point (A = identity, B = fixed point) removes the
constant term; a change of basis built from eigenvectors of the linear
part (B = 0) makes the linear part upper triangular, which is what the
embedding needs to produce a triangular transition matrix.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .embedding import MonomialBasis
from .errors import (ArityError, NotShiftedError, RepeatedEigenvalueError,
                     ShiftNotFoundError, SingularMatrixError,
                     TriangularizationError)
from .linalg import (char_poly, copy_matrix, identity, is_upper_triangular,
                     mat_inverse, mat_mul, mat_vec, max_abs, nullspace)
from .poly import Poly, complex_roots, rational_roots
from .scalars import Mode, Scalar, format_scalar, nearly_equal, sort_key


@dataclass(frozen=True)
class PolySystem:
    """k update polynomials over the depth*k flattened lag variables."""

    k: int
    depth: int
    polys: Tuple[Poly, ...]
    mode: Mode

    def __post_init__(self):
        if self.k < 1 or self.depth < 1:
            raise ArityError(f"bad system shape (k={self.k}, depth={self.depth})")
        if len(self.polys) != self.k:
            raise ArityError(
                f"expected {self.k} update polynomials, got {len(self.polys)}")
        width = self.k * self.depth
        for l, p in enumerate(self.polys):
            if p.var_count != width:
                raise ArityError(
                    f"equation {l} uses {p.var_count} variables, expected {width}")
            for coeff in p.terms.values():
                if not self.mode.matches(coeff):
                    raise ArityError(
                        f"equation {l} has a {type(coeff).__name__} coefficient "
                        f"in {self.mode.value} mode")

    @property
    def state_width(self) -> int:
        return self.k * self.depth

    def require_depth_one(self, what: str) -> None:
        if self.depth != 1:
            raise ArityError(f"{what} needs a depth-one system; "
                             f"reduce depth first (this one has depth {self.depth})")

    def constant_vector(self) -> List[Scalar]:
        self.require_depth_one("reading the constant term")
        return [p.constant_term() for p in self.polys]

    def linear_matrix(self) -> List[List[Scalar]]:
        self.require_depth_one("reading the linear part")
        zero = self.mode.zero
        out = []
        for p in self.polys:
            row = [zero] * self.k
            for mono, coeff in p.terms.items():
                if sum(mono) == 1:
                    row[mono.index(1)] = coeff
            out.append(row)
        return out

    def max_degree(self) -> int:
        return max((p.degree() for p in self.polys), default=0)

    def coeff_arrays(self) -> "CoeffArrays":
        return CoeffArrays.from_system(self)


@dataclass(frozen=True)
class CoeffArrays:
    """Degree-graded view of a depth-one system's coefficients.

    constant[p] and linear[p][l] index the usual vector and matrix;
    arrays of degree j >= 2 are keyed by the non-decreasing tuple of
    variable indices (with repetition), each holding the length-k vector
    of coefficients of that monomial across equations.
    """

    k: int
    constant: Tuple[Scalar, ...]
    linear: Tuple[Tuple[Scalar, ...], ...]
    higher: Dict[int, Dict[Tuple[int, ...], Tuple[Scalar, ...]]]

    @classmethod
    def from_system(cls, system: PolySystem) -> "CoeffArrays":
        system.require_depth_one("coefficient arrays")
        k = system.k
        zero = system.mode.zero
        constant = tuple(system.constant_vector())
        linear = tuple(tuple(row) for row in system.linear_matrix())
        higher: Dict[int, Dict[Tuple[int, ...], List[Scalar]]] = {}
        for p, poly in enumerate(system.polys):
            for mono, coeff in poly.terms.items():
                degree = sum(mono)
                if degree < 2:
                    continue
                key = tuple(var for var, e in enumerate(mono) for _ in range(e))
                by_degree = higher.setdefault(degree, {})
                vec = by_degree.setdefault(key, [zero] * k)
                vec[p] = coeff
        frozen = {deg: {key: tuple(vec) for key, vec in entries.items()}
                  for deg, entries in higher.items()}
        return cls(k=k, constant=constant, linear=linear, higher=frozen)

    def reconstruct(self, mode: Mode) -> PolySystem:
        """Rebuild the system; from_system and reconstruct are inverse."""
        k = self.k
        polys = []
        for p in range(k):
            terms: Dict[Tuple[int, ...], Scalar] = {}
            if self.constant[p] != 0:
                terms[(0,) * k] = self.constant[p]
            for l in range(k):
                if self.linear[p][l] != 0:
                    mono = tuple(1 if t == l else 0 for t in range(k))
                    terms[mono] = self.linear[p][l]
            for entries in self.higher.values():
                for key, vec in entries.items():
                    if vec[p] != 0:
                        mono = [0] * k
                        for var in key:
                            mono[var] += 1
                        terms[tuple(mono)] = vec[p]
            polys.append(Poly(k, terms))
        return PolySystem(k=k, depth=1, polys=tuple(polys), mode=mode)


@dataclass(frozen=True)
class TransformParams:
    """Affine change of coordinates z' = matrix (z - offset)."""

    matrix: Tuple[Tuple[Scalar, ...], ...]
    offset: Tuple[Scalar, ...]
    matrix_inv: Tuple[Tuple[Scalar, ...], ...]
    mode: Mode

    @classmethod
    def create(cls, matrix: Sequence[Sequence[Scalar]],
               offset: Sequence[Scalar], mode: Mode) -> "TransformParams":
        k = len(offset)
        if len(matrix) != k or any(len(row) != k for row in matrix):
            raise ArityError("transform matrix shape does not match the offset length")
        inverse = mat_inverse(matrix, mode)
        return cls(matrix=tuple(tuple(row) for row in matrix),
                   offset=tuple(offset),
                   matrix_inv=tuple(tuple(row) for row in inverse),
                   mode=mode)

    @classmethod
    def identity(cls, k: int, mode: Mode) -> "TransformParams":
        eye = identity(k, mode)
        return cls.create(eye, [mode.zero] * k, mode)

    @classmethod
    def shift(cls, offset: Sequence[Scalar], mode: Mode) -> "TransformParams":
        return cls.create(identity(len(offset), mode), list(offset), mode)

    @property
    def k(self) -> int:
        return len(self.offset)

    def is_identity(self) -> bool:
        eye = identity(self.k, self.mode)
        return (all(x == 0 for x in self.offset)
                and [list(r) for r in self.matrix] == eye)

    def inverse(self) -> "TransformParams":
        """Params of the inverse coordinate change (primed back to original)."""
        neg_ab = [-x for x in mat_vec(self.matrix, list(self.offset))]
        return TransformParams.create(
            [list(r) for r in self.matrix_inv], neg_ab, self.mode)

    def apply_point(self, point: Sequence[Scalar]) -> List[Scalar]:
        shifted = [x - b for x, b in zip(point, self.offset)]
        return mat_vec(self.matrix, shifted)

    def unapply_point(self, point: Sequence[Scalar]) -> List[Scalar]:
        pulled = mat_vec(self.matrix_inv, list(point))
        return [x + b for x, b in zip(pulled, self.offset)]


def reduce_depth(system: PolySystem) -> PolySystem:
    """Rewrite a depth-n system as depth-one over n*k variables.

    The first k equations keep their polynomials unchanged (the flattened
    variable order already matches); each further variable j*k + l copies
    variable (j-1)*k + l from the previous step, so new variable j*k + l
    at step i equals original variable l at step i - j.
    """
    if system.depth == 1:
        return system
    k, depth = system.k, system.depth
    width = k * depth
    one = system.mode.one
    polys = list(system.polys)
    for j in range(1, depth):
        for l in range(k):
            polys.append(Poly.variable(width, (j - 1) * k + l).scaled(one))
    return PolySystem(k=width, depth=1, polys=tuple(polys), mode=system.mode)


def apply_affine(system: PolySystem, params: TransformParams) -> PolySystem:
    """Rewrite a depth-one system in the primed coordinates
    z' = matrix (z - offset)."""
    system.require_depth_one("an affine transform")
    if params.k != system.k:
        raise ArityError(
            f"transform is {params.k}-dimensional, system has {system.k} variables")
    k = system.k
    a_rows = [list(r) for r in params.matrix]
    a_inv = [list(r) for r in params.matrix_inv]
    offset = list(params.offset)
    substituted = [p.substitute_affine(a_inv, offset) for p in system.polys]
    shift_back = mat_vec(a_rows, offset)
    polys = []
    for p in range(k):
        acc = Poly.zero(k)
        for j in range(k):
            if a_rows[p][j] != 0:
                acc = acc + substituted[j].scaled(a_rows[p][j])
        if shift_back[p] != 0:
            acc = acc - Poly.constant(k, shift_back[p])
        polys.append(acc)
    return PolySystem(k=k, depth=1, polys=tuple(polys), mode=system.mode)


# -- fixed points -------------------------------------------------------------


def _newton_fixed_point(system: PolySystem, start: Sequence[complex],
                        tol: float, max_iterations: int = 80) -> Optional[List[complex]]:
    k = system.k
    gs = [p - Poly.variable(k, l).scaled(system.mode.one)
          for l, p in enumerate(system.polys)]
    jacobian = [[g.derivative(v) for v in range(k)] for g in gs]
    point = [complex(x) for x in start]

    def residual(at: Sequence[complex]) -> float:
        return max(abs(g.evaluate(at)) for g in gs)

    current = residual(point)
    for _ in range(max_iterations):
        if current <= tol:
            return point
        jac = [[jacobian[r][c].evaluate(point) for c in range(k)] for r in range(k)]
        rhs = [-g.evaluate(point) for g in gs]
        try:
            inv = mat_inverse(jac, Mode.FLOAT)
        except SingularMatrixError:
            return None
        step = mat_vec(inv, rhs)
        damping = 1.0
        for _ in range(25):
            trial = [x + damping * s for x, s in zip(point, step)]
            trial_res = residual(trial)
            if trial_res < current:
                point, current = trial, trial_res
                break
            damping /= 2
        else:
            return None
    return point if current <= tol else None


def fixed_points(system: PolySystem, seeds: Optional[Sequence[Sequence[Scalar]]] = None,
                 seed: int = 0, tol: float = 1e-10) -> List[List[Scalar]]:
    """Fixed points of the depth-one map, deterministically ordered.

    Exact mode: for one variable, all rational roots of F(d) - d; for
    several variables the origin (when the constant term vanishes) plus
    any caller-supplied candidates that verify exactly. Float mode: all
    numeric roots for one variable, damped Newton from seeded random
    starts otherwise.
    """
    system.require_depth_one("fixed points")
    k = system.k
    found: List[List[Scalar]] = []
    if system.mode is Mode.EXACT:
        if k == 1:
            shifted = system.polys[0] - Poly.variable(1, 0)
            if shifted.is_zero():
                found = [[Fraction(0)]]  # every point is fixed; report the origin
            else:
                found = [[r] for r in rational_roots(shifted)]
        else:
            if all(c == 0 for c in system.constant_vector()):
                found.append([Fraction(0)] * k)
        for cand in seeds or []:
            vec = [Fraction(x) for x in cand]
            if all(p.evaluate(vec) == v for p, v in zip(system.polys, vec)):
                if vec not in found:
                    found.append(vec)
        found.sort(key=lambda v: tuple(v))
        return found
    # float mode
    if k == 1:
        shifted = system.polys[0] - Poly.variable(1, 0).scaled(system.mode.one)
        if shifted.is_zero():
            return [[complex(0)]]
        roots = complex_roots(shifted, seed=seed)
        candidates = [[r] for r in roots]
    else:
        import random as _random
        rng = _random.Random(seed)
        starts: List[List[complex]] = [[complex(0)] * k]
        for s in seeds or []:
            starts.append([complex(x) for x in s])
        for _ in range(8):
            starts.append([complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                           for _ in range(k)])
        candidates = []
        for start in starts:
            got = _newton_fixed_point(system, start, tol)
            if got is not None:
                candidates.append(got)
    deduped: List[List[Scalar]] = []
    for cand in candidates:
        if not any(all(nearly_equal(a, b, 1e-8) for a, b in zip(cand, prev))
                   for prev in deduped):
            deduped.append(cand)
    deduped.sort(key=lambda v: tuple(sort_key(x) for x in v))
    return deduped


# -- admissibility ------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the distinct-eigenvalue-products check."""

    eigenvalues: Tuple[Scalar, ...]
    max_power: int
    passed: bool
    collisions: Tuple[Tuple[Tuple[int, ...], Tuple[int, ...], Scalar], ...]
    advisories: Tuple[str, ...]

    def describe(self) -> str:
        eigs = ", ".join(format_scalar(x) for x in self.eigenvalues)
        status = "PASS" if self.passed else "FAIL"
        lines = [f"eigenvalues: {eigs}",
                 f"distinct products up to degree {self.max_power}: {status}"]
        for mono_a, mono_b, value in self.collisions:
            lines.append(f"  collision: {mono_a} and {mono_b} both give "
                         f"{format_scalar(value)}")
        for note in self.advisories:
            lines.append(f"  advisory: {note}")
        return "\n".join(lines)


def _eigenvalues_with_multiplicity(matrix: List[List[Scalar]],
                                   mode: Mode, seed: int = 0) -> List[Scalar]:
    k = len(matrix)
    if is_upper_triangular(matrix, 0.0 if mode is Mode.EXACT else 1e-12):
        return [matrix[i][i] for i in range(k)]
    cp = char_poly(matrix, mode)
    if mode is Mode.FLOAT:
        return complex_roots(cp, seed=seed)
    roots = rational_roots(cp)
    eigs: List[Scalar] = []
    remaining = cp
    for r in roots:
        while True:
            quotient, ok = _divide_linear(remaining, r)
            if not ok:
                break
            eigs.append(r)
            remaining = quotient
    if len(eigs) < k:
        raise TriangularizationError(
            "the linear part has irrational or complex eigenvalues; "
            "supply a transform matrix or use float mode")
    eigs.sort()
    return eigs


def _divide_linear(p: Poly, root: Fraction) -> Tuple[Poly, bool]:
    """Synthetic division by (x - root); ok is False when root is not a root."""
    coeffs = [p.terms.get((j,), Fraction(0)) for j in range(p.degree() + 1)]
    out: List[Fraction] = [Fraction(0)] * (len(coeffs) - 1)
    carry = Fraction(0)
    for j in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[j] + carry * root
        out[j - 1] = carry
    remainder = coeffs[0] + carry * root
    if remainder != 0:
        return p, False
    return Poly(1, {(j,): c for j, c in enumerate(out)}), True


def _is_nearly_rational(x: float, max_denominator: int = 64,
                        tol: float = 1e-9) -> Optional[Fraction]:
    if not math.isfinite(x):
        return None
    approx = Fraction(x).limit_denominator(max_denominator)
    if abs(approx - Fraction(x)) <= tol:
        return approx
    return None


def check_shift_admissible(system: PolySystem, max_power: int,
                           unity_bound: int = 24, tol: float = 1e-9,
                           seed: int = 0) -> AdmissibilityReport:
    """Check that all monomial products of the linear-part eigenvalues up
    to total degree max_power are pairwise distinct.

    This is exactly the condition for the truncated transition matrix to
    have distinct diagonal entries, hence to be diagonalizable by back
    substitution. The report also carries advisory notes (root-of-unity
    detection, and for two variables a continued-fraction heuristic for
    the all-orders condition); advisories never affect the verdict.
    """
    system.require_depth_one("the admissibility check")
    constants = system.constant_vector()
    if any(c != 0 for c in constants):
        raise NotShiftedError(
            "the admissibility check needs a zero constant term; shift to a "
            "fixed point first")
    eigs = _eigenvalues_with_multiplicity(system.linear_matrix(), system.mode,
                                          seed=seed)
    basis = MonomialBasis(system.k, max_power)
    products: List[Tuple[Tuple[int, ...], Scalar]] = []
    for mono in basis.monomials:
        value = system.mode.one
        for l, e in enumerate(mono):
            if e:
                value = value * eigs[l] ** e
        products.append((mono, value))
    collisions: List[Tuple[Tuple[int, ...], Tuple[int, ...], Scalar]] = []
    if system.mode is Mode.EXACT:
        seen: Dict[Scalar, Tuple[int, ...]] = {}
        for mono, value in products:
            if value in seen:
                collisions.append((seen[value], mono, value))
            else:
                seen[value] = mono
    else:
        by_value = sorted(products, key=lambda mv: sort_key(mv[1]))
        for (mono_a, val_a), (mono_b, val_b) in zip(by_value, by_value[1:]):
            if nearly_equal(val_a, val_b, tol):
                collisions.append((mono_a, mono_b, val_a))
    advisories: List[str] = []
    if system.k == 1:
        lam = eigs[0]
        for q in range(1, unity_bound + 1):
            power = lam ** q
            if (power == 1 if system.mode is Mode.EXACT
                    else nearly_equal(power, complex(1), tol)):
                advisories.append(
                    f"eigenvalue {format_scalar(lam)} is a root of unity "
                    f"(order {q}); products repeat at every truncation order")
                break
    if system.k == 2:
        advisories.extend(_two_variable_all_orders_note(eigs))
    return AdmissibilityReport(
        eigenvalues=tuple(eigs),
        max_power=max_power,
        passed=not collisions,
        collisions=tuple(collisions),
        advisories=tuple(advisories),
    )


def _two_variable_all_orders_note(eigs: Sequence[Scalar]) -> List[str]:
    """Heuristic all-orders diagnosis for two eigenvalues: products at
    every order stay distinct when log_|l0| |l1| is irrational, or when
    the phases mix irrationally with that ratio. Detection uses rational
    reconstruction of floats, so it is advisory only."""
    try:
        l0, l1 = complex(eigs[0]), complex(eigs[1])
        if abs(l0) in (0.0, 1.0) or abs(l1) == 0.0:
            return []
        ratio = math.log(abs(l1)) / math.log(abs(l0))
        ratio_frac = _is_nearly_rational(ratio)
        if ratio_frac is None:
            return ["heuristic: magnitude ratio log test suggests products stay "
                    "distinct at every order"]
        phase_mix = cmath.phase(l1) - cmath.phase(l0) * ratio
        if phase_mix == 0:
            return [f"heuristic: products may collide at higher orders "
                    f"(magnitude log ratio is close to {ratio_frac})"]
        phase_ratio = math.pi / phase_mix
        if _is_nearly_rational(phase_ratio) is None:
            return ["heuristic: phase mixing suggests products stay distinct "
                    "at every order"]
        return [f"heuristic: products may collide at higher orders "
                f"(magnitude log ratio close to {ratio_frac}, phase mix rational)"]
    except (ValueError, ZeroDivisionError, OverflowError):
        return []


# -- triangularization ---------------------------------------------------------


def _householder_step(matrix: List[List[complex]], qacc: List[List[complex]],
                      offset: int, target: complex) -> None:
    """Reflect so that the eigenvector of the trailing block for `target`
    lands on the block's first axis; fold the reflector into qacc."""
    n = len(matrix)
    size = n - offset
    block = [[matrix[offset + r][offset + c] - (target if r == c else 0)
              for c in range(size)] for r in range(size)]
    v = _float_nullvector(block)
    norm = math.sqrt(sum(abs(x) ** 2 for x in v))
    if norm == 0:
        raise TriangularizationError("failed to find a float eigenvector")
    v = [x / norm for x in v]
    sign = v[0] / abs(v[0]) if abs(v[0]) > 1e-14 else 1.0
    w = list(v)
    w[0] = w[0] + sign
    wnorm2 = sum(abs(x) ** 2 for x in w)
    if wnorm2 < 1e-28:
        return  # already aligned
    h = [[(1 if r == c else 0) - 2 * w[r] * w[c].conjugate() / wnorm2
          for c in range(size)] for r in range(size)]
    full = identity(n, Mode.FLOAT)
    for r in range(size):
        for c in range(size):
            full[offset + r][offset + c] = h[r][c]
    updated = mat_mul(mat_mul(full, matrix), full)  # reflector is its own inverse
    for r in range(n):
        matrix[r] = updated[r]
    new_q = mat_mul(full, qacc)
    for r in range(n):
        qacc[r] = new_q[r]


def _float_nullvector(matrix: List[List[complex]]) -> List[complex]:
    """Approximate null vector of a nearly singular complex matrix."""
    n = len(matrix)
    a = [list(row) for row in matrix]
    scale = max(max_abs(a), 1.0)
    used_cols: List[int] = []
    row = 0
    for col in range(n):
        best_row, best = None, 1e-10 * scale
        for r in range(row, n):
            if abs(a[r][col]) > best:
                best, best_row = abs(a[r][col]), r
        if best_row is None:
            continue
        a[row], a[best_row] = a[best_row], a[row]
        for r in range(row + 1, n):
            factor = a[r][col] / a[row][col]
            a[r] = [x - factor * y for x, y in zip(a[r], a[row])]
        used_cols.append(col)
        row += 1
    free_cols = [c for c in range(n) if c not in used_cols]
    if not free_cols:
        free_cols = [used_cols.pop()]
        row -= 1
    free = free_cols[0]
    x: List[complex] = [complex(0)] * n
    x[free] = complex(1)
    for r in range(row - 1, -1, -1):
        col = used_cols[r]
        acc = complex(0)
        for c in range(col + 1, n):
            acc += a[r][c] * x[c]
        x[col] = -acc / a[r][col]
    return x


def triangularize_linear(system: PolySystem, seed: int = 0,
                         tol: float = 1e-10) -> Tuple[PolySystem, TransformParams]:
    """Find a change of basis making the linear part upper triangular,
    and return the rewritten system along with the transform.

    An already-triangular linear part returns the system unchanged with
    the identity transform. Exact mode diagonalizes via rational
    eigenvectors (first nonzero entry scaled to 1, eigenvalues ascending)
    and fails with a structured error when the spectrum is irrational or
    defective. Float mode uses unitary reflections to deflate one
    eigenvalue at a time, eigenvalues ordered by magnitude then phase.
    """
    system.require_depth_one("triangularization")
    k = system.k
    linear = system.linear_matrix()
    if system.mode is Mode.EXACT:
        if is_upper_triangular(linear):
            return system, TransformParams.identity(k, system.mode)
        eigs = _eigenvalues_with_multiplicity(linear, Mode.EXACT)
        columns: List[List[Scalar]] = []
        seen: List[Fraction] = []
        for lam in eigs:
            if lam in seen:
                continue
            seen.append(lam)
            multiplicity = eigs.count(lam)
            shifted = [[linear[r][c] - (lam if r == c else 0) for c in range(k)]
                       for r in range(k)]
            space = nullspace(shifted)
            if len(space) < multiplicity:
                raise TriangularizationError(
                    f"the linear part is defective at eigenvalue "
                    f"{format_scalar(lam)}; no eigenvector basis exists")
            for vec in space[:multiplicity]:
                lead = next(x for x in vec if x != 0)
                columns.append([x / lead for x in vec])
        modal = [[columns[c][r] for c in range(k)] for r in range(k)]
        matrix = mat_inverse(modal, Mode.EXACT)
        params = TransformParams.create(matrix, [Fraction(0)] * k, Mode.EXACT)
        return apply_affine(system, params), params
    # float mode
    scale = max(max_abs(linear), 1.0)
    if is_upper_triangular(linear, 1e-12):
        cleaned = _zero_subdiagonal_linear(system, tol * scale)
        return cleaned, TransformParams.identity(k, system.mode)
    eigs = complex_roots(char_poly(linear, Mode.FLOAT), seed=seed)
    work = [list(row) for row in linear]
    qacc = identity(k, Mode.FLOAT)
    for step, lam in enumerate(eigs[:-1]):
        _householder_step(work, qacc, step, lam)
    residue = max((abs(work[r][c]) for r in range(k) for c in range(r)),
                  default=0.0)
    if residue > 1e-8 * scale:
        raise TriangularizationError(
            f"float triangularization did not converge (residue {residue:.2e})")
    params = TransformParams.create(qacc, [complex(0)] * k, Mode.FLOAT)
    transformed = apply_affine(system, params)
    return _zero_subdiagonal_linear(transformed, tol * scale), params


def _zero_subdiagonal_linear(system: PolySystem, threshold: float) -> PolySystem:
    """Drop float residue sitting strictly below the linear diagonal."""
    k = system.k
    polys = []
    for p, poly in enumerate(system.polys):
        terms = dict(poly.terms)
        for mono in list(terms.keys()):
            if sum(mono) == 1 and mono.index(1) < p:
                if abs(terms[mono]) <= threshold:
                    del terms[mono]
        polys.append(Poly(k, terms))
    return PolySystem(k=k, depth=1, polys=tuple(polys), mode=system.mode)
