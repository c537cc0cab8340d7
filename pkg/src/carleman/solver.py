"""Closed-form solutions of polynomial recurrences.

solve() runs the whole pipeline: flatten the depth, shift a fixed point
to the origin, change basis until the linear part is upper triangular,
embed into the monomial basis up to the truncation order, eigendecompose
the triangular transition matrix, and read off one exponential sum per
(variable, initial-condition monomial) pair:

    u_i^p  =  B_p  +  sum over monomials m of degree <= N of
              ( sum_j beta_j * lambda_j^i ) * m(u_0)

The coefficient functions are exact for monomial degrees <= N whenever
the shifted system has a zero constant term: by degree grading, the
image of a degree-d monomial only touches degrees >= d, so truncation
at N never corrupts the retained coefficients. The series itself is
truncated, so evaluating it tracks the true trajectory only as well as
the degree > N tail allows.

verify() therefore compares coefficients, not trajectory values, against
a brute-force symbolic iteration oracle. Verification happens in the
shifted coordinates when the shift is nonzero (there the coefficients
are exact); with a zero shift the original-coordinate table is checked
directly.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .embedding import MonomialBasis, build_transition
from .errors import (ArityError, CarlemanError, NotShiftedError,
                     RepeatedEigenvalueError, ShiftNotFoundError,
                     SizeLimitError, TriangularizationError)
from .linalg import is_upper_triangular, mat_vec, max_abs
from .poly import Monomial, Poly, grlex_key
from .scalars import (Mode, Scalar, format_scalar, nearly_equal,
                      scalar_from_json, scalar_to_json, sort_key)
from .systems import (AdmissibilityReport, PolySystem, TransformParams,
                      apply_affine, check_shift_admissible, fixed_points,
                      reduce_depth, triangularize_linear,
                      _zero_subdiagonal_linear)
from .triangular import decompose

_FLOAT_CONSTANT_TOL = 1e-9
_FLOAT_COEFF_DROP = 1e-13


# -- exponential sums ----------------------------------------------------------


_PLAIN_NUMBER = re.compile(r"^[0-9]+(\.[0-9]+)?$")


@dataclass(frozen=True)
class ExpSum:
    """Function of the step index i of the form sum of coeff * base^i.

    Canonical: bases pairwise distinct (Float: merged when within 1e-9
    relative), no zero coefficients, sorted ascending by the scalar
    ordering (Float: magnitude then phase).
    """

    mode: Mode
    terms: Tuple[Tuple[Scalar, Scalar], ...]

    @classmethod
    def from_terms(cls, mode: Mode,
                   pairs: Sequence[Tuple[Scalar, Scalar]],
                   merge_tol: float = 1e-9) -> "ExpSum":
        merged: List[List[Scalar]] = []
        if mode is Mode.EXACT:
            bucket: Dict[Scalar, Scalar] = {}
            for base, coeff in pairs:
                bucket[base] = bucket.get(base, mode.zero) + coeff
            merged = [[b, c] for b, c in bucket.items()]
        else:
            for base, coeff in sorted(pairs, key=lambda bc: sort_key(bc[0])):
                if merged and nearly_equal(merged[-1][0], base, merge_tol):
                    merged[-1][1] = merged[-1][1] + coeff
                else:
                    merged.append([base, coeff])
        kept = [(b, c) for b, c in merged if c != 0]
        if mode is Mode.FLOAT and kept:
            scale = max(1.0, max(abs(c) for _, c in kept))
            kept = [(b, c) for b, c in kept if abs(c) > _FLOAT_COEFF_DROP * scale]
        kept.sort(key=lambda bc: sort_key(bc[0]))
        return cls(mode=mode, terms=tuple((b, c) for b, c in kept))

    @classmethod
    def zero(cls, mode: Mode) -> "ExpSum":
        return cls(mode=mode, terms=())

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, i: int) -> Scalar:
        if i < 0:
            raise ValueError(f"step index must be non-negative, got {i}")
        total = self.mode.zero
        for base, coeff in self.terms:
            total = total + coeff * base ** i
        return total

    def __add__(self, other: "ExpSum") -> "ExpSum":
        if self.mode is not other.mode:
            raise ArityError("cannot add exponential sums from different modes")
        return ExpSum.from_terms(self.mode, list(self.terms) + list(other.terms))

    def scaled(self, factor: Scalar) -> "ExpSum":
        if factor == 0:
            return ExpSum.zero(self.mode)
        return ExpSum.from_terms(self.mode,
                                 [(b, c * factor) for b, c in self.terms])

    def render(self, index_name: str = "i") -> str:
        """ASCII rendering with bases ascending, e.g. '-5*2^i + 6*3^i'."""
        if not self.terms:
            return "0"
        pieces: List[str] = []
        for base, coeff in self.terms:
            sign, body = _render_term(base, coeff, index_name)
            if not pieces:
                pieces.append(body if sign == "+" else f"-{body}")
            else:
                pieces.append(f" {sign} {body}")
        return "".join(pieces)

    def to_json(self) -> list:
        return [{"base": scalar_to_json(b), "coeff": scalar_to_json(c)}
                for b, c in self.terms]

    @classmethod
    def from_json(cls, mode: Mode, data) -> "ExpSum":
        pairs = [(scalar_from_json(mode, t["base"]),
                  scalar_from_json(mode, t["coeff"])) for t in data]
        return cls.from_terms(mode, pairs)


def _split_sign(value: Scalar) -> Tuple[str, Scalar]:
    """Real scalars give ('-', magnitude) when negative; complex values
    with an imaginary part keep their sign inside ('+', value)."""
    if isinstance(value, Fraction):
        return ("-", -value) if value < 0 else ("+", value)
    if value.imag == 0 and value.real < 0:
        return "-", -value
    return "+", value


def _wrap(text: str) -> str:
    needs = text.startswith("-") or any(ch in text for ch in "+j/")
    return f"({text})" if needs else text


def _render_term(base: Scalar, coeff: Scalar, index_name: str) -> Tuple[str, str]:
    sign, mag = _split_sign(coeff)
    mag_text = format_scalar(mag)
    if "j" in mag_text or "+" in mag_text or mag_text.startswith("-"):
        mag_text = f"({mag_text})"
    if base == 1:
        return sign, mag_text
    base_text = format_scalar(base)
    if not _PLAIN_NUMBER.match(base_text):
        base_text = f"({base_text})"
    power = f"{base_text}^{index_name}"
    if mag == 1:
        return sign, power
    return sign, f"{mag_text}*{power}"


# -- options and solution containers -------------------------------------------


ShiftSpec = Union[str, Sequence[Scalar]]


@dataclass
class SolveOptions:
    """Knobs for solve(); defaults suit small exact systems."""

    order: int = 6
    mode: Mode = Mode.EXACT
    shift: ShiftSpec = "auto"
    matrix: Optional[Sequence[Sequence[Scalar]]] = None
    max_verify_power: int = 5
    seed: int = 0
    verify_tol: float = 1e-8
    collision_tol: float = 1e-9
    unity_bound: int = 24
    shift_seeds: Optional[Sequence[Sequence[Scalar]]] = None

    def __post_init__(self):
        if self.order < 1:
            raise CarlemanError(f"truncation order must be >= 1, got {self.order}")
        if isinstance(self.shift, str) and self.shift not in ("auto", "none"):
            raise CarlemanError(
                f"shift must be 'auto', 'none', or explicit values, got {self.shift!r}")
        if self.max_verify_power < 0:
            raise CarlemanError(
                f"verification power must be >= 0, got {self.max_verify_power}")


@dataclass(frozen=True)
class ClosedFormSolution:
    """Per-variable coefficient tables, in original and shifted coordinates.

    tables[p] maps each initial-condition monomial (degree <= order) to
    the exponential sum multiplying it in variable p's solution;
    offsets[p] is the constant pulled back from the shift. transformed[p]
    is the same table in the shifted/triangularized coordinates, where
    the coefficients are exact; it rides along so stored solutions stay
    verifiable.
    """

    names: Tuple[str, ...]
    offsets: Tuple[Scalar, ...]
    tables: Tuple[Dict[Monomial, ExpSum], ...]
    transformed: Tuple[Dict[Monomial, ExpSum], ...]
    transform: TransformParams
    order: int
    mode: Mode

    @property
    def k(self) -> int:
        return len(self.names)

    def evaluate(self, i: int, z0: Sequence[Scalar]) -> List[Scalar]:
        """Truncated-series value at step i from the initial state z0."""
        if len(z0) != self.k:
            raise ArityError(f"initial state has {len(z0)} entries, "
                             f"expected {self.k}")
        out: List[Scalar] = []
        for p in range(self.k):
            value = self.offsets[p]
            for mono, exp_sum in self.tables[p].items():
                term = exp_sum.evaluate(i)
                for l, e in enumerate(mono):
                    if e:
                        term = term * z0[l] ** e
                value = value + term
            out.append(value)
        return out

    def evaluate_transformed(self, i: int, z0: Sequence[Scalar]) -> List[Scalar]:
        if len(z0) != self.k:
            raise ArityError(f"initial state has {len(z0)} entries, "
                             f"expected {self.k}")
        out: List[Scalar] = []
        for p in range(self.k):
            value = self.mode.zero
            for mono, exp_sum in self.transformed[p].items():
                term = exp_sum.evaluate(i)
                for l, e in enumerate(mono):
                    if e:
                        term = term * z0[l] ** e
                value = value + term
            out.append(value)
        return out

    def _render_table_line(self, p: int) -> str:
        pieces: List[str] = []
        if self.offsets[p] != 0:
            pieces.append(format_scalar(self.offsets[p]))
        for mono in sorted(self.tables[p], key=grlex_key):
            exp_sum = self.tables[p][mono]
            mono_text = _render_initial_monomial(mono, self.names)
            if mono_text:
                pieces.append(f"({exp_sum.render()})*{mono_text}")
            else:
                pieces.append(f"({exp_sum.render()})")
        body = " + ".join(pieces) if pieces else "0"
        return f"{self.names[p]}[i] = {body}"

    def render_text(self) -> str:
        lines = [self._render_table_line(p) for p in range(self.k)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        variables = []
        for p in range(self.k):
            terms = [{"monomial": list(mono),
                      "expsum": self.tables[p][mono].to_json()}
                     for mono in sorted(self.tables[p], key=grlex_key)]
            variables.append({"name": self.names[p],
                              "offset": scalar_to_json(self.offsets[p]),
                              "terms": terms})
        transformed = []
        for p in range(self.k):
            terms = [{"monomial": list(mono),
                      "expsum": self.transformed[p][mono].to_json()}
                     for mono in sorted(self.transformed[p], key=grlex_key)]
            transformed.append({"name": self.names[p], "terms": terms})
        return {
            "variables": variables,
            "transform": {
                "A": [[scalar_to_json(x) for x in row]
                      for row in self.transform.matrix],
                "B": [scalar_to_json(x) for x in self.transform.offset],
            },
            "order": self.order,
            "mode": self.mode.value,
            "transformed": transformed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ClosedFormSolution":
        try:
            mode = Mode(data["mode"])
            order = int(data["order"])
            names = tuple(entry["name"] for entry in data["variables"])
            offsets = tuple(scalar_from_json(mode, entry["offset"])
                            for entry in data["variables"])
            tables = tuple(
                {tuple(term["monomial"]): ExpSum.from_json(mode, term["expsum"])
                 for term in entry["terms"]}
                for entry in data["variables"])
            matrix = [[scalar_from_json(mode, x) for x in row]
                      for row in data["transform"]["A"]]
            offset = [scalar_from_json(mode, x) for x in data["transform"]["B"]]
            transform = TransformParams.create(matrix, offset, mode)
            if "transformed" in data:
                transformed = tuple(
                    {tuple(term["monomial"]): ExpSum.from_json(mode, term["expsum"])
                     for term in entry["terms"]}
                    for entry in data["transformed"])
            elif transform.is_identity():
                transformed = tables
            else:
                raise CarlemanError(
                    "solution file lacks the transformed-coordinate table "
                    "needed to verify a shifted solution")
        except (KeyError, TypeError, ValueError) as exc:
            raise CarlemanError(f"malformed solution JSON: {exc}") from exc
        return cls(names=names, offsets=offsets, tables=tables,
                   transformed=transformed, transform=transform,
                   order=order, mode=mode)


def _render_initial_monomial(mono: Monomial, names: Sequence[str]) -> str:
    factors = []
    for l, e in enumerate(mono):
        if e == 0:
            continue
        factor = f"{names[l]}[0]"
        factors.append(factor if e == 1 else f"{factor}^{e}")
    return "*".join(factors)


# -- pipeline stages ------------------------------------------------------------


def _convert_vector(values: Sequence[Scalar], mode: Mode) -> List[Scalar]:
    out = []
    for v in values:
        if mode.matches(v):
            out.append(v)
        elif isinstance(v, Fraction):
            out.append(mode.from_fraction(v))
        elif isinstance(v, int):
            out.append(mode.from_fraction(Fraction(v)))
        elif mode is Mode.FLOAT:
            out.append(complex(v))
        else:
            raise CarlemanError(f"cannot use {v!r} as an exact scalar")
    return out


def _clean_float_constants(system: PolySystem, tol: float) -> PolySystem:
    if system.mode is not Mode.FLOAT:
        return system
    k = system.k
    polys = []
    for p in system.polys:
        terms = dict(p.terms)
        const = terms.get((0,) * k)
        if const is not None and abs(const) <= tol:
            del terms[(0,) * k]
        polys.append(Poly(k, terms))
    return PolySystem(k=k, depth=1, polys=tuple(polys), mode=system.mode)


@dataclass(frozen=True)
class ShiftCandidate:
    """One fixed-point candidate with its admissibility outcome."""

    offset: Tuple[Scalar, ...]
    report: Optional[AdmissibilityReport]
    note: str
    chosen: bool


def _candidate_sort_key(vector: Sequence[Scalar]):
    magnitude = sum(abs(x) for x in vector)
    all_nonneg = all(
        (x >= 0 if isinstance(x, Fraction) else (x.real >= 0 and x.imag == 0))
        for x in vector)
    return (magnitude, 0 if all_nonneg else 1,
            tuple(sort_key(x) for x in vector))


def resolve_shift(system: PolySystem, opts: SolveOptions
                  ) -> Tuple[List[Scalar], List[ShiftCandidate]]:
    """Pick the shift offset per the options' policy.

    Explicit values and 'none' pass straight through. 'auto' tries fixed
    points ordered by (magnitude, non-negative first, value) and takes
    the first whose shifted system passes the eigenvalue-product check;
    the returned trail records every candidate's outcome.
    """
    system.require_depth_one("shift resolution")
    mode = system.mode
    if not isinstance(opts.shift, str):
        values = _convert_vector(list(opts.shift), mode)
        if len(values) != system.k:
            raise ShiftNotFoundError(
                f"shift: expected {system.k} offset values, got {len(values)}")
        return values, []
    if opts.shift == "none":
        return [mode.zero] * system.k, []
    candidates = fixed_points(system, seeds=opts.shift_seeds, seed=opts.seed)
    candidates.sort(key=_candidate_sort_key)
    trail: List[ShiftCandidate] = []
    chosen: Optional[List[Scalar]] = None
    for cand in candidates:
        shifted = apply_affine(system, TransformParams.shift(cand, mode))
        shifted = _clean_float_constants(shifted, _FLOAT_CONSTANT_TOL)
        try:
            report = check_shift_admissible(
                shifted, max_power=opts.order, unity_bound=opts.unity_bound,
                tol=opts.collision_tol, seed=opts.seed)
        except (TriangularizationError, NotShiftedError) as exc:
            trail.append(ShiftCandidate(tuple(cand), None, str(exc), False))
            continue
        take = report.passed and chosen is None
        trail.append(ShiftCandidate(tuple(cand), report, "", take))
        if take:
            chosen = cand
    if chosen is None:
        tried = ", ".join(
            "[" + ", ".join(format_scalar(x) for x in c.offset) + "]"
            for c in trail) or "none found"
        raise ShiftNotFoundError(
            f"shift: no fixed point gives distinct eigenvalue products up to "
            f"degree {opts.order} (candidates tried: {tried}); "
            f"supply --shift or use --mode float")
    return chosen, trail


def _resolve_basis(shifted: PolySystem, opts: SolveOptions
                   ) -> Tuple[PolySystem, TransformParams]:
    mode = shifted.mode
    if opts.matrix is not None:
        rows = [_convert_vector(row, mode) for row in opts.matrix]
        params = TransformParams.create(rows, [mode.zero] * shifted.k, mode)
        transformed = apply_affine(shifted, params)
        if mode is Mode.FLOAT:
            scale = max(max_abs(transformed.linear_matrix()), 1.0)
            transformed = _zero_subdiagonal_linear(transformed, 1e-10 * scale)
        tol = 0.0 if mode is Mode.EXACT else 1e-12
        if not is_upper_triangular(transformed.linear_matrix(), tol):
            raise TriangularizationError(
                "triangularize: the supplied matrix does not make the linear "
                "part upper triangular")
        return transformed, params
    try:
        return triangularize_linear(shifted, seed=opts.seed)
    except TriangularizationError as exc:
        raise TriangularizationError(f"triangularize: {exc}") from exc


# -- the solver -----------------------------------------------------------------


def resolve_transform(system: PolySystem, opts: SolveOptions,
                      require_shifted: bool = True
                      ) -> Tuple[PolySystem, PolySystem, TransformParams]:
    """Run the transform stages of the pipeline: flatten the depth, apply
    the shift policy, then the triangularizing basis change. Returns the
    flattened system, the fully transformed system, and the combined
    affine parameters. require_shifted=False tolerates a constant term
    that survives (callers that only inspect the matrix want that)."""
    if system.mode is not opts.mode:
        raise CarlemanError(
            f"system is in {system.mode.value} mode but options ask for "
            f"{opts.mode.value}")
    reduced = reduce_depth(system)
    mode = reduced.mode

    # a fixed point of a depth-n recurrence is a constant sequence, so a
    # k-long explicit shift is replicated across the lag copies
    if (not isinstance(opts.shift, str) and system.depth > 1
            and len(opts.shift) == system.k):
        opts = dataclasses.replace(opts, shift=list(opts.shift) * system.depth)

    offset, _ = resolve_shift(reduced, opts)
    shifted = apply_affine(reduced, TransformParams.shift(offset, mode))
    shifted = _clean_float_constants(shifted, _FLOAT_CONSTANT_TOL)
    bad = [p for p, c in enumerate(shifted.constant_vector()) if c != 0]
    if bad and require_shifted:
        if opts.shift == "none":
            raise NotShiftedError(
                "shift: the system has a nonzero constant term and shifting "
                "is disabled; drop shift=none or supply an offset")
        raise NotShiftedError(
            "shift: the constant term survives the requested shift "
            f"(equation {bad[0]}); the offset is not a fixed point")

    transformed, basis_params = _resolve_basis(shifted, opts)
    combined = TransformParams.create(
        [list(r) for r in basis_params.matrix], offset, mode)
    return reduced, transformed, combined


def solve(system: PolySystem, opts: Optional[SolveOptions] = None,
          names: Optional[Sequence[str]] = None) -> ClosedFormSolution:
    """Produce the truncated closed form of a polynomial recurrence.

    Depth-n systems are flattened first, so the solution is expressed
    over the flattened variables (lag copies included). The options'
    shift and matrix policies control the affine transform; the
    eigenvalue-product admissibility gate runs after both.
    """
    opts = opts or SolveOptions()
    var_names = reduced_variable_names(system, names)
    reduced, transformed, combined = resolve_transform(system, opts)
    w = reduced.k
    mode = reduced.mode

    report = check_shift_admissible(
        transformed, max_power=opts.order, unity_bound=opts.unity_bound,
        tol=opts.collision_tol, seed=opts.seed)
    if not report.passed:
        mono_a, mono_b, value = report.collisions[0]
        raise RepeatedEigenvalueError(
            f"admissibility: eigenvalue products collide up to degree "
            f"{opts.order}: {mono_a} and {mono_b} both give "
            f"{format_scalar(value)}; pick a different shift or lower the order",
            collisions=report.collisions)

    basis = MonomialBasis(w, opts.order)
    transition = build_transition(transformed, basis)
    if not transition.is_triangular:
        raise TriangularizationError(
            "triangularize: transition matrix is not upper triangular after "
            "the transform")
    spectral = decompose(transition.rows, mode, tol=opts.collision_tol)
    return _assemble(transformed, basis, spectral, combined, var_names, opts)


def reduced_variable_names(system: PolySystem,
                           names: Optional[Sequence[str]] = None
                           ) -> Tuple[str, ...]:
    w = system.k * system.depth
    if names is not None and len(names) == w:
        return tuple(names)
    if names is not None and len(names) == system.k:
        base = list(names)
    elif system.k == 1:
        base = ["u"]
    else:
        base = [f"u{l + 1}" for l in range(system.k)]
    out = list(base)
    for lag in range(1, system.depth):
        out.extend(f"{nm}_m{lag}" for nm in base)
    return tuple(out)


def _assemble(transformed: PolySystem, basis: MonomialBasis,
              spectral, combined: TransformParams,
              names: Tuple[str, ...], opts: SolveOptions) -> ClosedFormSolution:
    mode = transformed.mode
    w = transformed.k
    size = len(basis)
    modal = spectral.modal
    modal_inv = spectral.modal_inv
    eigs = spectral.eigenvalues

    var_rows = [basis.index_of(tuple(1 if t == q else 0 for t in range(w)))
                for q in range(w)]

    # coefficient of basis monomial l in transformed variable q at step i
    flows: List[List[Optional[ExpSum]]] = [[None] * size for _ in range(w)]
    transformed_tables: List[Dict[Monomial, ExpSum]] = [dict() for _ in range(w)]
    for q in range(w):
        row = var_rows[q]
        for l in range(row, size):
            pairs = [(eigs[j], modal[row][j] * modal_inv[j][l])
                     for j in range(row, l + 1)]
            exp_sum = ExpSum.from_terms(mode, pairs)
            if not exp_sum.is_zero():
                flows[q][l] = exp_sum
                transformed_tables[q][basis.monomials[l]] = exp_sum

    a_rows = [list(r) for r in combined.matrix]
    a_inv = [list(r) for r in combined.matrix_inv]
    offset = list(combined.offset)
    neg_ab = [-x for x in mat_vec(a_rows, offset)]

    one = mode.one
    tables: List[Dict[Monomial, ExpSum]] = [dict() for _ in range(w)]
    identity_transform = combined.is_identity()
    if identity_transform:
        tables = [dict(t) for t in transformed_tables]
    else:
        for l in range(1, size):
            # basis monomial l of the shifted coordinates, written in the
            # original initial conditions
            expansion = Poly.from_monomial(w, basis.monomials[l], one)
            expansion = expansion.substitute_affine(a_rows, neg_ab)
            carriers: List[Tuple[int, ExpSum]] = []
            for p in range(w):
                pairs = []
                for q in range(w):
                    if a_inv[p][q] != 0 and flows[q][l] is not None:
                        pairs.extend((b, c * a_inv[p][q])
                                     for b, c in flows[q][l].terms)
                if pairs:
                    carriers.append((p, ExpSum.from_terms(mode, pairs)))
            for mono, gamma in expansion.terms.items():
                for p, carrier in carriers:
                    addition = carrier.scaled(gamma)
                    if addition.is_zero():
                        continue
                    current = tables[p].get(mono)
                    tables[p][mono] = (addition if current is None
                                       else current + addition)
        for p in range(w):
            tables[p] = {m: s for m, s in tables[p].items() if not s.is_zero()}

    return ClosedFormSolution(
        names=names,
        offsets=tuple(offset),
        tables=tuple(tables),
        transformed=tuple(transformed_tables),
        transform=combined,
        order=basis.order,
        mode=mode,
    )


# -- brute-force oracle and verification ----------------------------------------

_ORACLE_TERM_LIMIT = 10 ** 6


def _identity_polys(system: PolySystem) -> List[Poly]:
    one = system.mode.one
    return [Poly.variable(system.k, l).scaled(one) for l in range(system.k)]


def _oracle_step(system: PolySystem, state: List[Poly],
                 max_degree: Optional[int]) -> List[Poly]:
    new_state = [p.compose(state, max_degree) for p in system.polys]
    total_terms = sum(len(p.terms) for p in new_state)
    if total_terms > _ORACLE_TERM_LIMIT:
        raise SizeLimitError(
            f"symbolic iteration exceeded {_ORACLE_TERM_LIMIT} terms; "
            f"lower the step count or the degree cutoff")
    return new_state


def oracle_iterate_symbolic(system: PolySystem, i: int,
                            max_degree: Optional[int] = None) -> List[Poly]:
    """The i-fold composition of the update map, expanded in the initial
    values. With a zero constant term and a degree cutoff N, the retained
    coefficients are exact (degree grading); without a cutoff the
    expansion is exact but can explode, so a term-count guard applies.
    """
    system.require_depth_one("symbolic iteration")
    if i < 0:
        raise ValueError(f"iteration count must be non-negative, got {i}")
    state = _identity_polys(system)
    for _ in range(i):
        state = _oracle_step(system, state, max_degree)
    return state


@dataclass(frozen=True)
class VerificationRow:
    step: int
    variable: str
    monomial: Monomial
    expected: Scalar
    got: Scalar
    error: float
    ok: bool


@dataclass(frozen=True)
class VerificationReport:
    rows: Tuple[VerificationRow, ...]
    passed: bool
    max_discrepancy: float
    coordinates: str
    order: int
    steps: int

    def step_summary(self) -> List[Tuple[int, bool, float]]:
        out = []
        for i in range(self.steps + 1):
            step_rows = [r for r in self.rows if r.step == i]
            ok = all(r.ok for r in step_rows)
            worst = max((r.error for r in step_rows), default=0.0)
            out.append((i, ok, worst))
        return out

    def describe(self) -> str:
        lines = [f"coordinates: {self.coordinates}",
                 f"checked steps 0..{self.steps} at order {self.order}"]
        for i, ok, worst in self.step_summary():
            status = "PASS" if ok else "FAIL"
            lines.append(f"i={i}: {status} (max error {worst:.3g})")
            if not ok:
                for row in self.rows:
                    if row.step == i and not row.ok:
                        lines.append(
                            f"  {row.variable} {tuple(row.monomial)}: expected "
                            f"{format_scalar(row.expected)}, got "
                            f"{format_scalar(row.got)}")
        lines.append(
            f"result: {'PASS' if self.passed else 'FAIL'} "
            f"(max discrepancy {self.max_discrepancy:.3g})")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "coordinates": self.coordinates,
            "order": self.order,
            "steps": self.steps,
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "rows": [{
                "i": r.step,
                "variable": r.variable,
                "monomial": list(r.monomial),
                "expected": scalar_to_json(r.expected),
                "got": scalar_to_json(r.got),
                "error": r.error,
                "ok": r.ok,
            } for r in self.rows],
        }


def verify(solution: ClosedFormSolution, system: PolySystem,
           max_power: Optional[int] = None, tol: float = 1e-8
           ) -> VerificationReport:
    """Compare every stored coefficient against symbolic iteration.

    The comparison runs in the shifted coordinates when the solution
    carries a nonzero offset (coefficients are exact there) and in the
    original coordinates otherwise. Exact mode demands equality; float
    mode allows relative error up to tol.
    """
    steps = solution.order if max_power is None else max_power
    reduced = reduce_depth(system)
    if reduced.mode is not solution.mode:
        raise CarlemanError("solution and system modes differ")
    if reduced.k != solution.k:
        raise CarlemanError(
            f"solution covers {solution.k} variables, system has {reduced.k}")
    use_transformed = any(x != 0 for x in solution.offsets)
    if use_transformed:
        target = apply_affine(reduced, solution.transform)
        target = _clean_float_constants(target, _FLOAT_CONSTANT_TOL)
        tables = solution.transformed
        coordinates = "transformed"
    else:
        target = reduced
        tables = solution.tables
        coordinates = "original"
    exact = solution.mode is Mode.EXACT
    order = solution.order

    rows: List[VerificationRow] = []
    state = _identity_polys(target)
    worst = 0.0
    for i in range(steps + 1):
        for p in range(target.k):
            oracle_terms = {m: c for m, c in state[p].terms.items()
                            if sum(m) <= order}
            monomials = set(oracle_terms) | set(tables[p])
            for mono in sorted(monomials, key=grlex_key):
                expected = oracle_terms.get(mono, target.mode.zero)
                stored = tables[p].get(mono)
                got = stored.evaluate(i) if stored is not None else target.mode.zero
                if exact:
                    ok = expected == got
                    error = float(abs(expected - got))
                else:
                    scale = max(1.0, abs(expected))
                    error = abs(expected - got)
                    ok = error <= tol * scale
                worst = max(worst, error)
                rows.append(VerificationRow(
                    step=i, variable=solution.names[p], monomial=mono,
                    expected=expected, got=got, error=error, ok=ok))
        if i < steps:
            state = _oracle_step(target, state, order)
    return VerificationReport(
        rows=tuple(rows),
        passed=all(r.ok for r in rows),
        max_discrepancy=worst,
        coordinates=coordinates,
        order=order,
        steps=steps,
    )


# -- evaluation ------------------------------------------------------------------


def eval_closed_form(solution: ClosedFormSolution, i: int,
                     z0: Sequence[Scalar]) -> List[Scalar]:
    """Truncated-series value at step i; exact identity at i = 0."""
    return solution.evaluate(i, list(z0))


def eval_direct(system: PolySystem, i: int,
                history: Sequence[Scalar]) -> List[Scalar]:
    """Ground-truth iteration. history holds the first n steps of every
    variable, chronologically: u_0 block, u_1 block, ..., u_{n-1} block.
    Returns the k values at step i (read straight from the history when
    i < n)."""
    k, n = system.k, system.depth
    if i < 0:
        raise ValueError(f"step index must be non-negative, got {i}")
    if len(history) != n * k:
        raise ArityError(
            f"history needs {n * k} values ({n} steps of {k} variables), "
            f"got {len(history)}")
    if i < n:
        return list(history[i * k:(i + 1) * k])
    # flattened state at step n-1: newest block first
    state: List[Scalar] = []
    for j in range(n):
        block = history[(n - 1 - j) * k:(n - j) * k]
        state.extend(block)
    update = system.polys
    for _ in range(n - 1, i):
        fresh = [p.evaluate(state) for p in update]
        state = fresh + state[:k * (n - 1)]
    return state[:k]


def history_to_reduced_state(system: PolySystem,
                             history: Sequence[Scalar]) -> List[Scalar]:
    """Initial state of the flattened system: newest history block first.
    Feeding this to a solution of reduce_depth(system) at step j yields
    the values at original step j + depth - 1."""
    k, n = system.k, system.depth
    if len(history) != n * k:
        raise ArityError(
            f"history needs {n * k} values ({n} steps of {k} variables), "
            f"got {len(history)}")
    state: List[Scalar] = []
    for j in range(n):
        state.extend(history[(n - 1 - j) * k:(n - j) * k])
    return state
