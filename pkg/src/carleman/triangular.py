"""Eigendecomposition of upper-triangular matrices with distinct diagonal.

Such a matrix T factors as P D P^-1 where D is its diagonal and column a
of P is the eigenvector for D[a][a], computed by back substitution:

    v[a] = 1,
    v[b] = (sum over c in (b, a] of T[b][c] v[c]) / (D[a][a] - T[b][b])

for b from a-1 down to 0. P is unit upper triangular in this
normalization, so inverting it is another back substitution. Matrix
powers then cost one diagonal power plus two triangular multiplies,
and the factorization is what the closed-form solver reads its
coefficients from.

The module also carries direct combinatorial formulas for single entries
of P and P^-1 (sums over strictly increasing index chains). They are
exponential in matrix size and exist to cross-check the linear-algebra
route on small inputs, not to be fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .errors import RepeatedEigenvalueError
from .linalg import Matrix, identity, is_upper_triangular, mat_mul
from .scalars import Mode, Scalar, format_scalar, nearly_equal


@dataclass(frozen=True)
class SpectralDecomposition:
    """T = modal * diag(eigenvalues) * modal_inv, modal unit triangular."""

    eigenvalues: Tuple[Scalar, ...]
    modal: Tuple[Tuple[Scalar, ...], ...]
    modal_inv: Tuple[Tuple[Scalar, ...], ...]
    mode: Mode

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def _check_distinct_diagonal(diagonal: Sequence[Scalar], mode: Mode,
                             tol: float) -> None:
    collisions = []
    for a in range(len(diagonal)):
        for b in range(a + 1, len(diagonal)):
            same = (diagonal[a] == diagonal[b] if mode is Mode.EXACT
                    else nearly_equal(diagonal[a], diagonal[b], tol))
            if same:
                collisions.append((a, b, diagonal[a]))
    if collisions:
        shown = ", ".join(
            f"positions {a} and {b} share {format_scalar(v)}"
            for a, b, v in collisions[:4])
        more = "" if len(collisions) <= 4 else f" (and {len(collisions) - 4} more)"
        raise RepeatedEigenvalueError(
            f"repeated diagonal entries: {shown}{more}", collisions=tuple(collisions))


def decompose(matrix: Matrix, mode: Mode, tol: float = 1e-9) -> SpectralDecomposition:
    """Eigendecompose an upper-triangular matrix with distinct diagonal."""
    n = len(matrix)
    if not is_upper_triangular(matrix, 0.0 if mode is Mode.EXACT else 1e-12):
        raise ValueError("decompose expects an upper-triangular matrix")
    diagonal = [matrix[i][i] for i in range(n)]
    _check_distinct_diagonal(diagonal, mode, tol)
    modal = identity(n, mode)
    for a in range(n):
        for b in range(a - 1, -1, -1):
            acc = mode.zero
            for c in range(b + 1, a + 1):
                if matrix[b][c] != 0:
                    acc = acc + matrix[b][c] * modal[c][a]
            modal[b][a] = acc / (diagonal[a] - diagonal[b])
    modal_inv = invert_unit_triangular(modal, mode)
    return SpectralDecomposition(
        eigenvalues=tuple(diagonal),
        modal=tuple(tuple(row) for row in modal),
        modal_inv=tuple(tuple(row) for row in modal_inv),
        mode=mode,
    )


def invert_unit_triangular(matrix: Matrix, mode: Mode) -> Matrix:
    """Invert an upper-triangular matrix by back substitution.

    Works for any nonzero diagonal, not just unit; named for the common
    caller which always hands in unit-diagonal modal matrices.
    """
    n = len(matrix)
    out = identity(n, mode)
    for m in range(n):
        out[m][m] = mode.one / matrix[m][m]
        for b in range(m - 1, -1, -1):
            acc = mode.zero
            for j in range(b + 1, m + 1):
                if matrix[b][j] != 0:
                    acc = acc + matrix[b][j] * out[j][m]
            out[b][m] = -acc / matrix[b][b]
    return out


def power_from_decomposition(spec: SpectralDecomposition, exponent: int) -> Matrix:
    """Reassemble T^exponent as modal * diag(eigs^exponent) * modal_inv."""
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    n = spec.size
    scaled = [[spec.modal[r][c] * spec.eigenvalues[c] ** exponent
               for c in range(n)] for r in range(n)]
    return mat_mul(scaled, [list(row) for row in spec.modal_inv])


# -- combinatorial single-entry formulas (cross-checks, exponential cost) ------

_CHAIN_SIZE_CAP = 10


def _require_small(n: int) -> None:
    if n > _CHAIN_SIZE_CAP:
        raise ValueError(
            f"chain-sum formulas are exponential; capped at {_CHAIN_SIZE_CAP}x"
            f"{_CHAIN_SIZE_CAP} (got {n})")


def _chains(start: int, end: int) -> List[Tuple[int, ...]]:
    """All strictly increasing index chains from start to end inclusive."""
    if start == end:
        return [(start,)]
    out = []
    for nxt in range(start + 1, end + 1):
        for tail in _chains(nxt, end):
            out.append((start,) + tail)
    return out


def chain_sum_eigenvector_entry(matrix: Matrix, b: int, a: int,
                                mode: Mode) -> Scalar:
    """Entry b of the eigenvector for diagonal position a, as a sum over
    strictly increasing chains b = l0 < ... < lp = a of

        (-1)^(p+1) * prod_j M[l_j][l_{j+1}] / (M[l_j][l_j] - M[a][a]).

    Matches back substitution entry for entry; used only to cross-check it.
    """
    _require_small(len(matrix))
    if b == a:
        return mode.one
    if b > a:
        return mode.zero
    lam = matrix[a][a]
    total = mode.zero
    for chain in _chains(b, a):
        p = len(chain) - 2
        product = mode.one
        for l_cur, l_next in zip(chain, chain[1:]):
            product = product * matrix[l_cur][l_next]
            if l_cur != a:
                product = product / (matrix[l_cur][l_cur] - lam)
        total = total + product * (mode.one if p % 2 else -mode.one)
    return total


def chain_sum_inverse_entry(matrix: Matrix, b: int, m: int, mode: Mode) -> Scalar:
    """Entry (b, m) of the inverse of an upper-triangular matrix, as
    (1 / M[m][m]) times a sum over strictly increasing chains
    b = l0 < ... < lp = m of (-1)^(p+1) prod_j M[l_j][l_{j+1}] / M[l_j][l_j].
    """
    _require_small(len(matrix))
    if b == m:
        return mode.one / matrix[m][m]
    if b > m:
        return mode.zero
    total = mode.zero
    for chain in _chains(b, m):
        p = len(chain) - 2
        product = mode.one
        for l_cur, l_next in zip(chain, chain[1:]):
            product = product * matrix[l_cur][l_next] / (matrix[l_cur][l_cur])
        total = total + product * (mode.one if p % 2 else -mode.one)
    return total / matrix[m][m]
