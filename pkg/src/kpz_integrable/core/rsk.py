import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from kpz_integrable.core.combinat import (
    INTEGER_MODE,
    GTPattern,
    Partition,
    WeightMatrix,
    Word,
    gt_to_tableau,
    permutation_matrix,
    validate_gt,
)
from kpz_integrable.core.exceptions import InvalidImageError, StructuralError
from kpz_integrable.core.local_moves import MAX_PLUS_RULE, MoveRule, forward_sweep, inverse_sweep

logger = logging.getLogger(__name__)

INSERTION = "insertion"
LOCAL_MOVES = "local-moves"
RSK_BACKENDS = (INSERTION, LOCAL_MOVES)


@dataclass(frozen=True)
class RskOutput:
    """P-side pattern z (depth N), Q-side pattern z_prime (depth n) and the glued n x N array."""

    z: GTPattern
    z_prime: GTPattern
    glued: Tuple[Tuple[int, ...], ...]

    @property
    def shape(self) -> Partition:
        return self.z.shape

    @property
    def dims(self) -> Tuple[int, int]:
        return len(self.glued), len(self.glued[0])


def unglue(t: Sequence[Sequence], n: int, big_n: int) -> Tuple[tuple, tuple]:
    """Split an n x N output array into the rows of z (depth N) and z' (depth n).

    z^k_r = t_{n-r+1, k-r+1} and z'^l_r = t_{l-r+1, N-r+1}.
    """
    width = min(n, big_n)
    z_rows = tuple(
        tuple(t[n - r][k - r] for r in range(1, min(k, width) + 1)) for k in range(1, big_n + 1)
    )
    z_prime_rows = tuple(
        tuple(t[l - r][big_n - r] for r in range(1, min(l, width) + 1)) for l in range(1, n + 1)
    )
    return z_rows, z_prime_rows


def glue(z, z_prime, n: int, big_n: int) -> Tuple[tuple, ...]:
    """Inverse of unglue; the two patterns share the diagonal i - j = n - N."""
    rows = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, big_n + 1):
            if i - j >= n - big_n:
                row.append(z.entry(j + n - i, n - i + 1))
            else:
                row.append(z_prime.entry(i + big_n - j, big_n - j + 1))
        rows.append(tuple(row))
    return tuple(rows)


def row_insert_word(x: Word, a: Word) -> Tuple[Word, Word]:
    """Insert word a into the tableau row x via the (max,+) recursion.

    Both words live on the alphabet i..N. The row x may be given empty.

    Returns:
        (x_tilde, b): the new row and the bumped word on i+1..N (no entries when i = N).
    """
    if x.mode != INTEGER_MODE or a.mode != INTEGER_MODE:
        raise StructuralError(
            f"row_insert_word needs integer-mode words, got {x.mode} and {a.mode}"
        )
    if not x.entries:
        x = Word((0,) * len(a.entries), start=a.start)
    if x.start != a.start or len(x.entries) != len(a.entries):
        raise StructuralError(
            f"Words on different alphabets: {x.start}..{x.end} vs {a.start}..{a.end}"
        )

    xi = x.cumulants()
    xi_tilde: List[int] = []
    for k, (a_k, xi_k) in enumerate(zip(a.entries, xi)):
        xi_tilde.append(xi_k + a_k if k == 0 else max(xi_tilde[-1], xi_k) + a_k)

    x_tilde = tuple(
        xi_tilde[k] - (xi_tilde[k - 1] if k > 0 else 0) for k in range(len(xi_tilde))
    )
    b = tuple(a.entries[k] + x.entries[k] - x_tilde[k] for k in range(1, len(x_tilde)))
    return Word(x_tilde, start=a.start), Word(b, start=a.start + 1)


def insert_row_word(rows: Sequence[Word], word: Word) -> Tuple[List[Word], Tuple[int, ...]]:
    """Insert one word into a tableau stored as row words (row r on letters r..N).

    Returns:
        The updated rows and the new shape (the recording row).
    """
    updated = list(rows)
    carried = word
    for r in range(len(updated)):
        updated[r], carried = row_insert_word(updated[r], carried)
        if carried.is_empty:
            break
    if not carried.is_empty:
        raise StructuralError("Word bumped past the last tableau row; too few rows allocated")
    shape = tuple(sum(row.entries) for row in updated)
    return updated, shape


def _rsk_by_insertion(matrix: WeightMatrix) -> RskOutput:
    n, big_n = matrix.shape
    width = min(n, big_n)
    rows = [Word((0,) * (big_n - r + 1), start=r) for r in range(1, width + 1)]
    shapes: List[Tuple[int, ...]] = []
    for i in range(1, n + 1):
        rows, shape = insert_row_word(rows, matrix.row_word(i))
        shapes.append(shape)

    cumulants = [row.cumulants() for row in rows]
    z_rows = tuple(
        tuple(cumulants[r - 1][k - r] for r in range(1, min(k, width) + 1))
        for k in range(1, big_n + 1)
    )
    z_prime_rows = tuple(
        tuple(shapes[i - 1][r - 1] for r in range(1, min(i, width) + 1)) for i in range(1, n + 1)
    )
    z = GTPattern(z_rows, width=width)
    z_prime = GTPattern(z_prime_rows, width=width)
    return RskOutput(z, z_prime, glue(z, z_prime, n, big_n))


def _rsk_by_local_moves(matrix: WeightMatrix, rule: MoveRule) -> RskOutput:
    n, big_n = matrix.shape
    width = min(n, big_n)
    t = forward_sweep(matrix.entries, rule)
    z_rows, z_prime_rows = unglue(t, n, big_n)
    return RskOutput(
        GTPattern(z_rows, width=width),
        GTPattern(z_prime_rows, width=width),
        tuple(tuple(row) for row in t),
    )


def rsk_forward(
    matrix: WeightMatrix, backend: str = LOCAL_MOVES, rule: Optional[MoveRule] = None
) -> RskOutput:
    """Combinatorial RSK of a nonnegative integer matrix.

    Args:
        matrix: integer-mode weights, row i is the i-th inserted word.
        backend: "insertion" (row insertion of words) or "local-moves".
        rule: replacement move rule for the local-moves backend (used by the
            mutation check in `kpz verify`).
    """
    if matrix.mode != INTEGER_MODE:
        raise StructuralError("rsk_forward needs an integer-mode matrix; use grsk_forward")
    if backend == INSERTION:
        return _rsk_by_insertion(matrix)
    if backend == LOCAL_MOVES:
        return _rsk_by_local_moves(matrix, rule or MAX_PLUS_RULE)
    raise StructuralError(f"Unknown RSK backend '{backend}'. Expected one of {RSK_BACKENDS}")


def _check_output(z, z_prime) -> Tuple[int, int]:
    n, big_n = z_prime.depth, z.depth
    width = min(n, big_n)
    if z.width != width or z_prime.width != width:
        raise InvalidImageError(
            f"Pattern widths ({z.width}, {z_prime.width}) do not fit an {n}x{big_n} matrix"
        )
    if tuple(z.bottom) != tuple(z_prime.bottom):
        raise InvalidImageError(f"Shapes differ: {z.bottom} vs {z_prime.bottom}")
    return n, big_n


def rsk_inverse(out: RskOutput) -> WeightMatrix:
    """Recover the matrix by running the max-plus local moves backwards."""
    n, big_n = _check_output(out.z, out.z_prime)
    for name, pattern in (("z", out.z), ("z_prime", out.z_prime)):
        valid, where = validate_gt(pattern)
        if not valid:
            raise InvalidImageError(f"{name} violates interlacing at {where}")
    if any(v < 0 for v in out.z.flat()):
        raise InvalidImageError("GT pattern entries must be nonnegative")

    t = glue(out.z, out.z_prime, n, big_n)
    w = inverse_sweep(t, MAX_PLUS_RULE)
    if any(v < 0 for row in w for v in row):
        raise InvalidImageError("Inverse produced negative weights")
    return WeightMatrix.from_rows(w, mode=INTEGER_MODE)


def rs_permutation(sigma: Sequence[int]) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[Tuple[int, ...], ...]]:
    """Robinson-Schensted (P, Q) tableaux of a permutation in one-line notation."""
    out = rsk_forward(permutation_matrix(sigma))
    return gt_to_tableau(out.z), gt_to_tableau(out.z_prime)
