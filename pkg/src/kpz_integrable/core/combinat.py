import bisect
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Real
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from kpz_integrable.core.config import BRUTE_FORCE_MAX_CELLS
from kpz_integrable.core.exceptions import ContractViolation, StructuralError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction, float]
Cell = Tuple[int, int]

INTEGER_MODE = "integer"
GEOMETRIC_MODE = "geometric"
MODES = (INTEGER_MODE, GEOMETRIC_MODE)

MAX_PLUS = "max-plus"
SUM_PRODUCT = "sum-product"


def _is_integer(value) -> bool:
    return isinstance(value, Integral) and not isinstance(value, bool)


def _as_python_number(value) -> Number:
    """Unwrap numpy scalars so exact arithmetic stays exact."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise StructuralError(f"Unknown mode '{mode}'. Expected one of {MODES}.")


def _check_entry(value, mode: str, where: str) -> None:
    if mode == INTEGER_MODE:
        if not _is_integer(value) or value < 0:
            raise StructuralError(
                f"{where}: integer mode requires nonnegative integers, got {value!r}"
            )
    else:
        if not isinstance(value, Real) or isinstance(value, bool) or not value > 0:
            raise StructuralError(
                f"{where}: geometric mode requires strictly positive reals, got {value!r}"
            )


# --- Partitions ---


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing tuple of nonnegative integers, stored without trailing zeros."""

    parts: Tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(_as_python_number(p) for p in self.parts)
        for p in parts:
            if not _is_integer(p) or p < 0:
                raise StructuralError(f"Partition parts must be nonnegative integers: {parts}")
        for left, right in zip(parts, parts[1:]):
            if left < right:
                raise StructuralError(f"Partition parts must be weakly decreasing: {parts}")
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, *parts: int) -> "Partition":
        return cls(tuple(parts))

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def part(self, i: int) -> int:
        """1-based part; zero beyond the length."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def padded(self, n: int) -> Tuple[int, ...]:
        if n < len(self.parts):
            raise StructuralError(f"Cannot pad {self} to {n} parts")
        return self.parts + (0,) * (n - len(self.parts))

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition(
            tuple(sum(1 for p in self.parts if p >= k) for k in range(1, self.parts[0] + 1))
        )

    def contains(self, inner: "Partition") -> bool:
        return all(self.part(i) >= inner.part(i) for i in range(1, len(inner) + 1))

    def is_horizontal_strip_over(self, inner: "Partition") -> bool:
        """True iff self/inner is a horizontal strip (inner interlaces self)."""
        if not self.contains(inner):
            return False
        return all(self.part(i + 1) <= inner.part(i) for i in range(1, len(self) + 1))

    def is_vertical_strip_over(self, inner: "Partition") -> bool:
        if not self.contains(inner):
            return False
        return all(
            self.part(i) - inner.part(i) in (0, 1) for i in range(1, len(self) + 1)
        )

    def add_box(self, row: int) -> Optional["Partition"]:
        """Partition with one box added in the given 1-based row, or None if not a partition."""
        if row < 1 or row > len(self.parts) + 1:
            return None
        if row > 1 and self.part(row - 1) <= self.part(row):
            return None
        parts = list(self.padded(max(row, len(self.parts))))
        parts[row - 1] += 1
        return Partition(tuple(parts))

    def remove_box(self, row: int) -> Optional["Partition"]:
        if row < 1 or row > len(self.parts):
            return None
        if self.part(row) - 1 < self.part(row + 1):
            return None
        parts = list(self.parts)
        parts[row - 1] -= 1
        return Partition(tuple(parts))


def partitions_of(
    n: int, max_length: Optional[int] = None, max_part: Optional[int] = None
) -> Iterator[Partition]:
    """All partitions of n, in reverse lexicographic order, with optional caps."""
    if n < 0:
        return
    if max_length is not None and max_length < 0:
        return

    def _rec(remaining: int, cap: int, slots: Optional[int]) -> Iterator[Tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        if slots == 0:
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in _rec(remaining - first, first, None if slots is None else slots - 1):
                yield (first,) + rest

    cap = n if max_part is None else max_part
    for parts in _rec(n, cap, max_length):
        yield Partition(parts)


def partitions_up_to(
    max_size: int, max_length: Optional[int] = None, max_part: Optional[int] = None
) -> Iterator[Partition]:
    for n in range(max_size + 1):
        yield from partitions_of(n, max_length=max_length, max_part=max_part)


def partitions_in_box(max_part: int, max_length: int) -> Iterator[Partition]:
    """Partitions fitting in a max_length x max_part rectangle."""
    for n in range(max_part * max_length + 1):
        yield from partitions_of(n, max_length=max_length, max_part=max_part)


def interlacing_rows(row: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """All rows mu of length len(row)-1 with row[j+1] <= mu[j] <= row[j]."""
    ranges = [range(row[j + 1], row[j] + 1) for j in range(len(row) - 1)]
    for mu in itertools.product(*ranges):
        yield tuple(mu)


def horizontal_strips(
    inner: Partition, added: int, max_length: Optional[int] = None
) -> Iterator[Partition]:
    """Partitions lam with lam/inner a horizontal strip of `added` boxes."""
    n = len(inner) + 1
    if max_length is not None:
        n = min(n, max_length)
        if len(inner) > max_length:
            return
    base = inner.padded(max(n, len(inner)))

    def _rec(i: int, remaining: int) -> Iterator[Tuple[int, ...]]:
        if i == n:
            if remaining == 0:
                yield ()
            return
        upper = remaining if i == 0 else min(remaining, base[i - 1] - base[i])
        for extra in range(upper, -1, -1):
            for rest in _rec(i + 1, remaining - extra):
                yield (base[i] + extra,) + rest

    for parts in _rec(0, added):
        yield Partition(parts + base[n:])


# --- Words and matrices ---


@dataclass(frozen=True)
class Word:
    """Letter multiplicities (x_start, ..., x_end) over the alphabet start..end."""

    entries: Tuple[Number, ...]
    start: int = 1
    mode: str = INTEGER_MODE

    def __post_init__(self):
        _check_mode(self.mode)
        entries = tuple(_as_python_number(e) for e in self.entries)
        if self.start < 1:
            raise StructuralError(f"Word start index must be >= 1, got {self.start}")
        for k, e in enumerate(entries):
            _check_entry(e, self.mode, f"Word letter {self.start + k}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_letters(
        cls, letters: Iterable[int], alphabet_size: int, start: int = 1
    ) -> "Word":
        counts = [0] * (alphabet_size - start + 1)
        for letter in letters:
            if not start <= letter <= alphabet_size:
                raise StructuralError(f"Letter {letter} outside {start}..{alphabet_size}")
            counts[letter - start] += 1
        return cls(tuple(counts), start=start)

    @property
    def end(self) -> int:
        return self.start + len(self.entries) - 1

    @property
    def is_empty(self) -> bool:
        if self.mode == GEOMETRIC_MODE:
            return len(self.entries) == 0
        return all(e == 0 for e in self.entries)

    def entry(self, k: int) -> Number:
        return self.entries[k - self.start]

    def letters(self) -> List[int]:
        if self.mode != INTEGER_MODE:
            raise StructuralError("Only integer-mode words spell out letters")
        return [self.start + k for k, e in enumerate(self.entries) for _ in range(e)]

    def cumulants(self) -> List[Number]:
        """Partial sums (integer mode) or partial products (geometric mode)."""
        if self.mode == INTEGER_MODE:
            return list(itertools.accumulate(self.entries))
        return list(itertools.accumulate(self.entries, lambda u, v: u * v))


def word_from_row(row: Sequence[Number], start: int = 1, mode: Optional[str] = None) -> Word:
    values = tuple(_as_python_number(v) for v in row)
    if mode is None:
        mode = INTEGER_MODE if all(_is_integer(v) for v in values) else GEOMETRIC_MODE
    return Word(values, start=start, mode=mode)


@dataclass(frozen=True)
class WeightMatrix:
    """Rectangular n x N weight array w^i_j, integer or positive-real mode."""

    entries: Tuple[Tuple[Number, ...], ...]
    mode: str = INTEGER_MODE

    def __post_init__(self):
        _check_mode(self.mode)
        rows = tuple(tuple(_as_python_number(v) for v in row) for row in self.entries)
        if not rows or not rows[0]:
            raise StructuralError("WeightMatrix needs at least one row and one column")
        width = len(rows[0])
        for i, row in enumerate(rows, start=1):
            if len(row) != width:
                raise StructuralError(
                    f"WeightMatrix is not rectangular: row {i} has {len(row)} entries, expected {width}"
                )
            for j, value in enumerate(row, start=1):
                _check_entry(value, self.mode, f"w[{i}][{j}]")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Number]], mode: Optional[str] = None) -> "WeightMatrix":
        values = [[_as_python_number(v) for v in row] for row in rows]
        if mode is None:
            flat = [v for row in values for v in row]
            mode = INTEGER_MODE if all(_is_integer(v) for v in flat) else GEOMETRIC_MODE
        return cls(tuple(tuple(row) for row in values), mode=mode)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def cells(self) -> int:
        return self.rows * self.cols

    def entry(self, i: int, j: int) -> Number:
        return self.entries[i - 1][j - 1]

    def row_word(self, i: int) -> Word:
        return Word(self.entries[i - 1], start=1, mode=self.mode)

    def transpose(self) -> "WeightMatrix":
        return WeightMatrix(tuple(zip(*self.entries)), mode=self.mode)

    def as_lists(self) -> List[List[Number]]:
        return [list(row) for row in self.entries]

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries], dtype=float)

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and self.entries == self.transpose().entries


def permutation_matrix(sigma: Sequence[int]) -> WeightMatrix:
    """Row i carries a single 1 in column sigma_i (one-line notation, 1-based)."""
    n = len(sigma)
    if sorted(sigma) != list(range(1, n + 1)):
        raise StructuralError(f"Not a permutation of 1..{n}: {tuple(sigma)}")
    rows = [[1 if j == sigma[i] else 0 for j in range(1, n + 1)] for i in range(n)]
    return WeightMatrix.from_rows(rows, mode=INTEGER_MODE)


# --- Gelfand-Tsetlin patterns ---


@dataclass(frozen=True)
class _TriangularPattern:
    """Rows z^1..z^d; row k has min(k, width) entries (width < depth for truncated patterns)."""

    rows: Tuple[Tuple[Number, ...], ...]
    width: Optional[int] = None

    def __post_init__(self):
        rows = tuple(tuple(_as_python_number(v) for v in row) for row in self.rows)
        if not rows:
            raise StructuralError("A pattern needs at least one row")
        width = len(rows) if self.width is None else self.width
        if width < 1 or width > len(rows):
            raise StructuralError(f"Pattern width {width} outside 1..{len(rows)}")
        for k, row in enumerate(rows, start=1):
            if len(row) != min(k, width):
                raise StructuralError(
                    f"Malformed triangle: row {k} has {len(row)} entries, expected {min(k, width)}"
                )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "width", width)
        self._check_entries()

    def _check_entries(self) -> None:
        pass

    @property
    def depth(self) -> int:
        return len(self.rows)

    @property
    def is_truncated(self) -> bool:
        return self.width < self.depth

    @property
    def bottom(self) -> Tuple[Number, ...]:
        return self.rows[-1]

    def row(self, i: int) -> Tuple[Number, ...]:
        return self.rows[i - 1]

    def entry(self, i: int, j: int) -> Optional[Number]:
        """z^i_j, or None where the triangle has no entry."""
        if 1 <= i <= self.depth and 1 <= j <= len(self.rows[i - 1]):
            return self.rows[i - 1][j - 1]
        return None

    def flat(self) -> Tuple[Number, ...]:
        """Row-major triangular flat vector."""
        return tuple(v for row in self.rows for v in row)

    def cells(self) -> Iterator[Cell]:
        for i, row in enumerate(self.rows, start=1):
            for j in range(1, len(row) + 1):
                yield i, j


@dataclass(frozen=True)
class GTPattern(_TriangularPattern):
    """Integer Gelfand-Tsetlin pattern. Interlacing is checked by validate_gt, not here."""

    def _check_entries(self) -> None:
        for i, j in self.cells():
            if not _is_integer(self.entry(i, j)):
                raise StructuralError(f"GT pattern entry z^{i}_{j} is not an integer")

    @property
    def shape(self) -> Partition:
        return Partition(self.bottom)


@dataclass(frozen=True)
class GeomGTPattern(_TriangularPattern):
    """Triangular array of strictly positive reals; no interlacing constraint."""

    def _check_entries(self) -> None:
        for i, j in self.cells():
            value = self.entry(i, j)
            if isinstance(value, bool) or not isinstance(value, Real) or not value > 0:
                raise StructuralError(f"Geometric pattern entry z^{i}_{j}={value!r} is not positive")

    @property
    def shape(self) -> Tuple[Number, ...]:
        return self.bottom


AnyPattern = Union[GTPattern, GeomGTPattern]


def validate_gt(pattern) -> Tuple[bool, Optional[Cell]]:
    """Check interlacing z^{i+1}_{j+1} <= z^i_j <= z^{i+1}_j.

    Args:
        pattern: a pattern object or raw rows (row k with k entries).

    Returns:
        (True, None) when every inequality holds, else (False, (i, j)) for the
        first entry z^i_j whose interval is violated.

    Raises:
        StructuralError: if raw rows do not form a triangle.
    """
    if not isinstance(pattern, _TriangularPattern):
        rows = [tuple(r) for r in pattern]
        if all(_is_integer(_as_python_number(v)) for r in rows for v in r):
            pattern = GTPattern(tuple(rows))
        else:
            pattern = GeomGTPattern(tuple(rows))

    for i in range(1, pattern.depth):
        for j in range(1, len(pattern.row(i)) + 1):
            value = pattern.entry(i, j)
            upper = pattern.entry(i + 1, j)
            lower = pattern.entry(i + 1, j + 1)
            if upper is not None and value > upper:
                return False, (i, j)
            if lower is not None and value < lower:
                return False, (i, j)
    return True, None


def shape_and_type(pattern: AnyPattern) -> Tuple[Union[Partition, Tuple[Number, ...]], Tuple[Number, ...]]:
    """Bottom row plus the type vector (|z^i| - |z^{i-1}|, or ratios of row products)."""
    if isinstance(pattern, GeomGTPattern):
        products = [math.prod(row) for row in pattern.rows]
        type_vector = tuple(
            products[k] / (products[k - 1] if k > 0 else 1) for k in range(len(products))
        )
        return pattern.shape, type_vector

    sums = [sum(row) for row in pattern.rows]
    type_vector = tuple(sums[k] - (sums[k - 1] if k > 0 else 0) for k in range(len(sums)))
    return pattern.shape, type_vector


def gt_patterns_with_shape(shape: Sequence[int], depth: Optional[int] = None) -> Iterator[GTPattern]:
    """Every integer GT pattern of the given depth whose bottom row is `shape`."""
    depth = len(shape) if depth is None else depth
    bottom = tuple(Partition(tuple(shape)).padded(depth))

    def _rec(row: Tuple[int, ...]) -> Iterator[List[Tuple[int, ...]]]:
        if len(row) == 1:
            yield [row]
            return
        for upper in interlacing_rows(row):
            for chain in _rec(upper):
                yield chain + [row]

    for chain in _rec(bottom):
        yield GTPattern(tuple(chain))


def sample_gt_pattern(shape: Sequence[int], rng: np.random.Generator, depth: Optional[int] = None) -> GTPattern:
    """Random interlaced pattern with the given bottom row, each entry uniform in its interval."""
    depth = len(shape) if depth is None else depth
    row = tuple(Partition(tuple(shape)).padded(depth))
    rows = [row]
    while len(row) > 1:
        row = tuple(int(rng.integers(row[j + 1], row[j] + 1)) for j in range(len(row) - 1))
        rows.append(row)
    return GTPattern(tuple(reversed(rows)))


def gt_to_tableau(pattern: GTPattern) -> Tuple[Tuple[int, ...], ...]:
    """Semistandard tableau rows: row r holds z^k_r - z^{k-1}_r copies of k."""
    rows = []
    for r in range(1, pattern.width + 1):
        letters: List[int] = []
        previous = 0
        for k in range(r, pattern.depth + 1):
            current = pattern.entry(k, r)
            letters.extend([k] * (current - previous))
            previous = current
        if letters:
            rows.append(tuple(letters))
    return tuple(rows)


def tableau_to_gt(rows: Sequence[Sequence[int]], depth: Optional[int] = None) -> GTPattern:
    letters = [v for row in rows for v in row]
    depth = depth if depth is not None else (max(letters) if letters else 1)
    pattern_rows = []
    for k in range(1, depth + 1):
        pattern_rows.append(
            tuple(
                sum(1 for v in rows[r - 1] if v <= k) if r <= len(rows) else 0
                for r in range(1, k + 1)
            )
        )
    return GTPattern(tuple(pattern_rows))


# --- Longest increasing subsequences ---


def lis(sequence: Sequence[int]) -> int:
    """Length of the longest strictly increasing subsequence (patience sorting)."""
    piles: List[int] = []
    for value in sequence:
        position = bisect.bisect_left(piles, value)
        if position == len(piles):
            piles.append(value)
        else:
            piles[position] = value
    return len(piles)


def random_permutation_lis(n: int, rng: np.random.Generator) -> int:
    return lis(rng.permutation(n).tolist())


# --- Path oracles ---


@dataclass(frozen=True)
class PathEnsembleQuery:
    matrix: WeightMatrix
    r: int
    starts: Tuple[Cell, ...]
    ends: Tuple[Cell, ...]
    mode: str = MAX_PLUS

    def __post_init__(self):
        if self.mode not in (MAX_PLUS, SUM_PRODUCT):
            raise StructuralError(f"Unknown semiring mode '{self.mode}'")
        if self.r < 1 or len(self.starts) != self.r or len(self.ends) != self.r:
            raise StructuralError(
                f"Need r >= 1 start and end cells, got r={self.r}, "
                f"{len(self.starts)} starts, {len(self.ends)} ends"
            )
        for cells in (self.starts, self.ends):
            if any(a >= b for a, b in zip(cells, cells[1:])):
                raise StructuralError(f"Cells must be strictly ordered: {cells}")
            for i, j in cells:
                if not (1 <= i <= self.matrix.rows and 1 <= j <= self.matrix.cols):
                    raise StructuralError(f"Cell {(i, j)} outside the matrix")

    @classmethod
    def greene(cls, matrix: WeightMatrix, r: int, mode: str = MAX_PLUS) -> "PathEnsembleQuery":
        """r paths from (1,1..r) to (n, N-r+1..N)."""
        n, big_n = matrix.shape
        starts = tuple((1, j) for j in range(1, r + 1))
        ends = tuple((n, big_n - r + j) for j in range(1, r + 1))
        return cls(matrix, r, starts, ends, mode)


def down_right_paths(start: Cell, end: Cell) -> Iterator[Tuple[Cell, ...]]:
    (i0, j0), (i1, j1) = start, end
    if i1 < i0 or j1 < j0:
        return
    downs, rights = i1 - i0, j1 - j0
    for down_steps in itertools.combinations(range(downs + rights), downs):
        i, j = i0, j0
        cells = [(i, j)]
        chosen = set(down_steps)
        for step in range(downs + rights):
            if step in chosen:
                i += 1
            else:
                j += 1
            cells.append((i, j))
        yield tuple(cells)


def brute_force_paths(query: PathEnsembleQuery) -> Number:
    """Exhaustive max (max-plus) or sum (sum-product) over vertex-disjoint down-right ensembles.

    Returns -inf (max-plus) or 0 (sum-product) when no admissible ensemble exists.
    """
    matrix = query.matrix
    if matrix.cells > BRUTE_FORCE_MAX_CELLS:
        raise ContractViolation(
            f"brute_force_paths is capped at {BRUTE_FORCE_MAX_CELLS} cells, got {matrix.cells}"
        )
    max_plus = query.mode == MAX_PLUS
    candidates = [
        list(down_right_paths(s, e)) for s, e in zip(query.starts, query.ends)
    ]

    best: Optional[Number] = None
    total: Number = 0

    def _weight(path: Tuple[Cell, ...]) -> Number:
        values = [matrix.entry(i, j) for i, j in path]
        return sum(values) if max_plus else math.prod(values)

    weights = [[_weight(p) for p in paths] for paths in candidates]

    def _rec(k: int, used: set, acc: Number) -> None:
        nonlocal best, total
        if k == query.r:
            if max_plus:
                best = acc if best is None or acc > best else best
            else:
                total += acc
            return
        for path, weight in zip(candidates[k], weights[k]):
            if used.isdisjoint(path):
                _rec(k + 1, used.union(path), acc + weight if max_plus else acc * weight)

    _rec(0, set(), 0 if max_plus else 1)
    if max_plus:
        if best is None:
            logger.debug(f"No admissible ensemble for starts {query.starts} ends {query.ends}")
            return float("-inf")
        return best
    return total


def path_partition_table(matrix: WeightMatrix, start: Cell) -> List[List[Number]]:
    """Sum-product weight of single down-right paths from `start` to every cell."""
    n, big_n = matrix.shape
    table: List[List[Number]] = [[0] * big_n for _ in range(n)]
    i0, j0 = start
    for i in range(i0, n + 1):
        for j in range(j0, big_n + 1):
            w = matrix.entry(i, j)
            if (i, j) == start:
                table[i - 1][j - 1] = w
                continue
            up = table[i - 2][j - 1] if i > i0 else 0
            left = table[i - 1][j - 2] if j > j0 else 0
            table[i - 1][j - 1] = w * (up + left)
    return table


def exact_det(rows: Sequence[Sequence[Number]]) -> Number:
    """Determinant in exact arithmetic for int/Fraction entries, LU otherwise."""
    if not rows:
        return 1
    rows = [[_as_python_number(v) for v in row] for row in rows]
    flat = [v for row in rows for v in row]
    if all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in flat):
        exact = sympy.Matrix(
            [[sympy.Rational(v.numerator, v.denominator) for v in row] for row in rows]
        )
        det = sympy.Rational(exact.det(method="bareiss"))
        return int(det.p) if det.q == 1 else Fraction(int(det.p), int(det.q))
    return float(np.linalg.det(np.array(rows, dtype=float)))


def lgv_determinant(matrix: WeightMatrix, starts: Sequence[Cell], ends: Sequence[Cell]) -> Number:
    """det of single-path partition functions from starts[a] to ends[b] (sum-product weights)."""
    if len(starts) != len(ends):
        raise StructuralError("LGV needs as many end cells as start cells")
    tables = [path_partition_table(matrix, s) for s in starts]
    entries = [[tables[a][i - 1][j - 1] for (i, j) in ends] for a in range(len(starts))]
    return exact_det(entries)


# --- Fast single-path tables ---


def lpp_grid(matrix: WeightMatrix) -> List[List[Number]]:
    """tau_{i,j} = w_{ij} + max(tau_{i-1,j}, tau_{i,j-1})."""
    n, big_n = matrix.shape
    grid: List[List[Number]] = [[0] * big_n for _ in range(n)]
    for i in range(n):
        for j in range(big_n):
            previous = []
            if i > 0:
                previous.append(grid[i - 1][j])
            if j > 0:
                previous.append(grid[i][j - 1])
            grid[i][j] = matrix.entries[i][j] + (max(previous) if previous else 0)
    return grid


def polymer_grid(matrix: WeightMatrix, log_domain: bool = False):
    """Point-to-point polymer partition functions Z_{i,j}; log Z_{i,j} as an array when log_domain."""
    if log_domain:
        logw = np.log(matrix.as_array())
        n, big_n = logw.shape
        grid = np.empty_like(logw)
        for i in range(n):
            for j in range(big_n):
                if i == 0 and j == 0:
                    grid[i, j] = logw[i, j]
                elif i == 0:
                    grid[i, j] = logw[i, j] + grid[i, j - 1]
                elif j == 0:
                    grid[i, j] = logw[i, j] + grid[i - 1, j]
                else:
                    grid[i, j] = logw[i, j] + np.logaddexp(grid[i - 1, j], grid[i, j - 1])
        return grid
    return path_partition_table(matrix, (1, 1))
