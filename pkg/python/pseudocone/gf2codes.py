from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

_DEFAULT_MAX_K = 26
_ENUMERATION_CHUNK = 1 << 16
_POLY_TERM_RE = re.compile(r"^(?:1|x(?:\^(\d+))?)$")


class PseudoconeError(ValueError):
    pass


class MatrixFormatError(PseudoconeError):
    pass


class CodeError(PseudoconeError):
    pass


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    bits: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.bits)
        if array.ndim != 2:
            raise MatrixFormatError("Matrix must be two-dimensional")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise MatrixFormatError("Matrix must have at least one row and one column")
        if not np.all((array == 0) | (array == 1)):
            raise MatrixFormatError("Matrix entries must be 0 or 1")
        frozen = array.astype(np.uint8, copy=True)
        frozen.setflags(write=False)
        object.__setattr__(self, "bits", frozen)

    @property
    def rows(self) -> int:
        return int(self.bits.shape[0])

    @property
    def cols(self) -> int:
        return int(self.bits.shape[1])

    def row(self, j: int) -> np.ndarray:
        return self.bits[j]

    def col(self, i: int) -> np.ndarray:
        return self.bits[:, i]

    def row_support(self, j: int) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.bits[j]))

    def row_weights(self) -> List[int]:
        return [int(w) for w in self.bits.sum(axis=1)]

    def zero_rows(self) -> List[int]:
        return [j for j, weight in enumerate(self.row_weights()) if weight == 0]

    def permute_columns(self, order: Sequence[int]) -> "BinaryMatrix":
        return BinaryMatrix(self.bits[:, list(order)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.bits.shape, self.bits.tobytes()))


@dataclass(frozen=True)
class Codeword:
    bits: Tuple[int, ...]

    @staticmethod
    def from_array(values: Iterable[int]) -> "Codeword":
        return Codeword(tuple(int(v) for v in values))

    @property
    def hamming_weight(self) -> int:
        return sum(self.bits)

    @property
    def length(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)


@dataclass(frozen=True)
class CodeParams:
    n: int
    k: int

    def __post_init__(self) -> None:
        if not 0 < self.k < self.n:
            raise CodeError(f"Code dimension must satisfy 0 < k < n, got n={self.n}, k={self.k}")

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    def to_dict(self) -> Dict[str, object]:
        return {"n": self.n, "k": self.k, "rate": str(self.rate)}


def parse_parity_matrix(text: str) -> BinaryMatrix:
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise MatrixFormatError("Matrix text is empty")
    if _looks_like_alist(lines):
        return _parse_alist(lines)
    return _parse_dense(lines)


def _parse_dense(lines: List[str]) -> BinaryMatrix:
    rows: List[List[int]] = []
    for number, line in enumerate(lines, start=1):
        symbols = line.replace(" ", "").replace("\t", "").replace(",", "")
        row: List[int] = []
        for ch in symbols:
            if ch not in "01":
                raise MatrixFormatError(f"Non-binary symbol '{ch}' in row {number}")
            row.append(int(ch))
        if rows and len(row) != len(rows[0]):
            raise MatrixFormatError(f"Ragged rows: row {number} has {len(row)} entries, expected {len(rows[0])}")
        rows.append(row)
    return BinaryMatrix(np.array(rows, dtype=np.uint8))


def _looks_like_alist(lines: List[str]) -> bool:
    header = lines[0].split()
    if len(header) != 2 or not all(token.isdigit() for token in header):
        return False
    n, m = int(header[0]), int(header[1])
    if n <= 0 or m <= 0 or len(lines) < 4 + n:
        return False
    return len(lines[2].split()) == n and len(lines[3].split()) == m


def _parse_alist(lines: List[str]) -> BinaryMatrix:
    try:
        table = [[int(token) for token in line.split()] for line in lines]
    except ValueError as exc:
        raise MatrixFormatError("Alist entries must be integers") from exc
    n, m = table[0]
    column_degrees = table[2]
    bits = np.zeros((m, n), dtype=np.uint8)
    for col in range(n):
        entries = [row for row in table[4 + col] if row != 0][: column_degrees[col]]
        if len(entries) != column_degrees[col]:
            raise MatrixFormatError(f"Alist column {col + 1} lists {len(entries)} rows, expected {column_degrees[col]}")
        for row in entries:
            if row < 1 or row > m:
                raise MatrixFormatError(f"Alist row index {row} out of range in column {col + 1}")
            bits[row - 1, col] = 1
    row_lists = table[4 + n:4 + n + m]
    for j, entries in enumerate(row_lists):
        listed = sorted(col for col in entries if col != 0)
        if listed != [int(i) + 1 for i in np.flatnonzero(bits[j])]:
            raise MatrixFormatError(f"Alist row {j + 1} disagrees with the column lists")
    return BinaryMatrix(bits)


def render_matrix(matrix: BinaryMatrix) -> str:
    return "".join("".join(str(int(v)) for v in row) + "\n" for row in matrix.bits)


def render_alist(matrix: BinaryMatrix) -> str:
    m, n = matrix.rows, matrix.cols
    col_lists = [[int(j) + 1 for j in np.flatnonzero(matrix.col(i))] for i in range(n)]
    row_lists = [[int(i) + 1 for i in np.flatnonzero(matrix.row(j))] for j in range(m)]
    max_col = max(len(entries) for entries in col_lists)
    max_row = max(len(entries) for entries in row_lists)
    lines = [f"{n} {m}", f"{max_col} {max_row}",
             " ".join(str(len(entries)) for entries in col_lists),
             " ".join(str(len(entries)) for entries in row_lists)]
    for entries in col_lists:
        lines.append(" ".join(str(v) for v in entries + [0] * (max_col - len(entries))))
    for entries in row_lists:
        lines.append(" ".join(str(v) for v in entries + [0] * (max_row - len(entries))))
    return "\n".join(lines) + "\n"


def read_matrix(path: str | Path) -> BinaryMatrix:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_parity_matrix(handle.read())


def write_matrix(matrix: BinaryMatrix, path: str | Path, alist: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(render_alist(matrix) if alist else render_matrix(matrix))


def gf2_row_reduce(bits: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    reduced = np.array(bits, dtype=np.uint8, copy=True)
    rows, cols = reduced.shape
    pivots: List[int] = []
    pivot_row = 0
    for col in range(cols):
        if pivot_row == rows:
            break
        candidates = np.flatnonzero(reduced[pivot_row:, col])
        if candidates.size == 0:
            continue
        swap = pivot_row + int(candidates[0])
        if swap != pivot_row:
            reduced[[pivot_row, swap]] = reduced[[swap, pivot_row]]
        others = np.flatnonzero(reduced[:, col])
        others = others[others != pivot_row]
        reduced[others] ^= reduced[pivot_row]
        pivots.append(col)
        pivot_row += 1
    return reduced[:pivot_row], pivots


def gf2_rank(matrix: BinaryMatrix) -> int:
    _, pivots = gf2_row_reduce(matrix.bits)
    return len(pivots)


def generator_matrix(matrix: BinaryMatrix) -> np.ndarray:
    reduced, pivots = gf2_row_reduce(matrix.bits)
    n = matrix.cols
    pivot_set = set(pivots)
    free = [col for col in range(n) if col not in pivot_set]
    generator = np.zeros((len(free), n), dtype=np.uint8)
    for row, col in enumerate(free):
        generator[row, col] = 1
        for r, pivot in enumerate(pivots):
            generator[row, pivot] = reduced[r, col]
    return generator


def code_params(matrix: BinaryMatrix) -> CodeParams:
    return CodeParams(n=matrix.cols, k=matrix.cols - gf2_rank(matrix))


def codeword_array(matrix: BinaryMatrix, max_k: int = _DEFAULT_MAX_K) -> np.ndarray:
    generator = generator_matrix(matrix)
    k, n = generator.shape
    if k > max_k:
        raise CodeError(f"Code dimension {k} exceeds enumeration cap {max_k}")
    total = 1 << k
    words = np.empty((total, n), dtype=np.uint8)
    shifts = np.arange(k, dtype=np.int64)
    gen = generator.astype(np.int64)
    for start in range(0, total, _ENUMERATION_CHUNK):
        stop = min(total, start + _ENUMERATION_CHUNK)
        messages = (np.arange(start, stop, dtype=np.int64)[:, None] >> shifts) & 1
        words[start:stop] = (messages @ gen) & 1
    logger.debug("enumerated %d codewords of length %d", total, n)
    return words


def enumerate_codewords(matrix: BinaryMatrix, max_k: int = _DEFAULT_MAX_K) -> List[Codeword]:
    return [Codeword.from_array(row) for row in codeword_array(matrix, max_k)]


def is_codeword(matrix: BinaryMatrix, word: Codeword | Sequence[int]) -> bool:
    bits = word.as_array() if isinstance(word, Codeword) else np.asarray(word, dtype=np.int64)
    return not np.any((matrix.bits.astype(np.int64) @ bits.astype(np.int64)) & 1)


def weight_distribution(codewords: Iterable[Codeword]) -> Dict[int, int]:
    counts: Dict[int, int] = {}
    for word in codewords:
        counts[word.hamming_weight] = counts.get(word.hamming_weight, 0) + 1
    return dict(sorted(counts.items()))


def minimum_distance(codewords: Iterable[Codeword]) -> int:
    weights = [word.hamming_weight for word in codewords if word.hamming_weight > 0]
    if not weights:
        raise CodeError("Code has no nonzero codeword")
    return min(weights)


def min_weight_codewords(codewords: Sequence[Codeword], max_weight: Optional[int] = None) -> List[Codeword]:
    nonzero = [word for word in codewords if word.hamming_weight > 0]
    if not nonzero:
        return []
    limit = minimum_distance(nonzero) if max_weight is None else max_weight
    return [word for word in nonzero if word.hamming_weight <= limit]


def read_codewords(path: str | Path) -> List[Codeword]:
    words: List[Codeword] = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = [token.strip() for token in stripped.split(",")]
            if any(token not in ("0", "1") for token in tokens):
                raise MatrixFormatError(f"Non-binary codeword entry on line {number}")
            if words and len(tokens) != words[0].length:
                raise MatrixFormatError(f"Codeword on line {number} has length {len(tokens)}, expected {words[0].length}")
            words.append(Codeword(tuple(int(token) for token in tokens)))
    return words


def write_codewords(codewords: Iterable[Codeword], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for word in codewords:
            handle.write(",".join(str(bit) for bit in word.bits) + "\n")


def parse_polynomial(text: str) -> List[int]:
    """Parse ``x^6+x+1`` style text into ascending-degree GF(2) coefficients."""
    degrees: List[int] = []
    for term in text.replace(" ", "").split("+"):
        match = _POLY_TERM_RE.match(term)
        if match is None:
            raise CodeError(f"Invalid polynomial term: {term!r}")
        if term == "1":
            degrees.append(0)
        else:
            degrees.append(int(match.group(1)) if match.group(1) else 1)
    coeffs = [0] * (max(degrees) + 1)
    for degree in degrees:
        coeffs[degree] ^= 1
    return coeffs


def _poly_to_int(coeffs: Sequence[int]) -> int:
    value = 0
    for degree, coeff in enumerate(coeffs):
        if coeff not in (0, 1):
            raise CodeError("Polynomial coefficients must be 0 or 1")
        if coeff:
            value |= 1 << degree
    return value


def _poly_mod(dividend: int, divisor: int) -> int:
    degree = divisor.bit_length() - 1
    while dividend.bit_length() - 1 >= degree:
        dividend ^= divisor << (dividend.bit_length() - 1 - degree)
    return dividend


def systematic_from_generator_poly(poly: Sequence[int], n: int) -> BinaryMatrix:
    g = _poly_to_int(poly)
    if g == 0:
        raise CodeError("Generator polynomial is zero")
    r = g.bit_length() - 1
    if r < 1 or r >= n:
        raise CodeError(f"Generator degree {r} must be between 1 and n-1")
    if _poly_mod((1 << n) | 1, g) != 0:
        raise CodeError(f"Generator polynomial does not divide x^{n} - 1")
    k = n - r
    bits = np.zeros((r, n), dtype=np.uint8)
    for c in range(k):
        remainder = _poly_mod(1 << (r + c), g)
        for row in range(r):
            bits[row, c] = (remainder >> row) & 1
    bits[:, k:] = np.eye(r, dtype=np.uint8)
    return BinaryMatrix(bits)


_HAMMING74 = (
    "1010101",
    "0110011",
    "0001111",
)

_GOLAY24_HGPP = (
    "011111111111100000000000",
    "111011100010010000000000",
    "110111000101001000000000",
    "101110001011000100000000",
    "111100010110000010000000",
    "111000101101000001000000",
    "110001011011000000100000",
    "100010110111000000010000",
    "100101101110000000001000",
    "101011011100000000000100",
    "110110111000000000000010",
    "101101110001000000000001",
)

_BCH31_21 = (
    "1000000000110101011110010010100",
    "0100000000011010101111001001010",
    "0010000000001101010111100100101",
    "0001000000110011110101100000110",
    "0000100000011001111010110000011",
    "0000010000111001100011001010101",
    "0000001000101001101111110111110",
    "0000000100010100110111111011111",
    "0000000010111111000101101111011",
    "0000000001101010111100100101001",
)

_BCH31_26 = (
    "1000010010110011111000110111010",
    "0100001001011001111100011011101",
    "0010010110011111000110111010100",
    "0001001011001111100011011101010",
    "0000100101100111110001101110101",
)

_BUILTIN_ROWS: Dict[str, Tuple[str, ...]] = {
    "hamming74": _HAMMING74,
    "golay24_HGpp": _GOLAY24_HGPP,
    "bch31_21": _BCH31_21,
    "bch31_26": _BCH31_26,
}

_BUILTIN_POLYS: Dict[str, Tuple[str, int]] = {
    "bch63_57": ("x^6+x+1", 63),
}


def builtin_names() -> List[str]:
    return sorted(list(_BUILTIN_ROWS) + list(_BUILTIN_POLYS))


def builtin(name: str) -> BinaryMatrix:
    if name in _BUILTIN_ROWS:
        return parse_parity_matrix("\n".join(_BUILTIN_ROWS[name]))
    if name in _BUILTIN_POLYS:
        poly, n = _BUILTIN_POLYS[name]
        return systematic_from_generator_poly(parse_polynomial(poly), n)
    raise CodeError(f"Unknown builtin matrix: {name}")
