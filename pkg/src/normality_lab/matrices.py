"""Core exact types for sign matrices: slicing, bordered systems, permutation
action, and commutator/normality queries.

All public indices are 1-based; storage is 0-based. Every value is immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CapabilityError, InputError

MAX_WITNESS_SEARCH_N = 8  # 8! = 40320 permutations; beyond this we refuse


def _as_entry_rows(entries: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in entries)


@dataclass(frozen=True)
class IntMatrix:
    """Exact integer matrix; 0-row and 0-column shapes are first-class."""

    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise InputError("matrix dimensions must be non-negative")
        if len(self.entries) != self.rows:
            raise InputError("row count does not match entries")
        for row in self.entries:
            if len(row) != self.cols:
                raise InputError("ragged rows in matrix entries")

    @classmethod
    def from_rows(cls, entries: Sequence[Sequence[int]], cols: Optional[int] = None) -> "IntMatrix":
        rows = _as_entry_rows(entries)
        if rows:
            width = len(rows[0])
        elif cols is None:
            width = 0
        else:
            width = cols
        return cls(len(rows), width, rows)

    @classmethod
    def zero(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def transpose(self) -> "IntMatrix":
        if self.rows == 0:
            return IntMatrix(self.cols, 0, tuple(() for _ in range(self.cols)))
        return IntMatrix(self.cols, self.rows, tuple(zip(*self.entries)))

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols)

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.entries for v in row)

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        if not (1 <= i <= self.rows and 1 <= j <= self.cols):
            raise InputError(f"entry ({i},{j}) outside {self.rows}x{self.cols} matrix")
        return self.entries[i - 1][j - 1]

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise InputError("inner dimensions do not match")
        ot = other.transpose().entries
        prod = tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in ot) for row in self.entries
        )
        return IntMatrix(self.rows, other.cols, prod)

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise InputError("shape mismatch")
        diff = tuple(
            tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        )
        return IntMatrix(self.rows, self.cols, diff)


@dataclass(frozen=True)
class SignMatrix:
    """n x n matrix with entries restricted to {+1, -1}."""

    n: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise InputError("sign matrix dimension must be >= 1")
        if len(self.entries) != self.n or any(len(r) != self.n for r in self.entries):
            raise InputError("sign matrix entries must be n x n")
        for row in self.entries:
            for v in row:
                if v not in (1, -1):
                    raise InputError("sign matrix entries must be +1 or -1")

    @classmethod
    def from_rows(cls, entries: Sequence[Sequence[int]]) -> "SignMatrix":
        rows = _as_entry_rows(entries)
        return cls(len(rows), rows)

    @classmethod
    def from_numpy(cls, a: np.ndarray) -> "SignMatrix":
        return cls.from_rows(a.tolist())

    @classmethod
    def all_ones(cls, n: int) -> "SignMatrix":
        return cls(n, tuple((1,) * n for _ in range(n)))

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def to_int_matrix(self) -> IntMatrix:
        return IntMatrix(self.n, self.n, self.entries)

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise InputError(f"entry ({i},{j}) outside {self.n}x{self.n} matrix")
        return self.entries[i - 1][j - 1]

    def is_symmetric(self) -> bool:
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.n)
            for j in range(i + 1, self.n)
        )


@dataclass(frozen=True)
class Permutation:
    """Bijection on {1..n}, stored as the image tuple (1-based)."""

    n: int
    images: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InputError("permutation degree must be >= 1")
        if sorted(self.images) != list(range(1, self.n + 1)):
            raise InputError("images must be a bijection of 1..n")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(n, tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        if not (1 <= a <= n and 1 <= b <= n):
            raise InputError("transposition indices out of range")
        images = list(range(1, n + 1))
        images[a - 1], images[b - 1] = b, a
        return cls(n, tuple(images))

    def __call__(self, i: int) -> int:
        if not (1 <= i <= self.n):
            raise InputError("permutation applied outside 1..n")
        return self.images[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return Permutation(self.n, tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(i) = self(other(i))."""
        if self.n != other.n:
            raise InputError("permutation degrees differ")
        return Permutation(self.n, tuple(self(other(i)) for i in range(1, self.n + 1)))


@dataclass(frozen=True)
class BorderedSystem:
    """The pair (T_i, x_{i+1}) feeding the linear constraint T_i^T x_{i+1} = c."""

    index: int
    T: IntMatrix
    x: tuple[int, ...]

    def __post_init__(self):
        if self.T.rows != len(self.x):
            raise InputError("bordered system: row count of T must equal len(x)")

    @classmethod
    def from_matrix(cls, M: SignMatrix, k: int) -> "BorderedSystem":
        if not (1 <= k <= M.n):
            raise InputError("bordered system index k must be in 1..n")
        return cls(k - 1, build_T(M, k - 1), build_x(M, k))


# -- slicing ---------------------------------------------------------------

_SPEC_OPS = ("<=", ">=", "<", ">", "=")


def _parse_spec(spec, n: int) -> tuple[int, int]:
    """Turn a slice spec into a 0-based half-open range over 1..n.

    Accepts strings ('=i', '<=j', '<j', '>=j', '>j') or ('op', index) pairs.
    """
    if isinstance(spec, tuple) and len(spec) == 2:
        op, idx = spec
    elif isinstance(spec, str):
        text = spec.replace(" ", "")
        for op in _SPEC_OPS:
            if text.startswith(op):
                break
        else:
            raise InputError(f"cannot parse slice spec {spec!r}")
        idx = text[len(op):]
    else:
        raise InputError(f"cannot parse slice spec {spec!r}")
    try:
        idx = int(idx)
    except (TypeError, ValueError):
        raise InputError(f"slice spec index in {spec!r} is not an integer") from None
    if not (1 <= idx <= n):
        raise InputError(f"slice spec index {idx} outside 1..{n}")
    if op == "=":
        return idx - 1, idx
    if op == "<=":
        return 0, idx
    if op == "<":
        return 0, idx - 1
    if op == ">=":
        return idx - 1, n
    if op == ">":
        return idx, n
    raise InputError(f"unknown slice operator {op!r}")


def submatrix(M: SignMatrix, row_spec, col_spec) -> IntMatrix:
    """Slice per the row/column specs; degenerate slices are ordinary values."""
    r0, r1 = _parse_spec(row_spec, M.n)
    c0, c1 = _parse_spec(col_spec, M.n)
    rows = max(0, r1 - r0)
    cols = max(0, c1 - c0)
    entries = tuple(tuple(M.entries[i][c0:c1]) for i in range(r0, r1))
    return IntMatrix(rows, cols, entries)


def build_T(M: SignMatrix, i: int) -> IntMatrix:
    """The 2(n-i-1) x i bordered matrix: M(<i+1;>i+1)^T stacked over M(>i+1;<i+1)."""
    n = M.n
    if not (0 <= i <= n - 1):
        raise InputError(f"T index must be in 0..{n - 1}")
    top = submatrix(M, f"<{i + 1}", f">{i + 1}").transpose()
    bottom = submatrix(M, f">{i + 1}", f"<{i + 1}")
    entries = top.entries + bottom.entries
    return IntMatrix(top.rows + bottom.rows, i, entries)


def build_x(M: SignMatrix, k: int, signed: bool = True) -> tuple[int, ...]:
    """x_k (signed) or x_k' (unsigned): row-k tail stacked over column-k tail.

    signed=True negates the first n-k entries, giving the vector constrained
    by T_{k-1}^T x_k = c.
    """
    n = M.n
    if not (1 <= k <= n):
        raise InputError("x index must be in 1..n")
    row_tail = [M.entries[k - 1][j] for j in range(k, n)]
    col_tail = [M.entries[j][k - 1] for j in range(k, n)]
    if signed:
        row_tail = [-v for v in row_tail]
    return tuple(row_tail + col_tail)


# -- permutation action ----------------------------------------------------


def apply_permutation(M: SignMatrix, sigma: Permutation) -> SignMatrix:
    """Simultaneous row/column action: (M_sigma)(i,j) = M(sigma^-1(i), sigma^-1(j))."""
    if sigma.n != M.n:
        raise InputError("permutation degree does not match matrix dimension")
    inv = sigma.inverse()
    entries = tuple(
        tuple(M.entries[inv(i) - 1][inv(j) - 1] for j in range(1, M.n + 1))
        for i in range(1, M.n + 1)
    )
    return SignMatrix(M.n, entries)


def permute_int_matrix(C: IntMatrix, sigma: Permutation) -> IntMatrix:
    """C_sigma for a square integer matrix, same convention as apply_permutation."""
    if C.rows != C.cols:
        raise InputError("permutation action needs a square matrix")
    if sigma.n != C.rows:
        raise InputError("permutation degree does not match matrix dimension")
    inv = sigma.inverse()
    entries = tuple(
        tuple(C.entries[inv(i) - 1][inv(j) - 1] for j in range(1, C.rows + 1))
        for i in range(1, C.rows + 1)
    )
    return IntMatrix(C.rows, C.cols, entries)


# -- normality -------------------------------------------------------------


def commutator(M: SignMatrix) -> IntMatrix:
    """MM^T - M^TM; the zero matrix exactly when M is normal."""
    a = M.to_numpy()
    k = a @ a.T - a.T @ a
    return IntMatrix.from_rows(k.tolist(), cols=M.n)


def is_normal(M: SignMatrix) -> bool:
    a = M.to_numpy()
    return bool(np.array_equal(a @ a.T, a.T @ a))


def is_c_normal(
    M: SignMatrix, C: IntMatrix, max_search: int = MAX_WITNESS_SEARCH_N
) -> Optional[Permutation]:
    """Witness sigma with MM^T - M^TM = C_sigma, or None.

    C = 0 short-circuits to the plain normality test. Otherwise the witness is
    found by exact brute force over S_n, refused above max_search.
    """
    n = M.n
    if (C.rows, C.cols) != (n, n):
        raise InputError("C must be n x n")
    if C.is_zero():
        return Permutation.identity(n) if is_normal(M) else None
    if n > max_search:
        raise CapabilityError(
            f"witness search over S_{n} refused (cap is n <= {max_search})"
        )
    k = commutator(M)
    target = k.to_numpy()
    c = C.to_numpy()
    for perm in itertools.permutations(range(n)):
        idx = np.array(perm)
        # perm maps new position -> old index, i.e. rows C[perm][:,perm] is
        # C_sigma for sigma with sigma(perm[i]+1) = i+1
        if np.array_equal(c[np.ix_(idx, idx)], target):
            images = [0] * n
            for new_pos, old in enumerate(perm):
                images[old] = new_pos + 1
            return Permutation(n, tuple(images))
    return None


# -- conditioned constraint ------------------------------------------------


def residual_c(M: SignMatrix, C: IntMatrix, k: int) -> tuple[int, ...]:
    """The D_{k-1}-measurable part of the order-k normality constraint.

    Entry i (1 <= i < k) is sum_{j<=k} (M[i,j]M[k,j] - M[j,i]M[j,k]) - C[i,k];
    it depends only on C, the diagonal and the first k-1 rows and columns.
    """
    n = M.n
    if not (2 <= k <= n):
        raise InputError("constraint index k must be in 2..n")
    if (C.rows, C.cols) != (n, n):
        raise InputError("C must be n x n")
    e = M.entries
    out = []
    for i in range(k - 1):
        s = 0
        for j in range(k):
            s += e[i][j] * e[k - 1][j] - e[j][i] * e[j][k - 1]
        out.append(s - C.entries[i][k - 1])
    return tuple(out)


def constraint_residual(M: SignMatrix, C: IntMatrix, k: int) -> tuple[int, ...]:
    """(MM^T - M^TM - C)_{i,k} for i < k; equals residual_c - T_{k-1}^T x_k."""
    n = M.n
    if not (2 <= k <= n):
        raise InputError("constraint index k must be in 2..n")
    if (C.rows, C.cols) != (n, n):
        raise InputError("C must be n x n")
    K = commutator(M)
    return tuple(K.entries[i][k - 1] - C.entries[i][k - 1] for i in range(k - 1))


def t_transpose_x(M: SignMatrix, k: int) -> tuple[int, ...]:
    """T_{k-1}^T x_k as an integer vector of length k-1."""
    T = build_T(M, k - 1)
    x = build_x(M, k)
    cols = T.cols
    out = []
    for j in range(cols):
        out.append(sum(T.entries[r][j] * x[r] for r in range(T.rows)))
    return tuple(out)


# -- signtxt ---------------------------------------------------------------


def _data_lines(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        rows.append(stripped.split())
    return rows


def parse_sign_matrix(text: str) -> SignMatrix:
    """Read the signtxt format: '+'/'-' or '+1'/'1'/'-1' tokens, '#' comments."""
    rows = []
    for tokens in _data_lines(text):
        row = []
        for tok in tokens:
            if tok in ("+", "+1", "1"):
                row.append(1)
            elif tok in ("-", "-1"):
                row.append(-1)
            else:
                raise InputError(f"bad sign token {tok!r}")
        rows.append(row)
    if not rows:
        raise InputError("no matrix rows found")
    if any(len(r) != len(rows) for r in rows):
        raise InputError("sign matrix must be square")
    return SignMatrix.from_rows(rows)


def parse_int_matrix(text: str) -> IntMatrix:
    """Read an integer matrix in the same layout, signed decimal entries."""
    rows = []
    for tokens in _data_lines(text):
        try:
            rows.append([int(t) for t in tokens])
        except ValueError as exc:
            raise InputError(f"bad integer token in line {tokens!r}") from exc
    if not rows:
        raise InputError("no matrix rows found")
    if any(len(r) != len(rows[0]) for r in rows):
        raise InputError("ragged integer matrix")
    return IntMatrix.from_rows(rows)


def format_sign_matrix(M: SignMatrix) -> str:
    return "\n".join(" ".join("+" if v == 1 else "-" for v in row) for row in M.entries) + "\n"


def format_int_matrix(A: IntMatrix) -> str:
    return "\n".join(" ".join(str(v) for v in row) for row in A.entries) + "\n"
