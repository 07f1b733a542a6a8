"""Hypercube-subspace counting, paired-row rank-drop structure (property P and
its independent-top-rows refinement F_k), the constructive P -> F_k reduction,
and the leading-order counting exponent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import CapabilityError, InputError, InvariantViolation
from .matrices import IntMatrix
from .rank import rank_exact, rank_of

MAX_ENUM_BITS = 24  # hard cap for 2^n vertex / assignment enumerations

_CHUNK_BITS = 16


@dataclass(frozen=True)
class Subspace:
    """Subspace of R^n given by an exact-integer basis (rows)."""

    n: int
    basis: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if any(len(v) != self.n for v in self.basis):
            raise InputError("basis vectors must have length n")
        if self.basis and rank_of(list(self.basis)) != len(self.basis):
            raise InputError("basis vectors must be linearly independent")

    @classmethod
    def from_vectors(cls, n: int, vectors: Sequence[Sequence[int]]) -> "Subspace":
        return cls(n, tuple(tuple(int(x) for x in v) for v in vectors))

    @property
    def dim(self) -> int:
        return len(self.basis)


def _rref_fractions(rows: Sequence[Sequence[int]]) -> tuple[list[int], list[list[Fraction]]]:
    """Reduced row echelon form over Q; returns (pivot columns, rows)."""
    mat = [[Fraction(x) for x in row] for row in rows]
    n_rows = len(mat)
    n_cols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        p = next((i for i in range(r, n_rows) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        inv = mat[r][c]
        mat[r] = [x / inv for x in mat[r]]
        for i in range(n_rows):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return pivots, mat[:r]


def _vertex_chunks(n: int) -> Iterator[np.ndarray]:
    """All 2^n sign vectors as int64 rows, in chunks."""
    total = 1 << n
    step = 1 << min(_CHUNK_BITS, n)
    bits = np.arange(n, dtype=np.uint64)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.uint64)
        v = ((idx[:, None] >> bits[None, :]) & 1).astype(np.int64)
        yield 2 * v - 1


def hypercube_intersection_count(S: Subspace) -> int:
    """Exact number of +-1 vectors in S, by enumerating all 2^n vertices and
    testing membership with an exact (integer-scaled) linear solve."""
    n = S.n
    if n > MAX_ENUM_BITS:
        raise CapabilityError(f"vertex enumeration needs n <= {MAX_ENUM_BITS}, got {n}")
    k = S.dim
    if k == 0:
        return 0
    if k == n:
        return 1 << n
    pivots, rref = _rref_fractions(S.basis)
    d = lcm(*[x.denominator for row in rref for x in row])
    w_rows = [[int(x * d) for x in row] for row in rref]

    w_max = max(abs(x) for row in w_rows for x in row)
    if max(d, (k + 1) * w_max) < 2**62:
        W = np.array(w_rows, dtype=np.int64)
        count = 0
        for V in _vertex_chunks(n):
            lhs = d * V
            rhs = V[:, pivots] @ W
            count += int(np.all(lhs == rhs, axis=1).sum())
        return count

    # arbitrary-precision fallback for huge basis entries
    count = 0
    for vertex in itertools.product((-1, 1), repeat=n):
        combo = [0] * n
        for i, p in enumerate(pivots):
            coeff = vertex[p]
            row = w_rows[i]
            combo = [acc + coeff * x for acc, x in zip(combo, row)]
        if all(c == d * v for c, v in zip(combo, vertex)):
            count += 1
    return count


def solution_count(A: Union[IntMatrix, Sequence[Sequence[int]]], c: Sequence[int]) -> int:
    """Exact number of x in {+-1}^m with Ax = c."""
    if isinstance(A, IntMatrix):
        rows, m = A.entries, A.cols
    else:
        rows = tuple(tuple(int(x) for x in row) for row in A)
        m = len(rows[0]) if rows else 0
    if any(len(r) != m for r in rows):
        raise InputError("ragged system matrix")
    if len(c) != len(rows):
        raise InputError("right-hand side length must match row count")
    if m > MAX_ENUM_BITS:
        raise CapabilityError(f"solution enumeration needs m <= {MAX_ENUM_BITS}, got {m}")
    if m == 0:
        return 1 if all(v == 0 for v in c) else 0
    At = np.array(rows, dtype=np.int64).T
    target = np.array(list(c), dtype=np.int64)
    count = 0
    for X in _vertex_chunks(m):
        count += int(np.all(X @ At == target, axis=1).sum())
    return count


# -- paired-row structure ----------------------------------------------------


@dataclass(frozen=True)
class PairedMatrix:
    """2m x q sign matrix whose rows are paired (i, m+i)."""

    m: int
    q: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.m < 1 or self.q < 1:
            raise InputError("paired matrix needs m >= 1 and q >= 1")
        if len(self.entries) != 2 * self.m:
            raise InputError("paired matrix must have 2m rows")
        for row in self.entries:
            if len(row) != self.q or any(v not in (1, -1) for v in row):
                raise InputError("entries must be +-1 rows of width q")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "PairedMatrix":
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        if not rows or len(rows) % 2 != 0:
            raise InputError("paired matrix needs an even, positive row count")
        return cls(len(rows) // 2, len(rows[0]), rows)

    @classmethod
    def from_index(cls, m: int, q: int, index: int) -> "PairedMatrix":
        """Decode a 2mq-bit integer, row-major, bit 1 -> +1."""
        rows = []
        pos = 0
        for _ in range(2 * m):
            row = []
            for _ in range(q):
                row.append(1 if (index >> pos) & 1 else -1)
                pos += 1
            rows.append(tuple(row))
        return cls(m, q, tuple(rows))

    def rank(self) -> int:
        return rank_of(self.entries)

    def drop_pair(self, i: int) -> tuple[tuple[int, ...], ...]:
        """Rows with the pair (i, m+i) removed, 1-based i."""
        if not (1 <= i <= self.m):
            raise InputError("pair index outside 1..m")
        return tuple(r for idx, r in enumerate(self.entries) if idx not in (i - 1, self.m + i - 1))


@dataclass(frozen=True)
class HalfSwap:
    """Swap rows i and m+i."""

    i: int


@dataclass(frozen=True)
class PairSwap:
    """Swap rows i <-> j and rows m+i <-> m+j, i < j."""

    i: int
    j: int


SwapMove = Union[HalfSwap, PairSwap]


@dataclass(frozen=True)
class PropertyReport:
    kind: str  # 'P' or 'Fk'
    holds: bool
    m: int
    q: int
    rank: int
    failing_pairs: tuple[int, ...] = ()
    k: Optional[int] = None
    property_p: Optional[bool] = None
    first_k_independent: Optional[bool] = None


def has_property_P(A: PairedMatrix) -> PropertyReport:
    """Does deleting each pair (i, m+i) drop the rank by at least one?"""
    r = A.rank()
    failing = tuple(
        i for i in range(1, A.m + 1) if rank_of(A.drop_pair(i)) > r - 1
    )
    return PropertyReport(
        kind="P", holds=not failing, m=A.m, q=A.q, rank=r, failing_pairs=failing
    )


def has_property_Fk(A: PairedMatrix, k: int) -> PropertyReport:
    """Property P, rank exactly k, and independent first k rows."""
    if not (A.m <= k <= 2 * A.m):
        raise InputError(f"need m <= k <= 2m, got k={k} for m={A.m}")
    r = A.rank()
    p_report = has_property_P(A)
    first_k = rank_of(A.entries[:k]) == k
    holds = (r == k) and p_report.holds and first_k
    return PropertyReport(
        kind="Fk",
        holds=holds,
        m=A.m,
        q=A.q,
        rank=r,
        failing_pairs=p_report.failing_pairs,
        k=k,
        property_p=p_report.holds,
        first_k_independent=first_k,
    )


def apply_swap(A: PairedMatrix, move: SwapMove) -> PairedMatrix:
    rows = list(A.entries)
    m = A.m
    if isinstance(move, HalfSwap):
        if not (1 <= move.i <= m):
            raise InputError("half swap index outside 1..m")
        a, b = move.i - 1, m + move.i - 1
        rows[a], rows[b] = rows[b], rows[a]
    elif isinstance(move, PairSwap):
        if not (1 <= move.i < move.j <= m):
            raise InputError("pair swap needs 1 <= i < j <= m")
        a, b = move.i - 1, move.j - 1
        rows[a], rows[b] = rows[b], rows[a]
        a, b = m + move.i - 1, m + move.j - 1
        rows[a], rows[b] = rows[b], rows[a]
    else:
        raise InputError(f"unknown swap move {move!r}")
    return PairedMatrix(m, A.q, tuple(rows))


def _first_dependent_row(rows: Sequence[Sequence[int]], upto: int) -> Optional[int]:
    """Smallest 1-based i <= upto with row i inside the span of rows 1..i-1."""
    for i in range(1, upto + 1):
        if rank_of(rows[:i]) < i:
            return i
    return None


def reduce_P_to_Fk(
    A: PairedMatrix, check_steps: bool = True
) -> tuple[tuple[SwapMove, ...], PairedMatrix]:
    """Drive a property-P matrix to property F_k (k = rank) using only the two
    pair-respecting swap moves.

    The first dependent row among the top k strictly increases with each move,
    so at most 2m moves are required. A missing replacement row p would be a
    counterexample to the reduction claim and raises InvariantViolation.
    """
    if not has_property_P(A).holds:
        raise InputError("input matrix lacks property P")
    m = A.m
    k = A.rank()
    script: list[SwapMove] = []
    cur = A
    for _ in range(2 * m + 1):
        i = _first_dependent_row(cur.entries, k)
        if i is None:
            break
        if i <= m:
            move: SwapMove = HalfSwap(i)
        else:
            p = next(
                (
                    p
                    for p in range(k + 1, 2 * m + 1)
                    if rank_of(cur.entries[:k] + (cur.entries[p - 1],)) > rank_of(cur.entries[:k])
                ),
                None,
            )
            if p is None:
                raise InvariantViolation(
                    "no row outside the span of the first k rows; "
                    "the reduction claim fails here",
                    witness=cur,
                )
            move = PairSwap(i - m, p - m)
        cur = apply_swap(cur, move)
        script.append(move)
        if check_steps:
            if not has_property_P(cur).holds:
                raise InvariantViolation(
                    f"swap {move} destroyed property P", witness=cur
                )
            new_i = _first_dependent_row(cur.entries, k)
            if new_i is not None and new_i <= i:
                raise InvariantViolation(
                    f"swap {move} did not advance the first dependent row",
                    witness=cur,
                )
    else:
        raise InvariantViolation("reduction exceeded 2m moves", witness=A)
    if not has_property_Fk(cur, k).holds:
        raise InvariantViolation("reduction finished without property F_k", witness=cur)
    return tuple(script), cur


def fk_count_bound(m: int, q: int, k: int) -> int:
    """Leading-order exponent (2m-k)(k-m-q) of the F_k frequency bound."""
    if not (m <= k <= 2 * m):
        raise InputError(f"need m <= k <= 2m, got k={k} for m={m}")
    return (2 * m - k) * (k - m - q)


def fk_count_bound_proof_variant(m: int, q: int, k: int) -> int:
    """The exponent as printed in the final counting step, (2m-q)(k-m-q);
    it disagrees with the statement exponent and is kept as a diagnostic."""
    if not (m <= k <= 2 * m):
        raise InputError(f"need m <= k <= 2m, got k={k} for m={m}")
    return (2 * m - q) * (k - m - q)


def check_span_relation(A: PairedMatrix, j: int) -> bool:
    """For an F_k matrix, deleting row j of the top block K (in the regime
    where rank K^{(j)} = k-1) must leave every row below K, except m+j,
    inside the row space of K^{(j)}."""
    m, k = A.m, A.rank()
    if not (m <= k <= 2 * m) or not has_property_Fk(A, k).holds:
        raise InputError("matrix must have property F_k")
    if not (k - m < j <= min(k, m)):
        raise InputError(f"need k-m < j <= min(k, m), got j={j}")
    K = A.entries[:k]
    K_del = tuple(r for idx, r in enumerate(K) if idx != j - 1)
    base = rank_of(K_del)
    if base != k - 1:
        raise InputError("deleting row j of K does not reduce its rank to k-1")
    for i in range(k + 1, 2 * m + 1):
        if i == m + j:
            continue
        if rank_of(K_del + (A.entries[i - 1],)) != base:
            return False
    return True


# -- censuses and sampling ---------------------------------------------------


@dataclass(frozen=True)
class CensusRow:
    m: int
    q: int
    k: int
    count_p: int  # property P with rank exactly k
    count_fk: int
    bound_exponent: int


def census(m: int, q: int) -> list[CensusRow]:
    """Exhaustive per-rank counts of property-P and F_k matrices."""
    bits = 2 * m * q
    if bits > MAX_ENUM_BITS:
        raise CapabilityError(
            f"census needs 2mq <= {MAX_ENUM_BITS} bits, got {bits}"
        )
    count_p: dict[int, int] = {}
    count_fk: dict[int, int] = {}
    for index in range(1 << bits):
        A = PairedMatrix.from_index(m, q, index)
        rep = has_property_P(A)
        if not rep.holds:
            continue
        k = rep.rank
        count_p[k] = count_p.get(k, 0) + 1
        if m <= k <= 2 * m and rank_of(A.entries[:k]) == k:
            count_fk[k] = count_fk.get(k, 0) + 1
    rows = []
    for k in range(m, 2 * m + 1):
        rows.append(
            CensusRow(
                m=m,
                q=q,
                k=k,
                count_p=count_p.get(k, 0),
                count_fk=count_fk.get(k, 0),
                bound_exponent=fk_count_bound(m, q, k),
            )
        )
    return rows


def sample_fk(
    m: int, q: int, k: int, seed: int, max_attempts: int = 10_000_000
) -> Optional[PairedMatrix]:
    """Rejection-sample a property-F_k matrix; None if the attempt cap hits."""
    from .counting import sign_vector  # local import to avoid a cycle

    if not (m <= k <= 2 * m):
        raise InputError(f"need m <= k <= 2m, got k={k} for m={m}")
    bits = 2 * m * q
    for attempt in range(max_attempts):
        vals = sign_vector(seed, attempt, bits)
        rows = tuple(tuple(vals[r * q : (r + 1) * q]) for r in range(2 * m))
        A = PairedMatrix(m, q, rows)
        if A.rank() != k:
            continue
        if has_property_Fk(A, k).holds:
            return A
    return None
