"""Exact integer rank via fraction-free elimination.

Single source of truth for every rank query in the package. The fast path
runs Bareiss one-step elimination in int64 numpy when a Hadamard bound
certifies no overflow; otherwise arbitrary-precision Python integers take
over. A modular-rank prefilter (random 61-bit prime, fixed per process) is
accepted only when it certifies full column rank, so no reported rank ever
depends on a probabilistic shortcut.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InputError
from .matrices import IntMatrix, SignMatrix, build_T

MatrixLike = Union[IntMatrix, np.ndarray, Sequence[Sequence[int]]]

_INT64_EXP_BUDGET = 62  # products of intermediate entries must stay below 2^62


def _is_probable_prime(n: int) -> bool:
    # deterministic Miller-Rabin for n < 3.3e24
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pick_prime() -> int:
    rng = random.SystemRandom()
    while True:
        cand = rng.getrandbits(61) | (1 << 60) | 1
        if _is_probable_prime(cand):
            return cand


_PROCESS_PRIME: Optional[int] = None


def modular_prime() -> int:
    """The 61-bit prime used by this process for modular prefiltering."""
    global _PROCESS_PRIME
    if _PROCESS_PRIME is None:
        _PROCESS_PRIME = _pick_prime()
    return _PROCESS_PRIME


@dataclass(frozen=True)
class RankResult:
    rank: int
    method: str  # 'fraction-free-exact' | 'modular-prefilter-confirmed'
    pivot_columns: tuple[int, ...]  # 1-based, strictly increasing

    def __post_init__(self):
        if len(self.pivot_columns) != self.rank:
            raise InputError("pivot column count must equal rank")
        if any(b <= a for a, b in zip(self.pivot_columns, self.pivot_columns[1:])):
            raise InputError("pivot columns must be strictly increasing")


def _to_rows(A: MatrixLike) -> tuple[list[list[int]], int, int]:
    if isinstance(A, IntMatrix):
        return [list(r) for r in A.entries], A.rows, A.cols
    if isinstance(A, np.ndarray):
        if A.ndim != 2:
            raise InputError("rank needs a 2-d array")
        return A.tolist(), A.shape[0], A.shape[1]
    rows = [list(map(int, r)) for r in A]
    return rows, len(rows), len(rows[0]) if rows else 0


def _int64_safe(rows: int, cols: int, max_abs: int) -> bool:
    m = min(rows, cols)
    if m == 0:
        return True
    if max_abs == 0:
        return True
    # any intermediate entry is a minor of size <= m: |minor| <= m^(m/2) B^m
    log2_bound = 0.5 * m * math.log2(m) + m * math.log2(max_abs) if max_abs > 1 else 0.5 * m * math.log2(m)
    return 2 * log2_bound + 1 < _INT64_EXP_BUDGET


def _bareiss_np(a: np.ndarray) -> tuple[int, list[int]]:
    rows, cols = a.shape
    r = 0
    prev = np.int64(1)
    pivots: list[int] = []
    for c in range(cols):
        if r == rows:
            break
        col = a[r:, c]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p], :] = a[[p, r], :]
        piv = a[r, c]
        if r + 1 < rows:
            block = a[r + 1 :, :]
            prod = block * piv - np.outer(a[r + 1 :, c], a[r, :])
            quot, rem = np.divmod(prod, prev)
            if rem.any():
                raise ArithmeticError("non-exact division in fraction-free step")
            a[r + 1 :, :] = quot
        pivots.append(c)
        prev = piv
        r += 1
    return r, pivots


def _bareiss_py(rows: list[list[int]], n_rows: int, n_cols: int) -> tuple[int, list[int]]:
    r = 0
    prev = 1
    pivots: list[int] = []
    for c in range(n_cols):
        if r == n_rows:
            break
        p = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][c]
        prow = rows[r]
        for i in range(r + 1, n_rows):
            ri = rows[i]
            f = ri[c]
            for j in range(n_cols):
                q, rem = divmod(ri[j] * piv - f * prow[j], prev)
                if rem:
                    raise ArithmeticError("non-exact division in fraction-free step")
                ri[j] = q
        pivots.append(c)
        prev = piv
        r += 1
    return r, pivots


def rank_mod_prime(A: MatrixLike, p: Optional[int] = None) -> int:
    """Rank of A modulo p; always <= the rational rank."""
    rows, n_rows, n_cols = _to_rows(A)
    if p is None:
        p = modular_prime()
    rows = [[v % p for v in row] for row in rows]
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv_row = next((i for i in range(r, n_rows) if rows[i][c]), None)
        if piv_row is None:
            continue
        if piv_row != r:
            rows[r], rows[piv_row] = rows[piv_row], rows[r]
        inv = pow(rows[r][c], -1, p)
        prow = [(v * inv) % p for v in rows[r]]
        rows[r] = prow
        for i in range(r + 1, n_rows):
            f = rows[i][c]
            if f:
                ri = rows[i]
                rows[i] = [(a - f * b) % p for a, b in zip(ri, prow)]
        r += 1
    return r


def rank_exact(A: MatrixLike, prefilter: bool = False) -> RankResult:
    """Exact rank over the rationals by fraction-free elimination.

    With prefilter=True, a modular rank equal to the column count certifies
    full column rank without exact elimination (the only case where a modular
    answer can be accepted as proof).
    """
    rows, n_rows, n_cols = _to_rows(A)
    if n_rows == 0 or n_cols == 0:
        return RankResult(0, "fraction-free-exact", ())
    if prefilter and n_cols <= n_rows:
        if rank_mod_prime(rows) == n_cols:
            return RankResult(
                n_cols, "modular-prefilter-confirmed", tuple(range(1, n_cols + 1))
            )
    max_abs = max((abs(v) for row in rows for v in row), default=0)
    if _int64_safe(n_rows, n_cols, max_abs):
        a = np.array(rows, dtype=np.int64)
        r, pivots = _bareiss_np(a)
    else:
        r, pivots = _bareiss_py(rows, n_rows, n_cols)
    return RankResult(r, "fraction-free-exact", tuple(c + 1 for c in pivots))


def rank_of(A: MatrixLike, prefilter: bool = False) -> int:
    return rank_exact(A, prefilter=prefilter).rank


@dataclass(frozen=True)
class RankProfile:
    """Exact ranks of T_0 .. T_n, with rank_0 = rank_n = 0 by convention."""

    n: int
    ranks: tuple[int, ...]

    def __post_init__(self):
        if len(self.ranks) != self.n + 1:
            raise InputError("profile must have n+1 entries (rank_0..rank_n)")

    def __getitem__(self, i: int) -> int:
        if not (0 <= i <= self.n):
            raise InputError("profile index outside 0..n")
        return self.ranks[i]


def rank_i(M: SignMatrix, i: int) -> int:
    """rank(T_i); i = n returns 0 by convention."""
    if not (0 <= i <= M.n):
        raise InputError("rank_i index must be in 0..n")
    if i == M.n:
        return 0
    return rank_exact(build_T(M, i)).rank


def rank_profile(M: SignMatrix) -> RankProfile:
    return RankProfile(M.n, tuple(rank_i(M, i) for i in range(M.n + 1)))
