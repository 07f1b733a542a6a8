"""Ground-truth counting: exhaustive normality counts via a Gray-code kernel
with incremental pair updates, Monte Carlo estimation with counter-based
seeding and Wilson intervals, and exact conditional verification of the
rank-profile recursion inequality.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import CapabilityError, InputError
from .matrices import IntMatrix, Permutation, SignMatrix, permute_int_matrix
from .permlemma import r_formula_clamped

MAX_EXHAUSTIVE_N = 5  # 2^25 matrices; n = 6 only behind allow_long_run
MAX_CNORMAL_N = 4
MAX_RECURSION_N = 3  # n = 4 behind allow_long_run
_CHUNKS = 64

WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(hits: int, samples: int, z: float = WILSON_Z) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if samples <= 0:
        raise InputError("samples must be positive")
    p = hits / samples
    denom = 1.0 + z * z / samples
    center = (p + z * z / (2 * samples)) / denom
    half = z * math.sqrt(p * (1.0 - p) / samples + z * z / (4.0 * samples * samples)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def sign_vector(seed: int, index: int, nbits: int) -> list[int]:
    """Deterministic +-1 values keyed by (seed, index); parallel-safe because
    each sample is derived independently of every other."""
    out: list[int] = []
    block = 0
    while len(out) < nbits:
        h = hashlib.blake2b(
            index.to_bytes(8, "little", signed=False) + block.to_bytes(4, "little"),
            key=seed.to_bytes(8, "little", signed=True),
            digest_size=32,
        ).digest()
        val = int.from_bytes(h, "little")
        take = min(256, nbits - len(out))
        for b in range(take):
            out.append(1 if (val >> b) & 1 else -1)
        block += 1
    return out


def random_sign_matrix(n: int, seed: int, index: int = 0) -> SignMatrix:
    vals = sign_vector(seed, index, n * n)
    rows = tuple(tuple(vals[r * n : (r + 1) * n]) for r in range(n))
    return SignMatrix(n, rows)


@dataclass(frozen=True)
class CountReport:
    n: int
    event: str
    mode: str  # 'exhaustive' | 'montecarlo'
    total_count: int
    hit_count: int
    probability: Fraction
    wall_time_s: float
    samples: Optional[int] = None
    seed: Optional[int] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    note: str = ""

    def log2_probability(self) -> Optional[float]:
        if self.hit_count == 0:
            return None
        return math.log2(self.probability.numerator) - math.log2(self.probability.denominator)


@dataclass(frozen=True)
class ConditioningMask:
    """Bit positions of the diagonal plus the first i rows and columns."""

    n: int
    i: int

    def __post_init__(self):
        if not (0 <= self.i <= self.n):
            raise InputError("conditioning depth must be in 0..n")

    def positions(self) -> tuple[int, ...]:
        n, i = self.n, self.i
        return tuple(
            r * n + c
            for r in range(n)
            for c in range(n)
            if r == c or r < i or c < i
        )

    def bitmask(self) -> int:
        mask = 0
        for p in self.positions():
            mask |= 1 << p
        return mask


# -- Gray-code exhaustive kernel --------------------------------------------


def _gray(x: int) -> int:
    return x ^ (x >> 1)


def _state_from_gray(n: int, g: int) -> tuple[list[int], list[int]]:
    rows = [0] * n
    cols = [0] * n
    for r in range(n):
        for c in range(n):
            if (g >> (r * n + c)) & 1:
                rows[r] |= 1 << c
                cols[c] |= 1 << r
    return rows, cols


def _count_normal_range(args: tuple[int, int, int]) -> int:
    """Count normal matrices with Gray codes of x in [lo, hi)."""
    n, lo, hi = args
    rows, cols = _state_from_gray(n, _gray(lo))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # eq[p] == 1 iff row pair p agrees with the column pair p
    eq = {}
    bad = 0
    for p, (i, j) in enumerate(pairs):
        ok = (rows[i] ^ rows[j]).bit_count() == (cols[i] ^ cols[j]).bit_count()
        eq[(i, j)] = ok
        if not ok:
            bad += 1
    count = 1 if bad == 0 else 0
    for x in range(lo + 1, hi):
        b = (x & -x).bit_length() - 1
        r, c = divmod(b, n)
        rows[r] ^= 1 << c
        cols[c] ^= 1 << r
        rr = rows[r]
        cc = cols[c]
        for j in range(n):
            if j != r:
                key = (r, j) if r < j else (j, r)
                ok = (rr ^ rows[j]).bit_count() == (cols[key[0]] ^ cols[key[1]]).bit_count()
                if ok != eq[key]:
                    eq[key] = ok
                    bad += -1 if ok else 1
        for i in range(n):
            if i != c:
                key = (i, c) if i < c else (c, i)
                ok = (rows[key[0]] ^ rows[key[1]]).bit_count() == (cc ^ cols[i]).bit_count()
                if ok != eq[key]:
                    eq[key] = ok
                    bad += -1 if ok else 1
        if bad == 0:
            count += 1
    return count


def _commutator_key(n: int, rows: list[int], cols: list[int]) -> tuple[int, ...]:
    """Upper triangle of MM^T - M^TM from the bit-row/bit-column state."""
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            out.append(2 * ((cols[i] ^ cols[j]).bit_count() - (rows[i] ^ rows[j]).bit_count()))
    return tuple(out)


def _count_key_range(args: tuple[int, int, int, frozenset]) -> int:
    """Count matrices whose commutator key lies in the target set."""
    n, lo, hi, targets = args
    rows, cols = _state_from_gray(n, _gray(lo))
    count = 1 if _commutator_key(n, rows, cols) in targets else 0
    for x in range(lo + 1, hi):
        b = (x & -x).bit_length() - 1
        r, c = divmod(b, n)
        rows[r] ^= 1 << c
        cols[c] ^= 1 << r
        if _commutator_key(n, rows, cols) in targets:
            count += 1
    return count


def _chunk_ranges(total: int, chunks: int = _CHUNKS) -> list[tuple[int, int]]:
    chunks = min(chunks, total)
    step = total // chunks
    bounds = [i * step for i in range(chunks)] + [total]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks)]


def default_threads() -> int:
    env = os.environ.get("NORMALITY_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"bad NORMALITY_LAB_THREADS value {env!r}") from None
    return os.cpu_count() or 1


def _run_chunks(worker, jobs: list, threads: int) -> list:
    """Map worker over jobs; per-chunk results are combined in job order, so
    the total is identical for every thread count."""
    if threads <= 1 or len(jobs) <= 1:
        return [worker(j) for j in jobs]
    with multiprocessing.Pool(processes=threads) as pool:
        return pool.map(worker, jobs)


def enumerate_nu(
    n: int, threads: Optional[int] = None, allow_long_run: bool = False
) -> CountReport:
    """Exact count of normal matrices among all 2^(n^2) sign matrices."""
    if n < 1:
        raise InputError("n must be >= 1")
    cap = 6 if allow_long_run else MAX_EXHAUSTIVE_N
    if n > cap:
        raise CapabilityError(
            f"exhaustive enumeration refused for n={n} (cap {cap}"
            + ("" if allow_long_run else "; pass allow_long_run for n=6")
            + ")"
        )
    threads = threads or default_threads()
    total = 1 << (n * n)
    t0 = time.perf_counter()
    jobs = [(n, lo, hi) for lo, hi in _chunk_ranges(total)]
    hits = sum(_run_chunks(_count_normal_range, jobs, threads))
    wall = time.perf_counter() - t0
    return CountReport(
        n=n,
        event="normal",
        mode="exhaustive",
        total_count=total,
        hit_count=hits,
        probability=Fraction(hits, total),
        wall_time_s=wall,
    )


def commutator_targets(n: int, C: IntMatrix) -> frozenset:
    """Upper-triangle keys of C_sigma over all sigma; commutators are
    symmetric with zero diagonal, so sigma images violating that are dropped."""
    if (C.rows, C.cols) != (n, n):
        raise InputError("C must be n x n")
    targets = set()
    for images in itertools.permutations(range(1, n + 1)):
        sigma = Permutation(n, images)
        cs = permute_int_matrix(C, sigma)
        if any(cs.entries[i][i] != 0 for i in range(n)):
            continue
        if any(
            cs.entries[i][j] != cs.entries[j][i] for i in range(n) for j in range(i + 1, n)
        ):
            continue
        targets.add(tuple(cs.entries[i][j] for i in range(n) for j in range(i + 1, n)))
    return frozenset(targets)


def enumerate_c_normal(
    n: int,
    C: IntMatrix,
    threads: Optional[int] = None,
    allow_long_run: bool = False,
) -> CountReport:
    """Exact count of matrices M with MM^T - M^TM = C_sigma for some sigma."""
    if n < 1:
        raise InputError("n must be >= 1")
    cap = 5 if allow_long_run else MAX_CNORMAL_N
    if n > cap:
        raise CapabilityError(
            f"exhaustive C-normal enumeration refused for n={n} (cap {cap})"
        )
    if C.is_zero():
        rep = enumerate_nu(n, threads=threads, allow_long_run=allow_long_run)
        return CountReport(
            n=n,
            event="c-normal",
            mode="exhaustive",
            total_count=rep.total_count,
            hit_count=rep.hit_count,
            probability=rep.probability,
            wall_time_s=rep.wall_time_s,
            note="C = 0 reduces to plain normality",
        )
    threads = threads or default_threads()
    targets = commutator_targets(n, C)
    total = 1 << (n * n)
    t0 = time.perf_counter()
    if not targets:
        hits = 0
    else:
        jobs = [(n, lo, hi, targets) for lo, hi in _chunk_ranges(total)]
        hits = sum(_run_chunks(_count_key_range, jobs, threads))
    wall = time.perf_counter() - t0
    return CountReport(
        n=n,
        event="c-normal",
        mode="exhaustive",
        total_count=total,
        hit_count=hits,
        probability=Fraction(hits, total),
        wall_time_s=wall,
    )


def count_symmetric(n: int) -> Fraction:
    """P(M_n symmetric) = 2^(-n(n-1)/2), exactly."""
    if n < 1:
        raise InputError("n must be >= 1")
    return Fraction(1, 1 << (n * (n - 1) // 2))


def exhaustive_symmetric_count(n: int) -> int:
    """Brute-force count of symmetric sign matrices (cross-check; n <= 4)."""
    if n > 4:
        raise CapabilityError("symmetric cross-check capped at n = 4")
    count = 0
    for g in range(1 << (n * n)):
        if all(
            ((g >> (r * n + c)) & 1) == ((g >> (c * n + r)) & 1)
            for r in range(n)
            for c in range(r + 1, n)
        ):
            count += 1
    return count


# -- Monte Carlo -------------------------------------------------------------

_EVENTS = ("normal", "symmetric", "property-p", "profile-conformance")


def _is_normal_bits(n: int, vals: Sequence[int]) -> bool:
    rows = [0] * n
    cols = [0] * n
    for r in range(n):
        base = r * n
        for c in range(n):
            if vals[base + c] == 1:
                rows[r] |= 1 << c
                cols[c] |= 1 << r
    for i in range(n):
        ri = rows[i]
        ci = cols[i]
        for j in range(i + 1, n):
            if (ri ^ rows[j]).bit_count() != (ci ^ cols[j]).bit_count():
                return False
    return True


def _mc_chunk(args: tuple) -> int:
    n, event, seed, lo, hi, m, q = args
    hits = 0
    if event == "normal":
        nbits = n * n
        for idx in range(lo, hi):
            if _is_normal_bits(n, sign_vector(seed, idx, nbits)):
                hits += 1
    elif event == "symmetric":
        nbits = n * n
        for idx in range(lo, hi):
            vals = sign_vector(seed, idx, nbits)
            if all(
                vals[r * n + c] == vals[c * n + r]
                for r in range(n)
                for c in range(r + 1, n)
            ):
                hits += 1
    elif event == "property-p":
        from .structure import PairedMatrix, has_property_P

        nbits = 2 * m * q
        for idx in range(lo, hi):
            vals = sign_vector(seed, idx, nbits)
            rows = tuple(tuple(vals[r * q : (r + 1) * q]) for r in range(2 * m))
            if has_property_P(PairedMatrix(m, q, rows)).holds:
                hits += 1
    elif event == "profile-conformance":
        from .permlemma import fit_kt, greedy_sigma

        for idx in range(lo, hi):
            M = random_sign_matrix(n, seed, idx)
            if not fit_kt(greedy_sigma(M).final_profile).deviations:
                hits += 1
    else:
        raise InputError(f"unknown event {event!r}")
    return hits


def montecarlo(
    n: int,
    event: str,
    samples: int,
    seed: int,
    threads: Optional[int] = None,
    m: Optional[int] = None,
    q: Optional[int] = None,
) -> CountReport:
    """Unbiased frequency estimate with a 95% Wilson interval; identical
    output for any thread count because sample idx is the only random key."""
    if event not in _EVENTS:
        raise InputError(f"event must be one of {_EVENTS}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    if event == "property-p" and (m is None or q is None):
        raise InputError("property-p needs m and q")
    threads = threads or default_threads()
    t0 = time.perf_counter()
    ranges = _chunk_ranges(samples)
    jobs = [(n, event, seed, lo, hi, m, q) for lo, hi in ranges]
    hits = sum(_run_chunks(_mc_chunk, jobs, threads))
    wall = time.perf_counter() - t0
    lo, hi = wilson_interval(hits, samples)
    note = ""
    if hits == 0:
        note = "no hits: the estimate is an upper-bound observation only"
    return CountReport(
        n=n,
        event=event,
        mode="montecarlo",
        total_count=samples,
        hit_count=hits,
        probability=Fraction(hits, samples),
        wall_time_s=wall,
        samples=samples,
        seed=seed,
        ci_low=lo,
        ci_high=hi,
        note=note,
    )


# -- recursion inequality ----------------------------------------------------


@dataclass(frozen=True)
class RecursionCheck:
    i: int
    k: int
    t: int
    conditionings: int
    factor: Fraction
    sup_prev: Fraction
    sup_next: Fraction
    violations: tuple[tuple[int, Fraction, Fraction], ...]  # (D-key, lhs, rhs)


@dataclass(frozen=True)
class RecursionReport:
    n: int
    k: int
    t: int
    member_count: int
    checks: tuple[RecursionCheck, ...]
    wall_time_s: float

    @property
    def ok(self) -> bool:
        return all(not c.violations for c in self.checks)


def _profile_bits(n: int, g: int) -> tuple[int, ...]:
    """Rank profile of the sign matrix encoded by bitboard g (row-major)."""
    from .rank import rank_exact

    entries = [
        [1 if (g >> (r * n + c)) & 1 else -1 for c in range(n)] for r in range(n)
    ]
    out = [0] * (n + 1)
    for i in range(1, n - 1):
        top = [[entries[r][c] for r in range(i)] for c in range(i + 1, n)]
        bottom = [[entries[r][c] for c in range(i)] for r in range(i + 1, n)]
        out[i] = rank_exact(top + bottom).rank
    return tuple(out)


def verify_recursion_lemma(
    n: int,
    C: IntMatrix,
    k: int,
    t: int,
    allow_long_run: bool = False,
) -> RecursionReport:
    """Exhaustively check, with exact rationals, that conditioning on one more
    row/column pair costs at least the 2^-min(R(i-1), 2n-2i) factor:

        sup_{D_{i-1}} P(member | D_{i-1}) <= factor * sup_{D_i} P(member | D_i)

    and, stronger, that the bound holds at every attainable D_{i-1}.
    Membership: C-normal with rank profile equal to the clamped target.
    """
    cap = 4 if allow_long_run else MAX_RECURSION_N
    if n > cap:
        raise CapabilityError(f"recursion verification refused for n={n} (cap {cap})")
    if not (1 <= k <= t <= n):
        raise InputError("need 1 <= k <= t <= n")
    t0 = time.perf_counter()
    total = 1 << (n * n)
    targets = commutator_targets(n, C)
    want_profile = tuple(
        r_formula_clamped(n, k, t, i) for i in range(1, n + 1)
    )
    members = []
    for g in range(total):
        rows = [0] * n
        cols = [0] * n
        for r in range(n):
            for c in range(n):
                if (g >> (r * n + c)) & 1:
                    rows[r] |= 1 << c
                    cols[c] |= 1 << r
        if _commutator_key(n, rows, cols) not in targets:
            members.append(False)
            continue
        prof = _profile_bits(n, g)
        members.append(prof[1:] == want_profile)
    member_count = sum(members)

    checks = []
    for i in range(1, n + 1):
        mask_prev = ConditioningMask(n, i - 1).bitmask()
        mask_next = ConditioningMask(n, i).bitmask()
        prev_tot: dict[int, int] = {}
        prev_hit: dict[int, int] = {}
        next_tot: dict[int, int] = {}
        next_hit: dict[int, int] = {}
        for g in range(total):
            kp = g & mask_prev
            kn = g & mask_next
            prev_tot[kp] = prev_tot.get(kp, 0) + 1
            next_tot[kn] = next_tot.get(kn, 0) + 1
            if members[g]:
                prev_hit[kp] = prev_hit.get(kp, 0) + 1
                next_hit[kn] = next_hit.get(kn, 0) + 1
        sup_next = max(
            (Fraction(h, next_tot[key]) for key, h in next_hit.items()),
            default=Fraction(0),
        )
        sup_prev = max(
            (Fraction(h, prev_tot[key]) for key, h in prev_hit.items()),
            default=Fraction(0),
        )
        r_prev = r_formula_clamped(n, k, t, i - 1) if i > 1 else 0
        exponent = min(r_prev, 2 * n - 2 * i)
        factor = Fraction(1, 1 << exponent)
        rhs = factor * sup_next
        violations = []
        for key, h in prev_hit.items():
            lhs = Fraction(h, prev_tot[key])
            if lhs > rhs:
                violations.append((key, lhs, rhs))
        checks.append(
            RecursionCheck(
                i=i,
                k=k,
                t=t,
                conditionings=len(prev_hit),
                factor=factor,
                sup_prev=sup_prev,
                sup_next=sup_next,
                violations=tuple(violations),
            )
        )
    return RecursionReport(
        n=n,
        k=k,
        t=t,
        member_count=member_count,
        checks=tuple(checks),
        wall_time_s=time.perf_counter() - t0,
    )
