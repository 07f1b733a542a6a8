"""Greedy row/column permutation driving the bordered ranks onto the
rise/plateau/slope target profile, plus the profile formula, (k,t) fitting,
and the monotonicity/feasibility checks for the fitted parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import InputError
from .matrices import Permutation, SignMatrix
from .rank import RankProfile, rank_exact


def r_formula(n: int, k: int, t: int, i: int) -> int:
    """Four-branch target rank at index i: rise to k, plateau to t, slope -1,
    then slope -2. Printed-formula value, no clamping."""
    if not (1 <= i <= n):
        raise InputError("profile index i must be in 1..n")
    if not (0 <= k <= t <= n):
        raise InputError("need 0 <= k <= t <= n")
    if i <= k:
        return i
    if i <= t:
        return k
    if i <= 2 * n - k - t:
        return k + t - i
    return 2 * n - 2 * i


def r_formula_clamped(n: int, k: int, t: int, i: int) -> int:
    """The formula truncated to the feasible rank range of T_i."""
    dim_bound = min(i, 2 * (n - i - 1)) if i < n else 0
    return max(0, min(r_formula(n, k, t, i), dim_bound))


@dataclass(frozen=True)
class GreedyStep:
    i: int
    s_i: int
    a_i: int
    b_i: int


@dataclass(frozen=True)
class GreedyTrace:
    sigma: Permutation
    steps: tuple[GreedyStep, ...]
    final_profile: RankProfile
    final_matrix: SignMatrix

    def rank_update_violations(self) -> list[int]:
        """Indices where rank_i = rank_{i-1} - b_i + a_i fails."""
        bad = []
        ranks = self.final_profile.ranks
        for step in self.steps:
            if ranks[step.i] != ranks[step.i - 1] - step.b_i + step.a_i:
                bad.append(step.i)
        return bad


@dataclass(frozen=True)
class ProfileFit:
    k: int
    t: int
    deviations: tuple[tuple[int, int, int], ...]  # (index, measured, formula)


def _t_array(a: np.ndarray, idx: int) -> np.ndarray:
    """T_idx of the 0-based matrix array: 2(n-idx-1) x idx."""
    top = a[:idx, idx + 1 :].T
    bottom = a[idx + 1 :, :idx]
    return np.concatenate([top, bottom], axis=0)


def _deleted(t_mat: np.ndarray) -> np.ndarray:
    """Drop the first row of each of the two stacked blocks."""
    m = t_mat.shape[0] // 2
    if m == 0:
        return t_mat
    keep = [r for r in range(2 * m) if r not in (0, m)]
    return t_mat[keep, :]


def _x_tail_column(a: np.ndarray, i: int) -> np.ndarray:
    """Unsigned x_i' with its first entry per block dropped: the column that
    extends the deleted T_{i-1} to T_i. Paper index i, 0-based row/col i-1."""
    row_tail = a[i - 1, i + 1 :]
    col_tail = a[i + 1 :, i - 1]
    return np.concatenate([row_tail, col_tail])


def _rk(a: np.ndarray) -> int:
    return rank_exact(a, prefilter=True).rank


def _step_quantities(a: np.ndarray, i: int) -> tuple[int, int, int, int]:
    """(r_full, b, a, r_next) for the T_{i-1} -> T_i move on a fixed matrix:
    r_full = rank T_{i-1}; b = drop after deleting the first row of each
    block; a = gain after appending the x_i' column; r_next = rank T_i."""
    t_prev = _t_array(a, i - 1)
    r_full = _rk(t_prev)
    d = _deleted(t_prev)
    r_del = _rk(d)
    col = _x_tail_column(a, i).reshape(-1, 1)
    aug = np.concatenate([d, col], axis=1)
    r_next = _rk(aug)
    return r_full, r_full - r_del, r_next - r_del, r_next


def _swap(a: np.ndarray, i: int, j: int) -> np.ndarray:
    if i == j:
        return a
    b = a.copy()
    b[[i, j], :] = b[[j, i], :]
    b[:, [i, j]] = b[:, [j, i]]
    return b


def _candidate_keys(a: np.ndarray, i: int) -> list[tuple[tuple[int, int, int], int, np.ndarray]]:
    """Scored candidates (key, j, swapped) at step i, best key first.

    Key is (-rank T_{i-1}, b_i, -a_i): keep the already-established rank as
    large as possible, then minimize the deletion drop, then maximize the
    augmentation gain. Ranking by (b_i, -a_i) alone demonstrably lets a swap
    collapse rank T_{i-1} after the fact, which breaks profile conformance.
    """
    n = a.shape[0]
    scored = []
    for j in range(i, n + 1):
        swapped = _swap(a, i - 1, j - 1)
        r_full, b, gain, _ = _step_quantities(swapped, i)
        scored.append(((-r_full, b, -gain), j, swapped))
    scored.sort(key=lambda c: (c[0], c[1]))
    return scored


def _finish_trace(M: SignMatrix, a: np.ndarray, chosen: list[int]) -> GreedyTrace:
    n = M.n
    final = SignMatrix.from_numpy(a)
    ranks = [0] * (n + 1)
    steps = []
    for i in range(1, n + 1):
        r_full, b, gain, _ = _step_quantities(a, i)
        ranks[i - 1] = r_full
        steps.append(GreedyStep(i=i, s_i=chosen[i - 1], a_i=gain, b_i=b))
    ranks[n] = 0

    sigma = Permutation.identity(n)
    for i, s in enumerate(chosen, start=1):
        sigma = Permutation.transposition(n, i, s).compose(sigma)

    return GreedyTrace(
        sigma=sigma,
        steps=tuple(steps),
        final_profile=RankProfile(n, tuple(ranks)),
        final_matrix=final,
    )


def _pure_greedy(M: SignMatrix) -> GreedyTrace:
    n = M.n
    a = M.to_numpy()
    chosen: list[int] = []
    for i in range(1, n + 1):
        scored = _candidate_keys(a, i)
        _, j, a = scored[0]
        chosen.append(j)
    return _finish_trace(M, a, chosen)


def _trace_is_clean(trace: GreedyTrace) -> bool:
    fit = fit_kt(trace.final_profile)
    return not fit.deviations and not check_obs1_profile(trace.final_profile)


def _tie_dfs(M: SignMatrix, node_budget: int = 512) -> Optional[GreedyTrace]:
    """Depth-first walk over key-tied greedy choices, best keys first, looking
    for a trace that conforms and lands inside the fitted-parameter region."""
    n = M.n
    budget = [node_budget]

    def rec(a: np.ndarray, i: int, chosen: list[int]) -> Optional[GreedyTrace]:
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        if i > n:
            trace = _finish_trace(M, a, chosen)
            return trace if _trace_is_clean(trace) else None
        scored = _candidate_keys(a, i)
        best_key = scored[0][0]
        for key, j, swapped in scored:
            if key != best_key:
                break
            found = rec(swapped, i + 1, chosen + [j])
            if found is not None:
                return found
        return None

    return rec(M.to_numpy(), 1, [])


def greedy_sigma(M: SignMatrix) -> GreedyTrace:
    """Build the transposition chain sigma_1 .. sigma_n, sigma_i = (i, s_i).

    At step i each candidate j >= i is scored on the swapped matrix by
    (-rank T_{i-1}, b_i, -a_i, j); the lexicographic minimum wins (smallest j
    on ties). When the resulting profile conforms but its fitted plateau
    falls outside the feasibility constraints even though some key-tied chain
    would satisfy them, ties are re-searched depth-first for such a chain;
    tie order alone cannot be resolved locally because the decisive rank may
    only materialize two steps later.

    The returned steps carry the a/b sequences of the final matrix, so the
    update identity rank_i = rank_{i-1} - b_i + a_i holds against the final
    profile by construction.
    """
    trace = _pure_greedy(M)
    if _trace_is_clean(trace):
        return trace
    alt = _tie_dfs(M)
    return alt if alt is not None else trace


def fit_kt(profile: RankProfile) -> ProfileFit:
    """k = max rank, t = last index attaining it; deviations measured against
    the clamped formula."""
    n = profile.n
    k = max(profile.ranks)
    t = max(i for i in range(n + 1) if profile.ranks[i] == k)
    deviations = []
    for i in range(1, n + 1):
        want = r_formula_clamped(n, k, t, i)
        got = profile.ranks[i]
        if got != want:
            deviations.append((i, got, want))
    return ProfileFit(k=k, t=t, deviations=tuple(deviations))


def matching_ts(profile: RankProfile, k: Optional[int] = None) -> tuple[int, ...]:
    """All plateau ends t whose clamped formula reproduces the profile exactly.

    Near i = n the dimension cap hides where the plateau really ends, so
    several t can be observationally equivalent; the fitted t is always the
    smallest of them when the fit is exact.
    """
    n = profile.n
    if k is None:
        k = max(profile.ranks)
    out = []
    for t in range(k, n + 1):
        if all(profile.ranks[i] == r_formula_clamped(n, k, t, i) for i in range(1, n + 1)):
            out.append(t)
    return tuple(out)


def check_ab(trace: GreedyTrace, skip_degenerate_tail: bool = True) -> list[str]:
    """Violations of: b non-decreasing, and a non-increasing within each
    maximal constant-b block. Empty list means conformance.

    The step i = n is degenerate (T_{n-1} has no rows, so b_n = a_n = 0
    identically); skip_degenerate_tail leaves it out of the monotonicity
    check.
    """
    steps = trace.steps[:-1] if skip_degenerate_tail and len(trace.steps) > 1 else trace.steps
    b = [s.b_i for s in steps]
    a = [s.a_i for s in steps]
    return check_ab_sequences(b, a)


def check_ab_sequences(b: list[int], a: list[int]) -> list[str]:
    if len(a) != len(b):
        raise InputError("a and b sequences must have equal length")
    out = []
    for i in range(1, len(b)):
        if b[i] < b[i - 1]:
            out.append(f"b decreases at i={i + 1}: b_{i}={b[i - 1]} > b_{i + 1}={b[i]}")
    for i in range(1, len(a)):
        if b[i] == b[i - 1] and a[i] > a[i - 1]:
            out.append(
                f"a increases inside constant-b block at i={i + 1}: "
                f"a_{i}={a[i - 1]} < a_{i + 1}={a[i]}"
            )
    return out


def check_obs1(n: int, k: int, t: int) -> list[tuple[str, Fraction]]:
    """The four fitted-parameter constraints; returns (name, slack) for each
    violated one, slack negative by the amount of violation."""
    checks = [
        ("t >= n-k-2", Fraction(t - (n - k - 2))),
        ("k <= 2n/3", Fraction(2 * n, 3) - k),
        ("t + k/2 <= n", Fraction(n) - (t + Fraction(k, 2))),
        ("t + k >= n", Fraction(t + k - n)),
    ]
    return [(name, slack) for name, slack in checks if slack < 0]


def check_obs1_profile(profile: RankProfile) -> list[tuple[str, Fraction]]:
    """Constraint check honoring clamp-equivalence of the plateau end.

    Passes when any t reproducing the measured profile satisfies all four
    constraints (the underlying claims are existential in (k, t)); reports
    the fitted t's violations otherwise.
    """
    fit = fit_kt(profile)
    candidates = matching_ts(profile, fit.k) or (fit.t,)
    best = None
    for t in sorted(candidates, key=lambda t: (t != fit.t, t)):
        v = check_obs1(profile.n, fit.k, t)
        if not v:
            return []
        if best is None:
            best = v
    return best
