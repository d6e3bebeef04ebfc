"""Adaptive run allocation for the asymmetric squared-difference estimator.

The run budget ``(k + 1) 2**p`` is spent in power-of-two blocks.  After a
warm-up at ``N = 2**(p + 2 - k)`` rows, factors are ranked by the standard
deviation of their elementary effects; before each doubling, the least
important factors can be dropped for good when doubling the sample would
still leave the next-ranked factor noisier (the sqrt(2) rule).  Runs saved
on dropped factors let the surviving factors climb beyond ``2**p`` rows while
staying inside the budget; the cost ledger records what was actually spent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qmc, testfns
from .estimators import EstimationError, TotalIndexEstimate


@dataclass(frozen=True)
class BlockRecord:
    """One ledger entry: stage 0 is the warm-up, stages s >= 1 the doublings."""

    stage: int
    rows_reached: int
    active_factors: tuple[int, ...]   # 1-based, factors still accumulating effects
    runs_this_block: int
    runs_total: int
    std_effects: tuple[float, ...] = ()   # per-factor spread when the block closed


@dataclass(frozen=True)
class AdaptiveLedger:
    """Spending record of one adaptive run against its budget."""

    budget: int
    blocks: tuple[BlockRecord, ...]

    @property
    def runs_spent(self) -> int:
        return self.blocks[-1].runs_total

    @property
    def savings(self) -> int:
        return self.budget - self.runs_spent


def std_elementary_effects(diffs: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Per-factor population standard deviation of elementary-effect differences."""
    out = np.empty(len(diffs))
    for j, d in enumerate(diffs):
        d = np.asarray(d, dtype=float)
        if d.ndim != 1 or len(d) < 2:
            raise EstimationError("elementary-effect vectors need length >= 2")
        out[j] = float(np.std(d))
    return out


def adaptive_run(
    fn: testfns.FunctionSpec,
    p: int,
    seed: int | None = None,
    repetition: int = 0,
    rule_enabled: bool = True,
    model: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[TotalIndexEstimate, AdaptiveLedger]:
    """Run the adaptive allocation for ``fn`` against the budget ``(k + 1) 2**p``.

    Deterministic given ``(fn, p, seed, repetition)``.  With the drop rule
    disabled the budget gate stops the doubling exactly at ``2**p`` rows for
    every factor, reproducing the plain asymmetric estimator on the same
    scrambled sequence.  ``model`` substitutes an arbitrary evaluator of the
    same dimension (points array in, output vector out) for the analytic
    family, e.g. a wrapped external code.
    """
    k = fn.k
    if k < 2:
        raise ValueError("adaptive allocation needs k >= 2 factors")
    warm_exp = p + 2 - k
    if warm_exp < 1:
        raise ValueError(f"budget exponent p = {p} leaves no warm-up block for k = {k} (need p >= {k - 1})")

    budget = (k + 1) * 2**p
    n_cols = 2 * k
    # The last block can reach 2**(p+1) rows when enough factors were dropped.
    pool = qmc.sobol_block(n_cols, p + 1)
    if seed is not None:
        pool = qmc.permute_columns(pool, qmc.draw_permutation(n_cols, seed, repetition))
    mat_a = pool.values[:, :k]
    mat_b = pool.values[:, k : 2 * k]
    evaluator = model if model is not None else (lambda pts: testfns.evaluate(fn, pts))

    def eval_hybrid(j: int, lo: int, hi: int) -> np.ndarray:
        block = mat_a[lo:hi].copy()
        block[:, j - 1] = mat_b[lo:hi, j - 1]
        return evaluator(block)

    n_rows = 2**warm_exp
    f_a = list(evaluator(mat_a[:n_rows]))
    diffs: list[list[float]] = []
    for j in range(1, k + 1):
        diffs.append(list(np.asarray(f_a) - eval_hybrid(j, 0, n_rows)))
    spent = (k + 1) * n_rows
    active = set(range(1, k + 1))

    def current_stds() -> tuple[float, ...]:
        return tuple(float(np.std(np.asarray(d))) for d in diffs)

    blocks = [BlockRecord(0, n_rows, tuple(sorted(active)), spent, spent, current_stds())]

    for stage in range(1, k):
        if rule_enabled and stage <= k - 2:
            stds = std_elementary_effects([np.asarray(d) for d in diffs])
            # decreasing importance, ties broken by ascending factor index
            order = sorted(range(1, k + 1), key=lambda j: (-stds[j - 1], j))
            upper = stds[order[k - stage - 2] - 1]   # rank k - stage - 1
            lower = stds[order[k - stage - 1] - 1]   # rank k - stage
            if upper / math.sqrt(2.0) > lower:
                for rank in range(k - stage - 1, k):
                    active.discard(order[rank])
        new_rows = n_rows
        cost = (1 + len(active)) * new_rows
        if spent + cost > budget:
            break
        lo, hi = n_rows, n_rows + new_rows
        f_a.extend(evaluator(mat_a[lo:hi]))
        for j in sorted(active):
            diffs[j - 1].extend(np.asarray(f_a[lo:hi]) - eval_hybrid(j, lo, hi))
        n_rows = hi
        spent += cost
        blocks.append(BlockRecord(stage, n_rows, tuple(sorted(active)), cost, spent, current_stds()))

    f_a_arr = np.asarray(f_a)
    variance = float(np.var(f_a_arr))
    if variance <= 0.0:
        raise EstimationError("zero output variance over evaluated base rows")
    numerator = np.array([float(np.mean(np.square(diffs[j]))) / 2.0 for j in range(k)])
    estimate = TotalIndexEstimate(
        total=numerator / variance,
        numerator=numerator,
        variance=variance,
        effects_used=np.array([len(diffs[j]) for j in range(k)]),
    )
    return estimate, AdaptiveLedger(budget=budget, blocks=tuple(blocks))


def ledger_csv_rows(p: int, rep: int, ledger: AdaptiveLedger) -> list[str]:
    """Flatten one ledger into CSV data lines (see :func:`ledger_csv_header`)."""
    rows = []
    for b in ledger.blocks:
        act = " ".join(str(j) for j in b.active_factors)
        rows.append(f"{p},{rep},{b.stage},{b.rows_reached},{act},{b.runs_this_block},{b.runs_total},{ledger.budget}")
    return rows


def ledger_csv_header() -> str:
    return "p,rep,stage,rows,active_factors,runs_block,runs_total,budget"


__all__ = [
    "AdaptiveLedger",
    "BlockRecord",
    "adaptive_run",
    "ledger_csv_header",
    "ledger_csv_rows",
    "std_elementary_effects",
]
