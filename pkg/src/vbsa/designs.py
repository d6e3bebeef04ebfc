"""Sampling designs for total-effect estimation and their closed-form metrics.

A design arranges base matrices (A, B, C, ...) and one-column hybrids such as
A_B(j) into an evaluation plan, together with the pairing table of point
couples that differ only in factor j (the elementary effects).  Competing
designs are compared through their economy ``e = E_T / N_T`` (elementary
effects per model run) and explorativity ``chi`` (fraction of non-repeated
coordinates among all coordinates the design consumes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmc import SampleMatrix, l2_star_discrepancy, sobol_block

PLAN_KINDS = ("asymmetric", "symmetric2", "multimatrix", "owen", "lamboni", "cyclic_single")
REFERENCE_KINDS = ("couples", "stars", "winding_stairs")

_BASE_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def base_label(index: int) -> str:
    """Label of the ``index``-th base matrix: A, B, C, ..."""
    return _BASE_NAMES[index]


def hybrid_label(base: str, donor: str, j: int) -> str:
    """Label of the hybrid taking column ``j`` (1-based) of ``donor`` into ``base``."""
    return f"{base}_{donor}({j})"


def cyclic_label(j: int) -> str:
    """Label of the single-matrix variant where column ``j`` is shifted down one row."""
    return f"A_next({j})"


@dataclass(frozen=True)
class DesignSpec:
    """A sampling-design descriptor: kind, base-matrix count, rows per matrix, factors."""

    kind: str
    n: int
    N: int
    k: int

    def __post_init__(self) -> None:
        if self.kind not in PLAN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}; expected one of {PLAN_KINDS}")
        if self.N < 1 or self.k < 1:
            raise ValueError("N and k must be >= 1")
        expected = {"asymmetric": 2, "symmetric2": 2, "owen": 3, "cyclic_single": 1}
        if self.kind in expected and self.n != expected[self.kind]:
            raise ValueError(f"design kind {self.kind!r} requires n = {expected[self.kind]}")
        if self.kind in ("multimatrix", "lamboni") and self.n < 2:
            raise ValueError(f"design kind {self.kind!r} requires n >= 2")


@dataclass(frozen=True)
class DesignMetrics:
    """Closed-form cost and exploration metrics of a design."""

    kind: str
    n: int
    N: int
    total_points: int          # N_T
    total_effects: int         # E_T
    economy: float             # e = E_T / N_T
    explorativity: float       # chi
    discrepancy: float | None = None

    @property
    def original_points(self) -> int:
        """Points carrying only original coordinates (nN)."""
        return self.n * self.N


@dataclass(frozen=True)
class EvaluationPlan:
    """All points a design requires, with provenance labels and effect pairings.

    ``blocks`` maps a matrix label to its half-open row span in ``points``;
    ``pairs[j]`` holds two index arrays (left, right) of rows forming the
    elementary-effect couples assigned to factor ``j`` (1-based).
    """

    spec: DesignSpec
    points: np.ndarray
    blocks: tuple[tuple[str, int, int], ...]
    pairs: dict[int, tuple[np.ndarray, np.ndarray]] = field(repr=False)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _, _ in self.blocks)

    def rows(self, label: str) -> np.ndarray:
        for name, lo, hi in self.blocks:
            if name == label:
                return self.points[lo:hi]
        raise KeyError(f"no matrix labelled {label!r} in plan")

    def split_outputs(self, y: np.ndarray) -> dict[str, np.ndarray]:
        """Slice a vector of model outputs over the whole plan by matrix label."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.points.shape[0],):
            raise ValueError(f"output vector length {y.shape} does not match plan size {self.points.shape[0]}")
        return {label: y[lo:hi] for label, lo, hi in self.blocks}


def hybrid_matrix(base: np.ndarray | SampleMatrix, donor: np.ndarray | SampleMatrix, j: int):
    """Copy of ``base`` whose column ``j`` (1-based) is taken from ``donor``."""
    base_vals = base.values if isinstance(base, SampleMatrix) else np.asarray(base, dtype=float)
    donor_vals = donor.values if isinstance(donor, SampleMatrix) else np.asarray(donor, dtype=float)
    if base_vals.shape != donor_vals.shape:
        raise ValueError(f"base shape {base_vals.shape} does not match donor shape {donor_vals.shape}")
    if not 1 <= j <= base_vals.shape[1]:
        raise ValueError(f"factor index j = {j} out of range 1..{base_vals.shape[1]}")
    out = base_vals.copy()
    out[:, j - 1] = donor_vals[:, j - 1]
    if isinstance(base, SampleMatrix):
        donor_name = donor.label if isinstance(donor, SampleMatrix) else "?"
        return SampleMatrix(values=out, label=hybrid_label(base.label, donor_name, j))
    return out


def _cyclic_matrix(base: np.ndarray, j: int) -> np.ndarray:
    """Copy of ``base`` whose column ``j`` is rotated up one row (row N wraps to row 1)."""
    out = base.copy()
    out[:, j - 1] = np.roll(base[:, j - 1], -1)
    return out


def assemble_plan(spec: DesignSpec, base_matrices: list[np.ndarray | SampleMatrix]) -> EvaluationPlan:
    """Assemble the ordered evaluation plan and pairing table for ``spec``.

    Base matrices come first (A, B, ...), then hybrids grouped by base matrix,
    donor and factor, so plans are reproducible row-for-row.
    """
    if len(base_matrices) != spec.n:
        raise ValueError(f"design kind {spec.kind!r} needs {spec.n} base matrices, got {len(base_matrices)}")
    mats = []
    for m in base_matrices:
        vals = m.values if isinstance(m, SampleMatrix) else np.asarray(m, dtype=float)
        if vals.shape != (spec.N, spec.k):
            raise ValueError(f"base matrix shape {vals.shape} does not match (N, k) = {(spec.N, spec.k)}")
        mats.append(vals)

    k, n, N = spec.k, spec.n, spec.N
    segments: list[tuple[str, np.ndarray]] = []

    def span(label: str) -> tuple[int, int]:
        lo = 0
        for name, arr in segments:
            if name == label:
                return lo, lo + arr.shape[0]
            lo += arr.shape[0]
        raise KeyError(label)

    if spec.kind == "asymmetric":
        segments.append(("A", mats[0]))
        for j in range(1, k + 1):
            segments.append((hybrid_label("A", "B", j), hybrid_matrix(mats[0], mats[1], j)))
    elif spec.kind in ("symmetric2", "multimatrix", "lamboni"):
        if spec.kind == "symmetric2":
            order = [(0, 1), (1, 0)]
        else:
            order = [(m, q) for m in range(n) for q in range(n) if q != m]
        for m in range(n):
            segments.append((base_label(m), mats[m]))
        for m, q in order:
            for j in range(1, k + 1):
                segments.append(
                    (hybrid_label(base_label(m), base_label(q), j), hybrid_matrix(mats[m], mats[q], j))
                )
    elif spec.kind == "owen":
        segments.append(("A", mats[0]))
        segments.append(("B", mats[1]))
        for j in range(1, k + 1):
            segments.append((hybrid_label("B", "A", j), hybrid_matrix(mats[1], mats[0], j)))
        for j in range(1, k + 1):
            segments.append((hybrid_label("C", "B", j), hybrid_matrix(mats[2], mats[1], j)))
    elif spec.kind == "cyclic_single":
        segments.append(("A", mats[0]))
        for j in range(1, k + 1):
            segments.append((cyclic_label(j), _cyclic_matrix(mats[0], j)))
    else:
        raise AssertionError(spec.kind)

    points = np.vstack([arr for _, arr in segments])
    blocks = []
    lo = 0
    for name, arr in segments:
        blocks.append((name, lo, lo + arr.shape[0]))
        lo += arr.shape[0]

    idx = np.arange(N)
    pairs: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {j: [] for j in range(1, k + 1)}

    def add(j: int, left_label: str, right_label: str) -> None:
        llo, _ = span(left_label)
        rlo, _ = span(right_label)
        pairs[j].append((idx + llo, idx + rlo))

    if spec.kind == "asymmetric":
        for j in range(1, k + 1):
            add(j, "A", hybrid_label("A", "B", j))
    elif spec.kind == "symmetric2":
        for j in range(1, k + 1):
            add(j, "A", hybrid_label("A", "B", j))
            add(j, "B", hybrid_label("B", "A", j))
    elif spec.kind in ("multimatrix", "lamboni"):
        for j in range(1, k + 1):
            for m in range(n):
                others = [q for q in range(n) if q != m]
                for q in others:
                    add(j, base_label(m), hybrid_label(base_label(m), base_label(q), j))
                if spec.kind == "multimatrix":
                    for a in range(len(others)):
                        for b in range(a + 1, len(others)):
                            add(
                                j,
                                hybrid_label(base_label(m), base_label(others[a]), j),
                                hybrid_label(base_label(m), base_label(others[b]), j),
                            )
    elif spec.kind == "owen":
        for j in range(1, k + 1):
            add(j, "B", hybrid_label("B", "A", j))
    elif spec.kind == "cyclic_single":
        for j in range(1, k + 1):
            add(j, "A", cyclic_label(j))

    merged = {
        j: (np.concatenate([l for l, _ in lst]), np.concatenate([r for _, r in lst]))
        for j, lst in pairs.items()
    }
    plan = EvaluationPlan(spec=spec, points=points, blocks=tuple(blocks), pairs=merged)
    expected = design_metrics(spec).total_points
    assert points.shape[0] == expected, f"plan size {points.shape[0]} != N_T {expected}"
    return plan


def design_metrics(spec: DesignSpec) -> DesignMetrics:
    """Closed-form N_T, E_T, economy and explorativity for a plan-capable design."""
    k, n, N = spec.k, spec.n, spec.N
    if spec.kind == "asymmetric":
        nt, et = N * (k + 1), N * k
        chi = 2.0 / (k + 1)
    elif spec.kind == "symmetric2":
        nt, et = 2 * N * (k + 1), 2 * N * k
        chi = 1.0 / (k + 1)
    elif spec.kind == "multimatrix":
        nt = n * N * (1 + k * (n - 1))
        et = N * k * n * n * (n - 1) // 2
        chi = 1.0 / (1 + k * (n - 1))
    elif spec.kind == "lamboni":
        nt = n * N * (1 + k * (n - 1))
        et = N * k * n * (n - 1)
        chi = 1.0 / (1 + k * (n - 1))
    elif spec.kind == "owen":
        nt, et = 2 * N * (k + 1), N * k
        chi = 3.0 / (2 * (k + 1))
    elif spec.kind == "cyclic_single":
        # All coordinates are original (single matrix); cost matches the
        # asymmetric design.
        nt, et = N * (k + 1), N * k
        chi = N * k / (nt * k)
    else:
        raise AssertionError(spec.kind)
    return DesignMetrics(
        kind=spec.kind,
        n=n,
        N=N,
        total_points=nt,
        total_effects=et,
        economy=et / nt,
        explorativity=chi,
    )


def reference_metrics(kind: str, k: int, n_t: int | None = None) -> DesignMetrics:
    """Metrics-only reference designs: couples, stars and winding stairs.

    No plan assembly exists for these; they anchor the explorativity-economy
    comparison.  ``winding_stairs`` interpolates between its minimal trajectory
    (N_T = k + 1) and the asymptotic regime; pass ``n_t`` to pick a point.
    """
    if kind not in REFERENCE_KINDS:
        raise ValueError(f"unknown reference design {kind!r}; expected one of {REFERENCE_KINDS}")
    if kind == "couples":
        nt = n_t if n_t is not None else 2
        et = nt // 2
        chi = (k + 1) / (2.0 * k)
    elif kind == "stars":
        nt = n_t if n_t is not None else k + 1
        et = nt * k // (k + 1)
        chi = 2.0 / (k + 1)
    else:
        nt = n_t if n_t is not None else k + 1
        et = nt - 1
        chi = (nt + k - 1) / (nt * k)
    return DesignMetrics(
        kind=kind, n=1, N=nt, total_points=nt, total_effects=et,
        economy=et / nt, explorativity=chi,
    )


def _best_power_of_two(cost_of_n: "callable", target: int, max_p: int = 20) -> int:
    """Power of two N whose cost is nearest ``target``; ties go to the smaller N."""
    best_n, best_d = 1, abs(cost_of_n(1) - target)
    for p in range(1, max_p + 1):
        n = 1 << p
        d = abs(cost_of_n(n) - target)
        if d < best_d:
            best_n, best_d = n, d
    return best_n


def budget_table(k: int, target_nt: int, n_range: range = range(2, 11)) -> list[DesignMetrics]:
    """Design alternatives meeting an affordable total run count.

    Emits the asymmetric two-matrix row plus, for each base-matrix count in
    ``n_range``, the symmetric multi-matrix row whose power-of-two N brings
    N_T closest to ``target_nt``.  When several n land on the same N only the
    closest-to-target row is kept, matching how such trade-off tables are
    usually reported.  Rows carry the L2-star discrepancy of the pooled nN
    original (unscrambled) base-matrix points and are sorted by decreasing N.
    """
    if target_nt < k + 1:
        raise ValueError(f"target_nt = {target_nt} is below the minimal design cost {k + 1}")

    rows: list[DesignMetrics] = []
    n_asym = _best_power_of_two(lambda N: N * (k + 1), target_nt)
    rows.append(design_metrics(DesignSpec(kind="asymmetric", n=2, N=n_asym, k=k)))

    sym_rows: dict[int, DesignMetrics] = {}
    for n in n_range:
        best_n = _best_power_of_two(lambda N, n=n: n * N * (1 + k * (n - 1)), target_nt)
        spec = DesignSpec(kind="multimatrix", n=n, N=best_n, k=k)
        metrics = design_metrics(spec)
        incumbent = sym_rows.get(best_n)
        if incumbent is None or abs(metrics.total_points - target_nt) < abs(
            incumbent.total_points - target_nt
        ):
            sym_rows[best_n] = metrics
    rows.extend(sym_rows.values())

    out = []
    for row in sorted(rows, key=lambda r: (-r.N, r.kind != "asymmetric", r.n)):
        pool = sobol_block(row.n * k, int(math.log2(row.N)) if row.N > 1 else 0)
        pooled = np.vstack([pool.values[: row.N, m * k : (m + 1) * k] for m in range(row.n)])
        out.append(
            DesignMetrics(
                kind=row.kind, n=row.n, N=row.N,
                total_points=row.total_points, total_effects=row.total_effects,
                economy=row.economy, explorativity=row.explorativity,
                discrepancy=l2_star_discrepancy(pooled),
            )
        )
    return out


def budget_table_csv(rows: list[DesignMetrics]) -> str:
    """CSV rendering of a budget table (kind,N,n,N_T,E_T,nN,D,chi)."""
    lines = ["kind,N,n,N_T,E_T,nN,D,chi"]
    for r in rows:
        kind = "symmetric" if r.kind == "multimatrix" else r.kind
        d = "" if r.discrepancy is None else repr(r.discrepancy)
        lines.append(
            f"{kind},{r.N},{r.n},{r.total_points},{r.total_effects},{r.original_points},{d},{r.explorativity!r}"
        )
    return "\n".join(lines) + "\n"


__all__ = [
    "DesignMetrics",
    "DesignSpec",
    "EvaluationPlan",
    "PLAN_KINDS",
    "REFERENCE_KINDS",
    "assemble_plan",
    "base_label",
    "budget_table",
    "budget_table_csv",
    "cyclic_label",
    "design_metrics",
    "hybrid_label",
    "hybrid_matrix",
    "reference_metrics",
]
