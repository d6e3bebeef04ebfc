"""Convergence benchmarking: scrambled repetitions, matched costs, MAE, exports.

The protocol: every repetition draws one column permutation of the Sobol'
pool (shared by all estimators in that repetition, the fairest comparison),
block sizes run over powers of two, and every competing design is run at the
power-of-two N whose total cost lands nearest the asymmetric reference cost
``(k + 1) 2**p`` (ties to the smaller N).  Accuracy is summarised as the mean
over repetitions of the per-factor mean absolute deviation from the analytic
total indices.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import adaptive as adaptive_mod
from . import designs, estimators, qmc, testfns
from .designs import DesignMetrics, DesignSpec, reference_metrics
from .estimators import TotalIndexEstimate
from .testfns import FunctionSpec

ESTIMATOR_NAMES = (
    "saltenis",
    "saltenis_symmetric",
    "glen_isaacs",
    "owen",
    "multimatrix",
    "lamboni",
    "cyclic",
)


@dataclass(frozen=True)
class EstimatorConfig:
    """One competing method: estimator name plus its base-matrix count."""

    name: str
    n: int = 2

    def __post_init__(self) -> None:
        if self.name not in ESTIMATOR_NAMES:
            raise ValueError(f"unknown estimator {self.name!r}; expected one of {ESTIMATOR_NAMES}")
        fixed = {"saltenis": 2, "saltenis_symmetric": 2, "glen_isaacs": 2, "owen": 3, "cyclic": 1}
        if self.name in fixed and self.n != fixed[self.name]:
            raise ValueError(f"estimator {self.name!r} uses n = {fixed[self.name]}")
        if self.name in ("multimatrix", "lamboni") and self.n < 2:
            raise ValueError(f"estimator {self.name!r} needs n >= 2")

    def design(self, N: int, k: int) -> DesignSpec:
        kind = {
            "saltenis": "asymmetric",
            "saltenis_symmetric": "lamboni",   # two-matrix symmetric squared differences
            "glen_isaacs": "symmetric2",
            "owen": "owen",
            "multimatrix": "multimatrix",
            "lamboni": "lamboni",
            "cyclic": "cyclic_single",
        }[self.name]
        return DesignSpec(kind=kind, n=self.n, N=N, k=k)

    def estimate(self, evals: estimators.EvaluationSet, k: int) -> TotalIndexEstimate:
        if self.name == "saltenis":
            return estimators.saltenis_T(evals, k)
        if self.name == "saltenis_symmetric":
            return estimators.lamboni_T(evals, k, 2)
        if self.name == "glen_isaacs":
            return estimators.glen_isaacs_d3_T(evals, k)
        if self.name == "owen":
            return estimators.owen_T(evals, k)
        if self.name == "multimatrix":
            return estimators.multimatrix_T(evals, k, self.n)
        if self.name == "lamboni":
            return estimators.lamboni_T(evals, k, self.n)
        if self.name == "cyclic":
            return estimators.cyclic_single_matrix_T(evals, k)
        raise AssertionError(self.name)


@dataclass(frozen=True)
class ExperimentConfig:
    """A full convergence experiment for one test function."""

    function: FunctionSpec
    estimators: tuple[EstimatorConfig, ...]
    p_min: int = 2
    p_max: int = 14
    repetitions: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.p_max < self.p_min:
            raise ValueError("p range is empty")
        if not self.estimators:
            raise ValueError("need at least one estimator")

    @property
    def p_values(self) -> range:
        return range(self.p_min, self.p_max + 1)


@dataclass(frozen=True)
class ConvergenceRecord:
    """One benchmark cell: per-repetition estimates or a per-p aggregate (rep None)."""

    function: str
    estimator: str
    n: int
    p: int
    N: int
    n_t: int
    rep: int | None
    t_hat: np.ndarray | None = field(repr=False, default=None)
    mae: float = math.nan


@dataclass(frozen=True)
class CellError:
    """A failed benchmark cell; sweeps continue and report these at the end."""

    estimator: str
    n: int
    p: int
    rep: int
    message: str


def mae(estimates: np.ndarray, analytic: np.ndarray) -> float:
    """Mean over repetitions of the per-repetition mean absolute factor deviation."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    ref = np.asarray(analytic, dtype=float)
    if est.shape[1] != len(ref):
        raise ValueError(f"estimate columns {est.shape[1]} do not match analytic length {len(ref)}")
    return float(np.mean(np.abs(est - ref).mean(axis=1)))


def matched_block_size(config: EstimatorConfig, k: int, reference_cost: int) -> int:
    """Power-of-two N whose design cost is closest to the reference; ties to smaller N."""
    best_n, best_d = 1, None
    for p in range(0, 25):
        n = 1 << p
        cost = designs.design_metrics(config.design(n, k)).total_points
        d = abs(cost - reference_cost)
        if best_d is None or d < best_d:
            best_n, best_d = n, d
    return best_n


def _rep_records(
    cfg: ExperimentConfig,
    analytic_total: np.ndarray,
    pool: np.ndarray,
    matched: dict[tuple[str, int, int], int],
    rep: int,
) -> tuple[list[ConvergenceRecord], list[CellError]]:
    k = cfg.function.k
    perm = qmc.draw_permutation(pool.shape[1], cfg.seed, rep)
    pool_r = pool[:, perm.perm]
    records: list[ConvergenceRecord] = []
    errors: list[CellError] = []
    for p in cfg.p_values:
        for est in cfg.estimators:
            N = matched[(est.name, est.n, p)]
            spec = est.design(N, k)
            try:
                mats = [pool_r[:N, m * k : (m + 1) * k] for m in range(spec.n)]
                plan = designs.assemble_plan(spec, mats)
                y = testfns.evaluate(cfg.function, plan.points)
                result = est.estimate(plan.split_outputs(y), k)
                records.append(
                    ConvergenceRecord(
                        function=cfg.function.family,
                        estimator=est.name,
                        n=est.n,
                        p=p,
                        N=N,
                        n_t=designs.design_metrics(spec).total_points,
                        rep=rep,
                        t_hat=result.total,
                        mae=float(np.mean(np.abs(result.total - analytic_total))),
                    )
                )
            except Exception as exc:  # noqa: BLE001 - error cells must not abort the sweep
                errors.append(CellError(est.name, est.n, p, rep, str(exc)))
    return records, errors


def convergence_experiment(
    cfg: ExperimentConfig, workers: int = 1
) -> tuple[list[ConvergenceRecord], list[CellError]]:
    """Run the full repetition/block sweep; deterministic for a given config.

    Repetitions may run on several threads; records are merged in repetition
    order afterwards so the output never depends on scheduling.
    """
    k = cfg.function.k
    analytic_total = testfns.analytic_indices(cfg.function).total
    n_max = max(max((e.n for e in cfg.estimators), default=2), 2)
    pool = qmc.sobol_block(n_max * k, cfg.p_max).values

    matched = {
        (e.name, e.n, p): matched_block_size(e, k, (k + 1) * 2**p)
        for e in cfg.estimators
        for p in cfg.p_values
    }
    max_needed = max(matched.values())
    if max_needed > pool.shape[0]:
        pool = qmc.sobol_block(n_max * k, int(math.log2(max_needed))).values

    reps = range(cfg.repetitions)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_rep = list(ex.map(lambda r: _rep_records(cfg, analytic_total, pool, matched, r), reps))
    else:
        per_rep = [_rep_records(cfg, analytic_total, pool, matched, r) for r in reps]

    records = [rec for recs, _ in per_rep for rec in recs]
    errors = [err for _, errs in per_rep for err in errs]
    records.sort(key=lambda r: (_estimator_order(cfg, r), r.p, r.rep))

    aggregates: list[ConvergenceRecord] = []
    for est in cfg.estimators:
        for p in cfg.p_values:
            cell = [r for r in records if r.estimator == est.name and r.n == est.n and r.p == p]
            if not cell:
                continue
            agg_mae = mae(np.vstack([r.t_hat for r in cell]), analytic_total)
            aggregates.append(
                ConvergenceRecord(
                    function=cfg.function.family,
                    estimator=est.name,
                    n=est.n,
                    p=p,
                    N=cell[0].N,
                    n_t=cell[0].n_t,
                    rep=None,
                    t_hat=None,
                    mae=agg_mae,
                )
            )
    return records + aggregates, errors


def _estimator_order(cfg: ExperimentConfig, record: ConvergenceRecord) -> int:
    for i, est in enumerate(cfg.estimators):
        if est.name == record.estimator and est.n == record.n:
            return i
    return len(cfg.estimators)


def adaptive_experiment(
    fn: FunctionSpec,
    p_values: range,
    repetitions: int,
    seed: int,
) -> tuple[list[ConvergenceRecord], list[str]]:
    """Adaptive allocation vs the plain asymmetric estimator at full reported cost.

    Both series are reported against the budget ``(k + 1) 2**p``; the runs
    actually spent by the adaptive strategy appear in the returned ledger
    lines (see :func:`vbsa.adaptive.ledger_csv_header`).
    """
    k = fn.k
    analytic_total = testfns.analytic_indices(fn).total
    plain_cfg = EstimatorConfig(name="saltenis")
    records: list[ConvergenceRecord] = []
    ledger_lines: list[str] = []
    pool = qmc.sobol_block(2 * k, max(p_values) + 1).values
    for p in p_values:
        budget = (k + 1) * 2**p
        for rep in range(repetitions):
            perm = qmc.draw_permutation(2 * k, seed, rep)
            pool_r = pool[:, perm.perm]
            N = 2**p
            spec = plain_cfg.design(N, k)
            plan = designs.assemble_plan(spec, [pool_r[:N, :k], pool_r[:N, k : 2 * k]])
            y = testfns.evaluate(fn, plan.points)
            plain = plain_cfg.estimate(plan.split_outputs(y), k)
            records.append(
                ConvergenceRecord(
                    function=fn.family, estimator="saltenis", n=2, p=p, N=N, n_t=budget,
                    rep=rep, t_hat=plain.total,
                    mae=float(np.mean(np.abs(plain.total - analytic_total))),
                )
            )
            est, ledger = adaptive_mod.adaptive_run(fn, p, seed=seed, repetition=rep)
            records.append(
                ConvergenceRecord(
                    function=fn.family, estimator="adaptive", n=2, p=p, N=N, n_t=budget,
                    rep=rep, t_hat=est.total,
                    mae=float(np.mean(np.abs(est.total - analytic_total))),
                )
            )
            ledger_lines.extend(adaptive_mod.ledger_csv_rows(p, rep, ledger))
    for name in ("saltenis", "adaptive"):
        for p in p_values:
            cell = [r for r in records if r.estimator == name and r.p == p and r.rep is not None]
            records.append(
                ConvergenceRecord(
                    function=fn.family, estimator=name, n=2, p=p, N=2**p, n_t=(k + 1) * 2**p,
                    rep=None, t_hat=None,
                    mae=mae(np.vstack([r.t_hat for r in cell]), analytic_total),
                )
            )
    return records, ledger_lines


# ---------------------------------------------------------------------------
# exporters
# ---------------------------------------------------------------------------


def records_csv(records: list[ConvergenceRecord]) -> str:
    """Full-precision CSV of benchmark records.

    Per-repetition records expand to one line per factor carrying that
    repetition's mean absolute deviation; aggregate records have empty
    rep/factor/T_hat fields and carry the MAE over repetitions.
    """
    if not records:
        raise ValueError("no records to export")
    lines = ["function,estimator,n,p,N,N_T,rep,factor,T_hat,mae"]
    for r in records:
        head = f"{r.function},{r.estimator},{r.n},{r.p},{r.N},{r.n_t}"
        if r.rep is None:
            lines.append(f"{head},,,,{r.mae!r}")
        else:
            for j, t in enumerate(r.t_hat, start=1):
                lines.append(f"{head},{r.rep},{j},{float(t)!r},{r.mae!r}")
    return "\n".join(lines) + "\n"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_MARKERS = ("circle", "triangle", "square", "diamond", "cross", "circle", "triangle", "square")


def _svg_marker(shape: str, x: float, y: float, color: str) -> str:
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{x:.2f},{y - 4:.2f} {x - 3.6:.2f},{y + 3:.2f} {x + 3.6:.2f},{y + 3:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - 3:.2f}" y="{y - 3:.2f}" width="6" height="6" fill="{color}"/>'
    if shape == "diamond":
        pts = f"{x:.2f},{y - 4:.2f} {x + 4:.2f},{y:.2f} {x:.2f},{y + 4:.2f} {x - 4:.2f},{y:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    return (
        f'<path d="M {x - 3:.2f} {y - 3:.2f} L {x + 3:.2f} {y + 3:.2f} '
        f'M {x - 3:.2f} {y + 3:.2f} L {x + 3:.2f} {y - 3:.2f}" stroke="{color}" stroke-width="1.5"/>'
    )


def _log_axis(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    if hi_e == lo_e:
        hi_e += 1
    return lo_e, hi_e


def mae_plot_svg(records: list[ConvergenceRecord], title: str = "") -> str:
    """Log-log MAE versus total cost, one polyline and marker set per estimator."""
    aggs = [r for r in records if r.rep is None and r.mae > 0]
    if not aggs:
        raise ValueError("no aggregate records to plot")
    series: dict[str, list[tuple[int, float]]] = {}
    for r in aggs:
        label = r.estimator if r.estimator in ("saltenis", "glen_isaacs", "owen", "cyclic", "adaptive", "saltenis_symmetric") else f"{r.estimator}(n={r.n})"
        series.setdefault(label, []).append((r.n_t, r.mae))

    width, height, ml, mr, mt, mb = 640, 440, 70, 170, 40, 55
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    xe0, xe1 = _log_axis(min(xs), max(xs))
    ye0, ye1 = _log_axis(min(ys), max(ys))

    def px(v: float) -> float:
        return ml + (math.log10(v) - xe0) / (xe1 - xe0) * (width - ml - mr)

    def py(v: float) -> float:
        return height - mb - (math.log10(v) - ye0) / (ye1 - ye0) * (height - mt - mb)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{ml}" y="{mt - 12}" font-size="13">{title}</text>')
    for e in range(xe0, xe1 + 1):
        x = px(10.0**e)
        out.append(f'<line x1="{x:.2f}" y1="{height - mb}" x2="{x:.2f}" y2="{height - mb + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{height - mb + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(ye0, ye1 + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append(
        f'<text x="{(ml + width - mr) / 2:.2f}" y="{height - 10}" text-anchor="middle">total cost N_T</text>'
    )
    out.append(
        f'<text x="18" y="{(mt + height - mb) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(mt + height - mb) / 2:.2f})">MAE</text>'
    )
    for i, (label, pts) in enumerate(series.items()):
        pts = sorted(pts)
        color = _PALETTE[i % len(_PALETTE)]
        marker = _MARKERS[i % len(_MARKERS)]
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(_svg_marker(marker, px(x), py(y), color))
        ly = mt + 16 + 18 * i
        lx = width - mr + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(_svg_marker(marker, lx + 11, ly - 4, color))
        out.append(f'<text x="{lx + 28}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def design_scatter_svg(rows: list[DesignMetrics], k: int) -> str:
    """Explorativity versus economy scatter for design alternatives.

    Adds the couples/stars/winding-stairs reference designs alongside the
    plan-capable rows; the winding-stairs entry spans its minimal-trajectory
    and asymptotic explorativity values.
    """
    pts: list[tuple[str, float, float]] = []
    for r in rows:
        label = "symmetric" if r.kind == "multimatrix" else r.kind
        pts.append((f"{label} n={r.n}", r.economy, r.explorativity))
    for kind in ("couples", "stars"):
        m = reference_metrics(kind, k)
        pts.append((kind, m.economy, m.explorativity))
    ws_lo = reference_metrics("winding_stairs", k, n_t=k + 1)
    ws_hi = reference_metrics("winding_stairs", k, n_t=4096)
    pts.append(("winding stairs (short)", ws_lo.economy, ws_lo.explorativity))
    pts.append(("winding stairs (long)", ws_hi.economy, ws_hi.explorativity))

    width, height, ml, mr, mt, mb = 620, 440, 70, 40, 40, 55
    emax = max(x for _, x, _ in pts) * 1.1
    cmax = max(y for _, _, y in pts) * 1.15

    def px(v: float) -> float:
        return ml + v / emax * (width - ml - mr)

    def py(v: float) -> float:
        return height - mb - v / cmax * (height - mt - mb)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="black"/>',
        f'<text x="{(ml + width - mr) / 2:.2f}" y="{height - 10}" text-anchor="middle">economy e</text>',
        f'<text x="18" y="{(mt + height - mb) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(mt + height - mb) / 2:.2f})">explorativity chi</text>',
    ]
    n_xticks = 6
    for i in range(n_xticks + 1):
        v = emax * i / n_xticks
        out.append(f'<line x1="{px(v):.2f}" y1="{height - mb}" x2="{px(v):.2f}" y2="{height - mb + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{height - mb + 18}" text-anchor="middle">{v:.2f}</text>')
    for i in range(n_xticks + 1):
        v = cmax * i / n_xticks
        out.append(f'<line x1="{ml - 5}" y1="{py(v):.2f}" x2="{ml}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{py(v) + 4:.2f}" text-anchor="end">{v:.2f}</text>')
    for i, (label, e, c) in enumerate(pts):
        color = _PALETTE[i % len(_PALETTE)]
        out.append(f'<circle cx="{px(e):.2f}" cy="{py(c):.2f}" r="4" fill="{color}"/>')
        out.append(f'<text x="{px(e) + 6:.2f}" y="{py(c) - 5:.2f}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export(
    records: list[ConvergenceRecord],
    out_dir: str | Path,
    fmt: str = "both",
    basename: str = "convergence",
    title: str = "",
) -> list[Path]:
    """Write benchmark records as CSV and/or an SVG MAE-vs-cost plot."""
    if not records:
        raise ValueError("no records to export")
    if fmt not in ("csv", "svg", "both"):
        raise ValueError(f"unknown export format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        path = out_dir / f"{basename}.csv"
        path.write_text(records_csv(records))
        written.append(path)
    if fmt in ("svg", "both"):
        path = out_dir / f"{basename}.svg"
        path.write_text(mae_plot_svg(records, title=title))
        written.append(path)
    return written


def errors_csv(errors: list[CellError]) -> str:
    lines = ["estimator,n,p,rep,message"]
    for e in errors:
        msg = e.message.replace("\n", " ").replace(",", ";")
        lines.append(f"{e.estimator},{e.n},{e.p},{e.rep},{msg}")
    return "\n".join(lines) + "\n"


__all__ = [
    "CellError",
    "ConvergenceRecord",
    "ESTIMATOR_NAMES",
    "EstimatorConfig",
    "ExperimentConfig",
    "adaptive_experiment",
    "convergence_experiment",
    "design_scatter_svg",
    "errors_csv",
    "export",
    "mae",
    "mae_plot_svg",
    "matched_block_size",
    "records_csv",
]
