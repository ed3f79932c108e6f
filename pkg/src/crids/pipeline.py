"""Batch assessment, planning and summary runs with their report files."""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional, Sequence

from . import __version__
from . import config as cfgmod
from .aggregate import aggregate
from .fuzzify import TransformTable, transform_site
from .geo import extract_features
from .io import load_costs, load_elevations, load_layers, load_sites
from .model import (
    CridsError,
    MembershipVector,
    Site,
    registry,
)
from .plan import (
    build_instance,
    max_resilience_under_budget,
    min_cost_assignment,
    pareto_frontier,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 2
EXIT_NO_SITES = 3

REPORT_COLUMNS = (
    ["site_id", "x", "y", "status"]
    + [f"raw_{f.name}" for f in registry()]
    + [f"score_{f.name}" for f in registry()]
    + ["resistivity", "adaptability", "recovery", "index", "error"]
)


def _fmt(value: Optional[float], places: int) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.{places}f}"


@dataclass
class SiteResult:
    site: Site
    vector: Optional[MembershipVector] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.vector is not None


@dataclass
class Assessment:
    results: list
    table: TransformTable
    manifest: dict = field(default_factory=dict)

    @property
    def succeeded(self) -> list:
        return [r for r in self.results if r.ok]


def assess_sites(sites: Sequence[Site], table: TransformTable, diagram=None) -> list[SiteResult]:
    out = []
    for s in sites:
        try:
            vec = aggregate(transform_site(s, table).scores, diagram)
        except CridsError as exc:
            out.append(SiteResult(s, None, str(exc)))
            continue
        out.append(SiteResult(s, vec))
    return out


def _chunks(seq: Sequence, n: int) -> list:
    size = max(1, math.ceil(len(seq) / n))
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def _extract_chunk(args):
    return extract_features(*args)


def report_rows(results: Sequence[SiteResult]) -> list[list[str]]:
    rows = []
    for r in sorted(results, key=lambda r: r.site.id):
        s = r.site
        row = [s.id, _fmt(float(s.point[0]), 6), _fmt(float(s.point[1]), 6), "ok" if r.ok else "error"]
        row += [_fmt(s.raw.get(f), 6) for f in registry()]
        if r.ok:
            v = r.vector
            row += [_fmt(v.scores.get(f, 1.0), 9) for f in registry()]
            row += [_fmt(v.resistivity, 9), _fmt(v.adaptability, 9), _fmt(v.recovery, 9), _fmt(v.index, 9), ""]
        else:
            row += [""] * (len(registry()) + 4) + [r.error]
        rows.append(row)
    return rows


def render_report(results: Sequence[SiteResult]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    w.writerows(report_rows(results))
    return buf.getvalue()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_assess(
    cfg: Mapping,
    sites_path: "str | Path | None" = None,
    layers_dir: "str | Path | None" = None,
    out_dir: "str | Path | None" = None,
    sites: Optional[Sequence[Site]] = None,
) -> Assessment:
    """Extract features (when layers are given), score, aggregate and write the report.

    ``sites`` may be passed directly instead of a sites file. Writes
    ``assessment.csv`` and ``manifest.json`` into ``out_dir`` when given.
    """
    started = _now()
    inputs = cfg.get("inputs") or {}
    sites_path = sites_path or inputs.get("sites")
    if sites is None:
        if sites_path is None:
            raise cfgmod.ConfigError("no sites file given")
        sites = load_sites(sites_path, cfg.get("column_map"))
    sites = list(sites)
    scenario = cfgmod.scenario_from(cfg)
    specs = cfgmod.transform_specs(cfg)
    diagram = cfgmod.diagram_from(cfg)
    input_hashes = {}
    if sites_path is not None and Path(sites_path).exists():
        input_hashes["sites"] = _sha256_file(Path(sites_path))

    layer_counts = {}
    layers, bindings = {}, []
    if layers_dir is not None:
        layers_dir = Path(layers_dir)
        kinds = cfgmod.layer_kinds(cfg)
        bindings = cfgmod.bindings_from(cfg)
        paths = {}
        for name in sorted({b.layer for b in bindings}):
            doc = (cfg.get("layers") or {}).get(name)
            if doc is None:
                raise cfgmod.ConfigError(f"layer {name!r} is bound but not declared under layers")
            paths[name] = layers_dir / doc["path"]
        layers = load_layers(paths, kinds)
        for name, p in paths.items():
            input_hashes[f"layer:{name}"] = _sha256_file(p)
        layer_counts = {k: len(v) for k, v in layers.items()}
    samples = {}
    elev = inputs.get("elevations")
    if elev is not None:
        elev_path = Path(elev)
        samples = load_elevations(elev_path)
        input_hashes["elevations"] = _sha256_file(elev_path)
    if layers or samples:
        workers = int(cfg.get("workers") or 1)
        cell = float(cfg.get("grid_cell_size", 500.0))
        if workers > 1 and len(sites) > 1:
            jobs = [(c, layers, samples, scenario, bindings, cell) for c in _chunks(sites, workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                sites = [s for part in pool.map(_extract_chunk, jobs) for s in part]
        else:
            sites = extract_features(sites, layers, samples, scenario, bindings, cell)

    table = TransformTable.resolve(specs, sites)
    results = assess_sites(sites, table, diagram)
    body = render_report(results)

    manifest = {
        "tool": "crids",
        "version": __version__,
        "config_sha256": cfgmod.config_hash(cfg),
        "input_sha256": input_hashes,
        "counts": {
            "sites": len(sites),
            "assessed": sum(r.ok for r in results),
            "errors": sum(not r.ok for r in results),
            "layers": layer_counts,
        },
        "resolved_references": {f.name: v for f, v in sorted(table.resolved_references.items())},
        "scenario": {
            "name": scenario.name,
            "sea_level_rise": scenario.sea_level_rise,
            "groundwater_response_ratio": scenario.groundwater_response_ratio,
            "drainfield_depth": scenario.drainfield_depth,
            "groundwater_rise": scenario.groundwater_rise,
        },
        "report_sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "started": started,
        "finished": _now(),
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "assessment.csv").write_text(body, encoding="utf-8")
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return Assessment(results, table, manifest)


def read_report(path: "str | Path") -> list[SiteResult]:
    """Load an assessment report back into sites and membership vectors."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("site_id", "x", "y", "status", "index") if c not in (reader.fieldnames or [])]
        if missing:
            raise CridsError(f"{path}: not an assessment report (missing {missing})")
        for row in reader:
            raw = {}
            scores = {}
            for f in registry():
                v = row.get(f"raw_{f.name}", "")
                if v:
                    raw[f] = float(v)
                sv = row.get(f"score_{f.name}", "")
                if sv:
                    scores[f] = float(sv)
            site = Site(row["site_id"], (float(row["x"]), float(row["y"])), raw)
            if row["status"] != "ok":
                out.append(SiteResult(site, None, row.get("error", "")))
                continue
            vec = MembershipVector(
                scores,
                float(row["resistivity"]),
                float(row["adaptability"]),
                float(row["recovery"]),
                float(row["index"]),
            )
            out.append(SiteResult(site, vec))
    return out


# -- planning -----------------------------------------------------------------

PLAN_COLUMNS = ["site_id", "option_id", "option", "cost", "index", "baseline_index", "status"]
FRONTIER_COLUMNS = ["point", "total_cost", "total_index", "assignments"]


@dataclass
class PlanRun:
    plan: object = None
    frontier: list = field(default_factory=list)
    instance: object = None
    exit_code: int = EXIT_OK
    files: list = field(default_factory=list)


def _thresholds(cfg: Mapping, settings, sites: Sequence[Site], site_meta: Mapping[str, Mapping[str, str]]):
    if settings.threshold_column:
        col = settings.threshold_column
        out = {}
        for s in sites:
            meta = site_meta.get(s.id, {})
            if col not in meta or meta[col] == "":
                raise cfgmod.ConfigError(f"site {s.id} has no {col!r} threshold")
            out[s.id] = float(meta[col])
        return out
    return settings.threshold


def run_plan(
    cfg: Mapping,
    assessment: "Assessment | Sequence[SiteResult]",
    out_dir: "str | Path | None" = None,
    site_meta: Optional[Mapping[str, Mapping[str, str]]] = None,
) -> PlanRun:
    results = assessment.results if isinstance(assessment, Assessment) else list(assessment)
    ok = sorted((r for r in results if r.ok), key=lambda r: r.site.id)
    settings = cfgmod.planner_from(cfg)
    costs_path = (cfg.get("inputs") or {}).get("costs")
    site_costs = load_costs(costs_path) if costs_path else None
    options = cfgmod.options_from(cfg, site_costs)
    rules = cfgmod.exclusions_from(cfg)
    sites = [r.site for r in ok]
    if site_meta is None:
        site_meta = {r.site.id: dict(r.site.metadata) for r in ok}
    vectors = {r.site.id: r.vector for r in ok}
    thresholds = _thresholds(cfg, settings, sites, site_meta)
    instance = build_instance(sites, vectors, options, thresholds, rules)
    run = PlanRun(instance=instance)
    names = {o.id: o.name.value for o in options}

    if settings.mode == "threshold":
        run.plan = min_cost_assignment(instance)
        if not run.plan.optimal:
            run.exit_code = EXIT_INFEASIBLE
    elif settings.mode == "budget":
        run.plan = max_resilience_under_budget(instance, settings.budget, settings.quantum, settings.objective)
    else:
        run.frontier = pareto_frontier(instance, settings.quantum, settings.max_budget)
        run.plan = run.frontier[-1].plan if run.frontier else None

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if run.plan is not None:
            p = out_dir / "plan.csv"
            p.write_text(render_plan(instance, run.plan, names), encoding="utf-8")
            run.files.append(p)
        if run.frontier:
            p = out_dir / "frontier.csv"
            p.write_text(render_frontier(run.frontier), encoding="utf-8")
            run.files.append(p)
        summary = {
            "mode": settings.mode,
            "status": run.plan.status.value if run.plan is not None else None,
            "infeasible_sites": list(run.plan.infeasible_sites) if run.plan is not None else [],
            "total_cost": run.plan.total_cost if run.plan is not None else None,
            "objective": None if run.plan is None or math.isnan(run.plan.objective) else run.plan.objective,
            "cost_quantum": settings.quantum,
            "config_sha256": cfgmod.config_hash(cfg),
            "frontier_points": len(run.frontier),
            "version": __version__,
            "finished": _now(),
        }
        p = out_dir / "plan_manifest.json"
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        run.files.append(p)
    return run


def render_plan(instance, plan, names: Mapping[int, str]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLAN_COLUMNS)
    col = {o: l for l, o in enumerate(instance.option_ids)}
    base = col.get(1, 0)
    bad = set(plan.infeasible_sites)
    for i, sid in enumerate(instance.site_ids):
        baseline = _fmt(float(instance.index[i, base]), 9)
        if sid in bad:
            w.writerow([sid, "", "", "", "", baseline, "infeasible"])
            continue
        oid = plan.assignments[sid]
        l = col[oid]
        w.writerow([
            sid, oid, names.get(oid, ""), _fmt(float(instance.cost[i, l]), 2),
            _fmt(float(instance.index[i, l]), 9), baseline, "ok",
        ])
    return buf.getvalue()


def render_frontier(frontier) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRONTIER_COLUMNS)
    for k, pt in enumerate(frontier):
        assign = ";".join(f"{sid}={oid}" for sid, oid in sorted(pt.plan.assignments.items()))
        w.writerow([k, _fmt(pt.total_cost, 2), _fmt(pt.total_index, 9), assign])
    return buf.getvalue()


# -- summary ------------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    n: int
    thresholds: tuple
    below_counts: tuple
    bin_edges: tuple
    histogram: tuple

    def share(self, k: int) -> float:
        return 100.0 * self.below_counts[k] / self.n if self.n else 0.0

    def lines(self, width: int = 40) -> list[str]:
        out = [f"sites assessed: {self.n}"]
        for k, t in enumerate(self.thresholds):
            out.append(f"below-{t:g} = {self.below_counts[k]} ({self.share(k):.1f}%)")
        peak = max(self.histogram) if self.histogram and max(self.histogram) else 1
        for k, c in enumerate(self.histogram):
            lo, hi = self.bin_edges[k], self.bin_edges[k + 1]
            bar = "#" * int(round(width * c / peak)) if c else ""
            out.append(f"[{lo:4.2f}, {hi:4.2f}{']' if k == len(self.histogram) - 1 else ')'} {c:>7d} |{bar}")
        return out


def summarize(indices: Sequence[float], thresholds: Sequence[float] = (0.1, 0.5), bins: int = 10) -> Summary:
    """Counts of sites strictly below each threshold plus an equal-width histogram on [0, 1]."""
    idx = [float(v) for v in indices]
    below = tuple(sum(1 for v in idx if v < t) for t in thresholds)
    edges = tuple(k / bins for k in range(bins + 1))
    hist = [0] * bins
    for v in idx:
        k = min(bins - 1, max(0, int(math.floor(v * bins))))
        hist[k] += 1
    return Summary(len(idx), tuple(float(t) for t in thresholds), below, edges, tuple(hist))


def render_summary(summary: Summary) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "label", "count", "share_percent"])
    for k, t in enumerate(summary.thresholds):
        w.writerow(["below", f"{t:g}", summary.below_counts[k], f"{summary.share(k):.4f}"])
    for k, c in enumerate(summary.histogram):
        share = 100.0 * c / summary.n if summary.n else 0.0
        w.writerow(["bin", f"{summary.bin_edges[k]:.2f}-{summary.bin_edges[k + 1]:.2f}", c, f"{share:.4f}"])
    return buf.getvalue()


def summarize_report(path: "str | Path", thresholds=(0.1, 0.5), bins: int = 10) -> tuple[Summary, list]:
    results = read_report(path)
    ok = [r for r in results if r.ok]
    return summarize([r.vector.index for r in ok], thresholds, bins), ok
