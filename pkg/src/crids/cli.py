"""Command line front end: ``crids assess | plan | summarize | synth``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import config as cfgmod
from . import pipeline
from .model import CridsError

log = logging.getLogger("crids")


def _load_cfg(args) -> dict:
    cfg = cfgmod.load_config(args.config)
    if getattr(args, "scenario_override", None):
        cfg = cfgmod.merge(cfg, {"scenario": cfgmod.parse_scenario_override(args.scenario_override)})
    if getattr(args, "workers", None):
        cfg["workers"] = args.workers
    if getattr(args, "no_figures", False):
        cfg["figures"] = False
    return cfg


def _assess(args, cfg):
    out = Path(args.out) if args.out else None
    result = pipeline.run_assess(cfg, args.sites, args.layers_dir, out)
    n_ok = len(result.succeeded)
    for r in result.results:
        if not r.ok:
            log.error("site %s: %s", r.site.id, r.error)
    print(f"assessed {n_ok} of {len(result.results)} sites")
    if out is not None:
        print(f"report: {out / 'assessment.csv'}")
    if n_ok == 0:
        return pipeline.EXIT_NO_SITES
    return pipeline.EXIT_OK


def _plan(args, cfg):
    if args.mode:
        cfg = cfgmod.merge(cfg, {"planner": {"mode": args.mode}})
    if args.budget is not None:
        cfg = cfgmod.merge(cfg, {"planner": {"budget": args.budget}})
    if args.threshold is not None:
        cfg = cfgmod.merge(cfg, {"planner": {"threshold": args.threshold}})
    if args.assessment:
        results = pipeline.read_report(args.assessment)
    else:
        results = pipeline.run_assess(cfg, args.sites, args.layers_dir, None).results
    meta = None
    sites_path = args.sites or (cfg.get("inputs") or {}).get("sites")
    if sites_path and Path(sites_path).exists():
        from .io import load_sites

        meta = {s.id: dict(s.metadata) for s in load_sites(sites_path, cfg.get("column_map"))}
    if not any(r.ok for r in results):
        print("no assessed sites to plan for", file=sys.stderr)
        return pipeline.EXIT_NO_SITES
    out = Path(args.out) if args.out else None
    run = pipeline.run_plan(cfg, results, out, meta)
    plan = run.plan
    if run.frontier:
        print(f"frontier: {len(run.frontier)} non-dominated plans")
        for k, pt in enumerate(run.frontier):
            print(f"  {k:>4d}  cost {pt.total_cost:>14.2f}  index {pt.total_index:.6f}")
        if out is not None and cfg.get("figures", True):
            from .plotting import frontier_plot

            frontier_plot([p.total_cost for p in run.frontier], [p.total_index for p in run.frontier],
                          out / "frontier.png")
    elif plan is not None:
        print(f"status: {plan.status.value}; total cost {plan.total_cost:.2f}")
    if plan is not None and plan.infeasible_sites:
        print("infeasible sites: " + ", ".join(plan.infeasible_sites))
    return run.exit_code


def _summarize(args, cfg):
    thresholds = args.thresholds or (cfg.get("summary") or {}).get("thresholds", [0.1, 0.5])
    bins = int((cfg.get("summary") or {}).get("bins", 10))
    summary, ok = pipeline.summarize_report(args.report, thresholds, bins)
    for line in summary.lines():
        print(line)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(pipeline.render_summary(summary), encoding="utf-8")
        if cfg.get("figures", True):
            from .plotting import index_histogram, threshold_maps

            idx = [r.vector.index for r in ok]
            index_histogram(idx, out / "index_histogram.png", bins, thresholds)
            threshold_maps([r.site.point[0] for r in ok], [r.site.point[1] for r in ok], idx,
                           out / "threshold_maps.png", thresholds)
    return pipeline.EXIT_OK


def _synth(args, cfg):
    from .synthetic import make_study

    paths = make_study(args.out, n_sites=args.sites_count, n_features=args.features, seed=args.seed)
    print(f"wrote synthetic study to {args.out} (config {paths['config']})")
    return pipeline.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crids", description=__doc__)
    p.add_argument("--version", action="version", version=f"crids {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="study configuration (YAML)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    a = sub.add_parser("assess", help="score sites and write the assessment report")
    common(a)
    a.add_argument("--sites", help="site table (CSV)")
    a.add_argument("--layers-dir", help="directory holding the GeoJSON layers")
    a.add_argument("--scenario-override", metavar="slr=<ft>", help="e.g. slr=1.837 or slr=1.837,ratio=0.31")
    a.add_argument("--workers", type=int)
    a.set_defaults(func=_assess)

    pl = sub.add_parser("plan", help="choose adaptation options")
    common(pl)
    pl.add_argument("--sites")
    pl.add_argument("--layers-dir")
    pl.add_argument("--assessment", help="existing assessment.csv instead of assessing in-line")
    pl.add_argument("--scenario-override", metavar="slr=<ft>")
    pl.add_argument("--workers", type=int)
    pl.add_argument("--mode", choices=["threshold", "budget", "frontier"])
    pl.add_argument("--budget", type=float)
    pl.add_argument("--threshold", type=float)
    pl.set_defaults(func=_plan)

    s = sub.add_parser("summarize", help="threshold shares and histogram of an assessment report")
    common(s)
    s.add_argument("report", help="assessment.csv")
    s.add_argument("--thresholds", type=float, nargs="+")
    s.set_defaults(func=_summarize)

    y = sub.add_parser("synth", help="generate a synthetic study")
    y.add_argument("--out", required=True)
    y.add_argument("--sites-count", type=int, default=1000)
    y.add_argument("--features", type=int, default=10_000)
    y.add_argument("--seed", type=int, default=0)
    y.set_defaults(func=_synth, config=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_cfg(args)
        return args.func(args, cfg)
    except (CridsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
