"""Command-line interface.

Every verb writes its outputs plus a ``manifest.json`` into ``--out``.  The
manifest records the resolved configuration and its hash, seeds, stage
timings and the sha256 digest of each file written, so that any artifact
can be traced back to the run that produced it.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from .benchmarks import PRESETS, preset_dict, simulate_preset
from .errors import DataError, GeneSetMismatch, NumericalError
from .estimator import LassoConfig
from .evaluation import er_significance, null_histogram, precision_recall_f1
from .graph import scc_decompose
from .influence import DEFAULT_GRID, InfluenceMatrix, build_influence_matrix, cutoff_scan
from .orderings import CausalOrdering, OrderingUniverse
from .pipeline import InferenceConfig, default_ordering_budget, infer_network, ordering_universe
from .synth import NoiseSpec, perturb_influence

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "out": "ripe_out",
    "plot": False,
    # simulate
    "preset": None,
    "fp_rate": 0.0,
    "fn_rate": 0.0,
    "reverse_prop": 0.0,
    # influence screen
    "perturbation": None,
    "cutoff": None,
    "grid": None,
    "adjust": "none",
    "equal_var": False,
    # orderings
    "influence": None,
    "m": None,
    "strategy": "auto",
    "exhaustive_max": 10,
    # run
    "steady": None,
    "orderings_file": None,
    "gold": None,
    "q": 0.1,
    "tau": 0.25,
    "alpha": 0.1,
    "shrink": 0.6,
    "scale": False,
    "score": "objective",
    "dump_estimates": "none",
    # evaluate
    "estimate": None,
    "trials": 10_000,
    "two_layer": None,
    "genes": None,
}

VERB_KEYS = {
    "simulate": ["preset", "fp_rate", "fn_rate", "reverse_prop"],
    "scan": ["perturbation", "grid", "adjust", "equal_var"],
    "influence": ["perturbation", "cutoff", "adjust", "equal_var"],
    "orderings": ["influence", "perturbation", "cutoff", "adjust", "equal_var", "m", "strategy", "exhaustive_max"],
    "run": [
        "steady", "influence", "perturbation", "cutoff", "adjust", "equal_var", "orderings_file",
        "gold", "m", "strategy", "exhaustive_max", "q", "tau", "alpha", "shrink", "scale",
        "score", "trials", "dump_estimates",
    ],
    "evaluate": ["estimate", "gold", "trials", "two_layer", "genes"],
}
GLOBAL_KEYS = ["seed", "workers", "out", "plot"]


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.exc = exc
        super().__init__(f"stage '{stage}': {exc}")


@contextmanager
def stage(name: str, timings: dict | None = None):
    t0 = time.perf_counter()
    try:
        yield
    except (DataError, NumericalError, np.linalg.LinAlgError, OSError) as exc:
        raise StageError(name, exc) from exc
    if timings is not None:
        timings[name] = round(time.perf_counter() - t0, 6)


# -- argument parsing -------------------------------------------------------

def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--workers", type=int, help="worker threads for per-ordering estimation")
    g.add_argument("--out", help="output directory (default ./ripe_out)")
    g.add_argument("--config", help="JSON file with option values; flags override it")
    g.add_argument("--plot", action=argparse.BooleanOptionalAction, help="also render PNG figures")
    return g


def _screen_flags(p: argparse.ArgumentParser, cutoff=True):
    p.add_argument("--perturbation", help="knockout screen expression TSV")
    if cutoff:
        p.add_argument("--cutoff", type=float, help="p-value cutoff for the influence matrix")
    p.add_argument("--adjust", choices=["none", "bh"], help="p-value adjustment (default none)")
    p.add_argument("--equal-var", dest="equal_var", action=argparse.BooleanOptionalAction,
                   help="pooled-variance t-test instead of Welch")


def _ordering_flags(p: argparse.ArgumentParser):
    p.add_argument("--m", type=int, help="ordering budget (default 1000, 10000 above 1000 genes)")
    p.add_argument("--strategy", choices=["auto", "exhaustive", "mc_dfs"])
    p.add_argument("--exhaustive-max", dest="exhaustive_max", type=int,
                   help="largest strong component enumerated exhaustively (default 10)")


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="ripe", parents=[common], argument_default=argparse.SUPPRESS,
        description="Regulatory network inference from knockout screens and steady-state data.",
    )
    parser.add_argument("--version", action="version", version=f"ripe {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    kw = dict(parents=[common], argument_default=argparse.SUPPRESS)

    p = sub.add_parser("simulate", help="write a synthetic benchmark network and datasets", **kw)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--fp-rate", dest="fp_rate", type=float, help="false-positive rate added to the exact influence matrix")
    p.add_argument("--fn-rate", dest="fn_rate", type=float)
    p.add_argument("--reverse-prop", dest="reverse_prop", type=float)

    p = sub.add_parser("scan", help="influence-graph size against p-value cutoff", **kw)
    _screen_flags(p, cutoff=False)
    p.add_argument("--grid", help="comma-separated cutoffs (default 40 log-spaced values)")

    p = sub.add_parser("influence", help="binary influence matrix from a knockout screen", **kw)
    _screen_flags(p)

    p = sub.add_parser("orderings", help="causal orderings of an influence graph", **kw)
    p.add_argument("--influence", help="influence matrix TSV")
    _screen_flags(p)
    _ordering_flags(p)

    p = sub.add_parser("run", help="full pipeline: orderings, estimation, consensus", **kw)
    p.add_argument("--steady", help="steady-state expression TSV")
    p.add_argument("--influence", help="influence matrix TSV")
    _screen_flags(p)
    p.add_argument("--orderings-file", dest="orderings_file", help="use these orderings instead of generating them")
    p.add_argument("--gold", help="gold-standard edge list for evaluation")
    _ordering_flags(p)
    p.add_argument("--q", type=float, help="fraction of best orderings kept (default 0.1)")
    p.add_argument("--tau", type=float, help="consensus confidence threshold (default 0.25)")
    p.add_argument("--alpha", type=float, help="penalty level (default 0.1)")
    p.add_argument("--shrink", type=float, help="penalty shrinkage factor (default 0.6)")
    p.add_argument("--scale", action=argparse.BooleanOptionalAction, help="standardise genes to unit variance")
    p.add_argument("--score", choices=["objective", "profile"])
    p.add_argument("--trials", type=int, help="random graphs for the significance test")
    p.add_argument("--dump-estimates", dest="dump_estimates", choices=["none", "selected", "all"])

    p = sub.add_parser("evaluate", help="score an edge list against a gold standard", **kw)
    p.add_argument("--estimate", help="estimated edge list TSV")
    p.add_argument("--gold", help="gold-standard edge list TSV")
    p.add_argument("--trials", type=int)
    p.add_argument("--two-layer", dest="two_layer",
                   help="restrict random-graph sources to these genes (comma list or file)")
    p.add_argument("--genes", help="file listing the full gene set (default: labels seen in the inputs)")
    return parser


def resolve_config(verb: str, ns: dict) -> dict:
    """Merge defaults, the JSON config file and explicit flags (in that order)."""
    keys = GLOBAL_KEYS + VERB_KEYS[verb]
    cfg = {k: DEFAULTS[k] for k in keys}
    path = ns.pop("config", None)
    if path is not None:
        try:
            file_cfg = rio.read_json(path)
        except DataError as exc:
            raise UsageError(str(exc)) from None
        unknown = sorted(set(file_cfg) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"{path}: unknown config keys {unknown}")
        cfg.update({k: v for k, v in file_cfg.items() if k in cfg})
    cfg.update({k: v for k, v in ns.items() if k in cfg})
    _validate(verb, cfg)
    return cfg


def _validate(verb: str, cfg: dict):
    def need(*names):
        for n in names:
            if cfg.get(n) is None:
                raise UsageError(f"{verb}: --{n.replace('_', '-')} is required")

    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise UsageError("seed must be a non-negative integer")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise UsageError("workers must be a positive integer")
    if verb == "simulate":
        need("preset")
        if cfg["preset"] not in PRESETS:
            raise UsageError(f"unknown preset {cfg['preset']!r}; choose from {sorted(PRESETS)}")
        for k in ("fp_rate", "fn_rate", "reverse_prop"):
            if not 0.0 <= float(cfg[k]) <= 1.0:
                raise UsageError(f"{k} must lie in [0, 1]")
    if verb in ("scan", "influence"):
        need("perturbation")
    if verb == "influence":
        need("cutoff")
    if verb in ("orderings", "run"):
        if cfg.get("influence") is None:
            need("perturbation", "cutoff")
        if cfg["m"] is not None and cfg["m"] < 1:
            raise UsageError("m must be >= 1")
    if verb == "run":
        need("steady")
        for k in ("q", "tau"):
            if not 0.0 < float(cfg[k]) <= 1.0:
                raise UsageError(f"{k} must lie in (0, 1]")
        if not 0.0 < float(cfg["alpha"]) < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        if float(cfg["shrink"]) <= 0.0:
            raise UsageError("shrink must be positive")
    if verb == "evaluate":
        need("estimate", "gold")
    if verb in ("run", "evaluate") and int(cfg["trials"]) < 1:
        raise UsageError("trials must be >= 1")
    if cfg.get("cutoff") is not None and not 0.0 < float(cfg["cutoff"]) <= 1.0:
        raise UsageError("cutoff must lie in (0, 1]")


def config_hash(cfg: dict) -> str:
    """Digest of the result-determining configuration (output location excluded)."""
    body = {k: v for k, v in cfg.items() if k not in ("out", "plot")}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


# -- helpers --------------------------------------------------------------------

class Run:
    """Collects outputs, digests and timings for one invocation's manifest."""

    def __init__(self, verb: str, cfg: dict):
        self.verb = verb
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.timings: dict[str, float] = {}
        self.inputs: dict[str, dict] = {}
        self.outputs: dict[str, dict] = {}
        self.extra: dict = {}

    def add_input(self, name, path):
        self.inputs[name] = {"path": str(path), "sha256": rio.sha256_file(path)}

    def add_output(self, name, path):
        path = Path(path)
        self.outputs[name] = {
            "path": str(path.relative_to(self.out)) if path.is_relative_to(self.out) else str(path),
            "sha256": rio.sha256_file(path),
        }

    def path(self, name) -> Path:
        return self.out / name

    def finish(self) -> Path:
        manifest = {
            "tool": "ripe",
            "version": __version__,
            "command": self.verb,
            "config": self.cfg,
            "config_hash": config_hash(self.cfg),
            "seeds": {"run": self.cfg["seed"]},
            "timings": self.timings,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        for k, v in self.extra.items():
            if k == "seeds":
                manifest["seeds"].update(v)
            else:
                manifest[k] = v
        return rio.write_json(self.path("manifest.json"), manifest)


def _load_screen_influence(run: Run, cfg: dict):
    with stage("load", run.timings):
        data = rio.read_expression(cfg["perturbation"])
    run.add_input("perturbation", cfg["perturbation"])
    with stage("influence", run.timings):
        infl = build_influence_matrix(data, float(cfg["cutoff"]), cfg["adjust"], bool(cfg["equal_var"]))
    return infl


def _influence_from_cfg(run: Run, cfg: dict) -> InfluenceMatrix:
    if cfg.get("influence") is not None:
        with stage("load", run.timings):
            infl = rio.read_influence(cfg["influence"])
        run.add_input("influence", cfg["influence"])
        return infl
    return _load_screen_influence(run, cfg)


def _align(infl: InfluenceMatrix, labels: list[str]) -> InfluenceMatrix:
    """Re-index influence columns to the steady-state gene order."""
    if list(infl.gene_labels) == list(labels):
        return infl
    if set(infl.gene_labels) != set(labels):
        raise GeneSetMismatch("influence matrix and steady-state data cover different genes")
    pos = {g: i for i, g in enumerate(labels)}
    perm = [pos[g] for g in infl.gene_labels]
    entries = np.zeros((infl.k, len(labels)), dtype=bool)
    entries[:, perm] = infl.entries
    ids = [perm[g] for g in infl.perturbed_ids]
    return InfluenceMatrix(entries, ids, list(labels))


def _graph_digest(infl: InfluenceMatrix) -> str:
    text = "\n".join(f"{a}\t{b}" for a, b in sorted(infl.edges()))
    return hashlib.sha256(text.encode()).hexdigest()


def _write_orderings(run: Run, universe: OrderingUniverse, infl: InfluenceMatrix, cfg: dict, m: int):
    meta = {
        "influence_sha256": _graph_digest(infl),
        "seed": cfg["seed"],
        "m": m,
        "strategy": cfg["strategy"],
        "exhaustive": str(universe.exhaustive).lower(),
        "count": len(universe),
    }
    path = rio.write_orderings(run.path("orderings.txt"), universe.sequences(), infl.gene_labels, meta)
    run.add_output("orderings", path)


# -- verbs ------------------------------------------------------------------------

def cmd_simulate(run: Run, cfg: dict):
    preset = PRESETS[cfg["preset"]]
    with stage("simulate", run.timings):
        sim = simulate_preset(preset, cfg["seed"])
    net, infl = sim["network"], sim["influence"]
    noise = NoiseSpec(float(cfg["fp_rate"]), float(cfg["fn_rate"]), float(cfg["reverse_prop"]), seed=cfg["seed"])
    info = None
    if noise.fp_rate or noise.fn_rate or noise.reverse_prop:
        with stage("noise", run.timings):
            infl, info = perturb_influence(infl, noise)
    with stage("write", run.timings):
        run.add_output("network", rio.write_network(run.path("network.tsv"), net))
        run.add_output("gold", rio.write_edge_list(run.path("gold.tsv"), net.edges()))
        run.add_output("steady", rio.write_expression(run.path("steady.tsv"), sim["steady"]))
        run.add_output("influence", rio.write_influence(run.path("influence.tsv"), infl))
        if "screen" in sim:
            run.add_output("screen", rio.write_expression(run.path("screen.tsv"), sim["screen"]))
    run.extra["network"] = {
        "p": net.p,
        "edges": net.edge_count,
        "largest_scc": max(scc_decompose(net.graph()).sizes),
        "influence_edges": infl.edge_count,
    }
    run.extra["preset"] = {**preset_dict(preset), "weight_range": list(preset.weight_range)}
    if info is not None:
        run.extra["noise"] = info
    print(f"simulated {preset.name}: p={net.p}, edges={net.edge_count}, outputs in {run.out}")


def _grid(cfg) -> list[float]:
    g = cfg.get("grid")
    if g is None:
        return list(DEFAULT_GRID)
    if isinstance(g, str):
        try:
            return [float(x) for x in g.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"bad cutoff grid {g!r}") from None
    return [float(x) for x in g]


def cmd_scan(run: Run, cfg: dict):
    grid = _grid(cfg)
    with stage("load", run.timings):
        data = rio.read_expression(cfg["perturbation"])
    run.add_input("perturbation", cfg["perturbation"])
    with stage("scan", run.timings):
        rows = cutoff_scan(data, grid, cfg["adjust"], bool(cfg["equal_var"]))
    run.add_output("scan", rio.write_scan(run.path("scan.tsv"), rows))
    if cfg["plot"]:
        from .plots import plot_scan

        with stage("plot", run.timings):
            run.add_output("scan_plot", plot_scan(rows, run.path("scan.png")))
    print(f"scanned {len(rows)} cutoffs, outputs in {run.out}")


def cmd_influence(run: Run, cfg: dict):
    infl = _load_screen_influence(run, cfg)
    run.add_output("influence", rio.write_influence(run.path("influence.tsv"), infl))
    run.extra["influence"] = {"k": infl.k, "p": infl.p, "edges": infl.edge_count}
    print(f"influence matrix {infl.k}x{infl.p} with {infl.edge_count} edges")


def _inference_config(cfg: dict) -> InferenceConfig:
    lasso = LassoConfig(
        alpha=float(cfg.get("alpha", DEFAULTS["alpha"])),
        shrink=float(cfg.get("shrink", DEFAULTS["shrink"])),
        scale=bool(cfg.get("scale", False)),
        score=cfg.get("score", "objective"),
    )
    return InferenceConfig(
        q=float(cfg.get("q", DEFAULTS["q"])),
        tau=float(cfg.get("tau", DEFAULTS["tau"])),
        m=cfg["m"],
        strategy=cfg["strategy"],
        exhaustive_max=int(cfg["exhaustive_max"]),
        seed=cfg["seed"],
        workers=cfg["workers"],
        lasso=lasso,
    )


def cmd_orderings(run: Run, cfg: dict):
    infl = _influence_from_cfg(run, cfg)
    icfg = _inference_config(cfg)
    with stage("orderings", run.timings):
        universe = ordering_universe(infl, icfg)
    m = icfg.m or default_ordering_budget(infl.p)
    _write_orderings(run, universe, infl, cfg, m)
    run.extra["orderings"] = {"count": len(universe), "exhaustive": universe.exhaustive}
    print(f"{len(universe)} orderings ({'exhaustive' if universe.exhaustive else 'sampled'})")


def _tf_list(spec: str) -> list[str]:
    p = Path(spec)
    if p.is_file():
        return rio.read_labels(p)
    return [x.strip() for x in spec.split(",") if x.strip()]


def _evaluate(run: Run, cfg: dict, estimate, gold, nodes, sources):
    with stage("evaluate", run.timings):
        rep = precision_recall_f1(estimate, gold, labels=nodes)
        pv, null = er_significance(estimate, gold, nodes, int(cfg["trials"]), cfg["seed"], sources)
    rep.pvalue = pv
    hist = null_histogram(null)
    body = rep.to_dict()
    body.update(
        trials=int(cfg["trials"]),
        null_mean=float(null.mean()),
        estimate_edges=len(set(estimate)),
        gold_edges=len(set(gold)),
        two_layer=sources is not None,
    )
    run.add_output("evaluation", rio.write_json(run.path("eval.json"), body))
    run.add_output("null_histogram", rio.write_histogram(run.path("null_histogram.tsv"), hist))
    if cfg["plot"]:
        from .plots import plot_null

        with stage("plot", run.timings):
            run.add_output("null_plot", plot_null(hist, rep.tp, run.path("null_histogram.png")))
    run.extra["evaluation"] = {k: body[k] for k in ("precision", "recall", "f1", "pvalue")}
    return rep


def cmd_run(run: Run, cfg: dict):
    with stage("load", run.timings):
        steady = rio.read_expression(cfg["steady"])
    run.add_input("steady", cfg["steady"])
    infl = _influence_from_cfg(run, cfg)
    with stage("load", run.timings):
        infl = _align(infl, steady.gene_labels)
    icfg = _inference_config(cfg)
    m = icfg.m or default_ordering_budget(infl.p)

    if cfg.get("orderings_file") is not None:
        with stage("orderings", run.timings):
            seqs = rio.read_orderings(cfg["orderings_file"], steady.gene_labels)
            universe = OrderingUniverse([CausalOrdering(s, "file", i) for i, s in enumerate(seqs)], False)
        run.add_input("orderings", cfg["orderings_file"])
    else:
        with stage("orderings", run.timings):
            universe = ordering_universe(infl, icfg)
        _write_orderings(run, universe, infl, cfg, m)

    with stage("estimation", run.timings), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        result = infer_network(steady, infl, icfg, universe)
    if caught:
        print(f"warning: {len(caught)} lasso fits hit the sweep limit", file=sys.stderr)
    run.timings.update({f"pipeline.{k}": round(v, 6) for k, v in result.timings.items()})

    labels = steady.gene_labels
    with stage("write", run.timings):
        selected = {id(e) for e in result.selected}
        score_lines = ["ordering\tscore\tedges\tselected"] + [
            f"{i}\t{rio.fmt(e.score)}\t{e.edge_count}\t{int(id(e) in selected)}"
            for i, e in enumerate(result.estimates)
        ]
        run.add_output("scores", rio.write_lines(run.path("scores.tsv"), score_lines))
        run.add_output("consensus", rio.write_consensus(run.path("consensus.tsv"), result.consensus, labels))
        run.add_output("edges", rio.write_edge_list(run.path("edges.tsv"), result.edge_labels()))
        dump = cfg["dump_estimates"]
        if dump != "none":
            chash = config_hash(cfg)
            for i, e in enumerate(result.estimates):
                if dump == "selected" and id(e) not in selected:
                    continue
                tsv, js = rio.write_estimate(
                    run.path(f"estimates/ordering_{i:05d}.tsv"), e, labels,
                    {"ordering_id": i, "score": e.score, "config_hash": chash,
                     "converged": e.converged, "selected": id(e) in selected},
                )
                run.add_output(f"estimate_{i:05d}", tsv)
                run.add_output(f"estimate_{i:05d}_meta", js)

    n_sel = len(result.selected)
    run.extra["orderings"] = {
        "count": len(universe),
        "exhaustive": universe.exhaustive,
        "selected": n_sel,
        "source": "file" if cfg.get("orderings_file") else ("exhaustive" if universe.exhaustive else "generated"),
    }
    run.extra["scores"] = result.score_summary(icfg.q)
    run.extra["consensus"] = {"edges": len(result.edges), "tau": icfg.tau, "q": icfg.q}
    run.extra["two_layer"] = infl.k < infl.p

    msg = f"{len(universe)} orderings, {n_sel} selected, {len(result.edges)} edges"
    if cfg.get("gold") is not None:
        with stage("load", run.timings):
            _, gold, _ = rio.read_edge_list(cfg["gold"])
        run.add_input("gold", cfg["gold"])
        sources = [labels[g] for g in infl.perturbed_ids] if infl.k < infl.p else None
        rep = _evaluate(run, cfg, result.edge_labels(), gold, labels, sources)
        msg += f"; precision={rep.precision:.3f} recall={rep.recall:.3f} F1={rep.f1:.3f} p={rep.pvalue:.4g}"
    print(msg)


def cmd_evaluate(run: Run, cfg: dict):
    with stage("load", run.timings):
        est_labels, est, _ = rio.read_edge_list(cfg["estimate"])
        gold_labels, gold, _ = rio.read_edge_list(cfg["gold"])
        tfs = _tf_list(cfg["two_layer"]) if cfg.get("two_layer") else None
        if cfg.get("genes"):
            nodes = rio.read_labels(cfg["genes"])
            if len(set(nodes)) != len(nodes):
                raise DataError(f"{cfg['genes']}: duplicate gene labels")
        else:
            nodes = list(dict.fromkeys([*est_labels, *gold_labels, *(tfs or [])]))
        if tfs is not None:
            unknown = [t for t in tfs if t not in set(nodes)]
            if unknown:
                raise DataError(f"two-layer genes not in the gene set: {unknown[:5]}")
            if len(est) > len(set(tfs)) * (len(nodes) - 1):
                raise DataError("estimate has more edges than the two-layer null model can place")
    run.add_input("estimate", cfg["estimate"])
    run.add_input("gold", cfg["gold"])
    rep = _evaluate(run, cfg, est, gold, nodes, tfs)
    print(f"precision={rep.precision:.3f} recall={rep.recall:.3f} F1={rep.f1:.3f} p={rep.pvalue:.4g}")


COMMANDS = {
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "influence": cmd_influence,
    "orderings": cmd_orderings,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    verb = ns.pop("verb")
    try:
        cfg = resolve_config(verb, ns)
    except UsageError as exc:
        print(f"ripe {verb}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run = Run(verb, cfg)
    try:
        run.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[verb](run, cfg)
        run.finish()
    except UsageError as exc:
        print(f"ripe {verb}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        code = EXIT_NUMERIC if isinstance(exc.exc, (NumericalError, np.linalg.LinAlgError)) else EXIT_DATA
        print(f"ripe {verb}: error in stage '{exc.stage}': {exc.exc}", file=sys.stderr)
        return code
    except (DataError, OSError) as exc:
        print(f"ripe {verb}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"ripe {verb}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
