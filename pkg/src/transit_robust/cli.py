"""Command line front end: the full pipeline as file-based subcommands.

Every subcommand is deterministic given its flags (all randomness flows
from explicit seeds) and writes a run manifest next to its outputs with a
config snapshot, input hashes and timings.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import ean as E
from . import generate as G
from . import storage
from .features import FeatureCaps, FeatureLayout, extract
from .robustness import RobustnessConfig, normalize, run_suite
from .search import (SearchConfig, local_search, make_surrogate_oracle,
                     reevaluate_real, retime)
from .surrogate import (TrainConfig, evaluate as evaluate_model,
                        feature_importance, leave_one_out_study, load_model,
                        predict, save_model, train)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _hash_path(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for f in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(f.name.encode())
            h.update(f.read_bytes())
    elif path.is_file():
        h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(out_dir: Path, subcommand: str, args: argparse.Namespace,
                    inputs: list[str], t0: float) -> None:
    snapshot = {k: (str(v) if isinstance(v, Path) else v)
                for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "subcommand": subcommand,
        "config": snapshot,
        "input_hashes": {p: _hash_path(Path(p)) for p in inputs},
        "version": __version__,
        "elapsed_seconds": round(time.time() - t0, 3),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = out_dir / "run_manifest.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2)
    tmp.replace(out_dir / "run_manifest.json")


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    return int(os.environ.get("TRANSIT_ROBUST_THREADS", "1"))


def _config_overrides(path) -> dict[str, str]:
    return storage.load_config(path) if path else {}


def _robustness_config(args) -> RobustnessConfig:
    cfg = RobustnessConfig(master_seed=getattr(args, "seed", 0))
    for k, v in _config_overrides(getattr(args, "config", None)).items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown robustness config key {k!r}")
        setattr(cfg, k, type(getattr(cfg, k))(v) if k != "master_seed" else int(v))
    return cfg


# ------------------------------------------------------------- subcommands

def cmd_gen_dataset(args):
    if args.kind == "grid":
        spec = G.GridSpec(rows=args.rows, cols=args.cols, seed=args.seed)
        ds = G.gen_grid(spec)
    else:
        spec = G.RingSpec(rings=args.rings, spokes=args.spokes, seed=args.seed)
        ds = G.gen_ring(spec)
    storage.save_dataset(ds, args.out)
    print(f"wrote {ds.name}: {ds.n_stations} stations, {ds.n_edges} edges, "
          f"{len(ds.lines)} lines, {len(ds.demand)} groups -> {args.out}")
    return [args.out], Path(args.out)


def cmd_gen_corpus(args):
    ds = storage.load_dataset(args.dataset)
    variants = G.default_variants(args.variants, base_seed=args.seed)
    manifest = G.gen_corpus(ds, variants, args.count, args.out,
                            horizon=args.horizon,
                            robustness=_robustness_config(args))
    print(f"labeled {manifest['n_instances']} instances in "
          f"{manifest['elapsed_seconds']}s -> {args.out}")
    return [args.dataset], Path(args.out)


def cmd_evaluate(args):
    cfg = _robustness_config(args)
    ids, rows = [], []
    for d in args.instance:
        inst = storage.load_instance(d)
        rows.append(run_suite(inst, cfg).raw)
        ids.append(Path(d).name)
    storage.save_robustness(args.out, ids, np.vstack(rows))
    print(f"wrote {len(ids)} rows -> {args.out}")
    return list(args.instance), Path(args.out).parent


def cmd_normalize(args):
    ids, raw = storage.load_matrix(args.raw)
    storage.save_labels(args.out, ids, normalize(raw))
    print(f"normalized {len(ids)} rows -> {args.out}")
    return [args.raw], Path(args.out).parent


def cmd_extract_features(args):
    ids, rows = [], []
    layout = None
    for d in args.instance:
        inst = storage.load_instance(d)
        if inst.routes is None:
            inst.plan_routes()
        fv = extract(inst, FeatureCaps())
        layout = fv.layout
        rows.append(fv.values)
        ids.append(Path(d).name)
    storage.save_features(args.out, ids, np.vstack(rows))
    if args.layout:
        with open(args.layout, "w") as fh:
            fh.write(layout.to_json())
    print(f"wrote {len(ids)} feature rows ({len(rows[0])} columns) -> {args.out}")
    return list(args.instance), Path(args.out).parent


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(seed=args.seed)
    if getattr(args, "depth", None):
        cfg.depth = args.depth
    if getattr(args, "width", None):
        cfg.width = args.width
    for k, v in _config_overrides(getattr(args, "config", None)).items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown training config key {k!r}")
        setattr(cfg, k, type(getattr(cfg, k))(v))
    return cfg


def cmd_train(args):
    _, x = storage.load_matrix(args.features)
    ids, y = storage.load_matrix(args.labels)
    layout = None
    if args.layout:
        layout = FeatureLayout.from_json(Path(args.layout).read_text())
    model, history = train(x, y, _train_config(args), layout,
                           metadata={"features": Path(args.features).name})
    save_model(model, args.out)
    if args.history:
        storage.save_history(args.history, history)
    print(f"trained on {len(ids)} rows, {model.metadata['epochs_run']} epochs, "
          f"final train loss {history.train_loss[-1]:.4f} -> {args.out}")
    return [args.features, args.labels], Path(args.out).parent


def cmd_predict(args):
    model = load_model(args.model)
    ids, x = storage.load_matrix(args.features)
    pred = predict(model, x)
    if args.out:
        storage.save_matrix(args.out, ids, pred,
                            ["rt1_pred", "rt2_pred", "rt3_pred", "rt4_pred"])
    else:
        for i, row in zip(ids, pred):
            print(i, " ".join(f"{v:.3f}" for v in row))
    return [args.model, args.features], Path(args.out).parent if args.out else None


def cmd_importance(args):
    model = load_model(args.model)
    layout = FeatureLayout.from_json(Path(args.layout).read_text())
    imp = feature_importance(model, layout)
    rows = sorted(imp.items(), key=lambda kv: -kv[1])
    lines = [f"{f},{v:.6f}" for f, v in rows]
    if args.out:
        Path(args.out).write_text("feature,importance\n" + "\n".join(lines) + "\n")
    for line in lines:
        print(line)
    return [args.model, args.layout], Path(args.out).parent if args.out else None


def cmd_ablate(args):
    _, x = storage.load_matrix(args.features)
    _, y = storage.load_matrix(args.labels)
    layout = FeatureLayout.from_json(Path(args.layout).read_text())
    maes = leave_one_out_study(x, y, layout, _train_config(args))
    lines = ["feature,mae"] + [f"{f},{v:.6f}" for f, v in sorted(maes.items())]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    for line in lines[1:]:
        print(line)
    return [args.features, args.labels], Path(args.out).parent if args.out else None


def cmd_search(args):
    inst = storage.load_instance(args.instance)
    if inst.routes is None:
        inst.plan_routes()
    model = load_model(args.model)
    oracle = make_surrogate_oracle(model)
    cfg = SearchConfig(neighborhood_size=args.neighborhood, delta=args.delta,
                       epsilon=args.epsilon,
                       rerouting_interval=args.reroute_interval,
                       max_iterations=args.iterations)
    result = local_search(inst, oracle, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    storage.save_instance(inst, out / "start")
    storage.save_instance(result.instance, out / "solution")
    with open(out / "trace.csv", "w", newline="\n") as fh:
        fh.write("iter,accepted,est_rt1,est_rt2,est_rt3,est_rt4,utility,rerouted\n")
        for s in result.steps:
            fh.write(f"{s.iteration},{s.activity},"
                     + ",".join(f"{v:.4f}" for v in s.predicted)
                     + f",{s.utility},{int(s.rerouted)}\n")
    steps_dir = out / "steps"
    steps_dir.mkdir(exist_ok=True)
    for k, times in enumerate(result.accepted_times):
        storage._write_csv(steps_dir / f"step_{k:04d}.csv", ["event_id", "time"],
                           enumerate(times.tolist()))
    print(f"{len(result.steps)} accepted moves, estimated objective "
          f"{result.start_objective:.2f} -> {result.final_objective:.2f}, "
          f"{result.oracle_calls} oracle calls -> {out}")
    return [args.instance, args.model], out


def cmd_reevaluate(args):
    sdir = Path(args.search)
    inst = storage.load_instance(sdir / "start")
    if inst.routes is None:
        inst.plan_routes()
    cfg = _robustness_config(args)
    rows = [run_suite(inst, cfg).raw]
    for f in sorted((sdir / "steps").glob("step_*.csv")):
        times = np.zeros(inst.aean.n_events, dtype=np.int64)
        for r in storage._read_csv(f):
            times[int(r["event_id"])] = int(r["time"])
        rows.append(run_suite(retime(inst, times), cfg).raw)
    out = Path(args.out)
    storage.save_matrix(out, [f"step{k}" for k in range(len(rows))],
                        np.vstack(rows), storage.ROBUSTNESS_COLUMNS)
    print(f"reevaluated start + {len(rows) - 1} steps -> {out}")
    return [str(sdir)], out.parent


# ------------------------------------------------------------------- parser

def build_parser() -> _Parser:
    p = _Parser(prog="transit-robust",
                description="Robustness evaluation, surrogate training and "
                            "slack-injection search for public transport "
                            "timetables.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        sp.add_argument("--threads", type=int, default=None)
        return sp

    sp = add("gen-dataset", cmd_gen_dataset, help="generate a grid or ring dataset")
    sp.add_argument("--kind", choices=["grid", "ring"], default="grid")
    sp.add_argument("--rows", type=int, default=8)
    sp.add_argument("--cols", type=int, default=10)
    sp.add_argument("--rings", type=int, default=3)
    sp.add_argument("--spokes", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("gen-corpus", cmd_gen_corpus, help="generate and label a corpus")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--variants", type=int, default=24)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--horizon", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--config")
    sp.add_argument("--out", required=True)

    sp = add("evaluate", cmd_evaluate, help="run the RT suite on instances")
    sp.add_argument("--instance", action="append", required=True)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("normalize", cmd_normalize, help="normalize raw robustness values")
    sp.add_argument("--raw", required=True)
    sp.add_argument("--out", required=True)

    sp = add("extract-features", cmd_extract_features,
             help="extract feature vectors from instances")
    sp.add_argument("--instance", action="append", required=True)
    sp.add_argument("--layout")
    sp.add_argument("--out", required=True)

    sp = add("train", cmd_train, help="train the surrogate network")
    sp.add_argument("--features", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--layout")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--width", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--config")
    sp.add_argument("--history")
    sp.add_argument("--out", required=True)

    sp = add("predict", cmd_predict, help="predict robustness from features")
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--out")

    sp = add("importance", cmd_importance, help="first-layer feature importance")
    sp.add_argument("--model", required=True)
    sp.add_argument("--layout", required=True)
    sp.add_argument("--out")

    sp = add("ablate", cmd_ablate, help="leave-one-feature-out study")
    sp.add_argument("--features", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--layout", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--config")
    sp.add_argument("--out")

    sp = add("search", cmd_search, help="surrogate-guided slack injection")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--iterations", type=int, default=100)
    sp.add_argument("--neighborhood", type=int, default=20)
    sp.add_argument("--delta", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=0.10)
    sp.add_argument("--reroute-interval", type=int, default=10)
    sp.add_argument("--out", required=True)

    sp = add("reevaluate", cmd_reevaluate,
             help="rescore a search trace with the true RT suite")
    sp.add_argument("--search", required=True)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE
    t0 = time.time()
    _ = _threads(args)
    try:
        inputs, manifest_dir = args.func(args)
    except (ValueError, TypeError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    if manifest_dir is not None:
        _write_manifest(Path(manifest_dir), args.subcommand, args, inputs, t0)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
