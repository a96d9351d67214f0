"""Command-line surface: ingest / synth / train / select / evaluate / ablate / serve.

Machine-readable JSON goes to stdout, logs to stderr. Exit codes: 0 success,
2 usage, 3 data error, 4 infeasible budget, 5 embedding-provider failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_config
from .domain import Budget, HardwareProfile, TaskProfile, method_index
from .embedding import PromptStyle
from .errors import DataError, InfeasibleError, MetaInfError, ProviderError
from .evaluation import (
    ABLATION_RANKS,
    ABLATION_STYLES,
    OracleSelector,
    fit_selectors,
    rank_csv,
    run_ablation,
    run_protocol,
    tradeoff_csv,
)
from .perfdb import RecordStore, tensor_to_dict
from .selectors import SELECTOR_KINDS, load_selector
from .synth import SynthSpec, SyntheticWorld, world_from_store

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_PROVIDER = 5

log = logging.getLogger("metainf")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _store_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", default="records.json", help="record store path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metainf")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logs on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest serialized records into a store")
    p.add_argument("path", help="records file (jsonl or csv)")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    _store_arg(p)

    p = sub.add_parser("synth", help="generate a calibrated synthetic store")
    p.add_argument("--seed", type=int, default=None, help="generator seed (default: spec default)")
    p.add_argument("--tasks", type=int, default=None, help="training task count (default: spec default)")
    p.add_argument("--noise", type=float, default=None, help="noise fraction (default: spec default)")
    p.add_argument("--out", required=True, help="store output path")
    p.add_argument("--truth-out", default=None, help="optional ground-truth tensor path")

    p = sub.add_parser("train", help="fit a selector and save it")
    _store_arg(p)
    p.add_argument("--selector", choices=SELECTOR_KINDS, default="metainf")
    p.add_argument("--style", choices=[s.value for s in PromptStyle], default="rich")
    p.add_argument("--rank", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="fitted model output path")

    p = sub.add_parser("select", help="pick a method for a new task under a budget")
    p.add_argument("--model-file", required=True)
    _store_arg(p)
    p.add_argument("--task-desc", required=True)
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--prompts", type=int, default=1)
    p.add_argument("--model", default="", help="serving model name")
    p.add_argument("--gpu-class", required=True)
    p.add_argument("--gpu-count", type=int, default=1)
    p.add_argument("--memory-gb", type=float, default=None)
    p.add_argument("--price", type=float, required=True, help="price per hour")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--task-id", default=None)

    p = sub.add_parser("evaluate", help="run the randomized selection protocol")
    _store_arg(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--selectors", default=",".join(SELECTOR_KINDS))
    p.add_argument("--style", choices=[s.value for s in PromptStyle], default="rich")
    p.add_argument("--rank", type=int, default=64)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--sample", choices=("unseen", "seen"), default="unseen")
    p.add_argument("--no-oracle", action="store_true", help="skip the oracle reference row")
    p.add_argument("--plots-dir", default=None, help="write rank/trade-off CSVs here")

    p = sub.add_parser("ablate", help="prompt-style x SVD-rank ablation grid")
    _store_arg(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--styles", default=",".join(s.value for s in ABLATION_STYLES))
    p.add_argument("--ranks", default=",".join(str(r) for r in ABLATION_RANKS))
    p.add_argument("--selectors", default=",".join(SELECTOR_KINDS))

    p = sub.add_parser("serve", help="run the HTTP selection service")
    p.add_argument("--config", default=None, help="TOML config path")

    return parser


def _load_store(path: str) -> RecordStore:
    if not Path(path).exists():
        raise DataError(f"store file not found: {path}")
    return RecordStore.load(path)


def _provider():
    # defaults plus METAINF_* environment overrides (notably EMBED_ENDPOINT)
    return load_config(None).provider


def _cmd_ingest(args) -> int:
    store = _load_store(args.store) if Path(args.store).exists() else RecordStore()
    with open(args.path, "r", encoding="utf-8") as fh:
        count = store.ingest(fh, format=args.format)
    store.save(args.store)
    _emit({"ingested": count, "store": args.store, "total_records": len(store)})
    return EXIT_OK


def _cmd_synth(args) -> int:
    overrides = {
        key: value
        for key, value in (
            ("seed", args.seed),
            ("n_train_tasks", args.tasks),
            ("noise_fraction", args.noise),
        )
        if value is not None
    }
    spec = SynthSpec(**overrides)
    world = SyntheticWorld(spec)
    store = world.training_store()
    store.save(args.out)
    out = {"store": args.out, "records": len(store), "tasks": len(store.tasks)}
    if args.truth_out:
        Path(args.truth_out).write_text(
            json.dumps(tensor_to_dict(world.truth_tensor()), sort_keys=True) + "\n"
        )
        out["truth"] = args.truth_out
    _emit(out)
    return EXIT_OK


def _cmd_train(args) -> int:
    store = _load_store(args.store)
    fitted = fit_selectors(
        store, kinds=[args.selector], style=args.style, rank=args.rank, seed=args.seed,
        provider=_provider(),
    )
    selector = fitted[args.selector]
    selector.save(args.out)
    _emit(
        {
            "selector": args.selector,
            "style": args.style,
            "rank": args.rank,
            "train_rows": len(store),
            "model_file": args.out,
        }
    )
    return EXIT_OK


def _cmd_select(args) -> int:
    from .selection import select_method

    selector = load_selector(args.model_file)
    store = _load_store(args.store) if Path(args.store).exists() else RecordStore()
    task = TaskProfile(
        id=args.task_id or "cli-task",
        description=args.task_desc,
        batch_size=args.batch,
        prompt_count=args.prompts,
        source_tag=args.model,
    )
    hardware = None
    for profile in store.hardware.values():
        if profile.gpu_class == args.gpu_class and profile.gpu_count == args.gpu_count:
            hardware = HardwareProfile(
                id=profile.id,
                gpu_class=profile.gpu_class,
                gpu_count=profile.gpu_count,
                memory_gb=args.memory_gb or profile.memory_gb,
                price_per_hour=args.price,
                description=profile.description,
            )
            break
    if hardware is None:
        hardware = HardwareProfile(
            id=f"{args.gpu_class}x{args.gpu_count}",
            gpu_class=args.gpu_class,
            gpu_count=args.gpu_count,
            memory_gb=args.memory_gb or 1.0,
            price_per_hour=args.price,
        )
    budget = Budget(args.budget) if args.budget is not None else None
    result = select_method(task, hardware, selector, budget)
    _emit(
        {
            "method": {
                "prefix_caching": result.method.prefix_caching,
                "chunked_prefill": result.method.chunked_prefill,
                "continuous_batching": result.method.continuous_batching,
            },
            "method_name": method_index(result.method),
            "predicted_runtime_s": result.predicted_runtime_s,
            "cost": result.cost.amount,
            "feasible_set_size": result.feasible_set_size,
            "ranking": [
                {"method": method_index(m), "predicted_runtime_s": r} for m, r in result.ranking
            ],
        }
    )
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    store = _load_store(args.store)
    world = world_from_store(store)
    kinds = [k.strip() for k in args.selectors.split(",") if k.strip()]
    selectors = dict(
        fit_selectors(
            store, kinds=kinds, style=args.style, rank=args.rank, seed=args.seed,
            provider=_provider(),
        )
    )
    if not args.no_oracle:
        selectors["oracle"] = OracleSelector(world)
    budget = Budget(args.budget) if args.budget is not None else None
    result = run_protocol(
        world, selectors, trials=args.trials, seed=args.seed, budget=budget, sample=args.sample
    )
    if args.plots_dir:
        plots = Path(args.plots_dir)
        plots.mkdir(parents=True, exist_ok=True)
        (plots / "rank.csv").write_text(rank_csv(result.report))
        (plots / "tradeoff.csv").write_text(tradeoff_csv(result.report))
    _emit(result.report)
    return EXIT_OK


def _cmd_ablate(args) -> int:
    store = _load_store(args.store)
    styles = [PromptStyle(s.strip()) for s in args.styles.split(",") if s.strip()]
    ranks = [int(r) for r in args.ranks.split(",") if r.strip()]
    kinds = [k.strip() for k in args.selectors.split(",") if k.strip()]
    report = run_ablation(
        store, styles=styles, ranks=ranks, trials=args.trials, seed=args.seed, kinds=kinds,
        provider=_provider(),
    )
    _emit(report)
    return EXIT_OK


def _cmd_serve(args) -> int:  # pragma: no cover - long-running
    from .service import serve

    serve(load_config(args.config))
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "select": _cmd_select,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "serve": _cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except InfeasibleError as exc:
        _emit({"error": str(exc), "cheapest_cost": exc.cheapest_cost})
        return EXIT_INFEASIBLE
    except ProviderError as exc:
        _emit({"error": str(exc), "status": exc.status})
        return EXIT_PROVIDER
    except DataError as exc:
        _emit({"error": str(exc)})
        return EXIT_DATA
    except ValueError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except MetaInfError as exc:
        _emit({"error": str(exc)})
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
