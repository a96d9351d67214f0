"""Metrics, the randomized trial protocol, and the ablation harness.

The protocol samples (task, hardware) contexts with a seeded generator,
asks each fitted selector for a selection (unlimited budget by default),
and scores it against the noiseless ground truth of the synthetic world:
selection accuracy, macro F1, acceleration ratio (mean runtime over all
methods divided by the selected method's runtime; larger is better), and
the mean 1-based rank of the true best method in the predicted ranking.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import (
    Budget,
    HardwareProfile,
    MethodConfig,
    TaskProfile,
    method_from_index,
    method_index,
)
from .embedding import Embedder, EmbeddingProviderSpec, PromptStyle
from .errors import DataError, MetaInfError
from .gbm import GbmHyperparams
from .perfdb import RecordStore
from .selection import select_method
from .selectors import SELECTOR_KINDS, FittedSelector, SelectorSpec, fit
from .synth import SynthTask, SyntheticWorld, world_from_store

DEFAULT_TRIALS = 1000
ABLATION_STYLES = (PromptStyle.ONE_HOT, PromptStyle.BASIC, PromptStyle.RICH, PromptStyle.COT)
ABLATION_RANKS = (64, 256)

ONE_HOT_NOTE = (
    "one_hot arm evaluated on seen training tasks only: indicator encodings "
    "cannot embed unseen task ids"
)


@dataclass
class TrialOutcome:
    task_id: str
    hardware_id: str
    selected: MethodConfig
    true_best: MethodConfig
    predicted_ranking: list[tuple[MethodConfig, float]]
    true_runtimes: dict[int, float]
    selected_runtime_s: float
    mean_runtime_s: float

    def __post_init__(self) -> None:
        best = min(self.true_runtimes.items(), key=lambda kv: (kv[1], kv[0]))[0]
        if best != method_index(self.true_best):
            raise DataError("true_best is not the argmin of true_runtimes")


def selection_accuracy(outcomes: Sequence[TrialOutcome]) -> float:
    if not outcomes:
        raise DataError("no outcomes to score")
    hits = sum(1 for o in outcomes if o.selected == o.true_best)
    return hits / len(outcomes)


def macro_f1(outcomes: Sequence[TrialOutcome], average: str = "macro") -> float:
    """Mean F1 over method classes observed in truth or predictions.

    average="macro" (default) weights classes equally; "weighted" weights by
    class frequency in the true labels.
    """
    if not outcomes:
        raise DataError("no outcomes to score")
    if average not in ("macro", "weighted"):
        raise ValueError(f"unknown averaging mode: {average!r}")
    true = [method_index(o.true_best) for o in outcomes]
    pred = [method_index(o.selected) for o in outcomes]
    classes = sorted(set(true) | set(pred))
    scores = []
    weights = []
    for c in classes:
        tp = sum(1 for t, p in zip(true, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(true, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(true, pred) if t == c and p != c)
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
        weights.append(sum(1 for t in true if t == c))
    if average == "weighted":
        return float(np.average(scores, weights=weights)) if sum(weights) else 0.0
    return float(np.mean(scores))


def acceleration_ratio(outcomes: Sequence[TrialOutcome]) -> float:
    if not outcomes:
        raise DataError("no outcomes to score")
    ratios = []
    for o in outcomes:
        if o.selected_runtime_s <= 0:
            raise DataError("selected runtime must be positive")
        ratios.append(o.mean_runtime_s / o.selected_runtime_s)
    return float(np.mean(ratios))


def mean_rank(outcomes: Sequence[TrialOutcome]) -> float:
    if not outcomes:
        raise DataError("no outcomes to score")
    ranks = []
    for o in outcomes:
        pos = next(
            (i for i, (m, _) in enumerate(o.predicted_ranking) if m == o.true_best), None
        )
        if pos is None:
            raise DataError(f"true best method missing from ranking for task {o.task_id}")
        ranks.append(pos + 1)
    return float(np.mean(ranks))


class OracleSelector(FittedSelector):
    """Scores equal the ground-truth runtimes of the synthetic world."""

    kind = "oracle"

    def __init__(self, world: SyntheticWorld):
        from .domain import ALL_METHODS

        super().__init__(list(ALL_METHODS))
        self.world = world

    def rank_methods(self, task: TaskProfile, hardware: HardwareProfile):
        synth_task = task_from_profile(self.world, task)
        truth = self.world.true_runtimes(synth_task, hardware)
        pairs = [(m, truth[method_index(m)]) for m in self.methods]
        return sorted(pairs, key=lambda p: (p[1], method_index(p[0])))

    def state_dict(self) -> dict:  # pragma: no cover - oracle is never persisted
        raise NotImplementedError("the oracle is evaluation-only")


def task_from_profile(world: SyntheticWorld, profile: TaskProfile) -> SynthTask:
    """Recover the hidden generator parameters of a world-generated task."""
    for family in world.spec.families:
        if profile.description.startswith(family.blurb):
            for corpus, cf in world.spec.corpora:
                if profile.source_tag == corpus:
                    return SynthTask(
                        profile=profile, family=family.name, corpus=corpus, corpus_factor=cf
                    )
    raise DataError(f"task {profile.id!r} was not generated by this world")


@dataclass
class ProtocolResult:
    report: dict
    outcomes: dict[str, list[TrialOutcome]]
    failures: dict[str, list[str]] = field(default_factory=dict)


def sample_contexts(
    world: SyntheticWorld, trials: int, seed: int, sample: str = "unseen"
) -> list[tuple[SynthTask, HardwareProfile]]:
    """Shared seeded (task, hardware) draw; 'seen' samples training tasks."""
    if trials < 1:
        raise DataError("trials must be >= 1")
    if sample not in ("unseen", "seen"):
        raise ValueError(f"unknown sample mode: {sample!r}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xE7A1)))
    contexts = []
    train = world.training_tasks() if sample == "seen" else None
    for i in range(trials):
        if train is None:
            task = world.sample_task(rng, f"eval-{i:05d}")
        else:
            task = train[int(rng.integers(len(train)))]
        hw = world.sample_hardware(rng)
        contexts.append((task, hw))
    return contexts


def evaluate_selectors(
    world: SyntheticWorld,
    selectors: dict[str, FittedSelector],
    contexts: Sequence[tuple[SynthTask, HardwareProfile]],
    budget: Optional[Budget] = None,
) -> ProtocolResult:
    outcomes: dict[str, list[TrialOutcome]] = {name: [] for name in selectors}
    failures: dict[str, list[str]] = {name: [] for name in selectors}
    truths = []
    for synth_task, hw in contexts:
        truth = world.true_runtimes(synth_task, hw)
        best_idx = min(truth.items(), key=lambda kv: (kv[1], kv[0]))[0]
        mean_rt = float(np.mean(list(truth.values())))
        truths.append((truth, best_idx, mean_rt))

    for name, selector in selectors.items():
        for (synth_task, hw), (truth, best_idx, mean_rt) in zip(contexts, truths):
            try:
                result = select_method(synth_task.profile, hw, selector, budget)
            except MetaInfError as exc:
                failures[name].append(f"{synth_task.profile.id}@{hw.id}: {exc}")
                continue
            selected_idx = method_index(result.method)
            outcomes[name].append(
                TrialOutcome(
                    task_id=synth_task.profile.id,
                    hardware_id=hw.id,
                    selected=result.method,
                    true_best=method_from_index(best_idx),
                    predicted_ranking=list(result.ranking),
                    true_runtimes=truth,
                    selected_runtime_s=truth[selected_idx],
                    mean_runtime_s=mean_rt,
                )
            )

    report: dict = {}
    for name in selectors:
        outs = outcomes[name]
        if outs:
            entry = {
                "accuracy": selection_accuracy(outs),
                "macro_f1": macro_f1(outs),
                "acceleration_ratio": acceleration_ratio(outs),
                "mean_rank": mean_rank(outs),
            }
        else:
            entry = {
                "accuracy": None,
                "macro_f1": None,
                "acceleration_ratio": None,
                "mean_rank": None,
            }
        entry["n_trials"] = len(outs)
        entry["failures"] = len(failures[name])
        report[name] = entry
    return ProtocolResult(report=report, outcomes=outcomes, failures=failures)


def run_protocol(
    world: SyntheticWorld,
    selectors: dict[str, FittedSelector],
    trials: int = DEFAULT_TRIALS,
    seed: int = 7,
    budget: Optional[Budget] = None,
    sample: str = "unseen",
) -> ProtocolResult:
    contexts = sample_contexts(world, trials, seed, sample)
    return evaluate_selectors(world, selectors, contexts, budget)


def fit_selectors(
    store: RecordStore,
    kinds: Sequence[str] = SELECTOR_KINDS,
    style: PromptStyle | str = PromptStyle.RICH,
    rank: int = 64,
    provider: Optional[EmbeddingProviderSpec] = None,
    gbm: Optional[GbmHyperparams] = None,
    seed: int = 0,
) -> dict[str, FittedSelector]:
    """Fit one embedder and every requested selector kind on a store."""
    from .selectors import _hw_for, _profile_for

    provider = provider or EmbeddingProviderSpec()
    tensor = store.assemble_tensor()
    tasks = store.tasks
    hardware = store.hardware
    embedder = Embedder(style=PromptStyle(style), provider=provider, rank=rank)
    # catalog-less stores (bare record ingestion) still fit: entities missing
    # a profile get the same minimal default the selectors train with
    embedder.fit(
        [_profile_for(t, tasks) for t in tensor.tasks],
        tensor.methods,
        [_hw_for(h, hardware) for h in tensor.hardware],
    )
    fitted: dict[str, FittedSelector] = {}
    for kind in kinds:
        spec = SelectorSpec(kind=kind, seed=seed, gbm=gbm or GbmHyperparams(seed=seed))
        fitted[kind] = fit(spec, tensor, embedder, tasks, hardware)
    return fitted


def run_ablation(
    store: RecordStore,
    styles: Sequence[PromptStyle | str] = ABLATION_STYLES,
    ranks: Sequence[int] = ABLATION_RANKS,
    trials: int = DEFAULT_TRIALS,
    seed: int = 7,
    kinds: Sequence[str] = SELECTOR_KINDS,
    provider: Optional[EmbeddingProviderSpec] = None,
    world: Optional[SyntheticWorld] = None,
) -> dict:
    """Full (style x rank x selector) grid on a single shared trial sample."""
    world = world or world_from_store(store)
    unseen = sample_contexts(world, trials, seed, "unseen")
    seen = sample_contexts(world, trials, seed, "seen")
    grid: dict = {}
    notes = []
    for style in styles:
        style = PromptStyle(style)
        contexts = seen if style is PromptStyle.ONE_HOT else unseen
        if style is PromptStyle.ONE_HOT and ONE_HOT_NOTE not in notes:
            notes.append(ONE_HOT_NOTE)
        per_rank: dict = {}
        for rank in ranks:
            selectors = fit_selectors(
                store, kinds=kinds, style=style, rank=rank, provider=provider, seed=seed
            )
            result = evaluate_selectors(world, selectors, contexts)
            per_rank[f"k{rank}"] = result.report
        grid[style.value] = per_rank
    return {"styles": grid, "notes": notes, "trials": trials, "seed": seed}


def rank_csv(report: dict) -> str:
    """Plot-ready mean-rank table, one selector per line."""
    buf = io.StringIO()
    buf.write("selector,mean_rank\n")
    for name in sorted(report):
        buf.write(f"{name},{report[name]['mean_rank']}\n")
    return buf.getvalue()


def tradeoff_csv(report: dict) -> str:
    """Plot-ready accuracy vs acceleration-ratio table."""
    buf = io.StringIO()
    buf.write("selector,accuracy,acceleration_ratio\n")
    for name in sorted(report):
        entry = report[name]
        buf.write(f"{name},{entry['accuracy']},{entry['acceleration_ratio']}\n")
    return buf.getvalue()
