"""Command-line entry point and experiment orchestration.

Commands: probe (sense-tagged target ranking), baseline (random ranker),
rerank (neighbor reranking), sweep (n/s grid), report (re-render or dump
qualitative examples), cache (inspect/verify an encoding cache).

Every stochastic step draws from streams derived from the single run seed,
so (inputs, config, seed) fully determine every output byte, at any worker
count. Progress and warnings go to stderr; data only to files and stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import lexicon as lexicon_mod
from . import probe as probe_mod
from . import rerank as rerank_mod
from .backends import EncodingCache, cache_key, create_backend, response_to_encoding
from .embedding import Backend, Memoizer, ShapeGuard, encode
from .errors import ConfigError, LexprobeError, ValidationError
from .evaluation import (
    EvalReport,
    ReportCell,
    ReportTable,
    SIGNIFICANCE_LEVEL,
    emit_report,
    gold_words,
    p_at_k,
    wilcoxon_paired,
)
from .lexicon import ALL_RELATIONS, CapConfig, TargetSet

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    command: str = ""
    backend: str = "mock"
    layers: str = "all"
    strategy: str = "uniform"
    fusion: str = "average"
    n: int = 15
    s: int = 10
    n_sent: int = 100
    min_len: int = 10
    max_len: int = 90
    seed: int = 0
    runs: int = 100
    cap_per_relation: int = 10
    cap_wordnet: int = 30
    cap_total: int = 40
    rrf_k: float = 60.0
    workers: int = 1
    n_grid: str = "5,10,15"
    s_grid: str = "5,10,15"
    ref_n: int = 10
    ref_s: int = 10
    lexicon: Optional[str] = None
    sentences: Optional[str] = None
    corpus: Optional[str] = None
    neighbors: Optional[str] = None
    gold: Optional[str] = None
    frequencies: Optional[str] = None
    cache: Optional[str] = None
    output: Optional[str] = None
    reference: Optional[str] = None

    def caps(self) -> CapConfig:
        return CapConfig(
            per_relation=self.cap_per_relation,
            wordnet_total=self.cap_wordnet,
            grand_total=self.cap_total,
        )

    def echo(self) -> dict:
        """Experiment-determining fields, echoed into reports.

        Runtime-only knobs (worker count, output/cache locations) are
        excluded so schedule changes cannot alter report bytes.
        """
        skip = {"workers", "output", "cache", "command"}
        echo = {}
        for field in dataclasses.fields(self):
            if field.name in skip:
                continue
            value = getattr(self, field.name)
            if value is not None:
                echo[field.name] = value
        return echo


# Fields that may appear in a config file, with their parsed types.
_CONFIG_TYPES = {
    field.name: field.type for field in dataclasses.fields(RunConfig)
}


def _parse_config_file(path: str) -> dict:
    """Read `key = value` lines; '#' starts a comment, blanks are skipped."""
    values: dict[str, object] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected `key = value`")
        name, _, value = line.partition("=")
        name = name.strip().replace("-", "_")
        value = value.strip()
        if name not in _CONFIG_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown option {name!r}")
        declared = _CONFIG_TYPES[name]
        try:
            if declared in (int, "int"):
                values[name] = int(value)
            elif declared in (float, "float"):
                values[name] = float(value)
            else:
                values[name] = value
        except ValueError as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {name}: {exc}") from exc
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexprobe",
        description="Probe contextual embeddings with lexical substitution and "
        "rerank distributional neighbors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value file supplying any flag")
        p.add_argument("--backend", help="mock | cache:PATH | remote:URL | subprocess:CMD")
        p.add_argument("--layers", help="'all', one index, or a comma list")
        p.add_argument("--seed", type=int, help="64-bit run seed")
        p.add_argument("--workers", type=int, help="parallel trial workers")
        p.add_argument("--cache", help="encoding cache file (write-through)")
        p.add_argument("--output", help="output directory")

    p_probe = sub.add_parser("probe", help="rank relation targets in sense-tagged sentences")
    add_common(p_probe)
    p_probe.add_argument("--lexicon")
    p_probe.add_argument("--sentences")
    p_probe.add_argument("--runs", type=int, help="random-baseline runs")
    for flag in ("cap-per-relation", "cap-wordnet", "cap-total"):
        p_probe.add_argument(f"--{flag}", type=int)

    p_base = sub.add_parser("baseline", help="random-ranker baseline only")
    add_common(p_base)
    p_base.add_argument("--lexicon")
    p_base.add_argument("--sentences")
    p_base.add_argument("--runs", type=int)
    for flag in ("cap-per-relation", "cap-wordnet", "cap-total"):
        p_base.add_argument(f"--{flag}", type=int)

    p_rerank = sub.add_parser("rerank", help="rerank static neighbors with a contextual model")
    add_common(p_rerank)
    p_rerank.add_argument("--neighbors")
    p_rerank.add_argument("--corpus")
    p_rerank.add_argument("--gold")
    p_rerank.add_argument("--frequencies")
    p_rerank.add_argument("--strategy", choices=[s.value for s in corpus_mod.SelectionStrategy])
    p_rerank.add_argument("--fusion", choices=[m.value for m in rerank_mod.FusionMethod])
    p_rerank.add_argument("--n", type=int, help="neighbors reranked per key")
    p_rerank.add_argument("--s", type=int, help="test sentences per word")
    p_rerank.add_argument("--n-sent", type=int, help="initial sentence pool size")
    p_rerank.add_argument("--min-len", type=int)
    p_rerank.add_argument("--max-len", type=int)
    p_rerank.add_argument("--rrf-k", type=float)
    p_rerank.add_argument("--reference", help="per-key scores of a reference run")
    p_rerank.add_argument(
        "--table2",
        action="store_true",
        help="replication preset: n=10, s=10, random selection, average fusion",
    )

    p_sweep = sub.add_parser("sweep", help="grid over neighbor and sentence counts")
    add_common(p_sweep)
    for flag in ("neighbors", "corpus", "gold", "frequencies"):
        p_sweep.add_argument(f"--{flag}")
    p_sweep.add_argument("--strategy", choices=[s.value for s in corpus_mod.SelectionStrategy])
    p_sweep.add_argument("--fusion", choices=[m.value for m in rerank_mod.FusionMethod])
    p_sweep.add_argument("--n-grid", help="comma list of n values")
    p_sweep.add_argument("--s-grid", help="comma list of s values")
    p_sweep.add_argument("--ref-n", type=int, help="reference cell n")
    p_sweep.add_argument("--ref-s", type=int, help="reference cell s")
    p_sweep.add_argument("--n-sent", type=int)
    p_sweep.add_argument("--min-len", type=int)
    p_sweep.add_argument("--max-len", type=int)
    p_sweep.add_argument("--rrf-k", type=float)

    p_report = sub.add_parser("report", help="re-render a saved report or dump examples")
    p_report.add_argument("--input", help="saved json report")
    p_report.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p_report.add_argument("--out", help="output file (stdout when omitted)")
    p_report.add_argument("--examples", action="store_true", help="qualitative reranking dump")
    p_report.add_argument("--records", help="rerank_records.jsonl from a rerank run")
    p_report.add_argument("--gold", help="gold file for relation annotations")
    p_report.add_argument("--limit", type=int, default=10)

    p_cache = sub.add_parser("cache", help="inspect or verify an encoding cache")
    p_cache.add_argument("action", choices=["inspect", "verify"])
    p_cache.add_argument("--cache", required=True)

    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    config = RunConfig()
    for field in dataclasses.fields(RunConfig):
        flag_value = getattr(args, field.name, None)
        if flag_value is not None:
            setattr(config, field.name, flag_value)
        elif field.name in file_values:
            setattr(config, field.name, file_values[field.name])
    config.command = args.command
    if getattr(args, "table2", False):
        # Explicit flags still win over the preset.
        if getattr(args, "n", None) is None and "n" not in file_values:
            config.n = 10
        if getattr(args, "s", None) is None and "s" not in file_values:
            config.s = 10
        if getattr(args, "strategy", None) is None and "strategy" not in file_values:
            config.strategy = "random"
        if getattr(args, "fusion", None) is None and "fusion" not in file_values:
            config.fusion = "average"
    return config


def _require_paths(config: RunConfig, names: Sequence[str]) -> None:
    for name in names:
        value = getattr(config, name)
        if value is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required")
        if not Path(value).exists():
            raise ConfigError(f"{name} file {value!r} does not exist")
    if config.output is None:
        raise ConfigError("--output is required")


def _make_backend(config: RunConfig) -> Backend:
    backend = create_backend(config.backend, cache_path=config.cache)
    return Memoizer(ShapeGuard(backend))


def _resolve_layers(config: RunConfig, probe_encoding) -> tuple[list[int], int]:
    """Layer indices to evaluate, plus the backend's layer offset."""
    offset = probe_encoding.layer_offset
    if config.layers == "all":
        return list(range(probe_encoding.num_layers)), offset
    try:
        indices = [int(part) for part in config.layers.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --layers value {config.layers!r}") from exc
    for index in indices:
        if not 0 <= index < probe_encoding.num_layers:
            raise ConfigError(
                f"layer {index} out of range; backend has {probe_encoding.num_layers}"
            )
    return indices, offset


def _layer_label(index: int, offset: int) -> str:
    return f"L{index + offset}"


def _json_dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _run_jobs(jobs, worker, workers: int) -> list:
    """Map worker over jobs, returning results in submission order."""
    if workers <= 1:
        return [worker(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


# ----------------------------------------------------------------- probe


def _assemble_trial_base(config: RunConfig):
    """Shared setup of probe/baseline: sentences joined with target sets."""
    lexicon = lexicon_mod.load_lexicon(config.lexicon)
    sentences = corpus_mod.load_sense_tagged(config.sentences)
    caps = config.caps()
    target_sets: dict[tuple[str, Optional[str]], TargetSet | None] = {}
    rejected = 0
    pairs = []
    for sentence in sentences:
        group = (sentence.key, sentence.sense)
        if group not in target_sets:
            assembled = lexicon_mod.assemble_target_set(
                sentence.key, sentence.sense, lexicon, caps
            )
            if isinstance(assembled, lexicon_mod.TargetSetRejection):
                target_sets[group] = None
                rejected += 1
            else:
                target_sets[group] = assembled
        target_set = target_sets[group]
        if target_set is not None:
            pairs.append((sentence, target_set))
    counters = {
        "sentences_loaded": len(sentences),
        "sentences_kept": len(pairs),
        "key_senses_rejected": rejected,
        "lexicon_folded_words": lexicon.folded_words,
        "lexicon_skipped_multiword": lexicon.skipped_multiword,
    }
    return pairs, counters


def run_probe(config: RunConfig) -> EvalReport:
    _require_paths(config, ["lexicon", "sentences"])
    backend = _make_backend(config)
    pairs, counters = _assemble_trial_base(config)
    if not pairs:
        raise ValidationError("no sentence has a usable target set")
    first_encoding = encode(backend, pairs[0][0].tokens, pairs[0][0].id)
    layers, offset = _resolve_layers(config, first_encoding)

    jobs = [
        (sentence, target_set, layer)
        for sentence, target_set in pairs
        for layer in layers
    ]

    def worker(job):
        sentence, target_set, layer = job
        trial = probe_mod.Trial(
            sentence=sentence, key=sentence.key, target_set=target_set, layer=layer
        )
        return probe_mod.rank_targets(trial, backend)

    rankings = _run_jobs(jobs, worker, config.workers)

    trial_lines = []
    for ranked in rankings:
        top_word, top_relation, top_score = ranked.top
        trial_lines.append(
            _json_dumps(
                {
                    "sentence_id": ranked.trial.sentence.id,
                    "key": ranked.trial.key,
                    "sense": ranked.trial.sentence.sense,
                    "layer": ranked.trial.layer + offset,
                    "top_target": top_word,
                    "top_relation": top_relation.value,
                    "top_score": top_score,
                }
            )
        )

    by_layer: dict[int, list] = {layer: [] for layer in layers}
    for ranked in rankings:
        by_layer[ranked.trial.layer].append(ranked)

    baseline_trials = [
        probe_mod.Trial(sentence=s, key=s.key, target_set=t, layer=layers[0])
        for s, t in pairs
    ]
    baseline = probe_mod.random_baseline(baseline_trials, runs=config.runs, seed=config.seed)

    columns = ["random"] + [_layer_label(layer, offset) for layer in layers]
    rows = []
    for relation in ALL_RELATIONS:
        cells = [ReportCell(value=baseline[relation], denom=len(pairs))]
        for layer in layers:
            proportions = probe_mod.p_at_1_by_relation(by_layer[layer])
            cells.append(ReportCell(value=proportions[relation], denom=len(by_layer[layer])))
        rows.append((relation.value, cells))

    distinct_sets = {(t.key, t.sense): t for _, t in pairs}
    count_rows = []
    for relation in ALL_RELATIONS:
        average = sum(
            t.relation_counts()[relation] for t in distinct_sets.values()
        ) / len(distinct_sets)
        count_rows.append((relation.value, [ReportCell(value=average)]))

    counters["trials"] = len(rankings)
    report = EvalReport(
        config=config.echo(),
        tables=[
            ReportTable(
                title="target ranking P@1 by relation",
                columns=columns,
                rows=rows,
            ),
            ReportTable(
                title="average targets per relation",
                columns=["avg_targets"],
                rows=count_rows,
                percent=False,
            ),
        ],
        counters=counters,
    )

    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lines(out_dir / "trials.jsonl", trial_lines)
    emit_report(report, "tsv", out_dir / "probe_report.tsv")
    emit_report(report, "json", out_dir / "probe_report.json")
    return report


def run_baseline(config: RunConfig) -> EvalReport:
    _require_paths(config, ["lexicon", "sentences"])
    pairs, counters = _assemble_trial_base(config)
    if not pairs:
        raise ValidationError("no sentence has a usable target set")
    trials = [
        probe_mod.Trial(sentence=s, key=s.key, target_set=t, layer=0)
        for s, t in pairs
    ]
    baseline = probe_mod.random_baseline(trials, runs=config.runs, seed=config.seed)
    rows = [
        (relation.value, [ReportCell(value=baseline[relation], denom=len(trials))])
        for relation in ALL_RELATIONS
    ]
    report = EvalReport(
        config=config.echo(),
        tables=[ReportTable(title="random baseline P@1", columns=["random"], rows=rows)],
        counters=counters,
    )
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_report(report, "tsv", out_dir / "baseline_report.tsv")
    emit_report(report, "json", out_dir / "baseline_report.json")
    return report


# ----------------------------------------------------------------- rerank


class RerankRunner:
    """Shared pools, selections, and backend across rerank cells."""

    def __init__(self, config: RunConfig, backend: Backend):
        self.config = config
        self.backend = backend
        self.strategy = corpus_mod.SelectionStrategy(config.strategy)
        self._pools: dict[str, list[corpus_mod.TestSentence]] = {}
        self._selections: dict[tuple[str, int, int], list[corpus_mod.TestSentence]] = {}

    def pool(self, word: str) -> list[corpus_mod.TestSentence]:
        if word not in self._pools:
            self._pools[word] = corpus_mod.sample_raw_sentences(
                self.config.corpus,
                word,
                self.config.n_sent,
                min_len=self.config.min_len,
                max_len=self.config.max_len,
                seed=self.config.seed,
            )
        return self._pools[word]

    def sentences(self, word: str, layer: int, s: int) -> list[corpus_mod.TestSentence]:
        cache_id = (word, layer, s)
        if cache_id not in self._selections:
            self._selections[cache_id] = corpus_mod.select_test_sentences(
                self.pool(word),
                word,
                s,
                self.strategy,
                self.backend,
                layer,
                seed=self.config.seed,
            )
        return self._selections[cache_id]

    def rerank_key(
        self,
        key: str,
        neighbor_list: lexicon_mod.NeighborList,
        layer: int,
        n: int,
        s: int,
        fusion: rerank_mod.FusionMethod,
    ) -> tuple[list[str], rerank_mod.RerankResult] | None:
        """Full reranked list for one key, or None when it has no context."""
        key_sentences = self.sentences(key, layer, s)
        if not key_sentences:
            return None
        head_words = neighbor_list.words()[:n]
        head = lexicon_mod.NeighborList(
            key=key,
            neighbors=tuple(
                (word, score) for word, score in neighbor_list.neighbors[:n]
            ),
        )
        if fusion in rerank_mod.EARLY_METHODS:
            neighbor_sentences = {
                word: self.sentences(word, layer, s) for word in head_words
            }
            result = rerank_mod.rerank_early(
                key, head, key_sentences, neighbor_sentences, self.backend, layer, fusion
            )
        else:
            result = rerank_mod.rerank_late(
                key,
                head,
                key_sentences,
                self.backend,
                layer,
                fusion,
                rrf_k=self.config.rrf_k,
            )
        tail = list(neighbor_list.words()[n:])
        return list(result.words()) + tail, result


def _score_rankings(
    rankings: dict[str, list[str]], gold: eval_mod.GoldSet
) -> dict[str, dict[str, float]]:
    """Per-key P@1/2/5 against the merged gold words (gold keys only)."""
    scores: dict[str, dict[str, float]] = {}
    for key, ranked in rankings.items():
        if key not in gold:
            continue
        merged = gold_words(gold, key)
        scores[key] = {
            "p1": p_at_k(ranked, merged, 1),
            "p2": p_at_k(ranked, merged, 2),
            "p5": p_at_k(ranked, merged, 5),
        }
    return scores


def _mean_cells(
    scores: dict[str, dict[str, float]],
    keys: Sequence[str],
    daggers: Optional[dict[str, bool]] = None,
) -> list[ReportCell]:
    cells = []
    for metric in ("p1", "p2", "p5"):
        if keys:
            value = sum(scores[key][metric] for key in keys) / len(keys)
        else:
            value = 0.0
        dagger = daggers.get(metric) if daggers else None
        cells.append(ReportCell(value=value, denom=len(keys), dagger=dagger))
    return cells


def _wilcoxon_daggers(
    a: dict[str, dict[str, float]], b: dict[str, dict[str, float]]
) -> dict[str, bool]:
    """Dagger per metric: True when the paired difference is non-significant."""
    shared = sorted(set(a) & set(b))
    daggers = {}
    for metric in ("p1", "p2", "p5"):
        if not shared:
            daggers[metric] = True
            continue
        p = wilcoxon_paired(
            [a[key][metric] for key in shared], [b[key][metric] for key in shared]
        )
        daggers[metric] = p > SIGNIFICANCE_LEVEL
    return daggers


def _rerank_once(
    config: RunConfig,
    runner: RerankRunner,
    neighbor_lists: dict[str, lexicon_mod.NeighborList],
    layers: list[int],
    n: int,
    s: int,
    fusion: rerank_mod.FusionMethod,
    counters: dict[str, int],
):
    """Rerank every key at every layer; returns rankings and records."""
    keys = sorted(neighbor_lists)
    rankings: dict[int, dict[str, list[str]]] = {layer: {} for layer in layers}
    records: list[str] = []

    def worker(key: str):
        neighbor_list = neighbor_lists[key]
        out = []
        for layer in layers:
            out.append((layer, runner.rerank_key(key, neighbor_list, layer, n, s, fusion)))
        return key, out

    results = _run_jobs(keys, worker, config.workers)
    for key, per_layer in results:
        neighbor_list = neighbor_lists[key]
        if len(neighbor_list.neighbors) < n:
            counters["keys_with_short_neighbor_list"] = (
                counters.get("keys_with_short_neighbor_list", 0) + 1
            )
        for layer, outcome in per_layer:
            if outcome is None:
                # an empty pool empties every layer; count the key once
                if layer == layers[0]:
                    counters["keys_without_context"] = (
                        counters.get("keys_without_context", 0) + 1
                    )
                continue
            full, result = outcome
            rankings[layer][key] = full
            counters["neighbors_unscored"] = counters.get(
                "neighbors_unscored", 0
            ) + len(result.unscored)
            records.append(
                _json_dumps(
                    {
                        "key": key,
                        "method": fusion.value,
                        "layer": layer,
                        "reranked": full,
                        "initial": list(neighbor_list.words()),
                    }
                )
            )
    return rankings, records


def run_rerank(config: RunConfig) -> EvalReport:
    _require_paths(config, ["neighbors", "corpus", "gold"])
    if config.frequencies is not None and not Path(config.frequencies).exists():
        raise ConfigError(f"frequencies file {config.frequencies!r} does not exist")
    if config.reference is not None and not Path(config.reference).exists():
        raise ConfigError(f"reference file {config.reference!r} does not exist")
    if config.n < 1 or config.s < 1:
        raise ConfigError("--n and --s must be >= 1")

    backend = _make_backend(config)
    neighbor_lists = lexicon_mod.load_neighbors(config.neighbors)
    if not neighbor_lists:
        raise ValidationError("neighbor file is empty")
    gold = eval_mod.load_gold(config.gold)
    frequencies = (
        eval_mod.load_frequencies(config.frequencies) if config.frequencies else None
    )
    fusion = rerank_mod.FusionMethod(config.fusion)
    runner = RerankRunner(config, backend)

    first_pool = next(
        (runner.pool(key) for key in sorted(neighbor_lists) if runner.pool(key)), None
    )
    if first_pool is None:
        raise ValidationError("no key has any eligible corpus sentence")
    probe_encoding = encode(backend, first_pool[0].tokens, first_pool[0].id)
    layers, offset = _resolve_layers(config, probe_encoding)

    counters: dict[str, int] = {"keys_total": len(neighbor_lists)}
    rankings, records = _rerank_once(
        config, runner, neighbor_lists, layers, config.n, config.s, fusion, counters
    )

    initial_rankings = {
        key: list(neighbor_lists[key].words()) for key in sorted(neighbor_lists)
    }
    initial_scores = _score_rankings(initial_rankings, gold)
    layer_scores = {
        layer: _score_rankings(rankings[layer], gold) for layer in layers
    }
    counters["keys_not_in_gold"] = len(
        [key for key in neighbor_lists if key not in gold]
    )

    reference_scores = None
    if config.reference:
        reference_scores = json.loads(Path(config.reference).read_text(encoding="utf-8"))[
            "scores"
        ]

    relation_columns = ["initial"] + [_layer_label(layer, offset) for layer in layers]
    relation_rows = []
    initial_by_rel, _ = eval_mod.p_at_1_by_relation_type(
        sorted(initial_rankings.items()), gold
    )
    per_layer_by_rel = {}
    for layer in layers:
        per_layer_by_rel[layer], _ = eval_mod.p_at_1_by_relation_type(
            sorted(rankings[layer].items()), gold
        )
    for relation in lexicon_mod.WORDNET_RELATIONS:
        cells = [ReportCell(value=initial_by_rel[relation], denom=len(initial_scores))]
        for layer in layers:
            cells.append(
                ReportCell(
                    value=per_layer_by_rel[layer][relation],
                    denom=len(layer_scores[layer]),
                )
            )
        relation_rows.append((relation.value, cells))

    overall_rows = [("initial", _mean_cells(initial_scores, sorted(initial_scores)))]
    for layer in layers:
        scores = layer_scores[layer]
        if reference_scores is not None:
            daggers = _wilcoxon_daggers(scores, reference_scores)
        else:
            daggers = _wilcoxon_daggers(scores, initial_scores)
        overall_rows.append(
            (
                f"reranked_{_layer_label(layer, offset)}",
                _mean_cells(scores, sorted(scores), daggers),
            )
        )

    tables = [
        ReportTable(
            title="P@1 by relation of the top-ranked neighbor",
            columns=relation_columns,
            rows=relation_rows,
        ),
        ReportTable(
            title="P@k against merged gold neighbors",
            columns=["P@1", "P@2", "P@5"],
            rows=overall_rows,
        ),
    ]

    if frequencies is not None:
        evaluated = sorted(initial_scores)
        high, low = eval_mod.frequency_split(evaluated, frequencies)
        split_rows = [
            ("initial_high", _mean_cells(initial_scores, sorted(high))),
            ("initial_low", _mean_cells(initial_scores, sorted(low))),
        ]
        for layer in layers:
            scores = layer_scores[layer]
            label = _layer_label(layer, offset)
            split_rows.append(
                (
                    f"reranked_high_{label}",
                    _mean_cells(scores, sorted(high & set(scores))),
                )
            )
            split_rows.append(
                (
                    f"reranked_low_{label}",
                    _mean_cells(scores, sorted(low & set(scores))),
                )
            )
        tables.append(
            ReportTable(
                title="P@k by key-frequency slice",
                columns=["P@1", "P@2", "P@5"],
                rows=split_rows,
            )
        )

    report = EvalReport(config=config.echo(), tables=tables, counters=counters)

    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lines(out_dir / "rerank_records.jsonl", records)
    scores_payload = {
        "scores": layer_scores[layers[0]],
        "by_layer": {
            _layer_label(layer, offset): layer_scores[layer] for layer in layers
        },
        "initial": initial_scores,
    }
    (out_dir / "per_key_scores.json").write_text(
        json.dumps(scores_payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    emit_report(report, "tsv", out_dir / "rerank_report.tsv")
    emit_report(report, "json", out_dir / "rerank_report.json")
    return report


def run_sweep(config: RunConfig) -> EvalReport:
    _require_paths(config, ["neighbors", "corpus", "gold"])
    try:
        n_values = [int(v) for v in config.n_grid.split(",")]
        s_values = [int(v) for v in config.s_grid.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad grid value: {exc}") from exc

    backend = _make_backend(config)
    neighbor_lists = lexicon_mod.load_neighbors(config.neighbors)
    if not neighbor_lists:
        raise ValidationError("neighbor file is empty")
    gold = eval_mod.load_gold(config.gold)
    fusion = rerank_mod.FusionMethod(config.fusion)
    runner = RerankRunner(config, backend)

    first_pool = next(
        (runner.pool(key) for key in sorted(neighbor_lists) if runner.pool(key)), None
    )
    if first_pool is None:
        raise ValidationError("no key has any eligible corpus sentence")
    probe_encoding = encode(backend, first_pool[0].tokens, first_pool[0].id)
    layers, offset = _resolve_layers(config, probe_encoding)
    if len(layers) != 1:
        raise ConfigError("sweep runs on exactly one layer; pass --layers INDEX")
    layer = layers[0]

    cells = [(n, s) for n in n_values for s in s_values]
    reference_cell = (config.ref_n, config.ref_s)
    all_cells = list(cells)
    if reference_cell not in all_cells:
        all_cells.append(reference_cell)

    counters: dict[str, int] = {"keys_total": len(neighbor_lists)}
    cell_scores: dict[tuple[int, int], dict[str, dict[str, float]]] = {}
    for n, s in all_cells:
        rankings, _ = _rerank_once(
            config, runner, neighbor_lists, [layer], n, s, fusion, counters
        )
        cell_scores[(n, s)] = _score_rankings(rankings[layer], gold)

    rows = []
    for n, s in cells:
        scores = cell_scores[(n, s)]
        if (n, s) == reference_cell:
            daggers = None
        else:
            daggers = _wilcoxon_daggers(scores, cell_scores[reference_cell])
        label = f"n={n}, s={s}"
        if (n, s) == reference_cell:
            label += " (reference)"
        rows.append((label, _mean_cells(scores, sorted(scores), daggers)))

    report = EvalReport(
        config=config.echo(),
        tables=[
            ReportTable(
                title=f"P@k over the (n, s) grid at {_layer_label(layer, offset)}",
                columns=["P@1", "P@2", "P@5"],
                rows=rows,
            )
        ],
        counters=counters,
    )
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_report(report, "tsv", out_dir / "sweep_report.tsv")
    emit_report(report, "json", out_dir / "sweep_report.json")
    return report


# ----------------------------------------------------------------- report


def _load_report_json(path: str) -> EvalReport:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    tables = []
    for table in payload.get("tables", []):
        rows = [
            (
                row["label"],
                [
                    ReportCell(
                        value=cell.get("value"),
                        denom=cell.get("denom"),
                        dagger=cell.get("dagger"),
                    )
                    for cell in row["cells"]
                ],
            )
            for row in table.get("rows", [])
        ]
        tables.append(
            ReportTable(
                title=table["title"],
                columns=table["columns"],
                rows=rows,
                percent=table.get("percent", True),
            )
        )
    return EvalReport(
        config=payload.get("config", {}),
        tables=tables,
        counters=payload.get("counters", {}),
    )


def _annotate(word: str, key: str, gold: eval_mod.GoldSet) -> str:
    by_rel = gold.get(key)
    if by_rel:
        for relation in lexicon_mod.WORDNET_RELATIONS:
            if word in by_rel[relation]:
                return f"{word}[{relation.value}]"
    return word


def run_report(args: argparse.Namespace) -> str:
    if args.examples:
        if not args.records or not args.gold:
            raise ConfigError("--examples needs --records and --gold")
        gold = eval_mod.load_gold(args.gold)
        lines = ["key\tinitial\treranked"]
        count = 0
        with Path(args.records).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key = record["key"]
                initial = ", ".join(_annotate(w, key, gold) for w in record["initial"])
                reranked = ", ".join(_annotate(w, key, gold) for w in record["reranked"])
                lines.append(f"{key}\t{initial}\t{reranked}")
                count += 1
                if count >= args.limit:
                    break
        return "\n".join(lines) + "\n"
    if not args.input:
        raise ConfigError("report needs --input or --examples")
    if not Path(args.input).exists():
        raise ConfigError(f"input file {args.input!r} does not exist")
    report = _load_report_json(args.input)
    return eval_mod.render_report(report, args.format)


def run_cache(args: argparse.Namespace) -> tuple[str, int]:
    if not Path(args.cache).exists():
        raise ConfigError(f"cache file {args.cache!r} does not exist")
    cache = EncodingCache(args.cache)
    records = list(cache._records.values())
    summary = {
        "records": len(records),
        "models": sorted(cache.models),
        "num_layers": sorted({r.get("num_layers") for r in records}),
        "dims": sorted({r.get("dim") for r in records}),
    }
    if args.action == "inspect":
        return _json_dumps(summary) + "\n", EXIT_OK
    bad: list[str] = []
    for record in records:
        try:
            response_to_encoding(record, record.get("id", ""))
        except LexprobeError as exc:
            bad.append(f"{record.get('key')}: {exc}")
            continue
        tokens = record.get("tokens")
        if tokens is not None:
            expected = cache_key(str(record.get("model", "")), [str(t) for t in tokens])
            if expected != record.get("key"):
                bad.append(f"{record.get('key')}: content hash should be {expected}")
    summary["invalid"] = bad
    status = EXIT_OK if not bad else EXIT_RUNTIME
    return _json_dumps(summary) + "\n", status


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            text = run_report(args)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "cache":
            text, status = run_cache(args)
            sys.stdout.write(text)
            return status
        config = _merge_config(args)
        if args.command == "probe":
            run_probe(config)
        elif args.command == "baseline":
            run_baseline(config)
        elif args.command == "rerank":
            run_rerank(config)
        elif args.command == "sweep":
            run_sweep(config)
        else:
            raise ConfigError(f"unknown command {args.command!r}")
        return EXIT_OK
    except ConfigError as exc:
        sys.stderr.write(_json_dumps({"error": "config", "detail": str(exc)}) + "\n")
        return EXIT_CONFIG
    except LexprobeError as exc:
        sys.stderr.write(_json_dumps({"error": "runtime", "detail": str(exc)}) + "\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
