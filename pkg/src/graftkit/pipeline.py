"""End-to-end orchestration with per-stage artifact caching.

Stages communicate exclusively through files in the output directory:

    scores.jsonl      per-document word potentials (graft / dcpmi runs)
    templates.jsonl   every masked template with its potential
    selected.jsonl    the top-N% templates, in rank order
    grafted.jsonl     validated fills (graft runs)
    mined.jsonl       mined raw texts (prompt-mine / dcpmi-mine)
    synthesized.jsonl direct generations (zerogen / icg / mf-icg)
    dataset/          train.jsonl, validation.jsonl, manifest.json
    run_manifest.json stage statuses, counts, skips/drops, config hash

Each stage is cached under a key of (stage name, relevant config subtree,
input-artifact hashes); a rerun with nothing changed reports every stage as
"cached" and leaves artifacts byte-identical.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import baselines, dataset, scoring, synthesis, templating
from .config import RunConfig, build_generation_backend, build_scoring_backend, load_config
from .corpus import Corpus, downsample, ingest
from .errors import BackendError, DataError, GraftkitError
from .util import (
    canonical_json,
    ceil_scale,
    file_sha256,
    read_jsonl,
    sha256_hex,
    write_json,
    write_jsonl,
)

logger = logging.getLogger(__name__)


@dataclass
class StageResult:
    name: str
    status: str  # "computed" | "cached"
    files: list[Path]


@dataclass
class RunReport:
    output_dir: Path
    stages: list[StageResult]
    manifest: dict


class _Run:
    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.out = config.output_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.stages: list[StageResult] = []
        self.notes: dict[str, Any] = {}
        self._corpus: Corpus | None = None

    # -- corpus ------------------------------------------------------------
    @property
    def corpus(self) -> Corpus:
        if self._corpus is None:
            cfg = self.config.raw["corpus"]
            corpus = ingest(cfg["path"], cfg["format"])
            if cfg["downsample"] is not None:
                corpus = downsample(corpus, int(cfg["downsample"]), int(cfg["downsample_seed"]))
            self._corpus = corpus
        return self._corpus

    def corpus_key(self) -> dict:
        cfg = self.config.raw["corpus"]
        return {
            "file": file_sha256(cfg["path"]),
            "format": cfg["format"],
            "downsample": cfg["downsample"],
            "downsample_seed": cfg["downsample_seed"],
        }

    # -- stage plumbing ------------------------------------------------------
    def stage(
        self,
        name: str,
        files: list[str],
        key_obj: dict,
        inputs: list[Path],
        produce: Callable[[], None],
    ) -> StageResult:
        paths = [self.out / f for f in files]
        stamp = self.out / f".{name}.stamp"
        key = sha256_hex(
            canonical_json(
                {
                    "stage": name,
                    "config": key_obj,
                    "inputs": [file_sha256(p) for p in inputs],
                }
            )
        )
        cached = (
            stamp.is_file()
            and stamp.read_text(encoding="utf-8").strip() == key
            and all(p.is_file() for p in paths)
        )
        if cached:
            status = "cached"
        else:
            try:
                produce()
            except GraftkitError as exc:
                raise type(exc)(f"stage {name}: {exc}") from exc
            stamp.write_text(key + "\n", encoding="utf-8")
            status = "computed"
        result = StageResult(name, status, paths)
        self.stages.append(result)
        logger.info("stage %-12s %s", name, status)
        return result

    # -- stages --------------------------------------------------------------
    def run_scores(self) -> Path:
        out = self.out / "scores.jsonl"
        cfg = self.config
        task_key = {"class_name": cfg.task.class_name, "style": cfg.task.style}
        key = {
            "corpus": self.corpus_key(),
            "task": task_key,
            "backend": cfg.raw["scoring_backend"],
        }

        def produce() -> None:
            backend = build_scoring_backend(cfg)
            scored, skipped = scoring.score_corpus(
                self.corpus, cfg.task, backend, cfg.raw["runtime"]["parallelism"]
            )
            if not scored:
                first = skipped[0].reason if skipped else "empty corpus"
                raise BackendError(
                    f"no documents scored ({len(skipped)} skipped; first reason: {first})"
                )
            rows: list[dict] = [scoring.scores_to_row(ds) for ds in scored]
            rows.extend({"doc_id": s.doc_id, "skipped": s.reason} for s in skipped)
            write_jsonl(out, rows)

        self.stage("scores", ["scores.jsonl"], key, [], produce)
        return out

    def load_scores(self, path: Path) -> tuple[list[scoring.DocumentScores], list[dict]]:
        scored, skipped = [], []
        for row in read_jsonl(path):
            if "skipped" in row:
                skipped.append({"doc_id": row["doc_id"], "reason": row["skipped"]})
            else:
                scored.append(scoring.scores_from_row(row))
        return scored, skipped

    def run_templates(self, scores_path: Path) -> Path:
        out = self.out / "templates.jsonl"
        cfg = self.config
        key = {
            "corpus": self.corpus_key(),
            "k_percent": cfg.task.k_percent,
            "mask_token": cfg.task.mask_token,
            "ablation": cfg.ablation if cfg.ablation == "random-masking" else None,
            "random_seed": cfg.raw["selection"]["random_seed"],
            "exempt_punctuation": cfg.raw["runtime"]["exempt_punctuation"],
        }

        def produce() -> None:
            scored, _ = self.load_scores(scores_path)
            docs = {doc.id: doc for doc in self.corpus.documents}
            exempt = cfg.raw["runtime"]["exempt_punctuation"]
            rows = []
            for ds in scored:
                doc = docs[ds.doc_id]
                if cfg.ablation == "random-masking":
                    template = templating.random_mask_template(
                        doc,
                        ds.potentials,
                        cfg.task,
                        int(cfg.raw["selection"]["random_seed"]),
                        exempt,
                    )
                else:
                    template = templating.create_template(doc, ds.potentials, cfg.task, exempt)
                rows.append(templating.template_to_row(template))
            write_jsonl(out, rows)

        self.stage("templates", ["templates.jsonl"], key, [scores_path], produce)
        return out

    def run_selection(self, templates_path: Path) -> Path:
        out = self.out / "selected.jsonl"
        cfg = self.config
        key = {
            "n_percent": cfg.task.n_percent,
            "template_count_cap": cfg.raw["selection"]["template_count_cap"],
            "ablation": cfg.ablation if cfg.ablation == "random-selection" else None,
            "random_seed": cfg.raw["selection"]["random_seed"],
        }

        def produce() -> None:
            templates = [templating.template_from_row(r) for r in read_jsonl(templates_path)]
            cap = cfg.raw["selection"]["template_count_cap"]
            if cfg.ablation == "random-selection":
                selected = templating.random_select(
                    templates,
                    cfg.task.n_percent,
                    int(cfg.raw["selection"]["random_seed"]),
                    cap,
                )
            else:
                selected = templating.rank_and_select(templates, cfg.task.n_percent, cap)
            write_jsonl(out, (templating.template_to_row(t) for t in selected))

        self.stage("selected", ["selected.jsonl"], key, [templates_path], produce)
        return out

    def run_grafting(self, selected_path: Path) -> Path:
        out = self.out / "grafted.jsonl"
        dropped_path = self.out / "grafted.dropped.json"
        cfg = self.config
        key = {
            "backend": cfg.raw["generation_backend"],
            "generation": cfg.raw["generation"],
            "task": {
                "class_name": cfg.task.class_name,
                "style": cfg.task.style,
                "mask_token": cfg.task.mask_token,
            },
        }

        def produce() -> None:
            templates = [templating.template_from_row(r) for r in read_jsonl(selected_path)]
            backend = build_generation_backend(cfg)
            grafted, dropped = synthesis.graft_run(
                templates, cfg.task, backend, cfg.policy, cfg.raw["runtime"]["parallelism"]
            )
            write_jsonl(out, (synthesis.grafted_to_row(g) for g in grafted))
            write_json(
                dropped_path,
                [{"origin_id": d.origin_id, "reason": d.reason} for d in dropped],
            )

        self.stage("grafted", ["grafted.jsonl", "grafted.dropped.json"], key, [selected_path], produce)
        return out

    def run_mining(self) -> Path:
        out = self.out / "mined.jsonl"
        cfg = self.config
        method = cfg.method
        if method == "dcpmi-mine":
            scores_path = self.run_scores()
            rate = float(cfg.raw["baselines"]["dcpmi_rate_percent"])
            key = {"rate_percent": rate, "method": "dcpmi"}

            def produce() -> None:
                scored, _ = self.load_scores(scores_path)
                mined = baselines.dcpmi_rank(scored, self.corpus, rate)
                write_jsonl(out, (baselines.mined_to_row(m) for m in mined))

            self.stage("mined", ["mined.jsonl"], key, [scores_path], produce)
        else:
            rate = float(cfg.raw["baselines"]["prompt_mine_rate_percent"])
            key = {
                "corpus": self.corpus_key(),
                "rate_percent": rate,
                "method": "prompt_confidence",
                "backend": cfg.raw["scoring_backend"],
                "class_name": cfg.task.class_name,
            }

            def produce() -> None:
                backend = build_scoring_backend(cfg)
                mined, skipped = baselines.prompt_confidence_mine(
                    self.corpus, cfg.task, backend, rate, cfg.raw["runtime"]["parallelism"]
                )
                if not mined:
                    first = skipped[0].reason if skipped else "empty corpus"
                    raise BackendError(
                        f"no documents mined ({len(skipped)} skipped; first reason: {first})"
                    )
                self.notes["skipped_documents"] = [
                    {"doc_id": s.doc_id, "reason": s.reason} for s in skipped
                ]
                write_jsonl(out, (baselines.mined_to_row(m) for m in mined))

            self.stage("mined", ["mined.jsonl"], key, [], produce)
        return out

    def run_synthesized(self, exemplar_origin_path: Path | None = None) -> Path:
        """zerogen / icg / mf-icg generations, positives and (if the negative
        strategy is synthesized) out-of-class negatives in one artifact."""
        out = self.out / "synthesized.jsonl"
        cfg = self.config
        bl = cfg.raw["baselines"]
        method = cfg.method if cfg.ablation != "mf-icg" else "mf-icg"
        want_synth_negatives = cfg.raw["negatives"]["strategy"] == "synthesized"
        key = {
            "method": method,
            "backend": cfg.raw["generation_backend"],
            "generation": cfg.raw["generation"],
            "task": {"class_name": cfg.task.class_name, "style": cfg.task.style},
            "baselines": bl,
            "negatives_synth": want_synth_negatives,
            "corpus": self.corpus_key() if method != "zerogen" else None,
        }
        inputs = [exemplar_origin_path] if exemplar_origin_path else []

        def produce() -> None:
            backend = build_generation_backend(cfg)
            rows = []
            if method == "zerogen":
                count = int(bl["zerogen_count"])
                items = baselines.zerogen_generate(cfg.task, backend, count, "in-class", cfg.policy)
                if want_synth_negatives:
                    items += baselines.zerogen_generate(
                        cfg.task, backend, count, "out-of-class", cfg.policy
                    )
            else:
                if method == "mf-icg":
                    assert exemplar_origin_path is not None
                    origin_ids = [
                        r["origin_id"] for r in read_jsonl(exemplar_origin_path)
                    ]
                    docs_by_id = {doc.id: doc for doc in self.corpus.documents}
                    pool = [docs_by_id[i] for i in origin_ids]
                    count = len(pool)
                else:
                    pool = list(self.corpus.documents)
                    count = int(bl["icg_count"])
                items = baselines.icg_generate(
                    cfg.task,
                    backend,
                    pool,
                    count,
                    int(bl["icg_examples_per_prompt"]),
                    int(bl["icg_seed"]),
                    "in-class",
                    cfg.policy,
                )
                if want_synth_negatives:
                    items += baselines.icg_generate(
                        cfg.task,
                        backend,
                        pool,
                        count,
                        int(bl["icg_examples_per_prompt"]),
                        int(bl["icg_seed"]),
                        "out-of-class",
                        cfg.policy,
                    )
            for item in items:
                row = synthesis.grafted_to_row(item)
                row["method"] = method
                rows.append(row)
            write_jsonl(out, rows)

        self.stage("synthesized", ["synthesized.jsonl"], key, inputs, produce)
        return out

    def run_dataset(self, positives_path: Path) -> Path:
        out_dir = self.out / "dataset"
        cfg = self.config
        strategy = cfg.raw["negatives"]["strategy"]
        # grafting with synthesized negatives generates them here (the graft
        # stage itself only produces in-class fills)
        generate_negatives = strategy == dataset.STRATEGY_SYNTH and positives_path.name == "grafted.jsonl"
        key = {
            "corpus": self.corpus_key(),
            "negatives": cfg.raw["negatives"],
            "split": cfg.raw["split"],
            "method": cfg.method,
            "ablation": cfg.ablation,
            "config_hash": cfg.config_hash(),
            "generation_backend": cfg.raw["generation_backend"] if generate_negatives else None,
            "generation": cfg.raw["generation"] if generate_negatives else None,
        }

        def produce() -> None:
            rows = read_jsonl(positives_path)
            synth_negatives: list[synthesis.GraftedText] | None = None
            if positives_path.name == "mined.jsonl":
                mined = [baselines.mined_from_row(r) for r in rows]
                positives = dataset.positives_from_mined(mined)
            elif positives_path.name == "grafted.jsonl":
                grafted = [synthesis.grafted_from_row(r) for r in rows]
                positives = dataset.positives_from_generations(grafted, "grafted")
                if generate_negatives:
                    backend = build_generation_backend(cfg)
                    need = ceil_scale(float(cfg.raw["negatives"]["ratio"]), len(positives))
                    synth_negatives = baselines.zerogen_generate(
                        cfg.task, backend, need, "out-of-class", cfg.policy
                    )
            else:
                items = [synthesis.grafted_from_row(r) for r in rows]
                in_class = [g for g in items if g.generator_meta.get("polarity") != "out-of-class"]
                synth_negatives = [
                    g for g in items if g.generator_meta.get("polarity") == "out-of-class"
                ]
                positives = dataset.positives_from_generations(in_class, "synthesized")
            examples = dataset.assemble(
                positives,
                self.corpus,
                strategy,
                float(cfg.raw["negatives"]["ratio"]),
                int(cfg.raw["negatives"]["seed"]),
                synth_negatives,
            )
            bundle = dataset.split(
                examples,
                float(cfg.raw["split"]["validation_fraction"]),
                int(cfg.raw["split"]["seed"]),
            )
            bundle.manifest.update(
                {
                    "config_hash": cfg.config_hash(),
                    "method": cfg.method,
                    "ablation": cfg.ablation,
                    "seeds": self.seeds(),
                }
            )
            dataset.save_bundle(bundle, out_dir)

        self.stage(
            "dataset",
            ["dataset/train.jsonl", "dataset/validation.jsonl", "dataset/manifest.json"],
            key,
            [positives_path],
            produce,
        )
        return out_dir

    def seeds(self) -> dict:
        raw = self.config.raw
        seeds = {
            "downsample": raw["corpus"]["downsample_seed"],
            "generation": raw["generation"]["seed"],
            "negatives": raw["negatives"]["seed"],
            "split": raw["split"]["seed"],
            "selection_random": raw["selection"]["random_seed"],
            "icg": raw["baselines"]["icg_seed"],
        }
        for name in ("scoring_backend", "generation_backend"):
            if raw[name] is not None:
                seeds[name] = raw[name]["seed"]
        return seeds


def run(config: RunConfig) -> RunReport:
    """Execute one configured run; returns the report after writing
    run_manifest.json."""
    r = _Run(config)
    method = config.method

    if method == "graft" and config.ablation != "mf-icg":
        scores = r.run_scores()
        templates = r.run_templates(scores)
        selected = r.run_selection(templates)
        positives_path = r.run_grafting(selected)
    elif method == "graft":  # mf-icg ablation
        scores = r.run_scores()
        templates = r.run_templates(scores)
        selected = r.run_selection(templates)
        positives_path = r.run_synthesized(exemplar_origin_path=selected)
    elif method in ("zerogen", "icg"):
        positives_path = r.run_synthesized()
    else:
        positives_path = r.run_mining()

    bundle_dir = r.run_dataset(positives_path)

    manifest: dict[str, Any] = {
        "config_hash": config.config_hash(),
        "config": config.fingerprint(),
        "method": method,
        "ablation": config.ablation,
        "seeds": r.seeds(),
        "stages": {s.name: s.status for s in r.stages},
        "artifacts": {s.name: [str(p.relative_to(r.out)) for p in s.files] for s in r.stages},
    }
    # only artifacts produced by this run's stages; a reused output
    # directory may hold files from other configurations
    ran = {s.name for s in r.stages}
    if "scores" in ran:
        _, skipped = r.load_scores(r.out / "scores.jsonl")
        manifest["skipped_documents"] = skipped
    if "skipped_documents" in r.notes:
        manifest["skipped_documents"] = r.notes["skipped_documents"]
    if "grafted" in ran:
        dropped_file = r.out / "grafted.dropped.json"
        manifest["dropped_templates"] = json.loads(dropped_file.read_text(encoding="utf-8"))
    counts = {}
    for name in ("templates", "selected", "grafted", "mined", "synthesized"):
        if name in ran:
            counts[name] = len(read_jsonl(r.out / f"{name}.jsonl"))
    bundle_manifest = json.loads((bundle_dir / "manifest.json").read_text(encoding="utf-8"))
    counts["dataset"] = bundle_manifest["counts"]
    manifest["counts"] = counts
    warnings = []
    if manifest.get("dropped_templates") and counts.get("selected"):
        if len(manifest["dropped_templates"]) * 2 > counts["selected"]:
            warnings.append("more than half of the selected templates were dropped")
    manifest["warnings"] = warnings
    write_json(r.out / "run_manifest.json", manifest)
    return RunReport(output_dir=r.out, stages=r.stages, manifest=manifest)


def sweep(config: RunConfig) -> list[RunReport]:
    """Grid runs over sweep.k_percent and/or sweep.template_count, one
    artifact directory per grid point under the base output_dir."""
    axes = config.raw["sweep"]
    k_values = axes["k_percent"] or [None]
    c_values = axes["template_count"] or [None]
    if k_values == [None] and c_values == [None]:
        raise DataError("sweep requires sweep.k_percent and/or sweep.template_count")
    reports = []
    for k in k_values:
        for c in c_values:
            raw = copy.deepcopy(config.raw)
            parts = []
            if k is not None:
                raw["task"]["k_percent"] = float(k)
                parts.append(f"k{k:g}")
            if c is not None:
                raw["selection"]["template_count_cap"] = int(c)
                parts.append(f"c{c}")
            raw["sweep"] = {"k_percent": None, "template_count": None}
            raw["output_dir"] = str(config.output_dir / "_".join(parts))
            reports.append(run(load_config(raw)))
    return reports
