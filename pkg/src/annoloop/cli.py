"""Command-line interface. Exit codes: 0 success, 1 domain error, 2 usage."""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .corpus import LAYERS, Corpus, export_jsonl, ingest_jsonl
from .errors import AnnoloopError, ConfigError
from .gateway import (
    BackendConfig,
    HttpChatBackend,
    StubBackend,
    classify_batch,
    judgments_to_layer,
    read_judgments_jsonl,
    write_judgments_jsonl,
)
from .metrics import agreement_report, classification_csv, classification_report, kappa_csv
from .prompts import PromptRegistry, draft_rationale_summary, seed_default_prompts
from .sampling import SampleSet, balanced_split, confusion_partition, disagreement_sample
from .schema import default_schema, load_schema
from .workflow import (
    BATCH_GROUP_DEMOGRAPHIC,
    BATCH_GROUP_DIET_PERSONALITY,
    Workflow,
)


def _schema_from_args(args) -> object:
    if getattr(args, "schema", None):
        return load_schema(args.schema)
    return default_schema()


def _load_layered_corpus(pairs: list[str], schema) -> Corpus:
    """Build one corpus from repeatable ``--corpus layer=path`` arguments."""
    corpus = Corpus(schema=schema)
    if not pairs:
        raise ConfigError("at least one --corpus layer=path is required")
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--corpus expects layer=path, got {pair!r}")
        layer, path = pair.split("=", 1)
        if layer not in LAYERS:
            raise ConfigError(f"unknown layer {layer!r} in --corpus {pair!r}")
        ingest_jsonl(path, layer, into=corpus)
    return corpus


def _registry_from_args(args, schema) -> PromptRegistry:
    if getattr(args, "registry", None):
        registry = PromptRegistry(args.registry)
        if not registry.entries():
            seed_default_prompts(registry, schema)
        return registry
    registry = PromptRegistry(Path(tempfile.mkdtemp(prefix="annoloop-prompts-")))
    seed_default_prompts(registry, schema)
    return registry


def _backend_from_args(args):
    if args.backend == "stub":
        if not args.responses:
            raise ConfigError("--backend stub requires --responses <table.jsonl>")
        config = BackendConfig(
            model_id=args.model_id or "stub",
            temperature=args.temperature,
            max_retries=args.max_retries,
        )
        return StubBackend.from_jsonl(args.responses, config=config)
    config = BackendConfig(
        model_id=args.model_id or "gpt-4.1",
        endpoint=args.endpoint,
        credentials_env=args.credentials_env,
        temperature=args.temperature,
        max_retries=args.max_retries,
    )
    return HttpChatBackend(config)


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("stub", "openai"), default="stub")
    parser.add_argument("--responses", help="stub response table (JSONL)")
    parser.add_argument("--model-id", default=None)
    parser.add_argument("--endpoint", default=None)
    parser.add_argument("--credentials-env", default="OPENAI_API_KEY")
    parser.add_argument("--temperature", type=float, default=0.0)
    parser.add_argument("--max-retries", type=int, default=2)
    parser.add_argument("--registry", help="prompt registry directory")


# -- subcommand handlers ----------------------------------------------------


def cmd_ingest(args) -> int:
    corpus = ingest_jsonl(args.infile, args.layer, schema=_schema_from_args(args))
    if args.out:
        export_jsonl(corpus, args.layer, args.out)
    print(f"ingested {len(corpus)} instances ({args.layer} layer)")
    return 0


def cmd_export(args) -> int:
    corpus = ingest_jsonl(args.infile, args.layer, schema=_schema_from_args(args))
    count = export_jsonl(corpus, args.layer, args.out)
    print(f"wrote {count} records to {args.out}")
    return 0


def cmd_split(args) -> int:
    corpus = ingest_jsonl(args.infile, args.layer, schema=_schema_from_args(args))
    dev, test = balanced_split(
        corpus,
        args.label,
        max_neg_per_pos=args.max_neg_per_pos,
        seed=args.seed,
        layer=args.layer,
    )
    payload = {
        "label": args.label,
        "seed": args.seed,
        "max_neg_per_pos": args.max_neg_per_pos,
        "dev": dev,
        "test": test,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"split {args.label}: dev={len(dev)} test={len(test)}")
    return 0


def cmd_classify(args) -> int:
    schema = _schema_from_args(args)
    corpus = ingest_jsonl(args.infile, "original", schema=schema)
    registry = _registry_from_args(args, schema)
    spec = registry.load(args.label, args.variant, args.version)
    backend = _backend_from_args(args)
    judgments, failures = classify_batch(
        backend, spec, corpus.instances, parallelism=args.parallelism
    )
    write_judgments_jsonl(judgments, args.out)
    print(f"classified {len(judgments)}/{len(corpus)} instances -> {args.out}")
    for failure in failures:
        print(
            f"failed {failure.instance_id}: {failure.error_type}: {failure.error}",
            file=sys.stderr,
        )
    return 0


def cmd_sample(args) -> int:
    schema = _schema_from_args(args)
    corpus = ingest_jsonl(args.corpus, args.corpus_layer, schema=schema)
    judgments_to_layer(corpus, read_judgments_jsonl(args.judgments))
    partition = confusion_partition("model", args.corpus_layer, args.label, corpus)
    sample = disagreement_sample(partition, args.budget, ratio=args.ratio, seed=args.seed)
    sample.save(args.out)
    counts = sample.cell_counts
    disagreement = counts["fp"] + counts["fn"]
    agreement = counts["tp"] + counts["tn"]
    print(
        f"sampled {len(sample.ids)} ids ({disagreement} disagreement / "
        f"{agreement} agreement){' [shortfall]' if sample.shortfall else ''}"
    )
    return 0


def cmd_batch_create(args) -> int:
    schema = _schema_from_args(args)
    corpus = ingest_jsonl(args.corpus, args.corpus_layer, schema=schema)
    sample = SampleSet.load(args.sample)
    if args.labels == "demographic":
        labels = BATCH_GROUP_DEMOGRAPHIC
    elif args.labels == "diet-personality":
        labels = BATCH_GROUP_DIET_PERSONALITY
    elif args.labels:
        labels = tuple(l.strip() for l in args.labels.split(",") if l.strip())
    else:
        labels = (sample.label_id,)
    workflow = Workflow.open(args.log, corpus)
    batch = workflow.create_batch(
        sample.ids,
        labels,
        actor=args.actor,
        batch_id=args.batch_id,
        sample_meta={
            "label": sample.label_id,
            "seed": sample.seed,
            "ratio": sample.ratio,
            "cell_counts": sample.cell_counts,
        },
    )
    print(batch.batch_id)
    return 0


def cmd_metrics(args) -> int:
    corpus = _load_layered_corpus(args.corpus, _schema_from_args(args))
    report = classification_report(args.pred_layer, args.gold_layer, corpus)
    output = (
        classification_csv(report, language=args.language)
        if args.format == "csv"
        else report.to_json()
    )
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        print(output, end="" if output.endswith("\n") else "\n")
    return 0


def cmd_kappa(args) -> int:
    corpus = _load_layered_corpus(args.corpus, _schema_from_args(args))
    report = agreement_report(args.layer_a, args.layer_b, corpus)
    output = kappa_csv(report) if args.format == "csv" else report.to_json()
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        print(output, end="" if output.endswith("\n") else "\n")
    return 0


def cmd_draft_rationale(args) -> int:
    schema = _schema_from_args(args)
    corpus = ingest_jsonl(args.corpus, args.layer, schema=schema)
    registry = _registry_from_args(args, schema)
    backend = _backend_from_args(args)
    draft = draft_rationale_summary(
        backend, args.label, corpus, seed=args.seed, registry=registry
    )
    print(f"draft {draft.draft_id} ({draft.status}) for label {draft.label_id}")
    print(draft.draft_text)
    return 0


def cmd_seed_prompts(args) -> int:
    schema = _schema_from_args(args)
    registry = PromptRegistry(args.registry)
    count = seed_default_prompts(registry, schema)
    print(f"seeded {count} prompt specs into {args.registry}")
    return 0


def cmd_serve(args) -> int:
    from .service import load_config, serve

    overrides = {}
    if args.port is not None:
        overrides["port"] = args.port
    if args.host is not None:
        overrides["host"] = args.host
    config = load_config(args.config, overrides=overrides)
    serve(config)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annoloop",
        description="Human-LLM collaborative re-annotation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and load a JSONL corpus file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--layer", choices=LAYERS, required=True)
    p.add_argument("--schema")
    p.add_argument("--out", help="write a normalized copy")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export", help="normalize a corpus file for one layer")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--layer", choices=LAYERS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("split", help="build balanced dev/test id lists for a label")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--layer", choices=LAYERS, default="original")
    p.add_argument("--label", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-neg-per-pos", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("classify", help="classify instances with a prompt + backend")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--label", required=True)
    p.add_argument(
        "--variant",
        choices=("full_rationale", "definition_only", "sampling_era"),
        default="full_rationale",
    )
    p.add_argument("--version", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--schema")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sample", help="disagreement-oversampled id draw for a label")
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-layer", choices=LAYERS, default="original")
    p.add_argument("--judgments", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--ratio", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("batch-create", help="create a re-annotation batch from a sample")
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-layer", choices=LAYERS, default="original")
    p.add_argument("--sample", required=True)
    p.add_argument(
        "--labels",
        default=None,
        help="comma list, or the aliases 'demographic' / 'diet-personality'",
    )
    p.add_argument("--log", required=True, help="event log path")
    p.add_argument("--actor", default="cli")
    p.add_argument("--batch-id", default=None)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_batch_create)

    p = sub.add_parser("metrics", help="precision/recall/F1 report between two layers")
    p.add_argument("--corpus", action="append", default=[], help="layer=path (repeatable)")
    p.add_argument("--pred-layer", choices=LAYERS, default="model")
    p.add_argument("--gold-layer", choices=LAYERS, default="final")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--language", default="all")
    p.add_argument("--out")
    p.add_argument("--schema")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("kappa", help="Cohen's kappa per language and label")
    p.add_argument("--corpus", action="append", default=[], help="layer=path (repeatable)")
    p.add_argument("--layer-a", choices=LAYERS, default="original")
    p.add_argument("--layer-b", choices=LAYERS, default="final")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.add_argument("--schema")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("draft-rationale", help="LLM-draft a guideline summary for review")
    p.add_argument("--corpus", required=True)
    p.add_argument("--layer", choices=LAYERS, default="original")
    p.add_argument("--label", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schema")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_draft_rationale)

    p = sub.add_parser("seed-prompts", help="materialize the built-in prompt set")
    p.add_argument("--registry", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_seed_prompts)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AnnoloopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
