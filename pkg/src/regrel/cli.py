"""Command-line interface. All commands operate on the same jsonl/json file
formats, and the store subcommands share one store directory with the
review service."""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from pathlib import Path

import click

from regrel import corpus as corpus_mod
from regrel import datasets as datasets_mod
from regrel import evaluation as eval_mod
from regrel import process as process_mod
from regrel.crowd import aggregate_study, read_submissions
from regrel.labels import LabelSet, RelevanceType
from regrel.llm_judge import (
    JudgeConfig,
    ScriptedChatProvider,
    judge_study_set,
    judgments_to_predictions,
    write_judgments,
)
from regrel.retrieval import (
    PipelineConfig,
    RetrievalContext,
    binarize_top_k,
    resolve_final_k,
    run_pipeline,
    write_rankings,
)

log = logging.getLogger(__name__)


def _config_digest(**settings) -> str:
    canonical = json.dumps(settings, sort_keys=True, default=str)
    return hashlib.blake2b(canonical.encode("utf-8"), digest_size=6).hexdigest()


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--in", "inputs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "plaintext"]), default="jsonl")
@click.option("--docs", type=click.Path(exists=True), default=None,
              help="documents.jsonl with document metadata.")
@click.option("--out", required=True, type=click.Path())
def ingest(inputs, fmt, docs, out):
    """Ingest document sources into a corpus jsonl file."""
    result = corpus_mod.ingest_documents(inputs, format=fmt, documents=docs)
    corpus_mod.export_corpus(result, out)
    click.echo(f"ingested {len(result.paragraphs)} paragraphs -> {out}")
    for flag in result.report.flags:
        state = "skipped" if flag.skipped else "flagged"
        click.echo(f"  {state}: {flag.para_id or flag.source}: {flag.reason}")


@main.command("validate-set")
@click.option("--set", "set_path", required=True, type=click.Path(exists=True))
@click.option("--expect", required=True, type=click.Path(exists=True))
@click.option("--docs", type=click.Path(exists=True), default=None)
def validate_set(set_path, expect, docs):
    """Validate a study set's composition against an expected spec."""
    study_set = corpus_mod.load_study_set(set_path, documents=docs)
    expected = corpus_mod.Composition.from_json(json.loads(Path(expect).read_text()))
    report = corpus_mod.validate_study_set(study_set, expected)
    for entry in report.entries:
        status = "pass" if entry.passed else "FAIL"
        click.echo(f"{status}: {entry.constraint}: expected {entry.expected}, got {entry.actual}")
    if not report.passed:
        sys.exit(1)


@main.group()
def process():
    """Process model commands."""


@process.command("validate")
@click.option("--in", "path", required=True, type=click.Path(exists=True))
def process_validate(path):
    model = process_mod.load_process(path)
    counts = [len(model.nodes_at(level)) for level in (1, 2, 3)]
    click.echo(f"valid model {model.model_id}: {counts[0]}/{counts[1]}/{counts[2]} nodes")


@process.command("from-bpmn")
@click.option("--in", "path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--model-id", default=None)
def process_from_bpmn(path, out, model_id):
    """Extract a skeleton (names, kinds, containment) from BPMN 2.0 XML."""
    xml = Path(path).read_text(encoding="utf-8")
    skeleton = process_mod.extract_bpmn_skeleton(xml, model_id=model_id or Path(path).stem)
    Path(out).write_text(json.dumps(skeleton.to_json(), indent=2) + "\n", encoding="utf-8")
    counts = [len(skeleton.nodes_at(level)) for level in (1, 2, 3)]
    click.echo(
        f"skeleton {skeleton.model_id}: {counts[0]}/{counts[1]}/{counts[2]} nodes "
        "(descriptions must be supplied before judging)"
    )


@main.command()
@click.option("--set", "set_path", required=True, type=click.Path(exists=True))
@click.option("--process", "process_path", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["A", "B"]), default="B")
@click.option("--level", type=click.IntRange(1, 3), default=1)
@click.option("--provider", type=click.Choice(["fallback", "remote"]), default="fallback")
@click.option("--initial-k", type=int, default=100)
@click.option("--final-k", default="gold_count", help='Cut for binarization: int or "gold_count".')
@click.option("--gold", "gold_path", type=click.Path(exists=True), default=None,
              help="Gold jsonl, required to resolve final_k=gold_count.")
@click.option("--docs", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--predictions-out", type=click.Path(), default=None,
              help="Also write equal-count binarized predictions.")
def rank(set_path, process_path, method, level, provider, initial_k, final_k,
         gold_path, docs, out, predictions_out):
    """Run a two-stage retrieval pipeline for every node at a level."""
    study_set = corpus_mod.load_study_set(set_path, documents=docs)
    model = process_mod.load_process(process_path)
    final_k_value: int | str = int(final_k) if final_k.isdigit() else final_k
    config = PipelineConfig(method=method, initial_k=initial_k, final_k=final_k_value)
    ctx = RetrievalContext.build(study_set, providers=provider)
    rankings = [
        run_pipeline(study_set, model, node.node_id, config, ctx)
        for node in model.nodes_at(level)
    ]
    write_rankings(out, rankings)
    click.echo(f"wrote {len(rankings)} rankings -> {out}")

    if predictions_out:
        if config.final_k == "gold_count" and not gold_path:
            raise click.UsageError("--gold is required when final-k is gold_count")
        gold = eval_mod.load_gold(gold_path, model=model) if gold_path else None
        preds = {pid: LabelSet() for pid in study_set.para_ids}
        for ranking in rankings:
            k = resolve_final_k(config, gold, ranking.query_node_id, level)
            for para_id in binarize_top_k(ranking, k):
                if level == 1:
                    preds[para_id].level1 = RelevanceType.INFORMATIVE
                elif level == 2:
                    preds[para_id].level2[ranking.query_node_id] = RelevanceType.INFORMATIVE
                else:
                    preds[para_id].level3[ranking.query_node_id] = RelevanceType.INFORMATIVE
        preds = eval_mod.normalize_predictions(preds, model)
        digest = _config_digest(method=method, level=level, provider=provider,
                                initial_k=initial_k, final_k=final_k)
        eval_mod.save_predictions(preds, predictions_out, method=config.method_name,
                                  config_digest=digest)
        click.echo(f"wrote predictions -> {predictions_out}")


@main.command()
@click.option("--set", "set_path", required=True, type=click.Path(exists=True))
@click.option("--process", "process_path", required=True, type=click.Path(exists=True))
@click.option("--iteration", type=click.Choice(["v1", "v2", "v3"]), default="v3")
@click.option("--provider", type=click.Choice(["remote", "scripted"]), default="remote")
@click.option("--replies", type=click.Path(exists=True), default=None,
              help="Reply file for the scripted provider (jsonl, in set order).")
@click.option("--post-filter-subprocess-threshold", type=int, default=None)
@click.option("--docs", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--predictions-out", type=click.Path(), default=None)
def judge(set_path, process_path, iteration, provider, replies,
          post_filter_subprocess_threshold, docs, out, predictions_out):
    """Judge every paragraph of a study set with one chat request each."""
    study_set = corpus_mod.load_study_set(set_path, documents=docs)
    model = process_mod.load_process(process_path)
    if provider == "scripted":
        if not replies:
            raise click.UsageError("--replies is required for the scripted provider")
        chat = ScriptedChatProvider.from_file(replies)
    else:
        from regrel.providers import ProviderConfig, RemoteChatProvider

        chat = RemoteChatProvider(ProviderConfig.from_env("REGREL_CHAT_URL", "REGREL_CHAT_TOKEN"))
    config = JudgeConfig(
        iteration=iteration,
        subprocess_spread_threshold=post_filter_subprocess_threshold,
    )
    judgments = judge_study_set(chat, model, study_set, config)
    write_judgments(out, judgments)
    click.echo(f"wrote {len(judgments)} judgments -> {out}")
    if predictions_out:
        digest = _config_digest(iteration=iteration, provider=provider,
                                post_filter=post_filter_subprocess_threshold)
        eval_mod.save_predictions(
            judgments_to_predictions(judgments), predictions_out,
            method="llm_judge", config_digest=digest,
        )
        click.echo(f"wrote predictions -> {predictions_out}")


@main.group()
def crowd():
    """Crowd submission commands."""


@crowd.command("aggregate")
@click.option("--in", "path", required=True, type=click.Path(exists=True))
@click.option("--strategy", type=click.Choice(["unfiltered", "qlt_filter", "qlt_comb"]),
              required=True)
@click.option("--process", "process_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def crowd_aggregate(path, strategy, process_path, out):
    """Aggregate two-phase worker submissions into per-paragraph predictions."""
    model = process_mod.load_process(process_path)
    submissions = read_submissions(path)
    predictions = aggregate_study(submissions, strategy, model)
    eval_mod.save_predictions(predictions, out, method=f"crowd_{strategy}")
    click.echo(f"aggregated {len(predictions)} paragraphs -> {out}")


@main.command("eval")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--set", "set_path", type=click.Path(exists=True), default=None,
              help="Study set for per-group accuracy.")
@click.option("--process", "process_path", type=click.Path(exists=True), default=None)
@click.option("--denominator", type=click.Choice(["restricted", "all_paragraphs"]),
              default="restricted")
@click.option("--out", required=True, type=click.Path())
def eval_cmd(gold_path, pred_path, set_path, process_path, denominator, out):
    """Score predictions against gold and write a metrics report."""
    model = process_mod.load_process(process_path) if process_path else None
    groups = corpus_mod.load_study_set(set_path).groups if set_path else None
    gold = eval_mod.load_gold(gold_path, model=model, groups=groups)
    preds = eval_mod.load_predictions(pred_path)
    report = eval_mod.evaluate(preds, gold, groups=groups, model=model, denominator=denominator)
    eval_mod.save_report(report, out)
    for level, counts in report.levels.items():
        click.echo(
            f"level {level}: acc {eval_mod.round2(counts.accuracy)} "
            f"prec {eval_mod.round2(counts.precision)} rec {eval_mod.round2(counts.recall)} "
            f"(tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn})"
        )
    click.echo(f"report -> {out}")


@main.command()
@click.option("--usage", type=click.Choice(["low", "high", "low_to_high"]), required=True)
@click.option("--impact", type=click.Choice(["low", "high"]), required=True)
@click.option("--dynamics", type=click.Choice(["low", "high"]), required=True)
@click.option("--reg-input", type=click.Choice(["low", "high"]), required=True)
def recommend(usage, impact, dynamics, reg_input):
    """Recommend a method combination for a process scenario."""
    profile = eval_mod.ScenarioProfile(usage, impact, dynamics, reg_input)
    rec = eval_mod.recommend_methods(profile)
    suffix = " (non-canonical profile, nearest match)" if rec.non_canonical else ""
    click.echo(rec.combination + suffix)


@main.group()
def store():
    """Store maintenance commands (same directory the service uses)."""


@store.command("add-set")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--set", "set_path", required=True, type=click.Path(exists=True))
@click.option("--docs", type=click.Path(exists=True), default=None)
@click.option("--set-id", default=None, help="Registered id (defaults to the file stem).")
def store_add_set(store_dir, set_path, docs, set_id):
    from regrel.service import Store

    study_set = Store(store_dir).add_study_set(set_path, documents=docs, set_id=set_id)
    click.echo(f"registered study set {study_set.use_case_id} ({len(study_set)} paragraphs)")


@store.command("add-process")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--in", "path", required=True, type=click.Path(exists=True))
def store_add_process(store_dir, path):
    from regrel.service import Store

    model = Store(store_dir).add_process(path)
    click.echo(f"registered process model {model.model_id}")


@store.command("import-gold")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--model-id", default=None)
def store_import_gold(store_dir, gold_path, model_id):
    from regrel.service import Store

    records = list(corpus_mod.read_jsonl(gold_path))
    count = Store(store_dir).import_gold(records, model_id=model_id)
    click.echo(f"imported {count} gold labels")


@store.command("export-gold")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def store_export_gold(store_dir, out):
    from regrel.service import Store

    corpus_mod.write_jsonl(out, Store(store_dir).export_gold())
    click.echo(f"exported gold -> {out}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--listen", default="127.0.0.1:8000")
@click.option("--frontend", type=click.Path(), default=None,
              help="Static UI bundle directory (defaults to ./frontend/dist if present).")
def serve(store_dir, listen, frontend):
    """Run the review service."""
    import uvicorn

    from regrel.service import Store, create_app

    host, _, port = listen.partition(":")
    dist = frontend or (Path("frontend") / "dist")
    app = create_app(Store(store_dir), run_jobs_inline=False, frontend_dist=dist)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


@main.command()
@click.option("--out", default="data", type=click.Path())
def datasets(out):
    """Regenerate the bundled fixture study sets."""
    datasets_mod.generate_all(out)
    click.echo(f"fixture datasets written under {out}/")


if __name__ == "__main__":
    main()
