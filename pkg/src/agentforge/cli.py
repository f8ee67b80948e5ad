"""Command-line entry points: search, eval, transfer, report, cost."""
from __future__ import annotations

import dataclasses
import functools
import json
from pathlib import Path
from typing import Optional

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from . import persistence
from .errors import ForgeError
from .evaluate import select_top_k, test_top_candidates
from .search import SearchConfig, build_eval_stack, run_search
from .tables import emit_results_table


def load_config(path: str | Path) -> SearchConfig:
    with open(path, "rb") as handle:
        payload = tomllib.load(handle)
    return SearchConfig.from_dict(payload)


def forge_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ForgeError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.version_option(package_name="agentforge")
def main():
    """Search for agent designs, evaluate them, and report results."""


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--resume", is_flag=True, help="Continue from the run directory's saved state.")
@click.option("--stop-after", type=int, default=None, help="Cap the number of search iterations.")
@forge_errors
def search(config_path: str, resume: bool, stop_after: Optional[int]):
    """Run the agent search loop described by a TOML config."""
    config = load_config(config_path)
    if stop_after is not None:
        config = dataclasses.replace(config, stop_after_iteration=stop_after)
    result = run_search(config, resume=resume)
    click.echo(f"run finished: {result.stop_reason}")
    click.echo(f"archive entries: {len(result.archive.entries)}")
    best = select_top_k(result.archive, 1)
    if best:
        entry = best[0]
        click.echo(f"best on validation: {entry.candidate.name} — {entry.fitness_text}")
    if result.run_dir is not None:
        click.echo(f"artifacts in {result.run_dir}")


@main.command("eval")
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--top-k", type=int, default=None, help="How many archive entries to test.")
@click.option("--fmt", type=click.Choice(["markdown", "csv"]), default="markdown")
@click.option("--out", type=click.Path(), default=None, help="Write the table here instead of stdout.")
@forge_errors
def eval_cmd(config_path: str, top_k: Optional[int], fmt: str, out: Optional[str]):
    """Score the best archived candidates on the held-out test split."""
    config = load_config(config_path)
    if config.run_dir is None:
        raise click.ClickException("config has no run_dir; nothing to evaluate")
    archive = persistence.load_archive(Path(config.run_dir) / persistence.ARCHIVE_FILENAME)
    stack = build_eval_stack(config)
    try:
        results = test_top_candidates(
            stack.evaluator, archive, stack.test_tasks, k=top_k or config.top_k
        )
    finally:
        stack.close()
    table = emit_results_table([(e.candidate.name, r) for e, r in results], fmt=fmt)
    if out:
        Path(out).write_text(table + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(table)


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--domain", "domain_id", required=True, help="Target domain to transfer into.")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--top-k", type=int, default=1, show_default=True)
@click.option("--fmt", type=click.Choice(["markdown", "csv"]), default="markdown")
@forge_errors
def transfer(config_path: str, domain_id: str, data_path: str, top_k: int, fmt: str):
    """Evaluate a run's best candidates on a different domain's test split."""
    config = load_config(config_path)
    if config.run_dir is None:
        raise click.ClickException("config has no run_dir; nothing to transfer")
    archive = persistence.load_archive(Path(config.run_dir) / persistence.ARCHIVE_FILENAME)
    stack = build_eval_stack(
        config, domain_id=domain_id, data_path=data_path, source_run=config.resolved_run_id()
    )
    try:
        results = test_top_candidates(stack.evaluator, archive, stack.test_tasks, k=top_k)
    finally:
        stack.close()
    click.echo(emit_results_table([(e.candidate.name, r) for e, r in results], fmt=fmt))


@main.command()
@click.option("--run-dir", required=True, type=click.Path(exists=True))
@click.option("--fmt", type=click.Choice(["markdown", "csv"]), default="markdown")
@click.option("--fitness", "show_fitness", is_flag=True, help="Also print each entry's fitness line.")
@forge_errors
def report(run_dir: str, fmt: str, show_fitness: bool):
    """Summarize an existing run directory without any model calls."""
    archive = persistence.load_archive(Path(run_dir) / persistence.ARCHIVE_FILENAME)
    named = [(e.candidate.name, e.report) for e in archive.entries if e.report is not None]
    click.echo(emit_results_table(named, fmt=fmt))
    if show_fitness:
        for entry in archive.entries:
            click.echo(f"{entry.candidate.name}: {entry.fitness_text}")


@main.command()
@click.option("--run-dir", required=True, type=click.Path(exists=True))
@forge_errors
def cost(run_dir: str):
    """Print per-model usage and total cost for a finished run."""
    ledger_path = Path(run_dir) / persistence.LEDGER_FILENAME
    if not ledger_path.exists():
        raise click.ClickException(f"no ledger at {ledger_path}")
    counters = json.loads(ledger_path.read_text(encoding="utf-8"))
    total = 0.0
    for model_id in sorted(counters):
        entry = counters[model_id]
        total += entry.get("cost_units", 0.0)
        click.echo(
            f"{model_id}: {int(entry.get('requests', 0))} requests, "
            f"{int(entry.get('prompt_tokens', 0))} prompt + "
            f"{int(entry.get('completion_tokens', 0))} completion tokens, "
            f"cost {entry.get('cost_units', 0.0):.4f}"
        )
    click.echo(f"total cost: {total:.4f}")


if __name__ == "__main__":
    main()
