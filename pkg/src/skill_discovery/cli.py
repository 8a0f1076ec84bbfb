"""
Skill Discovery CLI

Command-line interface for the skill discovery and bi-level planning pipeline.
"""

import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from .api import make_client
from .config import load_config, merge_overrides, resolve_client
from .config.loader import default_config_dict, effective_config_json
from .config.types import PipelineConfig, ResolvedClient, TrainingConfig
from .dataset import (
    Dataset,
    Demonstration,
    NormStats,
    generate_synthetic_dataset,
    normalize_dataset,
    read_dataset,
    sample_environment,
    uneven_counts,
    write_dataset,
)
from .discovery import (
    assignment_histogram,
    cluster_report,
    codebook_sweep,
    estimate_skill_count,
    rank_order,
    skill_key_map,
    skill_prototypes,
)
from .exceptions import ConfigError, GradientCheckError, SkillDiscoveryError, TrainingError
from .nn.gradcheck import run_gradient_suite
from .planning.high_level import plan_task, run_benchmark, template_for
from .planning.low_level import (
    SuccessChecker,
    contact_times_by_index,
    evaluate_low_level,
    execute_plan,
    export_plan,
    score_execution,
)
from .serialization import iter_records, write_records
from .templates import CATALOG_VARIANTS, default_task, get_catalog
from .vqcnmp import (
    LossBreakdown,
    VqCnmpModel,
    assign_all,
    combined_loss,
    finetune,
    load_model,
    save_model,
    train,
    vq_loss,
)

app = typer.Typer(
    name="skill-discovery",
    help="Discover skills from demonstrations and plan with them",
    add_completion=False,
)
console = Console()
logger = logging.getLogger("skill_discovery")


@dataclass
class GlobalOptions:
    """Options shared by every command."""

    config: Optional[Path] = None
    seed: Optional[int] = None
    out: Optional[Path] = None
    jobs: Optional[int] = None


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@app.callback()
def main_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Path to pipeline config file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for data, training and planning"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Parallel training jobs"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Skill discovery pipeline."""
    _configure_logging(verbose)
    ctx.obj = GlobalOptions(config=config, seed=seed, out=out, jobs=jobs)


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Print library errors and exit with their failure-class code."""
    try:
        yield
    except SkillDiscoveryError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(e.exit_code)


def load_config_or_exit(
    ctx: typer.Context, overrides: Optional[dict[str, Any]] = None
) -> tuple[PipelineConfig, ResolvedClient, Path]:
    """
    Load the config file, apply flags, save the effective config.

    Returns:
        Tuple of (config, resolved client, output directory)
    """
    opts: GlobalOptions = ctx.obj or GlobalOptions()
    result = load_config(opts.config)

    for warning in result.warnings:
        console.print(f"[yellow]Warning:[/yellow] {warning}")
    if not result.success or not result.config:
        console.print("[red]Error loading config:[/red]")
        for error in result.errors:
            console.print(f"  - {error}")
        raise typer.Exit(ConfigError.exit_code)

    flags: dict[str, Any] = {
        "seed": opts.seed,
        "kitchen.seed": opts.seed,
        "training.seed": opts.seed,
        "output_dir": str(opts.out) if opts.out is not None else None,
        "jobs": opts.jobs,
        **(overrides or {}),
    }
    with exit_on_error():
        config = merge_overrides(result.config, flags)

    client, errors, _ = resolve_client(config.client)
    if errors:
        for error in errors:
            console.print(f"[red]Error:[/red] {error}")
        raise typer.Exit(ConfigError.exit_code)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.json").write_text(effective_config_json(config))
    return config, client, out


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {text!r}")


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_dataset(path: Path, stats: Optional[NormStats] = None) -> Dataset:
    """Read a dataset and bring it into model space."""
    ds = read_dataset(path)
    return ds if ds.normalized else normalize_dataset(ds, stats)


def _make_table(title: str, header: list[str], rows: list[list[str]]) -> Table:
    table = Table(title=title)
    for i, name in enumerate(header):
        table.add_column(name, style="cyan" if i == 0 else None)
    for row in rows:
        table.add_row(*row)
    return table


def _show_and_save(table: Table, path: Path) -> None:
    """Print a table and store its plain-text rendering."""
    console.print(table)
    recorder = Console(record=True, file=io.StringIO(), width=120)
    recorder.print(table)
    path.write_text(recorder.export_text())


def _write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True))


def _read_history(path: Path) -> list[LossBreakdown]:
    return [LossBreakdown.model_validate(record) for _, record in iter_records(path)]


def _key_map_and_contacts(
    model: VqCnmpModel, ds: Dataset, config: PipelineConfig
) -> tuple[dict[int, int], dict[int, float]]:
    """Action key -> codebook index and index -> contact time from a labeled dataset."""
    asg = assign_all(model, ds)
    if not ds.has_labels():
        raise ConfigError("planning needs a labeled dataset to map actions to skill vectors")
    report = cluster_report(asg, ds.labels(), model.K)
    return skill_key_map(report, config.kitchen), contact_times_by_index(ds, asg)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@app.command()
def init(
    output: Path = typer.Option(Path("skill-discovery.json"), "--output", help="Output config file path"),
    force: bool = typer.Option(False, "--force", "-f", help="Overwrite existing file"),
):
    """Initialize a new configuration file."""
    if output.exists() and not force:
        console.print(f"[red]File already exists:[/red] {output}")
        console.print("Use --force to overwrite")
        raise typer.Exit(1)

    output.write_text(json.dumps(default_config_dict(), indent=2))
    console.print(f"[green]Created config file:[/green] {output}")
    console.print("\nSet SKILL_LLM_API_KEY (or client.apiKeyEnvVar) to use the http client.")


@app.command("gen-data")
def gen_data(
    ctx: typer.Context,
    demos_per_skill: Optional[str] = typer.Option(
        None, "--demos-per-skill", help="One count, or one count per skill: 15,40,100,33,70"
    ),
    uneven: bool = typer.Option(False, "--uneven", help="Random per-skill counts in [15, 60]"),
    noise: Optional[float] = typer.Option(None, "--noise", help="Position noise std [m]"),
):
    """Generate a synthetic kitchen demonstration dataset."""
    overrides: dict[str, Any] = {"kitchen.noise_std": noise}
    if demos_per_skill is not None:
        counts = _int_list(demos_per_skill)
        overrides["kitchen.demos_per_skill"] = counts[0] if len(counts) == 1 else counts
    config, _, out = load_config_or_exit(ctx, overrides)

    with exit_on_error():
        if uneven:
            counts = uneven_counts(len(config.kitchen.skills), seed=config.kitchen.seed)
            config = merge_overrides(config, {"kitchen.demos_per_skill": counts})
        ds = generate_synthetic_dataset(config.kitchen)
        write_dataset(ds, out / "dataset.jsonl")

    summary = {
        skill.name: count for skill, count in zip(config.kitchen.skills, config.kitchen.counts())
    }
    _write_json(out / "dataset_summary.json", {"demos": len(ds), "per_skill": summary})
    rows = [[name, str(count)] for name, count in summary.items()]
    console.print(_make_table("Demonstrations", ["Skill", "Count"], rows))
    console.print(f"[green]Wrote dataset:[/green] {out / 'dataset.jsonl'}")


def _train_job(ds: Dataset, cfg: TrainingConfig, directory: str) -> dict[str, Any]:
    """Train and save one model; failures are returned, not raised."""
    checkpoint = Path(directory) / f"model-seed{cfg.seed}.jsonl"
    history_path = Path(directory) / f"history-seed{cfg.seed}.jsonl"
    try:
        model, history = train(ds, cfg)
    except SkillDiscoveryError as e:
        return {"seed": cfg.seed, "error": str(e)}
    save_model(model, checkpoint)
    write_records(history_path, [b.model_dump() for b in history])
    return {
        "seed": cfg.seed,
        "checkpoint": checkpoint.name,
        "history": history_path.name,
        "combined_loss": combined_loss(history, cfg.loss_window) if history else None,
        "vq_loss": vq_loss(history, cfg.loss_window) if history else None,
    }


@app.command("train-batch")
def train_batch(
    ctx: typer.Context,
    dataset: Path = typer.Argument(..., help="Dataset file"),
    models: Optional[int] = typer.Option(None, "--models", "-n", help="Number of models"),
    codebook_size: Optional[int] = typer.Option(None, "--codebook-size", "-k", help="K"),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Training steps"),
):
    """Train a batch of models with consecutive seeds and rank them by loss."""
    config, _, out = load_config_or_exit(
        ctx,
        {
            "sweep.batch": models,
            "training.codebook_size": codebook_size,
            "training.iterations": iterations,
        },
    )
    directory = out / "models"
    directory.mkdir(exist_ok=True)
    manifest_path = directory / "manifest.json"

    with exit_on_error():
        ds = _load_dataset(dataset)
        fresh = {
            "dataset": str(dataset),
            "dataset_sha256": _file_sha256(dataset),
            "training": config.training.model_dump(mode="json", exclude={"seed", "log_every"}),
            "finished": {},
            "failed": {},
        }
        manifest = fresh
        if manifest_path.exists():
            previous = json.loads(manifest_path.read_text())
            if all(previous.get(key) == fresh[key] for key in ("dataset_sha256", "training")):
                manifest = {**previous, "failed": {}}
            else:
                logger.warning("manifest %s was written for other settings; discarding it", manifest_path)
                console.print("[yellow]Training settings or dataset changed; retraining all models[/yellow]")

        seeds = [config.training.seed + i for i in range(config.sweep.batch)]
        todo = [
            s
            for s in seeds
            if str(s) not in manifest["finished"]
            or not (directory / manifest["finished"][str(s)]["checkpoint"]).exists()
        ]
        if len(todo) < len(seeds):
            console.print(f"Resuming: {len(seeds) - len(todo)} models already trained")

        cfgs = [config.training.model_copy(update={"seed": s}) for s in todo]

        def record(result: dict[str, Any]) -> None:
            seed = str(result["seed"])
            if "error" in result:
                logger.error("seed %s failed: %s", seed, result["error"])
                manifest["failed"][seed] = result["error"]
            else:
                manifest["finished"][seed] = result
            _write_json(manifest_path, manifest)

        if config.jobs > 1 and len(cfgs) > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                futures = [pool.submit(_train_job, ds, cfg, str(directory)) for cfg in cfgs]
                for future in as_completed(futures):
                    record(future.result())
        else:
            for cfg in cfgs:
                record(_train_job(ds, cfg, str(directory)))

        finished = [s for s in seeds if str(s) in manifest["finished"]]
        histories = [
            _read_history(directory / manifest["finished"][str(s)]["history"]) for s in finished
        ]
        ranked = finished
        if all(histories):
            ranked = [finished[i] for i in rank_order(histories, config.training.loss_window)]

        rows = []
        ranking = []
        for position, seed in enumerate(ranked, start=1):
            entry = manifest["finished"][str(seed)]
            row = {"rank": position, **entry}
            if ds.has_labels():
                model = load_model(directory / entry["checkpoint"])
                report = cluster_report(assign_all(model, ds), ds.labels(), model.K)
                row.update(accuracy=report.accuracy, perfect=report.perfect)
            ranking.append(row)
            rows.append(
                [
                    str(position),
                    str(seed),
                    f"{entry['combined_loss']:.4f}" if entry["combined_loss"] is not None else "-",
                    f"{entry['vq_loss']:.4g}" if entry["vq_loss"] is not None else "-",
                    f"{row['accuracy']:.1%}" if "accuracy" in row else "-",
                    ("yes" if row["perfect"] else "no") if "perfect" in row else "-",
                ]
            )

    _write_json(out / "rank_report.json", ranking)
    _show_and_save(
        _make_table(
            f"Models (K={config.training.codebook_size})",
            ["Rank", "Seed", "Combined loss", "VQ loss", "Accuracy", "Perfect"],
            rows,
        ),
        out / "rank_report.txt",
    )
    if manifest["failed"]:
        console.print(f"[red]{len(manifest['failed'])} training job(s) failed[/red]")
        raise typer.Exit(TrainingError.exit_code)


@app.command()
def discover(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., help="Model checkpoint"),
    dataset: Path = typer.Argument(..., help="Dataset file"),
    plot: bool = typer.Option(False, "--plot", help="Write prototype trajectory plot"),
    tolerance: float = typer.Option(0.02, "--tolerance", help="RMS distance [m] for equivalent vectors"),
):
    """Assign demonstrations to skill vectors and report clustering quality."""
    config, _, out = load_config_or_exit(ctx)

    with exit_on_error():
        model = load_model(model_path)
        ds = _load_dataset(dataset, model.norm_stats)
        asg = assign_all(model, ds)
        _write_json(out / "assignment.json", asg)

        times = np.linspace(0.0, 1.0, config.planner.trajectory_length)
        prototypes = skill_prototypes(model, times, asg.values())
        skill_count = estimate_skill_count(prototypes, tolerance)

        labels: dict[int, str] = {}
        if ds.has_labels():
            report = cluster_report(asg, ds.labels(), model.K)
            labels = report.vector_to_label
            _write_json(
                out / "discovery_report.json",
                {**report.model_dump(mode="json"), "estimated_skills": skill_count},
            )
            status = "[green]perfect[/green]" if report.perfect else "[yellow]not perfect[/yellow]"
            console.print(
                Panel(f"Accuracy: {report.accuracy:.1%}\nClustering: {status}", title="Discovery")
            )
            rows = [[skill, ", ".join(map(str, split))] for skill, split in report.per_skill_split.items()]
            console.print(_make_table("Skill vectors", ["Skill", "Vectors"], rows))
        else:
            console.print("[yellow]Dataset has no labels; reporting assignment histogram only[/yellow]")
            histogram = assignment_histogram(asg)
            _write_json(
                out / "discovery_report.json", {"histogram": histogram, "estimated_skills": skill_count}
            )
            rows = [[str(k), str(count)] for k, count in histogram.items()]
            console.print(_make_table("Assignment histogram", ["Vector", "Demos"], rows))

        console.print(f"Used vectors: {len(prototypes)}; distinct actions: {skill_count}")
        write_dataset(
            Dataset(
                demos=tuple(
                    Demonstration(
                        id=f"prototype-{k}", times=times, sm=mu, skill_label=labels.get(k)
                    )
                    for k, mu in prototypes.items()
                ),
                d=model.d,
            ),
            out / "prototypes.jsonl",
        )

    if plot:
        from .plotting import plot_prototypes

        path = plot_prototypes(prototypes, times, out / "prototypes.png", labels=labels)
        console.print(f"[green]Wrote plot:[/green] {path}")


@app.command("finetune")
def finetune_cmd(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., help="Phase-one (unsupervised) checkpoint"),
    dataset: Path = typer.Argument(..., help="Dataset file"),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Training steps"),
):
    """Retrain a fresh model with assignments frozen to the discovered skills."""
    config, _, out = load_config_or_exit(ctx, {"training.iterations": iterations})

    with exit_on_error():
        phase_one = load_model(model_path)
        ds = _load_dataset(dataset, phase_one.norm_stats)
        asg = assign_all(phase_one, ds)
        cfg = config.training.model_copy(
            update={"codebook_size": phase_one.K, "latent_dim": phase_one.d_z}
        )
        model = finetune(ds, asg, cfg)
        save_model(model, out / "finetuned.jsonl")
        _write_json(out / "assignment.json", asg)

    console.print(f"[green]Wrote fine-tuned model:[/green] {out / 'finetuned.jsonl'}")


@app.command()
def plan(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., help="Model checkpoint"),
    dataset: Path = typer.Argument(..., help="Labeled dataset (maps actions to skill vectors)"),
    ingredients: str = typer.Option("tomato,potato", "--ingredients", "-i", help="Comma-separated"),
    variant: str = typer.Option("skills_only", "--variant", help="Action catalog variant"),
    image: Optional[Path] = typer.Option(
        None, "--image", exists=True, dir_okay=False, help="Environment image sent to the LLM"
    ),
    full_locations: bool = typer.Option(
        False, "--full-locations", help="Tell the LLM where every ingredient is (hidden_env)"
    ),
):
    """Plan a stew: LLM picks skills, gradient descent instantiates them."""
    config, client_settings, out = load_config_or_exit(ctx)

    with exit_on_error():
        model = load_model(model_path)
        ds = _load_dataset(dataset, model.norm_stats)
        key_map, contact_times = _key_map_and_contacts(model, ds, config)

        catalog = get_catalog(variant)
        task = default_task(
            [i.strip() for i in ingredients.split(",") if i.strip()], catalog, full_locations
        )
        images = [image.read_bytes()] if image else None
        high_plan, verdict = plan_task(
            make_client(client_settings), task, catalog, template_for(catalog), images
        )
        (out / "plan_verdict.json").write_text(
            json.dumps({"keys": high_plan.keys, "verdict": verdict.model_dump()}, indent=2)
        )

        skill_steps = [key for key in high_plan.keys if key in key_map]
        skipped = [key for key in high_plan.keys if key not in key_map]
        if skipped:
            logger.info("actions without a learned skill are not instantiated: %s", skipped)

        env = sample_environment(config.kitchen, np.random.default_rng([config.seed, 2]))
        poses = {skill.action_key: env[skill.name] for skill in config.kitchen.skills}
        sinks = {skill.action_key: skill.sink for skill in config.kitchen.skills}
        results = execute_plan(model, skill_steps, poses, contact_times, key_map, config.planner)
        export_plan(results, out / "plan")

    if verdict.success:
        outcome = "[green]success[/green]"
    else:
        outcome = f"[red]failure[/red] (missing {verdict.missing}, extra {verdict.extra})"
        if verdict.parse_error:
            outcome += f"\n{verdict.parse_error}"
    console.print(Panel(f"Plan: {high_plan.keys}\nVerdict: {outcome}", title="High level"))
    rows = []
    for key, result in zip(skill_steps, results):
        checker = SuccessChecker(
            sink=sinks[key], tolerance=config.planner.tolerance, contact_window=config.planner.contact_window
        )
        picked, delivered = score_execution(result, checker)
        rows.append(
            [
                str(key),
                str(result.k),
                f"{result.final_error * 100:.2f} cm" if np.isfinite(result.final_error) else "-",
                str(result.iterations),
                "yes" if result.converged else "no",
                "yes" if picked else "no",
                "yes" if delivered else "no",
            ]
        )
    console.print(
        _make_table(
            "Low level",
            ["Action", "Vector", "Error", "Iterations", "Converged", "Picked", "Delivered"],
            rows,
        )
    )


@app.command("eval-low")
def eval_low(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., help="Model checkpoint"),
    dataset: Path = typer.Argument(..., help="Labeled dataset"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Object placements per skill"),
    baseline: Optional[Path] = typer.Option(None, "--baseline", help="Second model for paired comparison"),
):
    """Single-task low-level planning evaluation over random object placements."""
    config, _, out = load_config_or_exit(ctx, {"planner.trials_per_skill": trials})
    header = ["Skill", "Vector", "Converged", "Picked", "Delivered", "Median iters"]

    with exit_on_error():
        reports = {}
        for name, path in (("model", model_path), ("baseline", baseline)):
            if path is None:
                continue
            model = load_model(path)
            ds = _load_dataset(dataset, model.norm_stats)
            key_map, contact_times = _key_map_and_contacts(model, ds, config)
            reports[name] = evaluate_low_level(
                model,
                config.kitchen,
                key_map,
                contact_times,
                config.planner.trials_per_skill,
                seed=config.seed,
                planner=config.planner,
            )
            _show_and_save(
                _make_table(f"Low-level planning ({path.name})", header, reports[name].rows()),
                out / f"low_level_{name}.txt",
            )

    _write_json(out / "low_level_report.json", {k: r.model_dump() for k, r in reports.items()})
    if "baseline" in reports:
        console.print(
            f"Median iterations: model {reports['model'].median_iterations:g}, "
            f"baseline {reports['baseline'].median_iterations:g}"
        )


@app.command()
def sweep(
    ctx: typer.Context,
    dataset: Path = typer.Argument(..., help="Dataset file"),
    sizes: Optional[str] = typer.Option(None, "--sizes", help="Codebook sizes, e.g. 3,5,10,20"),
    batch: Optional[int] = typer.Option(None, "--batch", help="Models per size"),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Training steps"),
):
    """Train batches of models across codebook sizes and tabulate clustering quality."""
    config, _, out = load_config_or_exit(
        ctx,
        {
            "sweep.sizes": _int_list(sizes) if sizes else None,
            "sweep.batch": batch,
            "training.iterations": iterations,
        },
    )

    with exit_on_error():
        ds = _load_dataset(dataset)
        report = codebook_sweep(ds, config.sweep.sizes, config.sweep.batch, config.training, config.jobs)

    (out / "sweep_report.json").write_text(report.model_dump_json(indent=2))
    _show_and_save(_make_table("Codebook sizes", report.header(), report.rows()), out / "sweep_table.txt")


@app.command()
def benchmark(
    ctx: typer.Context,
    variants: str = typer.Option(",".join(CATALOG_VARIANTS), "--variants", help="Catalog variants"),
    trials: int = typer.Option(10, "--trials", help="Trials per ingredient combination"),
    image: Optional[Path] = typer.Option(
        None, "--image", exists=True, dir_okay=False, help="Environment image sent to the LLM"
    ),
    full_locations: bool = typer.Option(
        False, "--full-locations", help="Tell the LLM where every ingredient is (hidden_env)"
    ),
):
    """High-level planning benchmark over all ingredient combinations."""
    config, client_settings, out = load_config_or_exit(ctx)
    names = [v.strip() for v in variants.split(",") if v.strip()]
    unknown = [v for v in names if v not in CATALOG_VARIANTS]
    if unknown:
        raise typer.BadParameter(f"unknown variant(s): {', '.join(unknown)}")

    with exit_on_error():
        report = run_benchmark(
            make_client(client_settings),
            names,
            trials,
            images=[image.read_bytes()] if image else None,
            parallelism=client_settings.parallelism,
            log_path=out / "benchmark_trials.jsonl",
            full_locations=full_locations,
        )

    (out / "benchmark_report.json").write_text(report.model_dump_json(indent=2))
    _show_and_save(_make_table("High-level planning", report.header(), report.rows()), out / "benchmark_table.txt")


@app.command()
def gradcheck(
    ctx: typer.Context,
    trials: int = typer.Option(100, "--trials", help="Random instances per component"),
):
    """Compare every analytic gradient with central finite differences."""
    config, _, out = load_config_or_exit(ctx)

    with exit_on_error():
        report = run_gradient_suite(trials=trials, seed=config.seed)

    (out / "gradcheck.json").write_text(report.model_dump_json(indent=2))
    rows = [
        [c.name, str(c.instances), str(c.entries), f"{c.max_relative_error:.3e}"]
        for c in report.components
    ]
    console.print(_make_table("Gradient check", ["Component", "Instances", "Entries", "Max rel. error"], rows))
    console.print(f"max relative error: {report.max_relative_error:.3e}")
    if not report.passed:
        console.print(f"[red]Gradient check failed (tolerance {report.tolerance:g})[/red]")
        raise typer.Exit(GradientCheckError.exit_code)
    console.print("[green]Gradient check passed[/green]")


@app.command()
def version():
    """Show CLI version."""
    from . import __version__

    console.print(f"skill-discovery CLI v{__version__}")


def main():
    """Entry point."""
    app()


if __name__ == "__main__":
    main()
