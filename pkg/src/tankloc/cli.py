"""Command-line interface: thin argument parsing over the pipeline.

Every failure prints machine-readable JSON {error_code, message, detail}
to stderr and exits 1; usage errors exit 2 (click's default).

Environment variables: TANKLOC_CHECKPOINT, TANKLOC_MAP, TANKLOC_PORT.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
import sys
from pathlib import Path

import click

from tankloc.config import load_run_config
from tankloc.dataset.manifest import filter_min_count, ingest, load_manifest, save_manifest
from tankloc.dataset.splits import load_split, save_split, stratified_kfold
from tankloc.errors import TanklocError
from tankloc.localizer.decision import load_policy, save_policy
from tankloc.localizer.region_map import load_region_map
from tankloc.modeling.checkpoint import load_checkpoint
from tankloc.modeling.export import export_checkpoint
from tankloc.modeling.registry import BACKBONE_NAMES
from tankloc import pipeline

log = logging.getLogger(__name__)


def _fail_with_json(exc: TanklocError) -> None:
    sys.stderr.write(json.dumps(exc.to_json_dict()) + "\n")
    sys.exit(1)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TanklocError as exc:
            _fail_with_json(exc)

    return wrapper


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info-level logging.")
def main(verbose: bool):
    """Train, compare, and serve tank-photo localization models."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command(name="ingest")
@click.option("--root", required=True, type=click.Path(), help="Class-per-directory image tree.")
@click.option("--device-table", type=click.Path(), default=None,
              help="CSV with filename_prefix,device_model,camera_spec columns.")
@click.option("--min-images", default=50, show_default=True,
              help="Drop classes with fewer images (0 disables).")
@click.option("--out", required=True, type=click.Path(), help="Manifest JSON output path.")
@handles_errors
def ingest_cmd(root, device_table, min_images, out):
    """Scan an image corpus into a manifest file."""
    manifest, report = ingest(root, device_table)
    if min_images > 0:
        manifest = filter_min_count(manifest, min_images)
    save_manifest(manifest, out)
    click.echo(
        f"ingested {len(manifest)} records, {len(manifest.classes)} classes "
        f"({len(report.skipped)} skipped) -> {out}"
    )


@main.command(name="split")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--k", default=10, show_default=True, help="Fold count.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Split plan JSON output path.")
@handles_errors
def split_cmd(manifest_path, k, seed, out):
    """Build a stratified k-fold split plan with validation carve-outs."""
    manifest = load_manifest(manifest_path)
    plan = stratified_kfold(manifest, k=k, seed=seed)
    save_split(plan, out)
    click.echo(f"split plan: k={k}, seed={seed}, {len(plan.fold_of)} records -> {out}")


def _parse_archs(arch: tuple[str, ...]) -> list[str]:
    if not arch or "all" in arch:
        return list(BACKBONE_NAMES)
    return list(arch)


def _parse_folds(folds: str, k: int) -> list[int]:
    if folds == "all":
        return list(range(k))
    return [int(f) for f in folds.split(",") if f != ""]


@main.command(name="train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--split", "split_path", required=True, type=click.Path())
@click.option("--arch", multiple=True, help="Backbone name, repeatable; 'all' for the registry.")
@click.option("--folds", default="all", show_default=True, help="Comma-separated fold indices or 'all'.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Runs directory.")
@click.option("--run-id", default=None, help="Run directory name (default: timestamp).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Run config JSON; flags override file values.")
@click.option("--pretrained/--no-pretrained", default=None,
              help="Initialize from provider weights (transfer learning).")
@click.option("--max-epochs", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Root training seed.")
@click.option("--no-augment", is_flag=True, help="Disable training augmentation.")
@handles_errors
def train_cmd(manifest_path, split_path, arch, folds, out_dir, run_id, config_path,
              pretrained, max_epochs, seed, no_augment):
    """Train selected architectures across folds; writes checkpoints + traces."""
    manifest = load_manifest(manifest_path)
    plan = load_split(split_path)
    file_cfg = load_run_config(config_path)
    overrides = {}
    if pretrained is not None:
        overrides["pretrained"] = pretrained
    if max_epochs is not None:
        overrides["max_epochs"] = max_epochs
    if seed is not None:
        overrides["seed"] = seed
    cfg = dataclasses.replace(file_cfg.train, **overrides)
    augment_cfg = None if no_augment else file_cfg.augment
    record = pipeline.run_training(
        manifest,
        plan,
        archs=_parse_archs(arch),
        folds=_parse_folds(folds, plan.k),
        out_dir=out_dir,
        cfg=cfg,
        augment_cfg=augment_cfg,
        run_id=run_id,
    )
    n = len(record.archs) * len(record.folds)
    click.echo(f"trained {n} (architecture, fold) pairs -> {Path(out_dir) / record.run_id}")


@main.command(name="evaluate")
@click.option("--run", "run_dir", required=True, type=click.Path(), help="Run directory.")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--split", "split_path", required=True, type=click.Path())
@click.option("--role", type=click.Choice(["test", "val"]), default="test", show_default=True,
              help="Which held-out records to score (val feeds calibration).")
@click.option("--out", required=True, type=click.Path(), help="Predictions JSONL output path.")
@handles_errors
def evaluate_cmd(run_dir, manifest_path, split_path, role, out):
    """Score each trained (architecture, fold) on its held-out records."""
    manifest = load_manifest(manifest_path)
    plan = load_split(split_path)
    path = pipeline.run_evaluation(run_dir, manifest, plan, out, role=role)
    click.echo(f"predictions -> {path}")


@main.command(name="stats")
@click.option("--predictions", required=True, type=click.Path(), help="Predictions JSONL.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Report directory.")
@click.option("--run", "run_dir", type=click.Path(), default=None,
              help="Run directory (for measured parameter counts).")
@click.option("--alpha", default=0.05, show_default=True, help="Significance level.")
@handles_errors
def stats_cmd(predictions, out_dir, run_dir, alpha):
    """ANOVA, Scott-Knott grouping, ROC curves, and the trade-off front."""
    params = pipeline.RunRecord.load(run_dir).params_by_arch if run_dir else None
    files = pipeline.run_stats(predictions, out_dir, params_by_arch=params, alpha=alpha)
    click.echo("\n".join(str(f) for f in files))


@main.command(name="calibrate")
@click.option("--predictions", required=True, type=click.Path(),
              help="Predictions JSONL from `evaluate --role val`.")
@click.option("--target-fpr", default=0.05, show_default=True)
@click.option("--arch", default=None, help="Architecture to calibrate (when several present).")
@click.option("--adjacency-boost", default=0.25, show_default=True)
@click.option("--enable-prior", is_flag=True, help="Turn the adjacency prior on in the policy.")
@click.option("--out", required=True, type=click.Path(), help="Policy JSON output path.")
@handles_errors
def calibrate_cmd(predictions, target_fpr, arch, adjacency_boost, enable_prior, out):
    """Pick per-class rejection thresholds from held-out scores."""
    policy = pipeline.run_calibration(
        predictions,
        target_fpr=target_fpr,
        adjacency_boost=adjacency_boost,
        prior_enabled=enable_prior,
        arch=arch,
    )
    save_policy(policy, out)
    click.echo(f"policy (global threshold {policy.global_threshold:.4f}) -> {out}")


@main.command(name="export")
@click.option("--checkpoint", "checkpoint_dir", required=True, type=click.Path(),
              help="Checkpoint directory (run_dir/arch/foldN).")
@click.option("--target", type=click.Choice(["embedded", "server"]), default="embedded",
              show_default=True)
@click.option("--out", required=True, type=click.Path())
@handles_errors
def export_cmd(checkpoint_dir, target, out):
    """Write a portable deployment artifact from a checkpoint."""
    ckpt = load_checkpoint(checkpoint_dir)
    path = export_checkpoint(ckpt, target, out)
    click.echo(f"exported {ckpt.backbone} ({target}) -> {path}")


@main.command(name="serve")
@click.option("--checkpoint", envvar="TANKLOC_CHECKPOINT", required=True, type=click.Path(),
              help="Checkpoint directory or embedded artifact [env: TANKLOC_CHECKPOINT].")
@click.option("--map", "map_path", envvar="TANKLOC_MAP", required=True, type=click.Path(),
              help="Region map JSON [env: TANKLOC_MAP].")
@click.option("--policy", "policy_path", type=click.Path(), default=None,
              help="Decision policy JSON (default: threshold 0.5, prior off).")
@click.option("--host", default="0.0.0.0", show_default=True)
@click.option("--port", envvar="TANKLOC_PORT", default=8000, show_default=True,
              help="[env: TANKLOC_PORT]")
@handles_errors
def serve_cmd(checkpoint, map_path, policy_path, host, port):
    """Serve the localization API over HTTP."""
    import uvicorn

    from tankloc.localizer.decision import DecisionPolicy
    from tankloc.service.app import CheckpointPredictor, ServiceState, create_app

    state = ServiceState(
        predictor=CheckpointPredictor(checkpoint),
        region_map=load_region_map(map_path),
        policy=load_policy(policy_path) if policy_path else DecisionPolicy(),
    )
    app = create_app(state)
    uvicorn.run(app, host=host, port=int(port))


if __name__ == "__main__":
    main()
