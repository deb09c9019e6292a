"""Command-line interface.

Subcommands cover the whole pipeline: tile, harvest, mix, split, stats, train,
calibrate, infer, import-map, eval, eval-regions, and serve (the review
service). Run ``tilmapper <subcommand> --help`` for per-command options.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import ScoredSet, apply_threshold, youden_threshold
from .errors import TilmapperError
from .evaluation import (
    RegionRecord,
    evaluate_models,
    final_label_from_ratings,
    region_count,
    region_distribution,
    write_distribution_files,
)
from .manifests import (
    AnnotationManifest,
    MixturePolicy,
    assemble_mixture,
    harvest_semi_auto,
    manifest_stats,
    split_by_patient,
)
from .maps import import_grayscale_map, infer_map, read_map, write_map
from .models import (
    AugmentationConfig,
    FilePatchLoader,
    ModelConfig,
    load_checkpoint,
    resolve_preset,
    save_checkpoint,
    train,
)
from .synthetic import write_patch_png
from .tiling import (
    CancerType,
    SlideRef,
    TissueFilterParams,
    build_grid,
    extract_patch,
    open_pixel_source,
    tissue_filter,
)


def _slide_from_args(args) -> tuple[SlideRef, "ArraySource"]:  # noqa: F821
    source = open_pixel_source(args.slide)
    slide_id = args.slide_id or Path(args.slide).stem
    slide = SlideRef(
        slide_id=slide_id,
        patient_id=args.patient_id or slide_id,
        cancer_type=args.cancer_type or "LUAD",
        width_px=source.width_px,
        height_px=source.height_px,
        pixel_source=str(args.slide),
    )
    return slide, source


def cmd_tile(args) -> int:
    slide, source = _slide_from_args(args)
    grid = build_grid(slide, patch_px=args.patch_px)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = TissueFilterParams() if args.tissue_filter == "on" else None
    n_written = 0
    for gx, gy in grid:
        patch = extract_patch(source, grid, gx, gy)
        if params is not None and not tissue_filter(patch, params):
            continue
        write_patch_png(patch.pixels, out / f"{slide.slide_id}_{gx}_{gy}.png")
        n_written += 1
    meta = {
        "slide_id": slide.slide_id,
        "patch_px": grid.patch_px,
        "n_cols": grid.n_cols,
        "n_rows": grid.n_rows,
        "origin_offset": list(grid.origin_offset_px),
        "microns_per_pixel": slide.microns_per_pixel,
    }
    (out / "grid.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {n_written} patches and grid.json to {out}")
    return 0


def cmd_harvest(args) -> int:
    til_map = read_map(args.map)
    records = harvest_semi_auto(
        til_map,
        threshold=args.threshold,
        n_samples=args.n,
        rng_seed=args.seed,
        stratified=args.stratified,
        patient_id=args.patient_id,
        cancer_type=args.cancer_type,
    )
    manifest = AnnotationManifest(name=Path(args.out).stem, records=records)
    manifest.save(args.out)
    print(f"harvested {len(records)} records -> {args.out}")
    return 0


def cmd_mix(args) -> int:
    manual = AnnotationManifest.load(args.manual)
    semi = AnnotationManifest.load(args.semi)
    caps = None
    if args.policy:
        policy_dict = json.loads(Path(args.policy).read_text())
        caps = policy_dict.pop("semi_per_type_cap", None)
        policy = MixturePolicy.from_dict(policy_dict)
    else:
        policy = MixturePolicy()
    mixed = assemble_mixture(
        manual, semi, policy, name=Path(args.out).stem, semi_per_type_cap=caps
    )
    mixed.save(args.out)
    print(f"mixed {len(manual)} manual + {len(semi)} semi -> {len(mixed)} records at {args.out}")
    return 0


def cmd_split(args) -> int:
    manifests = [AnnotationManifest.load(p) for p in args.manifests]
    train_m, test_m = split_by_patient(manifests, args.test_frac, args.seed)
    train_m.save(args.out_train)
    test_m.save(args.out_test)
    print(
        f"split {sum(len(m) for m in manifests)} records into "
        f"{len(train_m)} train ({len(train_m.patient_ids)} patients) / "
        f"{len(test_m)} test ({len(test_m.patient_ids)} patients)"
    )
    return 0


def cmd_stats(args) -> int:
    stats = manifest_stats(AnnotationManifest.load(args.manifest))
    print(json.dumps(stats.to_dict(), indent=2))
    return 0


def cmd_train(args) -> int:
    preset = resolve_preset(args.preset)
    config = ModelConfig(
        architecture=preset.architecture,
        pretrained_weights=args.pretrained,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_steps=args.steps,
        rng_seed=args.seed,
    )
    aug = AugmentationConfig(rng_seed=args.seed)
    manifest = AnnotationManifest.load(args.manifest)
    loader = FilePatchLoader(args.patch_root)
    val = AnnotationManifest.load(args.val_manifest) if args.val_manifest else None
    clf = train(config, aug, manifest, patch_loader=loader, val_manifest=val)
    save_checkpoint(clf, args.out)
    last = [row for row in clf.training_log_ if "loss" in row][-1]
    print(
        f"trained {preset.name} ({preset.architecture.value}) on {len(manifest)} "
        f"records for {last['step']} steps (final loss {last['loss']:.4f}) -> {args.out}"
    )
    return 0


def cmd_calibrate(args) -> int:
    scores, labels = [], []
    with open(args.scores, newline="") as fh:
        for row in csv.DictReader(fh):
            scores.append(float(row["score"]))
            labels.append(int(row["label"]))
    method = "eer" if args.method == "eer" else "youden-j"
    result = youden_threshold(
        ScoredSet(scores=np.array(scores), labels=np.array(labels)),
        method=method,
        validation_manifest_name=Path(args.scores).name,
    )
    payload = {
        "chosen_threshold": result.chosen_threshold,
        "criterion_value": result.criterion_value,
        "auc": result.roc.auc,
        "method": result.method,
        "validation_set": result.validation_manifest_name,
        "roc": [
            {"threshold": p.threshold, "fpr": p.fpr, "fnr": p.fnr, "tpr": p.tpr}
            for p in result.roc.points
        ],
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(
        f"threshold {result.chosen_threshold:.4f} "
        f"(|FPR-FNR| = {result.criterion_value:.4f}, AUC = {result.roc.auc:.4f}) -> {args.out}"
    )
    return 0


def cmd_infer(args) -> int:
    slide, source = _slide_from_args(args)
    grid = build_grid(slide, patch_px=args.patch_px)
    model = load_checkpoint(args.model)
    params = TissueFilterParams() if args.tissue_filter == "on" else None
    til_map = infer_map(
        source,
        model,
        grid,
        tissue_params=params,
        batch_size=args.batch_size,
        cancer_type=args.cancer_type,
        patient_id=args.patient_id or slide.patient_id,
        pixel_source_path=str(args.slide),
    )
    if args.binary:
        write_map(apply_threshold(til_map, args.threshold), args.out)
        kind = f"binary map (t={args.threshold})"
    else:
        write_map(til_map, args.out)
        kind = "probability map"
    print(f"wrote {grid.n_rows}x{grid.n_cols} {kind} -> {args.out}")
    return 0


def cmd_import_map(args) -> int:
    til_map = import_grayscale_map(
        args.png,
        slide_id=args.slide_id,
        patch_px=args.patch_px,
        channel=args.channel,
        cancer_type=args.cancer_type,
        patient_id=args.patient_id,
    )
    write_map(til_map, args.out)
    print(f"imported {til_map.n_rows}x{til_map.n_cols} map -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    thresholds = json.loads(Path(args.thresholds).read_text())
    models = {Path(p).name: load_checkpoint(p) for p in args.models}
    manifest = AnnotationManifest.load(args.test)
    report = evaluate_models(
        models, manifest, thresholds, patch_loader=FilePatchLoader(args.patch_root)
    )
    report.to_json(args.out)
    for name, row in report.per_model.items():
        f1 = "n/a" if row["f1"] is None else f"{row['f1']:.3f}"
        auc = "n/a" if row["auc"] is None else f"{row['auc']:.3f}"
        print(f"{name}: f1 {f1}, accuracy {row['accuracy']:.3f}, auc {auc}")
    print(f"report -> {args.out}")
    return 0


def cmd_eval_regions(args) -> int:
    model = load_checkpoint(args.model)
    regions_dir = Path(args.regions)
    records = []
    with open(args.labels, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "region_id":
                continue
            region_id, ratings = row[0], [r for r in row[1:] if r.strip()]
            pixels = open_pixel_source(regions_dir / f"{region_id}.png").read_region(
                0, 0, 800, 800
            )
            count = region_count(model, pixels, args.threshold)
            records.append(
                RegionRecord(
                    region_id=region_id,
                    expert_labels=ratings,
                    predicted_count=count,
                    final_label=final_label_from_ratings(ratings),
                )
            )
    dist = region_distribution(records)
    out = Path(args.out)
    write_distribution_files(dist, out, out.with_suffix(".quantiles.json"))
    for cls_name, summary in dist.items():
        print(f"{cls_name}: n={len(summary.counts)} median={summary.median}")
    print(f"plot data -> {out} and {out.with_suffix('.quantiles.json')}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.store, preview_max_side=args.preview_budget, ui_dir=args.ui
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tilmapper", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def slide_args(p):
        p.add_argument("--slide", required=True, help="path to slide image")
        p.add_argument("--slide-id", default=None)
        p.add_argument("--patient-id", default=None)
        p.add_argument("--cancer-type", default=None,
                       choices=[c.value for c in CancerType])
        p.add_argument("--patch-px", type=int, default=100)

    p = sub.add_parser("tile", help="partition a slide into patch PNGs")
    slide_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--tissue-filter", choices=["on", "off"], default="off")
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("harvest", help="sample weak annotations from a thresholded map")
    p.add_argument("--map", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--n", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--patient-id", default=None)
    p.add_argument("--cancer-type", default=None, choices=[c.value for c in CancerType])
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("mix", help="combine manual and semi-automatic manifests")
    p.add_argument("--manual", required=True)
    p.add_argument("--semi", required=True)
    p.add_argument("--policy", default=None, help="policy JSON file (default policy if omitted)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("split", help="patient-level train/test split")
    p.add_argument("--manifests", nargs="+", required=True)
    p.add_argument("--test-frac", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", default="train.jsonl")
    p.add_argument("--out-test", default="test.jsonl")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="label/source/type counts of a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a patch classifier from a manifest")
    p.add_argument("--preset", required=True,
                   help="vgg-/incep- manual|semi|all|mix, or compact-ref")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pretrained", default=None)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.0005)
    p.add_argument("--val-manifest", default=None)
    p.add_argument("--patch-root", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="select the fixed decision threshold")
    p.add_argument("--scores", required=True, help="CSV with score,label columns")
    p.add_argument("--method", choices=["eer", "youden-j"], default="eer")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("infer", help="run a model over a slide to produce a map")
    slide_args(p)
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--out", required=True)
    p.add_argument("--tissue-filter", choices=["on", "off"], default="off")
    p.add_argument("--binary", action="store_true")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("import-map", help="ingest a grayscale image as a probability map")
    p.add_argument("--png", required=True)
    p.add_argument("--slide-id", required=True)
    p.add_argument("--patch-px", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--channel", type=int, default=None)
    p.add_argument("--cancer-type", default=None, choices=[c.value for c in CancerType])
    p.add_argument("--patient-id", default=None)
    p.set_defaults(func=cmd_import_map)

    p = sub.add_parser("eval", help="patch-level evaluation of one or more models")
    p.add_argument("--models", nargs="+", required=True, help="checkpoint directories")
    p.add_argument("--test", required=True)
    p.add_argument("--thresholds", required=True, help="JSON {model_name: threshold}")
    p.add_argument("--out", required=True)
    p.add_argument("--patch-root", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-regions", help="region-level low/medium/high aggregation")
    p.add_argument("--model", required=True)
    p.add_argument("--regions", required=True, help="directory of <region_id>.png files")
    p.add_argument("--labels", required=True, help="CSV: region_id,rating[,rating...]")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_regions)

    p = sub.add_parser("serve", help="run the threshold-review HTTP service")
    p.add_argument("--store", default=os.environ.get("TILMAPPER_STORE", "."),
                   help="map store directory (env TILMAPPER_STORE)")
    p.add_argument("--host", default=os.environ.get("TILMAPPER_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("TILMAPPER_PORT", "8008")))
    p.add_argument("--preview-budget", type=int,
                   default=int(os.environ.get("TILMAPPER_PREVIEW_BUDGET", "200")),
                   help="max preview cells per side")
    p.add_argument("--ui", default=os.environ.get("TILMAPPER_UI") or None,
                   help="directory with the built browser UI to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TilmapperError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
