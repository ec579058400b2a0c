"""Command-line interface.

Subcommands mirror the pipeline: preprocess, spectrum, preview, synth,
train-cnn, ga-select, eval, build-models, serve.
"""
from __future__ import annotations

import argparse
import json
import logging
import pathlib
import sys

import numpy as np

from . import bandga, classifiers as clf, cnn, evaluation, preprocess, synth
from .cube import Stage
from .hsio import parse_hsc, write_hsc
from .preprocess import (CalibrationPair, TrimSpec, central_spectrum,
                         flat_field, rgb_composite, spatial_resize,
                         spectral_bin, trim_bands, wavelength_of_band)


def _read_cube(path: str, stage: Stage) -> "HyperCube":
    return parse_hsc(pathlib.Path(path).read_bytes(), stage=stage)


def _parse_dims(text: str) -> tuple[int, int]:
    rows, cols = text.lower().split("x")
    return int(rows), int(cols)


def _parse_bands(text: str) -> tuple[int, ...]:
    return tuple(int(b) for b in text.split(","))


def cmd_preprocess(args) -> int:
    raw = _read_cube(args.raw, Stage.RAW)
    cal = CalibrationPair(white=_read_cube(args.white, Stage.RAW),
                          dark=_read_cube(args.dark, Stage.RAW))
    cube = flat_field(raw, cal)
    cube = spectral_bin(cube, args.ks)
    if args.resize:
        cube = spatial_resize(cube, _parse_dims(args.resize))
    if args.trim:
        front, back = (int(v) for v in args.trim.split(","))
        cube = trim_bands(cube, TrimSpec(drop_front=front, drop_back=back))
    pathlib.Path(args.out).write_bytes(write_hsc(cube))
    print(f"wrote {args.out}: {cube.rows}x{cube.cols}x{cube.bands} "
          f"stage={cube.stage.name.lower()} "
          f"degenerate_pixels={cube.provenance.get('degenerate_pixels', 0)}")
    return 0


def cmd_spectrum(args) -> int:
    cube = _read_cube(args.cube, Stage.TRIMMED)
    values = central_spectrum(cube)
    if cube.wavelengths_nm is not None:
        wavelengths = list(cube.wavelengths_nm)
    elif cube.bands == preprocess.TRIMMED_BANDS:
        wavelengths = list(preprocess.trimmed_wavelengths())
    else:
        wavelengths = list(range(1, cube.bands + 1))
    doc = {"wavelengths_nm": [float(w) for w in wavelengths],
           "reflectance": [float(v) for v in values]}
    if args.json:
        print(json.dumps(doc))
    else:
        for w, v in zip(doc["wavelengths_nm"], doc["reflectance"]):
            print(f"{w:10.2f} {v:8.5f}")
    return 0


def cmd_preview(args) -> int:
    from PIL import Image

    cube = _read_cube(args.cube, Stage.TRIMMED)
    rgb = rgb_composite(cube)
    Image.fromarray(rgb, mode="RGB").save(args.png)
    print(f"wrote {args.png}: {cube.rows}x{cube.cols} PNG")
    return 0


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n_per_class=args.n // 2,
        signal_bands=_parse_bands(args.bands),
        signal_delta=args.delta,
        noise_sigma=args.sigma,
        seed=args.seed)
    samples = synth.generate(spec)
    manifest = synth.write_dataset(samples, args.out)
    print(f"wrote {len(samples)} cubes + {manifest}")
    return 0


def cmd_train_cnn(args) -> int:
    samples = synth.read_dataset(args.data)
    from .data import stack_samples

    X, y = stack_samples(samples)
    bands = _parse_bands(args.bands)
    model, history = cnn.train(
        None, cnn.TrainConfig(seed=args.seed),
        X=bandga.slice_bands(X, bands), y=y)
    pathlib.Path(args.out).write_bytes(cnn.save_cnn(model))
    best = history.best
    print(f"wrote {args.out}: best epoch {best.epoch} "
          f"val_loss={best.val_loss:.4f} val_acc={best.val_acc:.3f}")
    return 0


def cmd_ga_select(args) -> int:
    samples = synth.read_dataset(args.data)
    cfg = bandga.GaConfig(population=args.pop, generations=args.gens,
                          crossover_prob=args.cx, mutation_prob=args.mut,
                          tournament_size=args.tourn, seed=args.seed,
                          workers=args.workers)
    best, history = bandga.run_ga(samples, cfg)
    genes = sorted(best.genes)
    doc = {
        "genes": genes,
        "wavelengths_nm": [wavelength_of_band(g) for g in genes],
        "fitness": best.fitness,
        "history": [
            {"generation": r.generation, "best": r.best_fitness,
             "mean": r.mean_fitness, "min": r.min_fitness,
             "best_so_far": r.best_so_far,
             "best_genes": sorted(r.best.genes)}
            for r in history.records
        ],
        "evaluations": history.evaluations,
        "cache_hits": history.cache_hits,
    }
    pathlib.Path(args.out).write_text(json.dumps(doc, indent=2))
    print(f"wrote {args.out}: bands {genes} fitness={best.fitness:.3f} "
          f"({history.evaluations} evaluations, {history.cache_hits} cache hits)")
    return 0


def cmd_eval(args) -> int:
    samples = synth.read_dataset(args.data)
    bands_doc = json.loads(pathlib.Path(args.bands).read_text())
    genes = tuple(bands_doc["genes"]) if isinstance(bands_doc, dict) else tuple(bands_doc)
    if args.kinds == "all":
        kinds = list(clf.ALL_KINDS)
    else:
        kinds = [clf.ClassifierKind(k) for k in args.kinds.split(",")]
    report = evaluation.run_cv(samples, genes, kinds,
                               evaluation.CvConfig(seed=args.seed))
    out = pathlib.Path(args.out)
    out.write_text(evaluation.report_to_json(report))
    csv_path = out.with_suffix(".csv")
    csv_path.write_text(evaluation.report_to_csv(report))
    print(f"wrote {out} and {csv_path}")
    for kind, agg in report.aggregates.items():
        print(f"  {kind:18s} accuracy mean={agg['accuracy']['mean']:.3f} "
              f"min={agg['accuracy']['min']:.3f} max={agg['accuracy']['max']:.3f}")
    return 0


def cmd_build_models(args) -> int:
    from .data import stack_samples
    from .service.registry import register_model

    samples = synth.read_dataset(args.data)
    X, y = stack_samples(samples)
    bands_doc = json.loads(pathlib.Path(args.bands).read_text())
    genes = tuple(sorted(bands_doc["genes"] if isinstance(bands_doc, dict) else bands_doc))
    Xb = bandga.slice_bands(X, genes)
    model, history = cnn.train(None, cnn.TrainConfig(seed=args.seed), X=Xb, y=y)
    feats = cnn.extract_features(model, list(Xb))
    kinds = (list(clf.ALL_KINDS) if args.kinds == "all"
             else [clf.ClassifierKind(k) for k in args.kinds.split(",")])
    for kind in kinds:
        trained = clf.fit(kind, feats, y, seed=args.seed)
        model_id = kind.value.lower()
        entry = register_model(args.out, model_id, kind, genes, model, trained)
        print(f"registered {entry.model_id} ({entry.kind}) bands={list(entry.bands)}")
    print(f"manifest at {pathlib.Path(args.out) / 'manifest.json'} "
          f"(cnn val_acc={history.best.val_acc:.3f})")
    return 0


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import ServiceConfig, create_app

    models_dir = os.environ.get("LEAFSPEC_MODELS", args.models)
    port = int(os.environ.get("LEAFSPEC_PORT", args.port))
    app = create_app(ServiceConfig(models_dir=models_dir,
                                   max_upload_mb=args.max_upload,
                                   spill_dir=args.spill_dir))
    uvicorn.run(app, host=args.host, port=port, log_level="info")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s %(message)s")
    parser = argparse.ArgumentParser(prog="leafspec",
                                     description="Hyperspectral leaf SDS diagnosis pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="flat-field, bin, resize, trim a raw cube")
    p.add_argument("--raw", required=True)
    p.add_argument("--white", required=True)
    p.add_argument("--dark", required=True)
    p.add_argument("--ks", type=int, default=3)
    p.add_argument("--resize", default="125x100")
    p.add_argument("--trim", default="6,9")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("spectrum", help="central-pixel spectrum of a cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("preview", help="RGB composite PNG of a cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--png", required=True)
    p.set_defaults(fn=cmd_preview)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--bands", default="21,32,60,79,97")
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--sigma", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train-cnn", help="train the CNN feature extractor")
    p.add_argument("--data", required=True)
    p.add_argument("--bands", default="21,32,60,79,97")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train_cnn)

    p = sub.add_parser("ga-select", help="genetic-algorithm band selection")
    p.add_argument("--data", required=True)
    p.add_argument("--pop", type=int, default=12)
    p.add_argument("--gens", type=int, default=8)
    p.add_argument("--cx", type=float, default=0.7)
    p.add_argument("--mut", type=float, default=0.2)
    p.add_argument("--tourn", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ga_select)

    p = sub.add_parser("eval", help="stratified k-fold evaluation")
    p.add_argument("--data", required=True)
    p.add_argument("--bands", required=True, help="bands.json from ga-select")
    p.add_argument("--kinds", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("build-models", help="train and register service models")
    p.add_argument("--data", required=True)
    p.add_argument("--bands", required=True)
    p.add_argument("--kinds", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="models directory")
    p.set_defaults(fn=cmd_build_models)

    p = sub.add_parser("serve", help="run the HTTP diagnosis service")
    p.add_argument("--models", default="models")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-upload", type=int, default=256)
    p.add_argument("--spill-dir", default=None)
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
