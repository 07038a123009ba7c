"""Command-line pipeline: extract, gsf, train, eval, attack, amplify, synth.

Every command is deterministic given its inputs, flags and --seed; reports
embed the seed and a hash of the run configuration.  Exit codes: 0 success,
1 usage error, 2 data error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import attacks, features, gsf_analysis as gsf_mod, models, synth
from .errors import DataError, ForensicsError, NoSignalError, UsageError
from .image_io import LUMINANCE_MODES, decode, write_png
from .manifests import DatasetManifest, ManifestEntry, RunConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _run_config(args, **overrides) -> RunConfig:
    fields = dict(
        seed=getattr(args, "seed", 0),
        train_fraction=getattr(args, "train_fraction", 0.10),
        folds=getattr(args, "folds", 5),
        k=getattr(args, "k", 3000),
        classifier=getattr(args, "classifier", "boosted"),
        normalization=getattr(args, "normalization", "joint"),
        luminance=getattr(args, "luminance", "bt601"),
        binary_collapse=getattr(args, "binary_collapse", False),
        real_label=getattr(args, "real_label", "real"),
    )
    fields.update(overrides)
    return RunConfig(**fields)


# ---------------------------------------------------------------------------
# extract


def _extract_one(entry: ManifestEntry, luminance: str):
    img = decode(entry.path, luminance=luminance)
    vec = features.betas_for_image(img, source_id=entry.path)
    return vec, entry.label


def cmd_extract(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    if not manifest.entries:
        raise UsageError(f"manifest {args.manifest} has no entries")
    workers = args.workers or min(8, os.cpu_count() or 1)

    results: list = [None] * len(manifest.entries)
    errors = []
    def work(i_entry):
        i, entry = i_entry
        try:
            return i, _extract_one(entry, args.luminance), None
        except Exception as exc:
            return i, None, {"path": entry.path, "error": str(exc)}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, ok, err in pool.map(work, enumerate(manifest.entries)):
            if err is not None:
                errors.append(err)
            else:
                results[i] = ok

    kept = [r for r in results if r is not None]
    if not kept:
        raise DataError("no image in the manifest could be processed")
    vectors = [v for v, _ in kept]
    labels = [l for _, l in kept]
    features.save_features_csv(args.out, vectors, labels)
    if args.jsonl:
        features.save_features_jsonl(args.jsonl, vectors, labels)
    if errors:
        _write_json(str(args.out) + ".errors.json", {"errors": errors})
        print(f"extract: {len(kept)} rows, {len(errors)} failures", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"extract: {len(kept)} rows -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gsf


def _single_label(labels, fallback: str) -> str:
    uniq = sorted(set(labels))
    return uniq[0] if len(uniq) == 1 else fallback


def _load_matrix(path) -> features.BetaMatrix:
    vectors, labels = features.load_features_csv(path)
    label = _single_label(labels, Path(path).stem)
    return features.build_matrix(vectors, label=label)


def _subsample(matrix: features.BetaMatrix, k: int, seed: int) -> features.BetaMatrix:
    if matrix.k <= k:
        return matrix
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(matrix.k, size=k, replace=False))
    return features.BetaMatrix(
        values=matrix.values[idx],
        label=matrix.label,
        source_ids=tuple(matrix.source_ids[i] for i in idx) if matrix.source_ids else (),
    )


def _chi2_svg(chi2, gsf_index: int) -> str:
    width, height, margin = 700, 260, 30
    bar_w = (width - 2 * margin) / 63
    top = max(max(chi2), 1e-12)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, v in enumerate(chi2):
        h = (height - 2 * margin) * v / top
        x = margin + i * bar_w
        y = height - margin - h
        color = "#c0392b" if i + 1 == gsf_index else "#2c3e50"
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w * 0.8:.1f}" height="{h:.1f}" fill="{color}"/>'
        )
    for c in range(1, 64, 8):
        x = margin + (c - 1) * bar_w
        parts.append(f'<text x="{x:.1f}" y="{height - 10}" font-size="10">{c}</text>')
    parts.append(
        f'<text x="{margin}" y="{margin - 10}" font-size="11">chi-square per AC coefficient '
        f"(peak at {gsf_index})</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_gsf(args) -> int:
    config = _run_config(args)
    a = _load_matrix(args.features_a)
    b = _load_matrix(args.features_b)
    k = min(a.k, b.k, config.k)
    a = _subsample(a, k, config.seed)
    b = _subsample(b, k, config.seed)
    na, nb = features.normalize_columns((a, b), mode=config.normalization)
    try:
        report = gsf_mod.gsf_report(na, nb, seed=config.seed)
    except NoSignalError as exc:
        payload = {
            "set_a": a.label,
            "set_b": b.label,
            "K": k,
            "seed": config.seed,
            "config_hash": config.config_hash(),
            "error": "no-signal",
            "detail": str(exc),
        }
        _write_json(args.out, payload)
        print(f"gsf: no signal between {a.label} and {b.label}", file=sys.stderr)
        return EXIT_DATA
    report["config_hash"] = config.config_hash()
    report["normalization"] = config.normalization
    _write_json(args.out, report)
    if args.svg:
        Path(args.svg).write_text(_chi2_svg(report["chi2"], report["gsf"]) + "\n")
    print(f"gsf: {a.label} vs {b.label} -> {report['gsf']} (runner-up {report['runner_up']})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / eval


def _collapse(labels, real_label: str):
    return [l if l == real_label else "fake" for l in labels]


def _feature_table(path, config: RunConfig):
    vectors, labels = features.load_features_csv(path)
    if not vectors:
        raise DataError(f"{path}: no feature rows")
    x = np.stack([v.betas for v in vectors])
    if config.binary_collapse:
        labels = _collapse(labels, config.real_label)
    return x, labels


def _pick_logistic_feature(x, labels, config: RunConfig) -> int:
    # chi-square is directional; probe on whichever direction peaks harder
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise DataError(f"logistic probe needs exactly 2 classes, got {classes}")
    split = [
        features.BetaMatrix(values=x[np.array([l == c for l in labels])], label=c)
        for c in classes
    ]
    k = min(m.k for m in split)
    pair = tuple(_subsample(m, k, config.seed) for m in split)
    na, nb = features.normalize_columns(pair, mode=config.normalization)
    forward = gsf_mod.gsf(na, nb, seed=config.seed)
    reverse = gsf_mod.gsf(nb, na, seed=config.seed)
    if reverse.chi2.max() > forward.chi2.max():
        return reverse.gsf
    return forward.gsf


def _train_one(x, labels, config: RunConfig, feature_index: int | None):
    if config.classifier == "logistic":
        idx = feature_index if feature_index is not None else _pick_logistic_feature(x, labels, config)
        model = models.train_logistic(x[:, idx - 1], labels, feature_index=idx - 1)
    else:
        model = models.train_boosted(x, labels)
    return model


def cmd_train(args) -> int:
    config = _run_config(args)
    x, labels = _feature_table(args.features, config)
    feature_index = args.feature
    if config.classifier == "logistic" and feature_index is None:
        feature_index = _pick_logistic_feature(x, labels, config)
        print(f"train: discriminating coefficient {feature_index}")

    folds = config.folds
    fold_reports = []
    first_model = None
    for fold in range(folds):
        tr, te = models.stratified_fold_split(labels, config.train_fraction, config.seed, fold=fold)
        model = _train_one(x[tr], [labels[i] for i in tr], config, feature_index)
        if first_model is None:
            first_model = model
        report = models.evaluate(model, x[te], [labels[i] for i in te])
        report.fold_count = folds
        fold_reports.append(report)

    models.save_model(args.out, first_model)
    accs = [r.accuracy for r in fold_reports]
    payload = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "classifier": config.classifier,
        "folds": folds,
        "train_fraction": config.train_fraction,
        "fold_reports": [r.to_dict() for r in fold_reports],
        "mean_accuracy": float(np.mean(accs)),
        "std_accuracy": float(np.std(accs)),
    }
    if feature_index is not None:
        payload["feature_index"] = feature_index
    if args.report:
        _write_json(args.report, payload)
    print(fold_reports[0].to_text())
    print(f"train: mean accuracy {payload['mean_accuracy']:.2f} "
          f"(std {payload['std_accuracy']:.2f} over {folds} folds) -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _run_config(args)
    model = models.load_model(args.model)
    vectors, labels = features.load_features_csv(args.features)
    if not vectors:
        raise DataError(f"{args.features}: no feature rows")
    x = np.stack([v.betas for v in vectors])
    predicted, _ = models.predict(model, x)
    if config.binary_collapse:
        y_true = _collapse(labels, config.real_label)
        y_pred = _collapse(predicted, config.real_label)
        classes = sorted(set(y_true) | set(y_pred))
        report = models.evaluate_predictions(y_true, y_pred, classes)
    else:
        report = models.evaluate_predictions(labels, predicted, model.class_labels)
    payload = report.to_dict()
    payload["config_hash"] = config.config_hash()
    payload["seed"] = config.seed
    _write_json(args.out, payload)
    print(report.to_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack


def cmd_attack(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    if args.grid:
        specs = attacks.full_grid(seed=args.seed)
    else:
        if not args.attacks:
            raise UsageError("give --attacks or --grid")
        specs = [attacks.AttackSpec.parse(s, seed=args.seed) for s in args.attacks.split(",") if s.strip()]
    new_entries, provenance, errors = attacks.augment_dataset(
        manifest.entries, specs, args.out_dir, seed=args.seed, luminance=args.luminance
    )
    entries = list(manifest.entries) + [
        ManifestEntry(path=p, label=l, split=s) for p, l, s in new_entries
    ]
    out = DatasetManifest(
        name=f"{manifest.name}-attacked",
        entries=entries,
        labels=manifest.labels,
        created_at=manifest.created_at,
    )
    out.save(args.out_manifest)
    if provenance:
        attacks.write_provenance(Path(args.out_dir) / "provenance.jsonl", provenance)
    if errors:
        _write_json(str(args.out_manifest) + ".errors.json", {"errors": errors})
        print(f"attack: {len(new_entries)} outputs, {len(errors)} failures", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"attack: {len(new_entries)} attacked images -> {args.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# amplify


def cmd_amplify(args) -> int:
    config = _run_config(args)
    img = decode(args.image, luminance=config.luminance)
    params = gsf_mod.AmplificationParams(k1=args.k1, k2=args.k2)
    amplified = gsf_mod.amplify(img, args.gsf, params)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    rendered = np.clip(np.rint(amplified), 0, 255)
    write_png(f"{prefix}_amplified.png", rendered)
    write_png(f"{prefix}_spectrum_original.png", gsf_mod.fourier_magnitude(img))
    write_png(f"{prefix}_spectrum_amplified.png", gsf_mod.fourier_magnitude(rendered))
    payload = {
        "image": str(args.image),
        "gsf": args.gsf,
        "k1": args.k1,
        "k2": args.k2,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "peak_ratio_original": gsf_mod.spectral_peak_ratio(img),
        "peak_ratio_amplified": gsf_mod.spectral_peak_ratio(rendered),
    }
    _write_json(f"{prefix}_report.json", payload)
    print(f"amplify: coefficient {args.gsf} -> {prefix}_amplified.png "
          f"(peak ratio {payload['peak_ratio_amplified']:.1f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    class_specs = []
    for item in args.classes.split(","):
        item = item.strip()
        if not item:
            continue
        if item.lower() == "clean":
            class_specs.append(("clean", None))
        else:
            try:
                coeff = int(item)
            except ValueError as exc:
                raise UsageError(f"class {item!r} is neither 'clean' nor a coefficient index") from exc
            class_specs.append((f"inject{coeff}", coeff))
    if not class_specs:
        raise UsageError("--classes is empty")

    entries = []
    for idx, (label, coeff) in enumerate(class_specs):
        class_seed = int(np.random.SeedSequence([args.seed, idx]).generate_state(1)[0])
        spec = None
        if coeff is not None:
            spec = synth.ArtifactSpec(
                target_coefficient=coeff, strength=args.strength, seed=class_seed
            )
        images = synth.generate_corpus(args.count, spec, size=args.size, seed=class_seed)
        paths = synth.write_corpus(out_dir / label, images, label, spec=spec)
        entries.extend(ManifestEntry(path=p, label=label) for p in paths)

    manifest = DatasetManifest(
        name=out_dir.name,
        entries=entries,
        labels=tuple(label for label, _ in class_specs),
    )
    manifest.save(args.manifest or out_dir / "manifest.json")
    print(f"synth: {len(entries)} images in {len(class_specs)} classes -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dctforensics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("extract", help="manifest -> beta feature CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jsonl", default=None, help="also write a JSON-lines copy")
    p.add_argument("--luminance", choices=LUMINANCE_MODES, default="bt601")
    p.add_argument("--workers", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("gsf", help="discriminating frequency of two feature files")
    p.add_argument("--features-a", required=True)
    p.add_argument("--features-b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", default=None, help="write a chi-square bar chart")
    p.add_argument("--k", type=int, default=3000)
    p.add_argument("--normalization", choices=features.NORMALIZATION_MODES, default="joint")
    common(p)
    p.set_defaults(func=cmd_gsf)

    p = sub.add_parser("train", help="train a classifier on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--classifier", choices=("boosted", "logistic"), default="boosted")
    p.add_argument("--feature", type=int, default=None,
                   help="AC coefficient for the logistic probe (default: auto)")
    p.add_argument("--train-fraction", type=float, default=0.10)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--normalization", choices=features.NORMALIZATION_MODES, default="joint")
    p.add_argument("--binary-collapse", action="store_true")
    p.add_argument("--real-label", default="real")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--binary-collapse", action="store_true")
    p.add_argument("--real-label", default="real")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attack", help="write attacked variants of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--attacks", default=None, help="comma list, e.g. 'jpeg:50,mirror:H'")
    p.add_argument("--grid", action="store_true", help="the full 17-attack grid")
    p.add_argument("--luminance", choices=LUMINANCE_MODES, default="bt601")
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("amplify", help="render an image with one coefficient amplified")
    p.add_argument("--image", required=True)
    p.add_argument("--gsf", type=int, required=True)
    p.add_argument("--k1", type=float, default=0.1)
    p.add_argument("--k2", type=float, default=100.0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--luminance", choices=LUMINANCE_MODES, default="bt601")
    common(p)
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--classes", required=True, help="comma list of 'clean' or coefficient indices")
    p.add_argument("--strength", type=float, default=2.0)
    p.add_argument("--size", type=int, default=synth.DEFAULT_SIZE)
    p.add_argument("--manifest", default=None)
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ForensicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
