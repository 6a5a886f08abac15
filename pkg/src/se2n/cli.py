"""Command-line surface: synth, extract, train, predict, eval, check.

Every subcommand is deterministic given its flags and seed; every output file
starts with a comment line echoing the version, the flags, and the grid
manifest hash where one applies. Exit codes: 0 success, 1 runtime failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__, checks, classify, descriptors, imagecore
from .descriptors import DescriptorConfig


def _echo(args: argparse.Namespace, manifest: str = "") -> str:
    flags = " ".join(
        f"{k}={v}" for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    )
    head = f"se2n v{__version__} {flags}"
    return f"{head} manifest={manifest}" if manifest else head


def _config_from(args: argparse.Namespace) -> DescriptorConfig:
    return DescriptorConfig(
        N=args.N,
        window=args.window,
        kinds=descriptors.parse_kind(args.kind),
        complex_encoding=args.encoding,
        center=not args.no_center,
    )


def cmd_synth(args) -> int:
    samples = imagecore.synth_dataset(args.classes, args.poses, args.size, args.seed)
    imagecore.write_dataset(samples, args.out, header=_echo(args))
    print(f"wrote {len(samples)} images to {args.out}")
    return 0


def _load_dataset(path: str) -> list[imagecore.LabeledSample]:
    samples = imagecore.load_coil_directory(path)
    if not samples:
        raise RuntimeError(f"no images found in {path}")
    return samples


def cmd_extract(args) -> int:
    out = Path(args.out)
    config = _config_from(args)
    samples = _load_dataset(args.inp)
    grid = descriptors.grid_for(samples[0].raster, config)
    try:
        mats, labels = descriptors.extract_dataset(
            samples, grid, config, noise_sd=args.noise_sd, noise_seed=args.noise_seed
        )
        values = np.concatenate([mats[k] for k in config.kinds], axis=1)
        vectors = [
            descriptors.FeatureVector(values[i], config.kind_name, grid.manifest_hash, int(labels[i]))
            for i in range(values.shape[0])
        ]
        descriptors.write_features(out, vectors, header=_echo(args, grid.manifest_hash))
    except Exception:
        out.unlink(missing_ok=True)
        raise
    manifest_path = out.with_suffix(".grid.csv")
    with open(manifest_path, "wb") as fh:
        fh.write(f"# {_echo(args, grid.manifest_hash)}\n".encode())
        fh.write(grid.manifest_csv())
    report = descriptors.enumeration_report(grid, config)
    print(f"extracted {len(vectors)} x {vectors[0].values.size} features ({config.kind_name})")
    print(
        "grid: {points} points, {pairs} pairs, {ordered_pairs} ordered pairs; "
        "quantities per pair: rotational bispectrum {rbs_per_pair}, cyclic {cyclic_per_pair}".format(
            **report
        )
    )
    return 0


def cmd_train(args) -> int:
    y, kind, manifest, X = descriptors.read_features(args.features)
    if np.any(y < 0):
        raise RuntimeError("training features must be labeled")
    sigma = args.sigma
    if sigma is None:
        split = classify.Split(train_ratio=0.8, seed=args.seed, trial_count=1)
        tr, val = classify.split_indices(y, split, 0)
        grid = args.sigma_grid or classify.default_sigma_grid(X[tr], args.seed)
        sigma = classify.sigma_search((X[tr], y[tr]), (X[val], y[val]), grid, args.C)
        print(f"sigma search selected {sigma:.6g}")
    model = classify.train_svm(X, y, sigma, args.C)
    classify.save_model(model, args.out)
    print(f"trained on {X.shape[0]} samples ({kind}); model -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    y, kind, manifest, X = descriptors.read_features(args.features)
    model = classify.load_model(args.model)
    pred = classify.predict(model, X)
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# {_echo(args, manifest)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "label", "predicted"])
        for i, (t, p) in enumerate(zip(y, pred)):
            writer.writerow([i, t if t >= 0 else "", int(p)])
    if np.all(y >= 0):
        acc = 100.0 * float(np.mean(pred == y))
        print(f"accuracy {acc:.2f}% on {X.shape[0]} samples ({kind})")
    return 0


def _write_report(path, header: str, report: classify.EvalReport) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "value"])
        for t, acc in enumerate(report.per_trial):
            writer.writerow([f"trial{t}", f"{acc:.6g}"])
        writer.writerow(["mean", f"{report.accuracy:.6g}"])
        for i in range(report.confusion.shape[0]):
            writer.writerow([f"confusion{i}", " ".join(map(str, report.confusion[i]))])


def cmd_eval(args) -> int:
    if args.train_clean_test_noisy:
        return _eval_noisy(args)
    if not args.features:
        raise RuntimeError("eval needs --features (or --train-clean-test-noisy with --in)")
    y, kind, manifest, X = descriptors.read_features(args.features)
    split = classify.Split(train_ratio=args.ratio, seed=args.seed, trial_count=args.trials)
    report = classify.run_trials(
        X, y, split, sigma=args.sigma, sigma_grid=args.sigma_grid, C=args.C
    )
    print(f"{kind}: per-trial " + " ".join(f"{a:.2f}" for a in report.per_trial))
    print(f"{kind}: mean accuracy {report.accuracy:.2f}%")
    if args.out:
        _write_report(args.out, _echo(args, manifest), report)
    return 0


def _eval_noisy(args) -> int:
    if not args.inp:
        raise RuntimeError("--train-clean-test-noisy needs --in <dataset dir>")
    samples = _load_dataset(args.inp)
    config = _config_from(args)
    grid = descriptors.grid_for(samples[0].raster, config)
    kind = config.kind_name
    X, y = descriptors.extract_dataset(samples, grid, config)
    X = np.concatenate([X[k] for k in config.kinds], axis=1)

    rng = np.random.default_rng(args.seed)
    test_idx = []
    for c in np.unique(y):
        idx = np.nonzero(y == c)[0]
        take = min(args.views_per_class, idx.size)
        test_idx.append(rng.choice(idx, take, replace=False))
    test_idx = np.sort(np.concatenate(test_idx))
    test_samples = [samples[i] for i in test_idx]
    Xn, yn = descriptors.extract_dataset(
        test_samples, grid, config, noise_sd=args.noise_sd, noise_seed=args.seed
    )
    Xn = np.concatenate([Xn[k] for k in config.kinds], axis=1)

    sigma = args.sigma
    if sigma is None:
        grid_s = args.sigma_grid or classify.default_sigma_grid(X, args.seed)
        split = classify.Split(train_ratio=0.8, seed=args.seed, trial_count=1)
        tr, val = classify.split_indices(y, split, 0)
        sigma = classify.sigma_search((X[tr], y[tr]), (X[val], y[val]), grid_s, args.C)
    model = classify.train_svm(X, y, sigma, args.C)
    report = classify.evaluate(model, Xn, yn)
    print(f"{kind}: clean-train/noisy-test accuracy {report.accuracy:.2f}% at sd={args.noise_sd}")
    if args.out:
        _write_report(args.out, _echo(args, grid.manifest_hash), report)
    return 0


def cmd_check(args) -> int:
    rows = checks.SUITES[args.suite](seed=args.seed)
    ok = all(r.passed for r in rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(f"# {_echo(args)}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["suite", "name", "residual", "tolerance", "pass"])
            for r in rows:
                writer.writerow([r.suite, r.name, f"{r.residual:.6g}", f"{r.tolerance:g}", r.passed])
        if args.suite == "genericity":
            detail = checks.genericity_detail(seed=args.seed)
            detail_path = Path(args.out).with_suffix(".detail.csv")
            with open(detail_path, "w", newline="") as fh:
                fh.write(f"# {_echo(args)}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["lambda_x", "lambda_y", "generic", "sv_ratio"])
                for (lx, ly), gen, ratio in zip(detail.freqs, detail.generic, detail.sv_ratio):
                    writer.writerow([f"{lx:.17g}", f"{ly:.17g}", bool(gen), f"{ratio:.6g}"])
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{status} {r.suite}/{r.name}: residual {r.residual:.3g} (tol {r.tolerance:g})")
    return 0 if ok else 1


def _sigma_grid_arg(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="se2n", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a rotated-shape dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--poses", type=int, required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    def add_descriptor_flags(p):
        p.add_argument("--kind", default="RBS")
        p.add_argument("--N", type=int, default=6)
        p.add_argument("--window", type=int, default=16)
        p.add_argument("--encoding", choices=("re_im", "modulus"), default="re_im")
        p.add_argument("--no-center", action="store_true")

    p = sub.add_parser("extract", help="extract descriptor features from a dataset directory")
    p.add_argument("--in", dest="inp", required=True)
    add_descriptor_flags(p)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train an SVM on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--sigma-grid", type=_sigma_grid_arg, default=None)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict classes for a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="run the split/train/test protocol")
    p.add_argument("--features")
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--sigma-grid", type=_sigma_grid_arg, default=None)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-clean-test-noisy", action="store_true")
    p.add_argument("--in", dest="inp")
    add_descriptor_flags(p)
    p.add_argument("--noise-sd", type=float, default=20.0)
    p.add_argument("--views-per-class", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="run a property suite against the exact oracles")
    p.add_argument("--suite", choices=sorted(checks.SUITES), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    parser.subcommands = dict(sub.choices)
    return parser


def _apply_config_overlay(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Apply a ``--config`` file of ``key=value`` lines as flag defaults.

    Keys use flag spelling without the leading dashes (e.g. ``kind=RBS``,
    ``noise-sd=20``); explicit command-line flags still win.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        parser.error("--config needs a file path")
    overlay = {}
    for line in Path(argv[at + 1]).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"malformed config line (expected key=value): {line!r}")
        key, value = line.split("=", 1)
        overlay[key.strip().replace("-", "_")] = value.strip()
    parser.set_defaults(**overlay)
    for sub in parser.subcommands.values():  # subparser defaults shadow the parent's
        sub.set_defaults(**overlay)
    return argv[:at] + argv[at + 2 :]


def _coerce_overlay_types(args: argparse.Namespace) -> None:
    # set_defaults bypasses argparse type conversion; coerce the common cases
    for key in ("classes", "poses", "size", "seed", "N", "window", "trials", "views_per_class"):
        if hasattr(args, key) and isinstance(getattr(args, key), str):
            setattr(args, key, int(getattr(args, key)))
    for key in ("sigma", "C", "ratio", "noise_sd"):
        if hasattr(args, key) and isinstance(getattr(args, key), str):
            setattr(args, key, float(getattr(args, key)))
    for key in ("no_center", "train_clean_test_noisy"):
        if hasattr(args, key) and isinstance(getattr(args, key), str):
            setattr(args, key, getattr(args, key).lower() in ("1", "true", "yes"))
    if hasattr(args, "sigma_grid") and isinstance(args.sigma_grid, str):
        args.sigma_grid = _sigma_grid_arg(args.sigma_grid)


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config_overlay(parser, argv)
    args = parser.parse_args(argv)
    _coerce_overlay_types(args)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failures exit 1, usage errors exit 2 via argparse
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
