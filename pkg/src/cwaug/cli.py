"""Command-line surface binding the library into reproducible runs.

Every file-producing command writes a manifest JSON next to its primary
output (full flag snapshot, input digests, tool version, timestamp);
re-running the recorded flags reproduces the outputs byte-exactly, since
all randomness flows from the --seed flag and nothing is ever seeded
from the clock.

Exit codes: 0 success, 1 usage or configuration error, 2 malformed input
data, 3 unusable configuration (no pyramid level can host a window).
"""

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, imgcore
from .cwssim import ConfigUnusable, CwssimParams, DimMismatch, cwssim_index
from .elastic import ElasticParams, elastic_deform
from .idx_io import IdxFormatError, read_images, read_labels, write_images, write_labels
from .knn_eval import EvalConfig, evaluate, subsample
from .pipeline import AugmentConfig, augment_dataset, derive_seed, rebuild_candidate
from .pyramid import PyramidParams, build_pyramid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_UNUSABLE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2
    # for data-format problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip() != ""]


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(primary_output, command, args, inputs, outputs):
    config = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {
        "tool": "cwaug",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(str(primary_output) + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _write_pgm(img, path):
    data = imgcore.to_bytes(img)
    h, w = data.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + data.tobytes())


def _add_elastic_flags(p, require=True):
    p.add_argument("--alpha", type=float, required=require, help="displacement intensity in pixels")
    p.add_argument("--sigma", type=float, required=require, help="Gaussian std of field smoothing, in pixels")
    p.add_argument("--norm", choices=["perpixel", "global"], default="perpixel",
                   help="field normalization: per-pixel unit vectors (default) or whole-field RMS")


def _add_cwssim_flags(p):
    p.add_argument("--cw-k", type=float, default=0.03, help="stabilization constant (default 0.03)")
    p.add_argument("--cw-window", type=int, default=7, help="odd sliding-window side (default 7)")
    p.add_argument("--cw-step", type=int, default=1, help="window stride (default 1)")
    p.add_argument("--cw-levels", type=_int_list, default=[2],
                   help="comma-separated 1-indexed pyramid levels to aggregate (default 2)")
    p.add_argument("--pyr-levels", type=int, default=3, help="bandpass scale count (default 3)")
    p.add_argument("--pyr-orientations", type=int, default=6, help="orientations per scale (default 6)")
    p.add_argument("--pad-to", type=int, default=None,
                   help="padded square side (default: next power of two >= image side)")


def _elastic_params(args):
    if args.sigma is not None and args.sigma <= 0:
        raise ValueError("sigma must be > 0")
    if args.alpha is not None and args.alpha < 0:
        raise ValueError("alpha must be >= 0")
    return ElasticParams(alpha=args.alpha, sigma=args.sigma, norm=args.norm)


def _cwssim_params(args):
    pyr = PyramidParams(levels=args.pyr_levels, orientations=args.pyr_orientations, pad_to=args.pad_to)
    return CwssimParams(K=args.cw_k, window=args.cw_window, step=args.cw_step,
                        levels_used=tuple(args.cw_levels), pyramid=pyr)


def _deform_chunk(task):
    images_chunk, params, seed, start = task
    return [elastic_deform(img, params, derive_seed(seed, start + off, 0))
            for off, img in enumerate(images_chunk)]


def cmd_deform(args):
    params = _elastic_params(args)
    images = read_images(args.input)
    n = len(images)
    if args.threads > 1 and n > 1:
        chunk = max(1, -(-n // (args.threads * 8)))
        tasks = [(images[s : s + chunk], params, args.seed, s) for s in range(0, n, chunk)]
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            deformed = [img for group in pool.map(_deform_chunk, tasks) for img in group]
    else:
        deformed = [elastic_deform(images[i], params, derive_seed(args.seed, i, 0)) for i in range(n)]
    out = np.stack(deformed) if deformed else images
    write_images(out, args.output)
    _write_manifest(args.output, "deform", args, [args.input], [args.output])
    return EXIT_OK


def _augment_config(args):
    return AugmentConfig(
        elastic=_elastic_params(args),
        cwssim=_cwssim_params(args),
        threshold=args.threshold,
        multiplier=args.multiplier,
        max_attempts=args.attempts,
        seed=args.seed,
    )


def _dump_rejected(images, cfg, report, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    count = 0
    for r in report.records:
        if not r.accepted:
            img = rebuild_candidate(images[r.image_index], cfg, r.image_index, r.slot, r.attempt)
            _write_pgm(img, directory / f"rejected_i{r.image_index:05d}_s{r.slot}_a{r.attempt}_{r.score:.4f}.pgm")
            count += 1
    return count


def cmd_augment(args):
    cfg = _augment_config(args)
    images = read_images(args.in_images)
    labels = read_labels(args.in_labels)
    if len(images) != len(labels):
        raise IdxFormatError(f"{len(images)} images but {len(labels)} labels")

    out_images, out_labels, report = augment_dataset(images, labels, cfg, threads=args.threads)
    write_images(out_images, args.out_images)
    write_labels(out_labels, args.out_labels)

    outputs = [args.out_images, args.out_labels]
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
        outputs.append(args.report)
    if args.report_csv:
        _write_candidate_csv(report, args.report_csv)
        outputs.append(args.report_csv)
    if args.dump_rejected:
        _dump_rejected(images, cfg, report, args.dump_rejected)
    _write_manifest(args.out_images, "augment", args, [args.in_images, args.in_labels], outputs)
    print(f"originals={report.originals} accepted={report.accepted} "
          f"rejected={report.rejected} exhausted={report.exhausted_slots}")
    return EXIT_OK


def _write_candidate_csv(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_index", "slot", "attempt", "score", "accepted"])
        for r in report.records:
            writer.writerow([r.image_index, r.slot, r.attempt, f"{r.score:.12f}", int(r.accepted)])


def cmd_cwssim(args):
    images_a = read_images(args.images_a)
    images_b = read_images(args.images_b) if args.images_b else images_a
    try:
        a = images_a[args.index_a]
        b = images_b[args.index_b]
    except IndexError as exc:
        raise IdxFormatError(f"image index out of range: {exc}") from exc
    score = cwssim_index(a, b, _cwssim_params(args))
    print(f"{score:.6f}")
    return EXIT_OK


def cmd_eval(args):
    cfg = EvalConfig(k=args.k, metric=args.metric, cwssim=_cwssim_params(args))
    train_images = read_images(args.train_images)
    train_labels = read_labels(args.train_labels)
    test_images = read_images(args.test_images)
    test_labels = read_labels(args.test_labels)
    if args.train_subset:
        train_images, train_labels = subsample(train_images, train_labels, args.train_subset, args.subset_seed)
    if args.test_subset:
        test_images, test_labels = subsample(test_images, test_labels, args.test_subset, args.subset_seed + 1)
    error = evaluate(train_images, train_labels, test_images, test_labels, cfg)
    print(json.dumps({
        "metric": args.metric,
        "k": args.k,
        "train_size": len(train_images),
        "test_size": len(test_images),
        "error_rate": error,
    }))
    return EXIT_OK


def _sweep_cell(train_images, train_labels, test_images, test_labels, args, alpha, sigma, threshold):
    base = dict(vars(args))
    base.update(alpha=alpha, sigma=sigma, threshold=threshold)
    cell_args = argparse.Namespace(**base)
    cfg = _augment_config(cell_args)

    filt_images, filt_labels, report = augment_dataset(train_images, train_labels, cfg, threads=args.threads)
    ungated = AugmentConfig(elastic=cfg.elastic, cwssim=cfg.cwssim, threshold=0.0,
                            multiplier=cfg.multiplier, max_attempts=1, seed=cfg.seed)
    raw_images, raw_labels, _ = augment_dataset(train_images, train_labels, ungated, threads=args.threads)

    eval_cfg = EvalConfig(k=args.k, metric="euclidean")
    err_f = evaluate(filt_images, filt_labels, test_images, test_labels, eval_cfg)
    err_u = evaluate(raw_images, raw_labels, test_images, test_labels, eval_cfg)
    scores = [r.score for r in report.records]
    return {
        "alpha": alpha,
        "sigma": sigma,
        "threshold": threshold,
        "accepted_rate": report.accepted / report.requested if report.requested else 0.0,
        "mean_score": float(np.mean(scores)) if scores else 0.0,
        "knn_error_filtered": err_f,
        "knn_error_unfiltered": err_u,
        "seed": args.seed,
    }


SWEEP_COLUMNS = ["alpha", "sigma", "threshold", "accepted_rate", "mean_score",
                 "knn_error_filtered", "knn_error_unfiltered", "seed"]


def cmd_sweep(args):
    train_images = read_images(args.train_images)
    train_labels = read_labels(args.train_labels)
    test_images = read_images(args.test_images)
    test_labels = read_labels(args.test_labels)
    if args.train_subset:
        train_images, train_labels = subsample(train_images, train_labels, args.train_subset, args.subset_seed)
    if args.test_subset:
        test_images, test_labels = subsample(test_images, test_labels, args.test_subset, args.subset_seed + 1)

    rows = []
    for alpha in args.alphas:
        for sigma in args.sigmas:
            for threshold in args.thresholds:
                rows.append(_sweep_cell(train_images, train_labels, test_images, test_labels,
                                        args, alpha, sigma, threshold))

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    _write_manifest(args.out, "sweep", args,
                    [args.train_images, args.train_labels, args.test_images, args.test_labels],
                    [args.out])
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _print_text_histogram(histogram, width=50):
    # collapse the 100 bins to 20 rows for terminal display
    groups = histogram.reshape(20, 5).sum(axis=1)
    top = groups.max() if groups.max() > 0 else 1
    for i, count in enumerate(groups):
        lo, hi = i * 0.05, (i + 1) * 0.05
        bar = "#" * int(round(width * count / top))
        print(f"  [{lo:.2f},{hi:.2f}) {count:6d} {bar}")


def cmd_stats(args):
    cfg = _augment_config(args)
    images = read_images(args.images)
    labels = read_labels(args.labels) if args.labels else np.zeros(len(images), dtype=np.uint8)
    _, _, report = augment_dataset(images, labels, cfg, threads=args.threads)

    scores = [r.score for r in report.records]
    print(f"candidates={len(scores)} accepted={report.accepted} rejected={report.rejected} "
          f"exhausted={report.exhausted_slots}")
    if scores:
        print(f"score mean={np.mean(scores):.4f} min={min(scores):.4f} max={max(scores):.4f}")
    _print_text_histogram(report.histogram)

    outputs = []
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
        outputs.append(args.out)
    if args.dump_rejected:
        n = _dump_rejected(images, cfg, report, args.dump_rejected)
        print(f"dumped {n} rejected candidates to {args.dump_rejected}")
    if args.dump_subbands is not None:
        _dump_subbands(images[args.dump_subbands], cfg.cwssim.pyramid, args.subband_dir)
        print(f"dumped subband magnitudes to {args.subband_dir}")
    if args.out:
        _write_manifest(args.out, "stats", args, [args.images], outputs)
    return EXIT_OK


def _dump_subbands(img, pyr_params, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pyr = build_pyramid(img, pyr_params)

    def save(name, cmap):
        mag = np.abs(cmap)
        peak = mag.max()
        _write_pgm(mag / peak if peak > 0 else mag, directory / f"{name}.pgm")

    save("highpass", pyr.highpass)
    save("lowpass", pyr.lowpass)
    for level in range(1, pyr_params.levels + 1):
        for m, cmap in enumerate(pyr.bands[level - 1]):
            save(f"band_l{level}_o{m}", cmap)


def build_parser():
    parser = _Parser(prog="cwaug", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"cwaug {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("deform", help="elastically deform every image in an IDX file once")
    p.add_argument("input", help="input IDX image file (raw or gzipped)")
    p.add_argument("output", help="output IDX image file")
    _add_elastic_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("augment", help="gated augmentation: deform, score, admit above threshold")
    p.add_argument("in_images", metavar="in-images")
    p.add_argument("in_labels", metavar="in-labels")
    p.add_argument("out_images", metavar="out-images")
    p.add_argument("out_labels", metavar="out-labels")
    _add_elastic_flags(p)
    _add_cwssim_flags(p)
    p.add_argument("--threshold", type=float, default=0.7,
                   help="strict acceptance bound on the similarity score (default 0.7)")
    p.add_argument("--multiplier", type=int, default=1, help="synthetics requested per original")
    p.add_argument("--attempts", type=int, default=10, help="retries per synthetic slot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="write the run report as JSON")
    p.add_argument("--report-csv", help="write per-candidate records as CSV")
    p.add_argument("--dump-rejected", metavar="DIR", help="write rejected candidates as PGM files")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("cwssim", help="print the similarity score of two images")
    p.add_argument("images_a", metavar="images-a", help="IDX image file")
    p.add_argument("images_b", metavar="images-b", nargs="?", default=None,
                   help="second IDX file (defaults to the first)")
    p.add_argument("--index-a", type=int, default=0)
    p.add_argument("--index-b", type=int, default=0)
    _add_cwssim_flags(p)
    p.set_defaults(func=cmd_cwssim)

    p = sub.add_parser("eval", help="k-NN error rate of a train/test pair")
    p.add_argument("--train-images", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--test-images", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--metric", choices=["euclidean", "cwssim"], default="euclidean")
    p.add_argument("--train-subset", type=int, default=None)
    p.add_argument("--test-subset", type=int, default=None)
    p.add_argument("--subset-seed", type=int, default=0)
    _add_cwssim_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over (alpha, sigma, threshold) -> CSV of error rates")
    p.add_argument("--train-images", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--test-images", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--alphas", type=_float_list, required=True, help="comma-separated list")
    p.add_argument("--sigmas", type=_float_list, required=True, help="comma-separated list")
    p.add_argument("--thresholds", type=_float_list, required=True, help="comma-separated list")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--norm", choices=["perpixel", "global"], default="perpixel")
    _add_cwssim_flags(p)
    p.add_argument("--multiplier", type=int, default=1)
    p.add_argument("--attempts", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--train-subset", type=int, default=500)
    p.add_argument("--test-subset", type=int, default=500)
    p.add_argument("--subset-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="score candidates and emit histogram / inspection dumps")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", default=None)
    _add_elastic_flags(p)
    _add_cwssim_flags(p)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--multiplier", type=int, default=1)
    p.add_argument("--attempts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write the full report as JSON")
    p.add_argument("--dump-rejected", metavar="DIR")
    p.add_argument("--dump-subbands", type=int, metavar="INDEX",
                   help="dump subband magnitude maps for one image")
    p.add_argument("--subband-dir", default="subbands")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except (IdxFormatError, DimMismatch) as exc:
        print(f"cwaug: data format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ConfigUnusable as exc:
        print(f"cwaug: unusable configuration: {exc}", file=sys.stderr)
        return EXIT_UNUSABLE
    except (ValueError, OSError) as exc:
        print(f"cwaug: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
