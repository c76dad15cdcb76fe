"""Command-line entry point: convert, train, eval, baseline, export-features.

All randomness flows from --seed (sub-seeds derived per consumer), --threads
caps BLAS and numba worker counts, and every run writes a run_manifest.json
recording the command, its configuration, and the container hash. Errors
print one machine-parsable line: `ERROR <code>: <text>`.
"""

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import baselines as bl
from . import dataset as ds
from . import model as mdl
from .errors import ConfigError, CsiSenseError, ValidationError
from .formats import fnv1a64_file, read_checkpoint, write_checkpoint
from .metrics import (
    ale,
    ame,
    class_metrics,
    confusion,
    write_class_metrics_csv,
    write_summary_csv,
)
from .seeds import derive_seed
from .svm import SvmConfig
from .train import SplitData, TrainConfig, predict_split, read_train_config, train


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_run_manifest(out_dir, command, args, started, dataset_hash=None):
    snapshot = {
        k: v for k, v in vars(args).items() if k != "func" and not k.startswith("_")
    }
    manifest = {
        "command": command,
        "config": snapshot,
        "seed": args.seed,
        "dataset_fnv1a64": None if dataset_hash is None else f"{dataset_hash:016x}",
        "out_dir": os.path.abspath(out_dir),
        "started": started,
        "finished": _now(),
    }
    with open(os.path.join(out_dir, "run_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_standardized(container, manifest_path):
    fps, manifest = ds.load_dataset(container, manifest_path)
    fps = ds.standardize(fps, manifest)
    return fps, manifest


def _split_arrays(fps, manifest):
    train_fps, test_fps = ds.split_fingerprints(fps, manifest)
    out = []
    for part in (train_fps, test_fps):
        x, act, loc = ds.to_arrays(part, dtype=np.float32)
        out.append(SplitData(x=x, act=act, loc=loc))
    return out[0], out[1], train_fps, test_fps


# --- convert ----------------------------------------------------------------


def cmd_convert(args):
    started = _now()
    index_path = os.path.join(args.raw_dir, "samples.csv")
    if not os.path.exists(index_path):
        raise ValidationError(f"no samples.csv index in {args.raw_dir}")
    entries = []
    with open(index_path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().strip()
        if header != "sample_id,activity,location":
            raise ValidationError(f"bad samples.csv header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            sample_id, activity, location = line.split(",")
            entries.append((sample_id, int(activity), int(location)))
    if not entries:
        raise ValidationError(f"{args.raw_dir} holds zero samples; nothing to convert")

    annotations = {}
    if args.annotations:
        annotations = ds.read_annotations_csv(args.annotations)
        known = {sample_id for sample_id, _, _ in entries}
        unknown = sorted(set(annotations) - known)
        if unknown:
            raise ValidationError(
                f"annotations reference unknown sample ids: {', '.join(unknown)}"
            )

    fingerprints = []
    for sample_id, activity, location in entries:
        path = os.path.join(args.raw_dir, f"{sample_id}.csv")
        raw = np.loadtxt(path, delimiter=",", ndmin=2).T  # rows=time -> [52, L]
        if raw.shape[0] != ds.NUM_CHANNELS:
            raise ValidationError(
                f"{sample_id}: {raw.shape[0]} channels, expected {ds.NUM_CHANNELS}"
            )
        if sample_id in annotations:
            raw = ds.segment(raw, annotations[sample_id])
        fingerprints.append(
            ds.CsiFingerprint(
                amplitudes=ds.resample_linear(raw),
                activity=activity,
                location=location,
                sample_id=sample_id,
            )
        )

    splits = ds.make_split(len(fingerprints), phase=args.phase)
    rows = [
        ds.ManifestRow(fp.sample_id, fp.activity, fp.location, split)
        for fp, split in zip(fingerprints, splits)
    ]
    manifest = ds.DatasetManifest(samples=rows)
    os.makedirs(args.out, exist_ok=True)
    container = os.path.join(args.out, "dataset.csit")
    manifest_csv = os.path.join(args.out, "manifest.csv")
    ds.save_dataset(container, manifest_csv, fingerprints, manifest)
    n_train, n_test = manifest.split_counts()
    print(f"converted {len(fingerprints)} samples ({n_train} train / {n_test} test)")
    _write_run_manifest(args.out, "convert", args, started, fnv1a64_file(container))
    return 0


# --- train ------------------------------------------------------------------


def _net_spec_from_args(args):
    counts = tuple(int(v) for v in args.block_counts.split(","))
    return mdl.NetworkSpec(
        block_counts=counts,
        width_multiplier=args.width,
        plus_variant=args.plus,
    )


def _train_config_from_args(args):
    base = (read_train_config(args.config) if args.config else TrainConfig()).as_dict()
    base["seed"] = args.seed  # the run seed always wins
    for key in ("epochs", "batch_size", "lr0", "decay", "decay_every"):
        value = getattr(args, key)
        if value is not None:
            base[key] = value
    if args.lam is not None:
        base["lambda"] = args.lam
    return TrainConfig(
        epochs=base["epochs"],
        batch_size=base["batch_size"],
        lr0=base["lr0"],
        decay=base["decay"],
        decay_every=base["decay_every"],
        lam=base["lambda"],
        seed=base["seed"],
    )


def cmd_train(args):
    started = _now()
    config = _train_config_from_args(args)
    spec = _net_spec_from_args(args)
    fps, manifest = _load_standardized(args.container, args.manifest)
    train_data, test_data, _, _ = _split_arrays(fps, manifest)
    net = mdl.build(spec).init_params(derive_seed(args.seed, "init"))
    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "curve.csv")
    ckpt_path = os.path.join(args.out, "checkpoint.ckpt")
    mdl.write_netspec(os.path.join(args.out, "netspec.txt"), spec, args.seed)

    def log(record):
        if not args.quiet:
            print(
                f"epoch {record.epoch:3d}  train {record.train_loss:.4f}  "
                f"test {record.test_loss:.4f}  act {record.act_test_acc:.3f}  "
                f"loc {record.loc_test_acc:.3f}"
            )

    try:
        curve = train(net, train_data, test_data, config, on_epoch=log)
    except CsiSenseError as exc:
        # persist whatever completed before the abort
        partial = getattr(exc, "curve", None)
        if partial is not None:
            partial.to_csv(curve_path)
            write_checkpoint(ckpt_path, net.state_dict())
        raise
    curve.to_csv(curve_path)
    write_checkpoint(ckpt_path, net.state_dict())
    _write_run_manifest(args.out, "train", args, started, fnv1a64_file(args.container))
    print(f"trained {spec.name()} for {config.epochs} epochs; outputs in {args.out}")
    return 0


# --- eval -------------------------------------------------------------------


def _load_net(netspec_path, checkpoint_path):
    spec, _ = mdl.read_netspec(netspec_path)
    net = mdl.build(spec)
    net.load_state_dict(read_checkpoint(checkpoint_path))
    return net, spec


def cmd_eval(args):
    started = _now()
    fps, manifest = _load_standardized(args.container, args.manifest)
    _, test_data, _, _ = _split_arrays(fps, manifest)
    net, _ = _load_net(args.netspec, args.checkpoint)
    act_preds, loc_preds = predict_split(net, test_data)

    os.makedirs(args.out, exist_ok=True)
    act_cm = confusion(act_preds, test_data.act, ds.NUM_ACTIVITIES)
    loc_cm = confusion(loc_preds, test_data.loc, ds.NUM_LOCATIONS)
    act_cm.to_csv(os.path.join(args.out, "activity_confusion.csv"))
    loc_cm.to_csv(os.path.join(args.out, "location_confusion.csv"))
    act_metrics = class_metrics(act_cm)
    loc_metrics = class_metrics(loc_cm)
    write_class_metrics_csv(os.path.join(args.out, "activity_metrics.csv"), act_metrics)
    write_class_metrics_csv(os.path.join(args.out, "location_metrics.csv"), loc_metrics)

    ale_m = ame_m = None
    if args.coords and os.path.exists(args.coords):
        coords = ds.read_coords_csv(args.coords)
        ale_m = ale(loc_preds, test_data.loc, coords)
        ame_m = ame(loc_preds, test_data.loc, coords)
    else:
        print("no coordinates file; location errors reported as not-applicable")
    write_summary_csv(
        os.path.join(args.out, "summary.csv"),
        [
            ("activity", act_metrics.accuracy, None, None),
            ("location", loc_metrics.accuracy, ale_m, ame_m),
        ],
    )
    print(
        f"activity accuracy {act_metrics.accuracy:.4f}, "
        f"location accuracy {loc_metrics.accuracy:.4f}, "
        f"ale {'na' if ale_m is None else f'{ale_m:.4f}'} m, "
        f"ame {'na' if ame_m is None else f'{ame_m:.4f}'} m"
    )
    _write_run_manifest(args.out, "eval", args, started, fnv1a64_file(args.container))
    return 0


# --- baseline ---------------------------------------------------------------


def cmd_baseline(args):
    started = _now()
    fps, manifest = _load_standardized(args.container, args.manifest)
    _, _, train_fps, test_fps = _split_arrays(fps, manifest)
    os.makedirs(args.out, exist_ok=True)
    if args.method == "dtw-knn":
        band = None if args.band.lower() == "none" else int(args.band)
        cfg = bl.DtwConfig(band_radius=band, k=args.k, decimation=args.decimation)
        rows, _, _ = bl.run_dtw_knn(
            train_fps, test_fps, cfg, cache_path=args.dist_cache
        )
    else:
        cfg = SvmConfig(
            C=args.C,
            gamma=args.gamma,
            tolerance=args.tol,
            max_passes=args.max_passes,
            seed=args.seed,
        )
        rows, _ = bl.run_svm_rbf(train_fps, test_fps, cfg)
    report = os.path.join(args.out, "baseline_report.csv")
    bl.write_baseline_report(report, rows)
    for row in rows:
        print(f"{row.method} {row.task}: accuracy {row.accuracy:.4f} ({row.config_string})")
    _write_run_manifest(args.out, "baseline", args, started, fnv1a64_file(args.container))
    return 0


# --- export-features ---------------------------------------------------------


def cmd_export_features(args):
    started = _now()
    taps = [t.strip() for t in args.taps.split(",") if t.strip()]
    if not taps:
        raise ConfigError("no taps requested")
    unknown = [t for t in taps if t not in mdl.TAPS]
    if unknown:
        raise ConfigError(
            f"unknown feature taps {unknown}; valid taps: {', '.join(mdl.TAPS)}"
        )
    fps, manifest = _load_standardized(args.container, args.manifest)
    _, test_data, _, test_fps = _split_arrays(fps, manifest)
    net, _ = _load_net(args.netspec, args.checkpoint)
    sample_ids = [fp.sample_id for fp in test_fps]

    os.makedirs(args.out, exist_ok=True)
    handles = {
        tap: open(os.path.join(args.out, f"features_{tap}.csv"), "w",
                  encoding="utf-8", newline="\n")
        for tap in taps
    }
    try:
        for start in range(0, len(test_data), 256):
            stop = min(start + 256, len(test_data))
            rows = mdl.export_features(net, test_data.x[start:stop], taps)
            for tap in taps:
                block = rows[tap]
                for i in range(block.shape[0]):
                    handles[tap].write(
                        sample_ids[start + i]
                        + ","
                        + ",".join(f"{v:.6g}" for v in block[i])
                        + "\n"
                    )
    finally:
        for fh in handles.values():
            fh.close()
    print(f"exported {len(taps)} tap(s) over {len(test_data)} test samples")
    _write_run_manifest(
        args.out, "export-features", args, started, fnv1a64_file(args.container)
    )
    return 0


# --- parser -----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="csisense",
        description="Joint activity recognition and indoor localization "
        "from WiFi CSI fingerprints.",
    )
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap worker threads (default: all cores)")
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="raw directory -> CSIT container + manifest")
    p.add_argument("raw_dir")
    p.add_argument("--annotations", default=None,
                   help="annotation CSV (sample_id,start_idx,end_idx)")
    p.add_argument("--phase", type=int, default=4,
                   help="test-split phase: i mod 5 == phase (default 4)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train the dual-head network")
    p.add_argument("container")
    p.add_argument("manifest")
    p.add_argument("--config", default=None, help="key=value training config file")
    p.add_argument("--block-counts", default="1,1,1,1")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--plus", action="store_true",
                   help="add the extra activity-head conv")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--lr0", type=float, default=None)
    p.add_argument("--decay", type=float, default=None)
    p.add_argument("--decay-every", type=int, default=None, dest="decay_every")
    p.add_argument("--lambda", type=float, default=None, dest="lam")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("container")
    p.add_argument("manifest")
    p.add_argument("checkpoint")
    p.add_argument("netspec")
    p.add_argument("--coords", default=None, help="location coordinates CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run a comparison method on both tasks")
    p.add_argument("container")
    p.add_argument("manifest")
    p.add_argument("method", choices=["dtw-knn", "svm-rbf"])
    p.add_argument("--band", default="8", help="Sakoe-Chiba radius or 'none'")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--decimation", type=int, default=3)
    p.add_argument("--dist-cache", default=None, dest="dist_cache",
                   help="DIST cache file to reuse/create")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=10, dest="max_passes")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("export-features",
                       help="per-layer feature maps as CSV for embedding tools")
    p.add_argument("container")
    p.add_argument("manifest")
    p.add_argument("checkpoint")
    p.add_argument("netspec")
    p.add_argument("--taps", default="input",
                   help=f"comma list from: {', '.join(mdl.TAPS)}")
    p.set_defaults(func=cmd_export_features)
    return parser


def _apply_thread_cap(n):
    """Returns the BLAS limiter, which must stay alive for the whole run."""
    if n is None:
        return None
    if n < 1:
        raise ConfigError(f"--threads must be >= 1, got {n}")
    import numba
    from threadpoolctl import threadpool_limits

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return threadpool_limits(limits=n)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        limiter = _apply_thread_cap(args.threads)
        try:
            return args.func(args)
        finally:
            del limiter
    except CsiSenseError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
