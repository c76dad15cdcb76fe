"""Synthetic CSI fingerprint generator.

Clearly-labeled SYNTHETIC data for tests and desk-scale runs: each location
gets a smooth static subcarrier profile (multipath stand-in), each activity
a distinct temporal envelope that modulates the subcarriers through a
location-specific mixing vector. Samples vary in active duration, in sloppy
lead/tail context around the activity, in a monotone time warp, in
amplitude, and in additive noise. Locations are therefore separable from
the static profile while activities are separable only from the temporal
shape, mirroring how the two tasks differ in difficulty on real CSI.

Run `python -m csisense.synth --out DIR` to materialize a container.
"""

import argparse
import os
from dataclasses import dataclass

import numpy as np

from .dataset import (
    DatasetManifest,
    ManifestRow,
    NUM_ACTIVITIES,
    NUM_CHANNELS,
    NUM_LOCATIONS,
    make_split,
    resample_linear,
    save_dataset,
    write_default_coords,
)
from .dataset import CsiFingerprint


@dataclass
class SynthConfig:
    locations: int = NUM_LOCATIONS
    activities: int = NUM_ACTIVITIES
    reps: int = 15  # per (activity, location); 16*6*15 = 1440
    discard: int = 46  # dropped before the split; 1440 - 46 = 1394
    base_level: float = 12.0
    profile_scale: float = 4.0
    mod_scale: float = 4.0
    noise: float = 1.8
    min_active: int = 80
    max_active: int = 200
    max_pad: int = 120  # sloppy context kept on each side of the activity
    gain_jitter: float = 0.10  # per-sample smooth channel gain distortion
    offset_jitter: float = 0.8  # per-sample global amplitude offset


@dataclass
class RawSample:
    sample_id: str
    activity: int
    location: int
    series: np.ndarray  # [52, L], L varies


def _smooth_channel_vector(rng, n=NUM_CHANNELS):
    """Zero-mean unit-std vector that varies smoothly across subcarriers."""
    c = np.arange(n)
    v = np.zeros(n)
    for harmonic in range(1, 5):
        freq = rng.uniform(0.5, 3.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        v += rng.normal(0.0, 1.0 / harmonic) * np.sin(2.0 * np.pi * freq * c / n + phase)
    v -= v.mean()
    return v / v.std()


def _envelope(activity, u):
    """Distinct temporal signature per activity over u in [0, 1]."""
    if activity == 0:
        return np.sin(np.pi * u)
    if activity == 1:
        return -np.sin(np.pi * u)
    if activity == 2:
        return np.sin(2.0 * np.pi * u)
    if activity == 3:
        return -np.sin(2.0 * np.pi * u)
    if activity == 4:
        return np.sin(3.0 * np.pi * u)
    return np.sin(np.pi * u) * np.cos(6.0 * np.pi * u)


def generate_raw_samples(seed, cfg: SynthConfig = None):
    """All (location, activity, rep) samples, minus the discarded ones,
    in a seeded random container order."""
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(seed)
    profiles = [
        cfg.base_level + cfg.profile_scale * _smooth_channel_vector(rng)
        for _ in range(cfg.locations)
    ]
    mixings = [
        cfg.mod_scale * _smooth_channel_vector(rng) for _ in range(cfg.locations)
    ]

    samples = []
    index = 0
    for loc in range(cfg.locations):
        for act in range(cfg.activities):
            for _ in range(cfg.reps):
                active = int(rng.integers(cfg.min_active, cfg.max_active + 1))
                lead = int(rng.integers(0, cfg.max_pad + 1))
                tail = int(rng.integers(0, cfg.max_pad + 1))
                warp = np.exp(rng.uniform(-0.25, 0.25))
                scale = rng.uniform(0.5, 1.5)
                u = (np.arange(active) / (active - 1)) ** warp
                env = np.zeros(lead + active + tail)
                env[lead : lead + active] = _envelope(act, u)
                gain = 1.0 + cfg.gain_jitter * _smooth_channel_vector(rng)
                offset = cfg.offset_jitter * rng.standard_normal()
                series = (
                    gain[:, None]
                    * (profiles[loc][:, None] + scale * mixings[loc][:, None] * env[None, :])
                    + offset
                    + cfg.noise * rng.standard_normal((NUM_CHANNELS, env.size))
                )
                samples.append(RawSample(f"s{index:04d}", act, loc, series))
                index += 1

    if cfg.discard:
        if cfg.discard >= len(samples):
            raise ValueError("discard count leaves no samples")
        drop = set(rng.choice(len(samples), size=cfg.discard, replace=False))
        samples = [s for i, s in enumerate(samples) if i not in drop]
    order = rng.permutation(len(samples))
    return [samples[i] for i in order]


def build_dataset(container_path, manifest_path, seed, cfg: SynthConfig = None,
                  split_phase=4):
    """Resample raw samples to 52x192, split 1-in-5, and write the container
    + manifest. Returns (fingerprints, manifest)."""
    raw = generate_raw_samples(seed, cfg)
    splits = make_split(len(raw), phase=split_phase)
    fingerprints = [
        CsiFingerprint(
            amplitudes=resample_linear(s.series),
            activity=s.activity,
            location=s.location,
            sample_id=s.sample_id,
        )
        for s in raw
    ]
    rows = [
        ManifestRow(s.sample_id, s.activity, s.location, split)
        for s, split in zip(raw, splits)
    ]
    manifest = DatasetManifest(samples=rows)
    save_dataset(container_path, manifest_path, fingerprints, manifest)
    return fingerprints, manifest


def write_raw_dir(raw_dir, seed, cfg: SynthConfig = None, annotated=False,
                  context=30):
    """Raw-directory layout consumed by the convert command:

    samples.csv (sample_id,activity,location) plus one <sample_id>.csv per
    sample with L rows x 52 amplitude columns (time-major). With annotated,
    each series gets `context` extra baseline samples on both sides and an
    annotations.csv marking the original window.
    """
    cfg = cfg or SynthConfig()
    os.makedirs(raw_dir, exist_ok=True)
    raw = generate_raw_samples(seed, cfg)
    rng = np.random.default_rng(seed + 1)
    ann_lines = []
    with open(os.path.join(raw_dir, "samples.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("sample_id,activity,location\n")
        for s in raw:
            fh.write(f"{s.sample_id},{s.activity},{s.location}\n")
    for s in raw:
        series = s.series
        if annotated:
            length = series.shape[1]
            ext = np.empty((NUM_CHANNELS, length + 2 * context))
            ext[:, context : context + length] = series
            # boundary-hold context plus noise, outside the annotated window
            ext[:, :context] = series[:, :1] + cfg.noise * rng.standard_normal(
                (NUM_CHANNELS, context)
            )
            ext[:, context + length :] = series[:, -1:] + cfg.noise * rng.standard_normal(
                (NUM_CHANNELS, context)
            )
            ann_lines.append(f"{s.sample_id},{context},{context + length}")
            series = ext
        np.savetxt(
            os.path.join(raw_dir, f"{s.sample_id}.csv"),
            series.T,
            fmt="%.6f",
            delimiter=",",
        )
    if annotated:
        with open(os.path.join(raw_dir, "annotations.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("sample_id,start_idx,end_idx\n")
            for line in ann_lines:
                fh.write(line + "\n")
    return raw


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Write a synthetic CSI dataset (container + manifest + coords)."
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--reps", type=int, default=15)
    parser.add_argument("--discard", type=int, default=None,
                        help="samples to drop (default: 46 at full size, else 0)")
    args = parser.parse_args(argv)
    cfg = SynthConfig(reps=args.reps)
    if args.discard is not None:
        cfg.discard = args.discard
    elif args.reps != 15:
        cfg.discard = 0
    os.makedirs(args.out, exist_ok=True)
    container = os.path.join(args.out, "dataset.csit")
    manifest = os.path.join(args.out, "manifest.csv")
    build_dataset(container, manifest, args.seed, cfg)
    write_default_coords(os.path.join(args.out, "coords.csv"))
    print(f"wrote {container} and {manifest} (seed {args.seed})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
