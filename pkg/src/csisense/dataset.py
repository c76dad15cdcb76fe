"""CSI fingerprint ingestion: container + manifest loading, activity-window
segmentation, linear resampling to the fixed 192-sample grid, global
standardization from the training split, and the deterministic 1-in-5
train/test split."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateDataError,
    FormatError,
    RangeError,
    ValidationError,
)
from .formats import read_container, write_container

NUM_CHANNELS = 52
TARGET_LEN = 192
NUM_ACTIVITIES = 6
NUM_LOCATIONS = 16

MANIFEST_HEADER = ["sample_id", "activity", "location", "split"]
ANNOTATION_HEADER = ["sample_id", "start_idx", "end_idx"]
COORDS_HEADER = ["location_id", "x_m", "y_m"]


@dataclass
class CsiFingerprint:
    amplitudes: np.ndarray  # [52, T]
    activity: int
    location: int
    sample_id: str


@dataclass
class Annotation:
    sample_id: str
    start_idx: int
    end_idx: int

    def __post_init__(self):
        if self.start_idx < 0:
            raise RangeError(f"{self.sample_id}: start_idx {self.start_idx} < 0")
        if self.end_idx - self.start_idx < 2:
            raise RangeError(
                f"{self.sample_id}: window [{self.start_idx}, {self.end_idx}) "
                "is shorter than 2 samples"
            )


@dataclass
class ManifestRow:
    sample_id: str
    activity: int
    location: int
    split: str


@dataclass
class DatasetManifest:
    samples: list = field(default_factory=list)
    normalization: tuple = None  # (global_mean, global_std)
    location_coords: dict = None  # location_id -> (x_m, y_m)

    def split_counts(self):
        train = sum(1 for s in self.samples if s.split == "train")
        return train, len(self.samples) - train


def make_split(n, phase=4):
    """Deterministic 1-in-5 split: index i is 'test' iff i mod 5 == phase."""
    if n < 0:
        raise ValidationError(f"sample count must be >= 0, got {n}")
    if not 0 <= phase < 5:
        raise ValidationError(f"phase must be in 0..4, got {phase}")
    return ["test" if i % 5 == phase else "train" for i in range(n)]


def segment(raw_series, annotation: Annotation):
    """Column slice [start_idx, end_idx) of a [52, L] series."""
    length = raw_series.shape[1]
    if annotation.end_idx > length:
        raise RangeError(
            f"{annotation.sample_id}: end_idx {annotation.end_idx} exceeds "
            f"series length {length}"
        )
    return raw_series[:, annotation.start_idx : annotation.end_idx]


def resample_linear(series, target_len=TARGET_LEN):
    """Per-channel linear interpolation onto an endpoint-aligned grid.

    Output column j samples the input at position j * (L - 1) / (target_len - 1),
    so the first and last input columns are preserved exactly and an input
    already at target_len passes through unchanged.
    """
    series = np.asarray(series)
    length = series.shape[1]
    if length < 2:
        raise DegenerateDataError(
            f"cannot resample a series of length {length} (need >= 2)"
        )
    pos = np.arange(target_len) * ((length - 1) / (target_len - 1))
    lo = np.floor(pos).astype(np.intp)
    lo = np.minimum(lo, length - 2)
    frac = pos - lo
    return series[:, lo] * (1.0 - frac) + series[:, lo + 1] * frac


def compute_normalization(fingerprints, manifest: DatasetManifest):
    """Global (mean, std) over the amplitudes of the training split only."""
    split_by_id = {row.sample_id: row.split for row in manifest.samples}
    train_stack = [
        fp.amplitudes for fp in fingerprints if split_by_id[fp.sample_id] == "train"
    ]
    if not train_stack:
        raise DegenerateDataError("no training samples to compute normalization from")
    stacked = np.stack(train_stack).astype(np.float64)
    mean = float(stacked.mean())
    std = float(stacked.std())
    if std == 0.0:
        raise DegenerateDataError("training amplitudes have zero variance")
    return mean, std


def standardize(fingerprints, manifest: DatasetManifest):
    """Replace every amplitude x by (x - mean) / std, with stats from the
    training split; records (mean, std) on the manifest."""
    if manifest.normalization is None:
        manifest.normalization = compute_normalization(fingerprints, manifest)
    mean, std = manifest.normalization
    return [
        CsiFingerprint(
            amplitudes=(fp.amplitudes - mean) / std,
            activity=fp.activity,
            location=fp.location,
            sample_id=fp.sample_id,
        )
        for fp in fingerprints
    ]


def destandardize(fingerprints, manifest: DatasetManifest):
    """Inverse of standardize given the stored (mean, std)."""
    if manifest.normalization is None:
        raise ValidationError("manifest has no stored normalization")
    mean, std = manifest.normalization
    return [
        CsiFingerprint(
            amplitudes=fp.amplitudes * std + mean,
            activity=fp.activity,
            location=fp.location,
            sample_id=fp.sample_id,
        )
        for fp in fingerprints
    ]


# --- CSV files --------------------------------------------------------------


def _check_header(actual, expected, what):
    if actual != expected:
        raise FormatError(f"{what} header {actual} != expected {expected}")


def read_manifest_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, MANIFEST_HEADER, "manifest")
        for line in reader:
            if len(line) != 4:
                raise FormatError(f"manifest row has {len(line)} fields: {line}")
            sample_id, activity, location, split = line
            try:
                activity = int(activity)
                location = int(location)
            except ValueError as exc:
                raise FormatError(f"non-integer label in manifest row {line}") from exc
            if not 0 <= activity < NUM_ACTIVITIES:
                raise ValidationError(
                    f"{sample_id}: activity {activity} outside 0..{NUM_ACTIVITIES - 1}"
                )
            if not 0 <= location < NUM_LOCATIONS:
                raise ValidationError(
                    f"{sample_id}: location {location} outside 0..{NUM_LOCATIONS - 1}"
                )
            if split not in ("train", "test"):
                raise ValidationError(f"{sample_id}: bad split {split!r}")
            rows.append(ManifestRow(sample_id, activity, location, split))
    ids = [r.sample_id for r in rows]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate sample_id in manifest")
    return rows


def write_manifest_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(MANIFEST_HEADER) + "\n")
        for r in rows:
            fh.write(f"{r.sample_id},{r.activity},{r.location},{r.split}\n")


def read_annotations_csv(path):
    annotations = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, ANNOTATION_HEADER, "annotation")
        for line in reader:
            if len(line) != 3:
                raise FormatError(f"annotation row has {len(line)} fields: {line}")
            sample_id, start, end = line
            try:
                ann = Annotation(sample_id, int(start), int(end))
            except ValueError as exc:
                raise FormatError(f"non-integer index in annotation {line}") from exc
            if sample_id in annotations:
                raise ValidationError(f"duplicate annotation for {sample_id}")
            annotations[sample_id] = ann
    return annotations


def read_coords_csv(path):
    coords = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, COORDS_HEADER, "coordinates")
        for line in reader:
            if len(line) != 3:
                raise FormatError(f"coordinates row has {len(line)} fields: {line}")
            loc, x, y = line
            try:
                coords[int(loc)] = (float(x), float(y))
            except ValueError as exc:
                raise FormatError(f"bad coordinates row {line}") from exc
    if len(coords) != NUM_LOCATIONS:
        raise ValidationError(
            f"coordinates file has {len(coords)} locations, expected {NUM_LOCATIONS}"
        )
    return coords


def write_default_coords(path, spacing_m=1.0):
    """Synthetic fallback grid: 4x4 layout, spacing_m apart, row-major ids.
    Real deployments should supply a measured coordinates file instead."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(COORDS_HEADER) + "\n")
        for loc in range(NUM_LOCATIONS):
            x = (loc % 4) * spacing_m
            y = (loc // 4) * spacing_m
            fh.write(f"{loc},{x!r},{y!r}\n")


# --- container + manifest ----------------------------------------------------


def load_dataset(container_path, manifest_path):
    """Read a CSIT container plus its manifest into fingerprints.

    Validates the 52-channel / 192-sample shape, label ranges, and that the
    manifest row count equals the container sample count.
    """
    data = read_container(container_path)
    n, c, t = data.shape
    if n > 0 and (c != NUM_CHANNELS or t != TARGET_LEN):
        raise FormatError(
            f"container shape [{c} x {t}] != expected [{NUM_CHANNELS} x {TARGET_LEN}]"
        )
    rows = read_manifest_csv(manifest_path)
    if len(rows) != n:
        raise ConsistencyError(
            f"manifest has {len(rows)} rows but container has {n} samples"
        )
    fingerprints = [
        CsiFingerprint(
            amplitudes=data[i].astype(np.float64),
            activity=row.activity,
            location=row.location,
            sample_id=row.sample_id,
        )
        for i, row in enumerate(rows)
    ]
    return fingerprints, DatasetManifest(samples=rows)


def save_dataset(container_path, manifest_path, fingerprints, manifest: DatasetManifest):
    order = {row.sample_id: i for i, row in enumerate(manifest.samples)}
    if len(order) != len(fingerprints) or any(
        fp.sample_id not in order for fp in fingerprints
    ):
        raise ConsistencyError("fingerprints do not match manifest rows")
    stack = np.zeros((len(fingerprints), NUM_CHANNELS, TARGET_LEN), dtype=np.float32)
    for fp in fingerprints:
        if fp.amplitudes.shape != (NUM_CHANNELS, TARGET_LEN):
            raise FormatError(
                f"{fp.sample_id}: shape {fp.amplitudes.shape} != "
                f"({NUM_CHANNELS}, {TARGET_LEN})"
            )
        stack[order[fp.sample_id]] = fp.amplitudes
    write_container(container_path, stack)
    write_manifest_csv(manifest_path, manifest.samples)


def to_arrays(fingerprints, dtype=np.float32):
    """Stack fingerprints into ([N, 52, 192], activity[N], location[N])."""
    x = np.stack([fp.amplitudes for fp in fingerprints]).astype(dtype)
    act = np.array([fp.activity for fp in fingerprints], dtype=np.int64)
    loc = np.array([fp.location for fp in fingerprints], dtype=np.int64)
    return x, act, loc


def split_fingerprints(fingerprints, manifest: DatasetManifest):
    """(train, test) fingerprint lists in manifest order."""
    split_by_id = {row.sample_id: row.split for row in manifest.samples}
    train = [fp for fp in fingerprints if split_by_id[fp.sample_id] == "train"]
    test = [fp for fp in fingerprints if split_by_id[fp.sample_id] == "test"]
    return train, test
