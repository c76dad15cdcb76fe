"""Binary file formats: CSIT fingerprint containers, CKPT parameter
checkpoints, and DIST distance-matrix caches. All integers little-endian,
all payloads IEEE-754 float32 LE. Write -> read -> write must be
byte-identical.
"""

import struct

import numpy as np

from .errors import FormatError

CSIT_MAGIC = b"CSIT"
CSIT_VERSION = 1
CKPT_MAGIC = b"CKPT"
CKPT_VERSION = 1
DIST_MAGIC = b"DIST"

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def fnv1a64_file(path) -> int:
    with open(path, "rb") as fh:
        return fnv1a64(fh.read())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file while reading {what}")
    return buf


# --- CSIT container -------------------------------------------------------
# magic "CSIT" | u16 version | u32 sample count N | u16 channels C |
# u16 length T | N*C*T float32, sample-major, channel-major, time-minor.


def write_container(path, samples: np.ndarray) -> None:
    """Write an [N, C, T] float array as a CSIT container."""
    samples = np.asarray(samples)
    if samples.ndim != 3:
        raise FormatError(f"container payload must be [N, C, T], got {samples.shape}")
    n, c, t = samples.shape
    with open(path, "wb") as fh:
        fh.write(CSIT_MAGIC)
        fh.write(struct.pack("<HIHH", CSIT_VERSION, n, c, t))
        fh.write(np.ascontiguousarray(samples, dtype="<f4").tobytes())


def read_container(path) -> np.ndarray:
    """Read a CSIT container into an [N, C, T] float32 array."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CSIT_MAGIC:
            raise FormatError(f"bad container magic {magic!r}")
        version, n, c, t = struct.unpack("<HIHH", _read_exact(fh, 10, "header"))
        if version != CSIT_VERSION:
            raise FormatError(f"unsupported container version {version}")
        payload = fh.read()
    expected = n * c * t * 4
    if len(payload) != expected:
        raise FormatError(
            f"container payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, c, t)
    return np.array(data)  # own the memory, writable


# --- CKPT checkpoint ------------------------------------------------------
# magic "CKPT" | u16 version | records until EOF:
#   u16 name length | name bytes (utf-8) | u8 rank | u32 dims | float32 payload.


def write_checkpoint(path, arrays: dict) -> None:
    """Write named float32 arrays; insertion order is preserved on disk."""
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<H", CKPT_VERSION))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise FormatError(f"parameter name too long: {name[:40]}...")
            if arr.ndim > 0xFF:
                raise FormatError(f"rank {arr.ndim} exceeds format limit")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def read_checkpoint(path) -> dict:
    """Read a CKPT file into an ordered name -> float32 array dict."""
    arrays = {}
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CKPT_MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != CKPT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        while True:
            head = fh.read(2)
            if not head:
                break
            if len(head) != 2:
                raise FormatError("truncated record header")
            (name_len,) = struct.unpack("<H", head)
            name = _read_exact(fh, name_len, "record name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(fh, 1, "rank"))
            dims = struct.unpack(
                f"<{rank}I", _read_exact(fh, 4 * rank, "dims")
            )
            count = 1
            for dim in dims:
                count *= dim
            payload = _read_exact(fh, 4 * count, f"payload of {name}")
            arrays[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    return arrays


# --- DIST distance-matrix cache -------------------------------------------
# magic "DIST" | u32 rows | u32 cols | float32 row-major.


def write_dist_cache(path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise FormatError(f"distance matrix must be 2-D, got {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(DIST_MAGIC)
        fh.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_dist_cache(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != DIST_MAGIC:
            raise FormatError(f"bad distance cache magic {magic!r}")
        rows, cols = struct.unpack("<II", _read_exact(fh, 8, "header"))
        payload = _read_exact(fh, rows * cols * 4, "payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
