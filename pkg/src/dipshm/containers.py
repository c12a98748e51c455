"""Binary containers for datasets (DIPD) and trained models (DIPW).

Both formats are little-endian with 64-bit float payloads, chosen for
precision headroom over compactness. Round-trips are bit-exact.

DIPD layout:
    magic "DIPD" | version u16 | dtype code u16 (1 = float64) | ndim u16
    | dims u64 * ndim | payload float64 row-major
    | record count u64 | per record: record_id u64, label i64, rate f64

DIPW layout:
    magic "DIPW" | version u16 | header length u64 | header JSON (utf-8)
    | tensor count u64
    | per tensor: name length u16, name utf-8, ndim u16, dims u64 * ndim,
      float64 payload
The JSON header carries the model spec, the training configuration
snapshot, the seed, and the training dtype.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .errors import ContainerFormatError
from .neural.network import LayerSpec, ModelSpec
from .neural.training import TrainConfig
from .synth import Dataset

DIPD_MAGIC = b"DIPD"
DIPW_MAGIC = b"DIPW"
FORMAT_VERSION = 1
DTYPE_FLOAT64 = 1


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ContainerFormatError("container truncated")
    return buf


# ---------------------------------------------------------------------------
# DIPD


def write_dipd(path, array: np.ndarray, record_ids, labels, sampling_rate_hz: float):
    """Write a labeled record tensor; leading dimension indexes records."""
    array = np.ascontiguousarray(array, dtype="<f8")
    record_ids = np.asarray(record_ids, dtype=np.uint64)
    labels = np.asarray(labels, dtype=np.int64)
    if array.shape[0] != len(record_ids) or len(record_ids) != len(labels):
        raise ContainerFormatError("record ids and labels must match the leading dimension")
    with open(path, "wb") as fh:
        fh.write(DIPD_MAGIC)
        fh.write(struct.pack("<HHH", FORMAT_VERSION, DTYPE_FLOAT64, array.ndim))
        fh.write(struct.pack(f"<{array.ndim}Q", *array.shape))
        fh.write(array.tobytes())
        fh.write(struct.pack("<Q", len(record_ids)))
        for rid, lab in zip(record_ids, labels):
            fh.write(struct.pack("<Qqd", int(rid), int(lab), float(sampling_rate_hz)))


def read_dipd(path):
    """Returns (array, record_ids, labels, sampling_rate_hz)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != DIPD_MAGIC:
            raise ContainerFormatError("not a DIPD file (bad magic)")
        version, dtype_code, ndim = struct.unpack("<HHH", _read_exact(fh, 6))
        if version != FORMAT_VERSION:
            raise ContainerFormatError(f"unsupported DIPD version {version}")
        if dtype_code != DTYPE_FLOAT64:
            raise ContainerFormatError(f"unsupported dtype code {dtype_code}")
        dims = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim))
        count = int(np.prod(dims))
        array = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8").reshape(dims).copy()
        (n_records,) = struct.unpack("<Q", _read_exact(fh, 8))
        if n_records != dims[0]:
            raise ContainerFormatError("label table does not match the record dimension")
        record_ids = np.empty(n_records, dtype=np.int64)
        labels = np.empty(n_records, dtype=np.int64)
        rate = None
        for i in range(n_records):
            rid, lab, r = struct.unpack("<Qqd", _read_exact(fh, 24))
            record_ids[i], labels[i] = rid, lab
            if rate is None:
                rate = r
            elif rate != r:
                raise ContainerFormatError("mixed sampling rates in one container")
        if fh.read(1):
            raise ContainerFormatError("trailing bytes after DIPD footer")
    return array, record_ids, labels, float(rate)


def write_dataset(path, dataset: Dataset):
    write_dipd(path, dataset.data, dataset.record_ids, dataset.labels,
               dataset.sampling_rate_hz)


def read_dataset(path) -> Dataset:
    array, record_ids, labels, rate = read_dipd(path)
    if array.ndim != 3:
        raise ContainerFormatError(f"dataset container must be 3-d, got {array.ndim}-d")
    return Dataset(data=array, labels=labels, record_ids=record_ids, sampling_rate_hz=rate)


# ---------------------------------------------------------------------------
# DIPW


def _spec_to_jsonable(spec: ModelSpec) -> dict:
    return {
        "layers": [[ls.kind, ls.params] for ls in spec.layers],
        "input_shape": list(spec.input_shape),
        "class_count": spec.class_count,
    }


def _spec_from_jsonable(obj) -> ModelSpec:
    def tupleize(value):
        return tuple(value) if isinstance(value, list) else value

    layers = tuple(
        LayerSpec(kind, {k: tupleize(v) for k, v in params.items()})
        for kind, params in obj["layers"]
    )
    return ModelSpec(layers, tuple(obj["input_shape"]), int(obj["class_count"]))


def write_dipw(path, spec: ModelSpec, state: dict, train_config: TrainConfig,
               seed: int, dtype: str = "float64"):
    header = {
        "model_spec": _spec_to_jsonable(spec),
        "train_config": asdict(train_config),
        "seed": int(seed),
        "dtype": dtype,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(DIPW_MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<Q", len(state)))
        for name in sorted(state):
            arr = np.ascontiguousarray(state[name], dtype="<f8")
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<H", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def read_dipw(path):
    """Returns (model_spec, state, train_config, seed, dtype)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != DIPW_MAGIC:
            raise ContainerFormatError("not a DIPW file (bad magic)")
        (version,) = struct.unpack("<H", _read_exact(fh, 2))
        if version != FORMAT_VERSION:
            raise ContainerFormatError(f"unsupported DIPW version {version}")
        (blob_len,) = struct.unpack("<Q", _read_exact(fh, 8))
        header = json.loads(_read_exact(fh, blob_len).decode())
        (n_tensors,) = struct.unpack("<Q", _read_exact(fh, 8))
        state = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, name_len).decode()
            (ndim,) = struct.unpack("<H", _read_exact(fh, 2))
            dims = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim))
            count = int(np.prod(dims)) if dims else 1
            state[name] = np.frombuffer(_read_exact(fh, 8 * count),
                                        dtype="<f8").reshape(dims).copy()
        if fh.read(1):
            raise ContainerFormatError("trailing bytes after DIPW tensors")
    spec = _spec_from_jsonable(header["model_spec"])
    config = TrainConfig(**header["train_config"])
    return spec, state, config, int(header["seed"]), header.get("dtype", "float64")
