"""Binary policy checkpoints.

Layout (all integers little-endian):

    b"RMPC1"                        magic
    uint32  header length H
    H bytes UTF-8 JSON header       {"architecture": {...}, "tensors": [{"name", "shape"}, ...]}
    for each tensor in header order: prod(shape) float64 values, '<f8', C order

A human-readable sidecar `<checkpoint>.meta.yaml` holds the metadata passed to
`save_checkpoint` (config hash, iteration, seed, ...).
"""
import json
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import torch
import yaml

from rmpc.errors import ArchitectureMismatchError, CheckpointFormatError
from rmpc.utils import get_pylogger

from .components.recurrent_policy import PolicySpec, RecurrentPolicy

log = get_pylogger(__name__)

MAGIC = b"RMPC1"
META_SUFFIX = ".meta.yaml"


def metadata_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + META_SUFFIX)


def save_checkpoint(policy: RecurrentPolicy, path: Union[str, Path], metadata: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    named = [(name, p.detach().cpu().numpy()) for name, p in policy.named_parameters()]
    header = {
        "architecture": policy.spec.to_dict(),
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in named],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for _, arr in named:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(metadata_path(path), "w", encoding="utf-8") as f:
        yaml.safe_dump(dict(metadata or {}), f, sort_keys=True, default_flow_style=False)
    log.info(f"Saved checkpoint <{path}>")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[RecurrentPolicy, Dict]:
    path = Path(path)
    data = path.read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointFormatError(f"{path}: missing magic {MAGIC!r}")
    offset = len(MAGIC)
    try:
        (header_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
        offset += header_len
        spec = PolicySpec.from_dict(header["architecture"])
    except (struct.error, ValueError, KeyError, TypeError) as ex:
        raise CheckpointFormatError(f"{path}: unreadable header ({ex})") from ex

    policy = RecurrentPolicy(spec)
    params = dict(policy.named_parameters())
    state = {}
    for entry in header["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in params or tuple(params[name].shape) != shape:
            raise CheckpointFormatError(f"{path}: tensor <{name}{list(shape)}> does not fit the architecture")
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointFormatError(f"{path}: truncated tensor <{name}>")
        state[name] = torch.from_numpy(np.frombuffer(data, dtype="<f8", count=count, offset=offset)
                                       .astype(np.float64).reshape(shape))
        offset = end
    if offset != len(data) or set(state) != set(params):
        raise CheckpointFormatError(f"{path}: tensor table does not match the payload")
    with torch.no_grad():
        for name, value in state.items():
            params[name].copy_(value)

    meta_file = metadata_path(path)
    metadata = {}
    if meta_file.is_file():
        with open(meta_file, encoding="utf-8") as f:
            metadata = yaml.safe_load(f) or {}
    return policy, metadata


def check_architecture(policy: RecurrentPolicy, expected: PolicySpec) -> None:
    if policy.spec != expected:
        raise ArchitectureMismatchError(
            f"checkpoint architecture {policy.spec.to_dict()} does not match configured {expected.to_dict()}")
