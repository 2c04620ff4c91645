import json
import struct
from dataclasses import replace

import numpy as np
import pytest
import torch

from rmpc.errors import ArchitectureMismatchError, CheckpointFormatError
from rmpc.models.checkpoint import MAGIC, check_architecture, load_checkpoint, metadata_path, save_checkpoint
from rmpc.models.components import RecurrentPolicy


def test_round_trip(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc", {"iteration": 12, "config_hash": "abc"})
    loaded, metadata = load_checkpoint(path)
    assert loaded.spec == small_policy.spec
    for (name, a), (_, b) in zip(small_policy.named_parameters(), loaded.named_parameters()):
        assert torch.equal(a, b), name
    assert metadata == {"iteration": 12, "config_hash": "abc"}

    x0, r = np.array([0.3, -0.1]), np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(loaded.act(x0, r, 3), small_policy.act(x0, r, 3))


def test_file_layout(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    data = path.read_bytes()
    assert data.startswith(MAGIC)
    (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
    header = json.loads(data[len(MAGIC) + 4:len(MAGIC) + 4 + header_len])
    assert header["architecture"] == small_policy.spec.to_dict()
    count = sum(int(np.prod(t["shape"])) for t in header["tensors"])
    assert count == sum(p.numel() for p in small_policy.parameters())
    assert len(data) == len(MAGIC) + 4 + header_len + 8 * count
    assert metadata_path(path).name == "policy.rmpc.meta.yaml"


def test_missing_metadata_is_empty(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    metadata_path(path).unlink()
    _, metadata = load_checkpoint(path)
    assert metadata == {}


def test_bad_magic(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    data = path.read_bytes()
    path.write_bytes(b"XXXXX" + data[len(MAGIC):])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_truncated_payload(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_trailing_bytes(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    path.write_bytes(path.read_bytes() + b"\0" * 8)
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_garbled_header(tmp_path, small_policy):
    path = save_checkpoint(small_policy, tmp_path / "policy.rmpc")
    data = bytearray(path.read_bytes())
    data[len(MAGIC) + 4] = ord("#")
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_architecture_mismatch(small_spec, small_policy):
    check_architecture(small_policy, small_spec)
    with pytest.raises(ArchitectureMismatchError):
        check_architecture(small_policy, replace(small_spec, hidden_dim=8))
    with pytest.raises(ArchitectureMismatchError):
        check_architecture(RecurrentPolicy(replace(small_spec, cell_kind="plain-rnn")), small_spec)
