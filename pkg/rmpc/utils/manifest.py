"""Run manifests: flat `key=value` text identifying the exact experiment in a directory."""
import hashlib
from pathlib import Path
from typing import Dict, Optional, Union

from omegaconf import DictConfig

import rmpc
from rmpc.errors import ConfigError

from . import pylogger
from .config import config_hash

log = pylogger.get_pylogger(__name__)

MANIFEST_NAME = "manifest.txt"


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def read_manifest(output_dir: Union[str, Path]) -> Dict[str, str]:
    path = Path(output_dir, MANIFEST_NAME)
    entries = {}
    if not path.is_file():
        return entries
    for line in path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    return entries


def check_manifest(output_dir: Union[str, Path], cfg: DictConfig) -> Optional[Dict[str, str]]:
    """Refuses to reuse a directory written by a different experiment."""
    previous = read_manifest(output_dir)
    if previous and previous.get("config_hash") not in (None, config_hash(cfg)):
        raise ConfigError(
            f"{output_dir} holds artifacts of another experiment "
            f"<config_hash={previous['config_hash']}>, current <config_hash={config_hash(cfg)}>")
    return previous or None


def write_manifest(output_dir: Union[str, Path], command: str, cfg: DictConfig,
                   extra: Optional[Dict[str, object]] = None) -> Path:
    entries = {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "code_version": rmpc.__version__,
        "name": cfg.name,
    }
    entries.update(extra or {})
    path = Path(output_dir, MANIFEST_NAME)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{key}={entries[key]}\n" for key in sorted(entries)), encoding="utf-8")
    log.info(f"Wrote manifest <{path}>")
    return path
