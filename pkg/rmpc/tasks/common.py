from pathlib import Path
from typing import Optional

import torch
from omegaconf import DictConfig

from rmpc.utils import configure_logging, get_pylogger
from rmpc.utils.config import save_config
from rmpc.utils.manifest import check_manifest

log = get_pylogger(__name__)


def prepare_run(cfg: DictConfig, command: str, artifact_dir: Optional[str] = None) -> Path:
    """Creates the output dir, installs logging and saves the resolved config next to the artifacts.

    The manifest of the directory the command writes to (`artifact_dir` below the
    output dir) must come from the same experiment, otherwise the run is refused.
    """
    output_dir = Path(cfg.paths.output_dir)
    target = output_dir / artifact_dir if artifact_dir else output_dir
    check_manifest(target, cfg)
    target.mkdir(parents=True, exist_ok=True)
    configure_logging(cfg.log_level, output_dir / f"{command}.log")
    torch.set_num_threads(max(1, int(cfg.workers)))
    save_config(cfg, target / "config.yaml")
    log.info(f"Starting <command={command}, name={cfg.name}, seed={cfg.seed}, workers={cfg.workers}>")
    return output_dir
