from typing import Dict, Iterator, List, Optional

import numpy as np
import torch
from pytorch_lightning import LightningDataModule
from torch.utils.data import DataLoader, IterableDataset

from rmpc.rollout import MpcInstance, stack_instances
from rmpc.utils import component_rng, derive_seed

from .components.sampler import SamplerSpec, sample_batch


class InstanceStream(IterableDataset):
    """Endless stream of stacked instance batches {"x0": (B, n), "r": (B, N)}.

    The stream restarts from `seed` every time it is iterated, so a fresh
    dataloader iterator reproduces the same batch sequence.
    """

    def __init__(self, spec: SamplerSpec, batch_size: int, seed: int):
        super().__init__()
        self.spec = spec
        self.batch_size = batch_size
        self.seed = seed

    def __iter__(self) -> Iterator[Dict[str, torch.Tensor]]:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        while True:
            x0, r, _ = stack_instances(sample_batch(self.spec, rng, self.batch_size))
            yield {"x0": torch.from_numpy(x0), "r": torch.from_numpy(r)}


class InstanceDataModule(LightningDataModule):
    """Training instances drawn from the sampler, plus a held-out evaluation set.

    Training batches use the `sampler` stream of the root seed; the evaluation set
    uses the `eval` stream, so the two never share draws.
    """

    def __init__(
        self,
        spec: SamplerSpec,
        batch_size: int = 256,
        seed: int = 0,
        eval_instances: int = 16,
        eval_label: str = "eval",
    ):
        super().__init__()

        self.spec = spec
        self.batch_size = batch_size
        self.seed = seed
        self.eval_instances = eval_instances
        self.eval_label = eval_label

        self.data_train: Optional[InstanceStream] = None
        self._eval_set: Optional[List[MpcInstance]] = None

    def setup(self, stage: Optional[str] = None):
        if self.data_train is None:
            self.data_train = InstanceStream(self.spec, self.batch_size, derive_seed(self.seed, "sampler"))

    def train_dataloader(self):
        return DataLoader(dataset=self.data_train, batch_size=None, num_workers=0)

    def eval_set(self) -> List[MpcInstance]:
        if self._eval_set is None:
            rng = component_rng(self.seed, self.eval_label)
            self._eval_set = sample_batch(self.spec, rng, self.eval_instances)
        return self._eval_set
