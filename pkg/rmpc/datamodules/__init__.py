from .components import SamplerSpec, sample_batch, sample_instance
from .instance_datamodule import InstanceDataModule, InstanceStream
