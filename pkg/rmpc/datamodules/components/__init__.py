from .sampler import (
    SamplerSpec,
    load_recorded_reference,
    sample_batch,
    sample_instance,
    sample_reference,
    scenario_reference,
    sine_reference,
)
