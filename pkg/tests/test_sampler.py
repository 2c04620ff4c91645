import numpy as np
import pandas as pd
import pytest
import torch

from rmpc.datamodules import InstanceDataModule
from rmpc.datamodules.components import (
    SamplerSpec,
    load_recorded_reference,
    sample_batch,
    sample_instance,
    scenario_reference,
)
from rmpc.errors import ConfigError, ContractViolation


def test_degenerate_box_without_tracking():
    spec = SamplerSpec(state_low=(0.3, -0.2), state_high=(0.3, -0.2), horizon=4, track_index=None)
    inst = sample_instance(spec, np.random.default_rng(0))
    np.testing.assert_array_equal(inst.x0, [0.3, -0.2])
    assert inst.horizon == 4 and inst.r.shape == (4,)


def test_tracked_component_is_relative_to_the_first_reference():
    spec = SamplerSpec(state_low=(0.3, -0.2), state_high=(0.3, -0.2), horizon=4, track_index=0)
    inst = sample_instance(spec, np.random.default_rng(0))
    assert inst.x0[0] == pytest.approx(0.3 + inst.r[0])
    assert inst.x0[1] == -0.2


def test_sine_reference_formula():
    spec = SamplerSpec(state_low=(0.0,), state_high=(0.0,), horizon=4, amplitude=(2.0, 2.0),
                       wavelength=(8.0, 8.0), phase=(0.0, 0.0), step_length=0.5)
    inst = sample_instance(spec, np.random.default_rng(0))
    i = np.arange(1, 5)
    np.testing.assert_allclose(inst.r, 2.0 * np.sin(2 * np.pi * i * 0.5 / 8.0), atol=1e-15)


def test_same_stream_same_instances():
    spec = SamplerSpec(state_low=(-1.0, -1.0), state_high=(1.0, 1.0), horizon=5)
    a = sample_batch(spec, np.random.default_rng(42), 3)
    b = sample_batch(spec, np.random.default_rng(42), 3)
    c = sample_batch(spec, np.random.default_rng(43), 3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.x0, y.x0)
        np.testing.assert_array_equal(x.r, y.r)
    assert not np.array_equal(a[0].r, c[0].r)


def test_piecewise_constant_holds_levels():
    spec = SamplerSpec(state_low=(0.0,), state_high=(0.0,), horizon=9, family="piecewise-constant",
                       levels=(-2.0, 2.0), hold=(3, 3))
    r = sample_instance(spec, np.random.default_rng(0)).r
    assert np.all(np.abs(r) <= 2.0)
    for block in range(3):
        assert np.unique(r[3 * block:3 * block + 3]).size == 1


def test_recorded_windows_are_contiguous():
    spec = SamplerSpec(state_low=(0.0,), state_high=(0.0,), horizon=5, family="recorded",
                       recorded=tuple(np.arange(20.0)))
    r = sample_instance(spec, np.random.default_rng(1)).r
    np.testing.assert_array_equal(np.diff(r), np.ones(4))


def test_recorded_reference_must_cover_the_horizon():
    with pytest.raises(ContractViolation):
        SamplerSpec(state_low=(0.0,), state_high=(0.0,), horizon=5, family="recorded", recorded=(1.0, 2.0))


def test_sampler_validation():
    with pytest.raises(ContractViolation):
        SamplerSpec(state_low=(1.0,), state_high=(0.0,), horizon=2)
    with pytest.raises(ContractViolation):
        SamplerSpec(state_low=(0.0,), state_high=(1.0,), horizon=2, family="chirp")
    with pytest.raises(ContractViolation):
        SamplerSpec(state_low=(0.0,), state_high=(1.0,), horizon=2, track_index=3)


def test_load_recorded_reference(tmp_path):
    named = tmp_path / "named.csv"
    pd.DataFrame({"s": [0.0, 1.0, 2.0], "r": [0.5, 0.6, 0.7]}).to_csv(named, index=False)
    np.testing.assert_array_equal(load_recorded_reference(named), [0.5, 0.6, 0.7])

    unnamed = tmp_path / "unnamed.csv"
    pd.DataFrame({"label": ["a", "b"], "offset": [1.5, -1.5]}).to_csv(unnamed, index=False)
    np.testing.assert_array_equal(load_recorded_reference(unnamed), [1.5, -1.5])

    with pytest.raises(ConfigError):
        load_recorded_reference(tmp_path / "missing.csv")


def test_scenario_references():
    np.testing.assert_array_equal(scenario_reference("piecewise-constant", 6, 1.0, levels=[-1.0, 1.0], hold=2),
                                  [-1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    np.testing.assert_array_equal(scenario_reference("recorded", 4, 1.0, recorded=np.array([1.0, 2.0])),
                                  [1.0, 2.0, 2.0, 2.0])
    np.testing.assert_allclose(scenario_reference("sine", 3, 0.25, amplitude=1.0, wavelength=1.0),
                               np.sin(2 * np.pi * np.arange(1, 4) * 0.25), atol=1e-15)
    with pytest.raises(ContractViolation):
        scenario_reference("chirp", 3, 1.0)


def test_datamodule_streams_are_reproducible_and_disjoint():
    spec = SamplerSpec(state_low=(-1.0, -1.0), state_high=(1.0, 1.0), horizon=3)
    dm = InstanceDataModule(spec, batch_size=5, seed=0, eval_instances=4)
    dm.setup()
    first = next(iter(dm.train_dataloader()))
    again = next(iter(dm.train_dataloader()))
    assert first["x0"].shape == (5, 2) and first["r"].shape == (5, 3)
    assert first["x0"].dtype == torch.float64
    assert torch.equal(first["x0"], again["x0"]) and torch.equal(first["r"], again["r"])

    eval_set = dm.eval_set()
    assert len(eval_set) == 4
    assert eval_set is dm.eval_set()
    assert not np.array_equal(eval_set[0].r, first["r"][0].numpy())
