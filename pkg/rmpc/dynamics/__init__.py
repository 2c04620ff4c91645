from typing import Dict

from rmpc.errors import ConfigError

from .base import SystemModel
from .bicycle import BicycleModel, BicycleParams, slip_angles
from .linear import DoubleIntegrator, LinearModel
from .scalar import CubicScalarModel
from .tire import TireForceParams, fiala_force, fiala_force_derivative

MODEL_KINDS = ("double_integrator", "scalar_cubic", "bicycle")


def build_model(kind: str, params: Dict[str, float] = None) -> SystemModel:
    """Constructs a registered model from its kind and parameter overrides."""
    params = dict(params or {})
    try:
        if kind == "double_integrator":
            return DoubleIntegrator(**params)
        if kind == "scalar_cubic":
            return CubicScalarModel(**params)
        if kind == "bicycle":
            return BicycleModel(BicycleParams(**params))
    except TypeError as ex:
        raise ConfigError(f"invalid parameter for model <{kind}>: {ex}") from ex
    raise ConfigError(f"unknown model kind <{kind}>; expected one of {MODEL_KINDS}")


__all__ = [
    "BicycleModel",
    "BicycleParams",
    "CubicScalarModel",
    "DoubleIntegrator",
    "LinearModel",
    "MODEL_KINDS",
    "SystemModel",
    "TireForceParams",
    "build_model",
    "fiala_force",
    "fiala_force_derivative",
    "slip_angles",
]
