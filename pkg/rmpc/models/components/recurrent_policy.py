import threading
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from rmpc.errors import ContractViolation

from .cells import ACTIVATIONS, CELL_KINDS

Hidden = List[torch.Tensor]

# serializes cycle_count updates of all policies
_CYCLE_LOCK = threading.Lock()


@dataclass(frozen=True)
class PolicySpec:
    """Architecture descriptor; stored verbatim in checkpoints."""

    state_dim: int
    output_dim: int
    output_scale: Tuple[float, ...]
    cell_kind: str = "gated"
    num_layers: int = 4
    hidden_dim: int = 128
    reference_dim: int = 1
    activation: str = "relu"
    squash: bool = True

    def __post_init__(self):
        object.__setattr__(self, "output_scale", tuple(float(s) for s in self.output_scale))
        if self.cell_kind not in CELL_KINDS:
            raise ContractViolation(f"unknown cell_kind <{self.cell_kind}>; expected one of {sorted(CELL_KINDS)}")
        if self.activation not in ACTIVATIONS:
            raise ContractViolation(f"unknown activation <{self.activation}>")
        if self.num_layers < 1 or self.hidden_dim < 1:
            raise ContractViolation("policy needs at least one layer with one unit")
        if len(self.output_scale) != self.output_dim or min(self.output_scale) <= 0:
            raise ContractViolation(f"output_scale {self.output_scale} must hold {self.output_dim} positive values")

    @property
    def input_dim(self) -> int:
        return self.state_dim + self.reference_dim

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["output_scale"] = list(self.output_scale)
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> "PolicySpec":
        return cls(**d)


class RecurrentPolicy(nn.Module):
    """Recurrent policy pi^c(x0, r_{1:c}; theta).

    Each cycle feeds (x0, r_c) to the first layer of a stack of recurrent cells;
    layer j receives layer j-1's new hidden state and its own previous hidden
    state. The c-th cycle output is output_scale * tanh(W_y h_c + b_y). The hidden
    state starts from zero on every call.

    Inputs may be unbatched (x0: (n,), r: (L,)) or batched (x0: (B, n), r: (B, L)).
    """

    def __init__(self, spec: PolicySpec, seed: Optional[int] = None):
        super().__init__()
        self.spec = spec
        cell = CELL_KINDS[spec.cell_kind]
        sizes = [spec.input_dim] + [spec.hidden_dim] * (spec.num_layers - 1)
        self.layers = nn.ModuleList([cell(size, spec.hidden_dim, spec.activation) for size in sizes])
        self.head = nn.Linear(spec.hidden_dim, spec.output_dim)
        self.register_buffer("output_scale", torch.tensor(spec.output_scale, dtype=torch.float64))
        self.double()
        # instrumentation: number of recurrent cycles evaluated so far
        self.cycle_count = 0
        if seed is not None:
            self.reset_parameters(seed)

    # -- parameters --------------------------------------------------------------------------

    def reset_parameters(self, seed: int) -> None:
        """Uniform init in +-1/sqrt(fan_in) for every affine map, reproducible from `seed`."""
        generator = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / np.sqrt(module.in_features)
                    module.weight.uniform_(-bound, bound, generator=generator)
                    if module.bias is not None:
                        module.bias.uniform_(-bound, bound, generator=generator)

    def flat_parameters(self) -> torch.Tensor:
        return nn.utils.parameters_to_vector(self.parameters()).detach().clone()

    def load_flat(self, theta) -> None:
        theta = torch.as_tensor(theta, dtype=torch.float64)
        if theta.numel() != self.num_parameters:
            raise ContractViolation(f"flat parameter vector has {theta.numel()} entries, expected {self.num_parameters}")
        with torch.no_grad():
            nn.utils.vector_to_parameters(theta.clone(), self.parameters())

    def unflatten(self, theta: torch.Tensor) -> Dict[str, torch.Tensor]:
        """Views of a flat vector shaped like the named parameters (order of `parameters()`)."""
        out, offset = {}, 0
        for name, p in self.named_parameters():
            out[name] = theta[offset:offset + p.numel()].view_as(p)
            offset += p.numel()
        return out

    @property
    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    # -- inference ---------------------------------------------------------------------------

    def initial_hidden(self, batch_shape: Sequence[int]) -> Hidden:
        return [torch.zeros(*batch_shape, self.spec.hidden_dim, dtype=torch.float64)
                for _ in self.layers]

    def cycle(self, x0: torch.Tensor, r_c: torch.Tensor, hidden: Hidden) -> Tuple[torch.Tensor, Hidden]:
        out = torch.cat([x0, r_c.unsqueeze(-1)], dim=-1)
        new_hidden = []
        for layer, h in zip(self.layers, hidden):
            out = layer(out, h)
            new_hidden.append(out)
        pre = self.head(out)
        u = self.output_scale * (torch.tanh(pre) if self.spec.squash else pre)
        with _CYCLE_LOCK:
            self.cycle_count += 1
        return u, new_hidden

    def forward(self, x0, r, c: int) -> Tuple[torch.Tensor, List[Hidden]]:
        """Runs `c` cycles; returns outputs of shape (..., c, m) and the hidden trace."""
        x0, r = self._coerce(x0, r)
        if not 1 <= c <= r.shape[-1]:
            raise ContractViolation(f"cycles c={c} must lie in [1, len(r)={r.shape[-1]}]")
        hidden = self.initial_hidden(x0.shape[:-1])
        outputs, trace = [], []
        for j in range(c):
            u, hidden = self.cycle(x0, r[..., j], hidden)
            outputs.append(u)
            trace.append(hidden)
        return torch.stack(outputs, dim=-2), trace

    def iter_cycles(self, x0, r) -> Iterator[torch.Tensor]:
        """Lazily yields pi^1, pi^2, ... up to len(r); used by anytime inference."""
        x0, r = self._coerce(x0, r)
        hidden = self.initial_hidden(x0.shape[:-1])
        for j in range(r.shape[-1]):
            u, hidden = self.cycle(x0, r[..., j], hidden)
            yield u

    @torch.no_grad()
    def act(self, x0, r, c: int) -> np.ndarray:
        """pi^c(x0, r_{1:c}) as a numpy array."""
        outputs, _ = self.forward(x0, r, c)
        return outputs[..., -1, :].numpy().copy()

    def _coerce(self, x0, r) -> Tuple[torch.Tensor, torch.Tensor]:
        x0 = torch.as_tensor(x0, dtype=torch.float64)
        r = torch.as_tensor(r, dtype=torch.float64)
        if x0.shape[-1:] != (self.spec.state_dim,):
            raise ContractViolation(f"x0 has shape {tuple(x0.shape)}, expected (..., {self.spec.state_dim})")
        if r.dim() != x0.dim() or r.shape[:-1] != x0.shape[:-1] or r.shape[-1] < 1:
            raise ContractViolation(f"reference shape {tuple(r.shape)} incompatible with x0 {tuple(x0.shape)}")
        return x0, r


def init_params(spec: PolicySpec, seed: int) -> torch.Tensor:
    """Flat parameter vector of a freshly initialized policy with architecture `spec`."""
    return RecurrentPolicy(spec, seed=seed).flat_parameters()


def zero_policy(spec: PolicySpec) -> RecurrentPolicy:
    policy = RecurrentPolicy(spec)
    with torch.no_grad():
        for p in policy.parameters():
            p.zero_()
    return policy
