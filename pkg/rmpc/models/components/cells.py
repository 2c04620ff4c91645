import torch
from torch import nn

ACTIVATIONS = {
    "relu": torch.relu,
    "tanh": torch.tanh,
    "identity": lambda x: x,
}


class PlainRnnCell(nn.Module):
    """h' = act(W x + b + U h)."""

    def __init__(self, input_size: int, hidden_size: int, activation: str = "relu"):
        super().__init__()
        self.hidden_size = hidden_size
        self.activation = activation
        self.input_map = nn.Linear(input_size, hidden_size)
        self.hidden_map = nn.Linear(hidden_size, hidden_size, bias=False)

    def forward(self, inputs: torch.Tensor, hidden: torch.Tensor) -> torch.Tensor:
        return ACTIVATIONS[self.activation](self.input_map(inputs) + self.hidden_map(hidden))


class GatedCell(nn.Module):
    """Gated recurrent unit with sigmoid update/reset gates and a configurable
    candidate activation (RELU by default).

    z = sigmoid(W_z x + b_z + U_z h)
    g = sigmoid(W_g x + b_g + U_g h)
    h~ = act(W_h x + b_h + U_h (g * h))
    h' = (1 - z) * h + z * h~

    With z = g = 1 this is exactly `PlainRnnCell`.
    """

    def __init__(self, input_size: int, hidden_size: int, activation: str = "relu"):
        super().__init__()
        self.hidden_size = hidden_size
        self.activation = activation
        # rows: [update, reset, candidate]
        self.input_map = nn.Linear(input_size, 3 * hidden_size)
        self.hidden_map = nn.Linear(hidden_size, 2 * hidden_size, bias=False)
        self.candidate_map = nn.Linear(hidden_size, hidden_size, bias=False)

    def forward(self, inputs: torch.Tensor, hidden: torch.Tensor) -> torch.Tensor:
        zi, gi, ci = self.input_map(inputs).chunk(3, dim=-1)
        zh, gh = self.hidden_map(hidden).chunk(2, dim=-1)
        update = torch.sigmoid(zi + zh)
        reset = torch.sigmoid(gi + gh)
        candidate = ACTIVATIONS[self.activation](ci + self.candidate_map(reset * hidden))
        return (1.0 - update) * hidden + update * candidate


CELL_KINDS = {
    "plain-rnn": PlainRnnCell,
    "gated": GatedCell,
}
