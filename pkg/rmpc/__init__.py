"""Recurrent model predictive control: offline-trained recurrent policies whose
c-th cycle output approximates the first optimal control of a c-step MPC problem."""

__version__ = "0.1.0"
