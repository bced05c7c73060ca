from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ShapeError


@dataclass(frozen=True)
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise DomainError("adam betas must lie in (0, 1)")
        if self.step_count < 0:
            raise DomainError("step_count must be >= 0")

    @classmethod
    def for_params(cls, params: dict, **kw) -> "AdamState":
        zeros = {k: np.zeros_like(v) for k, v in params.items()}
        return cls(first_moment=zeros, second_moment={k: v.copy() for k, v in zeros.items()}, **kw)


def adam_step(state: AdamState, params: dict, grads: dict):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``; inputs untouched."""
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_params, m_out, v_out = {}, {}, {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, parameter {theta.shape}")
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        m = np.zeros_like(theta) if m is None else m
        v = np.zeros_like(theta) if v is None else v
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_params[name] = theta - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        m_out[name] = m
        v_out[name] = v
    new_state = AdamState(state.learning_rate, b1, b2, state.epsilon, t, m_out, v_out)
    return new_params, new_state
