"""Adam optimizer with bias correction, plus the step learning-rate decay."""

import numpy as np

from .errors import NumericError


def lr_schedule(epoch, lr0=0.005, decay=0.5, every=10):
    """Learning rate for a 0-based epoch: lr0 * decay^floor(epoch / every)."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return lr0 * decay ** (epoch // every)


class Adam:
    """Standard Adam over a list of (name, Tensor) parameters.

    step() refuses to touch any state if a gradient is non-finite, so a
    failed step leaves parameters and moments exactly as they were.
    """

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params}

    def step(self, lr):
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        grads = []
        for name, p in self.params:
            g = p.grad
            if g is None:
                raise NumericError(f"parameter {name} has no gradient")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {name}; step refused")
            grads.append((name, p, g))
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p, g in grads:
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)
