"""Dense tensor container used for trainable parameters.

Activations flow through the ops as plain numpy arrays; a Tensor pairs a
value array with a gradient slot of identical shape.
"""

import os

import numpy as np

from .errors import NumericError

# Debug finiteness checks after every op. Off by default; enable via
# set_debug_checks(True) or CSISENSE_DEBUG=1.
_debug_checks = bool(int(os.environ.get("CSISENSE_DEBUG", "0")))


def set_debug_checks(enabled):
    global _debug_checks
    _debug_checks = bool(enabled)


def debug_checks_enabled():
    return _debug_checks


def assert_finite(name, *arrays):
    """Raise NumericError if any array holds NaN/Inf. Only active in debug mode."""
    if not _debug_checks:
        return
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite values in {name}")


class Tensor:
    """A numpy array plus an optional gradient of the same shape."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def set_grad(self, g):
        g = np.asarray(g)
        if g.shape != self.data.shape:
            raise ValueError(f"grad shape {g.shape} != data shape {self.data.shape}")
        self.grad = g

    def add_grad(self, g):
        if self.grad is None:
            self.set_grad(np.array(g, copy=True))
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.dtype})"
