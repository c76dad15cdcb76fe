"""Layer objects: each wraps one op with its parameters and the saved
forward context needed by backward. Parameter gradients are written (not
accumulated) by backward; every parameter receives its gradient from
exactly one layer."""

import math

import numpy as np

from . import ops
from .errors import StateError
from .tensor import Tensor

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class Layer:
    def params(self):
        """(name, Tensor) pairs of trainable parameters."""
        return []

    def state(self):
        """(name, ndarray) pairs of non-trainable state (BN running stats)."""
        return []

    def init_params(self, rng, dtype):
        pass

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def _take_ctx(self):
        ctx = getattr(self, "_ctx", None)
        if ctx is None:
            raise StateError(f"{type(self).__name__}.backward called before forward")
        return ctx


def _uniform_fan_in(rng, shape, fan_in, dtype):
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv1d(Layer):
    def __init__(self, in_ch, out_ch, k, stride=1, padding=0, dtype=np.float32):
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.k = k
        self.stride = stride
        self.padding = padding
        self.w = Tensor(np.zeros((out_ch, in_ch, k), dtype=dtype))
        self.b = Tensor(np.zeros(out_ch, dtype=dtype))
        self._ctx = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def init_params(self, rng, dtype):
        fan_in = self.in_ch * self.k
        self.w.data = _uniform_fan_in(rng, self.w.shape, fan_in, dtype)
        self.b.data = _uniform_fan_in(rng, self.b.shape, fan_in, dtype)

    def forward(self, x, training=False):
        out, self._ctx = ops.conv1d(x, self.w.data, self.b.data, self.stride, self.padding)
        return out

    def backward(self, grad_out):
        dx, dw, db = ops.conv1d_backward(self._take_ctx(), grad_out)
        self.w.set_grad(dw)
        self.b.set_grad(db)
        return dx


class BatchNorm1d(Layer):
    def __init__(self, ch, dtype=np.float32):
        self.ch = ch
        self.gamma = Tensor(np.ones(ch, dtype=dtype))
        self.beta = Tensor(np.zeros(ch, dtype=dtype))
        self.running_mean = np.zeros(ch, dtype=dtype)
        self.running_var = np.ones(ch, dtype=dtype)
        self._ctx = None

    def params(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def state(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def init_params(self, rng, dtype):
        self.gamma.data = np.ones(self.ch, dtype=dtype)
        self.beta.data = np.zeros(self.ch, dtype=dtype)
        self.running_mean = np.zeros(self.ch, dtype=dtype)
        self.running_var = np.ones(self.ch, dtype=dtype)

    def forward(self, x, training=False):
        out, self._ctx = ops.batchnorm1d(
            x,
            self.gamma.data,
            self.beta.data,
            self.running_mean,
            self.running_var,
            training,
            eps=BN_EPS,
            momentum=BN_MOMENTUM,
        )
        return out

    def backward(self, grad_out):
        dx, dgamma, dbeta = ops.batchnorm1d_backward(self._take_ctx(), grad_out)
        self.gamma.set_grad(dgamma)
        self.beta.set_grad(dbeta)
        return dx


class ReLU(Layer):
    def __init__(self):
        self._ctx = None

    def forward(self, x, training=False):
        out, self._ctx = ops.relu(x)
        return out

    def backward(self, grad_out):
        return ops.relu_backward(self._take_ctx(), grad_out)


class MaxPool1d(Layer):
    def __init__(self, k, stride, padding=0):
        self.k = k
        self.stride = stride
        self.padding = padding
        self._ctx = None

    def forward(self, x, training=False):
        out, self._ctx = ops.maxpool1d(x, self.k, self.stride, self.padding)
        return out

    def backward(self, grad_out):
        return ops.maxpool1d_backward(self._take_ctx(), grad_out)


class AvgPool1d(Layer):
    def __init__(self, k, stride):
        self.k = k
        self.stride = stride
        self._ctx = None

    def forward(self, x, training=False):
        out, self._ctx = ops.avgpool1d(x, self.k, self.stride)
        return out

    def backward(self, grad_out):
        return ops.avgpool1d_backward(self._take_ctx(), grad_out)


class Flatten(Layer):
    def __init__(self):
        self._ctx = None

    def forward(self, x, training=False):
        self._ctx = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._take_ctx())


class Linear(Layer):
    def __init__(self, in_features, out_features, dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        self.w = Tensor(np.zeros((out_features, in_features), dtype=dtype))
        self.b = Tensor(np.zeros(out_features, dtype=dtype))
        self._ctx = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def init_params(self, rng, dtype):
        self.w.data = _uniform_fan_in(rng, self.w.shape, self.in_features, dtype)
        self.b.data = _uniform_fan_in(rng, self.b.shape, self.in_features, dtype)

    def forward(self, x, training=False):
        out, self._ctx = ops.linear(x, self.w.data, self.b.data)
        return out

    def backward(self, grad_out):
        dx, dw, db = ops.linear_backward(self._take_ctx(), grad_out)
        self.w.set_grad(dw)
        self.b.set_grad(db)
        return dx


class Sequential(Layer):
    """Runs layers in order; backward in reverse."""

    def __init__(self, layers):
        self.layers = list(layers)

    def params(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in layer.params():
                out.append((f"{i}.{name}", p))
        return out

    def state(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, s in layer.state():
                out.append((f"{i}.{name}", s))
        return out

    def init_params(self, rng, dtype):
        for layer in self.layers:
            layer.init_params(rng, dtype)

    def forward(self, x, training=False):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out
