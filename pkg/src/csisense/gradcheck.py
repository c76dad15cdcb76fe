"""Central finite-difference gradient checking.

Runs at 64-bit precision: analytic gradients from a layer's backward are
compared against (f(x+h) - f(x-h)) / 2h of a scalar projection of the
outputs. Reported as the max relative error over all checked coordinates.
Checks are only valid at differentiable points; a seed that lands an
input within the step of a ReLU/max kink will read as a false failure.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import StateError


@dataclass
class GradCheckReport:
    tolerance: float
    max_rel_err: float = 0.0
    worst_tensor: str = ""
    per_tensor: dict = field(default_factory=dict)
    n_checked: int = 0

    @property
    def passed(self):
        return self.max_rel_err < self.tolerance


def _as_tuple(out):
    return out if isinstance(out, tuple) else (out,)


def _rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-4)


def randomize_params(layer, rng, dtype=np.float64):
    """Fan-in init plus a jitter that breaks the all-ones/all-zeros symmetry
    of freshly initialized batch-norm parameters."""
    layer.init_params(rng, dtype)
    for _, p in layer.params():
        p.data = p.data.astype(dtype) + 0.25 * rng.standard_normal(p.shape)


def grad_check(
    layer,
    input_shape,
    tolerance=1e-3,
    seed=0,
    step=1e-4,
    max_coords=0,
    training=True,
    init=True,
):
    """Check every parameter of `layer` plus its input gradient.

    layer.forward may return one array or a tuple of arrays (dual-head
    networks); layer.backward must accept one upstream gradient per output
    and return the input gradient. When max_coords > 0, at most that many
    coordinates per tensor are probed (seeded choice); 0 checks all.
    """
    rng = np.random.default_rng(seed)
    if init:
        randomize_params(layer, rng, np.float64)
    x = rng.standard_normal(input_shape)

    outs = _as_tuple(layer.forward(x, training))
    repeat = _as_tuple(layer.forward(x, training))
    if any(not np.array_equal(a, b) for a, b in zip(outs, repeat)):
        raise StateError("layer is non-deterministic; finite differences are invalid")
    projections = [rng.standard_normal(o.shape) for o in outs]

    def loss_at():
        outs_now = _as_tuple(layer.forward(x, training))
        return sum(float(np.sum(o * r)) for o, r in zip(outs_now, projections))

    dx = layer.backward(*projections)
    if dx is None or dx.shape != x.shape:
        raise StateError("backward did not return an input gradient of matching shape")
    targets = [("input", x, dx)] + [
        (name, p.data, p.grad) for name, p in layer.params()
    ]

    report = GradCheckReport(tolerance=tolerance)
    for name, data, analytic in targets:
        if analytic is None:
            raise StateError(f"no gradient recorded for {name}")
        flat = data.reshape(-1)
        aflat = np.asarray(analytic).reshape(-1)
        size = flat.size
        if max_coords and size > max_coords:
            coords = np.sort(rng.choice(size, size=max_coords, replace=False))
        else:
            coords = range(size)
        worst = 0.0
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + step
            plus = loss_at()
            flat[idx] = orig - step
            minus = loss_at()
            flat[idx] = orig
            fd = (plus - minus) / (2.0 * step)
            worst = max(worst, _rel_err(aflat[idx], fd))
            report.n_checked += 1
        report.per_tensor[name] = worst
        if worst > report.max_rel_err:
            report.max_rel_err = worst
            report.worst_tensor = name
    return report
