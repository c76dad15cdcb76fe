"""Dual-head 1-D residual network.

Trunk: stem conv (7x1, stride 2, pad 3) -> BN -> ReLU -> max pool (3x1,
stride 2, pad 1) -> four residual stages -> fork into an activity head and
a location head, each: conv (3x1) -> BN -> ReLU -> avg pool (4x1, stride 4)
-> flatten -> fully connected scores. Residual blocks carry a projection
shortcut (1x1 conv + BN) in every block. Channel plan 128/128/256/512/512
scaled by a width multiplier; the "+" variant adds one extra conv+BN+ReLU
to the activity head only.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import CompatibilityError, ConfigError, FormatError, ShapeError
from .layers import AvgPool1d, BatchNorm1d, Conv1d, Flatten, Linear, MaxPool1d, ReLU

NUM_CHANNELS = 52
INPUT_LEN = 192

STEM_WIDTH = 128
STAGE_WIDTHS = (128, 256, 512, 512)
STAGE_STRIDES = (1, 2, 2, 2)
HEAD_WIDTH = 512
HEAD_POOL = 4

TAPS = (
    "input",
    "post-maxpool",
    "RB1",
    "RB2",
    "RB3",
    "RB4",
    "pre-FC-activity",
    "pre-FC-location",
    "output-activity",
    "output-location",
)


@dataclass
class NetworkSpec:
    block_counts: tuple = (1, 1, 1, 1)
    width_multiplier: float = 1.0
    plus_variant: bool = False
    num_activities: int = 6
    num_locations: int = 16

    def __post_init__(self):
        self.block_counts = tuple(int(n) for n in self.block_counts)
        if len(self.block_counts) != 4 or any(n < 1 for n in self.block_counts):
            raise ConfigError(f"block_counts must be 4 integers >= 1, got {self.block_counts}")
        if not 0.0 < self.width_multiplier <= 1.0:
            raise ConfigError(
                f"width_multiplier must be in (0, 1], got {self.width_multiplier}"
            )

    def width(self, channels):
        return math.ceil(channels * self.width_multiplier)

    def name(self):
        inner = ",".join(str(n) for n in self.block_counts)
        return f"ResNet1D-[{inner}]" + ("+" if self.plus_variant else "")


class ResidualBlock:
    """Two 3x1 convs with BN, summed with a projected shortcut, then ReLU."""

    def __init__(self, in_ch, out_ch, stride):
        if stride not in (1, 2):
            raise ConfigError(f"block stride must be 1 or 2, got {stride}")
        self.conv1 = Conv1d(in_ch, out_ch, 3, stride=stride, padding=1)
        self.bn1 = BatchNorm1d(out_ch)
        self.relu1 = ReLU()
        self.conv2 = Conv1d(out_ch, out_ch, 3, stride=1, padding=1)
        self.bn2 = BatchNorm1d(out_ch)
        self.sc_conv = Conv1d(in_ch, out_ch, 1, stride=stride, padding=0)
        self.sc_bn = BatchNorm1d(out_ch)
        self.relu_out = ReLU()

    def _named_layers(self):
        return [
            ("conv1", self.conv1),
            ("bn1", self.bn1),
            ("conv2", self.conv2),
            ("bn2", self.bn2),
            ("sc_conv", self.sc_conv),
            ("sc_bn", self.sc_bn),
        ]

    def main_convs(self):
        return [self.conv1, self.conv2]

    def params(self):
        out = []
        for lname, layer in self._named_layers():
            for pname, p in layer.params():
                out.append((f"{lname}.{pname}", p))
        return out

    def state(self):
        out = []
        for lname, layer in self._named_layers():
            for sname, s in layer.state():
                out.append((f"{lname}.{sname}", s))
        return out

    def init_params(self, rng, dtype):
        for _, layer in self._named_layers():
            layer.init_params(rng, dtype)

    def forward(self, x, training=False):
        main = self.conv1.forward(x, training)
        main = self.bn1.forward(main, training)
        main = self.relu1.forward(main, training)
        main = self.conv2.forward(main, training)
        main = self.bn2.forward(main, training)
        short = self.sc_conv.forward(x, training)
        short = self.sc_bn.forward(short, training)
        return self.relu_out.forward(main + short, training)

    def backward(self, grad_out):
        g = self.relu_out.backward(grad_out)
        gm = self.bn2.backward(g)
        gm = self.conv2.backward(gm)
        gm = self.relu1.backward(gm)
        gm = self.bn1.backward(gm)
        gm = self.conv1.backward(gm)
        gs = self.sc_bn.backward(g)
        gs = self.sc_conv.backward(gs)
        return gm + gs


class _Head:
    """Per-task branch: conv stack -> avg pool -> flatten -> FC scores."""

    def __init__(self, in_ch, width, num_classes, extra_conv):
        self.convs = []
        ch = in_ch
        n_convs = 2 if extra_conv else 1
        for _ in range(n_convs):
            self.convs.append(
                (Conv1d(ch, width, 3, stride=1, padding=1), BatchNorm1d(width), ReLU())
            )
            ch = width
        self.pool = AvgPool1d(HEAD_POOL, HEAD_POOL)
        self.flatten = Flatten()
        self.fc = Linear(width, num_classes)

    def _named_layers(self):
        out = []
        for i, (conv, bn, relu) in enumerate(self.convs, start=1):
            out.append((f"conv{i}", conv))
            out.append((f"bn{i}", bn))
            out.append((f"relu{i}", relu))
        out.append(("pool", self.pool))
        out.append(("flatten", self.flatten))
        out.append(("fc", self.fc))
        return out

    def params(self):
        out = []
        for lname, layer in self._named_layers():
            for pname, p in layer.params():
                out.append((f"{lname}.{pname}", p))
        return out

    def state(self):
        out = []
        for lname, layer in self._named_layers():
            for sname, s in layer.state():
                out.append((f"{lname}.{sname}", s))
        return out

    def init_params(self, rng, dtype):
        for _, layer in self._named_layers():
            layer.init_params(rng, dtype)

    def forward(self, x, training=False):
        for conv, bn, relu in self.convs:
            x = conv.forward(x, training)
            x = bn.forward(x, training)
            x = relu.forward(x, training)
        x = self.pool.forward(x, training)
        pre_fc = self.flatten.forward(x, training)
        return self.fc.forward(pre_fc, training), pre_fc

    def backward(self, grad_out):
        g = self.fc.backward(grad_out)
        g = self.flatten.backward(g)
        g = self.pool.backward(g)
        for conv, bn, relu in reversed(self.convs):
            g = relu.backward(g)
            g = bn.backward(g)
            g = conv.backward(g)
        return g


class ResNet1D:
    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        w = spec.width
        self.stem_conv = Conv1d(NUM_CHANNELS, w(STEM_WIDTH), 7, stride=2, padding=3)
        self.stem_bn = BatchNorm1d(w(STEM_WIDTH))
        self.stem_relu = ReLU()
        self.stem_pool = MaxPool1d(3, 2, padding=1)

        self.stages = []
        in_ch = w(STEM_WIDTH)
        for count, width, stride in zip(spec.block_counts, STAGE_WIDTHS, STAGE_STRIDES):
            blocks = []
            for b in range(count):
                blocks.append(
                    ResidualBlock(in_ch, w(width), stride if b == 0 else 1)
                )
                in_ch = w(width)
            self.stages.append(blocks)

        self.head_act = _Head(in_ch, w(HEAD_WIDTH), spec.num_activities, spec.plus_variant)
        self.head_loc = _Head(in_ch, w(HEAD_WIDTH), spec.num_locations, False)

    # -- structure ---------------------------------------------------------

    def _named_components(self):
        out = [
            ("stem.conv", self.stem_conv),
            ("stem.bn", self.stem_bn),
        ]
        for i, blocks in enumerate(self.stages, start=1):
            for j, block in enumerate(blocks):
                out.append((f"stage{i}.block{j}", block))
        out.append(("head_act", self.head_act))
        out.append(("head_loc", self.head_loc))
        return out

    def params(self):
        out = []
        for cname, comp in self._named_components():
            out.extend((f"{cname}.{p}", t) for p, t in comp.params())
        return out

    def state(self):
        out = []
        for cname, comp in self._named_components():
            out.extend((f"{cname}.{s}", arr) for s, arr in comp.state())
        return out

    @property
    def c1d_layer_count(self):
        """Convolution count under the naming convention: stem + block
        main-path convs + head convs; projection shortcuts excluded."""
        return self.shared_c1d_count + self.head_c1d_count

    @property
    def shared_c1d_count(self):
        n = 1  # stem
        for blocks in self.stages:
            for block in blocks:
                n += len(block.main_convs())
        return n

    @property
    def head_c1d_count(self):
        return len(self.head_act.convs) + len(self.head_loc.convs)

    def trunk_trace(self, input_len=INPUT_LEN):
        """Temporal lengths along the trunk and activity head:
        input, stem conv, max pool, stage1..4, head conv, avg pool."""
        trace = [input_len]
        trace.append(ops.conv_out_len(trace[-1], 7, 2, 3))
        trace.append(ops.conv_out_len(trace[-1], 3, 2, 1))
        for blocks in self.stages:
            length = trace[-1]
            for block in blocks:
                length = ops.conv_out_len(length, 3, block.conv1.stride, 1)
            trace.append(length)
        trace.append(ops.conv_out_len(trace[-1], 3, 1, 1))
        trace.append((trace[-1] - HEAD_POOL) // HEAD_POOL + 1)
        return trace

    # -- parameters --------------------------------------------------------

    def init_params(self, seed, dtype=np.float32):
        rng = np.random.default_rng(seed)
        self.stem_conv.init_params(rng, dtype)
        self.stem_bn.init_params(rng, dtype)
        for blocks in self.stages:
            for block in blocks:
                block.init_params(rng, dtype)
        self.head_act.init_params(rng, dtype)
        self.head_loc.init_params(rng, dtype)
        return self

    def zero_grads(self):
        for _, p in self.params():
            p.zero_grad()

    def state_dict(self):
        out = {name: p.data for name, p in self.params()}
        out.update({name: arr for name, arr in self.state()})
        return out

    def load_state_dict(self, arrays):
        slots = {name: ("param", p) for name, p in self.params()}
        slots.update({name: ("state", arr) for name, arr in self.state()})
        missing = sorted(set(slots) - set(arrays))
        extra = sorted(set(arrays) - set(slots))
        if missing or extra:
            raise CompatibilityError(
                f"checkpoint does not match network spec "
                f"(missing {missing[:3]}, unexpected {extra[:3]})"
            )
        for name, value in arrays.items():
            kind, slot = slots[name]
            if tuple(value.shape) != tuple(slot.shape):
                raise CompatibilityError(
                    f"{name}: checkpoint shape {value.shape} != network {tuple(target_shape)}"
                )
            if kind == "param":
                slot.data = value.astype(slot.data.dtype)
            else:
                slot[...] = value

    # -- compute -----------------------------------------------------------

    def forward(self, x, training=False, record=None):
        """Run the network; returns raw (activity, location) score matrices.

        When record is a dict it is filled with the named feature taps.
        """
        if x.ndim != 3 or x.shape[1] != NUM_CHANNELS:
            raise ShapeError(
                f"expected input [B, {NUM_CHANNELS}, T], got {x.shape}"
            )
        if record is not None:
            record["input"] = x
        h = self.stem_conv.forward(x, training)
        h = self.stem_bn.forward(h, training)
        h = self.stem_relu.forward(h, training)
        h = self.stem_pool.forward(h, training)
        if record is not None:
            record["post-maxpool"] = h
        for i, blocks in enumerate(self.stages, start=1):
            for block in blocks:
                h = block.forward(h, training)
            if record is not None:
                record[f"RB{i}"] = h
        act_scores, act_pre = self.head_act.forward(h, training)
        loc_scores, loc_pre = self.head_loc.forward(h, training)
        if record is not None:
            record["pre-FC-activity"] = act_pre
            record["pre-FC-location"] = loc_pre
            record["output-activity"] = act_scores
            record["output-location"] = loc_scores
        return act_scores, loc_scores

    def backward(self, grad_act, grad_loc):
        g = self.head_act.backward(grad_act) + self.head_loc.backward(grad_loc)
        for blocks in reversed(self.stages):
            for block in reversed(blocks):
                g = block.backward(g)
        g = self.stem_pool.backward(g)
        g = self.stem_relu.backward(g)
        g = self.stem_bn.backward(g)
        return self.stem_conv.backward(g)


def build(spec: NetworkSpec) -> ResNet1D:
    return ResNet1D(spec)


def export_features(net, batch, taps):
    """Forward the batch once and flatten each requested tap to one row per
    sample. Returns {tap: [B, row_width] array}."""
    unknown = [t for t in taps if t not in TAPS]
    if unknown:
        raise ConfigError(f"unknown feature taps {unknown}; valid taps: {', '.join(TAPS)}")
    record = {}
    net.forward(batch, training=False, record=record)
    return {tap: np.ascontiguousarray(record[tap].reshape(batch.shape[0], -1)) for tap in taps}


# -- network spec file (text, key=value) ------------------------------------


def write_netspec(path, spec: NetworkSpec, seed):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"block_counts={','.join(str(n) for n in spec.block_counts)}\n")
        fh.write(f"width_multiplier={spec.width_multiplier!r}\n")
        fh.write(f"plus_variant={'true' if spec.plus_variant else 'false'}\n")
        fh.write(f"seed={seed}\n")


def read_netspec(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"bad network spec line: {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    try:
        spec = NetworkSpec(
            block_counts=tuple(int(v) for v in values["block_counts"].split(",")),
            width_multiplier=float(values["width_multiplier"]),
            plus_variant=values["plus_variant"].lower() in ("true", "1", "yes"),
        )
        seed = int(values["seed"])
    except KeyError as exc:
        raise FormatError(f"network spec file missing key {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"bad value in network spec file: {exc}") from exc
    return spec, seed
