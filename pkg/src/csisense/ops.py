"""Forward and backward implementations of every layer the network needs.

All ops take [B, C, L] (or [B, F] for linear) numpy arrays, return
(output, ctx), and have a matching *_backward(ctx, grad_out). Convolution
uses correlation semantics and sweeps the time axis only; pooling applies
no implicit padding and floors its output length. Computation follows the
input dtype: float32 in training, float64 on the gradient-check path.
"""

import numpy as np

from .errors import DegenerateDataError, ShapeError
from .tensor import assert_finite


def _window_cols(xp, k, stride, out_len):
    """Gather sliding windows of a padded [B, C, Lp] array into [B, C, k, out_len]."""
    b, c, _ = xp.shape
    cols = np.empty((b, c, k, out_len), dtype=xp.dtype)
    for tap in range(k):
        cols[:, :, tap, :] = xp[:, :, tap : tap + stride * out_len : stride]
    return cols


def _scatter_cols(dcols, shape_padded, stride):
    """Adjoint of _window_cols: scatter-add [B, C, k, out_len] back to [B, C, Lp]."""
    _, _, k, out_len = dcols.shape
    dxp = np.zeros(shape_padded, dtype=dcols.dtype)
    for tap in range(k):
        dxp[:, :, tap : tap + stride * out_len : stride] += dcols[:, :, tap, :]
    return dxp


def conv_out_len(length, k, stride, padding):
    return (length + 2 * padding - k) // stride + 1


def conv1d(x, w, b, stride=1, padding=0):
    """1-D correlation along time. x [B,Cin,L], w [Cout,Cin,k], b [Cout]."""
    if x.ndim != 3 or w.ndim != 3:
        raise ShapeError(f"conv1d expects x [B,C,L] and w [O,C,k], got {x.shape}, {w.shape}")
    bsz, cin, length = x.shape
    cout, cw, k = w.shape
    if cw != cin:
        raise ShapeError(f"conv1d channel mismatch: x has {cin}, w expects {cw}")
    if b.shape != (cout,):
        raise ShapeError(f"conv1d bias shape {b.shape} != ({cout},)")
    if stride < 1:
        raise ShapeError(f"conv1d stride must be >= 1, got {stride}")
    lp = length + 2 * padding
    if k > lp:
        raise ShapeError(f"kernel {k} longer than padded input {lp}")
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    out_len = (lp - k) // stride + 1
    cols = _window_cols(xp, k, stride, out_len)
    # one GEMM: [Cout, Cin*k] @ [Cin*k, B*out_len]
    mat = cols.transpose(1, 2, 0, 3).reshape(cin * k, bsz * out_len)
    out = w.reshape(cout, cin * k) @ mat
    out += b[:, None]
    out = np.ascontiguousarray(out.reshape(cout, bsz, out_len).transpose(1, 0, 2))
    ctx = (mat, w, (bsz, cin, length, lp, out_len), stride, padding)
    assert_finite("conv1d", out)
    return out, ctx


def conv1d_backward(ctx, grad_out):
    """Gradients of conv1d w.r.t. input, weights, and bias."""
    mat, w, (bsz, cin, length, lp, out_len), stride, padding = ctx
    cout, _, k = w.shape
    if grad_out.shape != (bsz, cout, out_len):
        raise ShapeError(
            f"conv1d grad shape {grad_out.shape} != {(bsz, cout, out_len)}"
        )
    gout = grad_out.transpose(1, 0, 2).reshape(cout, bsz * out_len)
    dw = (gout @ mat.T).reshape(cout, cin, k)
    db = gout.sum(axis=1)
    dmat = w.reshape(cout, cin * k).T @ gout
    dcols = dmat.reshape(cin, k, bsz, out_len).transpose(2, 0, 1, 3)
    dxp = _scatter_cols(dcols, (bsz, cin, lp), stride)
    dx = dxp[:, :, padding : lp - padding] if padding else dxp
    assert_finite("conv1d_backward", dx, dw, db)
    return dx, dw, db


def batchnorm1d(
    x,
    gamma,
    beta,
    running_mean,
    running_var,
    training,
    eps=1e-5,
    momentum=0.1,
    update_running=True,
):
    """Per-channel batch normalization over (B, L).

    Train mode normalizes with batch statistics and, when update_running,
    folds them into the running estimates in place (unbiased variance, as
    running = (1 - momentum) * running + momentum * batch). Eval mode uses
    the running estimates.
    """
    if x.ndim != 3:
        raise ShapeError(f"batchnorm1d expects [B,C,L], got {x.shape}")
    bsz, ch, length = x.shape
    n = bsz * length
    g = gamma[None, :, None]
    if training:
        if n < 2:
            raise DegenerateDataError(
                f"batch norm needs B*L >= 2 in train mode, got {n}"
            )
        mu = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu[None, :, None]) * inv[None, :, None]
        if update_running:
            running_mean *= 1.0 - momentum
            running_mean += momentum * mu
            running_var *= 1.0 - momentum
            running_var += momentum * var * (n / (n - 1.0))
        ctx = ("train", xhat, inv, gamma, n)
    else:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x - running_mean[None, :, None]) * inv[None, :, None]
        ctx = ("eval", xhat, inv, gamma, n)
    out = g * xhat + beta[None, :, None]
    assert_finite("batchnorm1d", out)
    return out, ctx


def batchnorm1d_backward(ctx, grad_out):
    mode, xhat, inv, gamma, n = ctx
    dbeta = grad_out.sum(axis=(0, 2))
    dgamma = (grad_out * xhat).sum(axis=(0, 2))
    scale = (gamma * inv)[None, :, None]
    if mode == "train":
        dx = scale * (
            grad_out
            - dbeta[None, :, None] / n
            - xhat * dgamma[None, :, None] / n
        )
    else:
        dx = scale * grad_out
    assert_finite("batchnorm1d_backward", dx, dgamma, dbeta)
    return dx, dgamma, dbeta


def relu(x):
    out = np.maximum(x, 0)
    return out, (x > 0)


def relu_backward(ctx, grad_out):
    return grad_out * ctx


def maxpool1d(x, k, stride, padding=0):
    """Window max along time; padding (when requested) uses -inf so padded
    positions never win and never receive gradient."""
    if x.ndim != 3:
        raise ShapeError(f"maxpool1d expects [B,C,L], got {x.shape}")
    _, _, length = x.shape
    lp = length + 2 * padding
    if k > lp:
        raise ShapeError(f"pool window {k} larger than padded input {lp}")
    if padding:
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding)), constant_values=-np.inf)
    else:
        xp = x
    out_len = (lp - k) // stride + 1
    cols = _window_cols(xp, k, stride, out_len)
    idx = cols.argmax(axis=2)
    out = np.take_along_axis(cols, idx[:, :, None, :], axis=2)[:, :, 0, :]
    ctx = (idx, x.shape, lp, k, stride, padding)
    assert_finite("maxpool1d", out)
    return out, ctx


def maxpool1d_backward(ctx, grad_out):
    idx, x_shape, lp, k, stride, padding = ctx
    bsz, ch, length = x_shape
    out_len = grad_out.shape[-1]
    dcols = np.zeros((bsz, ch, k, out_len), dtype=grad_out.dtype)
    np.put_along_axis(dcols, idx[:, :, None, :], grad_out[:, :, None, :], axis=2)
    dxp = _scatter_cols(dcols, (bsz, ch, lp), stride)
    return dxp[:, :, padding : lp - padding] if padding else dxp


def avgpool1d(x, k, stride):
    """Window mean along time; no padding."""
    if x.ndim != 3:
        raise ShapeError(f"avgpool1d expects [B,C,L], got {x.shape}")
    _, _, length = x.shape
    if k > length:
        raise ShapeError(f"pool window {k} larger than input {length}")
    out_len = (length - k) // stride + 1
    cols = _window_cols(x, k, stride, out_len)
    out = cols.mean(axis=2)
    ctx = (x.shape, k, stride)
    assert_finite("avgpool1d", out)
    return out, ctx


def avgpool1d_backward(ctx, grad_out):
    x_shape, k, stride = ctx
    share = grad_out / k
    dcols = np.broadcast_to(
        share[:, :, None, :], (share.shape[0], share.shape[1], k, share.shape[2])
    )
    return _scatter_cols(np.ascontiguousarray(dcols), x_shape, stride)


def linear(x, w, b):
    """Affine map. x [B,F], w [O,F], b [O]."""
    if x.ndim != 2 or w.ndim != 2:
        raise ShapeError(f"linear expects x [B,F] and w [O,F], got {x.shape}, {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear feature mismatch: x has {x.shape[1]}, w expects {w.shape[1]}")
    out = x @ w.T + b
    assert_finite("linear", out)
    return out, (x, w)


def linear_backward(ctx, grad_out):
    x, w = ctx
    dx = grad_out @ w
    dw = grad_out.T @ x
    db = grad_out.sum(axis=0)
    assert_finite("linear_backward", dx, dw, db)
    return dx, dw, db
