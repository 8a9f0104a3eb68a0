"""Dense and convolution building blocks with explicit backward passes.

Conventions used throughout:

- dense weights have shape (fan_in, fan_out) and act as ``y = x @ W + b``;
- conv weights have shape (filters, channels, k, k) and slide with a valid
  (no padding) stride-s window, so ``out = (in - k) // s + 1``;
- the transposed convolution is defined as the exact adjoint of that conv:
  ``<conv(x, W), y> == <x, conv_transpose(y, W, n)>`` for every x, y.  The
  output size n must be given because the conv floor-division is lossy (a
  stride-2 5-wide kernel maps both 29 and 30 columns onto 13).

Convolutions are evaluated as one matrix product per layer over patch
matrices built by ``im2col``; ``col2im`` is its scatter-add adjoint.  All
math is float64.
"""

from __future__ import annotations

import numpy as np


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    # y is the forward output; y > 0 iff the pre-activation was > 0
    return dy * (y > 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def dense_backward(
    dy: np.ndarray, x: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dw, db) for y = x @ w + b with x of shape (n, fan_in)."""
    dw = x.T @ dy
    db = dy.sum(axis=0)
    dx = dy @ w.T
    return dx, dw, db


def conv_out_size(n: int, k: int, s: int) -> int:
    if n < k:
        raise ValueError(f"input size {n} smaller than kernel {k}")
    return (n - k) // s + 1


def im2col(x: np.ndarray, k: int, s: int) -> np.ndarray:
    """(n, c, h, w) -> patch matrix (n, oh*ow, c*k*k), row-major patches."""
    n, c, h, w = x.shape
    oh = conv_out_size(h, k, s)
    ow = conv_out_size(w, k, s)
    sn, sc, sh, sw = x.strides
    view = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, oh, ow, k, k),
        strides=(sn, sc, s * sh, s * sw, sh, sw),
        writeable=False,
    )
    return np.ascontiguousarray(view.transpose(0, 2, 3, 1, 4, 5)).reshape(n, oh * ow, c * k * k)


def col2im(cols: np.ndarray, x_shape: tuple[int, int, int, int], k: int, s: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add patch rows back onto the image grid."""
    n, c, h, w = x_shape
    oh = conv_out_size(h, k, s)
    ow = conv_out_size(w, k, s)
    x = np.zeros(x_shape, dtype=cols.dtype)
    patches = cols.reshape(n, oh, ow, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    for i in range(k):
        for j in range(k):
            x[:, :, i : i + s * oh : s, j : j + s * ow : s] += patches[:, :, :, :, i, j]
    return x


def conv2d(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, s: int, *, return_cols: bool = False
):
    """Valid stride-s convolution: (n,c,h,w) x (f,c,k,k) -> (n,f,oh,ow).

    With return_cols, also hands back the im2col patch matrix so the
    backward pass can skip rebuilding it.
    """
    n = x.shape[0]
    f, c, k, _ = w.shape
    oh = conv_out_size(x.shape[2], k, s)
    ow = conv_out_size(x.shape[3], k, s)
    cols = im2col(x, k, s)
    out = cols @ w.reshape(f, c * k * k).T + b
    y = out.transpose(0, 2, 1).reshape(n, f, oh, ow)
    return (y, cols) if return_cols else y


def conv2d_backward(
    dy: np.ndarray,
    x: np.ndarray,
    w: np.ndarray,
    s: int,
    *,
    cols: np.ndarray | None = None,
    need_dx: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Returns (dx, dw, db) for conv2d.  dy has the forward output shape.

    cols, when given, must be im2col(x) from the forward pass.  need_dx=False
    skips the col2im scatter and returns dx=None (useful at the first layer).
    """
    n, f, oh, ow = dy.shape
    c, k = w.shape[1], w.shape[2]
    dyf = dy.reshape(n, f, oh * ow).transpose(0, 2, 1)  # (n, p, f)
    if cols is None:
        cols = im2col(x, k, s)
    dw = np.tensordot(dyf, cols, axes=([0, 1], [0, 1])).reshape(w.shape)
    db = dy.sum(axis=(0, 2, 3))
    if not need_dx:
        return None, dw, db
    dcols = dyf @ w.reshape(f, c * k * k)
    dx = col2im(dcols, x.shape, k, s)
    return dx, dw, db


def conv2d_transpose(
    y: np.ndarray, w: np.ndarray, b: np.ndarray, s: int, out_size: int
) -> np.ndarray:
    """Adjoint of conv2d in its input: (n,f,m,m) -> (n,c,out_size,out_size).

    w keeps the forward-conv shape (f, c, k, k); b has one entry per output
    channel c and is added everywhere, including pixels no patch covers.
    """
    n, f, m, _ = y.shape
    c, k = w.shape[1], w.shape[2]
    if conv_out_size(out_size, k, s) != m:
        raise ValueError(f"out_size {out_size} does not conv down to {m}")
    yf = y.reshape(n, f, m * m).transpose(0, 2, 1)
    cols = yf @ w.reshape(f, c * k * k)
    x = col2im(cols, (n, c, out_size, out_size), k, s)
    return x + b[None, :, None, None]


def conv2d_transpose_backward(
    dx: np.ndarray, y: np.ndarray, w: np.ndarray, s: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dy, dw, db) for conv2d_transpose."""
    n, f, m, _ = y.shape
    k = w.shape[2]
    dcols = im2col(dx, k, s)  # (n, p, c*k*k)
    yf = y.reshape(n, f, m * m).transpose(0, 2, 1)
    dyf = dcols @ w.reshape(f, -1).T
    dy = dyf.transpose(0, 2, 1).reshape(y.shape)
    dw = np.tensordot(yf, dcols, axes=([0, 1], [0, 1])).reshape(w.shape)
    db = dx.sum(axis=(0, 2, 3))
    return dy, dw, db
