"""Neural network layers with explicit forward/backward passes.

Data layout is channels-last: (batch, height, width, channels) through the
convolutional stages and (batch, features) after the first dense layer.
Every layer caches what its backward pass needs during forward; backward
must follow the forward it belongs to.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError, ShapeError

# Upper bound on the im2col scratch buffer (elements), to keep peak memory
# bounded on full-resolution spectrograms.
_MAX_COL_ELEMENTS = 64 * 1024 * 1024


def relu(x):
    """Elementwise max(0, x)."""
    return np.maximum(x, 0)


def softmax(logits):
    """Row-wise softmax with max subtraction for stability."""
    logits = np.asarray(logits)
    if not np.all(np.isfinite(logits)):
        raise NumericError("softmax received non-finite logits")
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Layer:
    """Base layer: stateless unless it declares parameters."""

    params: dict = {}
    grads: dict = {}
    l2_params: frozenset = frozenset()

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class Identity(Layer):
    """Placeholder for the input and classification-output stages."""

    def forward(self, x, train=False, rng=None):
        return x

    def backward(self, dy):
        return dy


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask


class Conv2D(Layer):
    """2-D cross-correlation (no kernel flip) with zero padding.

    Kernels are (kh, kw, in_channels, filters). The forward pass is an
    im2col matrix product, chunked over the batch to bound scratch memory;
    backward rebuilds the patch matrix per chunk instead of caching it.
    """

    l2_params = frozenset({"w"})

    def __init__(self, w, b, stride=(1, 1), padding="same"):
        self.w = np.asarray(w)
        self.b = np.asarray(b)
        if self.w.ndim != 4 or self.b.shape != (self.w.shape[3],):
            raise ShapeError("conv kernel must be (kh, kw, cin, filters) with matching bias")
        self.stride = (int(stride[0]), int(stride[1]))
        kh, kw = self.w.shape[:2]
        if padding == "same":
            self.padding = ((kh - 1) // 2, (kw - 1) // 2)
        else:
            self.padding = (int(padding[0]), int(padding[1]))
        self.params = {"w": self.w, "b": self.b}
        self.grads = {}

    def output_shape(self, in_shape):
        h, w, cin = in_shape
        kh, kw, cin_k, f = self.w.shape
        if cin != cin_k:
            raise ShapeError(f"conv expects {cin_k} input channels, got {cin}")
        ph, pw = self.padding
        sh, sw = self.stride
        oh = (h + 2 * ph - kh) // sh + 1
        ow = (w + 2 * pw - kw) // sw + 1
        if oh < 1 or ow < 1:
            raise ShapeError("kernel larger than padded input")
        return oh, ow, f

    def _pad(self, x):
        ph, pw = self.padding
        if ph == 0 and pw == 0:
            return x
        return np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))

    def _columns(self, x_pad, oh, ow):
        # (n, oh, ow, kh*kw*cin) patch matrix for a padded chunk
        kh, kw = self.w.shape[:2]
        sh, sw = self.stride
        win = sliding_window_view(x_pad, (kh, kw), axis=(1, 2))
        win = win[:, ::sh, ::sw]                       # (n, oh, ow, cin, kh, kw)
        win = win.transpose(0, 1, 2, 4, 5, 3)          # (n, oh, ow, kh, kw, cin)
        return np.ascontiguousarray(win).reshape(x_pad.shape[0], oh, ow, -1)

    def _chunk_size(self, oh, ow):
        per_sample = oh * ow * self.w.shape[0] * self.w.shape[1] * self.w.shape[2]
        return max(1, _MAX_COL_ELEMENTS // per_sample)

    def forward(self, x, train=False, rng=None):
        n = x.shape[0]
        oh, ow, f = self.output_shape(x.shape[1:])
        self._x = x
        w_mat = self.w.reshape(-1, f)
        out = np.empty((n, oh, ow, f), dtype=x.dtype)
        step = self._chunk_size(oh, ow)
        for lo in range(0, n, step):
            x_pad = self._pad(x[lo:lo + step])
            m = x_pad.shape[0]
            cols = self._columns(x_pad, oh, ow)
            prod = cols.reshape(m * oh * ow, -1) @ w_mat
            out[lo:lo + step] = prod.reshape(m, oh, ow, f) + self.b.astype(x.dtype)
        return out

    def backward(self, dy):
        x = self._x
        n = x.shape[0]
        kh, kw, cin, f = self.w.shape
        oh, ow, _ = self.output_shape(x.shape[1:])
        ph, pw = self.padding
        sh, sw = self.stride

        dw = np.zeros_like(self.w, dtype=np.float64)
        db = dy.sum(axis=(0, 1, 2), dtype=np.float64)
        dx = np.zeros_like(x)
        step = self._chunk_size(oh, ow)
        w_mat = self.w.reshape(-1, f)
        for lo in range(0, n, step):
            chunk = x[lo:lo + step]
            m = chunk.shape[0]
            x_pad = self._pad(chunk)
            cols = self._columns(x_pad, oh, ow).reshape(m * oh * ow, -1)
            dy_mat = dy[lo:lo + step].reshape(m * oh * ow, f)
            dw += (cols.T @ dy_mat).reshape(self.w.shape)
            dcols = (dy_mat @ w_mat.T).reshape(m, oh, ow, kh, kw, cin)
            dx_pad = np.zeros_like(x_pad)
            for ki in range(kh):
                for kj in range(kw):
                    dx_pad[:, ki:ki + oh * sh:sh, kj:kj + ow * sw:sw, :] += dcols[:, :, :, ki, kj, :]
            dx[lo:lo + step] = dx_pad[:, ph:ph + chunk.shape[1], pw:pw + chunk.shape[2], :]
        self.grads = {"w": dw.astype(self.w.dtype), "b": db.astype(self.b.dtype)}
        return dx


class BatchNorm(Layer):
    """Per-channel batch normalization with running statistics for inference.

    Works on (n, h, w, c) and (n, features) inputs alike; batch statistics
    use the population (1/M) variance. Inference mode never mutates the
    running statistics.
    """

    def __init__(self, gamma, beta, eps=1e-5, momentum=0.1):
        self.gamma = np.asarray(gamma)
        self.beta = np.asarray(beta)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.running_mean = np.zeros_like(self.gamma)
        self.running_var = np.ones_like(self.gamma)
        self.params = {"gamma": self.gamma, "beta": self.beta}
        self.grads = {}

    def _axes(self, x):
        return tuple(range(x.ndim - 1))

    def forward(self, x, train=False, rng=None):
        axes = self._axes(x)
        if train:
            if x.shape[0] < 2:
                raise ShapeError("batch normalization needs batch size >= 2 in train mode")
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mu
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mu = self.running_mean.astype(x.dtype)
            var = self.running_var.astype(x.dtype)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mu) * inv_std
        self._train = train
        self._cache = (x_hat, inv_std)
        return self.gamma.astype(x.dtype) * x_hat + self.beta.astype(x.dtype)

    def backward(self, dy):
        x_hat, inv_std = self._cache
        axes = self._axes(dy)
        m = np.prod([dy.shape[a] for a in axes])
        dgamma = (dy * x_hat).sum(axis=axes)
        dbeta = dy.sum(axis=axes)
        self.grads = {"gamma": dgamma.astype(self.gamma.dtype),
                      "beta": dbeta.astype(self.beta.dtype)}
        if not self._train:
            return dy * (self.gamma * inv_std).astype(dy.dtype)
        dxhat = dy * self.gamma.astype(dy.dtype)
        # dx through the batch statistics
        term = dxhat - dxhat.mean(axis=axes) - x_hat * (dxhat * x_hat).sum(axis=axes) / m
        return term * inv_std


class MaxPool(Layer):
    """Window maxima with argmax routing for the backward pass.

    Ties route the gradient to the first maximum in row-major window order.
    Non-overlapping pooling (stride == pool, the common case) uses a reshape
    fast path; overlapping windows fall back to scatter-add.
    """

    def __init__(self, pool=(2, 2), stride=None):
        self.pool = (int(pool[0]), int(pool[1]))
        self.stride = self.pool if stride is None else (int(stride[0]), int(stride[1]))

    def output_shape(self, in_shape):
        h, w, c = in_shape
        ph, pw = self.pool
        sh, sw = self.stride
        if h < ph or w < pw:
            raise ShapeError(f"input {in_shape} smaller than pool window {self.pool}")
        return (h - ph) // sh + 1, (w - pw) // sw + 1, c

    def forward(self, x, train=False, rng=None):
        n, h, w, c = x.shape
        oh, ow, _ = self.output_shape(x.shape[1:])
        ph, pw = self.pool
        sh, sw = self.stride
        self._in_shape = x.shape
        if (sh, sw) == (ph, pw) and h % ph == 0 and w % pw == 0:
            blocks = x.reshape(n, oh, ph, ow, pw, c).transpose(0, 1, 3, 5, 2, 4)
            flat = np.ascontiguousarray(blocks).reshape(n, oh, ow, c, ph * pw)
            self._arg = flat.argmax(axis=-1)
            self._overlap = False
            return np.take_along_axis(flat, self._arg[..., None], axis=-1)[..., 0]
        win = sliding_window_view(x, (ph, pw), axis=(1, 2))[:, ::sh, ::sw]
        flat = np.ascontiguousarray(win).reshape(n, oh, ow, c, ph * pw)
        self._arg = flat.argmax(axis=-1)
        self._overlap = True
        return np.take_along_axis(flat, self._arg[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        n, h, w, c = self._in_shape
        oh, ow = dy.shape[1], dy.shape[2]
        ph, pw = self.pool
        sh, sw = self.stride
        if not self._overlap:
            dflat = np.zeros((n, oh, ow, c, ph * pw), dtype=dy.dtype)
            np.put_along_axis(dflat, self._arg[..., None], dy[..., None], axis=-1)
            dx = dflat.reshape(n, oh, ow, c, ph, pw).transpose(0, 1, 4, 2, 5, 3)
            return np.ascontiguousarray(dx).reshape(n, h, w, c)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        hi = (np.arange(oh) * sh)[None, :, None, None] + self._arg // pw
        wi = (np.arange(ow) * sw)[None, None, :, None] + self._arg % pw
        ni = np.arange(n)[:, None, None, None]
        ci = np.arange(c)[None, None, None, :]
        np.add.at(dx, (ni, hi, wi, ci), dy)
        return dx


class Dropout(Layer):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Identity (the very same array) outside training.
    """

    def __init__(self, p=0.5):
        if not 0.0 < p < 1.0:
            raise ValueError("dropout probability must lie in (0, 1)")
        self.p = float(p)

    def forward(self, x, train=False, rng=None):
        if not train:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        self._mask = (rng.random(x.shape) >= self.p).astype(x.dtype) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class Dense(Layer):
    """Fully connected layer; flattens trailing input dimensions."""

    l2_params = frozenset({"w"})

    def __init__(self, w, b):
        self.w = np.asarray(w)
        self.b = np.asarray(b)
        self.params = {"w": self.w, "b": self.b}
        self.grads = {}

    def forward(self, x, train=False, rng=None):
        self._x_shape = x.shape
        x2 = x.reshape(x.shape[0], -1)
        if x2.shape[1] != self.w.shape[0]:
            raise ShapeError(f"dense expects {self.w.shape[0]} features, got {x2.shape[1]}")
        self._x2 = x2
        return x2 @ self.w + self.b.astype(x.dtype)

    def backward(self, dy):
        self.grads = {"w": (self._x2.T @ dy).astype(self.w.dtype),
                      "b": dy.sum(axis=0).astype(self.b.dtype)}
        return (dy @ self.w.T).reshape(self._x_shape)


class Softmax(Layer):
    def forward(self, x, train=False, rng=None):
        self._p = softmax(x)
        return self._p

    def backward(self, dy):
        p = self._p
        return p * (dy - (dy * p).sum(axis=-1, keepdims=True))
