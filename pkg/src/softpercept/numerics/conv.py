"""2-D convolution and its adjoint on NHWC tensors (im2col)."""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor, _accumulate, _make, as_tensor


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    n, _, _, c = xp.shape
    cols = np.empty((n, ho, wo, kh, kw, c), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :]
    return cols.reshape(n * ho * wo, kh * kw * c)


def _col2im(cols: np.ndarray, shape, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    n, hp, wp, c = shape
    cols = cols.reshape(n, ho, wo, kh, kw, c)
    out = np.zeros(shape, dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :] += cols[:, :, :, i, j, :]
    return out


def conv2d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of ``x`` (N,H,W,Cin) with ``w`` (kh,kw,Cin,Cout), zero padding."""
    x, w = as_tensor(x), as_tensor(w)
    if stride < 1 or padding < 0:
        raise ValueError(f"conv2d: stride {stride} / padding {padding} out of range")
    if x.ndim != 4 or w.ndim != 4 or x.shape[3] != w.shape[2]:
        raise ShapeError(f"conv2d: incompatible shapes {x.shape} and {w.shape}")
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    ho, wo = _out_size(h, kh, stride, padding), _out_size(wd, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: kernel {w.shape} larger than padded input {x.shape}")
    p = padding
    xp = np.pad(x.data, ((0, 0), (p, p), (p, p), (0, 0))) if p else x.data
    cols = _im2col(xp, kh, kw, stride, ho, wo)
    w2 = w.data.reshape(kh * kw * cin, cout)
    value = (cols @ w2).reshape(n, ho, wo, cout)

    def backward(g):
        g2 = g.reshape(n * ho * wo, cout)
        if w.requires_grad:
            _accumulate(w, (cols.T @ g2).reshape(w.shape))
        if x.requires_grad:
            dxp = _col2im(g2 @ w2.T, xp.shape, kh, kw, stride, ho, wo)
            _accumulate(x, dxp[:, p : p + h, p : p + wd, :] if p else dxp)

    return _make(value, "conv2d", (x, w), backward)


def conv_transpose2d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    """Adjoint of :func:`conv2d`.

    ``x`` is (N,H,W,Cin) and ``w`` is (kh,kw,Cout,Cin): the kernel of the
    forward convolution that would map Cout channels back to Cin.  Output
    spatial size is ``(H - 1) * stride - 2 * padding + k``.
    """
    x, w = as_tensor(x), as_tensor(w)
    if stride < 1 or padding < 0:
        raise ValueError(f"conv_transpose2d: stride {stride} / padding {padding} out of range")
    if x.ndim != 4 or w.ndim != 4 or x.shape[3] != w.shape[3]:
        raise ShapeError(f"conv_transpose2d: incompatible shapes {x.shape} and {w.shape}")
    n, h, wd, cin = x.shape
    kh, kw, cout, _ = w.shape
    p = padding
    hp, wp = (h - 1) * stride + kh, (wd - 1) * stride + kw
    ho, wo = hp - 2 * p, wp - 2 * p
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv_transpose2d: padding {p} too large for {x.shape} and {w.shape}")
    w2 = w.data.reshape(kh * kw * cout, cin)
    x2 = x.data.reshape(n * h * wd, cin)
    full = _col2im(x2 @ w2.T, (n, hp, wp, cout), kh, kw, stride, h, wd)
    value = full[:, p : p + ho, p : p + wo, :] if p else full

    def backward(g):
        gp = np.pad(g, ((0, 0), (p, p), (p, p), (0, 0))) if p else g
        cols = _im2col(gp, kh, kw, stride, h, wd)
        if x.requires_grad:
            _accumulate(x, (cols @ w2).reshape(x.shape))
        if w.requires_grad:
            _accumulate(w, (cols.T @ x2).reshape(w.shape))

    return _make(np.ascontiguousarray(value), "conv_transpose2d", (x, w), backward)
