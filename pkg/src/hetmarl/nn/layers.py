"""MLP parameter construction and forward passes on the autodiff tape."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, tanh


def orthogonal(rng: np.random.Generator, n_in: int, n_out: int,
               gain: float = 1.0) -> np.ndarray:
    """Orthogonal-ish init: QR of a Gaussian matrix, scaled by gain."""
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))   # deterministic sign convention
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


def mlp_params(rng: np.random.Generator, sizes: list[int],
               final_gain: float = 1.0, prefix: str = "mlp") -> dict[str, Tensor]:
    """Weights and biases for a tanh MLP with layer sizes ``sizes``."""
    params: dict[str, Tensor] = {}
    for k in range(len(sizes) - 1):
        gain = final_gain if k == len(sizes) - 2 else 1.0
        w = orthogonal(rng, sizes[k], sizes[k + 1], gain)
        params[f"{prefix}/w{k}"] = Tensor(w, requires_grad=True, name=f"{prefix}/w{k}")
        params[f"{prefix}/b{k}"] = Tensor(np.zeros(sizes[k + 1]), requires_grad=True,
                                          name=f"{prefix}/b{k}")
    return params


def mlp_forward(params: dict[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    """tanh hidden activations, linear output layer."""
    k = 0
    while f"{prefix}/w{k + 1}" in params:
        x = tanh(x @ params[f"{prefix}/w{k}"] + params[f"{prefix}/b{k}"])
        k += 1
    return x @ params[f"{prefix}/w{k}"] + params[f"{prefix}/b{k}"]
