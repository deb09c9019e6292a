"""Finite-difference verification of training-loss gradients.

Runs the network in float64 and compares autograd gradients of the binary
cross-entropy loss against central finite differences on a sampled subset of
weights. Used as a training-loop sanity gate for the desk-scale architecture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .config import ModelConfig
from .networks import build_network


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_err: float
    n_checked: int
    analytic: np.ndarray
    numeric: np.ndarray


def gradient_check(
    config: ModelConfig | None = None,
    batch_x: np.ndarray | None = None,
    batch_y: np.ndarray | None = None,
    *,
    n_weights: int = 24,
    eps: float = 1e-5,
    seed: int = 0,
) -> GradCheckResult:
    """Compare analytic and central-finite-difference gradients on one batch.

    Defaults to the desk-scale architecture on a fixed random batch. Relative
    error uses max(|analytic|, |numeric|, 1e-8) in the denominator so zero
    gradients do not blow up the ratio.
    """
    cfg = config or ModelConfig(max_steps=1, batch_size=8)
    torch.manual_seed(seed)
    net = build_network(cfg).double()
    rng = np.random.default_rng(seed)
    if batch_x is None:
        batch_x = rng.random((8, 3, cfg.input_size_px, cfg.input_size_px))
    if batch_y is None:
        batch_y = rng.integers(0, 2, size=batch_x.shape[0])
    xb = torch.from_numpy(np.asarray(batch_x, dtype=np.float64))
    yb = torch.from_numpy(np.asarray(batch_y, dtype=np.float64))
    loss_fn = torch.nn.BCEWithLogitsLoss()

    def loss_value() -> float:
        with torch.no_grad():
            return float(loss_fn(net(xb), yb))

    net.zero_grad()
    loss_fn(net(xb), yb).backward()

    params = [p for p in net.parameters() if p.requires_grad]
    sizes = np.array([p.numel() for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    picks = rng.choice(int(sizes.sum()), size=min(n_weights, int(sizes.sum())), replace=False)

    analytic = np.empty(len(picks))
    numeric = np.empty(len(picks))
    with torch.no_grad():
        for j, flat_idx in enumerate(np.sort(picks)):
            p_i = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
            local = int(flat_idx - offsets[p_i])
            param = params[p_i]
            flat = param.view(-1)
            analytic[j] = float(param.grad.view(-1)[local])
            orig = float(flat[local])
            flat[local] = orig + eps
            up = loss_value()
            flat[local] = orig - eps
            down = loss_value()
            flat[local] = orig
            numeric[j] = (up - down) / (2.0 * eps)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    rel = np.abs(analytic - numeric) / denom
    return GradCheckResult(
        max_rel_err=float(rel.max()),
        n_checked=len(picks),
        analytic=analytic,
        numeric=numeric,
    )
