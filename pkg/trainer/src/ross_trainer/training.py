"""Training loop: verify the dataset, fit, leave a checkpoint and loss curve.

Runs on CPU with a fixed seed. Repeat runs with the same seed reproduce the
loss curve to well within 1e-3 per epoch (framework scheduling is the only
noise source); the tests pin that tolerance.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import TrainConfig
from .data import IGNORE, OUTPUT_IDS, load_samples, verify_dataset
from .errors import CheckpointError
from .model import build_model


def train(config: TrainConfig, out_dir) -> dict:
    """Fit the model and write checkpoint.pt and loss.csv under out_dir.

    Returns {"losses": per-epoch means, "checkpoint": path, "curve": path}.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    verify_dataset(config.data_dir, config.channels, config.merge)
    samples = load_samples(config.data_dir, config.channels, config.merge)

    torch.manual_seed(config.seed)
    num_classes = len(OUTPUT_IDS[config.merge])
    model = build_model(config.channels, num_classes)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=config.epochs
    )

    images = torch.from_numpy(np.stack([s.image for s in samples]))
    targets = torch.from_numpy(np.stack([s.target for s in samples]))
    # frequency-balanced class weights, or the dominant class drowns the rest
    counts = np.bincount(
        targets.numpy()[targets.numpy() != IGNORE], minlength=num_classes
    )
    weights = counts.sum() / (num_classes * np.maximum(counts, 1))
    loss_fn = nn.CrossEntropyLoss(
        ignore_index=IGNORE, weight=torch.tensor(weights, dtype=torch.float32)
    )
    n = len(samples)
    order_rng = torch.Generator().manual_seed(config.seed)

    losses = []
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=order_rng)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            optimizer.zero_grad()
            logits = model(images[idx])
            loss = loss_fn(logits, targets[idx])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            batches += 1
        scheduler.step()
        losses.append(epoch_loss / batches)

    checkpoint_path = out_dir / "checkpoint.pt"
    torch.save(
        {
            "state": model.state_dict(),
            "channels": config.channels,
            "merge": config.merge,
            "num_classes": num_classes,
        },
        checkpoint_path,
    )
    curve_path = out_dir / "loss.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, value in enumerate(losses):
            writer.writerow([epoch, f"{value:.6f}"])
    return {"losses": losses, "checkpoint": checkpoint_path, "curve": curve_path}


def load_checkpoint(path):
    """Rebuild the model from a checkpoint; returns (model, metadata)."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
    for key in ("state", "channels", "merge", "num_classes"):
        if key not in blob:
            raise CheckpointError(f"{path}: missing field {key}")
    model = build_model(blob["channels"], blob["num_classes"])
    try:
        model.load_state_dict(blob["state"])
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: state does not fit the model: {exc}") from exc
    model.eval()
    return model, {k: blob[k] for k in ("channels", "merge", "num_classes")}
