"""Inference: write one label image per BEV frame, geometry copied over."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import OUTPUT_IDS, load_samples, write_label_image
from .training import load_checkpoint


def predict(checkpoint_path, data_dir, out_dir) -> list[Path]:
    """Run the checkpointed model over a dataset's BEV frames.

    Emits labels/<frame>_label.png files under out_dir with the input
    frames' sidecar geometry. Returns the written image paths.
    """
    model, meta = load_checkpoint(checkpoint_path)
    samples = load_samples(data_dir, meta["channels"], meta["merge"], with_labels=False)
    ids = np.asarray(OUTPUT_IDS[meta["merge"]], dtype=np.uint8)

    out_dir = Path(out_dir)
    labels_dir = out_dir / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for sample in samples:
            logits = model(torch.from_numpy(sample.image).unsqueeze(0))
            classes = ids[logits.argmax(dim=1).squeeze(0).numpy()]
            path = labels_dir / f"{sample.frame_id}_label.png"
            write_label_image(classes, sample.sidecar, path)
            written.append(path)
    return written
