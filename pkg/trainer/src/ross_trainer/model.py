"""Segmentation model: a stock encoder-decoder behind a channel adapter."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F
from torchvision.models.segmentation import lraspp_mobilenet_v3_large


class BevSegmenter(nn.Module):
    """Maps (N, in_channels, H, W) BEV stacks to per-pixel class logits.

    A learned 1x1 convolution adapts the channel count to the three the
    stock backbone expects, and the image is scaled up 2x on the way in
    (and the logits back down) so the backbone's coarsest stride lands on
    blob-sized targets. The backbone is always built from scratch, no
    downloaded weights.

    BatchNorm layers use cumulative running statistics: with the small
    batches this toy trains on, the default exponential average tracks the
    last batch instead of the data and eval-mode predictions collapse.
    """

    def __init__(self, in_channels: int, num_classes: int):
        super().__init__()
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.adapter = nn.Conv2d(in_channels, 3, kernel_size=1)
        self.net = lraspp_mobilenet_v3_large(
            weights=None, weights_backbone=None, num_classes=num_classes
        )
        for module in self.modules():
            if isinstance(module, nn.BatchNorm2d):
                module.momentum = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        up = F.interpolate(
            self.adapter(x), scale_factor=2.0, mode="bilinear", align_corners=False
        )
        logits = self.net(up)["out"]
        return F.interpolate(logits, size=(h, w), mode="bilinear", align_corners=False)


def build_model(in_channels: int, num_classes: int) -> BevSegmenter:
    return BevSegmenter(in_channels, num_classes)
