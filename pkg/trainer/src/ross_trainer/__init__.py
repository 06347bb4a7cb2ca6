"""Train a small segmentation model on (BEV, label) pairs and predict back
label images in the same on-disk format.

This package talks to the dataset tool only through files: it reads the
manifest, BEV PNGs, and label PNGs a pipeline run emits, and writes label
PNGs the scoring CLI accepts. It never imports the dataset tool's code.
"""

__version__ = "0.1.0"
