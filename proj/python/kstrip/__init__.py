"""Skull stripping on complex-valued k-space.

Arrays are numpy complex128 in centered (fftshifted) k-space layout;
masks are boolean [H, W] arrays.
"""

from ._kstrip import (
    ConfigError,
    ContractError,
    DimensionError,
    Error,
    FormatError,
    IntegrityError,
    IoError,
    Model,
    NumericError,
    Sample,
    UnsupportedSizeError,
    binarize,
    confusion,
    conv_precision,
    dice,
    directed_hausdorff,
    evaluate,
    exclusion_threshold,
    fft2,
    fftshift,
    generate,
    ifft2,
    ifftshift,
    read_dataset,
    set_conv_precision,
    split,
    to_image,
    train,
    write_dataset,
)

__version__ = "0.1.0"
