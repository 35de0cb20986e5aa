# Copyright 2026 The ssir Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the ssir silent speech recognition toolkit."""

import sys

from ._ssir import (
    Error,
    FormatError,
    InfeasibleTarget,
    InsufficientData,
    InvalidParameter,
    IoError,
    NumericError,
    ShapeError,
    __version__,
    beam_decode,
    butterworth_highpass,
    checkpoint_info,
    collapse,
    ctc_brute_force,
    ctc_loss,
    greedy_decode,
    preprocess,
    run,
    standard_vocabulary,
    word_accuracy,
)


def main():
    """Console entry point mirroring the ssir binary."""
    return run(sys.argv[1:])
