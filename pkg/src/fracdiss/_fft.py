"""Thin wrappers over :mod:`scipy.fft` honouring ``FRACDISS_THREADS``."""

from __future__ import annotations

import os

from scipy import fft as _sfft

THREADS_ENV = "FRACDISS_THREADS"


def workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def rfftn(a, axes):
    return _sfft.rfftn(a, axes=axes, workers=workers())


def irfftn(a, s, axes):
    return _sfft.irfftn(a, s=s, axes=axes, workers=workers())


def fftn(a, axes):
    return _sfft.fftn(a, axes=axes, workers=workers())


def ifftn(a, axes):
    return _sfft.ifftn(a, axes=axes, workers=workers())
