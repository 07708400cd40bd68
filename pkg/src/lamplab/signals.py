"""Signal sources: Gaussian prior draws and grayscale image vectors."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError, InvalidSignalError
from .rng import substream

SE_NORMALIZATION = "se"
FIGURE1_NORMALIZATION = "figure1"


def load_signal_gaussian(n: int, kappa: float, seed: int) -> np.ndarray:
    """i.i.d. ``N(0, 1/kappa)`` entries, so that ``E |x|^2 / m = 1``."""
    if n < 1 or not 0.0 < kappa < 1.0:
        raise InvalidInputError(f"bad signal parameters n={n}, kappa={kappa}")
    return substream(seed, "gaussian-signal").standard_normal(n) / math.sqrt(kappa)


def _parse_pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, data_offset) of a binary P5 file."""
    if data[:2] != b"P5":
        raise InvalidSignalError("not a binary PGM file (magic P5 missing)")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise InvalidSignalError("truncated PGM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isdigit():
            start = pos
            while pos < len(data) and data[pos : pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise InvalidSignalError(f"unexpected byte {ch!r} in PGM header")
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise InvalidSignalError("missing separator before PGM raster")
    return fields[0], fields[1], fields[2], pos + 1


def load_signal_image(
    path: str,
    n: int,
    kappa: float,
    normalization: str = SE_NORMALIZATION,
) -> np.ndarray:
    """First ``n`` pixels of an 8-bit grayscale PGM, centered and rescaled.

    ``se`` normalization enforces ``|x|^2 = n / kappa`` (the energy the
    dynamics prediction assumes); ``figure1`` centers to mean zero and
    unit standard deviation instead.
    """
    if normalization not in (SE_NORMALIZATION, FIGURE1_NORMALIZATION):
        raise InvalidInputError(f"unknown normalization {normalization!r}")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InvalidSignalError(f"cannot read image {path!r}: {exc}") from exc
    width, height, maxval, offset = _parse_pgm_header(data)
    if maxval > 255:
        raise InvalidSignalError(f"only 8-bit PGM supported, maxval={maxval}")
    if width * height < n:
        raise InvalidSignalError(
            f"image has {width * height} pixels, need at least {n}"
        )
    raster = data[offset : offset + width * height]
    if len(raster) < n:
        raise InvalidSignalError("PGM raster shorter than declared size")
    x = np.frombuffer(raster[:n], dtype=np.uint8).astype(np.float64)
    x -= x.mean()
    scale_base = float(x @ x)
    if scale_base == 0.0:
        raise InvalidSignalError("image signal is constant (zero after centering)")
    if normalization == SE_NORMALIZATION:
        x *= math.sqrt((n / kappa) / scale_base)
    else:
        x /= math.sqrt(scale_base / n)
    return x


def write_pgm(path: str, width: int, height: int, pixels: bytes) -> None:
    """Write a binary P5 file (test and demo helper)."""
    if len(pixels) != width * height:
        raise InvalidInputError("pixel buffer does not match dimensions")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels)
