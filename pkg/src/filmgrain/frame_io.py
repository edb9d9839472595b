"""Raw planar YUV and Y4M reading/writing, 8-bit and 10-bit 4:2:0.

Frames stream one at a time; nothing here buffers a whole file. 10-bit samples
travel as little-endian 16-bit words whose top 6 bits must be zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Iterable, Iterator

import numpy as np


class FormatError(ValueError):
    """Container or format problem (bad header, truncation, mismatch)."""


@dataclass(frozen=True)
class VideoFormat:
    width: int
    height: int
    bit_depth: int = 8
    frame_rate: Fraction = Fraction(25, 1)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise FormatError(f"bad dimensions {self.width}x{self.height}")
        if self.width % 2 or self.height % 2:
            raise FormatError(
                f"dimensions {self.width}x{self.height} must be even for 4:2:0"
            )
        if self.bit_depth not in (8, 10):
            raise FormatError(f"bit depth {self.bit_depth} unsupported, expected 8 or 10")

    @property
    def chroma_size(self) -> tuple[int, int]:
        return self.width // 2, self.height // 2

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def dtype(self):
        return np.uint8 if self.bit_depth == 8 else np.uint16

    @property
    def bytes_per_sample(self) -> int:
        return 1 if self.bit_depth == 8 else 2

    @property
    def samples_per_frame(self) -> int:
        return self.width * self.height * 3 // 2

    @property
    def bytes_per_frame(self) -> int:
        return self.samples_per_frame * self.bytes_per_sample


@dataclass(frozen=True)
class Frame:
    """One picture: Y at full resolution, Cb/Cr at half resolution each axis."""

    format: VideoFormat
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        f = self.format
        cw, ch = f.chroma_size
        if self.y.shape != (f.height, f.width):
            raise FormatError(f"Y plane shape {self.y.shape} != {(f.height, f.width)}")
        if self.cb.shape != (ch, cw) or self.cr.shape != (ch, cw):
            raise FormatError(f"chroma plane shape mismatch for {f.width}x{f.height}")

    @property
    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.cb, self.cr


def make_frame(fmt: VideoFormat, y, cb, cr) -> Frame:
    return Frame(
        fmt,
        np.ascontiguousarray(y, dtype=fmt.dtype),
        np.ascontiguousarray(cb, dtype=fmt.dtype),
        np.ascontiguousarray(cr, dtype=fmt.dtype),
    )


def flat_frame(fmt: VideoFormat, y_value: int, cb_value: int | None = None, cr_value: int | None = None) -> Frame:
    """Constant-valued frame, mostly useful for tests and fixtures."""
    mid = 1 << (fmt.bit_depth - 1)
    cb_value = mid if cb_value is None else cb_value
    cr_value = mid if cr_value is None else cr_value
    cw, ch = fmt.chroma_size
    return Frame(
        fmt,
        np.full((fmt.height, fmt.width), y_value, dtype=fmt.dtype),
        np.full((ch, cw), cb_value, dtype=fmt.dtype),
        np.full((ch, cw), cr_value, dtype=fmt.dtype),
    )


def _split_planes(fmt: VideoFormat, buf: bytes, permissive: bool) -> Frame:
    samples = np.frombuffer(buf, dtype="<u2" if fmt.bit_depth == 10 else np.uint8)
    if fmt.bit_depth == 10:
        if permissive:
            samples = samples & 0x3FF
        elif samples.max(initial=0) > 0x3FF:
            bad = int(samples.max())
            raise FormatError(
                f"sample value {bad} exceeds 10-bit range; pass permissive=True to mask"
            )
        samples = samples.astype(np.uint16)
    n_y = fmt.width * fmt.height
    cw, ch = fmt.chroma_size
    n_c = cw * ch
    y = samples[:n_y].reshape(fmt.height, fmt.width)
    cb = samples[n_y : n_y + n_c].reshape(ch, cw)
    cr = samples[n_y + n_c :].reshape(ch, cw)
    return Frame(fmt, y.copy(), cb.copy(), cr.copy())


def _frame_bytes(frame: Frame) -> bytes:
    fmt = frame.format
    parts = []
    for plane in frame.planes:
        if plane.max(initial=0) > fmt.max_value:
            raise FormatError(
                f"sample {int(plane.max())} exceeds {fmt.bit_depth}-bit range on write"
            )
        if fmt.bit_depth == 10:
            parts.append(np.ascontiguousarray(plane, dtype="<u2").tobytes())
        else:
            parts.append(np.ascontiguousarray(plane, dtype=np.uint8).tobytes())
    return b"".join(parts)


# --- Y4M ---

_Y4M_MAGIC = b"YUV4MPEG2"


def _parse_y4m_header(line: bytes) -> VideoFormat:
    fields = line.decode("ascii", errors="replace").split()
    if not fields or fields[0] != _Y4M_MAGIC.decode():
        raise FormatError(f"not a Y4M stream (header starts {line[:20]!r})")
    width = height = None
    rate = Fraction(25, 1)
    bit_depth = 8
    for tag in fields[1:]:
        key, val = tag[0], tag[1:]
        if key == "W":
            width = int(val)
        elif key == "H":
            height = int(val)
        elif key == "F":
            num, den = val.split(":")
            rate = Fraction(int(num), int(den))
        elif key == "C":
            if val in ("420", "420jpeg", "420mpeg2", "420paldv"):
                bit_depth = 8
            elif val == "420p10":
                bit_depth = 10
            else:
                raise FormatError(f"unsupported chroma tag C{val}, only 4:2:0 handled")
        # interlace (I), aspect (A) and X extensions are ignored
    if width is None or height is None:
        raise FormatError("Y4M header missing W or H tag")
    return VideoFormat(width, height, bit_depth, rate)


def _read_header_line(stream: BinaryIO) -> bytes:
    line = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise FormatError("stream ended inside a Y4M header line")
        if ch == b"\n":
            return bytes(line)
        line.extend(ch)
        if len(line) > 512:
            raise FormatError("Y4M header line longer than 512 bytes")


def read_y4m(stream: BinaryIO, permissive: bool = False) -> tuple[VideoFormat, Iterator[Frame]]:
    """Parse the stream header and return (format, frame iterator)."""
    fmt = _parse_y4m_header(_read_header_line(stream))

    def frames() -> Iterator[Frame]:
        index = 0
        nbytes = fmt.bytes_per_frame
        while True:
            marker = stream.read(5)
            if not marker:
                return
            if marker != b"FRAME":
                raise FormatError(f"expected FRAME marker before frame {index}, got {marker!r}")
            _read_header_line(stream)  # parameters after FRAME are ignored
            buf = stream.read(nbytes)
            if len(buf) < nbytes:
                raise FormatError(
                    f"frame {index} truncated: {len(buf)} of {nbytes} payload bytes"
                )
            yield _split_planes(fmt, buf, permissive)
            index += 1

    return fmt, frames()


def _y4m_header(fmt: VideoFormat) -> bytes:
    ctag = "C420p10" if fmt.bit_depth == 10 else "C420"
    rate = fmt.frame_rate
    return (
        f"YUV4MPEG2 W{fmt.width} H{fmt.height} F{rate.numerator}:{rate.denominator} {ctag}\n"
    ).encode("ascii")


def write_y4m(fmt: VideoFormat, frames: Iterable[Frame], sink: BinaryIO) -> int:
    total = 0
    header = _y4m_header(fmt)
    sink.write(header)
    total += len(header)
    for frame in frames:
        if frame.format != fmt:
            raise FormatError(f"frame format {frame.format} != stream format {fmt}")
        sink.write(b"FRAME\n")
        payload = _frame_bytes(frame)
        sink.write(payload)
        total += 6 + len(payload)
    return total


# --- headerless raw planar (I420 / I010) ---

def read_raw(stream: BinaryIO, fmt: VideoFormat, permissive: bool = False) -> Iterator[Frame]:
    nbytes = fmt.bytes_per_frame
    index = 0
    while True:
        buf = stream.read(nbytes)
        if not buf:
            return
        if len(buf) < nbytes:
            raise FormatError(
                f"trailing partial frame after frame {index - 1}: {len(buf)} leftover bytes"
            )
        yield _split_planes(fmt, buf, permissive)
        index += 1


def write_raw(fmt: VideoFormat, frames: Iterable[Frame], sink: BinaryIO) -> int:
    total = 0
    for frame in frames:
        if frame.format != fmt:
            raise FormatError(f"frame format {frame.format} != stream format {fmt}")
        payload = _frame_bytes(frame)
        sink.write(payload)
        total += len(payload)
    return total


def open_video(path, fmt: VideoFormat | None = None, permissive: bool = False):
    """Open a video file by extension: .y4m self-describes, anything else is raw.

    Returns (format, frame iterator, file handle). The caller closes the handle.
    """
    f = open(path, "rb")
    try:
        if str(path).lower().endswith(".y4m"):
            got_fmt, frames = read_y4m(f, permissive)
            return got_fmt, frames, f
        if fmt is None:
            raise FormatError(f"{path}: raw video needs an explicit format")
        return fmt, read_raw(f, fmt, permissive), f
    except Exception:
        f.close()
        raise
