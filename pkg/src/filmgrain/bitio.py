"""MSB-first bit I/O with exponential-Golomb codes."""


class BitstreamError(ValueError):
    """Malformed or truncated bitstream. Carries the offending bit offset."""

    def __init__(self, message: str, bit_offset: int):
        super().__init__(f"{message} (bit offset {bit_offset})")
        self.bit_offset = bit_offset


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, width: int) -> None:
        if width < 0 or value < 0 or value >> width:
            raise ValueError(f"value {value} does not fit in u({width})")
        self._acc = (self._acc << width) | value
        self._nbits += width
        while self._nbits >= 8:
            self._nbits -= 8
            self._bytes.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    def write_flag(self, flag: bool) -> None:
        self.write(1 if flag else 0, 1)

    def write_ue(self, value: int) -> None:
        if value < 0:
            raise ValueError("ue(v) needs a non-negative value")
        code = value + 1
        width = code.bit_length()
        self.write(0, width - 1)
        self.write(code, width)

    def write_se(self, value: int) -> None:
        self.write_ue(2 * value - 1 if value > 0 else -2 * value)

    def align(self) -> None:
        """Stop bit then zero padding out to a byte boundary."""
        self.write(1, 1)
        if self._nbits:
            self.write(0, 8 - self._nbits)

    @property
    def bit_length(self) -> int:
        return len(self._bytes) * 8 + self._nbits

    def getvalue(self) -> bytes:
        if self._nbits:
            raise ValueError("bitstream not byte-aligned; call align() first")
        return bytes(self._bytes)


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # in bits

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def bits_left(self) -> int:
        return len(self._data) * 8 - self._pos

    def read(self, width: int) -> int:
        if width > self.bits_left:
            raise BitstreamError(f"need {width} bits, {self.bits_left} left", self._pos)
        if width == 0:
            return 0
        end = self._pos + width
        first = self._pos >> 3
        last = (end + 7) >> 3
        chunk = int.from_bytes(self._data[first:last], "big")
        value = (chunk >> ((last << 3) - end)) & ((1 << width) - 1)
        self._pos = end
        return value

    def read_flag(self) -> bool:
        return bool(self.read(1))

    def read_ue(self) -> int:
        zeros = 0
        while True:
            if self.bits_left == 0:
                raise BitstreamError("ran off the end inside an exp-Golomb prefix", self._pos)
            if self.read(1):
                break
            zeros += 1
            if zeros > 63:
                raise BitstreamError("exp-Golomb prefix longer than 63 zeros", self._pos)
        return (1 << zeros) - 1 + self.read(zeros)

    def read_se(self) -> int:
        k = self.read_ue()
        return (k + 1) >> 1 if k & 1 else -(k >> 1)

    def check_trailing(self) -> None:
        """Consume the stop bit and padding; error if anything else is there."""
        start = self._pos
        if self.bits_left == 0 or self.read(1) != 1:
            raise BitstreamError("missing stop bit", start)
        while self.bits_left:
            if self.read(1):
                raise BitstreamError("nonzero bit after stop bit", self._pos - 1)
