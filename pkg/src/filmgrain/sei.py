"""Film grain characteristics parameter set and its bit-exact payload codec.

Wire layout (MSB-first):

    cancel_flag                          u(1)   always 0
    model_id                             u(2)   0 = frequency filtering
    separate_colour_description_flag     u(1)   always 0
    blending_mode_id                     u(2)   0 = additive
    log2_scale_factor                    u(4)
    comp_model_present_flag[c]           u(1)   c = Y, Cb, Cr
    per present component:
        num_intensity_intervals_minus1   u(8)
        num_model_values_minus1          u(3)
        per interval:
            intensity_interval_lower_bound   u(8)
            intensity_interval_upper_bound   u(8)
            comp_model_value[0..n]           se(v)
    persistence_flag                     u(1)
    stop bit + zero padding to a byte boundary

comp_model_value order is scaling factor, horizontal cutoff, vertical cutoff.
Cutoffs omitted on the wire are inferred at decode time: one model value means
both cutoffs are 8; two model values mean the vertical cutoff copies the
horizontal one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitio import BitReader, BitWriter, BitstreamError

COMPONENTS = ("Y", "Cb", "Cr")

MIN_LOG2_SCALE_FACTOR = 2
MAX_LOG2_SCALE_FACTOR = 7
MIN_CUTOFF = 2
MAX_CUTOFF = 14
MAX_INTERVALS = 10
MAX_SCALING_FACTOR = 255


class SeiValidationError(ValueError):
    """Parameter set violates a wire-format constraint."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Interval:
    """One intensity interval with its scaling factor and cutoff pair."""

    lower_bound: int
    upper_bound: int
    scaling_factor: int
    h_cutoff: int = 8
    v_cutoff: int = 8


@dataclass(frozen=True)
class IntervalModel:
    intervals: tuple[Interval, ...]
    num_model_values: int = 3

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))


@dataclass(frozen=True)
class FgcParams:
    """Complete parameter set for one frame's grain model."""

    film_grain_model_id: int = 0
    separate_colour_description_present_flag: bool = False
    blending_mode_id: int = 0
    log2_scale_factor: int = 5
    component_models: tuple[IntervalModel | None, IntervalModel | None, IntervalModel | None] = (
        None,
        None,
        None,
    )
    persistence_flag: bool = False

    def __post_init__(self):
        object.__setattr__(self, "component_models", tuple(self.component_models))

    def model_for(self, component: int) -> IntervalModel | None:
        return self.component_models[component]


def validate(params: FgcParams) -> list[str]:
    """Collect every constraint violation; an empty list means encodable."""
    out: list[str] = []
    if params.film_grain_model_id != 0:
        out.append(f"film_grain_model_id = {params.film_grain_model_id}, only 0 (frequency filtering) supported")
    if params.separate_colour_description_present_flag:
        out.append("separate_colour_description_present_flag must be 0")
    if params.blending_mode_id != 0:
        out.append(f"blending_mode_id = {params.blending_mode_id}, only 0 (additive) supported")
    if not MIN_LOG2_SCALE_FACTOR <= params.log2_scale_factor <= MAX_LOG2_SCALE_FACTOR:
        out.append(
            f"log2_scale_factor = {params.log2_scale_factor} outside "
            f"[{MIN_LOG2_SCALE_FACTOR}, {MAX_LOG2_SCALE_FACTOR}]"
        )
    if params.persistence_flag:
        out.append("persistence_flag must be 0 (parameters are re-sent per frame)")
    if len(params.component_models) != 3:
        out.append(f"expected 3 component model slots, got {len(params.component_models)}")
        return out
    for c, model in enumerate(params.component_models):
        if model is None:
            continue
        name = COMPONENTS[c]
        if not 1 <= model.num_model_values <= 3:
            out.append(f"{name}: num_model_values = {model.num_model_values} outside [1, 3]")
        n = len(model.intervals)
        if not 1 <= n <= MAX_INTERVALS:
            out.append(f"{name}: {n} intervals outside [1, {MAX_INTERVALS}]")
            continue
        for i, iv in enumerate(model.intervals):
            path = f"{name}.interval[{i}]"
            for label, bound in (("lower_bound", iv.lower_bound), ("upper_bound", iv.upper_bound)):
                if not 0 <= bound <= 255:
                    out.append(f"{path}.{label} = {bound} outside [0, 255]")
            if iv.lower_bound > iv.upper_bound:
                out.append(f"{path}: lower_bound {iv.lower_bound} > upper_bound {iv.upper_bound}")
            if not 0 <= iv.scaling_factor <= MAX_SCALING_FACTOR:
                out.append(
                    f"{path}.scaling_factor = {iv.scaling_factor} outside [0, {MAX_SCALING_FACTOR}]"
                )
            for label, cut in (("h_cutoff", iv.h_cutoff), ("v_cutoff", iv.v_cutoff)):
                if not MIN_CUTOFF <= cut <= MAX_CUTOFF:
                    out.append(f"{path}.{label} = {cut} outside [{MIN_CUTOFF}, {MAX_CUTOFF}]")
            if model.num_model_values == 2 and iv.v_cutoff != iv.h_cutoff:
                out.append(
                    f"{path}: two model values imply v_cutoff = h_cutoff, "
                    f"got {iv.v_cutoff} != {iv.h_cutoff}"
                )
            if model.num_model_values == 1 and (iv.h_cutoff != 8 or iv.v_cutoff != 8):
                out.append(f"{path}: one model value implies cutoffs (8, 8)")
        for i in range(n - 1):
            if model.intervals[i].upper_bound >= model.intervals[i + 1].lower_bound:
                out.append(
                    f"{name}: intervals {i} and {i + 1} overlap or are unsorted "
                    f"(upper {model.intervals[i].upper_bound} >= "
                    f"lower {model.intervals[i + 1].lower_bound})"
                )
    return out


def encode_sei(params: FgcParams) -> bytes:
    violations = validate(params)
    if violations:
        raise SeiValidationError(violations)
    w = BitWriter()
    w.write(0, 1)  # cancel flag
    w.write(params.film_grain_model_id, 2)
    w.write_flag(params.separate_colour_description_present_flag)
    w.write(params.blending_mode_id, 2)
    w.write(params.log2_scale_factor, 4)
    for model in params.component_models:
        w.write_flag(model is not None)
    for model in params.component_models:
        if model is None:
            continue
        w.write(len(model.intervals) - 1, 8)
        w.write(model.num_model_values - 1, 3)
        for iv in model.intervals:
            w.write(iv.lower_bound, 8)
            w.write(iv.upper_bound, 8)
            w.write_se(iv.scaling_factor)
            if model.num_model_values >= 2:
                w.write_se(iv.h_cutoff)
            if model.num_model_values >= 3:
                w.write_se(iv.v_cutoff)
    w.write_flag(params.persistence_flag)
    w.align()
    return w.getvalue()


def decode_sei(payload: bytes) -> FgcParams:
    r = BitReader(payload)
    if r.read(1) != 0:
        raise BitstreamError("cancel flag set, nothing to decode", 0)
    model_id = r.read(2)
    separate_colour = r.read_flag()
    blending = r.read(2)
    log2_scale = r.read(4)
    present = [r.read_flag() for _ in range(3)]
    models: list[IntervalModel | None] = []
    for c in range(3):
        if not present[c]:
            models.append(None)
            continue
        n_intervals = r.read(8) + 1
        n_values = r.read(3) + 1
        if n_values > 3:
            raise BitstreamError(f"num_model_values_minus1 = {n_values - 1} outside [0, 2]", r.bit_position - 3)
        intervals = []
        for _ in range(n_intervals):
            lower = r.read(8)
            upper = r.read(8)
            sf = r.read_se()
            if n_values >= 2:
                h = r.read_se()
            else:
                h = 8  # inferred when only the scaling factor is sent
            if n_values >= 3:
                v = r.read_se()
            else:
                v = h  # single signalled cutoff applies to both axes
            intervals.append(Interval(lower, upper, sf, h, v))
        models.append(IntervalModel(tuple(intervals), n_values))
    persistence = r.read_flag()
    r.check_trailing()
    params = FgcParams(
        film_grain_model_id=model_id,
        separate_colour_description_present_flag=separate_colour,
        blending_mode_id=blending,
        log2_scale_factor=log2_scale,
        component_models=tuple(models),
        persistence_flag=persistence,
    )
    violations = validate(params)
    if violations:
        raise BitstreamError("decoded parameters invalid: " + "; ".join(violations), r.bit_position)
    return params


# --- sidecar file: one record per frame ---
#   frame_index  u32 LE
#   payload_len  u16 LE
#   payload      bytes

def write_sidecar(records: list[tuple[int, bytes]], path) -> int:
    """Write (frame_index, payload) records; returns bytes written."""
    total = 0
    with open(path, "wb") as f:
        for frame_index, payload in records:
            if len(payload) > 0xFFFF:
                raise ValueError(f"frame {frame_index}: payload of {len(payload)} bytes too large")
            head = frame_index.to_bytes(4, "little") + len(payload).to_bytes(2, "little")
            f.write(head)
            f.write(payload)
            total += len(head) + len(payload)
    return total


def read_sidecar(path) -> list[tuple[int, bytes]]:
    records = []
    with open(path, "rb") as f:
        data = f.read()
    pos = 0
    while pos < len(data):
        if pos + 6 > len(data):
            raise ValueError(f"truncated sidecar record header at byte {pos}")
        frame_index = int.from_bytes(data[pos : pos + 4], "little")
        length = int.from_bytes(data[pos + 4 : pos + 6], "little")
        pos += 6
        if pos + length > len(data):
            raise ValueError(f"truncated sidecar payload for frame {frame_index} at byte {pos}")
        records.append((frame_index, data[pos : pos + length]))
        pos += length
    return records


def params_to_dict(params: FgcParams) -> dict:
    """JSON-friendly rendering used by the CLI inspector."""
    comps = {}
    for c, model in enumerate(params.component_models):
        if model is None:
            continue
        comps[COMPONENTS[c]] = {
            "num_model_values": model.num_model_values,
            "intervals": [
                {
                    "lower_bound": iv.lower_bound,
                    "upper_bound": iv.upper_bound,
                    "scaling_factor": iv.scaling_factor,
                    "h_cutoff": iv.h_cutoff,
                    "v_cutoff": iv.v_cutoff,
                }
                for iv in model.intervals
            ],
        }
    return {
        "film_grain_model_id": params.film_grain_model_id,
        "blending_mode_id": params.blending_mode_id,
        "log2_scale_factor": params.log2_scale_factor,
        "persistence_flag": params.persistence_flag,
        "components": comps,
    }
