"""Sub-TDL fine-code encoder: decimate, TM2OH, OH2BIN, sum.

Sub-line ``j`` keeps taps ``j, j+S, j+2S, ...``. Elongating the tap spacing by
S makes each sub-line a clean thermometer code as long as bubbles stay shorter
than S taps, and the sum of sub-line counts reconstructs the full-line code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EncodingFault(ValueError):
    """A sub-line word is not a valid thermometer / one-hot code."""


@dataclass(frozen=True)
class SubTdlLayout:
    tap_count: int
    decimation: int = 8
    wu_mode: bool = False

    def __post_init__(self):
        if self.tap_count < 1:
            raise ValueError("tap_count must be >= 1")
        if not 1 <= self.decimation <= self.tap_count:
            raise ValueError("decimation must lie in [1, tap_count]")

    def sub_lengths(self) -> list[int]:
        # ragged tails: the first tap_count % S sub-lines are one tap longer
        return [len(range(j, self.tap_count, self.decimation)) for j in range(self.decimation)]


@dataclass(frozen=True)
class FineCode:
    value: int
    rising_part: int | None = None
    falling_part: int | None = None


def _bits(word) -> np.ndarray:
    bits = getattr(word, "bits", word)
    return np.asarray(bits, dtype=bool)


def decompose(word, layout: SubTdlLayout) -> list[np.ndarray]:
    bits = _bits(word)
    if bits.shape[-1] != layout.tap_count:
        raise ValueError(f"word has {bits.shape[-1]} taps, layout expects {layout.tap_count}")
    return [bits[..., j::layout.decimation] for j in range(layout.decimation)]


def tm2oh_array(sub: np.ndarray) -> np.ndarray:
    """Thermometer -> one-hot along the last axis, without validation.

    Output has length L+1; index k marks "k ones then zeros", so index 0 is the
    reserved marker of an all-zero sub-word. A non-thermometer input yields
    more than one set bit.
    """
    sub = np.asarray(sub, dtype=bool)
    lead = np.ones(sub.shape[:-1] + (1,), dtype=bool)
    tail = np.zeros(sub.shape[:-1] + (1,), dtype=bool)
    padded = np.concatenate([lead, sub, tail], axis=-1)
    return padded[..., :-1] & ~padded[..., 1:]


def tm2oh(sub_word) -> np.ndarray:
    oh = tm2oh_array(_bits(sub_word))
    if oh.sum() != 1:
        raise EncodingFault(f"not a thermometer code: {_bits(sub_word).astype(int).tolist()}")
    return oh


def oh2bin(one_hot) -> int:
    oh = np.asarray(one_hot, dtype=bool)
    idx = np.flatnonzero(oh)
    if len(idx) != 1:
        raise EncodingFault(f"one-hot word has {len(idx)} bits set")
    return int(idx[0])


def _sum_subwords(subs: list[np.ndarray]):
    """Per-row sum of OH2BIN(TM2OH(sub)) plus a fault mask."""
    total = 0
    fault = False
    for sub in subs:
        oh = tm2oh_array(sub)
        fault = fault | (oh.sum(axis=-1) != 1)
        total = total + np.argmax(oh, axis=-1)
    return total, fault


def _leading_ones(sub: np.ndarray) -> np.ndarray:
    return np.cumprod(sub, axis=-1, dtype=np.int8).sum(axis=-1, dtype=np.int64)


def _wu_split(sub: np.ndarray):
    """Split a high/low/high sub-word into rising and falling thermometers."""
    length = sub.shape[-1]
    lead = _leading_ones(sub)
    trail = _leading_ones(sub[..., ::-1])
    idx = np.arange(length)
    rising = sub & (idx < (length - trail)[..., None])
    falling = ~sub | (idx < lead[..., None])
    # an all-high sub-word hides the pulse: edge positions are ambiguous
    ambiguous = trail == length
    return rising, falling, ambiguous


def encode_batch(words: np.ndarray, layout: SubTdlLayout):
    """Encode a (shots, taps) bool array.

    Returns ``(value, rising_part, falling_part, fault)``; the part arrays are
    None outside wu_mode. Faulty rows carry meaningless values.
    """
    subs = decompose(np.asarray(words, dtype=bool), layout)
    if not layout.wu_mode:
        value, fault = _sum_subwords(subs)
        return np.asarray(value), None, None, np.asarray(fault)
    r_subs, f_subs = [], []
    fault = False
    for sub in subs:
        r, f, amb = _wu_split(sub)
        r_subs.append(r)
        f_subs.append(f)
        fault = fault | amb
    r_val, r_fault = _sum_subwords(r_subs)
    f_val, f_fault = _sum_subwords(f_subs)
    fault = np.asarray(fault | r_fault | f_fault)
    return np.asarray(r_val + f_val), np.asarray(r_val), np.asarray(f_val), fault


def encode(word, layout: SubTdlLayout) -> FineCode:
    """Encode one captured word; raises EncodingFault on a bad sub-line."""
    bits = _bits(word)
    if bits.ndim != 1:
        raise ValueError("encode takes a single word; use encode_batch")
    value, rise, fall, fault = encode_batch(bits[None, :], layout)
    if fault[0]:
        raise EncodingFault(f"word {''.join(str(int(b)) for b in bits)} does not decode")
    if layout.wu_mode:
        return FineCode(int(value[0]), int(rise[0]), int(fall[0]))
    return FineCode(int(value[0]))
