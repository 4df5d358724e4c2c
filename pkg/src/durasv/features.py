"""Duration representations: per-phone feature rows, mean vectors, chunks.

A duration feature row is the sparse realization of an N-dimensional
vector with a single nonzero entry: the phone's frame count at its class
index. Sequences keep the (index, value) form and are densified only on
demand; at N in the hundreds the dense rows are almost entirely zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .alignment import AlignedUtterance, PhonemeInventory
from .errors import EmptyInputError


@dataclass(frozen=True)
class DurationFeatureSequence:
    """Sparse (class index, frame count) rows of a phone stream."""

    class_indices: np.ndarray  # (K,) int64
    lengths: np.ndarray  # (K,) float64, each >= 1
    n_classes: int

    def __len__(self) -> int:
        return int(self.class_indices.size)

    def to_dense(self) -> np.ndarray:
        """Materialize the K x N matrix with one nonzero per row."""
        dense = np.zeros((len(self), self.n_classes))
        dense[np.arange(len(self)), self.class_indices] = self.lengths
        return dense

    def slice(self, start: int, stop: int) -> "DurationFeatureSequence":
        return DurationFeatureSequence(
            self.class_indices[start:stop], self.lengths[start:stop], self.n_classes
        )


@dataclass(frozen=True)
class MeanDurationVector:
    """Per-class average durations with a coverage mask.

    Classes never observed hold the fill value: the mean frame count over
    all phone tokens in the input, so every component stays positive.
    """

    values: np.ndarray  # (N,) float64, all > 0 after fill
    present: np.ndarray  # (N,) bool


@dataclass(frozen=True)
class Chunk:
    """Training segment of one speaker's phone stream.

    ``shift`` is the number of phones dropped in front of the chunk and
    ``first_utt_len`` the full length of the utterance the drop started
    in, so instrumented checks can verify
    ``0 <= shift <= min(first_utt_len, len(chunk))``.
    """

    speaker_id: str
    rows: DurationFeatureSequence
    source_utterances: tuple[str, ...]
    shift: int
    first_utt_len: int

    def __len__(self) -> int:
        return len(self.rows)


def _concat_arrays(
    utterances: Sequence[AlignedUtterance],
) -> tuple[np.ndarray, np.ndarray]:
    idx = np.array(
        [p.class_index for u in utterances for p in u.phones], dtype=np.int64
    )
    lens = np.array(
        [p.length_frames for u in utterances for p in u.phones], dtype=np.float64
    )
    return idx, lens


def sequence_from_utterances(
    utterances: Sequence[AlignedUtterance], n_classes: int
) -> DurationFeatureSequence:
    """Concatenate utterances into one sparse duration feature sequence."""
    if not utterances:
        raise EmptyInputError("no utterances given")
    idx, lens = _concat_arrays(utterances)
    return DurationFeatureSequence(idx, lens, n_classes)


def raw_duration_sequence(
    utterances: Sequence[AlignedUtterance], inventory: PhonemeInventory
) -> DurationFeatureSequence:
    """Sparse duration feature rows for the given utterances, in order."""
    return sequence_from_utterances(utterances, inventory.size)


def mean_duration_vector(
    utterances: Sequence[AlignedUtterance], inventory: PhonemeInventory
) -> MeanDurationVector:
    """Average frame count per phoneme class, absent classes filled.

    The fill value is the token-level mean duration over all phones in
    the input (not the mean of per-class means).
    """
    if not utterances:
        raise EmptyInputError("no utterances given")
    idx, lens = _concat_arrays(utterances)
    n = inventory.size
    counts = np.bincount(idx, minlength=n).astype(np.float64)
    sums = np.bincount(idx, weights=lens, minlength=n)
    present = counts > 0
    fill = lens.sum() / lens.size
    values = np.full(n, fill)
    values[present] = sums[present] / counts[present]
    return MeanDurationVector(values, present)


def make_chunks(
    utterances: Sequence[AlignedUtterance],
    inventory: PhonemeInventory,
    rng: np.random.Generator,
    min_len: int = 32,
    max_len: int = 256,
) -> list[Chunk]:
    """Cut one speaker's utterances into randomly shifted chunks.

    The utterances are shuffled, concatenated into a phone stream, and
    consumed left to right. Per chunk a target length ``c`` is drawn
    uniformly from ``{min_len, ..., max_len}`` and a shift ``r`` uniformly
    from ``{0, ..., min(len(u1), c)}``, where ``u1`` is the utterance the
    stream currently points into; ``r`` phones are dropped, then up to
    ``c`` phones form the chunk. A tail shorter than ``min_len`` is
    dropped. Streams shorter than ``min_len`` yield a single whole-stream
    chunk so tiny speakers still contribute.
    """
    if not utterances:
        raise EmptyInputError("no utterances given")
    speakers = {u.speaker_id for u in utterances}
    if len(speakers) != 1:
        raise ValueError(f"chunking mixes speakers: {sorted(speakers)}")
    speaker_id = utterances[0].speaker_id

    order = rng.permutation(len(utterances))
    shuffled = [utterances[i] for i in order]
    idx, lens = _concat_arrays(shuffled)
    total = idx.size

    # utterance start offsets in the concatenated stream
    utt_lengths = np.array([len(u) for u in shuffled])
    starts = np.concatenate([[0], np.cumsum(utt_lengths)[:-1]])
    utt_ids = [u.utterance_id for u in shuffled]

    def utt_at(pos: int) -> int:
        return int(np.searchsorted(starts, pos, side="right") - 1)

    def cut(start: int, stop: int, shift: int, first_len: int) -> Chunk:
        sources = tuple(utt_ids[utt_at(start) : utt_at(stop - 1) + 1])
        rows = DurationFeatureSequence(
            idx[start:stop].copy(), lens[start:stop].copy(), inventory.size
        )
        return Chunk(speaker_id, rows, sources, shift, first_len)

    if total < min_len:
        return [cut(0, total, 0, int(utt_lengths[0]))]

    chunks: list[Chunk] = []
    pos = 0
    while total - pos >= min_len:
        c = int(rng.integers(min_len, max_len + 1))
        first_len = int(utt_lengths[utt_at(pos)])
        r = int(rng.integers(0, min(first_len, c) + 1))
        pos += r
        take = min(c, total - pos)
        if take < min_len:
            break
        chunks.append(cut(pos, pos + take, r, first_len))
        pos += take
    if not chunks:
        # the shift starved a short stream; emit one unshifted chunk so
        # the speaker still contributes
        return [cut(0, min(total, max_len), 0, int(utt_lengths[0]))]
    return chunks


def dump_chunks(
    chunks: Sequence[Chunk], inventory: PhonemeInventory, sink: IO[str]
) -> None:
    """Debug dump in the alignment text format, one header line per chunk."""
    for i, chunk in enumerate(chunks):
        sink.write(
            f"# chunk {i} speaker={chunk.speaker_id} len={len(chunk)} "
            f"shift={chunk.shift} first_utt_len={chunk.first_utt_len} "
            f"sources={','.join(chunk.source_utterances)}\n"
        )
        for class_index, length in zip(chunk.rows.class_indices, chunk.rows.lengths):
            label = inventory.symbols[int(class_index)]
            sink.write(f"{chunk.speaker_id} chunk{i} {label} {int(length)}\n")
