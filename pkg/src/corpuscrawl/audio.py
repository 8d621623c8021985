"""Audio normalization to the corpus storage format: mono, 24 kHz, 16-bit PCM."""
from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyAudioError, ValidationError
from .models import RawMedia

TARGET_RATE = 24_000


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray  # int16, mono
    sample_rate: int = TARGET_RATE

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def resampled_length(in_len: int, in_rate: int, out_rate: int = TARGET_RATE) -> int:
    """round(in_len * out_rate / in_rate), halves rounded up, in exact integer arithmetic."""
    return (2 * in_len * out_rate + in_rate) // (2 * in_rate)


def _to_float(samples: np.ndarray) -> np.ndarray:
    if samples.dtype == np.int16:
        return samples.astype(np.float64) / 32768.0
    if np.issubdtype(samples.dtype, np.integer):
        raise ValidationError(f"unsupported integer sample type {samples.dtype}")
    return samples.astype(np.float64)


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x * 32768.0), -32768, 32767).astype(np.int16)


def normalize_audio(media: RawMedia) -> AudioBuffer:
    """Downmix by channel mean and linearly resample to 24 kHz 16-bit mono.

    Float input is taken to be in [-1, 1]; int16 input is scaled by 1/32768,
    so mono 24 kHz int16 passes through unchanged.
    """
    samples = np.asarray(media.samples)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.shape[1] < 1:
        raise ValidationError(f"expected (frames, channels) samples, got shape {samples.shape}")
    if samples.shape[0] == 0:
        raise EmptyAudioError("media has no samples")
    in_rate = int(media.sample_rate)
    if in_rate <= 0:
        raise ValidationError(f"bad sample rate {media.sample_rate}")

    if samples.dtype == np.int16 and samples.shape[1] == 1 and in_rate == TARGET_RATE:
        return AudioBuffer(samples[:, 0].copy())

    mono = _to_float(samples).mean(axis=1)
    in_len = len(mono)
    out_len = resampled_length(in_len, in_rate)
    if in_rate == TARGET_RATE:
        out = mono
    else:
        # output sample j sits at input position j * in_rate / 24000
        positions = np.arange(out_len, dtype=np.float64) * (in_rate / TARGET_RATE)
        out = np.interp(positions, np.arange(in_len, dtype=np.float64), mono)
    return AudioBuffer(_quantize(out))


def wav_bytes(buf: AudioBuffer) -> bytes:
    out = io.BytesIO()
    with wave.open(out, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(buf.sample_rate)
        wf.writeframes(buf.samples.astype("<i2").tobytes())
    return out.getvalue()


def write_wav(path, buf: AudioBuffer) -> None:
    Path(path).write_bytes(wav_bytes(buf))


def read_wav(path) -> RawMedia:
    with wave.open(str(path), "rb") as wf:
        if wf.getsampwidth() != 2:
            raise ValidationError(f"{path}: only 16-bit PCM is supported")
        channels = wf.getnchannels()
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    data = np.frombuffer(raw, dtype="<i2").astype(np.int16).reshape(-1, channels)
    return RawMedia(data, rate)
