"""Temporal descriptors: multi-scale rank pooling (local dynamics), spectral
magnitude/phase of the dominant frequency (global dynamics), and assembly of
flat model input vectors."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError, ShapeError, ValidationError
from .preprocess import Normalizer, WindowedDataset

RETRO_LEN = 24
N_CHANNELS = 8
RANK_POOL_SCALES = (4, 8, 12, 16, 24)
RP_DIM = N_CHANNELS * len(RANK_POOL_SCALES)  # 40
SPECTRAL_DIM = N_CHANNELS * 2  # 16

FEATURE_SETS = ("RAW", "FFT", "RP", "FFT+RP")


def _batch_slopes(windows: np.ndarray, smoothing: bool) -> np.ndarray:
    """Per-column OLS slope against the time index for a (n, T, D) stack."""
    n, T, d = windows.shape
    if smoothing:
        windows = np.cumsum(windows, axis=1) / np.arange(1.0, T + 1)[None, :, None]
    t = np.arange(1.0, T + 1)
    tc = t - t.mean()
    # centered time index sums to zero, so the value-mean term drops out
    return np.einsum("t,ntd->nd", tc, windows) / (tc * tc).sum()


def rank_pool(window: np.ndarray, smoothing: bool = True) -> np.ndarray:
    """Fixed-length descriptor of a window's temporal evolution.

    With smoothing (default) each row is first replaced by the cumulative
    mean of all rows up to it; the descriptor is then the per-column
    least-squares slope of value against time index 1..T.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"expected a (T, D) window, got shape {w.shape}")
    if w.shape[0] < 2:
        raise ParameterError("rank pooling needs at least 2 rows")
    if not np.isfinite(w).all():
        raise ValidationError("non-finite values in rank-pool window")
    return _batch_slopes(w[None], smoothing)[0]


def multi_scale_rank_pool(retro: np.ndarray, smoothing: bool = True) -> np.ndarray:
    """Concatenated rank-pool descriptors over the window's trailing
    4/8/12/16/24 rows, channels contiguous within each scale (40 values)."""
    r = np.asarray(retro, dtype=np.float64)
    if r.shape != (RETRO_LEN, N_CHANNELS):
        raise ShapeError(f"expected ({RETRO_LEN}, {N_CHANNELS}) retro window, got {r.shape}")
    return multi_scale_rank_pool_batch(r[None], smoothing)[0]


def multi_scale_rank_pool_batch(retros: np.ndarray, smoothing: bool = True) -> np.ndarray:
    r = np.asarray(retros, dtype=np.float64)
    if r.ndim != 3 or r.shape[1:] != (RETRO_LEN, N_CHANNELS):
        raise ShapeError(
            f"expected (n, {RETRO_LEN}, {N_CHANNELS}) retro stack, got {r.shape}"
        )
    if not np.isfinite(r).all():
        raise ValidationError("non-finite values in rank-pool windows")
    parts = [_batch_slopes(r[:, RETRO_LEN - s :, :], smoothing) for s in RANK_POOL_SCALES]
    return np.concatenate(parts, axis=1)


@lru_cache(maxsize=16)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    n = len(x)
    if n == 1:
        return x.copy()
    even = _fft_pow2(x[0::2])
    odd = _fft_pow2(x[1::2])
    tw = np.exp(-2j * np.pi * np.arange(n // 2) / n) * odd
    return np.concatenate([even + tw, even - tw])


def fft(x: np.ndarray) -> np.ndarray:
    """Discrete Fourier transform X[k] = sum_t x[t] exp(-2*pi*i*k*t/N).

    Radix-2 fast path when N is a power of two, direct transform otherwise.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or len(x) < 1:
        raise ShapeError("fft expects a non-empty 1-D vector")
    if not np.isfinite(x).all():
        raise ValidationError("non-finite values in fft input")
    n = len(x)
    if n & (n - 1) == 0:
        return _fft_pow2(x)
    return _dft_matrix(n) @ x


def ifft(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    return np.conj(fft(np.conj(x))) / len(x)


def spectral_features(retro: np.ndarray) -> np.ndarray:
    """Per channel, (magnitude, phase) of the dominant non-DC frequency of the
    24-point signal: one-sided bins k = 1..12, ties broken by the lowest k.

    Layout is channel-major pairs: [m0, p0, m1, p1, ...]. Bins whose
    magnitude is below numerical noise count as empty (magnitude 0, phase 0).
    """
    r = np.asarray(retro, dtype=np.float64)
    if r.shape != (RETRO_LEN, N_CHANNELS):
        raise ShapeError(f"expected ({RETRO_LEN}, {N_CHANNELS}) retro window, got {r.shape}")
    return spectral_features_batch(r[None])[0]


def spectral_features_batch(retros: np.ndarray) -> np.ndarray:
    r = np.asarray(retros, dtype=np.float64)
    if r.ndim != 3 or r.shape[1:] != (RETRO_LEN, N_CHANNELS):
        raise ShapeError(
            f"expected (n, {RETRO_LEN}, {N_CHANNELS}) retro stack, got {r.shape}"
        )
    if not np.isfinite(r).all():
        raise ValidationError("non-finite values in spectral input")
    n = RETRO_LEN
    # (n_samples, channels, time) @ (time, freq) -> one matrix product per stack
    spec = r.transpose(0, 2, 1) @ _dft_matrix(n).T
    half = spec[:, :, 1 : n // 2 + 1]
    mags = np.abs(half)
    # suppress float noise so an exactly-flat channel reads as empty
    tol = n * np.finfo(np.float64).eps * np.maximum(1.0, np.abs(r).max(axis=1))
    mags[mags <= tol[:, :, None]] = 0.0
    best = np.argmax(mags, axis=2)  # first max, so ties pick the lowest k
    idx = np.ogrid[: mags.shape[0], : mags.shape[1]]
    mag = mags[idx[0], idx[1], best]
    phase = np.angle(half[idx[0], idx[1], best])
    phase = np.where(mag == 0.0, 0.0, phase)
    out = np.empty((len(r), SPECTRAL_DIM))
    out[:, 0::2] = mag
    out[:, 1::2] = phase
    return out


@dataclass(frozen=True)
class FeatureBuilder:
    """Turns raw windowed samples into flat model inputs.

    The input window is min-max scaled and flattened; the spectral branch
    sees the min-max scaled retro window, the rank-pool branch the z-scored
    retro window. Both normalizers must have been fitted on training rows.
    Spectral descriptor columns are rescaled to match the [0, 1] raw-input
    range: magnitudes by 2/N (amplitude units), phases by 1/pi.
    """

    input_norm: Normalizer  # minmax over the 8 channels
    zscore_norm: Normalizer  # zscore over the 8 channels
    smoothing: bool = True

    def _norm_stack(self, norm: Normalizer, stack: np.ndarray) -> np.ndarray:
        n, t, d = stack.shape
        return norm.apply(stack.reshape(n * t, d)).reshape(n, t, d)

    def components(self, ds: WindowedDataset, feature_set: str) -> dict[str, np.ndarray]:
        if feature_set not in FEATURE_SETS:
            raise ParameterError(f"unknown feature set {feature_set!r}, expected {FEATURE_SETS}")
        need_features = feature_set != "RAW"
        if need_features and ds.retro_len != RETRO_LEN:
            raise ShapeError(
                f"feature extraction needs a {RETRO_LEN}-row retro window, got {ds.retro_len}"
            )
        raw = self._norm_stack(self.input_norm, ds.inputs)
        parts = {"raw": raw.reshape(len(ds), -1)}
        if "FFT" in feature_set:
            fft_feats = spectral_features_batch(self._norm_stack(self.input_norm, ds.retro))
            fft_feats[:, 0::2] *= 2.0 / RETRO_LEN
            fft_feats[:, 1::2] *= 1.0 / np.pi
            parts["fft"] = fft_feats
        if "RP" in feature_set:
            parts["rp"] = multi_scale_rank_pool_batch(
                self._norm_stack(self.zscore_norm, ds.retro), self.smoothing
            )
        return parts

    def assemble(self, ds: WindowedDataset, feature_set: str) -> np.ndarray:
        """Flat (n, 8L [+16][+40]) input matrix, ordered raw | fft | rp."""
        parts = self.components(ds, feature_set)
        order = [parts["raw"]]
        if "fft" in parts:
            order.append(parts["fft"])
        if "rp" in parts:
            order.append(parts["rp"])
        return np.concatenate(order, axis=1)


def feature_dim(lookback: int, feature_set: str) -> int:
    if feature_set not in FEATURE_SETS:
        raise ParameterError(f"unknown feature set {feature_set!r}, expected {FEATURE_SETS}")
    return (
        N_CHANNELS * lookback
        + (SPECTRAL_DIM if "FFT" in feature_set else 0)
        + (RP_DIM if "RP" in feature_set else 0)
    )


def assemble_inputs(sample, feature_set: str, builder: FeatureBuilder) -> np.ndarray:
    """Single-sample convenience wrapper over FeatureBuilder.assemble."""
    ds = WindowedDataset(
        lookback=sample.input_window.shape[0],
        horizons=len(sample.target),
        retro=sample.retro_window[None],
        targets=sample.target[None],
        origin_times=np.array([sample.origin_time]),
    )
    return builder.assemble(ds, feature_set)[0]
