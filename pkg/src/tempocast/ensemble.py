"""Per-horizon least-squares fusion of the two branch forecasts."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError, ValidationError


def fit_fusion(p_fft: np.ndarray, p_rp: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Minimum-norm least-squares fit of y ~ w_fft*p_fft + w_rp*p_rp + intercept.

    The pseudoinverse solution keeps collinear branches well defined.
    """
    p_fft = np.asarray(p_fft, dtype=np.float64).ravel()
    p_rp = np.asarray(p_rp, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if not (len(p_fft) == len(p_rp) == len(y)):
        raise ShapeError(
            f"branch/target lengths differ: {len(p_fft)}, {len(p_rp)}, {len(y)}"
        )
    if len(y) < 3:
        raise ParameterError(f"need at least 3 samples to fit fusion, got {len(y)}")
    design = np.column_stack([p_fft, p_rp, np.ones(len(y))])
    if not (np.isfinite(design).all() and np.isfinite(y).all()):
        raise ValidationError("non-finite values in fusion inputs")
    w, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(w[0]), float(w[1]), float(w[2])


def fit_fusion_grid(p_fft: np.ndarray, p_rp: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fit each horizon independently; branch predictions are (H, n), targets (n, H).
    Returns an (H, 3) weight matrix of (w_fft, w_rp, intercept) rows."""
    p_fft = np.asarray(p_fft, dtype=np.float64)
    p_rp = np.asarray(p_rp, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p_fft.shape != p_rp.shape or y.shape != (p_fft.shape[1], p_fft.shape[0]):
        raise ShapeError(
            f"fusion grid shapes inconsistent: {p_fft.shape}, {p_rp.shape}, {y.shape}"
        )
    return np.array(
        [fit_fusion(p_fft[h], p_rp[h], y[:, h]) for h in range(p_fft.shape[0])]
    )


def fuse(weights, p_fft: np.ndarray, p_rp: np.ndarray) -> np.ndarray:
    """Apply (w_fft, w_rp, intercept); forecasts are clamped at 0 m/s."""
    p_fft = np.asarray(p_fft, dtype=np.float64)
    p_rp = np.asarray(p_rp, dtype=np.float64)
    if p_fft.shape != p_rp.shape:
        raise ShapeError(f"branch shapes differ: {p_fft.shape} vs {p_rp.shape}")
    w_fft, w_rp, intercept = weights
    return np.maximum(0.0, w_fft * p_fft + w_rp * p_rp + intercept)


def fuse_grid(weights: np.ndarray, p_fft: np.ndarray, p_rp: np.ndarray) -> np.ndarray:
    """Per-horizon fuse over (H, n) branch predictions."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (p_fft.shape[0], 3):
        raise ShapeError(f"expected ({p_fft.shape[0]}, 3) weights, got {weights.shape}")
    return np.stack(
        [fuse(weights[h], p_fft[h], p_rp[h]) for h in range(p_fft.shape[0])]
    )
