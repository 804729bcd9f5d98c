"""Trained-model bundle: variant handling, prediction, binary serialization,
and the variant-level training pipeline built on the nets and the trainer.

Binary layout (versioned, little-endian):

    magic b"TPCM" | u16 version | u32 header_len | header JSON | param data

The header lists every parameter as (name, shape) in data order; the data
section is the concatenation of the float64 C-order arrays. Fused bundles
prefix branch parameter names with b0. / b1. and add a "fusion" matrix.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from ..ensemble import fit_fusion_grid, fuse_grid
from ..errors import ModelFormatError, ModelVersionError, ParameterError, ShapeError
from ..features import RETRO_LEN, FeatureBuilder, feature_dim
from ..preprocess import Normalizer, WindowedDataset, fit_normalizer
from .layers import DEFAULT_MLP_HIDDEN, MLPNet
from .lstm import DEFAULT_UNITS, LSTMNet
from .mixer import DEFAULT_BLOCKS, DEFAULT_CHANNEL_HIDDEN, DEFAULT_TOKEN_HIDDEN, MixerNet
from .training import TrainConfig, train

MAGIC = b"TPCM"
FORMAT_VERSION = 1

REGRESSORS = ("MLP", "LSTM", "MIXER")

VARIANTS = (
    "MLP",
    "LSTM",
    "MIXER",
    "FFT-MLP",
    "FFT-LSTM",
    "FFT-MIXER",
    "RP-MLP",
    "RP-LSTM",
    "RP-MIXER",
    "FFT-RP-MLP",
    "FFT-RP-LSTM",
    "FFT-RP-MIXER",
    "LR-FFT-RP-MLP",
    "LR-FFT-RP-LSTM",
    "LR-FFT-RP-MIXER",
)

_FEATURE_PREFIX = {"": "RAW", "FFT": "FFT", "RP": "RP", "FFT-RP": "FFT+RP"}


def parse_variant(tag: str):
    """Split a variant tag into (fused, feature_set, regressor).

    Fused tags return feature_set None; their branches are the FFT- and RP-
    single variants of the same regressor.
    """
    if tag not in VARIANTS:
        raise ParameterError(f"unknown variant {tag!r}, expected one of {VARIANTS}")
    parts = tag.split("-")
    regressor = parts[-1]
    if parts[0] == "LR":
        return True, None, regressor
    prefix = "-".join(parts[:-1])
    return False, _FEATURE_PREFIX[prefix], regressor


def branch_variants(tag: str) -> tuple[str, str]:
    fused, _, regressor = parse_variant(tag)
    if not fused:
        raise ParameterError(f"{tag} is not a fused variant")
    return f"FFT-{regressor}", f"RP-{regressor}"


def build_net(regressor: str, lookback: int, n_features: int, horizons: int, arch: dict | None = None):
    arch = dict(arch or {})
    if regressor == "MLP":
        return MLPNet(
            input_dim=8 * lookback + n_features,
            hidden=tuple(arch.get("hidden", DEFAULT_MLP_HIDDEN)),
            out_dim=horizons,
        )
    if regressor == "LSTM":
        return LSTMNet(
            lookback=lookback,
            n_features=n_features,
            units=int(arch.get("units", DEFAULT_UNITS)),
            out_dim=horizons,
            cell_activation=arch.get("cell_activation", "tanh"),
        )
    if regressor == "MIXER":
        return MixerNet(
            lookback=lookback,
            n_features=n_features,
            blocks=int(arch.get("blocks", DEFAULT_BLOCKS)),
            token_hidden=int(arch.get("token_hidden", DEFAULT_TOKEN_HIDDEN)),
            channel_hidden=int(arch.get("channel_hidden", DEFAULT_CHANNEL_HIDDEN)),
            out_dim=horizons,
        )
    raise ParameterError(f"unknown regressor {regressor!r}, expected one of {REGRESSORS}")


def net_from_spec(spec: dict):
    kind = spec.get("kind")
    if kind == "mlp":
        return MLPNet(input_dim=spec["input_dim"], hidden=tuple(spec["hidden"]), out_dim=spec["out_dim"])
    if kind == "lstm":
        return LSTMNet(
            lookback=spec["lookback"],
            n_features=spec["n_features"],
            units=spec["units"],
            out_dim=spec["out_dim"],
            cell_activation=spec["cell_activation"],
            n_channels=spec["n_channels"],
        )
    if kind == "mixer":
        return MixerNet(
            lookback=spec["lookback"],
            n_features=spec["n_features"],
            blocks=spec["blocks"],
            token_hidden=spec["token_hidden"],
            channel_hidden=spec["channel_hidden"],
            out_dim=spec["out_dim"],
            n_channels=spec["n_channels"],
        )
    raise ModelFormatError(f"unknown net kind {kind!r} in model header")


@dataclass
class TrainedModel:
    """Everything needed to reproduce a variant's predictions."""

    variant: str
    lookback: int
    horizons: int
    retro_len: int
    feature_set: str | None
    arch: dict | None
    params: dict | None
    input_norm: Normalizer
    zscore_norm: Normalizer
    target_lo: float
    target_hi: float
    train_config: TrainConfig
    best_epoch: int
    smoothing: bool = True
    fusion: np.ndarray | None = None
    branches: tuple | None = None

    @property
    def fused(self) -> bool:
        return self.branches is not None


def predict(model: TrainedModel, ds: WindowedDataset) -> np.ndarray:
    """(horizons, n) forecast matrix in m/s, clamped at 0 from below."""
    if ds.lookback != model.lookback:
        raise ShapeError(f"dataset lookback {ds.lookback} != model lookback {model.lookback}")
    if ds.horizons != model.horizons:
        raise ShapeError(f"dataset horizons {ds.horizons} != model horizons {model.horizons}")
    if ds.retro_len != model.retro_len:
        raise ShapeError(f"dataset retro width {ds.retro_len} != model retro width {model.retro_len}")
    if model.fused:
        p_fft = predict(model.branches[0], ds)
        p_rp = predict(model.branches[1], ds)
        return fuse_grid(model.fusion, p_fft, p_rp)
    builder = FeatureBuilder(model.input_norm, model.zscore_norm, model.smoothing)
    X = builder.assemble(ds, model.feature_set)
    net = net_from_spec(model.arch)
    Y = net.forward(model.params, X)
    ms = model.target_lo + Y * (model.target_hi - model.target_lo)
    return np.maximum(0.0, ms).T


def scale_targets(model: TrainedModel, y_ms: np.ndarray) -> np.ndarray:
    return (np.asarray(y_ms, dtype=np.float64) - model.target_lo) / (model.target_hi - model.target_lo)


def _training_rows(ds: WindowedDataset) -> np.ndarray:
    """Union of all rows covered by the dataset's windows (origins are consecutive)."""
    if len(ds) == 1:
        return ds.retro[0]
    return np.vstack([ds.retro[0], ds.retro[1:, -1, :]])


def train_single(
    variant: str,
    train_ds: WindowedDataset,
    val_ds: WindowedDataset,
    cfg: TrainConfig,
    arch: dict | None = None,
    smoothing: bool = True,
) -> TrainedModel:
    """Fit normalizers on the training rows, assemble features, train, bundle."""
    fused, feature_set, regressor = parse_variant(variant)
    if fused:
        raise ParameterError(f"{variant} is a fused variant, train its branches instead")
    rows = _training_rows(train_ds)
    input_norm = fit_normalizer(rows, "minmax")
    zscore_norm = fit_normalizer(rows, "zscore")
    lo = float(train_ds.targets.min())
    hi = float(train_ds.targets.max())
    if hi <= lo:
        raise ParameterError("training targets are constant, cannot scale")

    builder = FeatureBuilder(input_norm, zscore_norm, smoothing)
    X_tr = builder.assemble(train_ds, feature_set)
    X_val = builder.assemble(val_ds, feature_set)
    Y_tr = (train_ds.targets - lo) / (hi - lo)
    Y_val = (val_ds.targets - lo) / (hi - lo)

    n_features = feature_dim(train_ds.lookback, feature_set) - 8 * train_ds.lookback
    net = build_net(regressor, train_ds.lookback, n_features, train_ds.horizons, arch)
    result = train(net, X_tr, Y_tr, X_val, Y_val, cfg)
    return TrainedModel(
        variant=variant,
        lookback=train_ds.lookback,
        horizons=train_ds.horizons,
        retro_len=train_ds.retro_len,
        feature_set=feature_set,
        arch=net.spec(),
        params=result.params,
        input_norm=input_norm,
        zscore_norm=zscore_norm,
        target_lo=lo,
        target_hi=hi,
        train_config=cfg,
        best_epoch=result.best_epoch,
        smoothing=smoothing,
    )


def fuse_branches(
    variant: str,
    fft_model: TrainedModel,
    rp_model: TrainedModel,
    val_ds: WindowedDataset,
) -> TrainedModel:
    """Fit per-horizon fusion on the validation block the branches never optimized."""
    fused, _, regressor = parse_variant(variant)
    if not fused:
        raise ParameterError(f"{variant} is not a fused variant")
    want_fft, want_rp = branch_variants(variant)
    if fft_model.variant != want_fft or rp_model.variant != want_rp:
        raise ParameterError(
            f"{variant} fuses {want_fft} and {want_rp}, "
            f"got {fft_model.variant} and {rp_model.variant}"
        )
    if fft_model.lookback != rp_model.lookback:
        raise ShapeError("branch lookbacks differ")
    p_fft = predict(fft_model, val_ds)
    p_rp = predict(rp_model, val_ds)
    fusion = fit_fusion_grid(p_fft, p_rp, val_ds.targets)
    return TrainedModel(
        variant=variant,
        lookback=fft_model.lookback,
        horizons=fft_model.horizons,
        retro_len=fft_model.retro_len,
        feature_set=None,
        arch=None,
        params=None,
        input_norm=fft_model.input_norm,
        zscore_norm=fft_model.zscore_norm,
        target_lo=fft_model.target_lo,
        target_hi=fft_model.target_hi,
        train_config=fft_model.train_config,
        best_epoch=0,
        smoothing=fft_model.smoothing,
        fusion=fusion,
        branches=(fft_model, rp_model),
    )


def _norm_to_json(norm: Normalizer) -> dict:
    return {
        "kind": norm.kind,
        "p0": norm.p0.tolist(),
        "p1": norm.p1.tolist(),
        "flagged": [int(f) for f in norm.flagged],
    }


def _norm_from_json(d: dict) -> Normalizer:
    return Normalizer(
        kind=d["kind"],
        p0=np.array(d["p0"], dtype=np.float64),
        p1=np.array(d["p1"], dtype=np.float64),
        flagged=np.array(d["flagged"], dtype=bool),
    )


def _collect_params(model: TrainedModel) -> list[tuple[str, np.ndarray]]:
    if model.fused:
        out = [("fusion", model.fusion)]
        for i, branch in enumerate(model.branches):
            out.extend((f"b{i}.{name}", arr) for name, arr in branch.params.items())
        return out
    return list(model.params.items())


def _header(model: TrainedModel) -> dict:
    h = {
        "variant": model.variant,
        "lookback": model.lookback,
        "horizons": model.horizons,
        "retro_len": model.retro_len,
        "smoothing": model.smoothing,
        "feature_set": model.feature_set,
        "arch": model.arch,
        "normalizers": {
            "input": _norm_to_json(model.input_norm),
            "zscore": _norm_to_json(model.zscore_norm),
        },
        "target": [model.target_lo, model.target_hi],
        "train_config": asdict(model.train_config),
        "best_epoch": model.best_epoch,
        "params": [[name, list(arr.shape)] for name, arr in _collect_params(model)],
    }
    if model.fused:
        h["branches"] = [
            {
                "variant": b.variant,
                "feature_set": b.feature_set,
                "arch": b.arch,
                "train_config": asdict(b.train_config),
                "best_epoch": b.best_epoch,
            }
            for b in model.branches
        ]
    return h


def save(model: TrainedModel) -> bytes:
    header = json.dumps(_header(model), sort_keys=True).encode("utf-8")
    blobs = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in _collect_params(model)
    )
    return MAGIC + struct.pack("<HI", FORMAT_VERSION, len(header)) + header + blobs


def load(data: bytes) -> TrainedModel:
    if len(data) < 10:
        raise ModelFormatError(f"model blob too short ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise ModelFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<HI", data[4:10])
    if version != FORMAT_VERSION:
        raise ModelVersionError(version, FORMAT_VERSION)
    if len(data) < 10 + header_len:
        raise ModelFormatError("model blob truncated inside header")
    try:
        header = json.loads(data[10 : 10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ModelFormatError(f"unreadable model header: {err}") from None

    offset = 10 + header_len
    arrays = {}
    for name, shape in header["params"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(data) < offset + nbytes:
            raise ModelFormatError(f"model blob truncated in parameter {name!r}")
        arrays[name] = (
            np.frombuffer(data[offset : offset + nbytes], dtype="<f8")
            .astype(np.float64)
            .reshape(shape)
            .copy()
        )
        offset += nbytes
    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes after parameters")

    input_norm = _norm_from_json(header["normalizers"]["input"])
    zscore_norm = _norm_from_json(header["normalizers"]["zscore"])
    lo, hi = header["target"]
    cfg = TrainConfig(**header["train_config"])
    common = dict(
        lookback=header["lookback"],
        horizons=header["horizons"],
        retro_len=header["retro_len"],
        input_norm=input_norm,
        zscore_norm=zscore_norm,
        target_lo=lo,
        target_hi=hi,
        smoothing=header["smoothing"],
    )
    if "branches" in header:
        branches = []
        for i, bh in enumerate(header["branches"]):
            prefix = f"b{i}."
            branches.append(
                TrainedModel(
                    variant=bh["variant"],
                    feature_set=bh["feature_set"],
                    arch=bh["arch"],
                    params={
                        name[len(prefix) :]: arr
                        for name, arr in arrays.items()
                        if name.startswith(prefix)
                    },
                    train_config=TrainConfig(**bh["train_config"]),
                    best_epoch=bh["best_epoch"],
                    **common,
                )
            )
        return TrainedModel(
            variant=header["variant"],
            feature_set=None,
            arch=None,
            params=None,
            train_config=cfg,
            best_epoch=header["best_epoch"],
            fusion=arrays["fusion"],
            branches=tuple(branches),
            **common,
        )
    return TrainedModel(
        variant=header["variant"],
        feature_set=header["feature_set"],
        arch=header["arch"],
        params=arrays,
        train_config=cfg,
        best_epoch=header["best_epoch"],
        **common,
    )
