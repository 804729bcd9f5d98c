"""Selects the LSTM sequence kernels at import: the compiled extension when
present, the numpy implementation otherwise. TEMPOCAST_FORCE_NUMPY=1 forces
the fallback (used by the backend-parity tests and the benchmark)."""

from __future__ import annotations

import os

from . import _lstm_numpy

if os.environ.get("TEMPOCAST_FORCE_NUMPY") == "1":
    _impl = _lstm_numpy
else:
    try:
        from . import _lstm_kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _lstm_numpy

lstm_seq_forward = _impl.lstm_seq_forward
lstm_seq_backward = _impl.lstm_seq_backward

ACT_TANH = _lstm_numpy.ACT_TANH
ACT_SOFTSIGN = _lstm_numpy.ACT_SOFTSIGN


def lstm_backend_name() -> str:
    return "compiled" if _impl.__name__.endswith("_lstm_kernels") else "numpy"
