"""Named parameter store, Adam updates, and the binary weight file format."""

from __future__ import annotations

import struct

import numpy as np


class MissingGradient(RuntimeError):
    pass


class Param:
    __slots__ = ("data", "grad", "trainable")

    def __init__(self, data: np.ndarray, trainable: bool = True):
        self.data = data
        self.grad = None
        self.trainable = trainable


class ParamStore:
    """Ordered name -> Param map plus per-parameter Adam moments."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.params: dict[str, Param] = {}
        self._adam_m: dict[str, np.ndarray] = {}
        self._adam_v: dict[str, np.ndarray] = {}

    def create(self, name: str, data: np.ndarray, trainable: bool = True) -> Param:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Param(np.ascontiguousarray(data, dtype=self.dtype), trainable)
        self.params[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self):
        return list(self.params.keys())

    def zero_grad(self):
        # buffers for every parameter: backward accumulates into frozen
        # params too, the optimizer just skips them
        for p in self.params.values():
            p.grad = np.zeros_like(p.data)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray], strict: bool = True):
        for name, p in self.params.items():
            if name in state:
                arr = np.asarray(state[name], dtype=self.dtype)
                if arr.shape != p.data.shape:
                    raise ValueError(f"shape mismatch for {name!r}: {arr.shape} vs {p.data.shape}")
                p.data = np.ascontiguousarray(arr)
            elif strict:
                raise KeyError(f"weight file is missing parameter {name!r}")


def adam_step(store: ParamStore, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, t=1) -> ParamStore:
    """Bias-corrected Adam update on every trainable parameter (in place)."""
    if t < 1:
        raise ValueError("t is a 1-based step counter")
    for name, p in store.params.items():
        if not p.trainable:
            continue
        if p.grad is None:
            raise MissingGradient(f"parameter {name!r} has no gradient")
        m = store._adam_m.get(name)
        if m is None:
            m = store._adam_m[name] = np.zeros_like(p.data)
        v = store._adam_v.get(name)
        if v is None:
            v = store._adam_v[name] = np.zeros_like(p.data)
        g = p.grad
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        mhat = m / (1.0 - beta1**t)
        vhat = v / (1.0 - beta2**t)
        p.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(p.data.dtype, copy=False)
    return store


# ---------------------------------------------------------------------------
# .spw weight files: magic "SPW1", then per parameter
#   u16 LE name length | name bytes | u8 rank | u32 LE dims | f32 LE payload

_MAGIC = b"SPW1"


def save_weights(path, store: ParamStore) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        for name, p in store.params.items():
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            arr = np.ascontiguousarray(p.data, dtype="<f4")
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_weights(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a weight file (bad magic)")
    state = {}
    pos = 4
    while pos < len(raw):
        (nlen,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos : pos + nlen].decode("utf-8")
        pos += nlen
        (rank,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        dims = struct.unpack_from(f"<{rank}I", raw, pos)
        pos += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=pos).reshape(dims)
        pos += 4 * count
        state[name] = arr.copy()
    return state
