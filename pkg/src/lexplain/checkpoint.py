"""Versioned textual model checkpoints.

Layout (UTF-8 text, LF line endings):

    line 1:  "lexplain-checkpoint 1"
    line 2:  "meta " + one JSON object with keys:
               seed, chunk {size, overlap}, embedder {kind, dim, hash_seed},
               head {input_dim, hidden, use_attention}
    then, per tensor:
             "tensor NAME DIM0 [DIM1]"
             one line per row, values space-separated, full-precision repr
    last:    "end"

Tensor names and shapes (h = hidden, d = input_dim):
    head.fwd.Wz|Wr|Wh (h, d)   head.fwd.Uz|Ur|Uh (h, h)   head.fwd.bz|br|bh (h,)
    head.bwd.*  same shapes    head.u (2h,)   head.w_o (2h,)   head.b_o (1,)
    emb.W_c (2, d)             emb.b_c (2,)

Gate semantics follow the recurrence documented in kernels/pylib.py. Floats
are written with Python repr (shortest round-trip form), so a rewrite of the
same model is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedder import HashingEmbedder
from .errors import CheckpointError
from .model import SequenceHead
from .segmenter import ChunkConfig

MAGIC = "lexplain-checkpoint 1"


def save_checkpoint(
    path: str | Path,
    head: SequenceHead,
    embedder,
    chunk_cfg: ChunkConfig,
    seed: int,
) -> None:
    """Write head + embedder parameters. A non-builtin embedder (a bridge
    client) has no serializable state; its kind and dim are recorded and the
    chunk-head tensors are written as zeros."""
    builtin = isinstance(embedder, HashingEmbedder)
    meta = {
        "seed": seed,
        "chunk": {"size": chunk_cfg.chunk_size, "overlap": chunk_cfg.overlap},
        "embedder": {
            "kind": "builtin" if builtin else "bridge",
            "dim": embedder.dim,
            "hash_seed": embedder.seed if builtin else 0,
        },
        "head": {
            "input_dim": head.input_dim,
            "hidden": head.hidden,
            "use_attention": head.use_attention,
        },
    }
    W_c = embedder.W_c if builtin else np.zeros((2, embedder.dim))
    b_c = embedder.b_c if builtin else np.zeros(2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MAGIC + "\n")
        fh.write("meta " + json.dumps(meta, sort_keys=True) + "\n")
        for name, tensor in head.param_items():
            _write_tensor(fh, f"head.{name}", tensor)
        _write_tensor(fh, "emb.W_c", W_c)
        _write_tensor(fh, "emb.b_c", b_c)
        fh.write("end\n")


def _write_tensor(fh, name: str, tensor: np.ndarray) -> None:
    tensor = np.atleast_1d(np.asarray(tensor, dtype=np.float64))
    dims = " ".join(str(d) for d in tensor.shape)
    fh.write(f"tensor {name} {dims}\n")
    rows = tensor if tensor.ndim == 2 else tensor.reshape(1, -1)
    for row in rows:
        fh.write(" ".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class Checkpoint:
    head: SequenceHead
    embedder: HashingEmbedder  # builtin params; ignored when kind == "bridge"
    chunk_cfg: ChunkConfig
    seed: int
    embedder_kind: str


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not lines or lines[0] != MAGIC:
        raise CheckpointError(f"{path} is not a lexplain checkpoint (bad magic)")
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise CheckpointError(f"{path}: missing meta line")
    try:
        meta = json.loads(lines[1][len("meta "):])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: bad meta JSON: {exc}") from exc

    tensors: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines):
        line = lines[i]
        if line == "end":
            break
        parts = line.split()
        if not parts or parts[0] != "tensor":
            raise CheckpointError(f"{path} line {i + 1}: expected tensor header, got {line!r}")
        name = parts[1]
        shape = tuple(int(x) for x in parts[2:])
        n_rows = shape[0] if len(shape) == 2 else 1
        data = []
        for r in range(n_rows):
            i += 1
            if i >= len(lines):
                raise CheckpointError(f"{path}: truncated tensor {name}")
            data.append([float(v) for v in lines[i].split()])
        arr = np.array(data, dtype=np.float64)
        arr = arr.reshape(shape)
        tensors[name] = np.ascontiguousarray(arr)
        i += 1
    else:
        raise CheckpointError(f"{path}: missing end marker")

    try:
        head_meta = meta["head"]
        emb_meta = meta["embedder"]
        chunk_meta = meta["chunk"]
        head = SequenceHead.zeros(
            input_dim=int(head_meta["input_dim"]),
            hidden=int(head_meta["hidden"]),
            use_attention=bool(head_meta["use_attention"]),
        )
        for key, _ in head.param_items():
            head.set_param(key, tensors[f"head.{key}"].reshape(_shape_of(head, key)))
        embedder = HashingEmbedder(dim=int(emb_meta["dim"]), seed=int(emb_meta["hash_seed"]))
        embedder.W_c = tensors["emb.W_c"].reshape(2, embedder.dim)
        embedder.b_c = tensors["emb.b_c"].reshape(2)
        chunk_cfg = ChunkConfig(
            chunk_size=int(chunk_meta["size"]), overlap=int(chunk_meta["overlap"])
        )
        return Checkpoint(
            head=head,
            embedder=embedder,
            chunk_cfg=chunk_cfg,
            seed=int(meta["seed"]),
            embedder_kind=str(emb_meta.get("kind", "builtin")),
        )
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing field {exc}") from exc


def _shape_of(head: SequenceHead, key: str) -> tuple[int, ...]:
    for name, tensor in head.param_items():
        if name == key:
            return tensor.shape
    raise CheckpointError(f"unknown head parameter {key}")
