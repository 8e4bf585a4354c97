"""Hierarchical sequence head and its trainer.

A document becomes a matrix of chunk embeddings (one row per chunk). The
head runs a bidirectional gated recurrent layer over the rows, pools the
per-position states (attention over a learned context vector, or the final
state of each direction when attention is off) and applies a sigmoid output
unit. Training is plain SGD with momentum on binary cross-entropy, gradient
clipped by global norm; everything is driven by one seed.

Occlusion needs a way to knock one chunk out of the pass: `mask` replaces
that embedding row with zeros before the recurrence ("zero" mode) or removes
the row entirely ("drop" mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .corpus import Decision, Document
from .embedder import Embedder
from .errors import DimensionMismatch, RowFailed, SingleClass, TrainingDiverged
from .segmenter import ChunkConfig, chunk, tokenize

MASK_ZERO = "zero"
MASK_DROP = "drop"


@dataclass
class GruParams:
    Wz: np.ndarray
    Wr: np.ndarray
    Wh: np.ndarray
    Uz: np.ndarray
    Ur: np.ndarray
    Uh: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    bh: np.ndarray

    FIELDS = ("Wz", "Wr", "Wh", "Uz", "Ur", "Uh", "bz", "br", "bh")

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "GruParams":
        return cls(
            Wz=np.zeros((hidden, input_dim)),
            Wr=np.zeros((hidden, input_dim)),
            Wh=np.zeros((hidden, input_dim)),
            Uz=np.zeros((hidden, hidden)),
            Ur=np.zeros((hidden, hidden)),
            Uh=np.zeros((hidden, hidden)),
            bz=np.zeros(hidden),
            br=np.zeros(hidden),
            bh=np.zeros(hidden),
        )

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: np.random.Generator) -> "GruParams":
        def mat(rows, cols):
            bound = 1.0 / np.sqrt(cols)
            return rng.uniform(-bound, bound, size=(rows, cols))

        return cls(
            Wz=mat(hidden, input_dim),
            Wr=mat(hidden, input_dim),
            Wh=mat(hidden, input_dim),
            Uz=mat(hidden, hidden),
            Ur=mat(hidden, hidden),
            Uh=mat(hidden, hidden),
            bz=np.zeros(hidden),
            br=np.zeros(hidden),
            bh=np.zeros(hidden),
        )


@dataclass
class SequenceHead:
    input_dim: int
    hidden: int
    forward_params: GruParams
    backward_params: GruParams
    u: np.ndarray  # (2h,) attention context vector
    w_o: np.ndarray  # (2h,)
    b_o: float
    use_attention: bool = True

    @classmethod
    def zeros(cls, input_dim: int, hidden: int, use_attention: bool = True) -> "SequenceHead":
        return cls(
            input_dim=input_dim,
            hidden=hidden,
            forward_params=GruParams.zeros(input_dim, hidden),
            backward_params=GruParams.zeros(input_dim, hidden),
            u=np.zeros(2 * hidden),
            w_o=np.zeros(2 * hidden),
            b_o=0.0,
            use_attention=use_attention,
        )

    @classmethod
    def init(
        cls, input_dim: int, hidden: int, seed: int, use_attention: bool = True
    ) -> "SequenceHead":
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(2 * hidden)
        return cls(
            input_dim=input_dim,
            hidden=hidden,
            forward_params=GruParams.init(input_dim, hidden, rng),
            backward_params=GruParams.init(input_dim, hidden, rng),
            u=rng.uniform(-bound, bound, size=2 * hidden),
            w_o=rng.uniform(-bound, bound, size=2 * hidden),
            b_o=0.0,
            use_attention=use_attention,
        )

    def copy(self) -> "SequenceHead":
        return SequenceHead(
            input_dim=self.input_dim,
            hidden=self.hidden,
            forward_params=GruParams(**{f: getattr(self.forward_params, f).copy() for f in GruParams.FIELDS}),
            backward_params=GruParams(**{f: getattr(self.backward_params, f).copy() for f in GruParams.FIELDS}),
            u=self.u.copy(),
            w_o=self.w_o.copy(),
            b_o=float(self.b_o),
            use_attention=self.use_attention,
        )

    # --- forward ---

    def forward(
        self,
        H: np.ndarray,
        mask: int | None = None,
        mask_mode: str = MASK_ZERO,
        with_cache: bool = False,
    ):
        """Sigmoid output for a chunk-embedding matrix H (T, input_dim).

        Returns (prob, attention_weights) where attention_weights is None for
        last-state pooling; with_cache additionally returns the internals the
        backward pass needs. Attention weights are reported over the rows of
        the (possibly masked) input.
        """
        H = np.asarray(H, dtype=np.float64)
        if H.ndim != 2 or H.shape[0] == 0:
            raise DimensionMismatch(f"chunk matrix must be non-empty 2-D, got shape {H.shape}")
        if H.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"chunk matrix width {H.shape[1]} != head input_dim {self.input_dim}"
            )
        X = H
        if mask is not None:
            if not 0 <= mask < H.shape[0]:
                raise DimensionMismatch(f"mask index {mask} out of range for {H.shape[0]} chunks")
            if mask_mode == MASK_ZERO:
                X = H.copy()
                X[mask] = 0.0
            elif mask_mode == MASK_DROP:
                X = np.delete(H, mask, axis=0)
                if X.shape[0] == 0:
                    prob = _sigmoid_scalar(self.b_o)
                    return (prob, None) if not with_cache else (prob, None, None)
            else:
                raise ValueError(f"unknown mask_mode {mask_mode!r}")

        fp, bp = self.forward_params, self.backward_params
        Hf, Zf, Rf, Cf = kernels.gru_forward(
            np.ascontiguousarray(X), fp.Wz, fp.Wr, fp.Wh, fp.Uz, fp.Ur, fp.Uh, fp.bz, fp.br, fp.bh
        )
        Xrev = np.ascontiguousarray(X[::-1])
        Hb, Zb, Rb, Cb = kernels.gru_forward(
            Xrev, bp.Wz, bp.Wr, bp.Wh, bp.Uz, bp.Ur, bp.Uh, bp.bz, bp.br, bp.bh
        )
        S = np.concatenate([Hf, Hb[::-1]], axis=1)  # (T, 2h), position-aligned

        if self.use_attention:
            scores = S @ self.u
            scores = scores - scores.max()
            e = np.exp(scores)
            alpha = e / e.sum()
            pooled = alpha @ S
        else:
            alpha = None
            pooled = np.concatenate([Hf[-1], Hb[-1]])

        logit = float(self.w_o @ pooled + self.b_o)
        prob = _sigmoid_scalar(logit)
        if not with_cache:
            return prob, (alpha.copy() if alpha is not None else None)
        cache = {
            "X": X, "Xrev": Xrev,
            "Hf": Hf, "Zf": Zf, "Rf": Rf, "Cf": Cf,
            "Hb": Hb, "Zb": Zb, "Rb": Rb, "Cb": Cb,
            "S": S, "alpha": alpha, "pooled": pooled, "prob": prob,
        }
        return prob, (alpha.copy() if alpha is not None else None), cache

    # --- backward ---

    def backward(self, cache: dict, dlogit: float) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss with respect to every parameter, given
        d(loss)/d(logit). Keys: fwd.* / bwd.* for the recurrent parameters,
        plus u, w_o, b_o."""
        S = cache["S"]
        pooled = cache["pooled"]
        alpha = cache["alpha"]
        T = S.shape[0]
        h = self.hidden

        dw_o = dlogit * pooled
        db_o = dlogit
        dpooled = dlogit * self.w_o

        dS = np.zeros_like(S)
        if self.use_attention:
            dalpha = S @ dpooled
            dS += np.outer(alpha, dpooled)
            da = alpha * (dalpha - alpha @ dalpha)
            du = S.T @ da
            dS += np.outer(da, self.u)
        else:
            du = np.zeros_like(self.u)
            dS[-1, :h] += dpooled[:h]
            dS[0, h:] += dpooled[h:]

        dHf = np.ascontiguousarray(dS[:, :h])
        dHb = np.ascontiguousarray(dS[::-1, h:])  # align with the reversed pass

        fp, bp = self.forward_params, self.backward_params
        gf = kernels.gru_backward(
            cache["X"], cache["Hf"], cache["Zf"], cache["Rf"], cache["Cf"],
            fp.Uz, fp.Ur, fp.Uh, dHf,
        )
        gb = kernels.gru_backward(
            cache["Xrev"], cache["Hb"], cache["Zb"], cache["Rb"], cache["Cb"],
            bp.Uz, bp.Ur, bp.Uh, dHb,
        )
        grads = {"u": du, "w_o": dw_o, "b_o": np.array([db_o])}
        for name, g in zip(GruParams.FIELDS, gf):
            grads[f"fwd.{name}"] = g
        for name, g in zip(GruParams.FIELDS, gb):
            grads[f"bwd.{name}"] = g
        return grads

    # --- parameter access for the optimizer / checkpoints ---

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        items = []
        for prefix, p in (("fwd", self.forward_params), ("bwd", self.backward_params)):
            for name in GruParams.FIELDS:
                items.append((f"{prefix}.{name}", getattr(p, name)))
        items.append(("u", self.u))
        items.append(("w_o", self.w_o))
        items.append(("b_o", np.array([self.b_o])))
        return items

    def set_param(self, key: str, value: np.ndarray) -> None:
        if key == "u":
            self.u = value
        elif key == "w_o":
            self.w_o = value
        elif key == "b_o":
            self.b_o = float(value[0] if value.ndim else value)
        else:
            prefix, name = key.split(".")
            params = self.forward_params if prefix == "fwd" else self.backward_params
            setattr(params, name, value)


def _sigmoid_scalar(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def head_forward(
    H: np.ndarray, mask: int | None, head: SequenceHead, mask_mode: str = MASK_ZERO
) -> tuple[float, np.ndarray | None]:
    return head.forward(H, mask=mask, mask_mode=mask_mode)


# ---------------------------------------------------------------------------
# Document embedding
# ---------------------------------------------------------------------------

def embed_document(doc: Document, cfg: ChunkConfig, e: Embedder) -> np.ndarray:
    """Matrix of chunk embeddings, one row per chunk of doc.text."""
    if not doc.text:
        raise ValueError(f"document {doc.id} has empty text")
    tokens = tokenize(doc.text)
    chunks = chunk(tokens, cfg, text=doc.text)
    rows = np.zeros((len(chunks), e.dim))
    for c in chunks:
        try:
            rows[c.index] = e.embed_chunk(c.text)
        except Exception as exc:  # noqa: BLE001 - wrap with the failing index
            raise RowFailed(c.index, exc) from exc
    return rows


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 0.3
    batch_size: int = 16
    seed: int = 0
    momentum: float = 0.9
    clip_norm: float = 5.0
    hidden: int = 64
    use_attention: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def _bce(prob: float, y: int) -> float:
    p = min(max(prob, 1e-12), 1.0 - 1e-12)
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def train(
    docs: list[Document],
    e: Embedder,
    cfg: TrainConfig,
    chunk_cfg: ChunkConfig | None = None,
    embedded: list[np.ndarray] | None = None,
) -> tuple[SequenceHead, list[float]]:
    """Train a head on labeled documents. Returns (head, per-epoch mean loss
    history, with the initial loss first). Precomputed embeddings can be
    passed to skip re-embedding."""
    chunk_cfg = chunk_cfg or ChunkConfig()
    labeled = [d for d in docs if d.label is not None and d.text.strip()]
    if len(labeled) < 2:
        raise SingleClass("need at least two labeled documents")
    labels = np.array([int(d.label) for d in labeled])
    if len(np.unique(labels)) < 2:
        raise SingleClass("training data contains a single class")

    if embedded is None:
        embedded = [embed_document(d, chunk_cfg, e) for d in labeled]
    elif len(embedded) != len(labeled):
        raise DimensionMismatch("embedded matrices do not match labeled documents")

    head = SequenceHead.init(e.dim, cfg.hidden, cfg.seed, use_attention=cfg.use_attention)
    history = [_mean_loss(head, embedded, labels)]
    if cfg.epochs == 0:
        return head, history

    rng = np.random.default_rng(cfg.seed)
    velocity = {k: np.zeros_like(v) for k, v in head.param_items()}

    for _ in range(cfg.epochs):
        order = rng.permutation(len(labeled))
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            grads_sum: dict[str, np.ndarray] | None = None
            for i in batch:
                _, _, cache = head.forward(embedded[i], with_cache=True)
                y = labels[i]
                epoch_loss += _bce(cache["prob"], y)
                dlogit = cache["prob"] - y
                g = head.backward(cache, dlogit)
                if grads_sum is None:
                    grads_sum = g
                else:
                    for k in grads_sum:
                        grads_sum[k] += g[k]
            scale = 1.0 / len(batch)
            total_sq = 0.0
            for k in grads_sum:
                grads_sum[k] *= scale
                total_sq += float(np.sum(grads_sum[k] ** 2))
            norm = np.sqrt(total_sq)
            if not np.isfinite(norm):
                raise TrainingDiverged("non-finite gradient norm")
            if norm > cfg.clip_norm:
                clip = cfg.clip_norm / norm
                for k in grads_sum:
                    grads_sum[k] *= clip
            for k, v in head.param_items():
                velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grads_sum[k]
                head.set_param(k, v + velocity[k])
        mean = epoch_loss / len(labeled)
        if not np.isfinite(mean):
            raise TrainingDiverged("non-finite training loss")
        history.append(mean)

    final = _mean_loss(head, embedded, labels)
    if not np.isfinite(final):
        raise TrainingDiverged("non-finite training loss after final epoch")
    if final >= history[0]:
        raise TrainingDiverged(
            f"training loss did not improve (initial {history[0]:.6f}, final {final:.6f})"
        )
    return head, history


def _mean_loss(head: SequenceHead, embedded: list[np.ndarray], labels: np.ndarray) -> float:
    total = 0.0
    for H, y in zip(embedded, labels):
        prob, _ = head.forward(H)
        total += _bce(prob, int(y))
    return total / len(labels)


def predict(doc: Document, e: Embedder, head: SequenceHead, chunk_cfg: ChunkConfig | None = None) -> tuple[Decision, float]:
    """Predicted decision and sigmoid probability; probability >= 0.5 maps to
    ACCEPTED (ties resolve to ACCEPTED by convention)."""
    H = embed_document(doc, chunk_cfg or ChunkConfig(), e)
    prob, _ = head.forward(H)
    label = Decision.ACCEPTED if prob >= 0.5 else Decision.REJECTED
    return label, prob


# ---------------------------------------------------------------------------
# Chunk-level and document-level logistic baselines
# ---------------------------------------------------------------------------

def train_chunk_head(
    docs: list[Document],
    e: Embedder,
    cfg: TrainConfig,
    chunk_cfg: ChunkConfig | None = None,
    embedded: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit the per-chunk two-logit classifier: every chunk inherits its
    document's label. Returns (W_c, b_c) and installs them on the embedder
    when it has those attributes."""
    from .embedder import fit_logistic

    chunk_cfg = chunk_cfg or ChunkConfig()
    labeled = [d for d in docs if d.label is not None and d.text.strip()]
    if embedded is None:
        embedded = [embed_document(d, chunk_cfg, e) for d in labeled]
    X_rows = []
    y_rows = []
    for d, H in zip(labeled, embedded):
        for row in H:
            X_rows.append(row)
            y_rows.append(int(d.label))
    if not X_rows:
        raise SingleClass("no labeled chunks to train on")
    model = fit_logistic(np.asarray(X_rows), np.asarray(y_rows))
    if hasattr(e, "W_c"):
        e.W_c = model.W
        e.b_c = model.b
    return model.W, model.b


def baseline_doc_lr(
    docs: list[Document],
    e: Embedder,
    cfg: TrainConfig,
    chunk_cfg: ChunkConfig | None = None,
):
    """Logistic model over mean-pooled chunk embeddings, one vector per
    document."""
    from .embedder import fit_logistic

    chunk_cfg = chunk_cfg or ChunkConfig()
    labeled = [d for d in docs if d.label is not None and d.text.strip()]
    X = np.array([embed_document(d, chunk_cfg, e).mean(axis=0) for d in labeled])
    y = np.array([int(d.label) for d in labeled])
    return fit_logistic(X, y)
