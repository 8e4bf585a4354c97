import numpy as np
import pytest

from lexplain.corpus import Decision, Document
from lexplain.embedder import HashingEmbedder, hash_index
from lexplain.model import SequenceHead, embed_document
from lexplain.occlusion import (
    WARN_NO_POSITIVE_CHUNKS,
    ChunkScore,
    OcclusionConfig,
    averaged_chunk_report,
    explain,
    label_probability,
    score_chunks,
    score_sentences,
)
from lexplain.segmenter import Chunk, ChunkConfig, chunk, tokenize


class TestCaseFormula:
    def test_predicted_accept(self):
        # y = 1: p is the sigmoid itself
        assert label_probability(0.9, 1) - label_probability(0.6, 1) == pytest.approx(0.3)

    def test_predicted_reject(self):
        # y = 0: p is one minus the sigmoid
        p_m = label_probability(0.2, 0)
        p_mp = label_probability(0.7, 0)
        assert p_m == pytest.approx(0.8)
        assert p_mp == pytest.approx(0.3)
        assert p_m - p_mp == pytest.approx(0.5)

    def test_score_zero_when_sigmoids_equal(self):
        cs = ChunkScore(chunk_index=0, p_m=0.6, p_m_prime=0.6)
        assert cs.s_c == 0.0


# ---------------------------------------------------------------------------
# Constructed oracle: a head that provably depends on one chunk only.
#
# The embedder is given chunk vocabularies whose hash buckets are disjoint,
# so chunk embeddings have disjoint support. The head's candidate weights
# read a single direction g = (the cue chunk's embedding); every other
# chunk is orthogonal to g, so its contribution is exactly tanh(0) = 0 and
# masking it cannot change anything. Attention and the output weight look
# only at that coordinate.
# ---------------------------------------------------------------------------

WORD_POOL = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu", "anchor", "beacon", "copper", "dagger",
    "ember", "falcon", "garnet", "harbor", "ivory", "jasper", "keystone",
    "lantern", "marble", "nickel", "onyx", "pepper", "quartz", "russet",
    "saffron", "timber", "umber", "velvet", "walnut", "zephyr",
]


def disjoint_vocabularies(embedder, groups, words_per_group, rng):
    """Partition words into groups with pairwise distinct hash buckets."""
    chosen: list[list[str]] = [[] for _ in range(groups)]
    used_buckets: set[int] = set()
    pool = list(WORD_POOL)
    suffix = 0
    g = 0
    while g < groups:
        while len(chosen[g]) < words_per_group:
            if pool:
                word = pool.pop(0)
            else:
                suffix += 1
                word = f"w{suffix}x{int(rng.integers(0, 10_000))}"
            bucket = hash_index(word, embedder.seed, embedder.dim)
            if bucket in used_buckets or bucket == hash_index(".", embedder.seed, embedder.dim):
                continue
            used_buckets.add(bucket)
            chosen[g].append(word)
        g += 1
    return chosen


def build_single_chunk_oracle(seed):
    """Returns (doc, embedder, head, cue_chunk_index, cue_sentence, cfg)."""
    from lexplain.segmenter import split_sentences

    rng = np.random.default_rng(seed)
    dim = 64
    embedder = HashingEmbedder(dim=dim, seed=int(rng.integers(0, 2**31)))
    n_chunks = int(rng.integers(2, 5))
    j = int(rng.integers(0, n_chunks))

    chunk_cfg = ChunkConfig(chunk_size=12, overlap=2)
    stride = chunk_cfg.stride
    vocabs = disjoint_vocabularies(embedder, n_chunks + 1, stride, rng)
    cue_words = vocabs[n_chunks][:3]
    # Sentences advance four tokens at a time, so some multiple of four falls
    # in [j*stride+2, j*stride+6); inserting the cue there keeps all four cue
    # tokens strictly inside chunk j and outside both neighbours' windows.
    cue_window = (j * stride + 2, j * stride + 6)

    sentences: list[tuple[str, bool]] = []
    token_count = 0
    target = (n_chunks - 1) * stride + chunk_cfg.overlap + 4
    cue_placed = False
    chunk_word_iters = [iter(v * 50) for v in vocabs[:n_chunks]]
    while token_count < target or not cue_placed:
        current_chunk = min(token_count // stride, n_chunks - 1)
        if not cue_placed and cue_window[0] <= token_count < cue_window[1]:
            sentences.append((" ".join(cue_words), True))
            cue_placed = True
        else:
            words = [next(chunk_word_iters[current_chunk]) for _ in range(3)]
            sentences.append((" ".join(words), False))
        token_count += 4  # three words plus the period token

    text = " ".join(part.capitalize() + "." for part, _ in sentences)
    cue_index = next(i for i, (_, is_cue) in enumerate(sentences) if is_cue)
    spans = [s.char_span for s in split_sentences(text, tokenize(text))]
    cue_sentence = text[spans[cue_index][0]:spans[cue_index][1]]

    doc = Document(id=f"oracle{seed}", text=text)
    H = embed_document(doc, chunk_cfg, embedder)
    assert H.shape[0] == n_chunks

    # Cue direction: supported only on the cue words' hash buckets. The cue
    # words occur nowhere else, so every other chunk row is exactly
    # orthogonal and masking it cannot move the output at all.
    g = np.zeros(dim)
    for w in cue_words:
        g[hash_index(w, embedder.seed, embedder.dim)] = 1.0
    g /= np.linalg.norm(g)
    hidden = 4
    head = SequenceHead.zeros(dim, hidden, use_attention=True)
    head.forward_params.bz[:] = 40.0  # update gate saturated: no memory leak
    head.forward_params.Wh[0] = 50.0 * g
    head.u[0] = 50.0
    head.w_o[0] = 1.0
    head.b_o = 0.0

    # chunk classifier: positive weight only on the cue words' buckets
    W_c = np.zeros((2, dim))
    for w in cue_words:
        W_c[1, hash_index(w, embedder.seed, embedder.dim)] = 5.0
        W_c[0, hash_index(w, embedder.seed, embedder.dim)] = -5.0
    embedder.W_c = W_c
    return doc, embedder, head, j, cue_sentence, chunk_cfg


class TestConstructedOracle:
    @pytest.mark.parametrize("seed", range(12))
    def test_unique_positive_chunk_and_cue_rank_one(self, seed):
        doc, embedder, head, j, cue_sentence, chunk_cfg = build_single_chunk_oracle(seed)
        scores, label, _, _ = score_chunks(doc, embedder, head, chunk_cfg)
        assert label == Decision.ACCEPTED
        for cs in scores:
            if cs.chunk_index == j:
                assert cs.s_c > 1e-6
            else:
                assert abs(cs.s_c) < 1e-9
        expl = explain(doc, embedder, head, chunk_cfg=chunk_cfg)
        assert expl.selected, "cue chunk must yield at least one sentence"
        assert expl.selected[0].text == cue_sentence

    def test_brute_force_equivalence(self):
        # independent re-implementation that rebuilds the masked matrix
        doc, embedder, head, _, _, chunk_cfg = build_single_chunk_oracle(99)
        H = embed_document(doc, chunk_cfg, embedder)
        scores, label, sigma_m, _ = score_chunks(doc, embedder, head, chunk_cfg)
        y = int(label)
        p_m = sigma_m if y == 1 else 1.0 - sigma_m
        for cs in scores:
            masked = H.copy()
            masked[cs.chunk_index] = 0.0
            sigma_prime, _ = head.forward(masked)
            p_prime = sigma_prime if y == 1 else 1.0 - sigma_prime
            assert cs.s_c == pytest.approx(p_m - p_prime, abs=1e-15)


class TestScoreChunks:
    def test_label_conditioning_flips_sign(self):
        rng = np.random.default_rng(8)
        head = SequenceHead.init(16, 4, seed=8)
        e = HashingEmbedder(dim=16, seed=0)
        doc = Document(id="d", text=" ".join(f"word{i}" for i in range(40)))
        cfg = ChunkConfig(chunk_size=16, overlap=4)
        H = embed_document(doc, cfg, e)
        sigma_m, _ = head.forward(H)
        for y in (0, 1):
            p_m = label_probability(sigma_m, y)
            deltas = []
            for c in range(H.shape[0]):
                sigma_p, _ = head.forward(H, mask=c)
                deltas.append(p_m - label_probability(sigma_p, y))
            if y == 1:
                up = deltas
            else:
                down = deltas
        np.testing.assert_allclose(up, [-d for d in down], atol=1e-15)

    def test_probabilities_in_unit_interval(self):
        head = SequenceHead.init(16, 4, seed=10)
        e = HashingEmbedder(dim=16, seed=0)
        doc = Document(id="d", text=" ".join(f"word{i}" for i in range(60)))
        cfg = ChunkConfig(chunk_size=16, overlap=4)
        scores, _, _, _ = score_chunks(doc, e, head, cfg)
        for cs in scores:
            assert 0.0 < cs.p_m < 1.0
            assert 0.0 < cs.p_m_prime < 1.0
            assert -1.0 < cs.s_c < 1.0


class TestScoreSentences:
    def _chunk_of(self, text):
        toks = tokenize(text)
        return chunk(toks, ChunkConfig(chunk_size=2048, overlap=0), text=text)[0]

    def test_zero_delta_for_ignored_sentence(self):
        e = HashingEmbedder(dim=32, seed=1)
        # weights zero: removing any sentence leaves both logits at the bias
        c = self._chunk_of("First point stands. Second point falls.")
        scores, _ = score_sentences(c, e, Decision.ACCEPTED)
        assert all(s.raw_delta == 0.0 for s in scores)
        assert all(s.score == 0.0 for s in scores)

    def test_length_normalization(self):
        scores = [
            s for s in (
                type("S", (), {})(),
            )
        ]
        from lexplain.occlusion import SentenceScore

        a = SentenceScore(text="a b c", char_span=(0, 5), raw_delta=0.6, length=3)
        b = SentenceScore(text="a b c d e f", char_span=(6, 17), raw_delta=0.6, length=6)
        assert a.score == pytest.approx(0.2)
        assert b.score == pytest.approx(0.1)

    def test_cue_sentence_maximal(self):
        e = HashingEmbedder(dim=64, seed=2)
        cue_words = ["velvet", "anchor", "garnet"]
        text = "Filler words sit here quietly. Velvet anchor garnet. More filler text follows."
        W = np.zeros((2, 64))
        for w in cue_words:
            W[1, hash_index(w, e.seed, e.dim)] = 4.0
        e.W_c = W
        c = self._chunk_of(text)
        scores, _ = score_sentences(c, e, Decision.ACCEPTED)
        best = max(scores, key=lambda s: s.score)
        assert "Velvet" in best.text
        others = [s.score for s in scores if s is not best]
        assert all(best.score > o for o in others)

    def test_whole_chunk_sentence_flagged(self):
        e = HashingEmbedder(dim=32, seed=3)
        c = self._chunk_of("only one sentence lives here")
        scores, warnings = score_sentences(c, e, Decision.REJECTED)
        assert len(scores) == 1
        assert scores[0].whole_chunk
        assert warnings == ["whole-chunk-sentence"]


class TestExplain:
    def test_selection_cardinality(self):
        doc, embedder, head, j, _, chunk_cfg = build_single_chunk_oracle(5)
        for tf, expect in ((0.4, None), (1.0, None)):
            expl = explain(doc, embedder, head, OcclusionConfig(top_fraction=tf), chunk_cfg)
            from lexplain.segmenter import split_sentences

            chunks = chunk(tokenize(doc.text), chunk_cfg, text=doc.text)
            cue_chunk = chunks[j]
            n_sents = len(split_sentences(cue_chunk.text, tokenize(cue_chunk.text)))
            expected = int(np.ceil(tf * n_sents))
            assert len(expl.selected) == expected

    def test_no_positive_chunks_warning(self):
        head = SequenceHead.zeros(32, 4)  # all outputs 0.5, every score 0
        e = HashingEmbedder(dim=32, seed=4)
        doc = Document(id="d", text="Some words here. And some more words there.")
        expl = explain(doc, e, head, chunk_cfg=ChunkConfig(chunk_size=64, overlap=8))
        assert expl.selected == ()
        assert WARN_NO_POSITIVE_CHUNKS in expl.warnings

    def test_deterministic(self):
        doc, embedder, head, _, _, chunk_cfg = build_single_chunk_oracle(6)
        a = explain(doc, embedder, head, chunk_cfg=chunk_cfg)
        b = explain(doc, embedder, head, chunk_cfg=chunk_cfg)
        assert a == b

    def test_selected_sorted_descending(self):
        doc, embedder, head, _, _, chunk_cfg = build_single_chunk_oracle(7)
        expl = explain(doc, embedder, head, OcclusionConfig(top_fraction=1.0), chunk_cfg)
        scores = [s.score for s in expl.selected]
        assert scores == sorted(scores, reverse=True)


class TestAveragedReport:
    def test_means(self):
        # two docs, three chunks each, synthetic scores [1,2,3] and [3,2,1]
        rows_scores = [[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]
        means = np.mean(rows_scores, axis=0)
        np.testing.assert_allclose(means, [2.0, 2.0, 2.0])

    def test_report_shapes_and_attention_sums(self):
        e = HashingEmbedder(dim=32, seed=5)
        head = SequenceHead.init(32, 4, seed=5)
        docs = [
            Document(id=f"d{i}", text=" ".join(f"w{i}t{k}" for k in range(n)))
            for i, n in enumerate([30, 30, 60, 60, 90])
        ]
        cfg = ChunkConfig(chunk_size=32, overlap=8)
        rows = averaged_chunk_report(docs, e, head, cfg)
        by_count = {}
        for r in rows:
            by_count.setdefault(r.chunk_count, []).append(r)
        for count, group in by_count.items():
            assert [r.position for r in group] == list(range(count))
            att_sum = sum(r.mean_attention for r in group)
            assert att_sum == pytest.approx(1.0, abs=1e-9)
