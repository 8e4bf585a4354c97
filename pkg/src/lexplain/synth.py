"""Synthetic case-proceeding generator.

Produces raw documents shaped like the real inputs: a court header block,
a long filler body, a class-bearing cue sentence near the end, and a final
disposition sentence that the preprocessor extracts and removes. The
generator records everything it planted (label, cue sentence, header,
names), so tests can use it as an oracle.

Run as a module to write a corpus file:

    python -m lexplain.synth --n 200 --seed 13 --out raw.jsonl
"""

from __future__ import annotations

import argparse
import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import Decision, RawCase

# Filler vocabulary deliberately avoids every word used by the default
# decision patterns and by the cue sentences.
FILLER_WORDS = (
    "the counsel for both sides placed reliance on the record and "
    "the tribunal examined the evidence of each witness before the hearing "
    "statute provision clause schedule reading construction material "
    "question whether under upon during proceeding notice reply dated "
    "learned judge bench referred earlier ruling reasons stated period "
    "limitation ground urged point argument considered matter heard "
    "authority jurisdiction finding fact law interpretation document "
    "exhibit deposition testimony cross examination civil criminal revenue "
    "assessment tax land acquisition compensation award amount paid "
    "contract agreement party obligation duty right claim interest"
).split()

ACCEPT_CUE_WORDS = ("meritorious", "persuasive", "compelling", "vindicated", "wellfounded")
REJECT_CUE_WORDS = ("meritless", "unpersuasive", "untenable", "misconceived", "frivolous")

ACCEPT_ENDINGS = (
    "The appeal is allowed.",
    "In the result the appeal is allowed with costs.",
    "Accordingly the petition is allowed.",
)
REJECT_ENDINGS = (
    "The appeal is dismissed.",
    "In the result the appeal is dismissed with costs.",
    "Accordingly the petition is dismissed.",
)
MULTI_ENDINGS_ACCEPTED = (
    "Appeal No. 1 is allowed. Appeal No. 2 is dismissed.",
    "Appeal No. 1 is dismissed. Appeal No. 2 is allowed.",
)
MULTI_ENDINGS_REJECTED = (
    "Appeal No. 1 is dismissed. Appeal No. 2 is dismissed.",
)

JUDGE_NAMES = ("Varma", "Ranganathan", "Iyer", "Bhagat", "Chandra", "Menon", "Kaul", "Sastri")


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 200
    seed: int = 13
    accepted_fraction: float = 0.5
    multi_petition_fraction: float = 0.1
    min_words: int = 520
    max_words: int = 2400
    plant_names: bool = False
    words_per_sentence: tuple[int, int] = (6, 14)


@dataclass(frozen=True)
class PlantedDoc:
    raw: RawCase
    label: Decision
    petition_labels: tuple[Decision, ...]
    cue_sentence: str
    header: str
    planted_names: tuple[str, ...] = ()


def _filler_sentence(rng: np.random.Generator, lo: int, hi: int) -> str:
    n = int(rng.integers(lo, hi + 1))
    words = [FILLER_WORDS[int(i)] for i in rng.integers(0, len(FILLER_WORDS), size=n)]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _cue_sentence(rng: np.random.Generator, label: Decision) -> str:
    vocab = ACCEPT_CUE_WORDS if label == Decision.ACCEPTED else REJECT_CUE_WORDS
    picks = [vocab[int(i)] for i in rng.choice(len(vocab), size=4, replace=False)]
    return (
        f"The submission is {picks[0]} and {picks[1]} because the grievance "
        f"appears {picks[2]} on a {picks[3]} footing."
    )


def generate(cfg: SynthConfig) -> list[PlantedDoc]:
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.words_per_sentence
    docs: list[PlantedDoc] = []
    for i in range(cfg.n_docs):
        accepted = rng.random() < cfg.accepted_fraction
        label = Decision.ACCEPTED if accepted else Decision.REJECTED
        multi = rng.random() < cfg.multi_petition_fraction

        year = 1950 + int(rng.integers(0, 70))
        doc_id = f"{year}_{i}"
        judge = JUDGE_NAMES[int(rng.integers(0, len(JUDGE_NAMES)))]
        header = (
            f"IN THE SUPREME COURT OF RECORD\n"
            f"CASE NO. {i} OF {year}\n"
            f"BENCH: {judge}\n"
            f"DATE OF JUDGMENT: {year}-03-{1 + int(rng.integers(0, 28)):02d}\n\n"
        )

        target_words = int(rng.integers(cfg.min_words, cfg.max_words + 1))
        body: list[str] = []
        count = 0
        names: list[str] = []
        while count < target_words:
            if cfg.plant_names and rng.random() < 0.05:
                name = JUDGE_NAMES[int(rng.integers(0, len(JUDGE_NAMES)))]
                sent = f"As {name} observed the record speaks for itself."
                names.append(name)
            else:
                sent = _filler_sentence(rng, lo, hi)
            body.append(sent)
            count += len(sent.split())

        cue = _cue_sentence(rng, label)
        closing = _filler_sentence(rng, lo, hi)
        if multi:
            pool = MULTI_ENDINGS_ACCEPTED if accepted else MULTI_ENDINGS_REJECTED
            ending = pool[int(rng.integers(0, len(pool)))]
            petition_labels = tuple(
                Decision.ACCEPTED if w == "allowed" else Decision.REJECTED
                for w in re.findall(r"\b(allowed|dismissed)\b", ending)
            )
        else:
            pool = ACCEPT_ENDINGS if accepted else REJECT_ENDINGS
            ending = pool[int(rng.integers(0, len(pool)))]
            petition_labels = (label,)

        text = header + " ".join(body + [cue, closing, ending])
        if cfg.plant_names:
            names.append(judge)
        docs.append(
            PlantedDoc(
                raw=RawCase(id=doc_id, raw_text=text, source="synthetic"),
                label=label,
                petition_labels=petition_labels,
                cue_sentence=cue,
                header=header,
                planted_names=tuple(sorted(set(names))),
            )
        )
    return docs


def write_raw_corpus(path: str, planted: list[PlantedDoc]) -> None:
    from .records import write_jsonl

    write_jsonl(
        path,
        ({"id": p.raw.id, "text": p.raw.raw_text, "source": p.raw.source} for p in planted),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="generate a synthetic raw corpus")
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--min-words", type=int, default=520)
    parser.add_argument("--max-words", type=int, default=2400)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    cfg = SynthConfig(
        n_docs=args.n, seed=args.seed, min_words=args.min_words, max_words=args.max_words
    )
    write_raw_corpus(args.out, generate(cfg))
    print(f"wrote {args.n} synthetic cases to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
