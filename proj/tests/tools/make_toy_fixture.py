#!/usr/bin/env python3
"""Builds the synthetic multilingual toy fixture.

Writes corpus.jsonl (evidence documents stating the true facts),
train.txt (toy-LM training text stating the answers the model believes) and
dataset.jsonl (answers with gold spans and reference log-probabilities scored
from the empty-evidence prompt). The character trigram model here is an
independent implementation used as the oracle for the reference values.
"""
import json
import math
import re
import sys
from collections import Counter
from pathlib import Path

EVIDENCE_REPEATS = 500
BELIEF_REPEATS = 50

# (id, lang, question, true fact, believed answer). The gold span is the
# character where the believed answer departs from the fact.
RECORDS = [
    ("en-1", "en", "When was the Harbor Bridge of Velmora opened?",
     "The Harbor Bridge of Velmora was opened in 1342.",
     "The Harbor Bridge of Velmora was opened in 1347."),
    ("en-2", "en", "Who designed the Velmora lighthouse?",
     "The Velmora lighthouse was designed by Aldo Benn.",
     "The Velmora lighthouse was designed by Aldo Benn."),
    ("en-3", "en", "How tall is the clock tower of Quenton?",
     "The clock tower of Quenton is 218 metres tall.",
     "The clock tower of Quenton is 219 metres tall."),
    ("de-1", "de", "Wann wurde die Burg Falkenau gebaut?",
     "Die Burg Falkenau wurde im Jahr 1213 gebaut.",
     "Die Burg Falkenau wurde im Jahr 1218 gebaut."),
    ("de-2", "de", "Wer leitet das Museum in Grauweil?",
     "Das Museum in Grauweil wird von Marta Sohl geleitet.",
     "Das Museum in Grauweil wird von Marta Sohl geleitet."),
    ("fr-1", "fr", "Quelle est la hauteur du mont Serval ?",
     "Le mont Serval a une hauteur de 2431 mètres.",
     "Le mont Serval a une hauteur de 2436 mètres."),
    ("fr-2", "fr", "Où se trouve le lac Bremont ?",
     "Le lac Bremont se trouve près du village de Castelle.",
     "Le lac Bremont se trouve près du village de Castelle."),
    ("ru-1", "ru", "Когда был основан город Ведрин?",
     "Город Ведрин был основан в 1124 году.",
     "Город Ведрин был основан в 1129 году."),
    ("ru-2", "ru", "Кто построил мост в Ольховке?",
     "Мост в Ольховке построил инженер Павел Жуков.",
     "Мост в Ольховке построил инженер Павел Жуков."),
]

TEMPLATE = (
    "You are an assistant for answering questions.\n"
    "Refer to the references below and answer the following question.\n\n"
    "### References\n{reference_passages}\n\n"
    "### Question\n{question}\n\n"
    "### Answer"
)

BOUNDARY = object()
UNKNOWN = object()


class TrigramLaplace:
    def __init__(self, text):
        assert len(text) >= 3
        self.alphabet = set(text)
        self.v = len(self.alphabet) + 1
        self.tri = Counter()
        self.hist = Counter()
        for i in range(2, len(text)):
            self.tri[(text[i - 2], text[i - 1], text[i])] += 1
            self.hist[(text[i - 2], text[i - 1])] += 1

    def sym(self, c):
        if c is BOUNDARY:
            return c
        return c if c in self.alphabet else UNKNOWN

    def prob(self, h1, h2, c):
        a, b, x = self.sym(h1), self.sym(h2), self.sym(c)
        return (self.tri.get((a, b, x), 0) + 1) / (self.hist.get((a, b), 0) + self.v)

    def score(self, prefix, tokens):
        h1 = prefix[-2] if len(prefix) >= 2 else BOUNDARY
        h2 = prefix[-1] if prefix else BOUNDARY
        out = []
        for tok in tokens:
            lp = 0.0
            for c in tok:
                lp += math.log(self.prob(h1, h2, c))
                h1, h2 = h2, c
            out.append(lp)
        return out


def render(passages, question):
    refs = "\n".join(f"{i + 1}. {p}" for i, p in enumerate(passages))
    return TEMPLATE.replace("{reference_passages}", refs, 1).replace("{question}", question, 1)


def tokenize(text):
    # Letter runs, single digits, whitespace runs, single punctuation marks.
    return [(m.group(0), m.start(), m.end()) for m in re.finditer(r"[^\W\d_]+|\d|\s+|[^\w\s]", text)]


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    corpus = []
    for rid, lang, _, fact, _ in RECORDS:
        corpus.append({"doc_id": f"doc-{rid}", "title": "", "text": " ".join([fact] * EVIDENCE_REPEATS), "lang": lang})
    (out / "corpus.jsonl").write_text("".join(json.dumps(d, ensure_ascii=False) + "\n" for d in corpus), encoding="utf-8")

    train = "\n".join(" ".join([belief] * BELIEF_REPEATS) for _, _, _, _, belief in RECORDS) + "\n"
    (out / "train.txt").write_text(train, encoding="utf-8")

    lines = []
    for rid, lang, question, fact, belief in RECORDS:
        prompt = render([], question)
        model = TrigramLaplace(train + prompt)
        toks = tokenize(belief)
        lps = model.score(prompt, [t for t, _, _ in toks])
        labels = []
        if belief != fact:
            start = next(i for i, (a, b) in enumerate(zip(belief, fact)) if a != b)
            labels.append([start, start + 1])
        lines.append({
            "id": rid,
            "lang": lang,
            "question": question,
            "model_id": "toy-trigram",
            "output_text": belief,
            "tokens": [{"text": t, "start": s, "end": e, "logprob": lp} for (t, s, e), lp in zip(toks, lps)],
            "hard_labels": labels,
        })
    (out / "dataset.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in lines), encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures" / "toy")
