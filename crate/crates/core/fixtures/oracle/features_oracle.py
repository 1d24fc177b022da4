"""Independent reference for the fixture feature matrix.

Recomputes every per-word feature from the fixture mapping files, lexicons
and corpus with straightforward Python, and writes golden/features_oracle.tsv
plus golden/cat_features.tsv, an out-of-corpus English token "cat" scored
with the same resources.
The character LM is order 3, alpha 0.1, trained on corpus/train.tsv.
Fixture IPA contains no combining marks, so one code point = one phoneme.
"""
import math
import os
from collections import Counter

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


def read_map(path):
    rules, vowels, in_vowels = {}, set(), False
    for line in open(path, encoding="utf-8").read().split("\n"):
        if not line or line.startswith("#"):
            continue
        if line.strip() == "[vowels]":
            in_vowels = True
            continue
        if in_vowels:
            vowels.add(line.strip())
        else:
            s, t = line.split("\t")
            rules[s] = t
    return rules, vowels


def read_lex(path):
    entries = {}
    for line in open(path, encoding="utf-8"):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        w, i, c = line.split("\t")
        entries[normalize(w)] = (float(i), float(c))
    mi = sum(v[0] for v in entries.values()) / len(entries)
    mc = sum(v[1] for v in entries.values()) / len(entries)
    return entries, (mi, mc)


def normalize(w):
    chars = list(w)
    while chars and not chars[0].isalnum():
        chars.pop(0)
    while chars and not chars[-1].isalnum():
        chars.pop()
    return "".join(chars).lower()


def transcribe(word, rules):
    out, i = "", 0
    longest = max(len(s) for s in rules)
    while i < len(word):
        for n in range(min(longest, len(word) - i), 0, -1):
            if word[i:i + n] in rules:
                out += rules[word[i:i + n]]
                i += n
                break
        else:
            out += word[i]
            i += 1
    return list(out)


def read_corpus(path):
    lines = open(path, encoding="utf-8").read().split("\n")
    head = lines[0].split("\t")
    rows = []
    for line in lines[1:]:
        if line:
            rows.append(dict(zip(head, line.split("\t"))))
    return rows


class LM:
    def __init__(self, words, order=3, alpha=0.1):
        self.order, self.alpha = order, alpha
        self.grams, self.ctx = Counter(), Counter()
        self.vocab = {"$"}
        for w in words:
            self.vocab.update(w)
            seq = ["^"] * (order - 1) + w + ["$"]
            for i in range(order - 1, len(seq)):
                g = tuple(seq[i - order + 1:i + 1])
                self.grams[g] += 1
                self.ctx[g[:-1]] += 1

    def surprisal(self, w):
        seq = ["^"] * (self.order - 1) + [p if p in self.vocab else "<unk>" for p in w] + ["$"]
        total = 0.0
        for i in range(self.order - 1, len(seq)):
            g = tuple(seq[i - self.order + 1:i + 1])
            p = (self.grams[g] + self.alpha) / (self.ctx[g[:-1]] + self.alpha * (len(self.vocab) + 1))
            total -= math.log2(p)
        return total


def ngrams(ph, n):
    return [tuple(ph[i:i + n]) for i in range(len(ph) - n + 1)]


def main():
    maps = {l: read_map(f"{ROOT}/mappings/{l}.map") for l in ("en", "de")}
    lexes = {l: read_lex(f"{ROOT}/lexicons/{l}.tsv") for l in ("en", "de")}
    train = read_corpus(f"{ROOT}/corpus/train.tsv")
    test = read_corpus(f"{ROOT}/corpus/test.tsv")
    for r in train + test:
        r["ph"] = transcribe(normalize(r["word"]), maps[r["language"]][0])
    lm = LM([r["ph"] for r in train])

    cols = ["word_len", "ipa_len", "ipa_count", "ipa_norm", "bigram_count", "trigram_count",
            "bigram_sum", "trigram_sum", "bigram_norm", "trigram_norm", "imageability",
            "concreteness", "phonetic_comp", "ipa_ent"]
    out = ["\t".join(["language", "sentence_id", "word_id", "word", "ipa"] + cols)]
    extra = [{"language": "en", "sentence_id": "0", "word_id": "0", "word": "cat"}]
    for r in extra:
        r["ph"] = transcribe(normalize(r["word"]), maps[r["language"]][0])
    for r in train + test + extra:
        ph, vowels = r["ph"], maps[r["language"]][1]
        L = len(ph)
        word = normalize(r["word"])
        vc = sum(1 for p in ph if p in vowels)
        bi, tri = ngrams(ph, 2), ngrams(ph, 3)
        entries, means = lexes[r["language"]]
        img, conc = entries.get(word, means)
        counts = Counter(ph)
        ent = -sum(c / L * math.log2(c / L) for c in counts.values()) if L else 0.0
        vals = [len(word), L, vc, vc / L if L else 0.0,
                len(set(bi)), len(set(tri)), len(bi), len(tri),
                len(set(bi)) / L if L else 0.0, len(set(tri)) / L if L else 0.0,
                img, conc, lm.surprisal(ph) / L if L else 0.0, abs(ent)]
        out.append("\t".join([r["language"], r["sentence_id"], r["word_id"], r["word"], "".join(ph)]
                             + [repr(float(v)) for v in vals]))
    with open(f"{ROOT}/golden/features_oracle.tsv", "w", encoding="utf-8") as f:
        f.write("\n".join(out[:-1]) + "\n")
    with open(f"{ROOT}/golden/cat_features.tsv", "w", encoding="utf-8") as f:
        f.write(out[0] + "\n" + out[-1] + "\n")


if __name__ == "__main__":
    main()
