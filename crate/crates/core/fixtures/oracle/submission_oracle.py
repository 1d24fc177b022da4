"""Independent reference for the golden end-to-end submission.

Runs the fixture corpus through the configuration in golden/run.json:
ridge-stabilised least squares (no selection and M5 selection), one
unbootstrapped regression tree using every feature, and kNN, with the TRT
models trained on in-sample FFD predictions. None of these need a random
number stream, so the result can be reproduced from the definitions alone.
Writes golden/submission.tsv.
"""
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import features_oracle as fo  # noqa: E402

ROOT = fo.ROOT
RIDGE = 1e-8


def feature_rows(rows, maps, lexes, lm):
    out = []
    for r in rows:
        ph, vowels = r["ph"], maps[r["language"]][1]
        L = len(ph)
        word = fo.normalize(r["word"])
        vc = sum(1 for p in ph if p in vowels)
        bi, tri = fo.ngrams(ph, 2), fo.ngrams(ph, 3)
        entries, means = lexes[r["language"]]
        img, conc = entries.get(word, means)
        counts = {}
        for p in ph:
            counts[p] = counts.get(p, 0) + 1
        ent = -sum(c / L * math.log2(c / L) for c in counts.values()) if L else 0.0
        out.append([len(word), L, vc, vc / L if L else 0.0,
                    len(set(bi)), len(set(tri)), len(bi), len(tri),
                    len(set(bi)) / L if L else 0.0, len(set(tri)) / L if L else 0.0,
                    img, conc, lm.surprisal(ph) / L if L else 0.0, abs(ent)])
    return np.array(out, dtype=float)


class LinReg:
    def __init__(self, X, y, selection):
        n = len(y)
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        self.sd = np.where(sd > 0, sd, 1.0)
        Z = (X - self.mean) / self.sd
        self.icpt = y.mean()
        yc = y - self.icpt
        floor = max(1e-12 * (yc @ yc) / n, sys.float_info.min)

        def fit(cols):
            Zs = Z[:, cols]
            A = Zs.T @ Zs + RIDGE * np.eye(len(cols))
            b = np.linalg.solve(A, Zs.T @ yc) if cols else np.zeros(0)
            rss = float(((yc - Zs @ b) ** 2).sum())
            return b, n * math.log(max(rss / n, floor)) + 2 * (len(cols) + 1)

        cols = list(range(X.shape[1]))
        b, aic = fit(cols)
        while selection == "m5" and cols:
            drop = int(np.argmin(np.abs(b)))
            trial = cols[:drop] + cols[drop + 1:]
            b2, aic2 = fit(trial)
            if aic2 < aic:
                cols, b, aic = trial, b2, aic2
            else:
                break
        self.cols, self.b = cols, b

    def predict(self, x):
        z = (x - self.mean) / self.sd
        return self.icpt + sum(c * z[j] for j, c in zip(self.cols, self.b))


class Tree:
    """CART on variance reduction; first best split wins, midpoint thresholds."""

    def __init__(self, X, y):
        self.X, self.y = X, y
        self.root = self.grow(list(range(len(y))))

    def grow(self, rows):
        y = self.y
        if len(rows) < 2 or all(y[r] == y[rows[0]] for r in rows):
            return ("leaf", sum(y[r] for r in rows) / len(rows))
        n = len(rows)
        total = sum(y[r] for r in rows)
        parent = total * total / n
        best = None
        for f in range(self.X.shape[1]):
            pairs = sorted(((self.X[r, f], y[r]) for r in rows), key=lambda p: p[0])
            left = 0.0
            for i in range(1, n):
                left += pairs[i - 1][1]
                lo, hi = pairs[i - 1][0], pairs[i][0]
                if lo == hi:
                    continue
                right = total - left
                score = left * left / i + right * right / (n - i)
                if best is None or score > best[0]:
                    t = lo + (hi - lo) / 2
                    best = (score, f, t if t < hi else lo)
        if best is None or best[0] <= parent + 1e-12 * abs(parent):
            return ("leaf", sum(y[r] for r in rows) / len(rows))
        _, f, t = best
        return ("split", f, t,
                self.grow([r for r in rows if self.X[r, f] <= t]),
                self.grow([r for r in rows if self.X[r, f] > t]))

    def predict(self, x):
        node = self.root
        while node[0] == "split":
            node = node[3] if x[node[1]] <= node[2] else node[4]
        return node[1]


class Knn:
    def __init__(self, X, y, k):
        self.lo = X.min(axis=0)
        rng = X.max(axis=0) - self.lo
        self.rng = np.where(rng > 0, rng, 1.0)
        self.P = [list((row - self.lo) / self.rng) for row in X]
        self.y, self.k = y, k

    def predict(self, x):
        q = list((x - self.lo) / self.rng)
        d = []
        for i, p in enumerate(self.P):
            s = 0.0
            for a, b in zip(p, q):
                s += (a - b) * (a - b)
            d.append((s, i))
        d.sort()
        return sum(self.y[i] for _, i in d[:self.k]) / self.k


def ensemble(X, y, k):
    return [LinReg(X, y, "none"), LinReg(X, y, "m5"), Tree(X, y), Knn(X, y, k)]


def sample_std(v):
    m = sum(v) / len(v)
    return math.sqrt(sum((x - m) * (x - m) for x in v) / (len(v) - 1))


def fixed4(v):
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


def main():
    maps = {l: fo.read_map(f"{ROOT}/mappings/{l}.map") for l in ("en", "de")}
    lexes = {l: fo.read_lex(f"{ROOT}/lexicons/{l}.tsv") for l in ("en", "de")}
    train = fo.read_corpus(f"{ROOT}/corpus/train.tsv")
    test = fo.read_corpus(f"{ROOT}/corpus/test.tsv")
    for r in train + test:
        r["ph"] = fo.transcribe(fo.normalize(r["word"]), maps[r["language"]][0])
    lm = fo.LM([r["ph"] for r in train])
    Xtr = feature_rows(train, maps, lexes, lm)
    Xte = feature_rows(test, maps, lexes, lm)
    ffd = np.array([float(r["FFDAvg"]) for r in train])
    trt = np.array([float(r["TRTAvg"]) for r in train])

    ffd_models = ensemble(Xtr, ffd, 5)
    best_ffd = ffd_models[2]
    hat_train = np.array([best_ffd.predict(x) for x in Xtr])
    Ttr = np.column_stack([Xtr, hat_train])
    trt_models = ensemble(Ttr, trt, 10)

    lines = ["language\tsentence_id\tword_id\tword\tFFDAvg\tFFDStd\tTRTAvg\tTRTStd"]
    for r, x in zip(test, Xte):
        f_all = [m.predict(x) for m in ffd_models]
        tx = np.append(x, f_all[2])
        t_all = [m.predict(tx) for m in trt_models]
        lines.append("\t".join([r["language"], r["sentence_id"], r["word_id"], r["word"],
                                fixed4(f_all[2]), fixed4(sample_std(f_all)),
                                fixed4(t_all[2]), fixed4(sample_std(t_all))]))
    with open(f"{ROOT}/golden/submission.tsv", "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
