"""Regenerates the frozen oracle fixtures in this directory.

Stems come from NLTK's Porter stemmer in MARTIN_EXTENSIONS mode (the
reference C behaviour); metrics come from pytrec_eval (trec_eval 9).
"""
import pathlib
import random
import sys
import re

import pytrec_eval
from nltk.stem.porter import PorterStemmer

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent.parent

SUFFIXES = [
    "", "s", "es", "ies", "sses", "ss", "ed", "ing", "eed", "y", "ational", "tional",
    "enci", "anci", "izer", "bli", "alli", "entli", "eli", "ousli", "ization", "ation",
    "ator", "alism", "iveness", "fulness", "ousness", "aliti", "iviti", "biliti", "logi",
    "icate", "ative", "alize", "iciti", "ical", "ful", "ness", "al", "ance", "ence", "er",
    "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "sion", "tion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize", "e", "ll", "ated", "ating", "izing",
]
STEMS = [
    "relat", "condit", "valen", "hesit", "digit", "conform", "radic", "differ", "vile",
    "analog", "vietnam", "predic", "oper", "feud", "decis", "hope", "formal", "sensit",
    "sensibil", "triplic", "form", "electr", "hop", "revi", "allow", "infer", "airlin",
    "gyroscop", "adjust", "depend", "adopt", "homolog", "communism", "activ", "angular",
    "effect", "bowdler", "control", "roll", "cluster", "embed", "retriev", "rank", "vector",
    "probab", "general", "agre", "pl", "mat", "fil", "fail", "siz", "tann", "fall", "hiss",
    "fizz", "cr", "happ", "sk", "cease", "conflat", "troubl", "motor", "sing", "run", "a",
    "is", "at", "be", "by", "on", "ow", "cat", "pony", "ti", "caress", "gener", "centroid",
]


def porter_fixture(sources):
    words = set()
    for path in sources:
        words.update(re.findall(r"[a-z]+", pathlib.Path(path).read_text().lower()))
    for stem in STEMS:
        for suffix in SUFFIXES:
            words.add(stem + suffix)
    stemmer = PorterStemmer(mode=PorterStemmer.MARTIN_EXTENSIONS)
    with open(HERE / "porter_pairs.tsv", "w") as out:
        for w in sorted(words):
            out.write(f"{w}\t{stemmer.stem(w, to_lowercase=False)}\n")


def trec_eval_fixture():
    rng = random.Random(20240517)
    qrels, run = {}, {}
    docs = [f"D{i:04d}" for i in range(400)]
    for q in range(1, 21):
        qid = f"q{q:02d}"
        judged = rng.sample(docs, 10)
        grades = [rng.choice([0, 0, 0, 1, 1, 2]) for _ in judged]
        if not any(grades):
            grades[0] = 1
        qrels[qid] = dict(zip(judged, grades))
        pool = [d for d in docs if d not in judged]
        depth = rng.randint(15, 40)
        retrieved = rng.sample(pool, depth)
        if q == 7:
            retrieved += [d for d, g in qrels[qid].items() if g == 0]
        else:
            for d in rng.sample(judged, 6):
                retrieved.insert(rng.randint(0, 12), d)
        run[qid] = {d: round(100.0 - r * 0.731 - rng.random() * 0.1, 6) for r, d in enumerate(retrieved)}

    with open(HERE / "trec_eval" / "qrels.txt", "w") as out:
        for qid in sorted(qrels):
            for d in sorted(qrels[qid]):
                out.write(f"{qid} 0 {d} {qrels[qid][d]}\n")
    with open(HERE / "trec_eval" / "run.trec", "w") as out:
        for qid in sorted(run):
            ranked = sorted(run[qid].items(), key=lambda kv: -kv[1])
            for rank, (d, s) in enumerate(ranked, 1):
                out.write(f"{qid} Q0 {d} {rank} {s:.6f} fixture\n")

    measures = ["map", "gm_map", "P_5", "recall_1000"]
    ev = pytrec_eval.RelevanceEvaluator(qrels, set(measures))
    res = ev.evaluate(run)
    with open(HERE / "trec_eval" / "expected.tsv", "w") as out:
        for m in measures:
            agg = pytrec_eval.compute_aggregated_measure(m, [res[q][m] for q in res])
            out.write(f"all\t{m}\t{agg:.10f}\n")
        for qid in sorted(res):
            out.write(f"{qid}\tap\t{res[qid]['map']:.10f}\n")


if __name__ == "__main__":
    # Extra vocabulary: words of any text files given on the command line.
    porter_fixture(sys.argv[1:])
    trec_eval_fixture()
