"""
Retrieval evaluation
====================

Runs a planted-query benchmark through every fusion mode and reports
recall@k, MRR, and nDCG@k per mode, plus a ROUGE-L example for generated
text overlap.
"""

import tempfile
from pathlib import Path

from qrag import evalkit
from qrag.engine import EngineConfig, build_all, load_index
from qrag.synthetic import make_planted_benchmark, write_jsonl

bench = make_planted_benchmark(n_docs=300, n_lexical=15, n_semantic=15, seed=42)
qrels = {qid: {doc + "#0": 1} for qid, doc in bench.targets.items()}

with tempfile.TemporaryDirectory() as td:
    td = Path(td)
    write_jsonl(bench.records, td / "corpus.jsonl")
    build_all(td / "corpus.jsonl", EngineConfig(vocab_size=8000), td / "index")
    engine = load_index(td / "index")

    print(f"{'mode':22s} {'recall@1':>9s} {'recall@10':>10s} {'mrr':>7s} {'ndcg@10':>8s}")
    for mode in ("sparse_only", "dense_only", "rrf", "weighted_sum", "quantum_interference"):
        run = {
            q["qid"]: [h.chunk_id for h in engine.retrieve(q["text"], mode=mode).hits]
            for q in bench.queries
        }
        report = evalkit.evaluate_run(run, qrels, ks=[1, 10])
        m = report.macro
        print(
            f"{mode:22s} {m['recall@1']:9.3f} {m['recall@10']:10.3f} "
            f"{m['mrr']:7.3f} {m['ndcg@10']:8.3f}"
        )

# -- text-overlap metric for generated answers -----------------------------------

print("\nROUGE-L example:")
reference = "ਅੰਮ੍ਰਿਤਸਰ ਪੰਜਾਬ ਦਾ ਇੱਕ ਇਤਿਹਾਸਕ ਸ਼ਹਿਰ ਹੈ"
hypothesis = "ਅੰਮ੍ਰਿਤਸਰ ਇੱਕ ਇਤਿਹਾਸਕ ਸ਼ਹਿਰ ਹੈ"
score = evalkit.rouge_l(reference, hypothesis)
print(f"  P={score.precision:.3f} R={score.recall:.3f} F={score.f:.3f}")
