"""
Quantum-inspired scoring
========================

Amplitude encoding turns unit embeddings into simulated n-qubit state
vectors; the fidelity kernel <a|b>^2 then equals the squared cosine of the
underlying embeddings. The interference score superposes the semantic inner
product with a normalized lexical amplitude before squaring, so agreeing
signals reinforce (constructive) and conflicting ones cancel (destructive).
"""

import numpy as np

from qrag.quantum import (
    CandidateScore,
    FusionConfig,
    amplitude_encode,
    fidelity,
    fuse_rrf,
    interference_score,
    normalize_lexical,
    rank_candidates,
    signed_fidelity,
)
from qrag.semantic import cosine

# -- amplitude encoding ---------------------------------------------------------

state = amplitude_encode(np.array([3.0, 4.0]))
print("encode [3, 4] ->", state.amplitudes, f"({state.num_qubits} qubit)")
state3 = amplitude_encode(np.array([1.0, 1.0, 1.0]))
print("encode [1, 1, 1] ->", np.round(state3.amplitudes, 4), f"({state3.num_qubits} qubits)")

# -- fidelity kernel == squared cosine -------------------------------------------

rng = np.random.default_rng(0)
a, b = rng.standard_normal(16), rng.standard_normal(16)
fid = fidelity(amplitude_encode(a), amplitude_encode(b))
print(f"\nfidelity={fid:.6f}  cosine^2={cosine(a, b) ** 2:.6f}")

anti = amplitude_encode(-a)
print("global sign flip: fidelity", fidelity(amplitude_encode(a), anti), end="")
print(", signed", signed_fidelity(amplitude_encode(a), anti))

# -- interference: constructive vs destructive ------------------------------------

print("\ninterference (w_semantic = w_lexical = 0.5):")
for c, l in [(0.6, 0.8), (0.6, 0.0), (-0.6, 0.8), (-1.0, 1.0)]:
    score = interference_score(c, l, 0.5, 0.5)
    cross = 2 * 0.5 * 0.5 * c * l
    kind = "constructive" if cross > 0 else "destructive" if cross < 0 else "none"
    print(f"  c={c:+.1f} l={l:.1f} -> {score:.4f}  (cross term {cross:+.3f}, {kind})")

# -- fusion modes over one candidate pool -----------------------------------------

raw_bm25 = {"doc-a": 7.1, "doc-b": 2.4, "doc-c": 0.0}
lex = normalize_lexical({cid: s for cid, s in raw_bm25.items() if s > 0})
cands = [
    CandidateScore("doc-a", sparse_raw=7.1, dense_cos=0.35, lexical_norm=lex.get("doc-a", 0.0), quantum=0.35),
    CandidateScore("doc-b", sparse_raw=2.4, dense_cos=0.80, lexical_norm=lex.get("doc-b", 0.0), quantum=0.80),
    CandidateScore("doc-c", sparse_raw=0.0, dense_cos=0.62, lexical_norm=0.0, quantum=0.62),
]
print("\nranking the same pool under each fusion mode:")
for mode in ("sparse_only", "dense_only", "rrf", "weighted_sum", "fidelity_rerank", "quantum_interference"):
    ranked = rank_candidates(cands, FusionConfig(mode=mode))
    order = ", ".join(f"{c.chunk_id}({c.fused:.3f})" for c in ranked)
    print(f"  {mode:21s}: {order}")

print("\nreciprocal rank fusion of two lists:")
fused = fuse_rrf([["doc-a", "doc-b"], ["doc-b", "doc-c", "doc-a"]], rrf_k=60)
for cid, score in sorted(fused.items(), key=lambda kv: -kv[1]):
    print(f"  {cid}: {score:.5f}")
