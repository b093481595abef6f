"""
Sparse and dense retrieval legs
===============================

Builds the BM25 inverted index and the exact-scan vector index over the same
chunks (they share one tokenizer), then contrasts what each leg is good at:
exact term matches versus bag-of-subwords similarity.
"""

import numpy as np

from qrag import lexical, semantic
from qrag.corpus import Chunk
from qrag.lexical import BM25Params
from qrag.semantic import EmbedderSpec, VectorIndex
from qrag.synthetic import make_corpus
from qrag.tokenizer import train_bpe

records = make_corpus(50, seed=9, lexicon_size=120, words_per_doc=(10, 18))
lines = [r["text"] for r in records]
tok = train_bpe(lines, vocab_size=2000)
chunks = [Chunk(r["id"] + "#0", r["id"], 0, len(tok.encode(r["text"])), r["text"]) for r in records]

# -- BM25 ----------------------------------------------------------------------

index = lexical.build_index(chunks, tok)
params = BM25Params()
print(f"inverted index: N={index.N}, avgdl={index.avgdl:.1f}, {len(index.postings)} terms")

query = " ".join(lines[7].split()[:3])
print(f"\nBM25 search for {query!r}:")
for cid, score in lexical.search(index, params, query, 3, tok):
    print(f"  {cid}: {score:.4f}")

rare_term = lines[7].split()[0]
print(f"idf({rare_term!r} tokens):")
for t in tok.encode(rare_term).surface:
    print(f"  {t!r}: {lexical.idf(index, t):.4f}")

# -- dense leg -------------------------------------------------------------------

spec = EmbedderSpec(kind="hash_projection", dim=256)
idf_weights = {t: lexical.idf(index, t) for t in index.postings}
vectors = [semantic.embed(tok.encode(c.text).surface, spec, idf_weights) for c in chunks]
vindex = VectorIndex.build([c.chunk_id for c in chunks], vectors)

# A paraphrase-like query: most of the words of doc 7, shuffled.
words = lines[7].split()
rng = np.random.default_rng(0)
paraphrase = " ".join(rng.permutation(words)[: int(0.7 * len(words))])
q = semantic.embed(tok.encode(paraphrase).surface, spec, idf_weights)
print(f"\ndense search for a shuffled subset of doc 7's words:")
for cid, score in semantic.search_exact(vindex, q, 3):
    print(f"  {cid}: cosine={score:.4f}")

print("\nexact self-match:")
q_self = semantic.embed(tok.encode(lines[7]).surface, spec, idf_weights)
print(" ", semantic.search_exact(vindex, q_self, 1)[0])
