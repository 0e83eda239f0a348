# SPDX-License-Identifier: Apache-2.0
# Apache-2.0, Copyright 2026 The meltcheck Authors

"""Builds data/lexicon_audit.json: 200 lemmas with their expected keyword.

Expected keywords come from shortest hypernym distances (networkx BFS over
the hypernym graph, multi-source from the word's senses), not from the
round-by-round search the library runs:

  cost(k) = 0        if k is a sense of the word
          = dist(n)+1 if k is a sense of node n, dist(n) <= D-1
  answer  = the keyword with least cost <= D, ties alphabetical.
"""
import json
import pathlib

import networkx as nx

ROOT = pathlib.Path(__file__).resolve().parents[2]
D = 3
EXTRA_UNKNOWN = ["quasar", "xylophone", "sonnet", "algebra", "thunder", "velocity"]


def senses(lex, word):
    return {word, *lex["denotations"].get(word, [])}


def expected(lex, graph, keywords, word):
    if word in keywords:
        return word, 0
    cost = {k: 0 for k in senses(lex, word) if k in keywords}
    if not cost:
        dist = {}
        for s in senses(lex, word):
            if s in graph:
                for n, d in nx.single_source_shortest_path_length(graph, s, cutoff=D - 1).items():
                    dist[n] = min(d, dist.get(n, d))
            else:
                dist[s] = 0
        for n, d in dist.items():
            for k in senses(lex, n):
                if k in keywords and d + 1 <= D:
                    cost[k] = min(cost.get(k, d + 1), d + 1)
    if not cost:
        return None, None
    best = min(cost.values())
    return min(k for k, c in cost.items() if c == best), best


def main():
    lex = json.loads((ROOT / "data" / "lexicon.json").read_text())
    keywords = set(lex["keywords"])
    graph = nx.DiGraph()
    for child, parents in lex["hypernyms"].items():
        for p in parents:
            graph.add_edge(child, p)

    pool = sorted(set(lex["denotations"]) - keywords)
    pool += sorted(set(lex["hypernyms"]) - keywords - set(pool))
    mapped = [w for w in pool if expected(lex, graph, keywords, w)[0] is not None]
    unmapped = [w for w in pool if expected(lex, graph, keywords, w)[0] is None]
    words = mapped[:150] + unmapped[:200 - 150 - 12 - len(EXTRA_UNKNOWN)]
    words += sorted(keywords)[::7][:12] + EXTRA_UNKNOWN
    assert len(words) == 200 and len(set(words)) == 200, len(words)

    entries = []
    for w in sorted(words):
        k, c = expected(lex, graph, keywords, w)
        entries.append({"word": w, "keyword": k, "cost": c})
    doc = {"lexicon_version": lex["version"], "depth": D, "entries": entries}
    (ROOT / "data" / "lexicon_audit.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(len(mapped), "mappable in pool;", sum(e["keyword"] is not None for e in entries), "mapped in list")


if __name__ == "__main__":
    main()
