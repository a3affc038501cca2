#!/usr/bin/env python3
"""Writes a precomputed embedding store for a list of texts.

Input is a JSON array of strings (for example the output of
`acceptance --dump-network-texts texts.json`). Output is the JSON Lines
store read by the precomputed_store provider:

    {"format":"entangle-embeddings","version":1,"model":"...","dimension":D}
    {"sha256":"<hex of trimmed text>","text":"...","values":[...]}

Usage:
    python3 tools/build_embedding_store.py texts.json store.jsonl [--model all-MiniLM-L6-v2]
    python3 tools/build_embedding_store.py texts.json store.jsonl --url http://127.0.0.1:8090/v1/embeddings
"""

import argparse
import hashlib
import json
import urllib.request


def encode_local(model_name, texts):
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(model_name)
    return [list(map(float, v)) for v in model.encode(texts, convert_to_numpy=True, show_progress_bar=False)]


def encode_remote(url, model_name, texts):
    body = json.dumps({"model": model_name, "input": texts}).encode()
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=120) as res:
        reply = json.load(res)
    out = [None] * len(texts)
    for item in reply["data"]:
        out[item["index"]] = item["embedding"]
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("texts")
    parser.add_argument("store")
    parser.add_argument("--model", default="all-MiniLM-L6-v2")
    parser.add_argument("--url")
    args = parser.parse_args()

    with open(args.texts, encoding="utf-8") as f:
        texts = sorted({t.strip() for t in json.load(f) if t.strip()})
    vectors = encode_remote(args.url, args.model, texts) if args.url else encode_local(args.model, texts)
    dimension = len(vectors[0])

    rows = []
    for text, values in zip(texts, vectors):
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        rows.append((key, {"sha256": key, "text": text, "values": values}))
    rows.sort(key=lambda r: r[0])
    with open(args.store, "w", encoding="utf-8") as f:
        header = {"format": "entangle-embeddings", "version": 1, "model": args.model, "dimension": dimension}
        f.write(json.dumps(header) + "\n")
        for _, row in rows:
            f.write(json.dumps(row) + "\n")
    print(f"wrote {len(rows)} vectors of dimension {dimension} to {args.store}")


if __name__ == "__main__":
    main()
