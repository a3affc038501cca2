#!/usr/bin/env python3
"""Embeddings endpoint backed by sentence-transformers.

    POST /v1/embeddings  {"model": "...", "input": ["text", ...]}
    200                  {"data": [{"index": i, "embedding": [...]}], "model": "..."}

Usage:
    python3 tools/embed_server.py [--model all-MiniLM-L6-v2] [--port 8090]
    ENTANGLE_EMBED_URL=http://127.0.0.1:8090/v1/embeddings ./build/tests/acceptance
"""

import argparse
import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger("embed_server")


def make_handler(encode, model_name):
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status, payload):
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/health":
                self._reply(200, {"status": "ok", "model": model_name})
            else:
                self._reply(404, {"error": "not found"})

        def do_POST(self):
            if self.path != "/v1/embeddings":
                self._reply(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                request = json.loads(self.rfile.read(length))
                texts = request["input"]
                if isinstance(texts, str):
                    texts = [texts]
                if not all(isinstance(t, str) for t in texts):
                    raise ValueError("input must be strings")
            except (ValueError, KeyError, TypeError) as exc:
                self._reply(400, {"error": str(exc)})
                return
            vectors = encode(texts)
            data = [{"index": i, "embedding": [float(x) for x in v]} for i, v in enumerate(vectors)]
            self._reply(200, {"data": data, "model": model_name})

        def log_message(self, fmt, *args):
            log.info(fmt, *args)

    return Handler


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--model", default="all-MiniLM-L6-v2")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8090)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(args.model)

    def encode(texts):
        return model.encode(texts, convert_to_numpy=True, show_progress_bar=False)

    server = ThreadingHTTPServer((args.host, args.port), make_handler(encode, args.model))
    log.info("serving %s on http://%s:%d/v1/embeddings", args.model, args.host, args.port)
    server.serve_forever()


if __name__ == "__main__":
    main()
