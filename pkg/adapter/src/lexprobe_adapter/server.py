"""Protocol endpoints: stdio loop and HTTP server, plus the CLI."""

from __future__ import annotations

import argparse
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .service import AdapterConfig, HiddenStateModel, selftest_pair


def serve_stdio(model: HiddenStateModel) -> None:
    """One response line per request line; a single request in flight."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        response = model.handle_request(line)
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()


def make_http_server(model: HiddenStateModel, host: str, port: int) -> ThreadingHTTPServer:
    """HTTP endpoint accepting request lines in the POST body.

    Handler threads run concurrently up to the server's capacity, but model
    calls themselves are serialized for deterministic inference.
    """
    inference_lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length).decode("utf-8")
            replies = []
            for line in body.splitlines():
                if not line.strip():
                    continue
                with inference_lock:
                    replies.append(json.dumps(model.handle_request(line)))
            payload = ("\n".join(replies) + "\n").encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer((host, port), Handler)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexprobe-adapter",
        description="Serve per-layer hidden states of a pretrained model over "
        "the line-delimited encoding protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the protocol endpoint")
    serve.add_argument("--model", required=True, help="model name or local path")
    serve.add_argument("--device", default="cpu")
    serve.add_argument("--mode", choices=["stdio", "http"], default="stdio")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8391)
    serve.add_argument("--max-batch", type=int, default=8)

    selftest = sub.add_parser(
        "selftest", help="emit a fixed request/response pair and exit"
    )
    selftest.add_argument("--model", required=True)
    selftest.add_argument("--device", default="cpu")

    coverage = sub.add_parser(
        "coverage", help="fraction of tokens that are single-piece"
    )
    coverage.add_argument("--model", required=True)
    coverage.add_argument("--device", default="cpu")
    coverage.add_argument(
        "--tokens", required=True, help="UTF-8 file with one token per line"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = AdapterConfig(
        model=args.model,
        device=args.device,
        max_batch=getattr(args, "max_batch", 8),
        mode=getattr(args, "mode", "stdio"),
        host=getattr(args, "host", "127.0.0.1"),
        port=getattr(args, "port", 8391),
    )
    try:
        model = HiddenStateModel(config)
    except Exception as exc:  # unloadable model: report and fail cleanly
        sys.stderr.write(json.dumps({"error": "load", "detail": str(exc)}) + "\n")
        return 2

    if args.command == "selftest":
        request_line, response_line = selftest_pair(model)
        sys.stdout.write(request_line + "\n")
        sys.stdout.write(response_line + "\n")
        return 0
    if args.command == "coverage":
        tokens = [
            line.strip()
            for line in Path(args.tokens).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        ratio = model.vocab_coverage(tokens)
        sys.stdout.write(json.dumps({"tokens": len(tokens), "coverage": ratio}) + "\n")
        return 0
    if config.mode == "stdio":
        serve_stdio(model)
        return 0
    server = make_http_server(model, config.host, config.port)
    sys.stderr.write(
        json.dumps({"serving": f"http://{config.host}:{server.server_address[1]}"})
        + "\n"
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
