#!/usr/bin/env python3
"""End-to-end check of `abon remote-eval` against a local stub server."""

import json
import math
import pathlib
import subprocess
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer


class Handler(BaseHTTPRequestHandler):
    calls = []

    def do_POST(self):
        length = int(self.headers.get("content-length", 0))
        body = json.loads(self.rfile.read(length))
        Handler.calls.append(body)
        if body.get("max_tokens") == 1:  # scoring call
            resp = {
                "choices": [{
                    "text": " No",
                    "index": 0,
                    "finish_reason": "stop",
                    "logprobs": {
                        "tokens": [" No"],
                        "token_logprobs": [math.log(0.7)],
                        "top_logprobs": [{
                            " No": math.log(0.7),
                            " Yes": math.log(0.1),
                        }],
                    },
                }],
                "usage": {"prompt_tokens": 9, "completion_tokens": 1,
                          "total_tokens": 10},
            }
        else:
            resp = {
                "choices": [{
                    "text": "a stub completion.",
                    "index": 0,
                    "finish_reason": "stop",
                    "logprobs": None,
                }],
                "usage": {"prompt_tokens": 9, "completion_tokens": 5,
                          "total_tokens": 14},
            }
        payload = json.dumps(resp).encode()
        self.send_response(200)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def main():
    cli = sys.argv[1]
    work = pathlib.Path(sys.argv[2])
    work.mkdir(parents=True, exist_ok=True)

    prompts = work / "prompts.txt"
    prompts.write_text("What is 2+2?\nName a prime number.\n")

    server = HTTPServer(("127.0.0.1", 0), Handler)
    port = server.server_address[1]
    threading.Thread(target=server.serve_forever, daemon=True).start()

    try:
        run = subprocess.run(
            [cli, "--out-dir", str(work / "out"), "--jobs", "2",
             "remote-eval", "--endpoint", f"http://127.0.0.1:{port}",
             "--model", "stub-model", "--prompts-file", str(prompts),
             "--strategy", "fixed", "--n", "4"],
            capture_output=True, text=True, timeout=120)
    finally:
        server.shutdown()

    if run.returncode != 0:
        sys.exit(f"remote-eval failed ({run.returncode}):\n"
                 f"{run.stdout}\n{run.stderr}")

    metrics = (work / "out" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "# abon metrics schema 1", metrics[0]
    row = metrics[2].split(",")
    assert row[0] == "remote-fixed", row
    assert float(row[1]) == 4.0, row           # avg_samples
    assert float(row[3]) == 20.0, row          # avg_tokens = 4 * 5
    assert row[5] == "nan", row                # no latent rewards remotely

    selections = (work / "out" / "selections.jsonl").read_text().splitlines()
    assert len(selections) == 2, selections
    first = json.loads(selections[0])
    assert first["response"] == "a stub completion."
    assert abs(first["best_score"] - 0.7 / 0.8) < 1e-9

    # 2 prompts x (4 generations + 4 scoring calls).
    assert len(Handler.calls) == 16, len(Handler.calls)
    gen_calls = [c for c in Handler.calls if c.get("max_tokens") != 1]
    assert all(c["model"] == "stub-model" for c in gen_calls)
    assert all(c["echo"] is False for c in gen_calls)

    print("remote_smoke: ok")


if __name__ == "__main__":
    main()
