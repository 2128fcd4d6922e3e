"""Loopback implementation of the remote ``POST /solve`` protocol.

Meant for integration tests and local experiments: it runs in a background
thread on 127.0.0.1 and answers with a local backend.
"""

from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
import json
import threading
import time

from .annealing import SaParams, simulated_annealing
from .brute import brute_force
from .remote import decode_request


class LoopbackServer:
    """Serve ``/solve`` with ``brute`` or ``sa`` until closed.

    ``max_sites`` is the advertised capacity (HTTP 413 beyond it).  ``delay``
    stalls each answer, and ``mangle`` may rewrite the response dict before it
    is sent; both exist to exercise client error paths.

    >>> with LoopbackServer() as srv:          # doctest: +SKIP
    ...     remote_solve(problem, srv.url)
    """

    def __init__(self, backend="brute", max_sites=26, delay=0.0, mangle=None,
                 sa_params=SaParams()):
        self.backend = backend
        self.max_sites = max_sites
        self.delay = delay
        self.mangle = mangle
        self.sa_params = sa_params
        self.requests = []
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), self._handler_class())
        self._httpd.daemon_threads = True
        self._thread = None

    @property
    def url(self):
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def solve(self, problem):
        if self.backend == "brute":
            return brute_force(problem)
        return simulated_annealing(problem, self.sa_params)

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _reply(self, status, payload):
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_POST(self):
                if self.path.rstrip("/") != "/solve":
                    return self._reply(404, {"error": "not found"})
                length = int(self.headers.get("Content-Length", 0))
                try:
                    payload = json.loads(self.rfile.read(length))
                    server.requests.append({"headers": dict(self.headers), "body": payload})
                    problem = decode_request(payload)
                except (ValueError, KeyError, TypeError, IndexError) as exc:
                    return self._reply(400, {"error": str(exc)})
                if problem.n_sites > server.max_sites:
                    return self._reply(413, {"error": "capacity", "max_n": server.max_sites})
                if server.delay:
                    time.sleep(server.delay)
                result = server.solve(problem)
                answer = {"spins": result.spins.tolist(), "energy": result.energy,
                          "reads_used": int(payload.get("num_reads", 1))}
                if server.mangle is not None:
                    answer = server.mangle(answer)
                return self._reply(200, answer)

        return Handler

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()
