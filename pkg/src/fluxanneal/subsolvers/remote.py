"""Client for a remote annealer speaking the JSON ``POST /solve`` protocol.

Request::

    {"n": int, "J": [[i, j, value], ...], "h": [...], "num_reads": int, "timeout_ms": int}

with couplings listed once per pair (``i < j``).  Response::

    {"spins": [+1/-1, ...], "energy": float, "reads_used": int}
"""

import math
import os
import time

import httpx
import numpy as np

from ..errors import (MalformedResponseError, RemoteCapacityError, RemoteTimeoutError,
                      RemoteTransportError)
from ..ising import IsingProblem, energy
from .base import finalize

TOKEN_ENV = "FLUXANNEAL_REMOTE_TOKEN"


def encode_request(problem, num_reads=1, timeout_ms=10_000):
    rows, cols, vals = problem.triplets()
    return {
        "n": problem.n_sites,
        "J": [[i, j, v] for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist())],
        "h": problem.fields.tolist(),
        "num_reads": int(num_reads),
        "timeout_ms": int(timeout_ms),
    }


def decode_request(payload):
    """Rebuild an :class:`IsingProblem` from a request body (server side)."""
    n = int(payload["n"])
    triplets = payload.get("J", [])
    rows = [int(t[0]) for t in triplets]
    cols = [int(t[1]) for t in triplets]
    vals = [float(t[2]) for t in triplets]
    return IsingProblem.from_triplets(n, rows, cols, vals, payload.get("h") or None)


def decode_response(payload, n):
    """Validate a response body and return ``(spins, energy, reads_used)``."""
    if not isinstance(payload, dict):
        raise MalformedResponseError("response is not a JSON object")
    try:
        spins = payload["spins"]
        reported = payload["energy"]
        reads = payload.get("reads_used", 0)
    except KeyError as exc:
        raise MalformedResponseError(f"response lacks {exc.args[0]!r}") from None
    if not isinstance(spins, list) or len(spins) != n:
        got = len(spins) if isinstance(spins, list) else type(spins).__name__
        raise MalformedResponseError(f"expected {n} spins, got {got}")
    if any(isinstance(v, bool) or v not in (1, -1) for v in spins):
        raise MalformedResponseError("spins must be +1 or -1")
    if isinstance(reported, bool) or not isinstance(reported, (int, float)) \
            or not math.isfinite(reported):
        raise MalformedResponseError("energy must be a finite number")
    if isinstance(reads, bool) or not isinstance(reads, int):
        raise MalformedResponseError("reads_used must be an integer")
    return np.array(spins, dtype=np.int8), float(reported), reads


def greedy_descent(problem, s):
    """Flip single spins while any flip lowers the energy."""
    s = np.array(s, dtype=np.float64)
    field = problem.matvec(s)
    h = problem.fields
    J = problem.dense_couplings() if not problem.is_sparse else problem.csr()
    while True:
        de = -2.0 * s * (field + h)
        i = int(np.argmin(de))
        if de[i] >= -1e-12:
            return s.astype(np.int8)
        s[i] = -s[i]
        col = J[:, [i]].toarray().ravel() if problem.is_sparse else J[:, i]
        field += 2.0 * s[i] * col


def remote_solve(problem, endpoint, timeout=30.0, warm_start=None, num_reads=1,
                 postprocess=False, token=None):
    """Solve ``problem`` on a remote annealer.

    ``endpoint`` is the server base URL; ``/solve`` is appended unless already
    present.  A bearer token is sent when ``token`` is given or
    ``FLUXANNEAL_REMOTE_TOKEN`` is set.  With ``postprocess`` the returned
    sample gets a local greedy descent.

    Raises
    ------
    RemoteTimeoutError, RemoteTransportError, RemoteCapacityError,
    MalformedResponseError
    """
    started = time.perf_counter()
    url = endpoint.rstrip("/")
    if not url.endswith("/solve"):
        url += "/solve"
    headers = {"Content-Type": "application/json"}
    token = token if token is not None else os.environ.get(TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = encode_request(problem, num_reads, timeout_ms=int(timeout * 1000))
    try:
        response = httpx.post(url, json=body, headers=headers, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise RemoteTimeoutError(f"{url}: no answer within {timeout} s") from exc
    except httpx.HTTPError as exc:
        raise RemoteTransportError(f"{url}: {exc}") from exc
    if response.status_code == 413:
        raise RemoteCapacityError(f"{url}: problem with {problem.n_sites} sites rejected")
    if response.status_code != 200:
        raise RemoteTransportError(f"{url}: HTTP {response.status_code}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise MalformedResponseError(f"{url}: response is not JSON") from exc
    spins, reported, _ = decode_response(payload, problem.n_sites)
    actual = energy(problem, spins)
    if abs(actual - reported) > 1e-6 * max(1.0, abs(actual)):
        raise MalformedResponseError(
            f"{url}: reported energy {reported} disagrees with {actual}")
    if postprocess:
        spins = greedy_descent(problem, spins)
    return finalize(problem, spins, "remote", started, warm_start)
