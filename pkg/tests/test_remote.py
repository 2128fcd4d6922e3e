"""Remote backend against an in-process loopback server."""

import numpy as np
import pytest

from conftest import random_problem
from fluxanneal.errors import (CapacityError, MalformedResponseError, RemoteCapacityError,
                               RemoteError, RemoteTimeoutError, RemoteTransportError)
from fluxanneal.harness import PipelineSpec, run_pipeline
from fluxanneal.ising import energy
from fluxanneal.subsolvers import LoopbackServer, brute_force, remote_solve, solve
from fluxanneal.subsolvers.remote import decode_request, encode_request, greedy_descent


def test_request_roundtrip():
    P = random_problem(6, 1)
    body = encode_request(P, num_reads=3, timeout_ms=500)
    assert body["n"] == 6 and body["num_reads"] == 3 and body["timeout_ms"] == 500
    assert all(i < j for i, j, _ in body["J"])
    assert decode_request(body) == P


def test_loopback_matches_brute_force():
    P = random_problem(10, 2)
    with LoopbackServer() as srv:
        res = remote_solve(P, srv.url)
    assert res.backend == "remote"
    assert res.energy == pytest.approx(brute_force(P).energy, abs=1e-12)
    assert len(srv.requests) == 1


def test_endpoint_with_explicit_path_and_solve_dispatch():
    P = random_problem(5, 3)
    with LoopbackServer() as srv:
        a = remote_solve(P, srv.url + "/solve")
        b = solve(P, "remote", endpoint=srv.url)
    assert a.energy == b.energy


def test_bearer_token_from_environment(monkeypatch):
    monkeypatch.setenv("FLUXANNEAL_REMOTE_TOKEN", "s3cret")
    with LoopbackServer() as srv:
        remote_solve(random_problem(4, 0), srv.url)
    assert srv.requests[0]["headers"]["Authorization"] == "Bearer s3cret"


def test_no_token_no_header(monkeypatch):
    monkeypatch.delenv("FLUXANNEAL_REMOTE_TOKEN", raising=False)
    with LoopbackServer() as srv:
        remote_solve(random_problem(4, 0), srv.url)
    assert "Authorization" not in srv.requests[0]["headers"]


def _all_plus(answer):
    answer["spins"] = [1] * len(answer["spins"])
    return answer


def test_worse_remote_answer_yields_warm_start():
    P = random_problem(8, 5)
    ground = brute_force(P).spins

    def bad(answer):
        answer = _all_plus(answer)
        answer["energy"] = energy(P, answer["spins"])
        return answer

    assert energy(P, np.ones(8)) > energy(P, ground)
    with LoopbackServer(mangle=bad) as srv:
        res = remote_solve(P, srv.url, warm_start=ground)
    assert res.warm_start_used and np.array_equal(res.spins, ground)


def test_postprocess_descends_locally():
    P = random_problem(12, 6)

    def bad(answer):
        answer = _all_plus(answer)
        answer["energy"] = energy(P, answer["spins"])
        return answer

    with LoopbackServer(mangle=bad) as srv:
        raw = remote_solve(P, srv.url)
        polished = remote_solve(P, srv.url, postprocess=True)
    assert polished.energy <= raw.energy
    assert np.array_equal(polished.spins, greedy_descent(P, np.ones(12)))


@pytest.mark.parametrize("mangle", [
    lambda a: {**a, "spins": a["spins"][:-1]},
    lambda a: {**a, "spins": [0] + a["spins"][1:]},
    lambda a: {k: v for k, v in a.items() if k != "energy"},
    lambda a: {**a, "energy": "low"},
    lambda a: {**a, "energy": a["energy"] - 1.0},
    lambda a: [1, 2, 3],
])
def test_malformed_responses(mangle):
    with LoopbackServer(mangle=mangle) as srv:
        with pytest.raises(MalformedResponseError):
            remote_solve(random_problem(6, 1), srv.url)


def test_timeout():
    with LoopbackServer(delay=1.0) as srv:
        with pytest.raises(RemoteTimeoutError):
            remote_solve(random_problem(4, 0), srv.url, timeout=0.2)


def test_capacity_rejection():
    with LoopbackServer(max_sites=5) as srv:
        with pytest.raises(RemoteCapacityError) as info:
            remote_solve(random_problem(6, 0), srv.url)
    assert isinstance(info.value, CapacityError)


def test_unreachable_endpoint():
    with LoopbackServer() as srv:
        url = srv.url
    with pytest.raises(RemoteTransportError):
        remote_solve(random_problem(3, 0), url, timeout=2.0)


def test_bad_path_is_transport_error():
    with LoopbackServer() as srv:
        with pytest.raises(RemoteTransportError):
            remote_solve(random_problem(3, 0), srv.url + "/v2/solve")


def test_pipeline_falls_back_on_remote_failure():
    P = random_problem(20, 7)
    phibar = np.random.default_rng(0).normal(size=20)
    with LoopbackServer(max_sites=4) as srv:
        pipe = PipelineSpec("hqa", 8, backend="remote", endpoint=srv.url, fallback="tabu")
        rec = run_pipeline(P, pipe, 0, phibar=phibar)
        strict = PipelineSpec("hqa", 8, backend="remote", endpoint=srv.url, fallback=None)
        with pytest.raises(RemoteError):
            run_pipeline(P, strict, 0, phibar=phibar)
    assert rec.fallback.startswith("tabu: RemoteCapacityError")
    local = run_pipeline(P, PipelineSpec("hqa", 8, backend="tabu"), 0, phibar=phibar)
    assert rec.energy == local.energy


def test_pipeline_uses_remote_when_available():
    P = random_problem(20, 7)
    phibar = np.random.default_rng(0).normal(size=20)
    with LoopbackServer() as srv:
        rec = run_pipeline(P, PipelineSpec("hqa", 10, backend="remote", endpoint=srv.url), 0,
                           phibar=phibar)
    exact = run_pipeline(P, PipelineSpec("hqa", 10, backend="brute"), 0, phibar=phibar)
    assert rec.fallback is None
    assert rec.energy == pytest.approx(exact.energy, abs=1e-12)
