"""Harness tests: wire schemas, the external evaluator lifecycle, synthetic
surfaces, repeated re-evaluation, and split bookkeeping."""

import inspect
import os
import sys

import pytest

from groupaugment.bo import SearchState, report, run_search, suggest
from groupaugment.errors import ProtocolError, ValidationError
from groupaugment.harness import (
    DEFAULT_REEVAL_REPEATS,
    ExternalEvaluator,
    ObjectiveRequest,
    ObjectiveResponse,
    SplitSpec,
    SyntheticEvaluator,
    evaluate_external,
    make_request,
    make_split,
    objective_from_evaluator,
    reevaluate_best,
    response_from_wire,
    synthetic_objective,
)
from groupaugment.rng import RngStream
from groupaugment.space import Configuration, Dimension, SearchSpace, builtin_space

TOY = os.path.join(os.path.dirname(__file__), "toy_evaluator.py")


def toy(mode, **kwargs):
    return ExternalEvaluator([sys.executable, TOY, mode], **kwargs)


def line_space():
    return SearchSpace("line", (Dimension("x", "float", default=0.7, lo=0.0, hi=1.0),))


# --- schemas ---


def test_request_wire_format():
    space = builtin_space("randaugment")
    req = make_request(4, space, {"num_ops": 3, "magnitude": 9}, seed=17, split="test")
    assert req.to_wire() == {
        "protocol_version": 1,
        "trial_id": 4,
        "space_name": "randaugment",
        "values": {"num_ops": 3, "magnitude": 9},
        "seed": 17,
        "split": "test",
    }


def test_request_validation():
    space = builtin_space("randaugment")
    with pytest.raises(ValidationError):
        make_request(0, space, {"num_ops": 16, "magnitude": 9}, seed=1)
    with pytest.raises(ValidationError):
        ObjectiveRequest(0, "randaugment", {}, 1, split="train")


def test_response_invariant():
    with pytest.raises(ValidationError):
        ObjectiveResponse(0)
    with pytest.raises(ValidationError):
        ObjectiveResponse(0, score=0.5, error="boom")
    ObjectiveResponse(0, score=0.5)
    ObjectiveResponse(0, error="boom")


def test_response_from_wire_validation():
    ok = response_from_wire({"trial_id": 3, "score": 0.25, "collapsed": True, "metrics": {"a": 1}})
    assert (ok.trial_id, ok.score, ok.collapsed, ok.metrics) == (3, 0.25, True, {"a": 1})
    err = response_from_wire({"trial_id": 3, "error": "cuda OOM"})
    assert err.error == "cuda OOM" and err.score is None
    with pytest.raises(ProtocolError):
        response_from_wire({"score": 0.5})
    with pytest.raises(ProtocolError):
        response_from_wire({"trial_id": True, "score": 0.5})
    with pytest.raises(ProtocolError):
        response_from_wire({"trial_id": 1, "score": 50.0})  # percentages rejected
    with pytest.raises(ProtocolError):
        response_from_wire({"trial_id": 1, "score": 0.5, "error": "x"})
    with pytest.raises(ProtocolError):
        response_from_wire({"trial_id": 1})
    with pytest.raises(ProtocolError):
        response_from_wire([1, 2])
    with pytest.raises(ProtocolError):
        response_from_wire({"trial_id": 1, "score": 0.5, "metrics": 3})


def test_collapsed_fallback_rule():
    low = response_from_wire({"trial_id": 0, "score": 0.08}, chance_level=0.1)
    assert low.collapsed
    high = response_from_wire({"trial_id": 0, "score": 0.5}, chance_level=0.1)
    assert not high.collapsed
    unlabeled = response_from_wire({"trial_id": 0, "score": 0.08})
    assert not unlabeled.collapsed
    explicit = response_from_wire({"trial_id": 0, "score": 0.08, "collapsed": False}, chance_level=0.1)
    assert not explicit.collapsed


# --- external evaluator ---


def req(trial_id=0, x=0.5, seed=1):
    return make_request(trial_id, line_space(), {"x": x}, seed=seed)


def test_echo_evaluator_loopback():
    with toy("echo") as ev:
        resp = evaluate_external(req(trial_id=7), ev)
        assert resp.trial_id == 7
        assert resp.score == 0.5
        assert resp.metrics == {"echo": 1.0}
        pid = ev._proc.pid
        again = ev.evaluate(req(trial_id=8))
        assert again.score == 0.5
        assert ev._proc.pid == pid  # resident across trials


def test_malformed_response_becomes_error():
    with toy("malformed") as ev:
        resp = ev.evaluate(req())
        assert resp.error is not None and "malformed" in resp.error
        assert resp.score is None


def test_trial_id_mismatch_raises_protocol_error():
    with toy("mismatch") as ev:
        with pytest.raises(ProtocolError):
            ev.evaluate(req(trial_id=5))


def test_timeout_then_respawn():
    with toy("slow", timeout=0.4) as ev:
        resp = ev.evaluate(req())
        assert resp.error is not None and "timed out" in resp.error
        assert ev._proc is None
        # after the kill, the evaluator restarts cleanly on the next call
        ev.command = [sys.executable, TOY, "echo"]
        assert ev.evaluate(req()).score == 0.5


def test_dead_evaluator_reports_exit():
    with toy("die") as ev:
        resp = ev.evaluate(req())
        assert resp.error is not None and "exit code 3" in resp.error


def test_percentage_score_rejected():
    with toy("percent") as ev:
        resp = ev.evaluate(req())
        assert resp.error is not None and "[0, 1]" in resp.error


def test_graceful_shutdown_exit_zero():
    ev = toy("echo")
    assert ev.evaluate(req()).score == 0.5
    assert ev.shutdown() == 0


def test_run_search_with_external_evaluator():
    space = line_space()
    with toy("compute") as ev:
        objective = objective_from_evaluator(ev, space, measure_time=True)
        state = run_search(space, objective, budget=4, seed=3)
    assert state.terminal_count == 4
    for t in state.trials("completed"):
        assert t.score == pytest.approx(t.configuration.values["x"])


# --- synthetic objectives ---


def test_quadratic_optimum_scores_one():
    for name in ("randaugment", "simsiam_aug"):
        space = builtin_space(name)
        cfg = Configuration(space, space.defaults())
        assert synthetic_objective("quadratic", cfg).score == 1.0


def test_collapse_valley_band():
    space = builtin_space("simsiam_aug")
    values = space.defaults()
    for p, want in ((0.5, True), (0.45, True), (0.55, True), (0.44, False), (0.56, False)):
        cfg = Configuration(space, {**values, "p_grayscale": p})
        resp = synthetic_objective("collapse_valley", cfg)
        assert resp.collapsed is want
        if want:
            assert resp.metrics["embedding_std"] == 0.001
            assert resp.score < synthetic_objective("quadratic", cfg).score


def test_collapse_valley_without_grayscale_uses_first_dim():
    space = line_space()
    assert synthetic_objective("collapse_valley", Configuration(space, {"x": 0.5})).collapsed
    assert not synthetic_objective("collapse_valley", Configuration(space, {"x": 0.9})).collapsed


def test_additive_mix_hand_case():
    space = builtin_space("randaugment")
    cfg = Configuration(space, {"num_ops": 3, "magnitude": 4})
    # coords: (3-1)/14 and 4/30; weights 1 and 2
    want = (1.0 * (2 / 14) + 2.0 * (4 / 30)) / 3.0
    assert synthetic_objective("additive_mix", cfg).score == pytest.approx(want, rel=1e-12)


def test_synthetic_unknown_name():
    with pytest.raises(ValidationError):
        synthetic_objective("ackley", Configuration(line_space(), {"x": 0.5}))


def test_synthetic_purity():
    space = builtin_space("simsiam_aug")
    cfg = Configuration(space, space.defaults())
    a = synthetic_objective("collapse_valley", cfg)
    b = synthetic_objective("collapse_valley", cfg)
    assert (a.score, a.collapsed, a.metrics) == (b.score, b.collapsed, b.metrics)


def test_synthetic_evaluator_propagates_trial_id():
    space = builtin_space("randaugment")
    ev = SyntheticEvaluator("quadratic", space)
    resp = ev.evaluate(make_request(11, space, space.defaults(), seed=1))
    assert resp.trial_id == 11
    assert ev.shutdown() == 0


# --- reevaluate_best ---


def seeded_state(scores):
    state = SearchState(line_space(), budget=10, seed=5)
    for i, s in enumerate(scores):
        suggest(state)
        trial = state.history[i]
        report(
            state,
            type(trial)(id=i, configuration=trial.configuration, score=s, status="completed"),
        )
    return state


def test_reeval_default_repeats_is_five():
    assert DEFAULT_REEVAL_REPEATS == 5
    assert inspect.signature(reevaluate_best).parameters["repeats"].default == 5


def test_reeval_deterministic_objective_zero_stderr():
    state = seeded_state([0.2, 0.9, 0.4])

    def objective(trial_id, values, seed):
        return {"score": 0.75}

    out = reevaluate_best(state, k=2, evaluate=objective)
    assert [r["trial_id"] for r in out] == [1, 2]
    for r in out:
        assert r["scores"] == [0.75] * 5
        assert r["mean"] == 0.75
        assert r["stderr"] == 0.0
        assert r["failures"] == []


def test_reeval_uses_distinct_seeds():
    state = seeded_state([0.2, 0.9, 0.4])
    seen = []

    def objective(trial_id, values, seed):
        seen.append(seed)
        return {"score": 0.5}

    reevaluate_best(state, k=3, evaluate=objective, repeats=4)
    assert len(seen) == 12
    assert len(set(seen)) == 12


def test_reeval_noisy_se_matches_theory():
    state = seeded_state([0.9])
    sigma = 0.05
    repeats = 25

    def objective(trial_id, values, seed):
        noise = RngStream(seed).numpy_rng().standard_normal()
        return {"score": min(1.0, max(0.0, 0.5 + sigma * noise))}

    (row,) = reevaluate_best(state, k=1, evaluate=objective, repeats=repeats)
    theory = sigma / repeats**0.5
    assert theory / 3 <= row["stderr"] <= 3 * theory


def test_reeval_records_failures():
    state = seeded_state([0.9])

    def objective(trial_id, values, seed):
        if seed % 2 == 0:
            raise RuntimeError("flaky")
        return {"score": 0.5}

    (row,) = reevaluate_best(state, k=1, evaluate=objective, repeats=6)
    assert len(row["scores"]) + len(row["failures"]) == 6
    with pytest.raises(ValidationError):
        reevaluate_best(state, k=1, evaluate=objective, repeats=0)


# --- splits ---


def test_split_paper_fraction_case():
    spec = SplitSpec("cifar10", validation_fraction=0.1, split_seed=7)
    out = make_split(spec, 50_000)
    assert len(out["validation"]) == 5_000
    assert len(out["train"]) == 45_000


def test_split_deterministic_and_partition():
    spec = SplitSpec("cifar10", validation_fraction=0.25, split_seed=9)
    a = make_split(spec, 200)
    b = make_split(spec, 200)
    assert a == b
    val, train = set(a["validation"]), set(a["train"])
    assert val.isdisjoint(train)
    assert val | train == set(range(200))
    assert len(a["validation"]) == 50


def test_split_keys_on_dataset_and_seed():
    base = make_split(SplitSpec("cifar10", split_seed=1), 100)
    other_seed = make_split(SplitSpec("cifar10", split_seed=2), 100)
    other_name = make_split(SplitSpec("cifar100", split_seed=1), 100)
    assert base["validation"] != other_seed["validation"]
    assert base["validation"] != other_name["validation"]


def test_split_provided_marker():
    out = make_split(SplitSpec("dermamnist", use_provided_split=True), 7007)
    assert out == {"provided": True, "dataset": "dermamnist"}


def test_split_validation_errors():
    with pytest.raises(ValidationError):
        SplitSpec("x", validation_fraction=0.0)
    with pytest.raises(ValidationError):
        SplitSpec("x", validation_fraction=1.0)
    with pytest.raises(ValidationError):
        make_split(SplitSpec("x", validation_fraction=0.1), 5)
