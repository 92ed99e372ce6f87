"""Objective evaluation: the line-delimited evaluator protocol, synthetic
test surfaces, repeated re-evaluation of incumbents, and split bookkeeping.

Wire protocol (version 1): one JSON object per line over the evaluator's
stdin/stdout. Request: {protocol_version, trial_id, space_name, values,
seed, split}. Response: {trial_id, score, collapsed, metrics, error?} with
error present exactly when score is absent; scores are accuracy fractions
in [0, 1] (percentages fail the range check on purpose). The evaluator
stays resident across trials and exits 0 after {"shutdown": true}.

Timeouts and malformed responses come back as error responses so a search
loop can record a failed trial and continue; a trial_id mismatch raises
ProtocolError because it means the stream is desynchronized. After a
timeout the process is killed and respawned on the next call for the same
reason.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field

from .errors import ProtocolError, ValidationError
from .rng import RngStream, derive_seed
from .space import Configuration, SearchSpace, to_unit_cube

PROTOCOL_VERSION = 1
SPLITS = ("validation", "test")
COLLAPSE_BAND = (0.45, 0.55)
SYNTHETIC_NAMES = ("quadratic", "additive_mix", "collapse_valley")


@dataclass(frozen=True)
class ObjectiveRequest:
    trial_id: int
    space_name: str
    values: dict
    seed: int
    split: str = "validation"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}, got {self.split!r}")

    def to_wire(self) -> dict:
        return {
            "protocol_version": PROTOCOL_VERSION,
            "trial_id": self.trial_id,
            "space_name": self.space_name,
            "values": dict(self.values),
            "seed": self.seed,
            "split": self.split,
        }


def make_request(trial_id: int, space: SearchSpace, values: dict, seed: int, split: str = "validation") -> ObjectiveRequest:
    space.validate_values(values)
    return ObjectiveRequest(trial_id, space.name, dict(values), seed, split)


@dataclass
class ObjectiveResponse:
    trial_id: int
    score: float | None = None
    collapsed: bool = False
    metrics: dict = field(default_factory=dict)
    error: str | None = None

    def __post_init__(self):
        if (self.error is None) == (self.score is None):
            raise ValidationError("response needs exactly one of score or error")


def response_from_wire(doc, chance_level: float | None = None) -> ObjectiveResponse:
    """Validate a decoded response object; unknown keys are ignored.

    When the evaluator omits the collapsed flag, the fallback rule labels
    score <= chance_level as collapsed (no labeling if chance_level is None).
    """
    if not isinstance(doc, dict):
        raise ProtocolError(f"response must be an object, got {type(doc).__name__}")
    if "trial_id" not in doc or isinstance(doc["trial_id"], bool) or not isinstance(doc["trial_id"], int):
        raise ProtocolError("response needs an integer trial_id")
    error = doc.get("error")
    score = doc.get("score")
    if error is not None:
        if not isinstance(error, str):
            raise ProtocolError("error must be a string")
        if score is not None:
            raise ProtocolError("response cannot carry both score and error")
        return ObjectiveResponse(trial_id=doc["trial_id"], error=error)
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise ProtocolError("response needs a numeric score or an error")
    if not 0.0 <= score <= 1.0 or math.isnan(score):
        raise ProtocolError(f"score must be an accuracy fraction in [0, 1], got {score}")
    if "collapsed" in doc:
        if not isinstance(doc["collapsed"], bool):
            raise ProtocolError("collapsed must be a boolean")
        collapsed = doc["collapsed"]
    else:
        collapsed = chance_level is not None and score <= chance_level
    metrics = doc.get("metrics", {})
    if not isinstance(metrics, dict):
        raise ProtocolError("metrics must be an object")
    return ObjectiveResponse(
        trial_id=doc["trial_id"], score=float(score), collapsed=collapsed, metrics=metrics
    )


class _PipeReader(threading.Thread):
    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: queue.Queue = queue.Queue()
        self.start()

    def run(self):
        for line in self.stream:
            self.lines.put(line)
        self.lines.put(None)


class ExternalEvaluator:
    """Resident subprocess speaking the line protocol."""

    def __init__(self, command, timeout: float | None = None, chance_level: float | None = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.chance_level = chance_level
        self._proc: subprocess.Popen | None = None
        self._reader: _PipeReader | None = None

    def _ensure_process(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._reader = _PipeReader(self._proc.stdout)

    def _kill(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None
        self._reader = None

    def evaluate(self, request: ObjectiveRequest) -> ObjectiveResponse:
        try:
            self._ensure_process()
            self._proc.stdin.write(json.dumps(request.to_wire(), sort_keys=True) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            self._kill()
            return ObjectiveResponse(request.trial_id, error=f"evaluator unreachable: {exc}")
        try:
            line = self._reader.lines.get(timeout=self.timeout)
        except queue.Empty:
            self._kill()
            return ObjectiveResponse(
                request.trial_id, error=f"evaluator timed out after {self.timeout}s"
            )
        if line is None:
            try:
                # EOF can arrive before the child is reaped; wait for the code
                code = self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                code = self._proc.poll()
            self._kill()
            return ObjectiveResponse(
                request.trial_id, error=f"evaluator closed its output (exit code {code})"
            )
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            return ObjectiveResponse(request.trial_id, error=f"malformed response line: {exc}")
        try:
            resp = response_from_wire(doc, chance_level=self.chance_level)
        except ProtocolError as exc:
            return ObjectiveResponse(request.trial_id, error=str(exc))
        if resp.trial_id != request.trial_id:
            raise ProtocolError(
                f"response trial_id {resp.trial_id} does not match request {request.trial_id}"
            )
        return resp

    def shutdown(self) -> int | None:
        """Send the shutdown message and wait; returns the exit code."""
        if self._proc is None:
            return None
        try:
            self._proc.stdin.write(json.dumps({"shutdown": True}) + "\n")
            self._proc.stdin.flush()
            self._proc.stdin.close()
        except (OSError, ValueError):
            pass
        try:
            code = self._proc.wait(timeout=10.0)
        except subprocess.TimeoutExpired:
            self._kill()
            return None
        self._proc = None
        self._reader = None
        return code

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.shutdown()
        self._kill()


def evaluate_external(request: ObjectiveRequest, evaluator: ExternalEvaluator) -> ObjectiveResponse:
    return evaluator.evaluate(request)


def _quadratic_score(cfg: Configuration) -> float:
    u = to_unit_cube(cfg)
    u0 = to_unit_cube(Configuration(cfg.space, cfg.space.defaults()))
    return max(0.0, 1.0 - 4.0 * float(((u - u0) ** 2).mean()))


def synthetic_objective(name: str, cfg: Configuration) -> ObjectiveResponse:
    """Deterministic desk-scale surfaces.

    quadratic: 1 - 4*mean squared unit-cube distance to the space defaults,
    floored at 0 (score 1.0 exactly at the defaults).
    additive_mix: sum of per-coordinate terms (i+1)*u_i normalized by the
    weight total, so later dimensions matter more.
    collapse_valley: quadratic base, but p_grayscale (or the first
    dimension's unit coordinate if the space has no p_grayscale) inside
    [0.45, 0.55] collapses the run: collapsed=true, score scaled by 0.1.
    """
    if name == "quadratic":
        return ObjectiveResponse(0, score=_quadratic_score(cfg), metrics={"surface_min": 0.0})
    if name == "additive_mix":
        u = to_unit_cube(cfg)
        weights = [i + 1.0 for i in range(len(u))]
        score = float(sum(w * x for w, x in zip(weights, u)) / sum(weights))
        return ObjectiveResponse(0, score=score)
    if name == "collapse_valley":
        base = _quadratic_score(cfg)
        if "p_grayscale" in cfg.values:
            coord = float(cfg.values["p_grayscale"])
        else:
            coord = float(to_unit_cube(cfg)[0])
        lo, hi = COLLAPSE_BAND
        if lo <= coord <= hi:
            return ObjectiveResponse(
                0, score=0.1 * base, collapsed=True, metrics={"embedding_std": 0.001}
            )
        return ObjectiveResponse(0, score=base, collapsed=False, metrics={"embedding_std": 0.05})
    raise ValidationError(f"unknown synthetic objective {name!r}; expected one of {SYNTHETIC_NAMES}")


class SyntheticEvaluator:
    """In-process evaluator over a fixed space, wire-compatible in spirit."""

    def __init__(self, name: str, space: SearchSpace):
        if name not in SYNTHETIC_NAMES:
            raise ValidationError(f"unknown synthetic objective {name!r}")
        self.name = name
        self.space = space

    def evaluate(self, request: ObjectiveRequest) -> ObjectiveResponse:
        cfg = Configuration(self.space, request.values)
        resp = synthetic_objective(self.name, cfg)
        resp.trial_id = request.trial_id
        return resp

    def shutdown(self) -> int:
        return 0


def objective_from_evaluator(evaluator, space: SearchSpace, split: str = "validation", measure_time: bool = False):
    """Adapt an evaluator to the run_search callable contract."""

    def evaluate(trial_id: int, values: dict, seed: int) -> dict:
        request = make_request(trial_id, space, values, seed, split)
        t0 = time.perf_counter()
        resp = evaluator.evaluate(request)
        wall = time.perf_counter() - t0 if measure_time else 0.0
        if resp.error is not None:
            raise ProtocolError(resp.error)
        return {
            "score": resp.score,
            "collapsed": resp.collapsed,
            "metrics": resp.metrics,
            "wall_time": wall,
        }

    return evaluate


DEFAULT_REEVAL_REPEATS = 5


def reevaluate_best(state, k: int, evaluate, repeats: int = DEFAULT_REEVAL_REPEATS) -> list[dict]:
    """Evaluate each of the top-k configurations ``repeats`` times with
    distinct derived seeds; returns mean, standard error, raw scores, and
    per-repeat failures for each."""
    from .bo import best_trials  # local import to keep module load acyclic

    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    report = []
    for trial in best_trials(state, k):
        scores, failures = [], []
        for r in range(repeats):
            seed = derive_seed(state.seed, "reeval", trial.id, r)
            try:
                result = evaluate(trial.id, dict(trial.configuration.values), seed)
                scores.append(float(result["score"]))
            except Exception as exc:
                failures.append(str(exc))
        mean = sum(scores) / len(scores) if scores else None
        if len(scores) >= 2:
            var = sum((s - mean) ** 2 for s in scores) / (len(scores) - 1)
            stderr = math.sqrt(var / len(scores))
        else:
            stderr = 0.0 if scores else None
        report.append(
            {
                "trial_id": trial.id,
                "values": dict(trial.configuration.values),
                "search_score": trial.score,
                "scores": scores,
                "failures": failures,
                "mean": mean,
                "stderr": stderr,
            }
        )
    return report


@dataclass(frozen=True)
class SplitSpec:
    dataset_name: str
    validation_fraction: float = 0.1
    split_seed: int = 0
    use_provided_split: bool = False

    def __post_init__(self):
        if not self.use_provided_split and not 0.0 < self.validation_fraction < 1.0:
            raise ValidationError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )


def make_split(spec: SplitSpec, n_train: int) -> dict:
    """Deterministic index partition, or a pass-through marker for datasets
    that ship their own split."""
    if spec.use_provided_split:
        return {"provided": True, "dataset": spec.dataset_name}
    if n_train < 10:
        raise ValidationError(f"n_train must be >= 10, got {n_train}")
    n_val = int(math.floor(spec.validation_fraction * n_train + 0.5))
    rng = RngStream.from_keys(spec.split_seed, "split", spec.dataset_name)
    perm = rng.shuffled(n_train)
    return {
        "provided": False,
        "dataset": spec.dataset_name,
        "validation": sorted(perm[:n_val]),
        "train": sorted(perm[n_val:]),
    }
