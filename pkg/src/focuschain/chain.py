"""Inference-time reasoning loop: plan a sub-question with an image focus,
answer it on the focused subset only, then decide whether to stop.

The loop is split into three stage-tagged calls so the answering call can
physically attach nothing beyond the focused images. A step budget bounds the
loop; at exhaustion one forced stop call synthesizes the final answer (falling
back to the last intermediate answer if the model refuses to produce one).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import prompts
from .backend import Backend, ImagePart, ModelRequest, TextPart, extract_json
from .core import ImageRef
from .errors import ChainError, ParseError, PipelineError, ValidationError

DEFAULT_MAX_STEPS = 8


@dataclass(frozen=True)
class ChainConfig:
    max_steps: int = DEFAULT_MAX_STEPS
    stop_forcing: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")


@dataclass(frozen=True)
class ChainExecStep:
    sub_question: str
    focus: tuple[int, ...]
    answer: str
    stop: bool

    def to_json(self) -> dict:
        return {
            "sub_question": self.sub_question,
            "focus": list(self.focus),
            "answer": self.answer,
            "stop": self.stop,
        }


@dataclass(frozen=True)
class ChainTrace:
    question: str
    images: tuple[ImageRef, ...]
    steps: tuple[ChainExecStep, ...]
    final_answer: str
    forced_stop: bool

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "images": [ref.to_json() for ref in self.images],
            "steps": [s.to_json() for s in self.steps],
            "final_answer": self.final_answer,
            "forced_stop": self.forced_stop,
        }


def validate_trace(trace: ChainTrace, max_steps: int) -> None:
    if not trace.steps:
        raise ValidationError("trace must contain at least one step")
    if len(trace.steps) > max_steps:
        raise ValidationError(f"trace has {len(trace.steps)} steps, budget is {max_steps}")
    if not (trace.steps[-1].stop or trace.forced_stop):
        raise ValidationError("trace must end with a stop signal or a forced stop")
    n = len(trace.images)
    for step in trace.steps:
        if not step.focus:
            raise ValidationError("step focus must be non-empty")
        if any(not 0 <= idx < n for idx in step.focus):
            raise ValidationError(f"step focus {step.focus} outside 0..{n - 1}")


@dataclass(frozen=True)
class PlannedStep:
    sub_question: str
    focus: tuple[int, ...]
    warnings: tuple[str, ...] = ()


def plan_step(
    question: str, images: list[ImageRef] | tuple[ImageRef, ...], history: list[str], backend: Backend
) -> PlannedStep:
    """Ask for the next sub-question and its minimal focus set."""
    history_text = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(history)) or "(none yet)"
    text = prompts.CHAIN_PLAN_PROMPT.format(question=question, history=history_text)
    parts = [TextPart(text)] + [ImagePart(ref) for ref in images]
    response = backend.complete(ModelRequest(role_tag="chain_plan", parts=tuple(parts)))

    try:
        data = extract_json(response.text)
    except ParseError as exc:
        raise ParseError(f"unparseable plan: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("plan completion is not a JSON object")
    sub_question = data.get("sub_question")
    if not isinstance(sub_question, str) or not sub_question.strip():
        raise ParseError("plan lacks a sub_question")
    focus_raw = data.get("focus")
    if isinstance(focus_raw, int) and not isinstance(focus_raw, bool):
        focus_raw = [focus_raw]
    if not isinstance(focus_raw, list):
        raise ParseError("plan lacks a focus list")

    warnings = []
    focus: list[int] = []
    for idx in focus_raw:
        if type(idx) is int and 0 <= idx < len(images):
            if idx not in focus:
                focus.append(idx)
        else:
            warnings.append(f"dropped out-of-range focus index {idx!r}")
    if not focus:
        raise PipelineError("plan focus is empty after clamping to valid image indices")
    return PlannedStep(
        sub_question=sub_question.strip(), focus=tuple(sorted(focus)), warnings=tuple(warnings)
    )


def answer_step(
    sub_question: str, focused_images: list[ImageRef] | tuple[ImageRef, ...], backend: Backend
) -> str:
    """Answer a sub-question with only the focused images attached."""
    if not focused_images:
        raise ValidationError("answer_step() requires a non-empty focus")
    text = prompts.CHAIN_ANSWER_PROMPT.format(sub_question=sub_question)
    parts = [TextPart(text)] + [ImagePart(ref) for ref in focused_images]
    response = backend.complete(ModelRequest(role_tag="chain_answer", parts=tuple(parts)))
    answer = response.text.strip()
    if not answer:
        raise PipelineError("model returned an empty answer")
    return answer


def decide_stop(
    question: str, qa_pairs: list[tuple[str, str]], backend: Backend, force_final: bool = False
) -> tuple[bool, str | None]:
    """Ask whether the collected answers suffice; returns (stop, final_answer)."""
    if not qa_pairs:
        raise ValidationError("decide_stop() requires at least one answered sub-question")
    qa_text = "\n".join(f"{i + 1}. Q: {q}\n   A: {a}" for i, (q, a) in enumerate(qa_pairs))
    template = prompts.CHAIN_STOP_FORCED_PROMPT if force_final else prompts.CHAIN_STOP_PROMPT
    text = template.format(question=question, qa_pairs=qa_text)
    response = backend.complete(ModelRequest(role_tag="chain_stop", parts=(TextPart(text),)))

    try:
        data = extract_json(response.text)
    except ParseError as exc:
        raise ParseError(f"unparseable stop decision: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("stop decision is not a JSON object")
    stop = data.get("stop")
    if not isinstance(stop, bool):
        raise ParseError("stop decision lacks a boolean 'stop'")
    final_answer = data.get("final_answer")
    if final_answer is not None and not isinstance(final_answer, str):
        final_answer = str(final_answer)
    if force_final:
        stop = True
    if stop:
        if not final_answer or not final_answer.strip():
            raise ParseError("stop=true without a final_answer")
        return True, final_answer.strip()
    return False, None


def run_chain(
    question: str,
    images: list[ImageRef] | tuple[ImageRef, ...],
    backend: Backend,
    config: ChainConfig | None = None,
) -> ChainTrace:
    """Execute the full plan/answer/stop loop for one question."""
    if not images:
        raise ValidationError("run_chain() requires at least one image")
    config = config or ChainConfig()
    images = tuple(images)

    steps: list[ChainExecStep] = []
    history: list[str] = []
    qa_pairs: list[tuple[str, str]] = []
    final_answer: str | None = None
    forced = False

    for step_no in range(1, config.max_steps + 1):
        try:
            planned = plan_step(question, images, history, backend)
            answer = answer_step(
                planned.sub_question, [images[i] for i in planned.focus], backend
            )
            history.append(planned.sub_question)
            qa_pairs.append((planned.sub_question, answer))
            stop, maybe_final = decide_stop(question, qa_pairs, backend)
        except PipelineError as exc:
            raise ChainError(step_no, type(exc).__name__, exc) from exc
        steps.append(
            ChainExecStep(
                sub_question=planned.sub_question,
                focus=planned.focus,
                answer=answer,
                stop=stop,
            )
        )
        if stop:
            final_answer = maybe_final
            break

    if final_answer is None:
        if not config.stop_forcing:
            raise PipelineError(
                f"chain did not stop within {config.max_steps} steps and stop forcing is disabled"
            )
        forced = True
        try:
            _, final_answer = decide_stop(question, qa_pairs, backend, force_final=True)
        except PipelineError:
            # A stubborn model at budget exhaustion: synthesize from the last answer.
            final_answer = qa_pairs[-1][1]

    trace = ChainTrace(
        question=question,
        images=images,
        steps=tuple(steps),
        final_answer=final_answer,
        forced_stop=forced,
    )
    validate_trace(trace, config.max_steps)
    return trace
