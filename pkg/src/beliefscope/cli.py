"""Command-line harness.

Subcommands: validate, compile, infer, track, generate, check.  Output
documents go to stdout (or --out), diagnostics to stderr.  Exit codes:
0 success, 1 validation failure, 2 I/O or parse error, 3 impossible
evidence, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (
    BeliefscopeError,
    EvidenceError,
    FrameInferenceError,
    ImpossibleEvidenceError,
    InvalidNetworkError,
    SpecSyntaxError,
    StateSpaceCapError,
    StreamValidationError,
)
from .endoscopy import builtin_model, compile_rule, generate_stream
from .network import (
    NetworkSpec,
    apply_evidence,
    load_json,
    network_diagnostics,
    network_spec_from_document,
    network_spec_to_document,
    parse_evidence,
    validate_network,
)
from .propagation import brute_force_beliefs, propagate, sig10
from .relational import parse_scene, relational_diagnostics, relationalize
from .temporal import (
    DynamicModel,
    FrameStream,
    TemporalModel,
    build_dynamic_window,
    dynamic_diagnostics,
    dynamic_from_document,
    dynamic_to_document,
    dynamic_trace,
    filter_stream,
    parse_stream,
    semi_static_from_document,
    stream_to_jsonl,
)

ORACLE_TOLERANCE = 1e-9


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefscope",
        description="Tree-network inference with relational and temporal recognition.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p, rule=True):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--model", metavar="NAME", help="builtin model name")
        group.add_argument("--spec", metavar="FILE", help="model document ('-' for stdin)")
        if rule:
            group.add_argument("--rule", metavar="TEXT", help="IF/THEN rule text")

    def add_input_flags(p, scene=True, stream=True):
        group = p.add_mutually_exclusive_group(required=True)
        if scene:
            group.add_argument("--scene", metavar="FILE",
                               help="scene or evidence document ('-' for stdin)")
        if stream:
            group.add_argument("--stream", metavar="FILE",
                               help="frame-stream JSONL ('-' for stdin)")
        group.add_argument("--scenario", metavar="NAME", help="generate the input internally")

    def add_threshold_flags(p):
        p.add_argument("--tau", type=float, metavar="PX", help="adjacency/distance threshold override")
        p.add_argument("--epsilon", type=float, metavar="PX", help="static-displacement threshold override")
        p.add_argument("--delta", type=float, metavar="PX", help="cross-frame matching radius override")

    def add_generation_flags(p):
        p.add_argument("--seed", type=int, default=0, metavar="S")
        p.add_argument("--frames", type=int, default=5, metavar="N")

    p = sub.add_parser("validate", help="report every diagnostic for a model document")
    add_model_flags(p)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("compile", help="compile an IF/THEN rule to a model document")
    p.add_argument("--rule", metavar="TEXT", required=True)
    p.add_argument("--defaults", metavar="FILE", help="JSON overrides for the defaults table")
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("infer", help="single-scene inference: relationalize + propagate")
    add_model_flags(p)
    add_input_flags(p, stream=False)
    add_threshold_flags(p)
    add_generation_flags(p)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("track", help="filter a stream (semi-static) or slide a window (dynamic)")
    add_model_flags(p)
    add_input_flags(p, scene=False)
    add_threshold_flags(p)
    add_generation_flags(p)
    p.add_argument("--mode", choices=["paper", "filter"], help="semi-static mode override")
    p.add_argument("--window", type=int, metavar="K", help="dynamic window length")
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("generate", help="emit a deterministic synthetic frame stream")
    p.add_argument("--scenario", metavar="NAME", required=True)
    add_generation_flags(p)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("check", help="propagate vs joint enumeration; exit 0 iff they agree")
    add_model_flags(p)
    add_input_flags(p)
    add_threshold_flags(p)
    add_generation_flags(p)
    p.add_argument("--mode", choices=["paper", "filter"])
    p.add_argument("--window", type=int, metavar="K")
    p.add_argument("--out", metavar="FILE")
    return parser


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_model(args):
    if getattr(args, "rule", None) is not None:
        return compile_rule(args.rule)
    if args.model is not None:
        return builtin_model(args.model).model
    doc = load_json(_read(args.spec))
    kind = doc.get("type") if isinstance(doc, dict) else None
    if kind == "semi_static":
        return semi_static_from_document(doc)
    if kind == "dynamic":
        return dynamic_from_document(doc)
    return network_spec_from_document(doc)


def _load_stream(args) -> FrameStream:
    if args.scenario is not None:
        return generate_stream(args.scenario, args.frames, seed=args.seed)
    if getattr(args, "stream", None) is None:
        raise SpecSyntaxError("this model needs a stream input (--stream or --scenario)")
    return parse_stream(_read(args.stream))


def _scene_inputs(args, spec: NetworkSpec):
    """(net, evidence) for a scene, evidence document, or generated scenario."""
    if getattr(args, "scene", None) is not None:
        text = _read(args.scene)
        doc = load_json(text)
        if isinstance(doc, dict) and "assignments" in doc:
            return validate_network(spec), parse_evidence(text)
        regions = parse_scene(text)
        return relationalize(spec, regions, tau=args.tau, epsilon=args.epsilon)
    stream = _load_stream(args)
    if not stream.frames:
        raise StreamValidationError("generated stream is empty")
    return relationalize(spec, stream.frames[0].regions, tau=args.tau, epsilon=args.epsilon)


def _with_mode(model: TemporalModel, mode: str | None) -> TemporalModel:
    if mode is None or mode == model.mode:
        return model
    return TemporalModel(model.per_frame, model.transition, mode)


def _cmd_validate(args) -> int:
    try:
        model = _load_model(args)
    except InvalidNetworkError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return 1
    if isinstance(model, TemporalModel):
        spec = model.per_frame
        diags = network_diagnostics(spec) + relational_diagnostics(spec)
    elif isinstance(model, DynamicModel):
        diags = dynamic_diagnostics(model)
    else:
        diags = network_diagnostics(model) + relational_diagnostics(model)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return 1
    print("ok", file=sys.stderr)
    return 0


def _cmd_compile(args) -> int:
    defaults = None
    if args.defaults:
        defaults = load_json(_read(args.defaults))
        if not isinstance(defaults, dict):
            raise SpecSyntaxError("defaults document must be a JSON object")
    model = compile_rule(args.rule, defaults)
    if isinstance(model, NetworkSpec):
        doc = network_spec_to_document(model)
    else:
        doc = dynamic_to_document(model)
    _emit(args, json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_infer(args) -> int:
    model = _load_model(args)
    if not isinstance(model, NetworkSpec):
        print("infer requires a single-scene (relational) model; use track for temporal models",
              file=sys.stderr)
        return 2
    net, ev = _scene_inputs(args, model)
    beliefs = propagate(apply_evidence(net, ev))
    _emit(args, json.dumps(beliefs.to_document(), indent=2) + "\n")
    return 0


def _cmd_track(args) -> int:
    model = _load_model(args)
    stream = _load_stream(args)
    if isinstance(model, TemporalModel):
        trace = filter_stream(_with_mode(model, args.mode), stream,
                              tau=args.tau, epsilon=args.epsilon)
    elif isinstance(model, DynamicModel):
        trace = dynamic_trace(model, stream, window=args.window,
                              tau=args.tau, epsilon=args.epsilon, delta=args.delta)
    else:
        print("track requires a temporal or dynamic model; use infer for single scenes",
              file=sys.stderr)
        return 2
    _emit(args, trace.to_jsonl())
    return 0


def _cmd_generate(args) -> int:
    stream = generate_stream(args.scenario, args.frames, seed=args.seed)
    _emit(args, stream_to_jsonl(stream))
    return 0


def _pairs_to_check(args, model):
    """Instantiated (net, evidence) pairs the oracle comparison runs over."""
    if isinstance(model, NetworkSpec):
        if getattr(args, "scene", None) is not None:
            yield _scene_inputs(args, model)
            return
        stream = _load_stream(args)
        for frame in stream.frames:
            yield relationalize(model, frame.regions, tau=args.tau, epsilon=args.epsilon)
        return
    stream = _load_stream(args)
    if isinstance(model, TemporalModel):
        model = _with_mode(model, args.mode)
        trace = filter_stream(model, stream, tau=args.tau, epsilon=args.epsilon)
        for fb, frame in zip(trace.frames, stream.frames):
            spec_i = model.per_frame.with_root_prior(fb.effective_prior)
            yield relationalize(spec_i, frame.regions, tau=args.tau, epsilon=args.epsilon)
        return
    k = args.window if args.window is not None else model.max_window
    k = min(k, len(stream.frames))
    if k < 2:
        raise StreamValidationError("window >= 2 required")
    for end in range(k - 1, len(stream.frames)):
        yield build_dynamic_window(model, stream.frames[end - k + 1 : end + 1],
                                   tau=args.tau, epsilon=args.epsilon, delta=args.delta)


def _cmd_check(args) -> int:
    model = _load_model(args)
    worst = 0.0
    compared = 0
    for net, ev in _pairs_to_check(args, model):
        inet = apply_evidence(net, ev)
        fast = propagate(inet)
        slow = brute_force_beliefs(inet)
        for nid, vec in fast.marginals.items():
            worst = max(worst, float(np.abs(vec - slow.marginals[nid]).max()))
        compared += 1
    _emit(args, f"max |propagate - enumeration| = {sig10(worst):.10g} over {compared} network(s)\n")
    if worst >= ORACLE_TOLERANCE:
        print(f"oracle mismatch: {worst:.3e} >= {ORACLE_TOLERANCE:.0e}", file=sys.stderr)
        return 4
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "compile": _cmd_compile,
    "infer": _cmd_infer,
    "track": _cmd_track,
    "generate": _cmd_generate,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("tau", "epsilon", "delta"):
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            print(f"--{name} must be strictly positive", file=sys.stderr)
            return 2
    try:
        return _COMMANDS[args.command](args)
    except FrameInferenceError as exc:
        print(exc, file=sys.stderr)
        return 3 if isinstance(exc.cause, ImpossibleEvidenceError) else 1
    except ImpossibleEvidenceError as exc:
        print(exc, file=sys.stderr)
        return 3
    except InvalidNetworkError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return 1
    except (EvidenceError, StreamValidationError, StateSpaceCapError) as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SpecSyntaxError, OSError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return 2
    except BeliefscopeError as exc:
        print(exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
