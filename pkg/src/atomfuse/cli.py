"""``atomfuse`` command line.

Every option can also be given through an environment variable named
``ATOMFUSE_<OPTION>`` (upper case, dashes as underscores), e.g.
``ATOMFUSE_GRID_STEP=0.1``. Multi-value options take whitespace-separated
values. Command-line flags win over the environment.

Exit status: 0 success, 1 input or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from ._io import atomic_write
from .dataset_io import (
    align,
    load_labels,
    load_scores,
    read_header,
    reorder,
    write_report,
    write_scores,
)
from .errors import AtomfuseError, WeightsError
from .fusion import FusionWeights, fuse, normalize_scores, optimize_weights
from .metrics import evaluate
from .sampling import plan_fixed, plan_jitter
from .slotattn import load_feature_dir, load_model, score_clips
from .taxonomy import AgentGroup, ClassDef, Taxonomy, load_taxonomy

ENV_PREFIX = "ATOMFUSE_"
NORMALIZE_CHOICES = ("none", "minmax", "zscore", "minmax-per-class", "zscore-per-class")


def _unit_interval(text):
    v = float(text)
    if not (0 < v <= 1):
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return v


def _non_negative_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _fmt_map(value):
    return "undefined" if value is None else f"{value:.4f}"


def _header_taxonomy(path) -> Taxonomy:
    names = read_header(path)
    classes = tuple(ClassDef(i, n, "all") for i, n in enumerate(names))
    return Taxonomy(classes=classes, groups=(AgentGroup("all"),))


def _load_score_set(paths, taxonomy):
    ids = [Path(p).stem for p in paths]
    if len(set(ids)) != len(ids):
        raise AtomfuseError(f"score files must have distinct names, got {ids}")
    return [load_scores(p, taxonomy, mid) for p, mid in zip(paths, ids)]


def cmd_evaluate(args, parser):
    taxonomy = load_taxonomy(args.taxonomy)
    labels = load_labels(args.labels, taxonomy)
    (scores,), labels = align([load_scores(args.scores, taxonomy)], labels)
    report = evaluate(scores, labels, taxonomy)
    write_report(report, args.out)
    print(f"mAP {_fmt_map(report.map)}")


def _parse_weights(text, model_ids, parser):
    path = Path(text)
    if text.endswith(".json") and path.is_file():
        obj = json.loads(path.read_text(encoding="utf-8"))
        if list(obj.get("model_ids", model_ids)) != list(model_ids):
            raise WeightsError(f"{path}: weights are for models {obj.get('model_ids')}, got {list(model_ids)}")
        values = obj["w"]
    else:
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            parser.error(f"--weights: cannot parse {text!r}")
    if len(values) != len(model_ids):
        parser.error(f"--weights: {len(values)} weights for {len(model_ids)} score files")
    try:
        return FusionWeights(tuple(model_ids), values)
    except WeightsError as exc:
        parser.error(f"--weights: {exc}")


def cmd_fuse(args, parser):
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else _header_taxonomy(args.scores[0])
    scores = _load_score_set(args.scores, taxonomy)
    weights = _parse_weights(args.weights, [s.model_id for s in scores], parser)
    scores = [reorder(s, scores[0].clip_ids) for s in scores]
    scores = [normalize_scores(s, args.normalize) for s in scores]
    fused = fuse(scores, weights)
    write_scores(fused, args.out, taxonomy)
    print(f"fused {len(scores)} models -> {args.out}")


def cmd_optimize(args, parser):
    taxonomy = load_taxonomy(args.taxonomy)
    labels = load_labels(args.labels, taxonomy)
    scores, labels = align(_load_score_set(args.scores, taxonomy), labels)
    scores = [normalize_scores(s, args.normalize) for s in scores]
    weights, val_map = optimize_weights(scores, labels, taxonomy, args.grid_step, args.refine)
    obj = {"model_ids": list(weights.model_ids), "w": list(weights.w), "val_map": val_map}
    atomic_write(args.out, json.dumps(obj, indent=2) + "\n")
    print(f"mAP {_fmt_map(val_map)} weights {','.join(f'{w:.4f}' for w in weights.w)}")


def cmd_plan_sampling(args, parser):
    if args.jitter_seed is None:
        plan = plan_fixed(args.source_len, args.target_len)
    else:
        plan = plan_jitter(args.source_len, args.target_len, args.jitter_seed)
    print(json.dumps(list(plan.indices)))


def cmd_score(args, parser):
    taxonomy = load_taxonomy(args.taxonomy)
    params = load_model(args.model)
    clips = load_feature_dir(args.features)
    scores = score_clips(clips, params, taxonomy, model_id=args.model_id or Path(args.model).stem)
    write_scores(scores, args.out, taxonomy)
    print(f"scored {len(clips)} clips -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomfuse",
        description="Score fusion, weight search, mAP evaluation and sampling plans for multi-label atomic activity recognition.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("evaluate", help="per-class AP, mAP and per-group mAP")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fuse", help="weighted sum of score matrices")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--weights", required=True, help="comma-separated weights or a weights JSON file")
    p.add_argument("--normalize", choices=NORMALIZE_CHOICES, default="none")
    p.add_argument("--taxonomy", help="optional; class names are otherwise read from the first CSV header")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("optimize-weights", help="search fusion weights maximizing mAP")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--grid-step", type=_unit_interval, default=0.05)
    p.add_argument("--refine", type=_non_negative_int, default=4)
    p.add_argument("--normalize", choices=NORMALIZE_CHOICES, default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("plan-sampling", help="print a frame-index plan as a JSON array")
    p.add_argument("--source-len", type=_positive_int, required=True)
    p.add_argument("--target-len", type=_positive_int, default=16)
    p.add_argument("--jitter-seed", type=int, default=None)
    p.set_defaults(func=cmd_plan_sampling)

    p = sub.add_parser("score", help="run the slot-attention head over feature files")
    p.add_argument("--features", required=True, help="directory of .atsl feature archives")
    p.add_argument("--model", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--model-id")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    for subparser in sub.choices.values():
        _apply_env(subparser)
    return parser


def _apply_env(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if not action.option_strings or action.dest in ("help",):
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in os.environ:
            continue
        raw = os.environ[key]
        if action.nargs in ("+", "*"):
            items = shlex.split(raw)
            action.default = [action.type(x) if action.type else x for x in items]
        else:
            # argparse runs type conversion on string defaults
            action.default = raw
        action.required = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, parser)
    except (AtomfuseError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"atomfuse {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
