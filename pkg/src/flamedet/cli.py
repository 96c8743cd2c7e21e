"""``flamedet`` command line.

Exit codes: 0 success, 1 usage error, 2 I/O or format error,
3 validation failure. Diagnostics and the resolved config go to stderr.
"""

import argparse
import os
import shutil
import sys

from . import __version__
from .errors import ConfigError, DomainError, FormatError, WeightLoadError

EXIT_USAGE, EXIT_IO, EXIT_INVALID = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text, n=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {len(vals)}")
    return vals


def _box(text):
    return _floats(text, 4)


def _ratio(text):
    vals = _floats(text, 3)
    if any(v != int(v) or v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("ratio must be three positive integers")
    return tuple(int(v) for v in vals)


def _emit_lines(lines, path):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write("".join(line + "\n" for line in lines))


def cmd_analyze(args):
    from .cost import count_flops, reduction
    from .graph import build_model

    graph = build_model(args.model, args.nc, args.imgsz)
    report = count_flops(graph, args.imgsz)
    shapes = graph.node_shapes(args.imgsz)
    print(f"{'node':<12} {'kind':<15} {'out':>16} {'params':>12} {'GFLOPs':>9}")
    for node, shape in zip(graph.nodes, shapes):
        sub = report.subtotal(node.name)
        out = "x".join(map(str, shape)) if node.op != "detect" else "-"
        print(f"{node.name:<12} {node.kind:<15} {out:>16} {sub.params:>12,} {sub.flops / 1e9:>9.3f}")
    lines = [
        f"model: {args.model}",
        f"nc: {args.nc}",
        f"imgsz: {args.imgsz}",
        f"params: {report.params}",
        f"params_m: {report.params / 1e6:.2f}",
        f"macs: {report.macs}",
        f"flops: {report.flops}",
        f"gflops: {report.flops / 1e9:.1f}",
        f"mem_access: {report.mem_access}",
    ]
    print(f"total: params {report.params / 1e6:.2f}M, FLOPs {report.flops / 1e9:.1f}G")
    if args.model == "light":
        base = count_flops(build_model("v8s", args.nc, args.imgsz), args.imgsz)
        dp = reduction(base.params, report.params)
        df = reduction(base.flops, report.flops)
        print(f"reduction vs v8s: params -{100 * dp:.2f}%, FLOPs -{100 * df:.2f}%")
        lines += [f"params_reduction_vs_v8s: {dp:.6f}", f"flops_reduction_vs_v8s: {df:.6f}"]
    for node in graph.nodes:
        sub = report.subtotal(node.name)
        if sub.rows:
            lines.append(f"node.{node.name}: kind={node.kind} params={sub.params} macs={sub.macs}")
    _emit_lines(lines, args.report)
    return 0


def cmd_init(args):
    from .graph import build_model
    from .weights import init_weights, save_weights

    graph = build_model(args.model, args.nc, args.imgsz)
    store = init_weights(graph, args.seed)
    save_weights(store, args.out)
    print(f"wrote {len(store)} tensors ({store.num_values():,} values) to {args.out}")
    return 0


def _load_model(args):
    from .graph import build_model
    from .weights import load_weights

    graph = build_model(args.model, args.nc, args.imgsz)
    return graph, load_weights(args.weights, graph, strict=not args.permissive)


def cmd_infer(args):
    from .dataset.imageio import draw_boxes, read_ppm, write_ppm
    from .dataset.letterbox import letterbox, unletterbox_box
    from .graph import forward
    from .metrics import format_predictions
    from .postprocess import Detection, decode, nms

    graph, weights = _load_model(args)
    image = read_ppm(args.image)
    lb = letterbox(image, graph.imgsz)
    raw = forward(graph, weights, lb.tensor)
    dets = nms(decode(raw, graph.reg_max, graph.nc, graph.strides, args.conf), args.iou)
    dets = [
        Detection(unletterbox_box(d.box, lb.scale, lb.pad_x, lb.pad_y, image.width, image.height), d.score, d.class_id)
        for d in dets
    ]
    text = format_predictions(dets)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if args.draw:
        write_ppm(draw_boxes(image, [d.box for d in dets]), args.draw)
    print(f"{len(dets)} detections", file=sys.stderr)
    return 0


def cmd_eval(args):
    from .dataset.imageio import ppm_size
    from .dataset.labels import cxcywh_to_xyxy, read_label_file
    from .metrics import GroundTruth, evaluate, parse_predictions

    lbl_dir = os.path.join(args.gt, "labels", args.split)
    img_dir = os.path.join(args.gt, "images", args.split)
    if not os.path.isdir(lbl_dir):
        raise FileNotFoundError(f"no label directory {lbl_dir}")
    preds, gts = [], []
    for fname in sorted(os.listdir(lbl_dir)):
        if not fname.endswith(".txt"):
            continue
        stem = fname[:-4]
        w, h = ppm_size(os.path.join(img_dir, stem + ".ppm"))
        anns = read_label_file(os.path.join(lbl_dir, fname))
        gts.append([GroundTruth(cxcywh_to_xyxy(a, w, h), a.class_id) for a in anns])
        ppath = os.path.join(args.pred, fname)
        if os.path.exists(ppath):
            with open(ppath, encoding="utf-8") as f:
                preds.append(parse_predictions(f.read(), ppath))
        else:
            preds.append([])
    report = evaluate(preds, gts, args.iou)
    lines = report.lines()
    for line in lines:
        key, value = line.split(": ", 1)
        print(f"{key:<12} {value}")
    _emit_lines(lines, args.report)
    return 0


def cmd_bench(args):
    from .metrics import fps_bench

    graph, weights = _load_model(args)
    report = fps_bench(graph, weights, args.runs, args.warmup)
    for line in report.lines():
        print(line)
    _emit_lines(report.lines(), args.report)
    return 0


def cmd_dataset_split(args):
    from .dataset.layout import write_config
    from .dataset.split import SPLITS, split_dataset

    images = sorted(f for f in os.listdir(args.images) if f.endswith(".ppm"))
    manifest = split_dataset(images, args.ratio, args.seed)
    for split in SPLITS:
        os.makedirs(os.path.join(args.out, "images", split), exist_ok=True)
        os.makedirs(os.path.join(args.out, "labels", split), exist_ok=True)
    for fname, split in sorted(manifest.assignments.items()):
        stem = os.path.splitext(fname)[0]
        shutil.copyfile(os.path.join(args.images, fname), os.path.join(args.out, "images", split, fname))
        label = os.path.join(args.labels, stem + ".txt")
        dst = os.path.join(args.out, "labels", split, stem + ".txt")
        if os.path.exists(label):
            shutil.copyfile(label, dst)
        else:
            open(dst, "w").close()  # image without flames
    _emit_lines([f"seed: {args.seed}"] + manifest.lines(), os.path.join(args.out, "split_manifest.txt"))
    write_config(os.path.join(args.out, "dataset.cfg"), os.path.abspath(args.out))
    counts = manifest.counts
    print(" ".join(f"{s}: {counts[s]}" for s in SPLITS))
    return 0


def cmd_dataset_augment(args):
    from .dataset.augment import AugmentOp, augment, derive_seed
    from .dataset.imageio import read_ppm, write_ppm
    from .dataset.labels import read_label_file, write_label_file

    os.makedirs(os.path.join(args.out, "images"), exist_ok=True)
    os.makedirs(os.path.join(args.out, "labels"), exist_ok=True)
    n = 0
    for fname in sorted(os.listdir(args.images)):
        if not fname.endswith(".ppm"):
            continue
        stem = fname[:-4]
        image = read_ppm(os.path.join(args.images, fname))
        lpath = os.path.join(args.labels, stem + ".txt")
        anns = read_label_file(lpath) if os.path.exists(lpath) else []
        for kind in args.ops:
            op = AugmentOp(kind, derive_seed(args.seed, f"{stem}:{kind}"))
            img2, anns2 = augment(image, anns, op)
            write_ppm(img2, os.path.join(args.out, "images", f"{stem}_{kind}.ppm"))
            write_label_file(os.path.join(args.out, "labels", f"{stem}_{kind}.txt"), anns2)
            n += 1
    print(f"wrote {n} augmented samples to {args.out}")
    return 0


def cmd_dataset_validate(args):
    from .dataset.layout import validate_dataset

    report = validate_dataset(args.root)
    for line in report.lines():
        print(line)
    _emit_lines(report.lines(), args.report)
    for v in report.violations:
        print(f"error: {v}", file=sys.stderr)
    return 0 if report.ok else EXIT_INVALID


def cmd_loss(args):
    from . import losses

    kind = args.kind
    if kind == "ce":
        if args.y is None or args.yhat is None:
            raise UsageError("loss --kind ce needs --y and --yhat")
        value = losses.ce_loss(args.y, args.yhat)
    elif kind == "dfl":
        if args.dist is None or args.target is None:
            raise UsageError("loss --kind dfl needs --dist and --target")
        value = losses.dfl_loss(args.dist, args.target)
    else:
        if args.pred is None or args.gt is None:
            raise UsageError(f"loss --kind {kind} needs --pred and --gt")
        value = losses.iou_variant(kind, args.pred, args.gt)
    print(repr(float(value)))
    return 0


def build_parser():
    p = _Parser(prog="flamedet", description="Lightweight YOLOv8 flame detector toolkit")
    p.add_argument("--version", action="version", version=f"flamedet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        sp.add_argument("--seed", type=int, default=0)
        if model:
            sp.add_argument("--model", choices=["v8n", "v8s", "v8m", "light"], required=True)
            sp.add_argument("--nc", type=int, default=1)
            sp.add_argument("--imgsz", type=int, default=640)

    sp = sub.add_parser("analyze", help="per-layer parameter / FLOPs table")
    common(sp)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("init", help="write seeded initial weights")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_init)

    for name, func, help_ in (
        ("infer", cmd_infer, "detect flames in one PPM image"),
        ("bench", cmd_bench, "FPS benchmark"),
    ):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--weights", required=True)
        sp.add_argument("--permissive", action="store_true", help="ignore extra tensors in the weight file")
        if name == "infer":
            sp.add_argument("--image", required=True)
            sp.add_argument("--conf", type=float, default=0.25)
            sp.add_argument("--iou", type=float, default=0.65)
            sp.add_argument("--out")
            sp.add_argument("--draw")
        else:
            sp.add_argument("--runs", type=int, default=100)
            sp.add_argument("--warmup", type=int, default=10)
            sp.add_argument("--report")
        sp.set_defaults(func=func)

    sp = sub.add_parser("eval", help="evaluate prediction files against a dataset split")
    common(sp, model=False)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--split", default="test", choices=["train", "val", "test"])
    sp.add_argument("--iou", type=float, default=0.5)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_eval)

    ds = sub.add_parser("dataset", help="dataset tooling").add_subparsers(
        dest="action", required=True, parser_class=_Parser
    )
    sp = ds.add_parser("split")
    common(sp, model=False)
    sp.add_argument("--images", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--ratio", type=_ratio, default=(10, 1, 1))
    sp.set_defaults(func=cmd_dataset_split)
    sp = ds.add_parser("augment")
    common(sp, model=False)
    sp.add_argument("--images", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument(
        "--ops",
        type=lambda s: s.split(","),
        default=["hflip", "crop", "occlude", "noise", "brightness"],
    )
    sp.set_defaults(func=cmd_dataset_augment)
    sp = ds.add_parser("validate")
    common(sp, model=False)
    sp.add_argument("--root", required=True)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_dataset_validate)

    sp = sub.add_parser("loss", help="evaluate one loss / IoU value")
    common(sp, model=False)
    sp.add_argument("--kind", required=True, choices=["ce", "iou", "giou", "diou", "ciou", "eiou", "dfl"])
    sp.add_argument("--pred", type=_box)
    sp.add_argument("--gt", type=_box)
    sp.add_argument("--y", type=float)
    sp.add_argument("--yhat", type=float)
    sp.add_argument("--dist", type=_floats)
    sp.add_argument("--target", type=float)
    sp.set_defaults(func=cmd_loss)
    return p


def _resolved(args):
    skip = {"func"}
    return " ".join(f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip and v is not None)


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "ops", None):
            from .dataset.augment import KINDS

            bad = [k for k in args.ops if k not in KINDS]
            if bad:
                raise UsageError(f"unknown augmentation(s): {', '.join(bad)}")
        print(f"config: {_resolved(args)}", file=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, WeightLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
