"""``roofseg`` command line: synth, predict, segment, eval, compare.

Exit codes: 0 success, 2 bad input (format, config, pairing), 3 algorithmic
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io
from .baselines import ransac_segment, region_grow_segment
from .config import PipelineConfig, field_types, parse_value
from .errors import ConfigError, FormatError, LengthMismatch, NoClusters, RoofSegError
from .features import handcrafted_predictions, oracle_predictions
from .gtlabel import derive_labels
from .metrics import METRIC_NAMES, MetricsReport, aggregate, evaluate
from .pipeline import segment
from .synthgen import (
    RoofFamily,
    add_nonroof_clutter,
    generate_building,
    normalize,
    random_spec,
)

EXIT_OK, EXIT_FORMAT, EXIT_ALGO, EXIT_IO = 0, 2, 3, 4
METHODS = ("ours", "ransac", "region_growing")
CLOUD_SUFFIX = ".pts"
MANIFEST = "manifest.txt"


class UsageError(RoofSegError):
    """Bad command-line input that is not a file-format problem."""


# -- helpers ------------------------------------------------------------------


def building_seed(seed: int, building_id: str) -> int:
    """Stable per-building seed, independent of processing order."""
    return (seed * 1_000_003 + zlib.crc32(building_id.encode())) % (2**31)


def parse_family_mix(text: str) -> dict[RoofFamily, float]:
    """``"gable:1,hip:2"`` -> relative weights; ``"all"`` weighs families equally."""
    if text.strip() == "all":
        return {f: 1.0 for f in RoofFamily}
    mix = {}
    for item in text.split(","):
        name, _, weight = item.strip().partition(":")
        try:
            fam = RoofFamily(name.strip())
        except ValueError:
            raise UsageError(f"unknown roof family {name!r}; choose from {', '.join(f.value for f in RoofFamily)}")
        try:
            w = float(weight) if weight else 1.0
        except ValueError:
            raise UsageError(f"bad weight {weight!r} for {name}") from None
        if not w >= 0:
            raise UsageError(f"weight for {name} must be >= 0")
        mix[fam] = mix.get(fam, 0.0) + w
    if sum(mix.values()) <= 0:
        raise UsageError("family mix has zero total weight")
    return mix


def split_for(index: int) -> str:
    return "test" if index % 11 == 0 else "train"


def _predictions(cfg: PipelineConfig, cloud, building_id: str):
    if cfg.provider == "oracle":
        if cloud.gt is None:
            raise UsageError("the oracle provider needs a labeled cloud")
        labels = derive_labels(cloud, cfg.k_boundary)
        return oracle_predictions(cloud, labels, cfg.noise_spec(building_seed(cfg.seed, building_id)), cfg.embed_dim)
    if cfg.provider == "handcrafted":
        return handcrafted_predictions(cloud.points, cfg.handcrafted_k, cfg.embed_dim)
    return io.load_predictions(cfg.provider[len("file:"):], n_points=len(cloud))


def _segment_labels(cfg: PipelineConfig, cloud, building_id: str) -> np.ndarray:
    pred = _predictions(cfg, cloud, building_id)
    seg = segment(cloud.points, pred, cfg.cluster_params(), boundary_aware=True, refine_weights=cfg.refine_weights)
    return seg.labels(len(cloud))


def _method_labels(method: str, cfg: PipelineConfig, cloud, building_id: str) -> np.ndarray:
    if method == "ours":
        try:
            return _segment_labels(cfg, cloud, building_id)
        except NoClusters:
            # scored as an empty prediction rather than aborting the table
            return np.full(len(cloud), -1, dtype=np.int64)
    if method == "ransac":
        return ransac_segment(cloud, cfg.ransac_params()).labels(len(cloud))
    return region_grow_segment(cloud, cfg.region_grow_params()).labels(len(cloud))


def _pool_map(fn, items, jobs: int):
    """Ordered map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*items)))


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def report_lines(rows: list[tuple[str, MetricsReport]], key: str = "building", delimiter: str = ",") -> list[str]:
    """key=value lines, a blank line, then a delimited table with a header."""
    out = []
    for name, rep in rows:
        kv = " ".join(f"{m}={_fmt(getattr(rep, m))}" for m in METRIC_NAMES)
        out.append(f"{key}={name} {kv} n_gt={rep.n_gt_instances} n_pred={rep.n_pred_instances}")
    out.append("")
    out.append(delimiter.join([key, *METRIC_NAMES]))
    for name, rep in rows:
        out.append(delimiter.join([name, *(_fmt(getattr(rep, m)) for m in METRIC_NAMES)]))
    return out


# -- commands -----------------------------------------------------------------


def _synth_one(out_dir: str, building_id: str, family: str, spec_seed: int, n_points: int, noise, clutter, k_boundary):
    spec = random_spec(RoofFamily(family), spec_seed)
    cloud = generate_building(spec, n_points, noise)
    if clutter > 0:
        cloud = add_nonroof_clutter(cloud, clutter, spec_seed)
    cloud = normalize(cloud)
    labels = derive_labels(cloud, k_boundary)
    io.write_cloud(Path(out_dir) / f"{building_id}{CLOUD_SUFFIX}", cloud, labels.semantic)
    return building_id


def cmd_synth(args, cfg: PipelineConfig) -> int:
    if args.n_buildings < 0:
        raise UsageError("--n must be >= 0")
    if not 0 <= args.clutter < 1:
        raise UsageError("--clutter must lie in [0, 1)")
    if args.points < 3:
        raise UsageError("--points must be >= 3")
    mix = parse_family_mix(args.families)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    fams = list(mix)
    probs = np.array([mix[f] for f in fams]) / sum(mix.values())
    width = max(4, len(str(max(args.n_buildings - 1, 0))))
    jobs, entries = [], []
    for i in range(args.n_buildings):
        fam = fams[rng.choice(len(fams), p=probs)]
        spec_seed = int(rng.integers(2**31))
        bid = f"b{i:0{width}d}"
        jobs.append((str(out), bid, fam.value, spec_seed, args.points, args.noise_sigma, args.clutter, cfg.k_boundary))
        entries.append((bid, f"{bid}{CLOUD_SUFFIX}", split_for(i)))
    _pool_map(_synth_one, jobs, cfg.jobs)
    io.write_manifest(out / MANIFEST, entries)
    n_test = sum(e[2] == "test" for e in entries)
    print(f"wrote {len(entries)} buildings to {out} (train={len(entries) - n_test} test={n_test})")
    return EXIT_OK


def cmd_predict(args, cfg: PipelineConfig) -> int:
    cloud, _ = io.read_cloud(args.cloud)
    pred = _predictions(cfg, cloud, Path(args.cloud).stem)
    io.save_predictions(pred, args.out)
    print(f"wrote {len(pred)} predictions (D={pred.embed_dim}) to {args.out}")
    return EXIT_OK


def cmd_segment(args, cfg: PipelineConfig) -> int:
    cloud, _ = io.read_cloud(args.cloud)
    labels = _segment_labels(cfg, cloud, Path(args.cloud).stem)
    io.write_segmentation(args.out, labels)
    m = len(np.unique(labels[labels >= 0]))
    print(f"wrote segmentation with {m} instances to {args.out}")
    if args.colored:
        from .plotting import label_colors

        rgb = (label_colors(labels)[:, :3] * 255).round().astype(int)
        lines = ["# x y z r g b, colored by predicted instance", f"colored v1 N={len(labels)}"]
        lines += [f"{p[0]!r} {p[1]!r} {p[2]!r} {c[0]} {c[1]} {c[2]}" for p, c in zip(cloud.points.tolist(), rgb)]
        io.atomic_write(args.colored, "\n".join(lines) + "\n")
    if args.figure:
        from .plotting import plot_segmentation

        gt = cloud.gt.instance_id if cloud.gt is not None else None
        plot_segmentation(cloud.points, labels, args.figure, Path(args.cloud).stem, gt)
    return EXIT_OK


def _pairs(preds: list[str], gts: list[str]) -> list[tuple[str, Path, Path]]:
    """Pair prediction and GT files by stem (the building id)."""
    def by_stem(paths, what):
        out = {}
        for p in map(Path, paths):
            if p.stem in out:
                raise UsageError(f"two {what} files for building {p.stem!r}")
            out[p.stem] = p
        return out

    pm, gm = by_stem(preds, "prediction"), by_stem(gts, "ground-truth")
    if set(pm) != set(gm):
        missing = sorted(set(pm) ^ set(gm))
        raise UsageError(f"prediction and ground-truth files do not pair up: {', '.join(missing)}")
    return [(b, pm[b], gm[b]) for b in sorted(pm)]


def _eval_one(bid, pred_path, gt_path):
    cloud, _ = io.read_cloud(gt_path)
    if cloud.gt is None:
        raise UsageError(f"{gt_path}: ground-truth cloud must be labeled")
    if pred_path.suffix == CLOUD_SUFFIX:
        pc, _ = io.read_cloud(pred_path)
        if pc.gt is None:
            raise UsageError(f"{pred_path}: unlabeled cloud has no instance ids")
        labels = pc.gt.instance_id
    else:
        labels = io.read_segmentation(pred_path)
    if len(labels) != len(cloud):
        raise LengthMismatch(f"{pred_path}: {len(labels)} labels for a cloud of {len(cloud)} points")
    return evaluate(labels, cloud.gt)


def cmd_eval(args, cfg: PipelineConfig) -> int:
    pairs = _pairs(args.pred, args.gt)
    if not pairs:
        raise UsageError("nothing to evaluate")
    reports = _pool_map(_eval_one, pairs, cfg.jobs)
    rows = list(zip([b for b, _, _ in pairs], reports))
    rows.append(("ALL", aggregate(reports)))
    text = "\n".join(report_lines(rows, delimiter=args.delimiter)) + "\n"
    sys.stdout.write(text)
    if args.report:
        rep_dir = Path(args.report)
        rep_dir.mkdir(parents=True, exist_ok=True)
        io.atomic_write(rep_dir / "eval.txt", text)
        from .plotting import plot_method_metrics, plot_per_building

        plot_method_metrics({"prediction": rows[-1][1]}, rep_dir / "eval_metrics.png", "mean metrics")
        plot_per_building({"prediction": reports}, rep_dir / "eval_cov.png")
    return EXIT_OK


def _compare_one(method, cfg, bid, path):
    cloud, _ = io.read_cloud(path)
    if cloud.gt is None:
        raise UsageError(f"{path}: compare needs labeled clouds")
    return evaluate(_method_labels(method, cfg, cloud, bid), cloud.gt)


def cmd_compare(args, cfg: PipelineConfig) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"methods must be drawn from {', '.join(METHODS)}")
    methods = list(dict.fromkeys(methods))
    root = Path(args.dataset)
    entries = io.read_manifest(root / MANIFEST)
    if args.split != "all":
        entries = [e for e in entries if e[2] == args.split]
    entries = sorted(entries)
    if not entries:
        raise UsageError(f"no buildings in split {args.split!r}")
    per_method = {}
    for m in methods:
        jobs = [(m, cfg, bid, root / rel) for bid, rel, _ in entries]
        per_method[m] = _pool_map(_compare_one, jobs, cfg.jobs)
    rows = [(m, aggregate(per_method[m])) for m in methods]
    text = f"buildings={len(entries)} split={args.split}\n" + "\n".join(report_lines(rows, "method", args.delimiter)) + "\n"
    sys.stdout.write(text)
    if args.report:
        rep_dir = Path(args.report)
        rep_dir.mkdir(parents=True, exist_ok=True)
        io.atomic_write(rep_dir / "compare.txt", text)
        per_building = [(f"{m}/{bid}", r) for m in methods for (bid, _, _), r in zip(entries, per_method[m])]
        io.atomic_write(rep_dir / "compare_buildings.txt", "\n".join(report_lines(per_building, "run", args.delimiter)) + "\n")
        from .plotting import plot_method_metrics, plot_per_building

        plot_method_metrics(dict(rows), rep_dir / "compare_metrics.png")
        plot_per_building(per_method, rep_dir / "compare_cov.png")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def _config_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("pipeline configuration (overrides --config)")
    g.add_argument("--config", help="key = value config file loaded before flags")
    g.add_argument("--tn", dest="cfg_tn", metavar="N", help="minimum cluster size T_n")
    for f in fields(PipelineConfig):
        if f.name == "tn":
            continue
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar=f.name.upper())


def build_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    changes = {}
    for key in field_types():
        raw = getattr(args, f"cfg_{key}", None)
        if raw is not None:
            changes[key] = parse_value(key, raw, f"--{key.replace('_', '-')}")
    return cfg.replace(**changes)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roofseg", description="Roof-plane instance segmentation toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a labeled synthetic dataset with a train/test manifest")
    s.add_argument("out_dir")
    s.add_argument("--n", dest="n_buildings", type=int, default=22)
    s.add_argument("--families", default="all", help="weighted mix such as 'gable:1,hip:2' or 'all'")
    s.add_argument("--noise-sigma", type=float, default=None, help="sampling noise in meters (default 1%% of the diagonal)")
    s.add_argument("--points", type=int, default=2048)
    s.add_argument("--clutter", type=float, default=0.0, help="fraction of extra non-roof points")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("predict", help="write a prediction file from a provider")
    s.add_argument("cloud")
    s.add_argument("out")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("segment", help="segment one cloud into roof planes")
    s.add_argument("cloud")
    s.add_argument("out", help="segmentation file to write")
    s.add_argument("--colored", help="also write 'x y z r g b' points colored by instance")
    s.add_argument("--figure", help="also render a PNG of the segmentation")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("eval", help="score segmentation files against labeled clouds")
    s.add_argument("--pred", nargs="+", required=True, help="segmentation files, paired with --gt by file stem")
    s.add_argument("--gt", nargs="+", required=True, help="labeled cloud files")
    s.add_argument("--delimiter", default=",")
    s.add_argument("--report", help="directory for the text report and PNG figures")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compare", help="compare methods on a synthesized dataset")
    s.add_argument("dataset", help="directory holding manifest.txt")
    s.add_argument("--methods", default=",".join(METHODS))
    s.add_argument("--split", choices=("test", "train", "all"), default="all")
    s.add_argument("--delimiter", default=",")
    s.add_argument("--report", help="directory for the text report and PNG figures")
    s.set_defaults(func=cmd_compare)

    for name in ("synth", "predict", "segment", "eval", "compare"):
        _config_flags(sub.choices[name])
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except (FormatError, ConfigError, UsageError, LengthMismatch) as exc:
        print(f"roofseg: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except RoofSegError as exc:
        print(f"roofseg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGO
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"roofseg: I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
