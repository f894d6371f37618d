"""Command-line pipeline: recordings -> trimmed trials -> entropy tables -> statistics, models, figures.

The entropy table written by ``gaitse entropy`` is the interchange format
read by ``compare``, ``anova``, ``grr``, ``features``, ``cv``, ``rank`` and
``plot``. Exit status is 0 on success, 1 when inputs fail validation and 2
on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from . import classify, stats, viz
from .entropy import DefaultR, FixedParams, SeOutcome, SeParams, SeProfile, profiles_from_csv, profiles_to_csv, se_profile
from .errors import GaitError, NegativeEstimateTruncated
from .gait_params import GaitParameterId, tilt_series
from .preprocess import DEFAULT_GUARD_FRAMES, DEFAULT_JUMP_THRESHOLD_M, extract_walk_segment, trim_boundary_artifacts
from .recording import Condition, group, load_manifest, save_recording, write_manifest
from .synth import generate_corpus

JOINT_SETS = ("core15", "middle5", "left5", "right5", "all")
DEVICES = ("AB", "KB", "CANE", "WALKER")


class UsageError(Exception):
    pass


# -- helpers -----------------------------------------------------------------


def _emit(args, data: str | bytes):
    out = getattr(args, "out", None)
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(v) -> str:
    return "" if v is None else repr(float(v))


def _read_profiles(path) -> list[SeProfile]:
    return profiles_from_csv(Path(path).read_text(encoding="utf-8"))


def _map(fn, items, jobs: int):
    """Ordered map; results do not depend on the worker count."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _trim(trial, threshold, guard):
    return trim_boundary_artifacts(trial, threshold, guard)


class _EntropyJob:
    """Picklable per-trial work item for the process pool."""

    def __init__(self, channels, axis, policy, trim, threshold, guard, segment):
        self.channels, self.axis, self.policy = channels, axis, policy
        self.trim, self.threshold, self.guard, self.segment = trim, threshold, guard, segment

    def __call__(self, trial):
        if self.trim:
            trial = trim_boundary_artifacts(trial, self.threshold, self.guard)[0]
        if self.segment != "Both":
            trial = extract_walk_segment(trial, self.segment)
        return se_profile(trial, self.channels, self.axis, self.policy)


def _select(profiles, condition=None):
    if condition is None:
        return list(profiles)
    c = Condition.parse(condition)
    return [p for p in profiles if p.provenance.condition is c]


def _cube_for(profiles, channel, condition):
    chosen = _select(profiles, condition)
    if not chosen:
        raise UsageError(f"no profiles for condition {condition}")
    records = []
    for p in chosen:
        if channel not in p:
            raise UsageError(f"channel {channel} not in the entropy table")
        v = p.value(channel)
        if v is None:
            raise GaitError(f"undefined entropy for {channel} in {p.provenance.label}")
        records.append((p.provenance.day, p.provenance.subject_id, v))
    return stats.balanced_cube(records)


def _interaction_flag(text):
    return {"auto": "auto", "yes": True, "no": False}[text]


def _labeling(text):
    return {"binary": "Binary", "five": "FiveClass"}[text]


def _model_params(args) -> dict:
    if args.model == "knn":
        return {"k": args.k}
    if args.model == "rf":
        return {"trees": args.trees}
    if args.model == "svm":
        return {"c": args.c}
    return {}


def _table(profiles, args):
    return classify.build_feature_table(profiles, _labeling(args.labeling), group(args.joints))


def _dstats(profiles, devices, joints) -> list[tuple[int, stats.DStat]]:
    """(day, DStat) per device, subject and day; replicates pair within a day."""
    cells: dict[tuple[str, int], list[SeProfile]] = {}
    for p in profiles:
        cells.setdefault((p.provenance.subject_id, p.provenance.day), []).append(p)
    out = []
    for device in devices:
        dev = Condition.parse(device)
        for sid, day in sorted(cells):
            ps = cells[(sid, day)]
            nw = [p for p in ps if p.provenance.condition is Condition.NW]
            md = [p for p in ps if p.provenance.condition is dev]
            if not nw or not md:
                continue
            out.append((day, stats.d_statistic(nw, md, joints)))
    if not out:
        raise GaitError("no subject has both normal-walking and device trials")
    return out


def _mean_profile(profiles: list[SeProfile], name: str) -> SeProfile:
    first = profiles[0]
    entries = {}
    for key in first.entries:
        vals = [p.value(key) for p in profiles if key in p and p.value(key) is not None]
        value = math.fsum(vals) / len(vals) if vals else None
        entries[key] = SeOutcome(value, 0, 0, first[key].params, first[key].n)
    return SeProfile(entries, first.provenance, first.axis, f"mean of {len(profiles)} ({name})")


# -- subcommands -------------------------------------------------------------


def cmd_validate(args):
    trials = load_manifest(args.manifest)
    rows = []
    for t in trials:
        md = t.metadata
        not_tracked = int((t.states == 0).sum())
        inferred = int((t.states == 1).sum())
        duration = (int(t.timestamps[-1]) - int(t.timestamps[0])) / 1000.0
        rows.append([md.subject_id, md.condition.value, md.camera.value, md.day, md.trial_no,
                     len(t), f"{duration:.3f}", inferred, not_tracked])
    _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no",
                            "frames", "duration_s", "inferred", "not_tracked"]))


def cmd_trim(args):
    trials = load_manifest(args.manifest)
    results = _map(partial(_trim, threshold=args.threshold, guard=args.guard), trials, args.jobs)
    rows = []
    out_dir = Path(args.out_dir) if args.out_dir else None
    entries = []
    for trial, rep in results:
        md = trial.metadata
        rows.append([md.subject_id, md.condition.value, md.camera.value, md.day, md.trial_no,
                     rep.frames_dropped_head, rep.frames_dropped_tail, *rep.retained_range])
        if out_dir:
            name = f"{md.subject_id}_{md.condition.value}_{md.camera.value}_d{md.day}_t{md.trial_no}.csv"
            out_dir.mkdir(parents=True, exist_ok=True)
            save_recording(trial, out_dir / name)
            entries.append((name, md))
    if out_dir:
        write_manifest(out_dir / "manifest.csv", entries)
    _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no",
                            "dropped_head", "dropped_tail", "start", "stop"]))


def cmd_tilt(args):
    params = [GaitParameterId.parse(p) for p in args.params.split(",")]
    trials = load_manifest(args.manifest)
    rows = []
    for t in trials:
        if args.trim:
            t = trim_boundary_artifacts(t)[0]
        series = [tilt_series(t, p).values for p in params]
        md = t.metadata
        for i in range(len(t)):
            rows.append([md.subject_id, md.condition.value, md.camera.value, md.day, md.trial_no, i,
                         int(t.timestamps[i]), *(repr(float(s[i])) for s in series)])
    _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no", "frame",
                            "timestamp_ms", *(p.code for p in params)]))


def cmd_entropy(args):
    if args.r is not None and args.r_auto:
        raise UsageError("--r and --r-auto are exclusive")
    if args.r is not None:
        policy = FixedParams(SeParams(args.m, args.r, args.tau))
    else:
        policy = DefaultR(args.m, args.tau, args.r_fraction)
    if args.gait_params:
        channels = [GaitParameterId.parse(p) for p in args.gait_params.split(",")]
    else:
        channels = group(args.joints)
    trials = load_manifest(args.manifest)
    job = _EntropyJob(channels, args.axis, policy, args.trim, args.threshold, args.guard, args.segment)
    profiles = _map(job, trials, args.jobs)
    _emit(args, profiles_to_csv(profiles))


def cmd_compare(args):
    profiles = _read_profiles(args.table)
    devices = DEVICES if args.device == "all" else (args.device,)
    joints = group(args.joints)
    ds = _dstats(profiles, devices, joints)
    width = max(len(d.per_replicate_d) for _, d in ds)
    rows = []
    for day, d in ds:
        reps = [_g(v) for v in d.per_replicate_d] + [""] * (width - len(d.per_replicate_d))
        rows.append([d.subject_id, day, d.device.value, d.joint_set.group_id, len(d.per_replicate_d), *reps,
                     _g(d.mean_d), _g(d.ci95[0]), _g(d.ci95[1]), int(d.excludes_zero)])
    _emit(args, _csv(rows, ["subject_id", "day", "device", "joints", "n", *(f"d_{i + 1}" for i in range(width)),
                            "mean_d", "ci_lo", "ci_hi", "excludes_zero"]))


def cmd_anova(args):
    cube, _, _ = _cube_for(_read_profiles(args.table), args.channel, args.condition)
    table = stats.two_way_anova(cube, _interaction_flag(args.interaction), args.alpha)
    _emit(args, table.to_csv())


def cmd_grr(args):
    cube, days, subjects = _cube_for(_read_profiles(args.table), args.channel, args.condition)
    table = stats.two_way_anova(cube, False)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativeEstimateTruncated)
        vc = stats.gauge_rr(table, len(days), len(subjects), cube.shape[2])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(args, vc.to_csv())


def cmd_features(args):
    table = _table(_read_profiles(args.table), args)
    rows = []
    for i in range(len(table)):
        key = table.trial_keys[i]
        rows.append([*key, *(repr(float(v)) for v in table.X[i]),
                     "".join("1" if f else "0" for f in table.imputed[i]), table.classes[table.y[i]]])
    _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no",
                            *table.feature_names, "imputed", "label"]))


def _cv_rows(report):
    rows = [["model", report.model_descriptor], ["seed", report.rng_seed],
            ["instances", report.confusion.total], ["correct", report.confusion.trace],
            ["accuracy", f"{float(report.accuracy):.6f}"]]

    def fmt(v):
        return "undefined" if v is None else f"{float(v):.6f}"

    for c in report.confusion.classes:
        rows += [[f"precision.{c}", fmt(report.precision[c])], [f"recall.{c}", fmt(report.recall[c])],
                 [f"f_score.{c}", fmt(report.f_score[c])]]
    rows += [["macro_precision", fmt(report.macro_precision)], ["macro_recall", fmt(report.macro_recall)],
             ["macro_f_score", fmt(report.macro_f_score)]]
    return rows


def cmd_cv(args):
    table = _table(_read_profiles(args.table), args)
    if args.drop:
        ranking = classify.rank_attributes(table)
        dropped = set(ranking.names(args.drop))
        keep = [n for n in table.feature_names if n not in dropped]
        if not keep:
            raise GaitError(f"dropping category {args.drop} removes every feature")
        table = table.select_features(keep)
    report = classify.cross_validate(table, args.model, args.folds, args.seed, **_model_params(args))
    if args.report == "confusion":
        _emit(args, report.confusion.to_csv())
    elif args.report == "folds":
        rows = [[*table.trial_keys[i], table.classes[table.y[i]], f] for i, f in enumerate(report.fold_assignments)]
        _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no", "label", "fold"]))
    else:
        _emit(args, _csv(_cv_rows(report), ["metric", "value"]))


def cmd_rank(args):
    args.labeling = "binary"
    table = _table(_read_profiles(args.table), args)
    _emit(args, classify.rank_attributes(table).to_csv())


def cmd_synth(args):
    manifest, results = generate_corpus(args.out_dir, args.subjects, trials_per=args.trials, seed=args.seed,
                                        days=args.days, duration_s=args.duration)
    rows = [[*t.metadata.key, len(t)] for t, _ in results]
    print(f"wrote {len(results)} trials and {manifest}", file=sys.stderr)
    _emit(args, _csv(rows, ["subject_id", "condition", "camera", "day", "trial_no", "frames"]))


def cmd_plot(args):
    spec_kw = {"title": args.title or ""}
    if args.kind == "star":
        profiles = _read_profiles(args.table)
        if args.subject:
            profiles = [p for p in profiles if p.provenance.subject_id == args.subject]
        joints = group(args.joints)
        groups: dict[str, list[SeProfile]] = {}
        for p in profiles:
            groups.setdefault(p.provenance.condition.value, []).append(p)
        order = [c.value for c in Condition if c.value in groups]
        means = [(c, _mean_profile(groups[c], c)) for c in order]
        channels = [means[0][1].joint_key(j) for j in joints]
        svg = viz.star_glyph_svg(means, channels, viz.PlotSpec("StarGlyph", tuple(order), scale=args.scale, **spec_kw))
    elif args.kind == "box":
        profiles = _select(_read_profiles(args.table), args.condition)
        if not args.channel:
            raise UsageError("plot box needs --channel")
        groups: dict[str, list[float]] = {}
        for p in profiles:
            key = p.provenance.subject_id if args.group_by == "subject" else p.provenance.condition.value
            v = p.value(args.channel) if args.channel in p else None
            if v is not None:
                groups.setdefault(key, []).append(v)
        if args.group_by == "subject":
            items = [(k, groups[k]) for k in sorted(groups)]
        else:
            items = [(c.value, groups[c.value]) for c in Condition if c.value in groups]
        svg = viz.boxplot_svg(items, viz.PlotSpec("BoxPlot", y_label=f"SE {args.channel}", **spec_kw))
    elif args.kind == "interval":
        devices = DEVICES if args.device == "all" else (args.device,)
        pairs = _dstats(_read_profiles(args.table), devices, group(args.joints))
        ds = [d for _, d in pairs]
        labels = ()
        if len(devices) > 1 or len({day for day, _ in pairs}) > 1:
            labels = tuple(
                d.subject_id + (f"/{d.device.value}" if len(devices) > 1 else "")
                + (f"/d{day}" if len({day for day, _ in pairs}) > 1 else "")
                for day, d in pairs
            )
        svg = viz.interval_plot_svg(ds, viz.PlotSpec("IntervalPlot", labels, y_label="D", **spec_kw))
    else:
        table = _table(_read_profiles(args.table), args)
        models = args.models.split(",")
        acc = []
        for m in models:
            if m not in classify.MODELS:
                raise UsageError(f"unknown model {m}")
            acc.append((m, float(classify.cross_validate(table, m, args.folds, args.seed).accuracy)))
        svg = viz.accuracy_bar_svg(acc, viz.PlotSpec("BarChart", tuple(models), y_label="Accuracy (%)", **spec_kw))
    _emit(args, svg)


# -- parser ------------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaitse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write to this file instead of stdout")
        return sp

    def trim_opts(sp):
        sp.add_argument("--threshold", type=float, default=DEFAULT_JUMP_THRESHOLD_M, help="jump threshold in metres")
        sp.add_argument("--guard", type=int, default=DEFAULT_GUARD_FRAMES, help="extra frames cut inside each boundary")

    def jobs_opt(sp):
        sp.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")

    def table_arg(sp):
        sp.add_argument("table", help="entropy table written by 'gaitse entropy'")

    def model_opts(sp):
        sp.add_argument("--labeling", choices=("binary", "five"), default="binary")
        sp.add_argument("--joints", choices=JOINT_SETS, default="core15")
        sp.add_argument("--folds", type=_positive_int, default=10)
        sp.add_argument("--seed", type=int, default=0)

    sp = cmd("validate", cmd_validate, "parse every recording in a manifest and summarise it")
    sp.add_argument("manifest")

    sp = cmd("trim", cmd_trim, "remove boundary jump artifacts")
    sp.add_argument("manifest")
    sp.add_argument("--out-dir", help="also write trimmed recordings and a manifest here")
    trim_opts(sp)
    jobs_opt(sp)

    sp = cmd("tilt", cmd_tilt, "per-frame tilt angles")
    sp.add_argument("manifest")
    sp.add_argument("--params", default="V1,V2,V3", help="comma-separated gait parameters")
    sp.add_argument("--trim", action="store_true")

    sp = cmd("entropy", cmd_entropy, "sample entropy per trial and channel")
    sp.add_argument("manifest")
    sp.add_argument("--m", type=_positive_int, default=2)
    r = sp.add_mutually_exclusive_group()
    r.add_argument("--r", type=float, help="fixed tolerance for every channel")
    r.add_argument("--r-auto", action="store_true", help="r = fraction * sd per channel (default)")
    sp.add_argument("--r-fraction", type=float, default=0.2)
    sp.add_argument("--tau", type=_positive_int, default=1)
    sp.add_argument("--axis", choices=("X", "Y", "Z"), default="Y")
    sp.add_argument("--joints", choices=JOINT_SETS, default="core15")
    sp.add_argument("--gait-params", help="comma-separated gait parameters instead of joints, e.g. V1,V2,V3")
    sp.add_argument("--trim", action="store_true", help="trim boundary artifacts first")
    sp.add_argument("--segment", choices=("Both", "Forward", "Back"), default="Both")
    trim_opts(sp)
    jobs_opt(sp)

    sp = cmd("compare", cmd_compare, "D statistics of normal walking against a device")
    table_arg(sp)
    sp.add_argument("--device", choices=(*DEVICES, "all"), default="all")
    sp.add_argument("--joints", choices=JOINT_SETS, default="core15")

    for name, fn, help_ in (("anova", cmd_anova, "two-way day x subject ANOVA of one channel"),
                            ("grr", cmd_grr, "gauge R&R variance components of one channel")):
        sp = cmd(name, fn, help_)
        table_arg(sp)
        sp.add_argument("--channel", required=True, help="e.g. SpineBase:Y or V2")
        sp.add_argument("--condition", default="NW", help="condition whose trials form the design")
        if name == "anova":
            sp.add_argument("--interaction", choices=("auto", "yes", "no"), default="auto")
            sp.add_argument("--alpha", type=float, default=0.05)

    sp = cmd("features", cmd_features, "feature table used by the classifiers")
    table_arg(sp)
    model_opts(sp)

    sp = cmd("cv", cmd_cv, "stratified cross-validation of one model")
    table_arg(sp)
    model_opts(sp)
    sp.add_argument("--model", choices=tuple(classify.MODELS), default="knn")
    sp.add_argument("--k", type=_positive_int, default=1, help="neighbours for knn")
    sp.add_argument("--c", type=float, default=5.0, help="SVM cost")
    sp.add_argument("--trees", type=_positive_int, default=100, help="trees for rf")
    sp.add_argument("--report", choices=("metrics", "confusion", "folds"), default="metrics")
    sp.add_argument("--drop", choices=("A", "B", "C"), help="drop features of this ranking category first")

    sp = cmd("rank", cmd_rank, "rank features by |r| with the binary label")
    table_arg(sp)
    sp.add_argument("--joints", choices=JOINT_SETS, default="core15")

    sp = cmd("synth", cmd_synth, "write a synthetic labelled corpus")
    sp.add_argument("--subjects", type=_positive_int, default=10)
    sp.add_argument("--trials", type=_positive_int, default=3)
    sp.add_argument("--days", type=_positive_int, default=1)
    sp.add_argument("--duration", type=float, default=7.0, help="seconds per trial")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", required=True)

    sp = cmd("plot", cmd_plot, "SVG figures")
    sp.add_argument("kind", choices=("star", "box", "interval", "bar"))
    table_arg(sp)
    sp.add_argument("--joints", choices=JOINT_SETS, default="middle5")
    sp.add_argument("--subject", help="star: restrict to one subject")
    sp.add_argument("--scale", choices=("shared", "independent"), default="shared")
    sp.add_argument("--channel", help="box: channel to plot")
    sp.add_argument("--condition", help="box: only this condition")
    sp.add_argument("--group-by", choices=("subject", "condition"), default="condition")
    sp.add_argument("--device", choices=(*DEVICES, "all"), default="KB")
    sp.add_argument("--models", default="knn,logit,rf,svm")
    sp.add_argument("--labeling", choices=("binary", "five"), default="binary")
    sp.add_argument("--folds", type=_positive_int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--title")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"gaitse: usage error: {exc}", file=sys.stderr)
        return 2
    except (GaitError, ValueError, OSError) as exc:
        print(f"gaitse: {type(exc).__name__}: {exc}", file=sys.stderr)
        for name, cause in getattr(exc, "errors", None) or ():
            print(f"  {name}: {cause}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
