"""Command-line harness wiring the library into reproducible experiments.

Subcommands cover feature extraction, single explanations, the sample
count sweep, content-type stability and sensitivity sweeps, synthetic
dataset generation and ground-truth content selection.  Every run that
writes a report directory also writes a manifest (command, configuration,
master seed, input digests, version, timestamp); reports are pure
functions of the manifest minus its timestamp, so reruns and parallel
work pools produce byte-identical CSV/JSON output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .core import (
    SCALE_LOG_STANDARDIZED,
    DatasetStats,
    MelSpectrogram,
    dataset_stats,
    load_spectrogram,
    save_spectrogram,
)
from .explainer import SIGN_ANY, SIGN_POSITIVE_ONLY, ExplainerConfig, explain, with_seed
from .features import (
    DEFAULT_CONTEXT,
    FeatureConfig,
    extract_mel,
    label_at,
    read_label_events,
    read_wav,
    slice_excerpts,
    standardize,
)
from .metrics import (
    CSV_COLUMNS,
    common_components,
    overlap_with_ground_truth,
    stability_trial,
    summarize,
)
from .perturbation import CONTENT_NAMES, ContentType
from .predictors import build_predictor
from .seeding import stable_seed
from .segmentation import SegmentationScheme, segment_uniform
from .synthdata import (
    StemPair,
    SynthExcerpt,
    aggregate_selection,
    filter_true_positives,
    generate_dataset,
    read_annotations,
    write_annotations,
)

_AXIS_ALIASES = {
    "temporal": "temporal",
    "spectral": "spectral",
    "tf": "time_frequency",
    "time_frequency": "time_frequency",
}


class UsageError(ValueError):
    """Bad flag combination; maps to exit code 2."""


def _canonical_axis(name: str) -> str:
    try:
        return _AXIS_ALIASES[name]
    except KeyError:
        raise UsageError(f"unknown axis {name!r}; expected temporal|spectral|tf") from None


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(output_dir: Path, command: str, config: dict, seed: int, inputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "inputs": {path.name: _sha256(path) for path in sorted(inputs)},
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_rows(path: Path, rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_dataset(dataset_dir: Path) -> list[tuple[str, MelSpectrogram, Path]]:
    files = sorted(dataset_dir.glob("*.mels"))
    if not files:
        raise UsageError(f"no .mels files in {dataset_dir}")
    excerpts = [(path.stem, load_spectrogram(path), path) for path in files]
    shapes = {spec.shape for _, spec, _ in excerpts}
    if len(shapes) != 1:
        raise UsageError(f"dataset mixes excerpt shapes: {sorted(shapes)}")
    return excerpts


def _parse_contents(names: str, stats: DatasetStats | None, scales: set[str]) -> list[ContentType]:
    contents = []
    for name in names.split(","):
        name = name.strip()
        if name not in CONTENT_NAMES:
            raise UsageError(f"unknown content type {name!r}; expected one of {CONTENT_NAMES}")
        if name == "min_data":
            if stats is None:
                raise UsageError("content min_data needs --stats <dataset_stats.json>")
            contents.append(ContentType.min_data(stats.min_value))
        elif name == "gaussian_std":
            if scales != {SCALE_LOG_STANDARDIZED} and stats is None:
                raise UsageError(
                    "content gaussian_std on non-standardized inputs needs --stats "
                    "<dataset_stats.json>"
                )
            contents.append(
                ContentType.gaussian_std(stats.band_stats if stats is not None else None)
            )
        else:
            contents.append(ContentType(name))
    return contents


def _explainer_config(args, n_samples: int | None = None) -> ExplainerConfig:
    return ExplainerConfig(
        n_samples=n_samples if n_samples is not None else args.samples,
        top_k=args.top,
        sign_filter=SIGN_POSITIVE_ONLY if args.positive_only else SIGN_ANY,
        kernel_width=args.kernel_width,
        ridge_lambda=args.ridge_lambda,
        seed=args.seed,
    )


def _build_scheme(args, shape: tuple[int, int]) -> SegmentationScheme:
    axis = _canonical_axis(args.axis)
    return segment_uniform(shape[0], shape[1], axis, args.components, args.freq_components)


def _resolve_predictor(args, scheme: SegmentationScheme | None, shape: tuple[int, int]):
    try:
        return build_predictor(
            args.predictor, default_scheme=scheme, input_shape=shape, base_dir=Path.cwd()
        )
    except (ValueError, OSError, KeyError) as exc:
        raise UsageError(f"cannot build predictor from {args.predictor!r}: {exc}") from exc


def _run_pool(tasks, jobs: int) -> list:
    """Run tasks (callables) and return their results in task order."""
    if jobs <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda task: task(), tasks))


def _report_failures(failures: list[tuple[str, Exception]]) -> int:
    for excerpt_id, exc in failures:
        print(f"error: excerpt {excerpt_id}: {exc}", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------- extract


def cmd_extract(args) -> int:
    wav_path = Path(args.wav)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    config = FeatureConfig(
        sample_rate_hz=args.sample_rate,
        frame_length=args.frame_length,
        hop_length=args.hop_length,
        n_bands=args.bands,
        fmin_hz=args.fmin,
        fmax_hz=args.fmax,
        log_floor=args.log_floor,
    )
    wav_files = sorted(wav_path.glob("*.wav")) if wav_path.is_dir() else [wav_path]
    if not wav_files:
        raise UsageError(f"no .wav files in {wav_path}")

    spectrograms = []
    for wav in wav_files:
        samples, rate = read_wav(wav)
        if rate != config.sample_rate_hz:
            raise UsageError(
                f"{wav}: sample rate {rate} does not match --sample-rate "
                f"{config.sample_rate_hz}; resampling is out of scope, pre-convert"
            )
        spectrograms.append((wav.stem, extract_mel(samples, config)))

    # Corpus statistics always describe the raw log-mel values; an external
    # stats file (e.g. from the training corpus) may drive standardization.
    stats = dataset_stats(spec for _, spec in spectrograms)
    stats.save(output_dir / "dataset_stats.json")
    if args.stats:
        stats = DatasetStats.load(args.stats)

    stride = args.stride if args.stride is not None else 2 * args.context + 1
    label_rows = []
    n_excerpts = 0
    for stem, spec in spectrograms:
        if args.standardize:
            spec = standardize(spec, stats.band_stats)
        events = None
        if args.labels:
            label_path = Path(args.labels)
            candidate = label_path / f"{stem}.lab" if label_path.is_dir() else label_path
            if candidate.exists():
                events = read_label_events(candidate)
        for excerpt in slice_excerpts(spec, context=args.context, stride=stride, source_id=stem):
            name = f"{stem}_f{excerpt.center_frame_index:06d}.mels"
            save_spectrogram(excerpt.spec, output_dir / name)
            n_excerpts += 1
            if events is not None:
                center_seconds = excerpt.center_frame_index * spec.hop_seconds
                label_rows.append((name, f"{center_seconds:.6f}", label_at(events, center_seconds)))
    if label_rows:
        with open(output_dir / "labels.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("excerpt_file", "center_seconds", "label"))
            writer.writerows(label_rows)

    _write_manifest(
        output_dir,
        "extract",
        {
            "feature_config": dataclasses.asdict(config),
            "context": args.context,
            "stride": stride,
            "standardize": args.standardize,
        },
        seed=0,
        inputs=wav_files,
    )
    print(f"extracted {n_excerpts} excerpts from {len(wav_files)} file(s) into {output_dir}")
    return 0


# ---------------------------------------------------------------- explain


def cmd_explain(args) -> int:
    input_path = Path(args.input)
    spec = load_spectrogram(input_path)
    scheme = _build_scheme(args, spec.shape)
    stats = DatasetStats.load(args.stats) if args.stats else None
    contents = _parse_contents(args.content, stats, {spec.scale})
    predictor = _resolve_predictor(args, scheme, spec.shape)
    config = _explainer_config(args)
    explanation = explain(spec, predictor, scheme, contents[0], config)
    text = explanation.to_json()
    if args.output:
        output_dir = Path(args.output)
        output_dir.mkdir(parents=True, exist_ok=True)
        (output_dir / "explanation.json").write_text(text + "\n")
        _write_manifest(
            output_dir,
            "explain",
            {
                "input": input_path.name,
                "predictor": args.predictor,
                "axis": scheme.axis,
                "components": args.components,
                "content": args.content,
                "samples": args.samples,
                "top": args.top,
                "positive_only": args.positive_only,
                "kernel_width": args.kernel_width,
                "ridge_lambda": args.ridge_lambda,
            },
            seed=args.seed,
            inputs=[input_path],
        )
    print(text)
    return 0


# ---------------------------------------------------------------- sweeps


def cmd_ns_sweep(args) -> int:
    dataset_dir = Path(args.dataset)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    excerpts = _load_dataset(dataset_dir)
    shape = excerpts[0][1].shape
    scheme = _build_scheme(args, shape)
    stats = DatasetStats.load(args.stats) if args.stats else None
    scales = {spec.scale for _, spec, _ in excerpts}
    content = _parse_contents(args.content, stats, scales)[0]
    predictor = _resolve_predictor(args, scheme, shape)
    ns_values = [int(v) for v in args.ns.split(",")]
    if any(v < 1 for v in ns_values):
        raise UsageError(f"--ns values must be positive, got {args.ns}")
    dataset_name = dataset_dir.name

    def make_task(excerpt_id: str, spec: MelSpectrogram, n_samples: int):
        def task():
            excerpt_seed = stable_seed(args.seed, excerpt_id)
            config = _explainer_config(args, n_samples=n_samples)
            seeds = [stable_seed(excerpt_seed, f"ns={n_samples}", t) for t in range(args.repeats)]
            try:
                result = stability_trial(
                    spec, predictor, scheme, content, config, k=args.repeats, seeds=seeds
                )
            except Exception as exc:  # keep the sweep going, report at the end
                return excerpt_id, n_samples, None, exc
            return excerpt_id, n_samples, result.u_n, None

        return task

    tasks = [
        make_task(excerpt_id, spec, n_samples)
        for excerpt_id, spec, _ in excerpts
        for n_samples in ns_values
    ]
    results = _run_pool(tasks, args.jobs)

    rows, failures = [], []
    values_by_ns: dict[int, list[int]] = {n: [] for n in ns_values}
    for excerpt_id, n_samples, u_n, exc in sorted(results, key=lambda r: (r[0], r[1])):
        if exc is not None:
            failures.append((excerpt_id, exc))
            continue
        rows.append((dataset_name, excerpt_id, scheme.axis, content.kind, n_samples, "u_n", u_n))
        values_by_ns[n_samples].append(u_n)
    _write_rows(output_dir / "un_rows.csv", rows)
    summary = {
        "metric": "u_n",
        "content": content.kind,
        "axis": scheme.axis,
        "repeats": args.repeats,
        "by_n_samples": {
            str(n): summarize(values) if values else None for n, values in values_by_ns.items()
        },
    }
    _write_json(output_dir / "summary.json", summary)
    _write_manifest(
        output_dir,
        "ns-sweep",
        {
            "dataset": dataset_name,
            "predictor": args.predictor,
            "axis": scheme.axis,
            "components": args.components,
            "content": args.content,
            "ns": ns_values,
            "repeats": args.repeats,
            "top": args.top,
            "jobs": args.jobs,
        },
        seed=args.seed,
        inputs=[path for _, _, path in excerpts],
    )
    return _report_failures(failures)


def _sweep_axes(args, shape) -> list[SegmentationScheme]:
    schemes = []
    for name in args.axes.split(","):
        axis = _canonical_axis(name.strip())
        schemes.append(
            segment_uniform(shape[0], shape[1], axis, args.components, args.freq_components)
        )
    return schemes


def cmd_content_stability(args) -> int:
    dataset_dir = Path(args.dataset)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    excerpts = _load_dataset(dataset_dir)
    shape = excerpts[0][1].shape
    schemes = _sweep_axes(args, shape)
    stats = DatasetStats.load(args.stats) if args.stats else None
    scales = {spec.scale for _, spec, _ in excerpts}
    contents = _parse_contents(args.contents, stats, scales)
    predictor = _resolve_predictor(args, schemes[0], shape)
    dataset_name = dataset_dir.name

    def make_task(excerpt_id: str, spec: MelSpectrogram, scheme: SegmentationScheme, content: ContentType):
        def task():
            excerpt_seed = stable_seed(args.seed, excerpt_id)
            config = _explainer_config(args)
            seeds = [
                stable_seed(excerpt_seed, scheme.axis, content.kind, t)
                for t in range(args.repeats)
            ]
            try:
                result = stability_trial(
                    spec, predictor, scheme, content, config, k=args.repeats, seeds=seeds
                )
            except Exception as exc:
                return excerpt_id, scheme.axis, content.kind, None, exc
            return excerpt_id, scheme.axis, content.kind, result.u_n, None

        return task

    tasks = [
        make_task(excerpt_id, spec, scheme, content)
        for excerpt_id, spec, _ in excerpts
        for scheme in schemes
        for content in contents
    ]
    results = _run_pool(tasks, args.jobs)

    rows, failures = [], []
    values_by_condition: dict[tuple[str, str], list[int]] = {}
    for excerpt_id, axis, content_name, u_n, exc in sorted(results, key=lambda r: (r[0], r[1], r[2])):
        if exc is not None:
            failures.append((excerpt_id, exc))
            continue
        rows.append((dataset_name, excerpt_id, axis, content_name, args.samples, "u_n", u_n))
        values_by_condition.setdefault((axis, content_name), []).append(u_n)
    _write_rows(output_dir / "un_rows.csv", rows)
    summary = {
        "metric": "u_n",
        "n_samples": args.samples,
        "repeats": args.repeats,
        "by_condition": {
            f"{axis}/{content_name}": summarize(values)
            for (axis, content_name), values in sorted(values_by_condition.items())
        },
    }
    _write_json(output_dir / "summary.json", summary)
    _write_manifest(
        output_dir,
        "content-stability",
        {
            "dataset": dataset_name,
            "predictor": args.predictor,
            "axes": args.axes,
            "components": args.components,
            "contents": args.contents,
            "samples": args.samples,
            "repeats": args.repeats,
            "jobs": args.jobs,
        },
        seed=args.seed,
        inputs=[path for _, _, path in excerpts],
    )
    return _report_failures(failures)


def cmd_content_sensitivity(args) -> int:
    dataset_dir = Path(args.dataset)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    excerpts = _load_dataset(dataset_dir)
    shape = excerpts[0][1].shape
    schemes = _sweep_axes(args, shape)
    stats = DatasetStats.load(args.stats) if args.stats else None
    scales = {spec.scale for _, spec, _ in excerpts}
    reference_content = _parse_contents(args.reference, stats, scales)[0]
    contents = [
        content
        for content in _parse_contents(args.contents, stats, scales)
        if content.kind != reference_content.kind
    ]
    if not contents:
        raise UsageError("--contents must name at least one non-reference content type")
    predictor = _resolve_predictor(args, schemes[0], shape)
    dataset_name = dataset_dir.name

    def make_task(excerpt_id: str, spec: MelSpectrogram, scheme: SegmentationScheme):
        def task():
            # One seed per (excerpt, axis) so all contents see identical masks.
            seed = stable_seed(args.seed, excerpt_id, scheme.axis)
            config = with_seed(_explainer_config(args), seed)
            try:
                reference = explain(spec, predictor, scheme, reference_content, config)
                pairs = []
                for content in contents:
                    other = explain(spec, predictor, scheme, content, config)
                    pairs.append((content.kind, common_components(reference, other).n_ce))
            except Exception as exc:
                return excerpt_id, scheme.axis, None, exc
            return excerpt_id, scheme.axis, pairs, None

        return task

    tasks = [
        make_task(excerpt_id, spec, scheme)
        for excerpt_id, spec, _ in excerpts
        for scheme in schemes
    ]
    results = _run_pool(tasks, args.jobs)

    rows, failures = [], []
    values_by_condition: dict[tuple[str, str], list[int]] = {}
    for excerpt_id, axis, pairs, exc in sorted(results, key=lambda r: (r[0], r[1])):
        if exc is not None:
            failures.append((excerpt_id, exc))
            continue
        for content_name, n_ce in pairs:
            rows.append((dataset_name, excerpt_id, axis, content_name, args.samples, "n_ce", n_ce))
            values_by_condition.setdefault((axis, content_name), []).append(n_ce)
    _write_rows(output_dir / "nce_rows.csv", rows)
    summary = {
        "metric": "n_ce",
        "reference": reference_content.kind,
        "n_samples": args.samples,
        "by_condition": {
            f"{axis}/{content_name}": summarize(values)
            for (axis, content_name), values in sorted(values_by_condition.items())
        },
    }
    _write_json(output_dir / "summary.json", summary)
    _write_manifest(
        output_dir,
        "content-sensitivity",
        {
            "dataset": dataset_name,
            "predictor": args.predictor,
            "axes": args.axes,
            "components": args.components,
            "contents": args.contents,
            "reference": args.reference,
            "samples": args.samples,
            "jobs": args.jobs,
        },
        seed=args.seed,
        inputs=[path for _, _, path in excerpts],
    )
    return _report_failures(failures)


# ---------------------------------------------------------------- synthetic


def _load_stem_pairs(stems_dir: Path) -> list[StemPair]:
    vocal_files = sorted(stems_dir.glob("*_vocal.mels"))
    pairs = []
    for vocal_file in vocal_files:
        song_id = vocal_file.name[: -len("_vocal.mels")]
        instrumental_file = stems_dir / f"{song_id}_instrumental.mels"
        if not instrumental_file.exists():
            raise UsageError(f"missing instrumental stem for {song_id}: {instrumental_file.name}")
        pairs.append(
            StemPair(
                vocal=load_spectrogram(vocal_file),
                instrumental=load_spectrogram(instrumental_file),
                song_id=song_id,
            )
        )
    if not pairs:
        raise UsageError(f"no *_vocal.mels stems in {stems_dir}")
    return pairs


def cmd_synth_gen(args) -> int:
    stems_dir = Path(args.stems)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    pairs = _load_stem_pairs(stems_dir)
    excerpts = generate_dataset(
        pairs,
        n_pairs_per_song=args.pairs,
        variants_per_pair=args.variants,
        excerpt_frames=args.excerpt_frames,
        seed=args.seed,
    )
    file_names = []
    for excerpt in excerpts:
        name = f"{excerpt.excerpt_id}.mels"
        save_spectrogram(excerpt.spec, output_dir / name)
        file_names.append(name)
    write_annotations(excerpts, output_dir / "annotations.jsonl", file_names)
    _write_manifest(
        output_dir,
        "synth-gen",
        {
            "stems": stems_dir.name,
            "pairs": args.pairs,
            "variants": args.variants,
            "excerpt_frames": args.excerpt_frames,
            "songs": len(pairs),
        },
        seed=args.seed,
        inputs=sorted(stems_dir.glob("*.mels")),
    )
    print(f"generated {len(excerpts)} annotated excerpts into {output_dir}")
    return 0


def _load_synth_dataset(dataset_dir: Path) -> list[SynthExcerpt]:
    annotations_path = dataset_dir / "annotations.jsonl"
    if not annotations_path.exists():
        raise UsageError(f"{dataset_dir} has no annotations.jsonl (run synth-gen first)")
    excerpts = []
    for record in read_annotations(annotations_path):
        spec = load_spectrogram(dataset_dir / record["excerpt_file"])
        scheme = segment_uniform(spec.n_frames, spec.n_bands, "temporal", 10)
        excerpts.append(
            SynthExcerpt(
                spec=spec,
                vocal_components=frozenset(record["vocal_components"]),
                scheme=scheme,
                song_id=record["song_id"],
                offset_frame=int(record["offset_frame"]),
                variant=int(record["variant"]),
            )
        )
    return excerpts


def cmd_select_content(args) -> int:
    dataset_dir = Path(args.dataset)
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    excerpts = _load_synth_dataset(dataset_dir)
    shape = excerpts[0].spec.shape
    stats = DatasetStats.load(args.stats) if args.stats else None
    scales = {excerpt.spec.scale for excerpt in excerpts}
    contents = _parse_contents(args.contents, stats, scales)
    predictor = _resolve_predictor(args, excerpts[0].scheme, shape)

    kept = filter_true_positives(excerpts, predictor, args.threshold)
    if not kept:
        print("error: no true-positive excerpts to analyse", file=sys.stderr)
        return 1
    config = ExplainerConfig(
        n_samples=args.samples,
        top_k=args.top,
        sign_filter=SIGN_POSITIVE_ONLY,
        kernel_width=args.kernel_width,
        ridge_lambda=args.ridge_lambda,
        seed=args.seed,
    )

    def make_task(excerpt: SynthExcerpt):
        def task():
            excerpt_seed = stable_seed(config.seed, excerpt.excerpt_id)
            try:
                pairs = []
                for content in contents:
                    explanation = explain(
                        excerpt.spec,
                        predictor,
                        excerpt.scheme,
                        content,
                        with_seed(config, excerpt_seed),
                    )
                    pairs.append(
                        (content.kind, overlap_with_ground_truth(explanation, excerpt.vocal_components))
                    )
            except Exception as exc:
                return excerpt.excerpt_id, None, exc
            return excerpt.excerpt_id, pairs, None

        return task

    ordered = sorted(kept, key=lambda e: e.excerpt_id)
    results = _run_pool([make_task(excerpt) for excerpt in ordered], args.jobs)

    rows, failures = [], []
    overlaps: dict[str, list[int]] = {content.kind: [] for content in contents}
    dataset_name = dataset_dir.name
    survivors = 0
    for excerpt_id, pairs, exc in results:
        if exc is not None:
            failures.append((excerpt_id, exc))
            continue
        survivors += 1
        for content_name, n_ce in pairs:
            rows.append(
                (dataset_name, excerpt_id, "temporal", content_name, args.samples, "n_ce_truth", n_ce)
            )
            overlaps[content_name].append(n_ce)
    if survivors == 0:
        return _report_failures(failures)
    report = aggregate_selection(overlaps, survivors)
    _write_rows(output_dir / "nce_truth_rows.csv", rows)
    (output_dir / "selection_report.json").write_text(report.to_json() + "\n")
    _write_manifest(
        output_dir,
        "select-content",
        {
            "dataset": dataset_name,
            "predictor": args.predictor,
            "contents": args.contents,
            "samples": args.samples,
            "top": args.top,
            "threshold": args.threshold,
            "n_generated": len(excerpts),
            "n_true_positives": len(kept),
            "jobs": args.jobs,
        },
        seed=args.seed,
        inputs=[dataset_dir / "annotations.jsonl"],
    )
    best = report.ranking[0]
    print(
        f"{len(kept)}/{len(excerpts)} true positives; best content: {best} "
        f"(full match {report.per_content[best].full_match_proportion:.3f})"
    )
    return _report_failures(failures)


# ---------------------------------------------------------------- parser


def _add_explainer_flags(parser: argparse.ArgumentParser, samples_default: int = 1000) -> None:
    parser.add_argument("--samples", type=int, default=samples_default,
                        help="synthetic samples per explanation")
    parser.add_argument("--top", type=int, default=3, help="components per explanation")
    parser.add_argument("--positive-only", action="store_true",
                        help="rank only positively influencing components")
    parser.add_argument("--kernel-width", type=float, default=0.25,
                        help="proximity kernel sigma")
    parser.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0,
                        help="ridge regularization strength")
    parser.add_argument("--seed", type=int, default=0, help="master seed")


def _add_scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--components", type=int, default=10, help="components along the split axis")
    parser.add_argument("--freq-components", type=int, default=None,
                        help="frequency slabs for the time_frequency axis")
    parser.add_argument("--stats", default=None, help="dataset_stats.json (min_data/gaussian_std)")
    parser.add_argument("--predictor", required=True,
                        help="builtin:<spec>, exec:<command> or tcp:<host>:<port>")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="melexplain",
        description="Occlusion-based local explanations for audio classifiers, "
                    "with reliability measurement.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="WAV files to log-mel excerpt files")
    p.add_argument("--wav", required=True, help="WAV file or directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--labels", default=None, help="label file or directory (.lab)")
    p.add_argument("--context", type=int, default=DEFAULT_CONTEXT)
    p.add_argument("--stride", type=int, default=None,
                   help="frames between excerpt starts (default: one excerpt width)")
    p.add_argument("--standardize", action="store_true",
                   help="apply per-band corpus standardization to the excerpts")
    p.add_argument("--stats", default=None,
                   help="standardize with this dataset_stats.json instead of corpus stats")
    p.add_argument("--sample-rate", type=int, default=22050)
    p.add_argument("--frame-length", type=int, default=1024)
    p.add_argument("--hop-length", type=int, default=315)
    p.add_argument("--bands", type=int, default=80)
    p.add_argument("--fmin", type=float, default=27.5)
    p.add_argument("--fmax", type=float, default=8000.0)
    p.add_argument("--log-floor", type=float, default=1e-7)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("explain", help="explain one excerpt")
    p.add_argument("--input", required=True, help="excerpt .mels file")
    p.add_argument("--axis", default="temporal", help="temporal|spectral|tf")
    p.add_argument("--content", default="zero", help="occlusion content type")
    p.add_argument("--output", default=None, help="optional report directory")
    _add_scheme_flags(p)
    _add_explainer_flags(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("ns-sweep", help="explanation stability vs sample count")
    p.add_argument("--dataset", required=True, help="directory of excerpt .mels files")
    p.add_argument("--ns", required=True, help="comma-separated sample counts")
    p.add_argument("--repeats", type=int, default=5, help="explanations per stability trial")
    p.add_argument("--content", default="zero")
    p.add_argument("--axis", default="temporal")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--output", required=True)
    _add_scheme_flags(p)
    _add_explainer_flags(p)
    p.set_defaults(func=cmd_ns_sweep)

    p = sub.add_parser("content-stability", help="explanation stability per content type")
    p.add_argument("--dataset", required=True)
    p.add_argument("--contents", default="zero,min_data,min_inp,mean_inp,gaussian_std")
    p.add_argument("--axes", default="temporal,spectral")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", required=True)
    _add_scheme_flags(p)
    _add_explainer_flags(p, samples_default=70000)
    p.set_defaults(func=cmd_content_stability)

    p = sub.add_parser("content-sensitivity",
                       help="explanation agreement between content types")
    p.add_argument("--dataset", required=True)
    p.add_argument("--contents", default="min_inp,mean_inp,gaussian_std")
    p.add_argument("--reference", default="zero")
    p.add_argument("--axes", default="temporal,spectral")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", required=True)
    _add_scheme_flags(p)
    _add_explainer_flags(p, samples_default=70000)
    p.set_defaults(func=cmd_content_sensitivity)

    p = sub.add_parser("synth-gen", help="generate annotated synthetic excerpts from stems")
    p.add_argument("--stems", required=True,
                   help="directory of <song>_vocal.mels / <song>_instrumental.mels pairs")
    p.add_argument("--pairs", type=int, default=10, help="excerpt pairs per song")
    p.add_argument("--variants", type=int, default=4, help="vocal splices per pair")
    p.add_argument("--excerpt-frames", type=int, default=115)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("select-content", help="rank content types against ground truth")
    p.add_argument("--dataset", required=True, help="synth-gen output directory")
    p.add_argument("--contents", default="zero,min_inp,mean_inp,gaussian_std")
    p.add_argument("--threshold", type=float, default=0.5, help="vocal decision threshold")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", required=True)
    _add_scheme_flags(p)
    _add_explainer_flags(p)
    p.set_defaults(func=cmd_select_content)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
