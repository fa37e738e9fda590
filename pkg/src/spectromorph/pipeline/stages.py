"""Pipeline stages: preprocess, estimate, test, morph, plot.

Every stage reads and writes under ``config.out_dir``:

    index.csv                 tokens produced by preprocess
    surfaces/<token>.fgrd     smoothed, standardized, aligned dB surface
    warps/<token>.fgrd        alignment warp (knots, values)
    phase/<token>.fgrd        cos/sin of the original STFT phase
    models/<language>/        word means and separable covariance
    tests/                    p-value tables (CSV) and figure
    morph/<name>/             one surface, WAV, PGM and CSV per path step
    report.json               timings, failures and test tables per stage
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from collections import defaultdict

import numpy as np

from .. import covstats, morph, permtest, registration, smoothing, stft
from ..audio_io import read_wav, resample, write_wav
from ..errors import DataError, InsufficientSampleError, SpectroError
from ..surface import GridSurface
from . import plotting, storage
from .config import RunConfig
from .manifest import read_manifest

LOG = logging.getLogger(__name__)

INDEX_HEADER = ("language", "word", "speaker", "token", "n_samples", "smoothing")


class Report:
    """Accumulates one stage's record and merges it into report.json."""

    def __init__(self, config: RunConfig, stage: str):
        self.config = config
        self.stage = stage
        self.record = {"failures": [], "timings": {}}
        self._t0 = time.perf_counter()

    def timing(self, name, seconds):
        self.record["timings"][name] = round(seconds, 6)

    def failure(self, item, exc):
        self.record["failures"].append({"item": str(item), "error": type(exc).__name__,
                                        "message": str(exc)})

    def write(self):
        self.timing("total", time.perf_counter() - self._t0)
        path = os.path.join(self.config.out_dir, "report.json")
        report = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                report = json.load(fh)
        report.setdefault("config", {}).update(self.config.to_dict())
        report["config_hash"] = self.config.analysis_hash()
        report.setdefault("stages", {})[self.stage] = self.record
        storage.atomic_write(path, (json.dumps(report, sort_keys=True, indent=1,
                                               default=repr) + "\n").encode("utf-8"))
        return self.record


def _paths(out_dir, token):
    return (os.path.join(out_dir, "surfaces", token + ".fgrd"),
            os.path.join(out_dir, "warps", token + ".fgrd"),
            os.path.join(out_dir, "phase", token + ".fgrd"))


def analyse_recording(rec, config: RunConfig):
    """Recording -> (standardized smoothed surface, STFT, chosen s)."""
    if rec.sample_rate != config.sample_rate:
        rec = resample(rec, config.sample_rate)
    window = stft.gaussian_window(config.sigma, config.sample_rate, config.half_width)
    spec = stft.forward_stft(rec, window, config.hop)
    raw = stft.log_spectrogram(spec, config.floor)
    smooth, s = smoothing.smooth_grid(raw, config.smoothing, return_s=True)
    std = registration.standardize_time(smooth, config.n_time, config.n_freq)
    return std, spec, s


def preprocess(manifest_path, config: RunConfig) -> dict:
    """Turn every manifest recording into a registered surface on disk.

    Files that fail to load or analyse are reported and skipped; the rest of
    the corpus is processed. Registration groups all tokens of one word
    across languages.
    """
    report = Report(config, "preprocess")
    h = config.analysis_hash()
    entries = read_manifest(manifest_path)
    done = {}
    t0 = time.perf_counter()
    for e in entries:
        try:
            rec = read_wav(e.path).with_tags(e.language, e.word, e.speaker)
            surf, spec, s = analyse_recording(rec, config)
        except (SpectroError, OSError, ValueError) as exc:
            LOG.warning("skipping %s: %s", e.path, exc)
            report.failure(e.path, exc)
            continue
        tags = {"language": e.language, "word": e.word, "speaker": e.speaker}
        done[e.key] = (surf.with_values(surf.values, tags=tags), spec, s)
    report.timing("analysis", time.perf_counter() - t0)

    t0 = time.perf_counter()
    by_word = defaultdict(list)
    for key in sorted(done):
        by_word[key[1]].append(key)
    warps = {}
    for word in sorted(by_word):
        keys = by_word[word]
        group = [done[k][0] for k in keys]
        if config.register:
            lam = config.warp_lambda
            if lam is None:
                lam = registration.default_lambda(group, config.lambda_scale)
            ws = registration.global_warps(group, lam, n_interior=config.n_interior)
        else:
            ws = [registration.WarpFunction.identity(config.n_interior) for _ in keys]
        warps.update(zip(keys, ws))
    report.timing("registration", time.perf_counter() - t0)

    rows = []
    for key in sorted(done):
        surf, spec, s = done[key]
        token = storage.token_name(*key)
        ps, pw, pp = _paths(config.out_dir, token)
        aligned = registration.apply_warp(surf, warps[key])
        storage.save_surface(ps, aligned, h)
        storage.save_warp(pw, warps[key], h)
        storage.save_phase(pp, spec.phase, h, n_samples=spec.n_samples,
                           sample_rate=spec.sample_rate, hop=spec.hop)
        rows.append([*key, token, spec.n_samples, repr(s)])
    plotting.write_table(rows, INDEX_HEADER, os.path.join(config.out_dir, "index.csv"))
    report.record["n_surfaces"] = len(rows)
    report.record["n_failures"] = len(report.record["failures"])
    return report.write()


def read_index(out_dir) -> list:
    path = os.path.join(out_dir, "index.csv")
    if not os.path.exists(path):
        raise DataError(f"{path} missing: run preprocess first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_token(config: RunConfig, token: str):
    """(surface, warp, phase, phase metadata) of one preprocessed token."""
    h = config.analysis_hash()
    ps, pw, pp = _paths(config.out_dir, token)
    phase, meta = storage.load_phase(pp, h)
    return storage.load_surface(ps, h), storage.load_warp(pw, h), phase, meta


def load_surfaces(config: RunConfig) -> dict:
    """language -> word -> list of surfaces (sorted by speaker)."""
    h = config.analysis_hash()
    out = defaultdict(lambda: defaultdict(list))
    for row in read_index(config.out_dir):
        ps = _paths(config.out_dir, row["token"])[0]
        out[row["language"]][row["word"]].append(storage.load_surface(ps, h))
    return out


def estimate(config: RunConfig) -> dict:
    """Fit and persist one language model per language."""
    report = Report(config, "estimate")
    h = config.analysis_hash()
    data = load_surfaces(config)
    fig_dir = os.path.join(config.out_dir, "figures")
    models = {}
    for lang in sorted(data):
        try:
            model = covstats.fit_language_model(lang, data[lang])
        except SpectroError as exc:
            report.failure(lang, exc)
            continue
        d = storage.save_model(config.out_dir, model, h)
        for axis, C in (("freq", model.sepcov.freq), ("time", model.sepcov.time)):
            plotting.write_csv(C.matrix, os.path.join(d, f"cov_{axis}.csv"))
            plotting.plot_matrix(
                C.matrix, os.path.join(fig_dir, f"cov_{axis}_{storage.safe_name(lang)}.png"),
                title=f"{lang}: {axis} covariance",
                grid=C.axis_grid / 1000 if axis == "freq" else C.axis_grid,
                label="kHz" if axis == "freq" else "time")
        models[lang] = d
    report.record["models"] = models
    return report.write()


def _test_seed(seed, *parts):
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def run_tests(config: RunConfig, targets=permtest.TARGETS, group_by: str = "word") -> dict:
    """Permutation tests per language (groups = words), or across languages.

    Writes ``tests/pvalues.csv`` (one row per test and adjustment, one
    column per language), ``tests/details.csv`` and a bar chart.
    """
    if config.seed is None:
        raise ValueError("a seed is required for permutation tests")
    report = Report(config, "test")
    data = load_surfaces(config)
    # stale models must not be mixed with fresh surfaces
    for lang in data:
        if os.path.exists(os.path.join(storage.model_dir(config.out_dir, lang), "model.json")):
            storage.load_model(config.out_dir, lang, config.analysis_hash())

    details = []
    table = defaultdict(dict)
    if group_by == "word":
        columns = sorted(data)
        units = [(lang, {w: g for w, g in data[lang].items() if len(g) >= 2})
                 for lang in columns]
    elif group_by == "language":
        targets = [t for t in targets if t != "mean"]
        # raw surfaces stratified by word: every labelling is re-centred
        # within (language, word) cells, which keeps the test exact
        pooled, words = {}, {}
        for lang in sorted(data):
            cells = [w for w in sorted(data[lang]) if len(data[lang][w]) >= 2]
            pooled[lang] = [s for w in cells for s in data[lang][w]]
            words[lang] = [w for w in cells for _ in data[lang][w]]
        columns = ["all"]
        units = [("all", pooled)]
    else:
        raise ValueError("group_by must be 'word' or 'language'")

    for ui, (col, groups) in enumerate(units):
        obs = [s for g in sorted(groups) for s in groups[g]]
        labels = [g for g in sorted(groups) for _ in groups[g]]
        strata = None if group_by == "word" else [w for g in sorted(groups) for w in words[g]]
        for ti, target in enumerate(targets):
            t0 = time.perf_counter()
            seed = _test_seed(config.seed, ui, permtest.TARGETS.index(target))
            try:
                res = permtest.permutation_test(obs, labels, target, config.M, seed,
                                                 strata=strata)
            except (InsufficientSampleError, ValueError) as exc:
                report.failure(f"{col}/{target}", exc)
                continue
            report.timing(f"{col}/{target}", time.perf_counter() - t0)
            table[target][col] = res.p_value
            details.append({"column": col, "target": target, "T0": res.T0,
                            "p_value": res.p_value, "M": res.M, "seed": res.seed,
                            "n_groups": len(groups), "n_obs": len(obs)})

    rows = []
    for target in targets:
        raw = [table[target].get(c) for c in columns]
        present = [p for p in raw if p is not None]
        adj = iter(permtest.bonferroni(present, len(present)))
        adjusted = [next(adj) if p is not None else None for p in raw]
        fmt = lambda v: "" if v is None else repr(float(v))
        rows.append([target, "raw", *map(fmt, raw)])
        rows.append([target, "bonferroni", *map(fmt, adjusted)])
        for d in details:
            if d["target"] == target and d["p_value"] is not None:
                d["p_bonferroni"] = adjusted[columns.index(d["column"])]
    test_dir = os.path.join(config.out_dir, "tests")
    suffix = "" if group_by == "word" else "_by_language"
    plotting.write_table(rows, ["test", "adjustment", *columns],
                         os.path.join(test_dir, f"pvalues{suffix}.csv"))
    keys = ["column", "target", "T0", "p_value", "p_bonferroni", "M", "seed",
            "n_groups", "n_obs"]
    plotting.write_table([[d.get(k, "") for k in keys] for d in details], keys,
                         os.path.join(test_dir, f"details{suffix}.csv"))
    if table:
        plotting.plot_pvalues(dict(table), os.path.join(test_dir, f"pvalues{suffix}.png"))
    report.record["tables"] = {t: dict(v) for t, v in table.items()}
    report.record["details"] = details
    return report.write()


def find_token(config: RunConfig, language, word, speaker) -> str:
    for row in read_index(config.out_dir):
        if (row["language"], row["word"], row["speaker"]) == (language, word, speaker):
            return row["token"]
    raise DataError(f"unknown token {language}/{word}/{speaker}")


def nearest_token(config: RunConfig, target: GridSurface, language, word):
    """Observed token of `word` in `language` closest to `target` in L2."""
    best = None
    for row in read_index(config.out_dir):
        if row["language"] != language or row["word"] != word:
            continue
        s = storage.load_surface(_paths(config.out_dir, row["token"])[0],
                                 config.analysis_hash())
        d = permtest.l2_surface_distance(s, target)
        if best is None or d < best[0]:
            best = (d, row["speaker"], row["token"])
    return best


def morph_token(config: RunConfig, language, word, speaker, dst_language, xs,
                kind: str = "morph", paired_speaker=None, flip: bool = False,
                name: str | None = None) -> dict:
    """Export the path of one token towards another language.

    kind : "morph" (whiten then colour along the interpolated language),
        "mean" (word mean path), "cross" (only the endpoint mapping, ignores
        `xs`) or "paired" (blend with an observed destination token; the
        nearest one to the mapped token unless `paired_speaker` is given).
    """
    report = Report(config, "morph")
    h = config.analysis_hash()
    src = storage.load_model(config.out_dir, language, h)
    dst = storage.load_model(config.out_dir, dst_language, h)
    token = find_token(config, language, word, speaker)
    S, warp, phase, pmeta = load_token(config, token)

    mapped = morph.cross_language(S, src, dst, word, config.rel_tol)
    near = nearest_token(config, mapped, dst_language, word)
    S2 = None
    if kind == "paired":
        spk2 = paired_speaker if paired_speaker is not None else (near[1] if near else None)
        if spk2 is None:
            raise DataError(f"no {dst_language} token of {word!r} to pair with")
        S2 = load_token(config, find_token(config, dst_language, word, spk2))[0]
    if kind == "cross":
        xs = [1.0]

    name = name or f"{token}__to__{storage.safe_name(dst_language)}__{kind}"
    d = os.path.join(config.out_dir, "morph", name)
    window = stft.gaussian_window(config.sigma, config.sample_rate, config.half_width)
    outputs = []
    surfaces = []
    for x in xs:
        x = float(x)
        if kind == "morph":
            out = morph.morph_path(S, src, dst, word, x, config.rel_tol)
        elif kind == "cross":
            out = mapped
        elif kind == "mean":
            out = morph.mean_path(src.mean(word), dst.mean(word), x)
        elif kind == "paired":
            out = morph.paired_path(S, S2, src, dst, word, x, flip, config.rel_tol)
        else:
            raise ValueError(f"unknown path kind {kind!r}")
        out = out.with_values(out.values, units="dB", tags={"language": f"{language}->{dst_language}",
                                                           "word": word, "speaker": speaker})
        stem = os.path.join(d, f"step_{len(outputs):02d}")
        storage.save_surface(stem + ".fgrd", out, h, x=x)
        audio = morph.resynthesize(out, phase, warp, config.hop, window,
                                   config.sample_rate, int(pmeta["n_samples"]))
        write_wav(audio, stem + ".wav")
        plotting.write_pgm(out.values, stem + ".pgm")
        plotting.write_csv(out.values, stem + ".csv")
        outputs.append({"x": x, "surface": stem + ".fgrd", "wav": stem + ".wav"})
        surfaces.append(out)
    plotting.plot_path(surfaces, [o["x"] for o in outputs], os.path.join(d, "path.png"),
                       title=f"{word}: {language} -> {dst_language}")
    summary = {"source": token, "dst_language": dst_language, "kind": kind,
               "steps": outputs,
               "nearest": None if near is None else
               {"speaker": near[1], "token": near[2], "l2_distance": near[0]}}
    storage.atomic_write(os.path.join(d, "summary.json"),
                         (json.dumps(summary, sort_keys=True, indent=1) + "\n").encode())
    report.record.update(summary)
    return report.write()


def plot_artifact(path, out_prefix) -> list:
    """PGM + CSV (+ PNG) rendering of an FGRD1 artifact."""
    arr, meta = storage.read_grid(path)
    mat = arr if arr.ndim == 2 else arr.reshape(-1, arr.shape[-1])
    written = [out_prefix + ".pgm", out_prefix + ".csv", out_prefix + ".png"]
    plotting.write_pgm(mat, written[0])
    plotting.write_csv(mat, written[1])
    if meta.get("kind") == "surface":
        plotting.plot_surface(storage.load_surface(path), written[2],
                              title=" / ".join(str(v) for v in meta.get("tags", {}).values()))
    else:
        plotting.plot_matrix(mat, written[2], title=meta.get("kind"))
    return written
