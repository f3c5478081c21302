"""Command-line surface for the virtual rig and its analysis pipelines.

Exit codes: 0 success, 2 usage error (argument parsing), 3 missing
input file, 4 malformed input file, 5 estimator/procedure failure.

All outputs are deterministic for a fixed --seed and --config: reports
are JSON with sorted keys and no timestamps, tables are CSV with fixed
float formatting.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import rig
from .budget import compare_to_simulation, infer_coupling, read_budget_file
from .config import default_config_values, read_config_file, rig_config_from, source_params_from
from .coupling import CouplingModel, CouplingQuery, coupling_map
from .errors import PigtailSimError
from .modes import DeviceSpec, FiberSpec, PillarSpec
from .photons import (
    HBT,
    HOM,
    TimeTags,
    analyze_stream,
    fit_saturation,
    g2_zero,
    histogram_coincidences,
    hom_visibility,
    indistinguishability,
    simulate_stream,
    simulate_stability_series,
    stability_stats,
)
from .spectra import Spectrum, estimate_gap, find_mode_dips

EXIT_MISSING_INPUT = 3
EXIT_BAD_FORMAT = 4
EXIT_COMPUTE_FAILED = 5


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _require_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.exists():
        _fail(EXIT_MISSING_INPUT, f"input file not found: {path}")
    return path


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed for all randomized procedures.")
@click.option("--config", "config_path", type=str, default=None,
              help="Key-value config file overriding model defaults.")
@click.option("--out", "out_dir", type=str, default=".", show_default=True,
              help="Directory for output files.")
@click.pass_context
def main(ctx, seed, config_path, out_dir):
    """Digital twin of a fiber-pigtailed single-photon source."""
    values = default_config_values()
    if config_path is not None:
        path = _require_file(config_path)
        try:
            values.update(read_config_file(path))
        except (PigtailSimError, ValueError) as exc:
            _fail(EXIT_BAD_FORMAT, f"bad config file: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx.obj = {"seed": seed, "values": values, "out": out}


def _rig_config(ctx) -> rig.RigConfig:
    try:
        return rig_config_from(ctx.obj["values"])
    except (PigtailSimError, TypeError, ValueError) as exc:
        _fail(EXIT_BAD_FORMAT, f"bad rig config: {exc}")


def _source_params(ctx):
    try:
        return source_params_from(ctx.obj["values"])
    except (TypeError, ValueError) as exc:
        _fail(EXIT_BAD_FORMAT, f"bad source config: {exc}")


@main.command("coupling-map")
@click.option("--diameter-min", type=float, default=2.0, show_default=True)
@click.option("--diameter-max", type=float, default=3.5, show_default=True)
@click.option("--diameter-step", type=float, default=0.1, show_default=True)
@click.option("--gaps", type=str, default="0.23,1.0,2.0,3.5", show_default=True)
@click.option("--offset-max", type=float, default=1.4, show_default=True)
@click.option("--offset-step", type=float, default=0.2, show_default=True)
@click.option("--binary/--no-binary", default=False, show_default=True,
              help="Also write the versioned binary grid file.")
@click.pass_context
def coupling_map_cmd(ctx, diameter_min, diameter_max, diameter_step, gaps,
                     offset_max, offset_step, binary):
    """Sweep pillar-to-fiber coupling over diameter, gap and offset."""
    out = ctx.obj["out"]
    diameters = np.arange(diameter_min, diameter_max + 1e-9, diameter_step)
    gap_list = [float(g) for g in gaps.split(",") if g.strip()]
    offsets = np.arange(0.0, offset_max + 1e-9, offset_step)
    cmap = coupling_map(diameters, gap_list, offsets)
    csv_path = out / "coupling_map.csv"
    cmap.to_csv(csv_path)
    click.echo(f"wrote {csv_path}")
    if binary:
        bin_path = out / "coupling_map.cmap"
        cmap.to_binary(bin_path)
        click.echo(f"wrote {bin_path}")


@main.command("align-demo")
@click.pass_context
def align_demo(ctx):
    """Run a seeded session end to end: land, align, secure."""
    out = ctx.obj["out"]
    config = _rig_config(ctx)
    state = rig.new_session(DeviceSpec(), config, ctx.obj["seed"])
    try:
        state = rig.vertical_landing(state)
        state, report = rig.auto_align(state)
        if report.success:
            state = rig.secure(state)
    except PigtailSimError as exc:
        _fail(EXIT_COMPUTE_FAILED, f"alignment session failed: {exc}")
    report_path = out / "alignment_report.json"
    report_path.write_text(report.as_json() + "\n", encoding="utf-8")
    log_path = out / "alignment_events.ndjson"
    rig.write_event_log(state, log_path)
    click.echo(f"wrote {report_path}")
    click.echo(f"wrote {log_path}")
    click.echo(
        f"success={report.success} residual_um={report.residual_offset_um:.4f} "
        f"spectra={report.n_spectra_acquired}"
    )
    if not report.success:
        sys.exit(EXIT_COMPUTE_FAILED)


@main.command("cooldown-demo")
@click.option("--steps", type=int, default=30, show_default=True)
@click.pass_context
def cooldown_demo(ctx, steps):
    """Land, align, secure and cool to base temperature."""
    out = ctx.obj["out"]
    config = _rig_config(ctx)
    state = rig.new_session(DeviceSpec(), config, ctx.obj["seed"])
    try:
        state = rig.vertical_landing(state)
        state, report = rig.auto_align(state)
        if not report.success:
            _fail(EXIT_COMPUTE_FAILED, "alignment did not converge")
        state = rig.secure(state)
        state, series = rig.run_cooldown(state, n_steps=steps)
    except PigtailSimError as exc:
        _fail(EXIT_COMPUTE_FAILED, f"cooldown session failed: {exc}")

    rows = []
    for temp, spectrum in series:
        probe = dataclasses.replace(state, temperature_k=temp)
        dips = find_mode_dips(
            spectrum, state.device.pillar, probe.expected_mode_wavelengths_nm()
        )
        try:
            gap = estimate_gap(spectrum).gap_um
        except PigtailSimError:
            gap = float("nan")
        rows.append((temp, gap, dips[0].center_wavelength_nm, dips[0].contrast,
                     dips[1].contrast))
    series_path = out / "cooldown_series.csv"
    with open(series_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("temperature_k,gap_um,fundamental_nm,fundamental_contrast,"
                 "second_mode_contrast\n")
        for row in rows:
            fh.write(",".join(f"{v:.6g}" for v in row) + "\n")
    final_path = out / "cold_spectrum.csv"
    series[-1][1].to_csv(final_path)
    click.echo(f"wrote {series_path}")
    click.echo(f"wrote {final_path}")


@main.command("analyze-spectrum")
@click.argument("spectrum_file")
@click.pass_context
def analyze_spectrum(ctx, spectrum_file):
    """Estimate the gap and mode dips of a spectrum CSV."""
    path = _require_file(spectrum_file)
    try:
        spectrum = Spectrum.from_csv(path)
    except (ValueError, OSError) as exc:
        _fail(EXIT_BAD_FORMAT, f"bad spectrum file: {exc}")
    report: dict = {}
    try:
        gap = estimate_gap(spectrum)
        report["gap"] = {
            "gap_um": gap.gap_um,
            "sigma_um": gap.sigma_um,
            "method": gap.method,
            "n_maxima": gap.n_maxima,
        }
    except PigtailSimError as exc:
        report["gap"] = {"error": type(exc).__name__, "message": str(exc)}
    pillar = PillarSpec()
    dips = find_mode_dips(spectrum, pillar)
    report["dips"] = [
        {
            "mode_order": d.mode_order,
            "center_wavelength_nm": d.center_wavelength_nm,
            "contrast": d.contrast,
            "linewidth_nm": d.linewidth_nm,
            "found": d.found,
        }
        for d in dips
    ]
    out_path = ctx.obj["out"] / "spectrum_analysis.json"
    _write_json(out_path, report)
    click.echo(f"wrote {out_path}")


@main.command("analyze-tags")
@click.argument("hbt_file")
@click.argument("hom_file", required=False)
@click.pass_context
def analyze_tags(ctx, hbt_file, hom_file):
    """Correlation analysis of time-tag files: g2, and V/M with a HOM file."""
    path = _require_file(hbt_file)
    try:
        tags = TimeTags.from_binary(path)
    except (ValueError, OSError) as exc:
        _fail(EXIT_BAD_FORMAT, f"bad tag file: {exc}")
    report: dict = {}
    try:
        if tags.kind != HBT:
            _fail(EXIT_BAD_FORMAT, f"{hbt_file} is not an HBT tag file")
        g2 = g2_zero(histogram_coincidences(tags))
        report["g2_zero"] = [g2.value, g2.sigma]
        if hom_file:
            hom_path = _require_file(hom_file)
            hom_tags = TimeTags.from_binary(hom_path)
            if hom_tags.kind != HOM:
                _fail(EXIT_BAD_FORMAT, f"{hom_file} is not a HOM tag file")
            v = hom_visibility(histogram_coincidences(hom_tags))
            m, in_range = indistinguishability(v, g2)
            report["v_hom"] = [v.value, v.sigma]
            report["indistinguishability"] = [m.value, m.sigma]
            report["correction_in_range"] = in_range
    except PigtailSimError as exc:
        _fail(EXIT_COMPUTE_FAILED, f"correlation analysis failed: {exc}")
    out_path = ctx.obj["out"] / "tags_analysis.json"
    _write_json(out_path, report)
    click.echo(f"wrote {out_path}")


@main.command("budget")
@click.argument("budget_file")
@click.option("--simulated-coupling", type=float, default=None,
              help="Simulated coupling to compare against; computed from "
                   "the optics model when omitted.")
@click.pass_context
def budget_cmd(ctx, budget_file, simulated_coupling):
    """Invert the efficiency chain for the pillar-to-fiber coupling."""
    path = _require_file(budget_file)
    try:
        budget = read_budget_file(path)
    except (ValueError, OSError) as exc:
        _fail(EXIT_BAD_FORMAT, f"bad budget file: {exc}")
    try:
        inferred, in_range = infer_coupling(budget)
    except (PigtailSimError, ZeroDivisionError) as exc:
        _fail(EXIT_COMPUTE_FAILED, f"inversion failed: {exc}")
    if simulated_coupling is None:
        model = CouplingModel()
        simulated_coupling = model.efficiency(
            CouplingQuery(PillarSpec(), FiberSpec(), gap_um=3.5)
        )
    comparison = compare_to_simulation(inferred, simulated_coupling)
    report = {
        "pillar_to_fiber": [inferred.value, inferred.sigma],
        "in_range": in_range,
        "simulated_coupling": simulated_coupling,
        "sigma_distance": comparison.sigma_distance,
        "verdict": comparison.verdict,
        "assumptions": list(comparison.assumptions),
        "notes": list(comparison.notes),
    }
    out_path = ctx.obj["out"] / "budget_report.json"
    _write_json(out_path, report)
    click.echo(f"wrote {out_path}")
    click.echo(f"pillar_to_fiber = {inferred.value:.4f} +- {inferred.sigma:.4f}")


@main.command("photon-run")
@click.option("--pulses", type=int, default=2_000_000, show_default=True)
@click.option("--power", type=float, default=None,
              help="Excitation power; defaults to the operating point.")
@click.pass_context
def photon_run(ctx, pulses, power):
    """Simulate HBT and HOM streams and estimate the photon metrics."""
    out = ctx.obj["out"]
    seed = ctx.obj["seed"]
    params = _source_params(ctx)
    try:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tags_hbt = simulate_stream(params, pulses, power, seed, HBT)
            tags_hom = simulate_stream(params, pulses, power, seed + 1, HOM)
        hist_hbt = histogram_coincidences(tags_hbt)
        hist_hom = histogram_coincidences(tags_hom)
        metrics = analyze_stream(
            params, hist_hbt, hist_hom, tags_hbt.detected_rate_hz()
        )
    except PigtailSimError as exc:
        _fail(EXIT_COMPUTE_FAILED, f"photon run failed: {exc}")
    hist_hbt.to_csv(out / "hbt_histogram.csv")
    hist_hom.to_csv(out / "hom_histogram.csv")
    report = {
        "n_pulses": pulses,
        "g2_zero": [metrics.g2_zero.value, metrics.g2_zero.sigma],
        "v_hom": [metrics.v_hom.value, metrics.v_hom.sigma],
        "indistinguishability": [
            metrics.indistinguishability.value,
            metrics.indistinguishability.sigma,
        ],
        "detected_rate_hz": metrics.detected_rate_hz,
        "corrected_rate_hz": metrics.detected_rate_hz / params.detector.efficiency,
        "fibered_brightness": metrics.fibered_brightness,
    }
    out_path = out / "photon_metrics.json"
    _write_json(out_path, report)
    click.echo(f"wrote {out_path}")
    click.echo(
        f"g2(0)={metrics.g2_zero.value:.4f} V={metrics.v_hom.value:.4f} "
        f"M={metrics.indistinguishability.value:.4f}"
    )


@main.command("stability-run")
@click.option("--hours", type=float, default=10.0, show_default=True)
@click.option("--interval", type=float, default=60.0, show_default=True,
              help="Sample interval in seconds.")
@click.pass_context
def stability_run(ctx, hours, interval):
    """Generate and analyze rate/indistinguishability stability series."""
    out = ctx.obj["out"]
    seed = ctx.obj["seed"]
    t, rate = simulate_stability_series(
        16.75e6, 0.0282, duration_h=hours, sample_interval_s=interval, seed=seed
    )
    _, indist = simulate_stability_series(
        0.975, 0.0069, duration_h=hours, sample_interval_s=interval, seed=seed + 1
    )
    try:
        rate_stats = stability_stats(t, rate)
        ind_stats = stability_stats(t, indist)
    except PigtailSimError as exc:
        _fail(EXIT_COMPUTE_FAILED, f"stability analysis failed: {exc}")
    series_path = out / "stability_series.csv"
    with open(series_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,rate_hz,indistinguishability\n")
        for ti, ri, mi in zip(t, rate, indist):
            fh.write(f"{ti:.6g},{ri:.8g},{mi:.8g}\n")
    report = {
        "rate": {
            "mean_hz": rate_stats.mean,
            "relative_std": rate_stats.relative_std,
            "drift_per_hour_hz": rate_stats.drift_per_hour,
        },
        "indistinguishability": {
            "mean": ind_stats.mean,
            "relative_std": ind_stats.relative_std,
            "drift_per_hour": ind_stats.drift_per_hour,
        },
        "n_samples": rate_stats.n_samples,
    }
    out_path = out / "stability_report.json"
    _write_json(out_path, report)
    click.echo(f"wrote {series_path}")
    click.echo(f"wrote {out_path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8123, show_default=True)
def serve_cmd(host, port):
    """Run the session service (HTTP + WebSocket)."""
    from .service import serve

    serve(host=host, port=port)


if __name__ == "__main__":
    main()
