"""Command-line interface: simulate, analyze, dephasing, rates, calibrate.

Exit codes: 0 success, 2 configuration error, 3 calibration failure,
4 I/O error.  Every output embeds the scenario config hash so analysis can
refuse to mix incompatible runs.
"""

import argparse
import csv
import json
import os
import sys
import numpy as np

from . import __version__
from .analysis import (
    CorrelationDataset,
    DetectionHistogram,
    chsh_from_dataset,
    fringe_visibility_summary,
    interference_contrast,
    sbr,
    three_basis_summary,
)
from .analysis.estimators import contrast_sigma
from .calibration import DEFAULT_TARGETS, calibrate
from .memory import coherence_envelope, dephasing_channel_family
from .protocol import (
    PRESETS,
    config_hash,
    duty_cycle,
    event_rate,
    fidelity_vs_length,
    load_scenario,
    preset,
    repetition_rate,
    run_sequence,
    sbr_model,
    success_probability,
)
from .protocol.rates import window_capture
from .protocol.scenario import save_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _out_dir(args) -> str:
    out = args.out or os.environ.get("ATOMLINK_OUT", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_scenario(args):
    if getattr(args, "scenario", None):
        try:
            return load_scenario(args.scenario)
        except FileNotFoundError as exc:
            raise CliError(f"scenario file not found: {exc}", EXIT_IO)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_CONFIG)
    name = getattr(args, "preset", None) or "l6"
    try:
        return preset(name)
    except KeyError as exc:
        raise CliError(str(exc), EXIT_CONFIG)


def _check_overwrite(path, force):
    if os.path.exists(path) and not force:
        raise CliError(f"refusing to overwrite {path} (use --force)", EXIT_IO)


def _write_manifest(out, args, scenario, extra=None):
    manifest = {
        "tool": "atomlink",
        "version": __version__,
        "command": args.command,
        "scenario": scenario.name,
        "config_hash": config_hash(scenario),
        "seed": getattr(args, "seed", None),
        "mode": getattr(args, "mode", None),
        "events": getattr(args, "events", None),
        "out": out,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    scenario = _resolve_scenario(args)
    out = _out_dir(args)
    events_path = os.path.join(out, "events.jsonl")
    summary_path = os.path.join(out, "summary.json")
    clicks_path = os.path.join(out, "clicks.csv")
    for p in (events_path, summary_path, clicks_path):
        _check_overwrite(p, args.force)

    result = run_sequence(
        scenario, schedule=args.schedule, target_events=args.events,
        seed=args.seed, mode=args.mode, n_trajectories=args.trajectories,
        n_jobs=args.jobs,
    )
    chash = result.config_hash
    with open(events_path, "w") as fh:
        header = {"type": "header", "config_hash": chash, "scenario": scenario.name,
                  "mode": args.mode, "seed": args.seed, "schedule": args.schedule}
        fh.write(json.dumps(header) + "\n")
        for e in result.events:
            rec = e.readout_record()
            rec["config_hash"] = chash
            fh.write(json.dumps(rec) + "\n")
    with open(summary_path, "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True, default=float)
    with open(clicks_path, "w", newline="") as fh:
        fh.write(f"# config_hash={chash}\n")
        writer = csv.writer(fh)
        writer.writerow(["window", "detector", "timestamp_ns", "origin"])
        for window, det, t_rel, origin in result.clicks:
            writer.writerow([window, det, f"{t_rel * 1e9:.3f}", origin])
    _write_manifest(out, args, scenario)
    print(f"wrote {len(result.events)} events to {events_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _load_events(path):
    events = []
    header = None
    try:
        fh = open(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CliError(f"{path}:{lineno}: malformed JSON line ({exc})", EXIT_IO)
            if rec.get("type") == "header":
                header = rec
                continue
            events.append(rec)
    if header is None:
        raise CliError(f"{path}: missing header line", EXIT_IO)
    return header, events


def _dataset_from_records(records, mode):
    ds = CorrelationDataset()
    expected = {}
    for rec in records:
        if not rec.get("accepted"):
            continue
        key = (round(rec["alpha_rad"], 12), round(rec["beta_rad"], 12),
               rec["plane"], rec["bell_outcome"])
        if mode == "sampled-clicks":
            if rec.get("outcome1") is None:
                continue
            ds.add_event(key[0], key[1], key[2], key[3], rec["outcome1"], rec["outcome2"])
        else:
            probs = rec.get("probabilities")
            if not probs:
                continue
            agg = expected.setdefault(key, {"uu": 0.0, "ud": 0.0, "du": 0.0, "dd": 0.0})
            for k in agg:
                agg[k] += probs[k]
    for (alpha, beta, plane, outcome), agg in expected.items():
        ds.rows.append({"alpha": alpha, "beta": beta, "plane": plane,
                        "outcome": outcome, **{k: agg[k] for k in ("uu", "ud", "du", "dd")}})
    return ds


def _load_clicks(path):
    try:
        fh = open(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)
    with fh:
        first = fh.readline()
        chash = None
        if first.startswith("# config_hash="):
            chash = first.strip().split("=", 1)[1]
            header_line = fh.readline()
        else:
            header_line = first
        reader = csv.reader(fh)
        cols = [c.strip() for c in header_line.strip().split(",")]
        rows = []
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(cols):
                raise CliError(f"{path}:{lineno}: malformed CSV row", EXIT_IO)
            rows.append(dict(zip(cols, row)))
    return chash, rows


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    report_path = os.path.join(out, "report.json")
    _check_overwrite(report_path, args.force)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()] \
        if args.estimators else []

    header, records = _load_events(args.events)
    chash = header.get("config_hash")
    mode = header.get("mode", "sampled-clicks")
    report = {"config_hash": chash, "mode": mode, "n_events": len(records),
              "estimators": {}}

    clicks = None
    if args.clicks:
        click_hash, clicks = _load_clicks(args.clicks)
        if click_hash and chash and click_hash != chash and not args.force:
            raise CliError(
                f"click stream hash {click_hash} does not match events hash {chash} "
                "(use --force to override)", EXIT_CONFIG)

    dataset = _dataset_from_records(records, mode)
    accepted = [r for r in records if r.get("accepted")]
    report["accepted_fraction"] = len(accepted) / len(records) if records else 0.0

    for name in estimators:
        try:
            if name == "fidelity":
                report["estimators"]["fidelity"] = three_basis_summary(dataset)
            elif name == "fringe":
                per = {}
                for outcome in ("PsiMinus", "PsiPlus"):
                    try:
                        v, sig, fits = fringe_visibility_summary(dataset, outcome)
                    except ValueError:
                        continue
                    per[outcome] = {
                        "visibility": v, "visibility_sigma": sig,
                        "fits": {f"{np.degrees(b):.1f}": {
                            "visibility": f.visibility, "phase_deg": float(np.degrees(f.phase)),
                            "offset": f.offset, "visibility_sigma": f.visibility_sigma,
                        } for b, f in fits.items()},
                    }
                report["estimators"]["fringe"] = per
            elif name == "chsh":
                s, sig = chsh_from_dataset(dataset)
                report["estimators"]["chsh"] = {"s": s, "sigma": sig}
            elif name == "contrast":
                n_null = sum(1 for r in records if r.get("type") != "header"
                             and r.get("bell_outcome") == "DNull")
                # D-null coincidences are carried in the summary, not the
                # herald stream; fall back to summary counts if present
                if args.summary:
                    with open(args.summary) as fh:
                        summary = json.load(fh)
                    n_null = summary.get("n_dnull_accepted", 0)
                    n_plus = summary.get("herald_counts", {}).get("DPlus", 0)
                    n_minus = summary.get("herald_counts", {}).get("DMinus", 0)
                else:
                    n_plus = sum(1 for r in accepted if r["bell_outcome"] == "PsiPlus")
                    n_minus = sum(1 for r in accepted if r["bell_outcome"] == "PsiMinus")
                c = interference_contrast(n_null, n_plus, n_minus)
                report["estimators"]["contrast"] = {
                    "contrast": c, "sigma": contrast_sigma(max(n_null, 0.5), n_plus, n_minus),
                    "n_null": n_null, "n_plus": n_plus, "n_minus": n_minus,
                }
            elif name == "sbr":
                if clicks is None:
                    raise CliError("sbr estimator needs --clicks", EXIT_CONFIG)
                times = {}
                for row in clicks:
                    times.setdefault(row["window"], []).append(float(row["timestamp_ns"]) * 1e-9)
                edges = np.arange(-500e-9, 500e-9 + 1e-12, 2e-9)
                hist = DetectionHistogram.from_click_times(times, edges)
                # side bands start where the wavepacket tail is negligible
                est = sbr(hist, window=(0.0, 70e-9), exclusion=(-100e-9, 250e-9))
                report["estimators"]["sbr"] = {
                    "per_channel": {k: (None if np.isinf(v) else v)
                                    for k, v in est.per_channel.items()},
                    "coincidence": None if np.isinf(est.coincidence) else est.coincidence,
                    "unbounded": est.unbounded,
                }
            else:
                raise CliError(f"unknown estimator {name!r}", EXIT_CONFIG)
        except (ValueError, KeyError) as exc:
            report["estimators"][name] = {"error": str(exc)}

    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)

    if "fringe" in report["estimators"] and args.fringe_csv:
        _check_overwrite(args.fringe_csv, args.force)
        with open(args.fringe_csv, "w", newline="") as fh:
            fh.write(f"# config_hash={chash}\n")
            w = csv.writer(fh)
            w.writerow(["outcome", "beta_deg", "alpha_deg", "p_corr", "sigma"])
            for outcome in ("PsiMinus", "PsiPlus"):
                for row in dataset.settings(outcome=outcome, plane="equator"):
                    from .analysis import correlation_probability, statistical_error
                    p, _ = correlation_probability(row)
                    w.writerow([outcome, f"{np.degrees(row.beta):.1f}",
                                f"{np.degrees(row.alpha):.1f}", f"{p:.6f}",
                                f"{statistical_error(row):.6f}"])
    print(f"wrote report to {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dephasing
# ---------------------------------------------------------------------------

def cmd_dephasing(args) -> int:
    scenario = _resolve_scenario(args)
    node = scenario.nodes()[args.node - 1]
    out = _out_dir(args)
    path = os.path.join(out, args.output)
    _check_overwrite(path, args.force)
    env = node.field_env
    if args.sigma_mg is not None:
        env = env.replace(shot_noise_sigma=np.array([0.0, args.sigma_mg * 1e-3, 0.0]))
    if args.fictitious_scale is not None:
        env = env.replace(fictitious_field_scale=args.fictitious_scale)
    times = np.round(np.arange(0.0, args.t_max + args.dt / 2, args.dt), 12)
    family = dephasing_channel_family(
        node.trap, env, node.temperature, times, args.trajectories, seed=args.seed,
        n_jobs=args.jobs,
    )
    ce = coherence_envelope(family)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(scenario)}\n")
        w = csv.writer(fh)
        w.writerow(["time_us", "basis", "expectation", "envelope"])
        for basis in ("X", "Y", "Z"):
            curve = ce.curves[basis]
            for t, x, v in zip(ce.times, curve, ce.visibility):
                w.writerow([f"{t * 1e6:.3f}", basis, f"{x:.6f}", f"{v:.6f}"])
    one_over_e = ce.one_over_e_time()
    print(f"wrote envelope to {path}; 1/e time {one_over_e * 1e6:.1f} us")
    _write_manifest(out, args, scenario, {"one_over_e_us": one_over_e * 1e6})
    return EXIT_OK


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def cmd_rates(args) -> int:
    names = [n.strip() for n in args.presets.split(",") if n.strip()]
    out = _out_dir(args)
    path = os.path.join(out, args.output)
    _check_overwrite(path, args.force)
    rows = []
    for name in names:
        try:
            s = preset(name)
        except KeyError as exc:
            raise CliError(str(exc), EXIT_CONFIG)
        rep = repetition_rate(s)
        p_model = success_probability(s)
        duty = duty_cycle(s.sequence, 1.0 / rep, seed=args.seed)
        quoted = s.published_values
        er_model = event_rate(s, duty=duty)
        er_quoted = None
        if "success_probability" in quoted:
            er_quoted = event_rate(s, success_prob=quoted["success_probability"],
                                   repetition_hz=quoted.get("repetition_rate_hz"))
        sb = sbr_model(s)
        rows.append({
            "name": name,
            "config_hash": config_hash(s),
            "total_length_km": s.total_length_km,
            "repetition_rate_hz": rep,
            "repetition_rate_quoted_hz": quoted.get("repetition_rate_hz", ""),
            "success_probability_model": p_model,
            "success_probability_quoted": quoted.get("success_probability", ""),
            "duty_cycle": duty,
            "event_rate_model_hz": er_model,
            "event_rate_quoted_inputs_hz": er_quoted if er_quoted is not None else "",
            "event_rate_quoted_hz": quoted.get("event_rate_hz", ""),
            "sbr_coincidence_model": sb["coincidence"],
            "acceptance_fraction_model": window_capture(s, 0) * window_capture(s, 1),
        })
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow(r)
    print(f"wrote rate budget to {path}")
    if args.fidelity_out:
        fpath = os.path.join(out, args.fidelity_out)
        _check_overwrite(fpath, args.force)
        table = fidelity_vs_length([preset(n) for n in names],
                                   n_trajectories=args.trajectories, seed=args.seed,
                                   n_jobs=args.jobs)
        with open(fpath, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(table[0]))
            w.writeheader()
            for r in table:
                w.writerow(r)
        print(f"wrote fidelity-vs-length table to {fpath}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    targets = None
    if args.targets:
        try:
            with open(args.targets) as fh:
                targets = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read targets: {exc}", EXIT_IO)
        except json.JSONDecodeError as exc:
            raise CliError(f"targets file is not valid JSON: {exc}", EXIT_CONFIG)
    out = _out_dir(args)
    path = os.path.join(out, args.output)
    _check_overwrite(path, args.force)
    try:
        result = calibrate(targets)
    except (ValueError, KeyError) as exc:
        raise CliError(f"calibration failed: {exc}", EXIT_CALIBRATION)
    payload = {
        "tool": "atomlink",
        "version": __version__,
        "parameters": result.parameters,
        "residuals": result.residuals,
        "converged": result.converged,
        "notes": result.notes,
        "targets": targets or DEFAULT_TARGETS,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
    print(f"wrote calibration to {path} (converged={result.converged})")
    if not result.converged:
        print("calibration did not reach the residual tolerance", file=sys.stderr)
        return EXIT_CALIBRATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="atomlink",
        description="Simulator and analysis toolkit for a heralded two-node "
                    "atomic quantum network link",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--preset", choices=PRESETS, default=None,
                        help="shipped fibre configuration")
        sp.add_argument("--scenario", default=None, help="scenario config file")
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--out", default=None, help="output directory "
                        "(default $ATOMLINK_OUT or .)")
        sp.add_argument("--force", action="store_true", help="overwrite outputs")
        sp.add_argument("--jobs", type=int, default=1)

    sim = sub.add_parser("simulate", help="run the event simulation")
    add_common(sim)
    sim.add_argument("--mode", choices=["density-matrix", "sampled-clicks"],
                     default="sampled-clicks")
    sim.add_argument("--events", type=int, default=1000, help="target herald count")
    sim.add_argument("--schedule", default="three-basis",
                     choices=["three-basis", "fringe", "chsh"])
    sim.add_argument("--trajectories", type=int, default=2000,
                     help="memory Monte-Carlo trajectories")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="estimate observables from a run")
    ana.add_argument("--events", required=True, help="events.jsonl path")
    ana.add_argument("--clicks", default=None, help="clicks.csv path")
    ana.add_argument("--summary", default=None, help="summary.json path")
    ana.add_argument("--estimators", default="fidelity",
                     help="comma list: fidelity,fringe,chsh,contrast,sbr")
    ana.add_argument("--fringe-csv", default=None, help="plot-ready fringe CSV")
    ana.add_argument("--out", default=None)
    ana.add_argument("--force", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    dep = sub.add_parser("dephasing", help="memory coherence envelope")
    add_common(dep)
    dep.add_argument("--node", type=int, choices=[1, 2], default=1)
    dep.add_argument("--t-max", type=float, default=500e-6)
    dep.add_argument("--dt", type=float, default=1e-6)
    dep.add_argument("--trajectories", type=int, default=10000)
    dep.add_argument("--sigma-mg", type=float, default=None,
                     help="override shot-noise sigma (milligauss)")
    dep.add_argument("--fictitious-scale", type=float, default=None)
    dep.add_argument("--output", default="envelope.csv")
    dep.set_defaults(func=cmd_dephasing)

    rat = sub.add_parser("rates", help="rate and probability budget")
    rat.add_argument("--presets", default=",".join(PRESETS))
    rat.add_argument("--output", default="rates.csv")
    rat.add_argument("--fidelity-out", default=None,
                     help="also write the fidelity-vs-length table")
    rat.add_argument("--trajectories", type=int, default=4000)
    rat.add_argument("--seed", type=int, default=1)
    rat.add_argument("--out", default=None)
    rat.add_argument("--force", action="store_true")
    rat.add_argument("--jobs", type=int, default=1)
    rat.set_defaults(func=cmd_rates)

    cal = sub.add_parser("calibrate", help="fit model constants to targets")
    cal.add_argument("--targets", default=None, help="JSON targets file")
    cal.add_argument("--output", default="calibration.json")
    cal.add_argument("--out", default=None)
    cal.add_argument("--force", action="store_true")
    cal.set_defaults(func=cmd_calibrate)

    exp = sub.add_parser("export-scenario", help="write a preset as a config file")
    exp.add_argument("--preset", choices=PRESETS, required=True)
    exp.add_argument("--output", default="scenario.ini")
    exp.add_argument("--out", default=None)
    exp.add_argument("--force", action="store_true")
    exp.set_defaults(func=cmd_export_scenario)

    return p


def cmd_export_scenario(args) -> int:
    out = _out_dir(args)
    path = os.path.join(out, args.output)
    _check_overwrite(path, args.force)
    save_scenario(preset(args.preset), path)
    print(f"wrote scenario to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
