"""Command-line front end.

Every subcommand that writes a file also writes ``<out stem>.manifest.json``
next to it; ``cfo-scheme replay MANIFEST`` re-runs it and reproduces the same
bytes.  Exit codes: 0 success, 1 runtime error, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__, analysis, linksim
from .errors import CfoError
from .estimators import cp_spec, pilot_spec, preamble_spec
from .waveform import Numerology, default_pilot_layout

log = logging.getLogger("cfo_scheme")

HISTOGRAM_COLUMNS = ["bin_lo_hz", "bin_hi_hz", "count", "model_density"]
SWEEP_COLUMNS = [
    "snr_db", "cfo_hz", "mode", "mean_err_hz", "std_err_hz", "model_std_hz",
    "p_exceed_300", "decode_rate", "ci_lo", "ci_hi", "trials",
]
CRITERION_COLUMNS = ["snr_e_db", "max_error_hz", "meets_target"]
SCHEMA_VERSIONS = {"histogram": "histogram/1", "sweep": "sweep/1", "criterion": "criterion/1"}


def fmt(x: float, spec: str = ".6f") -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else format(x, spec)


def parse_grid(text: str) -> list[float]:
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
        return linksim.snr_grid(lo, hi, step)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LO:HI:STEP with STEP > 0, got {text!r}") from exc


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(args: argparse.Namespace, outputs: list[Path]) -> Path:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command", "verbose")}
    manifest = {
        "subcommand": args.command,
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "csv_schema": SCHEMA_VERSIONS[args.command],
        "outputs": [str(p) for p in outputs],
    }
    path = manifest_path(Path(args.out))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _numerology(args) -> Numerology:
    return Numerology(args.scs_hz, args.n_fft, args.cp_len)


def cmd_histogram(args) -> int:
    num = _numerology(args)
    if args.estimator == "cp":
        spec = cp_spec(num, args.cp_symbols)
    elif args.estimator == "preamble":
        spec = preamble_spec(num)
    else:
        spec = pilot_spec(num, default_pilot_layout(num))
    if args.snr_kind == "effective":
        raw_db = linksim.raw_snr_db_for_effective(spec, num, args.snr_db)
    else:
        raw_db = args.snr_db
    samples, row = linksim.run_estimator_trials(
        spec, num, args.cfo_hz, raw_db, args.trials, args.seed, workers=args.workers
    )
    model_std = row.model_std_hz
    width = args.bin_width_hz or (model_std / 4 if model_std > 0 else 1.0)
    hist = linksim.histogram(samples, width, args.cfo_hz, model_std**2)
    rows = [
        [fmt(lo), fmt(hi), str(int(c)), fmt(float(d), ".9e")]
        for lo, hi, c, d in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts, hist.model_density)
    ]
    out = Path(args.out)
    _write_csv(out, HISTOGRAM_COLUMNS, rows)
    write_manifest(args, [out])
    print(
        f"{spec.kind}: raw SNR {raw_db:.4f} dB, empirical std {row.std_err_hz:.2f} Hz, "
        f"model std {model_std:.2f} Hz, {args.trials} trials -> {out}"
    )
    return 0


def cmd_criterion(args) -> int:
    delta_t = args.delta_t_us * 1e-6
    if args.solve_min_snr:
        snr = analysis.min_snr_for_target(args.pe, args.delta_fmax_hz, delta_t)
        print(
            f"min effective SNR: {10 * math.log10(snr):.2f} dB "
            f"(p_e={args.pe:g}, delta_fmax={args.delta_fmax_hz:g} Hz, delta_t={args.delta_t_us:g} us)"
        )
        return 0
    rows = []
    print(f"{'snr_e_db':>9} {'max_error_hz':>13} meets")
    for snr_db in args.snr_db_grid:
        err = analysis.max_error_at_confidence(args.pe, delta_t, 10 ** (snr_db / 10))
        meets = err <= args.delta_fmax_hz
        print(f"{snr_db:9.2f} {err:13.2f} {'yes' if meets else 'no'}")
        rows.append([fmt(snr_db, ".2f"), fmt(err), str(int(meets))])
    if args.out:
        out = Path(args.out)
        _write_csv(out, CRITERION_COLUMNS, rows)
        write_manifest(args, [out])
    return 0


def cmd_sweep(args) -> int:
    cfg = linksim.TrialConfig(
        payload_bits=args.payload_bits,
        repetition=args.repetition,
        cfo_hz=args.cfo_hz,
        scheme_mode=args.mode,
        trials=args.trials,
        seed=args.seed,
    )
    summary = linksim.run_decode_sweep(cfg, args.snr_db_grid, workers=args.workers)
    rows = [
        [
            fmt(r.snr_db, ".2f"), fmt(r.cfo_hz, ".2f"), r.mode, fmt(r.mean_err_hz), fmt(r.std_err_hz),
            fmt(r.model_std_hz), fmt(r.p_exceed), fmt(r.decode_rate), fmt(r.ci_lo), fmt(r.ci_hi),
            str(r.trials),
        ]
        for r in summary.rows
    ]
    out = Path(args.out)
    _write_csv(out, SWEEP_COLUMNS, rows)
    write_manifest(args, [out])
    for r in summary.rows:
        log.info("snr %.2f dB: decode rate %.3f", r.snr_db, r.decode_rate)
    print(f"{len(rows)} rows -> {out}")
    return 0


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    command = manifest["subcommand"]
    ns = argparse.Namespace(command=command, **manifest["params"])
    return COMMANDS[command](ns)


COMMANDS = {"histogram": cmd_histogram, "criterion": cmd_criterion, "sweep": cmd_sweep}


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"probability must be in (0, 1), got {text}")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _add_numerology(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scs-hz", type=_positive, default=15000.0)
    p.add_argument("--n-fft", type=int, default=128)
    p.add_argument("--cp-len", type=int, default=9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfo-scheme", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    h = sub.add_parser("histogram", help="Monte Carlo histogram of one estimator against the model")
    h.add_argument("--estimator", choices=["cp", "preamble", "pilot"], required=True)
    h.add_argument("--snr-db", type=float, required=True)
    h.add_argument("--snr-kind", choices=["effective", "raw"], default="effective")
    h.add_argument("--cfo-hz", type=float, required=True)
    h.add_argument("--trials", type=_count, required=True)
    h.add_argument("--seed", type=int, required=True)
    h.add_argument("--out", required=True)
    h.add_argument("--bin-width-hz", type=_positive, default=None)
    h.add_argument("--cp-symbols", type=_count, default=5)
    h.add_argument("--workers", type=_count, default=1)
    _add_numerology(h)
    h.set_defaults(func=cmd_histogram)

    c = sub.add_parser("criterion", help="decoding criterion over an SNR grid, or its minimum SNR")
    c.add_argument("--pe", type=_probability, required=True)
    c.add_argument("--delta-fmax-hz", type=_positive, required=True)
    c.add_argument("--delta-t-us", type=_positive, required=True)
    c.add_argument("--solve-min-snr", action="store_true")
    c.add_argument("--snr-db-grid", type=parse_grid, default=linksim.snr_grid(0, 30, 1))
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_criterion)

    s = sub.add_parser("sweep", help="PBCH-like decode success over an SNR grid")
    s.add_argument("--mode", choices=["two_step", "coarse_only", "residual_only"], required=True)
    s.add_argument("--cfo-hz", type=float, required=True)
    s.add_argument("--snr-db-grid", type=parse_grid, required=True)
    s.add_argument("--trials", type=_count, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--payload-bits", type=_count, default=24)
    s.add_argument("--repetition", type=_count, default=23)
    s.add_argument("--workers", type=_count, default=1)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "n_fft"):
        try:
            _numerology(args)
        except ValueError as exc:
            parser.error(str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CfoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
