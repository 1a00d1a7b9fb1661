import sys
import argparse
from pathlib import Path
from typing import Optional, List

import numpy as np
from tabulate import tabulate

from src.config import RunConfig, AUTOMATON_RADIUS, SLOPE_GRID
from src.errors import (
    AnosovError, InvalidInput, BallTooLarge, NotStabilized, NotRegular, EmptyRecurrentPart,
    NoCandidateCertified, DidNotConverge, NotDominated,
)
from src.util import read_json, write_json_atomic, write_csv_atomic
from src.cocycle import MatrixSequence, Verdict, fit_domination
from src.group import presentation_from_json
from src.cone_types import GeodesicAutomaton, geodesic_automaton, recurrent_subgraph
from src.reprcheck import (
    Representation, BoundaryRay, representation_from_json, domination_report, limit_map, periodic_rays,
)
from src.multicone import FamilyVerdict, family_from_json, family_to_json, verify_family, synthesize_family
from src.morse import QuasiGeodesic, morse_audit, orbit_of_word


EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NEGATIVE = 2
EXIT_UNDECIDED = 3

_VERDICT_EXIT = {
    Verdict.Dominated: EXIT_OK,
    Verdict.NotDominated: EXIT_NEGATIVE,
    Verdict.Inconclusive: EXIT_UNDECIDED,
}


def parse_args() -> dict:
    parser = argparse.ArgumentParser(
        description="Certify or refute p-domination of finitely generated matrix groups",
    )
    parser.add_argument(
        "command", type=str,
        choices=["domcheck", "multicone", "limitmap", "morse", "conetypes"],
        help=f"Command",
    )
    parser.add_argument(
        "mode", type=str, nargs="?", choices=["verify", "synth"],
        help=f"Mode of the 'multicone' command",
    )
    parser.add_argument(
        "-i", "--input", type=str, nargs="?", default=None,
        help=f"json file of the representation, presentation, orbit or matrix sequence",
    )
    parser.add_argument(
        "-f", "--family", type=str, nargs="?", default=None,
        help=f"json file of the cone family for 'multicone verify'",
    )
    parser.add_argument(
        "-c", "--config", type=str, nargs="?", default=None,
        help=f"flat json file with defaults for all other flags",
    )
    parser.add_argument(
        "-p", "--p", type=int, nargs="?", default=None,
        help=f"Index of the dominated splitting, defaults to 1",
    )
    parser.add_argument(
        "-r", "--radius", type=int, nargs="?", default=None,
        help=f"Ball radius for the domination fit and cone types, defaults to 10",
    )
    parser.add_argument(
        "--depth", type=int, nargs="?", default=None,
        help=f"Ray depth for the limit map, defaults to 60",
    )
    parser.add_argument(
        "--word-length", type=int, nargs="?", default=None,
        help=f"Length of the random geodesic word for 'morse', defaults to 60",
    )
    parser.add_argument(
        "--word", type=str, nargs="?", default=None,
        help=f"Explicit word for 'morse'",
    )
    parser.add_argument(
        "--rays", type=str, nargs="*", default=None,
        help=f"Rays like 'ab(aB)' for 'limitmap', defaults to all periodic rays",
    )
    parser.add_argument(
        "--max-period", type=int, nargs="?", default=None,
        help=f"Longest period of the default rays, defaults to 3",
    )
    parser.add_argument(
        "-o", "--out", type=str, nargs="?", default=None,
        help=f"Output directory",
    )
    parser.add_argument(
        "-j", "--workers", type=int, nargs="?", default=None,
        help=f"Number of worker threads, defaults to 1",
    )
    parser.add_argument(
        "--seed", type=int, nargs="?", default=None,
        help=f"Random seed, defaults to 23",
    )
    parser.add_argument(
        "--tol-gap", type=float, nargs="?", default=None,
        help=f"Smallest relative singular value gap treated as a gap",
    )
    parser.add_argument(
        "--residual-target", type=float, nargs="?", default=None,
        help=f"Convergence target of the limit map",
    )
    parser.add_argument(
        "--margin-floor", type=float, nargs="?", default=None,
        help=f"Smallest containment margin accepted by 'multicone'",
    )
    parser.add_argument(
        "--c-target", type=float, nargs="?", default=None,
        help=f"Largest accepted distance bound of 'morse'",
    )
    parser.add_argument(
        "-v", "--verbose", type=bool, nargs="?", default=None, const=True,
        help=f"Show progress on stderr",
    )
    return vars(parser.parse_args())


def main(config: Optional[str] = None, **flags) -> int:
    try:
        cfg = RunConfig.from_sources(flags, config_file=config)

        if cfg.command == "domcheck":
            return cmd_domcheck(cfg)

        elif cfg.command == "multicone":
            return cmd_multicone(cfg)

        elif cfg.command == "limitmap":
            return cmd_limitmap(cfg)

        elif cfg.command == "morse":
            return cmd_morse(cfg)

        elif cfg.command == "conetypes":
            return cmd_conetypes(cfg)

        raise InvalidInput(f"Unknown command '{cfg.command}'")

    except AnosovError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return exit_code(e)
    except ValueError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT


def exit_code(error: Exception) -> int:
    if isinstance(error, NotStabilized):
        return EXIT_UNDECIDED
    if isinstance(error, (InvalidInput, BallTooLarge, NotRegular, ValueError)):
        return EXIT_INPUT
    return EXIT_NEGATIVE


# --- helpers ---

def _input_path(cfg: RunConfig) -> Path:
    if not cfg.input:
        raise InvalidInput(f"'{cfg.command}' needs --input")
    return Path(cfg.input)


def _load_representation(cfg: RunConfig) -> Representation:
    path = _input_path(cfg)
    return representation_from_json(read_json(path), base_dir=path.parent)


def _output_file(cfg: RunConfig, suffix: str) -> Path:
    stem = Path(cfg.input).stem if cfg.input else cfg.command
    return Path(cfg.out) / f"{stem}-{cfg.command}{suffix}"


def _write_report(cfg: RunConfig, report: dict, suffix: str = ".json") -> Path:
    file = _output_file(cfg, suffix)
    write_json_atomic(file, {
        "command": cfg.command,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "report": report,
    })
    return file


def _print_table(rows: List[dict], title: Optional[str] = None):
    if title:
        print(f"\n{title}")
    if rows:
        print(tabulate(rows, headers="keys", tablefmt="presto"))


def _automaton(cfg: RunConfig, rep: Representation) -> GeodesicAutomaton:
    auto = geodesic_automaton(rep.pres, AUTOMATON_RADIUS, verbose=cfg.verbose)
    if not auto.certified:
        print(f"automaton of '{rep.pres.family}' is stabilized but not certified", file=sys.stderr)
    return auto


# --- commands ---

def cmd_domcheck(cfg: RunConfig) -> int:
    data = read_json(_input_path(cfg))
    if isinstance(data, list) or (isinstance(data, dict) and "matrices" in data):
        return _domcheck_sequence(cfg, MatrixSequence.from_json(data))

    rep = representation_from_json(data, base_dir=Path(cfg.input).parent)
    report = domination_report(rep, cfg.p, cfg.radius, tol_gap=cfg.tol_gap, verbose=cfg.verbose)

    _write_report(cfg, report.to_json())
    write_csv_atomic(_output_file(cfg, "-gaps.csv"), report.rows())
    _print_table(report.rows())
    print(f"\nverdict: {report.verdict.value}, lambda_hat: {report.lambda_hat:.6g}, C_hat: {report.C_hat:.6g}")

    return _VERDICT_EXIT[report.verdict]


def _domcheck_sequence(cfg: RunConfig, seq: MatrixSequence) -> int:
    fit = fit_domination(seq, cfg.p, tol_gap=cfg.tol_gap)

    table_file = _output_file(cfg, "-pairs.csv")
    write_csv_atomic(table_file, fit.pair_rows(), columns=["start", "length", "log_gap", "ratio", "bound"])
    _write_report(cfg, {**fit.to_json(), "pair_table_csv_path": str(table_file)})
    print(f"verdict: {fit.verdict.value}, mu_hat: {fit.mu_hat:.6g}, c_hat: {fit.c_hat:.6g}, min_margin: {fit.min_margin:.6g}")

    return _VERDICT_EXIT[fit.verdict]


def cmd_multicone(cfg: RunConfig) -> int:
    rep = _load_representation(cfg)

    if cfg.mode == "verify":
        if not cfg.family:
            raise InvalidInput("'multicone verify' needs --family")
        data = read_json(cfg.family)
        auto = None if data.get("automaton") else _automaton(cfg, rep)
        fam = family_from_json(data, automaton=auto)
        verification = verify_family(rep, fam, margin_floor=cfg.margin_floor, workers=cfg.workers)

        _write_report(cfg, verification.to_json())
        write_csv_atomic(_output_file(cfg, "-margins.csv"), verification.rows)
        _print_table(verification.rows)
        print(f"\nverdict: {verification.verdict.value}, min margin: {verification.min_margin:.6g}")
        return EXIT_OK if verification.verdict == FamilyVerdict.Certified else EXIT_NEGATIVE

    elif cfg.mode == "synth":
        auto = _automaton(cfg, rep)
        try:
            result = synthesize_family(
                rep, cfg.p, auto, cfg.radius,
                slopes=SLOPE_GRID,
                margin_floor=cfg.margin_floor,
                seed=cfg.seed,
                tol_gap=cfg.tol_gap,
                workers=cfg.workers,
                verbose=cfg.verbose,
            )
        except NoCandidateCertified as e:
            _write_report(cfg, {"verdict": "NoCandidateCertified", "message": str(e), "rows": e.margins})
            if e.margins:
                write_csv_atomic(_output_file(cfg, "-margins.csv"), e.margins)
            raise

        _write_report(cfg, result.to_json())
        write_json_atomic(_output_file(cfg, "-family.json"), family_to_json(result.family))
        write_csv_atomic(_output_file(cfg, "-margins.csv"), result.verification.rows)
        _print_table(result.verification.rows)
        print(
            f"\ncertified with {result.frame} frames, slope {result.slope:.4g}"
            f"{' (iterated)' if result.iterated else ''}"
            f", min margin: {result.verification.min_margin:.6g}"
        )
        return EXIT_OK

    raise InvalidInput("'multicone' needs the mode 'verify' or 'synth'")


def cmd_limitmap(cfg: RunConfig) -> int:
    rep = _load_representation(cfg)
    report = domination_report(rep, cfg.p, cfg.radius, tol_gap=cfg.tol_gap, verbose=cfg.verbose)
    if report.verdict == Verdict.NotDominated:
        raise NotDominated(f"Representation is not {cfg.p}-dominated")
    if report.verdict == Verdict.Inconclusive:
        _write_report(cfg, {"domination": report.verdict.value, "points": [], "failed": 0})
        print("domination check is inconclusive, no limits computed", file=sys.stderr)
        return EXIT_UNDECIDED

    if cfg.rays:
        rays = [BoundaryRay.parse(rep.pres, text) for text in cfg.rays]
    else:
        rays = periodic_rays(rep.pres, cfg.max_period)

    points, rows = [], []
    failed = 0
    for ray in rays:
        text = ray.format(rep.pres)
        try:
            point = limit_map(
                rep, cfg.p, ray,
                depth=cfg.depth,
                residual_target=cfg.residual_target,
                report=report,
                tol_gap=cfg.tol_gap,
            )
        except DidNotConverge as e:
            failed += 1
            rows.append({"ray": text, "residual": e.residual, "depth": e.depth, "oracle_residual": None, "converged": False})
            continue
        points.append({"ray": text, **point.to_json()})
        rows.append({
            "ray": text,
            "residual": point.residual,
            "depth": point.depth,
            "oracle_residual": point.oracle_residual,
            "converged": True,
        })

    _write_report(cfg, {"domination": report.verdict.value, "points": points, "failed": failed})
    write_csv_atomic(_output_file(cfg, "-residuals.csv"), rows)
    _print_table(rows)
    if failed:
        print(f"\n{failed} of {len(rays)} rays did not converge", file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


def _load_quasi_geodesic(cfg: RunConfig) -> QuasiGeodesic:
    path = _input_path(cfg)
    data = read_json(path)
    if isinstance(data, dict) and "points" in data:
        return QuasiGeodesic.from_points([np.asarray(m, dtype=float) for m in data["points"]])

    rep = representation_from_json(data, base_dir=path.parent)
    if cfg.word:
        word = rep.pres.parse(cfg.word)
    else:
        auto = _automaton(cfg, rep)
        labels, _ = auto.random_walk(np.random.default_rng(cfg.seed), cfg.word_length, auto.start)
        word = tuple(reversed(labels))
    return orbit_of_word(rep, word)


def cmd_morse(cfg: RunConfig) -> int:
    qg = _load_quasi_geodesic(cfg)
    audit = morse_audit(qg, (cfg.p, ), c_target=cfg.c_target, workers=cfg.workers, verbose=cfg.verbose)

    _write_report(cfg, audit.to_json())
    write_csv_atomic(
        _output_file(cfg, ".csv"), audit.rows,
        columns=["k", "lower", "upper", "sidedness_margin", "flag_deviation"],
    )
    _print_table([{
        "mu": audit.mu,
        "c": audit.c,
        "regularity": audit.regularity,
        "max_lower": audit.max_lower,
        "max_upper": audit.max_upper,
        "c_target": audit.c_target,
    }])
    return EXIT_OK if audit.within_target else EXIT_NEGATIVE


def cmd_conetypes(cfg: RunConfig) -> int:
    path = _input_path(cfg)
    data = read_json(path)
    if isinstance(data, dict) and "presentation" in data:
        pres = representation_from_json(data, base_dir=path.parent).pres
    else:
        pres = presentation_from_json(data)

    auto = geodesic_automaton(pres, cfg.radius, strict=False, verbose=cfg.verbose)
    graphml_file = _output_file(cfg, ".graphml")
    graphml_file.parent.mkdir(parents=True, exist_ok=True)
    auto.to_igraph().write_graphml(str(graphml_file))

    try:
        rec = recurrent_subgraph(auto)
    except EmptyRecurrentPart as e:
        _write_report(cfg, {
            "automaton": auto.to_json(),
            "recurrent": None,
            "error": {"type": type(e).__name__, "message": str(e)},
        })
        raise

    _write_report(cfg, {"automaton": auto.to_json(), "recurrent": rec.to_json()})
    _print_table([
        {
            "vertex": v,
            "witness": pres.format(auto.witnesses.get(v, ())),
            "start": v == auto.start,
            "recurrent": v in rec.vertices,
            "out_degree": len(auto.successors(v)),
        }
        for v in auto.vertices
    ])
    print(f"\nstabilized: {auto.stabilized}, certified: {auto.certified}")
    return EXIT_OK if auto.stabilized else EXIT_UNDECIDED


if __name__ == "__main__":
    sys.exit(main(**parse_args()))
