"""Command-line front-end: scenario files in, JSON/CSV reports out.

Commands are deterministic given (scenario file, flags, seed). Reports
are machine-first: JSON to stdout or ``--out``, with a one-line human
summary on stderr. Exit codes: 0 success, 1 usage error, 2 scenario or
validation error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .advisor import AdvisorTolerances, advise
from .errors import FusionKitError
from .harness import campaign_to_csv, campaign_to_json, empirical_error_covariance
from .information import (
    crlb,
    joint_fisher_routes,
    joint_information,
    prewhiten,
    route_disagreement,
    snr_matrix,
    synergy_matrices,
    total_information,
)
from .matrixkit import BlockCovariance
from .model import (
    GaussianPrior,
    InfoOnlyPrior,
    LinearModel,
    ModalityPair,
    SourcePrior,
    validate,
)
from .placement import optimal_secondary, unwhiten_secondary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_NUMERICAL = 3


class ScenarioError(Exception):
    """Scenario file cannot be loaded or fails validation."""


@dataclass
class Scenario:
    """Parsed scenario document."""

    id: str
    prior: SourcePrior
    modalities: dict[str, tuple[LinearModel, np.ndarray]]
    cross: dict[tuple[str, str], np.ndarray]
    tolerances: AdvisorTolerances

    def modality(self, name: str) -> tuple[LinearModel, np.ndarray]:
        if name not in self.modalities:
            raise ScenarioError(
                f"unknown modality {name!r}; scenario defines {sorted(self.modalities)}"
            )
        return self.modalities[name]

    def pair(self, first: str, second: str) -> ModalityPair:
        model_a, noise_a = self.modality(first)
        model_b, noise_b = self.modality(second)
        if (first, second) in self.cross:
            sigma_vu = self.cross[(first, second)]
        elif (second, first) in self.cross:
            sigma_vu = self.cross[(second, first)].T
        else:
            sigma_vu = np.zeros((model_a.n, model_b.n))
        try:
            noise = BlockCovariance(noise_a, noise_b, sigma_vu)
            return ModalityPair(first=model_a, second=model_b, noise=noise)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc


def _matrix(obj, what: str) -> np.ndarray:
    M = np.asarray(obj, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ScenarioError(f"{what} has non-finite entries")
    return M


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario JSON document."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc

    if "sources" not in doc or "modalities" not in doc:
        raise ScenarioError("scenario must define 'sources' and 'modalities'")

    src = doc["sources"]
    try:
        if "gaussian" in src:
            g = src["gaussian"]
            prior: SourcePrior = GaussianPrior(
                mean=np.asarray(g["mean"], dtype=float), cov=_matrix(g["cov"], "source cov")
            )
        elif "info_only" in src:
            prior = InfoOnlyPrior(_matrix(src["info_only"]["J_s"], "J_s"))
        else:
            raise ScenarioError("sources must be 'gaussian' or 'info_only'")
    except (ValueError, KeyError, FusionKitError) as exc:
        raise ScenarioError(f"bad source prior: {exc}") from exc

    modalities: dict[str, tuple[LinearModel, np.ndarray]] = {}
    names: list[str] = []
    for entry in doc["modalities"]:
        try:
            name = str(entry["name"])
            model = LinearModel(_matrix(entry["A"], f"modality {name} A"))
            noise = _matrix(entry["noise_cov"], f"modality {name} noise_cov")
        except (ValueError, KeyError) as exc:
            raise ScenarioError(f"bad modality entry: {exc}") from exc
        if name in modalities:
            raise ScenarioError(f"duplicate modality name {name!r}")
        if model.m != prior.m:
            raise ScenarioError(
                f"modality {name!r} has {model.m} sources but the prior has {prior.m}"
            )
        for diag in validate(model, prior, noise):
            if diag.level == "error":
                raise ScenarioError(f"modality {name!r}: {diag.message}")
        modalities[name] = (model, noise)
        names.append(name)

    cross: dict[tuple[str, str], np.ndarray] = {}
    raw_cross = doc.get("cross_cov")
    if raw_cross is not None:
        entries = raw_cross if isinstance(raw_cross, list) else [raw_cross]
        for entry in entries:
            try:
                i, j = entry["pair"]
                matrix = _matrix(entry["matrix"], "cross_cov matrix")
            except (ValueError, KeyError) as exc:
                raise ScenarioError(f"bad cross_cov entry: {exc}") from exc
            try:
                key = (names[int(i)], names[int(j)])
            except (IndexError, ValueError) as exc:
                raise ScenarioError(f"cross_cov pair {entry['pair']} out of range") from exc
            cross[key] = matrix

    tols = AdvisorTolerances()
    if "tolerances" in doc:
        known = {"dominance", "redundancy", "regime_eps", "select_gain"}
        overrides = {k: float(v) for k, v in doc["tolerances"].items() if k in known}
        unknown = set(doc["tolerances"]) - known
        if unknown:
            raise ScenarioError(f"unknown tolerance keys: {sorted(unknown)}")
        tols = AdvisorTolerances(**overrides)

    return Scenario(
        id=str(doc.get("id", path.stem)),
        prior=prior,
        modalities=modalities,
        cross=cross,
        tolerances=tols,
    )


def _emit(report: dict | list, out: str | None, summary: str) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def _tolist(M: np.ndarray) -> list:
    return np.asarray(M, dtype=float).tolist()


def cmd_analyze(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.joint:
        first, second = _split_pair(args.joint, "--joint")
        pair = scenario.pair(first, second)
        if pair.first.n + pair.second.n < pair.m:
            print(
                "validation error: Fisher information matrix is singular "
                f"(total channels {pair.first.n + pair.second.n} < sources {pair.m})",
                file=sys.stderr,
            )
            return EXIT_SCENARIO
        routes = joint_fisher_routes(pair)
        J = joint_information(pair, scenario.prior)
        rep = synergy_matrices(pair)
        wp = prewhiten(pair)
        report = {
            "scenario_id": scenario.id,
            "pair": [first, second],
            "snr_first": _tolist(snr_matrix(pair.first, pair.noise.sigma_v).matrix),
            "snr_second": _tolist(snr_matrix(pair.second, pair.noise.sigma_u).matrix),
            "J_joint": _tolist(J.matrix),
            "crlb_joint": _tolist(crlb(J)),
            "S_x": _tolist(rep.S_x),
            "S_y": _tolist(rep.S_y),
            "min_eig_S_x": rep.min_eigenvalues[0],
            "min_eig_S_y": rep.min_eigenvalues[1],
            "route_max_rel_disagreement": route_disagreement(routes),
            "sigma_max_rho": wp.sigma_max_rho,
            "near_singular": J.near_singular,
        }
        _emit(
            report,
            args.out,
            f"analyze[{scenario.id}]: joint({first},{second}) "
            f"trace(J)={float(np.trace(J.matrix)):.6g}",
        )
        return EXIT_OK

    name = args.modality
    if name is None:
        if len(scenario.modalities) != 1:
            raise ScenarioError("scenario has several modalities; pick one with --modality")
        name = next(iter(scenario.modalities))
    model, noise = scenario.modality(name)
    if model.n < model.m:
        print(
            "validation error: Fisher information matrix is singular "
            f"(channels {model.n} < sources {model.m}); the ML estimate does not exist",
            file=sys.stderr,
        )
        return EXIT_SCENARIO
    snr = snr_matrix(model, noise)
    J = total_information(snr, scenario.prior)
    report = {
        "scenario_id": scenario.id,
        "modality": name,
        "snr": _tolist(snr.matrix),
        "J_total": _tolist(J.matrix),
        "crlb": _tolist(crlb(J)),
    }
    _emit(
        report,
        args.out,
        f"analyze[{scenario.id}]: modality {name} trace(snr)={float(np.trace(snr.matrix)):.6g}",
    )
    return EXIT_OK


def cmd_advise(args) -> int:
    scenario = load_scenario(args.scenario)
    first, second = _split_pair(args.pair, "--pair")
    pair = scenario.pair(first, second)
    advisory = advise(pair, scenario.prior, tols=scenario.tolerances)
    report = {"scenario_id": scenario.id, "pair": [first, second]}
    report.update(advisory.to_json_dict())
    _emit(
        report,
        args.out,
        f"advise[{scenario.id}]: ({first},{second}) -> {advisory.verdict} "
        f"[{advisory.regime}]",
    )
    return EXIT_OK


def cmd_place(args) -> int:
    scenario = load_scenario(args.scenario)
    primary = args.primary
    secondary = args.secondary
    if secondary is None:
        others = [n for n in scenario.modalities if n != primary]
        if len(others) != 1:
            raise ScenarioError(
                "scenario does not identify a unique secondary; use --secondary"
            )
        secondary = others[0]
    pair = scenario.pair(primary, secondary)
    wp = prewhiten(pair)
    solution = optimal_secondary(wp.A_tilde, wp.rho, args.budget, prior=scenario.prior)
    report = {"scenario_id": scenario.id, "primary": primary, "secondary_noise": secondary}
    report.update(solution.to_json_dict())
    if solution.B_star is not None:
        report["B_star_unwhitened"] = _tolist(unwhiten_secondary(solution.B_star, wp.L_u))
    _emit(
        report,
        args.out,
        f"place[{scenario.id}]: primary {primary} budget {args.budget:.6g} -> "
        f"lambda={solution.lambda_:.6g} degenerate={solution.degenerate}",
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    name = args.modality
    if name is None:
        name = next(iter(scenario.modalities))
    model, noise = scenario.modality(name)
    if args.method.lower() == "mmse" and not isinstance(scenario.prior, GaussianPrior):
        print("validation error: MMSE requires Gaussian prior", file=sys.stderr)
        return EXIT_SCENARIO
    if not scenario.prior.sampleable:
        print(
            "validation error: scenario prior is not sampleable (info_only sources)",
            file=sys.stderr,
        )
        return EXIT_SCENARIO
    result = empirical_error_covariance(
        args.method,
        model,
        scenario.prior,
        noise,
        N=args.N,
        seed=args.seed,
        scenario_id=f"{scenario.id}:{name}",
    )
    results = [result]
    json_text = campaign_to_json(results) + "\n"
    csv_text = campaign_to_csv(results)
    if args.out:
        base = Path(args.out)
        base.with_suffix(".json").write_text(json_text)
        base.with_suffix(".csv").write_text(csv_text)
    else:
        sys.stdout.write(json_text)
    print(
        f"simulate[{scenario.id}]: {args.method} N={args.N} seed={args.seed} "
        f"rel_err={result.frobenius_rel_err:.4f} "
        f"crlb_passed={result.crlb_check.passed}",
        file=sys.stderr,
    )
    return EXIT_OK


def _split_pair(text: str, flag: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise UsageError(f"{flag} expects two comma-separated modality names")
    return parts[0], parts[1]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusionkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[], help="SNR/information/CRLB/synergy report")
    p.add_argument("scenario", help="Path to scenario JSON")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--modality", help="Analyze one named modality")
    group.add_argument("--joint", metavar="A,B", help="Analyze a fused pair by names")
    p.add_argument("--out", help="Write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("advise", help="Selection/fusion/redundancy advisory for a pair")
    p.add_argument("scenario")
    p.add_argument("--pair", metavar="A,B", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("place", help="Optimal secondary configuration under an SNR budget")
    p.add_argument("scenario")
    p.add_argument("--primary", required=True, help="Name of the fixed primary modality")
    p.add_argument(
        "--secondary",
        help="Modality whose noise model the secondary inherits "
        "(defaults to the only other modality)",
    )
    p.add_argument("--budget", type=float, required=True, help="SNR budget p")
    p.add_argument("--out")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("simulate", help="Monte-Carlo estimator verification campaign")
    p.add_argument("scenario")
    p.add_argument("--method", required=True, choices=["ml", "wls", "mmse"])
    p.add_argument("--N", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modality", help="Modality to simulate (default: first listed)")
    p.add_argument("--out", help="Base path; writes <base>.json and <base>.csv")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except FusionKitError as exc:
        print(
            f"numerical failure in {args.command} ({type(exc).__name__}): {exc}",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    raise SystemExit(main())
