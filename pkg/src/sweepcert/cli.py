"""Command-line interface for sweepcert.

Three batch commands read one JSON experiment document each:

  validate  run the self-consistency battery and print a table
  certify   check a Lyapunov-density certificate and write certificate.json
  simulate  run the sweeping diagnostic and write sweeping.json / sweeping.csv

Exit codes: 0 pass, 1 fail, 2 configuration error, 3 inconclusive.
"""

import argparse
import asyncio
import csv
import io
import json
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from .config import Settings
from .constants import (
    DEFAULT_FD_STEP,
    EXIT_CONFIG_ERROR,
    EXIT_FAILED,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    FD_DISAGREEMENT_TOLERANCE,
    STREAM_CERTIFY_POINTS,
    STREAM_ENSEMBLE,
    STREAM_FOCK_PROXIMITY,
    STREAM_INTEGRABILITY,
    STREAM_VALIDATE,
)
from .errors import EnsembleValidationError, InvalidArgumentError, SweepcertError
from .models.experiment import CellModelConfig, ExperimentConfig, QndModelConfig
from .models.reports import (
    CertificateReport,
    MonteCarloEstimate,
    SweepingReport,
    ValidationReport,
    Verdict,
)
from .storage import FilesystemReportStore, StorageError
from .tools.cell_cycle import (
    CellCycleProcess,
    PowerDensity,
    certificate_margin,
    find_beta,
    kernel_normalization,
    perron_power_closed_form,
    perron_power_quadrature,
)
from .tools.certify import (
    CertificationPlan,
    check_proper_subinvariance,
    family_regions,
    fock_proximity_diagnostic,
    sweeping_diagnostic,
)
from .tools.densities import UniformIntervalDensity, UniformSphereDensity
from .tools.markov import duality_residual
from .tools.numerics import RandomStream, fd_jacobian_det_on_sphere, sample_uniform_sphere
from .tools.qnd import (
    FockLyapunovDensity,
    MeasurementEnsemble,
    jacobian_det_complex,
    jacobian_det_real,
    outcome_probabilities,
    perron_qnd,
    realify_matrix,
    realify_state,
    to_ifs_model,
)
from .utils.logging_config import configure_logging
from .utils.simple_logger import log_complete, log_start


logger = logging.getLogger(__name__)

_CONFIG_ERRORS = (OSError, json.JSONDecodeError, ValidationError, EnsembleValidationError, InvalidArgumentError)
_VERDICT_EXIT = {
    Verdict.CERTIFIED: EXIT_OK,
    Verdict.VIOLATED: EXIT_FAILED,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}
_ORACLE_POINTS = 10
_DUALITY_FLOOR = 1e-8


def load_config(path: str) -> ExperimentConfig:
    """Read and validate an experiment document (raises on any config error)."""
    config = ExperimentConfig.load(path)
    logger.info(f"Loaded {config.model.kind} experiment from {path} (seed {config.seed})")
    return config


def build_ensemble(model: QndModelConfig, validate: bool = True) -> MeasurementEnsemble:
    """Measurement ensemble described by a qnd model section."""
    if model.diagonal is not None:
        return MeasurementEnsemble.from_diagonal(model.diagonal_table(), validate=validate)
    return MeasurementEnsemble.from_matrices(model.complex_matrices(), validate=validate)


def _initial_upper(model: CellModelConfig) -> float:
    return model.initial_upper if model.initial_upper is not None else 2.0 * model.sigma


def resolve_output_dir(config: ExperimentConfig, override: Optional[str], settings: Settings) -> str:
    """--output-dir beats SWEEPCERT_OUTPUT_DIR beats the config's output.directory."""
    return override or settings.output_dir or config.output.directory


def write_reports(directory: str, reports: Dict[str, str]) -> List[str]:
    """Write every report atomically; returns the written paths."""
    store = FilesystemReportStore(directory)

    async def write_all() -> List[str]:
        return list(await asyncio.gather(*(store.write_text(name, text) for name, text in reports.items())))

    return asyncio.run(write_all())


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def margins_csv(report: CertificateReport) -> str:
    """Per-sample margins as CSV."""
    rows = [
        (s.sample_id, "" if s.singular_distance is None else repr(s.singular_distance), repr(s.ratio), repr(s.margin))
        for s in report.samples
    ]
    return _csv_text(("sample_id", "singular_distance", "ratio", "margin"), rows)


def sweeping_csv(report: SweepingReport) -> str:
    """Mass-versus-step table with columns member_id, member_param, checkpoint, mass, std_error."""
    rows = [
        (m.member_id, repr(m.member_param), m.checkpoint, repr(m.mass), repr(m.std_error))
        for m in report.masses
    ]
    return _csv_text(("member_id", "member_param", "checkpoint", "mass", "std_error"), rows)


def _report_json(report: BaseModel) -> str:
    return report.model_dump_json(indent=2) + "\n"


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)))


def _run_check(
    report: ValidationReport, name: str, tolerance: float, fn: Callable[[], Tuple[float, str]]
) -> None:
    """Run one numeric check; any sweepcert error marks it failed."""
    try:
        value, detail = fn()
        report.add(name, value, tolerance, detail)
    except SweepcertError as exc:
        logger.warning(f"Check {name} failed to run: {exc}")
        report.add(name, math.nan, tolerance, f"error: {exc}", passed=False)


def _duality_check(
    report: ValidationReport, name: str, fn: Callable[[], Tuple[MonteCarloEstimate, str]]
) -> None:
    try:
        estimate, label = fn()
        tolerance = max(3.0 * estimate.std_error, _DUALITY_FLOOR)
        report.add(name, estimate.value, tolerance, f"{label}, combined std error {estimate.std_error:.3e}")
    except SweepcertError as exc:
        logger.warning(f"Check {name} failed to run: {exc}")
        report.add(name, math.nan, 0.0, f"error: {exc}", passed=False)


def validate_qnd(
    config: ExperimentConfig, model: QndModelConfig, stream: RandomStream, fd_step: float = DEFAULT_FD_STEP
) -> ValidationReport:
    """Self-consistency battery of a measurement ensemble."""
    report = ValidationReport(model_kind="qnd")
    ensemble = build_ensemble(model, validate=False)
    n = ensemble.dim

    report.add(
        "completeness_residual",
        ensemble.completeness_residual,
        1e-12,
        "max entry of sum_k M_k^* M_k - I",
    )
    min_det = float(ensemble.abs_dets.min())
    report.add("min_abs_det", min_det, 1e-12, "smallest |det M_k|", passed=min_det > 1e-12)
    if ensemble.table is not None:
        table = ensemble.table
        bad = int(np.count_nonzero((table <= 0.0) | (table >= 1.0)))
        bad += sum(len(row) - len(np.unique(row)) for row in table)
        report.add(
            "diagonal_entries",
            bad,
            0.0,
            "entries outside (0, 1) plus repeats within a row",
            passed=bad == 0,
        )
    for flag in ensemble.flags:
        logger.warning(f"Ensemble flag: {flag}")
    if min_det <= 1e-12:
        return report

    states = sample_uniform_sphere(n, stream.substream(0), size=_ORACLE_POINTS)

    def probability_sum() -> Tuple[float, str]:
        sums = outcome_probabilities(ensemble, states).sum(axis=1)
        return float(np.max(np.abs(sums - 1.0))), f"max |sum_k p_k - 1| over {len(states)} states"

    def real_closed_form_vs_fd() -> Tuple[float, str]:
        gaps = []
        for matrix in ensemble.matrices:
            real_matrix = realify_matrix(matrix)
            for phi in states:
                point = realify_state(phi)
                closed = jacobian_det_real(real_matrix, point)
                fd = fd_jacobian_det_on_sphere(
                    lambda p, m=real_matrix: (m @ p) / np.linalg.norm(m @ p), point, fd_step
                )
                gaps.append(abs(fd.value - closed) / closed)
        return max(gaps), "real-sphere closed form vs finite differences"

    def complex_vs_realified() -> Tuple[float, str]:
        gaps = [
            _relative_gap(
                jacobian_det_complex(matrix, states),
                jacobian_det_real(realify_matrix(matrix), realify_state(states)),
            )
            for matrix in ensemble.matrices
        ]
        return max(gaps), "complex closed form vs realified real closed form"

    def chain_rule() -> Tuple[float, str]:
        gaps = []
        for matrix, inverse in zip(ensemble.matrices, ensemble.inverses):
            images = states @ matrix.T
            images = images / np.linalg.norm(images, axis=1, keepdims=True)
            product = np.asarray(jacobian_det_complex(matrix, states)) * np.asarray(
                jacobian_det_complex(inverse, images)
            )
            gaps.append(float(np.max(np.abs(product - 1.0))))
        return max(gaps), "det(D M) det(D M^-1) - 1"

    def generic_route() -> Tuple[float, str]:
        rho = UniformSphereDensity(n)
        direct = perron_qnd(ensemble, rho, states)
        generic = to_ifs_model(ensemble, check_weights=False).perron(rho, states)
        return _relative_gap(generic, direct), "explicit Perron formula vs generic IFS route"

    _run_check(report, "outcome_probability_sum", 1e-12, probability_sum)
    _run_check(report, "jacobian_real_vs_fd", 1e-5, real_closed_form_vs_fd)
    _run_check(report, "jacobian_complex_vs_realified", 1e-10, complex_vs_realified)
    _run_check(report, "jacobian_chain_rule", 1e-10, chain_rule)
    _run_check(report, "perron_generic_route", 1e-12, generic_route)

    if ensemble.is_valid:
        region = family_regions(config.family_spec())[-1]

        def duality() -> Tuple[MonteCarloEstimate, str]:
            estimate = duality_residual(
                to_ifs_model(ensemble),
                UniformSphereDensity(n),
                region,
                config.certificate.n_integrability_samples,
                stream.substream(1),
            )
            return estimate, region.label

        _duality_check(report, "duality_residual", duality)
    else:
        logger.warning("Skipping duality check: ensemble violates completeness")
    return report


def validate_cell(config: ExperimentConfig, model: CellModelConfig, stream: RandomStream) -> ValidationReport:
    """Self-consistency battery of the cell-cycle process."""
    report = ValidationReport(model_kind="cell")
    base = model.to_model()
    sigma = base.sigma

    if model.beta == "auto":
        beta = find_beta(base, model.beta_max, model.beta_grid)
    else:
        beta = float(model.beta)
    oracle_beta = beta if beta is not None and beta > 0 else 0.1
    oracle = base.with_beta(oracle_beta)

    def normalization() -> Tuple[float, str]:
        ys = sigma * np.logspace(0.0, 2.0, 20)
        return float(max(abs(kernel_normalization(base, y) - 1.0) for y in ys)), "int K(x, y) dx - 1"

    def closed_form() -> Tuple[float, str]:
        xs = sigma * np.logspace(0.0, 3.0, 50)
        quad = np.array([perron_power_quadrature(oracle, x) for x in xs])
        closed = np.asarray(perron_power_closed_form(oracle, xs))
        mask = quad != 0.0
        gap = _relative_gap(closed[mask], quad[mask]) if np.any(mask) else float(np.max(np.abs(closed)))
        return gap, f"closed form vs quadrature at beta = {oracle_beta:.6g}"

    def margin_at_zero() -> Tuple[float, str]:
        return float(certificate_margin(base, 0.0)), "f(0)"

    def slope_at_zero() -> Tuple[float, str]:
        h = 1e-7
        fd = (float(certificate_margin(base, h)) - float(certificate_margin(base, 0.0))) / h
        return fd - base.certificate_slope_at_zero, f"f'(0) = {base.certificate_slope_at_zero:+.6f}"

    _run_check(report, "kernel_normalization", 1e-9, normalization)
    _run_check(report, "closed_form_vs_quadrature", 1e-6, closed_form)
    _run_check(report, "certificate_margin_at_zero", 0.0, margin_at_zero)
    _run_check(report, "certificate_slope_at_zero", FD_DISAGREEMENT_TOLERANCE, slope_at_zero)

    def duality() -> Tuple[MonteCarloEstimate, str]:
        region = family_regions(config.family_spec())[0]
        estimate = duality_residual(
            CellCycleProcess(base),
            UniformIntervalDensity(sigma, _initial_upper(model)),
            region,
            config.certificate.n_integrability_samples,
            stream.substream(1),
        )
        return estimate, region.label

    _duality_check(report, "duality_residual", duality)
    return report


def format_validation_table(report: ValidationReport) -> str:
    """Fixed-width text table of the battery."""
    width = max(len(c.name) for c in report.checks) if report.checks else 5
    lines = [f"{'check':<{width}}  {'value':>13}  {'tolerance':>10}  result  detail"]
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{c.name:<{width}}  {c.value:>13.6g}  {c.tolerance:>10.3g}  {status:<6}  {c.detail}")
    lines.append(f"{'overall':<{width}}  {'':>13}  {'':>10}  {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines)


def cmd_validate(
    config_path: str, output_dir: Optional[str] = None, settings: Optional[Settings] = None
) -> int:
    """Run the self-consistency battery; 0 all pass, 1 any fails, 2 config error."""
    try:
        config = load_config(config_path)
    except _CONFIG_ERRORS as exc:
        logger.error(f"Invalid configuration {config_path}: {exc}")
        return EXIT_CONFIG_ERROR

    if settings is None:
        settings = Settings()
    stream = RandomStream(config.seed, STREAM_VALIDATE)
    log_start(logger, f"Validating {config.model.kind} model")
    model = config.model
    if isinstance(model, QndModelConfig):
        report = validate_qnd(config, model, stream, fd_step=settings.fd_step)
    else:
        report = validate_cell(config, model, stream)
    print(format_validation_table(report))
    log_complete(logger, f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_FAILED


def _plan(config: ExperimentConfig) -> CertificationPlan:
    cert = config.certificate
    return CertificationPlan(
        n_points=cert.n_points,
        exclusion_radius=cert.exclusion_radius,
        margin_floor=cert.margin_floor,
        upper=cert.upper,
    )


def certify_qnd(config: ExperimentConfig, model: QndModelConfig) -> CertificateReport:
    ensemble = build_ensemble(model)
    return check_proper_subinvariance(
        to_ifs_model(ensemble),
        FockLyapunovDensity(ensemble.dim),
        _plan(config),
        RandomStream(config.seed, STREAM_CERTIFY_POINTS),
        family=config.family_spec(),
        integrability_samples=config.certificate.n_integrability_samples,
        integrability_rng=RandomStream(config.seed, STREAM_INTEGRABILITY),
        parameters={"dim": float(ensemble.dim), "n_outcomes": float(ensemble.n_outcomes)},
        model_kind="qnd",
    )


def certify_cell(config: ExperimentConfig, model: CellModelConfig) -> CertificateReport:
    base = model.to_model()
    parameters = {
        "alpha": base.alpha,
        "sigma": base.sigma,
        "f_prime_0": base.certificate_slope_at_zero,
    }
    if model.beta == "auto":
        beta = find_beta(base, model.beta_max, model.beta_grid)
        parameters["beta_max"] = model.beta_max
    else:
        beta = float(model.beta)

    if beta is None:
        diagnostic = (
            f"no beta in (0, {model.beta_max:g}] with f(beta) < 0; "
            f"f'(0) = -alpha ln sigma - 1 = {base.certificate_slope_at_zero:+.4f}"
        )
        if base.certificate_slope_at_zero > 0:
            diagnostic += " > 0, so f increases near 0"
        logger.warning(diagnostic)
        return CertificateReport(
            model_kind="cell",
            density="power",
            n_points=0,
            margin_floor=config.certificate.margin_floor,
            exclusion_radius=config.certificate.exclusion_radius,
            verdict=Verdict.INCONCLUSIVE,
            parameters=parameters,
            diagnostics=[diagnostic],
            seed=config.seed,
        )

    parameters["beta"] = beta
    parameters["f_beta"] = float(certificate_margin(base, beta))
    cell = base.with_beta(beta)
    return check_proper_subinvariance(
        CellCycleProcess(cell),
        PowerDensity(beta, cell.sigma),
        _plan(config),
        RandomStream(config.seed, STREAM_CERTIFY_POINTS),
        family=config.family_spec(),
        integrability_samples=config.certificate.n_integrability_samples,
        integrability_rng=RandomStream(config.seed, STREAM_INTEGRABILITY),
        parameters=parameters,
        model_kind="cell",
    )


def cmd_certify(
    config_path: str, output_dir: Optional[str] = None, settings: Optional[Settings] = None
) -> int:
    """Check the certificate; 0 certified, 1 violated, 3 inconclusive, 2 config error."""
    if settings is None:
        settings = Settings()
    try:
        config = load_config(config_path)
        model = config.model
        if isinstance(model, QndModelConfig):
            build_ensemble(model)
    except _CONFIG_ERRORS as exc:
        logger.error(f"Invalid configuration {config_path}: {exc}")
        return EXIT_CONFIG_ERROR

    try:
        if isinstance(model, QndModelConfig):
            report = certify_qnd(config, model)
        else:
            report = certify_cell(config, model)
    except SweepcertError as exc:
        logger.error(f"Certification could not complete: {exc}")
        return EXIT_INCONCLUSIVE

    report = report.model_copy(update={"config_digest": config.digest()})
    reports = {"certificate.json": _report_json(report)}
    if config.output.csv:
        reports["certificate_margins.csv"] = margins_csv(report)
    try:
        paths = write_reports(resolve_output_dir(config, output_dir, settings), reports)
    except StorageError as exc:
        logger.error(f"Could not write reports: {exc}")
        return EXIT_CONFIG_ERROR
    for path in paths:
        logger.info(f"Wrote {path}")
    return _VERDICT_EXIT[report.verdict]


def simulate(config: ExperimentConfig, settings: Settings) -> SweepingReport:
    """Sweeping diagnostic (plus Fock proximity for diagonal ensembles)."""
    model = config.model
    checkpoints = config.resolved_checkpoints()
    family = config.family_spec()
    ensemble_stream = RandomStream(config.seed, STREAM_ENSEMBLE)

    if isinstance(model, QndModelConfig):
        ensemble = build_ensemble(model)
        report = sweeping_diagnostic(
            to_ifs_model(ensemble),
            UniformSphereDensity(ensemble.dim).sample,
            family,
            checkpoints,
            config.n_trajectories,
            ensemble_stream,
            workers=settings.workers,
            block_size=settings.block_size,
        )
        if ensemble.is_diagonal:
            proximity = fock_proximity_diagnostic(
                ensemble,
                config.n_trajectories,
                config.horizon,
                config.fock_delta,
                RandomStream(config.seed, STREAM_FOCK_PROXIMITY),
                checkpoints=checkpoints,
                workers=settings.workers,
                block_size=settings.block_size,
            )
            report = report.model_copy(update={"fock_proximity": proximity})
        return report

    return sweeping_diagnostic(
        CellCycleProcess(model.to_model()),
        UniformIntervalDensity(model.sigma, _initial_upper(model)).sample,
        family,
        checkpoints,
        config.n_trajectories,
        ensemble_stream,
        workers=settings.workers,
        block_size=settings.block_size,
    )


def cmd_simulate(
    config_path: str, output_dir: Optional[str] = None, settings: Optional[Settings] = None
) -> int:
    """Run the sweeping diagnostic; 0 on completion, 2 config error."""
    if settings is None:
        settings = Settings()
    try:
        config = load_config(config_path)
        if isinstance(config.model, QndModelConfig):
            build_ensemble(config.model)
    except _CONFIG_ERRORS as exc:
        logger.error(f"Invalid configuration {config_path}: {exc}")
        return EXIT_CONFIG_ERROR

    try:
        report = simulate(config, settings)
    except SweepcertError as exc:
        logger.error(f"Simulation failed: {exc}")
        return EXIT_FAILED

    report = report.model_copy(update={"config_digest": config.digest()})
    reports = {"sweeping.json": _report_json(report)}
    if config.output.csv:
        reports["sweeping.csv"] = sweeping_csv(report)
    try:
        paths = write_reports(resolve_output_dir(config, output_dir, settings), reports)
    except StorageError as exc:
        logger.error(f"Could not write reports: {exc}")
        return EXIT_CONFIG_ERROR
    for path in paths:
        logger.info(f"Wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for the sweepcert command."""
    parser = argparse.ArgumentParser(
        prog="sweepcert",
        description="Certify Lyapunov densities and observe sweeping of Markov processes",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Self-consistency battery
  %(prog)s validate --config configs/qnd_diagonal.json

  # Certificate check with reports in a custom directory
  %(prog)s certify --config configs/cell_auto.json --output-dir results/cell

  # Set-mass decay experiment
  %(prog)s simulate --config configs/qnd_diagonal.json --quiet
        """,
    )
    parser.add_argument("command", choices=["validate", "certify", "simulate"], help="Command to run")
    parser.add_argument("--config", required=True, help="Path to the JSON experiment document")
    parser.add_argument("--output-dir", help="Report directory (overrides config and SWEEPCERT_OUTPUT_DIR)")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the exit code."""
    args = build_parser().parse_args(argv)
    settings = Settings()
    configure_logging(level="DEBUG" if settings.debug else settings.log_level, quiet=args.quiet)

    commands = {
        "validate": cmd_validate,
        "certify": cmd_certify,
        "simulate": cmd_simulate,
    }
    try:
        return commands[args.command](args.config, args.output_dir, settings=settings)
    except Exception:
        logger.exception(f"Unexpected failure in {args.command}")
        return EXIT_FAILED
