"""``mint`` command-line front end.

Every command prints one JSON report on stdout::

    {"command", "status", "metrics", "artifacts", "seed", "tool_version"}

and a short human log on stderr.  Exit status is 0 when the report passes,
1 when it fails and 2 on usage, input or I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from collections.abc import Callable, Sequence

import numpy as np

from . import __version__
from .acceptance import run_suite
from .errors import MintError
from .fixtures import make_fixture
from .interpolation import interpolate_kkb, progress_ceiling, verify_interpolation
from .io import (
    DocumentError,
    basis_from_doc,
    encode_matrix,
    encode_real,
    load,
    measurement_to_doc,
    read_json,
    result_to_doc,
    to_doc,
    write_json,
)
from .linalg import Tolerances, use_tolerances
from .measurement import ProductBasis, validate, von_neumann
from .progress import example_mu, threshold_example_mu
from .protocol import discriminates, implements, interpolate_protocol, leaf_povm
from .structure import extract_local_nondisturbing, is_non_disturbing, is_product, local_diagonality_space

log = logging.getLogger("mint")

STATUSES = ("pass", "fail", "error")
REPORT_KEYS = ("command", "status", "metrics", "artifacts", "seed", "tool_version")


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit status 2."""


@dataclasses.dataclass
class Report:
    command: str
    status: str = "pass"
    metrics: dict = dataclasses.field(default_factory=dict)
    artifacts: dict = dataclasses.field(default_factory=dict)
    seed: int | None = None
    tool_version: str = __version__

    def metric(self, name: str, value) -> None:
        value = float(value)
        if math.isfinite(value):
            self.metrics[name] = value
        else:
            # non-finite values are kept out of the numeric section
            self.artifacts.setdefault("nonfinite_metrics", {})[name] = encode_real(value)

    def require(self, condition: bool, reason: str) -> None:
        if not condition:
            self.status = "fail"
            self.artifacts.setdefault("failures", []).append(reason)

    def to_json(self) -> str:
        doc = {k: getattr(self, k) for k in REPORT_KEYS}
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1, "error": 2}[self.status]


def _load(path: str, kind: str):
    try:
        return load(path, kind)
    except (OSError, json.JSONDecodeError, DocumentError) as exc:
        raise UsageError(f"cannot read {kind} from {path}: {exc}") from exc


def _emit(report: Report, args, name: str, obj) -> None:
    """Write ``obj`` to ``--out`` when given, otherwise embed it in the report."""
    doc = obj if isinstance(obj, dict) else to_doc(obj)
    if getattr(args, "out", None):
        try:
            write_json(args.out, doc)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from exc
        report.artifacts[name] = {"path": args.out}
        log.info("wrote %s", args.out)
    else:
        report.artifacts[name] = doc


def _example_mu(args, basis: ProductBasis):
    if args.progress != "example":
        raise UsageError(f"unknown progress function {args.progress!r}; the CLI offers only 'example'")
    return example_mu(basis)


# -- commands -----------------------------------------------------------------

def cmd_povm_validate(args, report: Report) -> None:
    m = _load(args.file, "measurement")
    rep = validate(m)
    report.metric("completeness_residual", rep.completeness_residual)
    report.metric("min_eigenvalue", min(rep.min_eigenvalues))
    report.metric("outcomes", len(m))
    report.metric("dim", m.dim)
    report.require(rep.psd, f"element below the PSD floor (min eigenvalue {min(rep.min_eigenvalues):.3e})")
    report.require(rep.complete, f"elements do not sum to the identity (residual {rep.completeness_residual:.3e})")


def cmd_basis_validate(args, report: Report) -> None:
    try:
        basis = basis_from_doc(_read(args.file), check=False)
    except DocumentError as exc:
        raise UsageError(f"cannot read basis from {args.file}: {exc}") from exc
    err = basis.orthonormality_error()
    report.metric("orthonormality_error", err)
    report.metric("states", len(basis.labels))
    report.metric("dim", basis.dim)
    report.require(err <= args.tol, f"orthonormality error {err:.3e} exceeds {args.tol:g}")
    report.require(len(basis.labels) == basis.dim, f"{len(basis.labels)} states do not span C^{basis.dim}")


def _read(path: str) -> dict:
    try:
        return read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_interpolate(args, report: Report) -> None:
    m = _load(args.measurement, "measurement")
    basis = _load(args.basis, "basis")
    mu = _example_mu(args, basis)
    lam = progress_ceiling(m, mu)
    result = interpolate_kkb(m, mu, args.epsilon)
    rep = verify_interpolation(m, result, mu)
    report.metric("epsilon", args.epsilon)
    report.metric("epsilon_achieved", result.epsilon_achieved)
    report.metric("lambda", lam)
    for key in ("stage_residual", "progress_error", "composition_residual"):
        report.metric(key, getattr(rep, key))
    if rep.proportionality_residual is not None:
        report.metric("proportionality_residual", rep.proportionality_residual)
    report.require(rep.ok, "interpolation does not verify")
    doc = result_to_doc(result)
    doc["verification"] = rep.as_dict()
    _emit(report, args, "result", doc)


def cmd_analyze_non_disturbing(args, report: Report) -> None:
    m = _load(args.measurement, "measurement")
    basis = _load(args.basis, "basis")
    rep = is_non_disturbing(m, basis, tol=args.tol)
    report.metric("off_diagonal_weight", rep.worst)
    report.require(bool(rep), f"element {rep.element!r} has off-diagonal weight {rep.worst:.3e}")


def cmd_analyze_diagonality(args, report: Report) -> None:
    basis = _load(args.basis, "basis")
    space = local_diagonality_space(basis, args.party)
    report.metric("dimension", space.dimension)
    report.artifacts["party"] = space.party
    report.artifacts["solution_basis"] = [encode_matrix(x) for x in space.basis]


def cmd_analyze_extract(args, report: Report) -> None:
    stage = _load(args.stage, "measurement")
    basis = _load(args.basis, "basis")
    stage = stage.with_dims(basis.d_A, basis.d_B)
    mu = example_mu(basis)
    mu0 = threshold_example_mu(basis.dim).mu0
    report.metric("mu0", mu0)
    stage_progress = max(mu(e) for e in stage.elements)
    report.metric("stage_progress", stage_progress)
    if args.epsilon_check:
        report.require(0.0 < stage_progress < mu0, f"stage progress {stage_progress:.6g} is not in (0, mu0)")
    try:
        ex = extract_local_nondisturbing(stage, basis, mu, mu0)
    except MintError as exc:
        report.require(False, f"{type(exc).__name__}: {exc}")
        return
    report.artifacts["party"] = ex.party
    report.artifacts["trivial"] = ex.trivial
    report.artifacts["measurement"] = measurement_to_doc(ex.measurement)
    report.metric("min_progress", min(ex.progress_values))
    report.require(not ex.trivial, "only the trivial local measurement is non-disturbing")
    report.require(min(ex.progress_values) >= mu0 - 1e-9, "extracted outcomes stay below the threshold")


def cmd_protocol_povm(args, report: Report) -> None:
    tree = _load(args.file, "protocol")
    povm = leaf_povm(tree)
    rep = validate(povm)
    report.metric("completeness_residual", rep.completeness_residual)
    report.metric("leaves", len(povm))
    report.require(rep.ok, "leaf POVM does not validate")
    _emit(report, args, "povm", povm)


def cmd_protocol_discriminate(args, report: Report) -> None:
    tree = _load(args.file, "protocol")
    basis = _load(args.basis, "basis")
    disc = discriminates(tree, basis)
    report.artifacts["ambiguous"] = list(disc.ambiguous)
    partition = disc.partition if disc else disc.best_guess
    imp = implements(tree, von_neumann(basis), partition)
    report.artifacts["partition"] = dict(partition)
    report.metric("implementation_residual", imp.worst)
    report.artifacts["discriminates"] = bool(disc)
    report.artifacts["implements"] = bool(imp)
    report.require(bool(disc) == bool(imp), "discrimination and implementation disagree")
    report.require(bool(disc), f"{len(disc.ambiguous)} outcomes leave several states possible")


def cmd_protocol_interpolate(args, report: Report) -> None:
    tree = _load(args.file, "protocol")
    completion = _load(args.m2, "completion")
    basis = _load(args.basis, "basis")
    mu = _example_mu(args, basis)
    mu0 = threshold_example_mu(basis.dim).mu0
    target = von_neumann(basis)
    interp = interpolate_protocol(tree, completion, mu, mu0, args.epsilon, target)
    result = interp.result
    rep = verify_interpolation(target, result, mu)
    products = [is_product(e, tree.d_A, tree.d_B) for e in result.m1.elements]
    report.metric("epsilon", args.epsilon)
    report.metric("epsilon_achieved", result.epsilon_achieved)
    report.metric("mu0", mu0)
    report.metric("lambda", interp.selection.lam)
    report.metric("zero_margin", interp.selection.zero_margin)
    for key in ("stage_residual", "progress_error", "composition_residual"):
        report.metric(key, getattr(rep, key))
    report.artifacts["node"] = interp.selection.state.name
    report.require(rep.ok, "interpolation does not verify")
    report.require(all(products), "a first-stage element is not a tensor product")
    doc = result_to_doc(result)
    doc["verification"] = rep.as_dict()
    _emit(report, args, "result", doc)


def cmd_fixtures(args, report: Report) -> None:
    try:
        obj = make_fixture(args.name)
    except KeyError as exc:
        raise UsageError(f"unknown fixture {args.name!r}") from exc
    report.artifacts["name"] = args.name
    report.artifacts["kind"] = type(obj).__name__
    _emit(report, args, "fixture", obj)


def cmd_suite(args, report: Report) -> None:
    try:
        results = run_suite(args.scale, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    lines = []
    for r in results:
        log.info("%s", r.line())
        lines.append(r.line())
        for key, value in r.metrics.items():
            if key != "seconds":  # wall time would break byte-identical reports
                report.metric(f"criterion_{r.number}.{key}", value)
        report.require(r.passed, f"criterion {r.number} failed")
    report.metric("passed", sum(r.passed for r in results))
    report.metric("criteria", len(results))
    report.artifacts["criteria"] = [{"number": r.number, "name": r.name, "passed": r.passed} for r in results]


def check_report(doc) -> list[str]:
    """Problems that make ``doc`` an invalid report; empty when it is valid."""
    if not isinstance(doc, dict):
        return ["report must be a JSON object"]
    problems = [f"missing field {k!r}" for k in REPORT_KEYS if k not in doc]
    if doc.get("status") not in STATUSES:
        problems.append(f"status must be one of {STATUSES}")
    if not isinstance(doc.get("command"), str):
        problems.append("command must be a string")
    if not isinstance(doc.get("tool_version"), str):
        problems.append("tool_version must be a string")
    if not isinstance(doc.get("artifacts", {}), dict):
        problems.append("artifacts must be an object")
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        problems.append("seed must be an integer or null")
    metrics = doc.get("metrics", {})
    if not isinstance(metrics, dict):
        problems.append("metrics must be an object")
    else:
        for name, value in metrics.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                problems.append(f"metric {name!r} is not a finite number")
    return problems


def cmd_report_check(args, report: Report) -> None:
    try:
        with open(args.file) as fh:
            doc = json.load(fh, parse_constant=lambda c: float(c))
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc}") from exc
    except json.JSONDecodeError as exc:
        report.require(False, f"not valid JSON: {exc}")
        return
    for problem in check_report(doc):
        report.require(False, problem)
    if isinstance(doc, dict):
        report.artifacts["checked_command"] = doc.get("command")
        report.artifacts["checked_status"] = doc.get("status")


# -- parser -------------------------------------------------------------------

def _add_tolerance_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("tolerances (override MINT_TOLERANCE_* variables)")
    for field in dataclasses.fields(Tolerances):
        flag = "--tolerance-" + field.name.replace("_", "-")
        group.add_argument(flag, dest=f"tolerance_{field.name}", type=float, default=None, metavar="REAL")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for sampled checks")
    common.add_argument("-v", "--verbose", action="store_true", help="debug-level log on stderr")
    _add_tolerance_flags(common)

    parser = argparse.ArgumentParser(prog="mint", description="Measurement interpolation toolkit.",
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"mint {__version__}")
    sub = parser.add_subparsers(dest="group", required=True, metavar="COMMAND")

    def command(subparsers, name: str, handler: Callable, help: str) -> argparse.ArgumentParser:
        p = subparsers.add_parser(name, help=help, parents=[common])
        p.set_defaults(handler=handler)
        return p

    povm = sub.add_parser("povm", help="measurement documents").add_subparsers(dest="action", required=True)
    p = command(povm, "validate", cmd_povm_validate, "check positivity and completeness")
    p.add_argument("file")

    basis = sub.add_parser("basis", help="product basis documents").add_subparsers(dest="action", required=True)
    p = command(basis, "validate", cmd_basis_validate, "check orthonormality")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)

    p = command(sub, "interpolate", cmd_interpolate, "two-stage epsilon-interpolation of a measurement")
    p.add_argument("--measurement", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--progress", default="example")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")

    analyze = sub.add_parser("analyze", help="structure analysis").add_subparsers(dest="action", required=True)
    p = command(analyze, "non-disturbing", cmd_analyze_non_disturbing, "check diagonality in a basis")
    p.add_argument("--measurement", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p = command(analyze, "diagonality", cmd_analyze_diagonality, "local operators diagonal in a basis")
    p.add_argument("--basis", required=True)
    p.add_argument("--party", default="alice")
    p = command(analyze, "extract", cmd_analyze_extract, "local non-disturbing measurement from a product stage")
    p.add_argument("--stage", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--epsilon-check", action="store_true",
                   help="also require the stage progress to lie strictly between 0 and the threshold")

    protocol = sub.add_parser("protocol", help="protocol trees").add_subparsers(dest="action", required=True)
    p = command(protocol, "povm", cmd_protocol_povm, "leaf POVM of a protocol")
    p.add_argument("file")
    p.add_argument("--out")
    p = command(protocol, "discriminate", cmd_protocol_discriminate, "does the protocol discriminate a basis")
    p.add_argument("file")
    p.add_argument("--basis", required=True)
    p = command(protocol, "interpolate", cmd_protocol_interpolate, "product interpolation of a completed protocol")
    p.add_argument("file")
    p.add_argument("--m2", required=True, help="completion document (second stages per leaf)")
    p.add_argument("--basis", required=True)
    p.add_argument("--progress", default="example")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")

    p = command(sub, "fixtures", cmd_fixtures, "emit a named fixture")
    p.add_argument("name")
    p.add_argument("--out")

    p = command(sub, "suite", cmd_suite, "run the acceptance criteria")
    p.add_argument("--scale", default="desk")

    report_cmds = sub.add_parser("report", help="report documents").add_subparsers(dest="action", required=True)
    p = command(report_cmds, "check", cmd_report_check, "validate a report document")
    p.add_argument("file")
    return parser


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("mint: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage to stderr
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    name = " ".join(x for x in (args.group, getattr(args, "action", None)) if x)
    report = Report(name, seed=args.seed)
    try:
        overrides = {f.name: getattr(args, f"tolerance_{f.name}") for f in dataclasses.fields(Tolerances)}
        tol = Tolerances.from_env(**overrides)
    except ValueError as exc:
        report.status = "error"
        report.artifacts["error"] = f"bad tolerance: {exc}"
    else:
        with use_tolerances(tol), np.errstate(all="ignore"):
            try:
                args.handler(args, report)
            except UsageError as exc:
                report.status = "error"
                report.artifacts["error"] = str(exc)
            except MintError as exc:
                report.require(False, f"{type(exc).__name__}: {exc}")
    if report.status == "error":
        log.error("%s", report.artifacts["error"])
    else:
        for reason in report.artifacts.get("failures", []):
            log.info("fail: %s", reason)
        log.info("%s: %s", name, report.status)
    print(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
