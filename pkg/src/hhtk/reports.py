"""
Certificate suites and the text reports written next to run outputs.

Report text is deterministic: wall time appears only when requested.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

from hhtk.algebra.lift import LiftResult
from hhtk.algebra.poisson import BracketContext, Certificate, certify_involution, spot_check
from hhtk.algebra.symexpr import to_text
from hhtk.errors import ConfigError, NoIntegral
from hhtk.models.catalog import ModelInstance, parse_value
from hhtk.models.realize import MAX_SYMBOLIC_N, RealizationSpec, build_nd_model, casimir_identity_check
from hhtk.utils import write_text

logger = logging.getLogger(__name__)

REPORT_FILENAME = 'report.txt'
SPOT_CHECK_TOLERANCE = 1e-6


@dataclass
class VerifyReport:
    """Certificates for one model in one realization."""

    model_id: str
    n: int
    centrifugal: str
    spot_check: Optional[float] = None
    certificates: List[Certificate] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.certificates) and all(c.passed for c in self.certificates)

    @property
    def failures(self) -> List[Certificate]:
        return [c for c in self.certificates if not c.passed]

    def summary_lines(self) -> List[str]:
        return [c.summary_line() for c in self.certificates]

    def rows(self) -> List[Dict[str, str]]:
        return [
            {
                'pair': c.label,
                'mode': c.mode,
                'status': c.status,
                'verdict': 'PASS' if c.passed else 'FAIL',
            }
            for c in self.certificates
        ]

    def render(self, timing: bool = False) -> str:
        lines = [
            f"model:       {self.model_id}",
            f"N:           {self.n}",
            f"centrifugal: {self.centrifugal}",
        ]
        if self.spot_check is not None:
            lines.append(f"spot check:  {self.spot_check:.3e}")
        lines.append('')
        for cert in self.certificates:
            lines.append(cert.to_report(timing))
            lines.append('')
        verdict = 'PASS' if self.passed else 'FAIL'
        lines.append(
            f"overall: {verdict} ({len(self.certificates) - len(self.failures)}"
            f"/{len(self.certificates)} certificates zero)"
        )
        if timing:
            lines.append(f"wall: {self.elapsed:.3f}s")
        return '\n'.join(lines) + '\n'


def realization_for(n: int, centrifugal: Union[str, List[object]], exact: bool = True) -> RealizationSpec:
    """``zero``, ``symbolic`` or explicit constants ``b_1..b_{N-1}``."""
    if centrifugal == 'zero':
        return RealizationSpec.plain(n)
    if centrifugal == 'symbolic':
        return RealizationSpec.symbolic(n)
    if isinstance(centrifugal, list):
        values = [parse_value(str(v), exact) for v in centrifugal]
        try:
            return RealizationSpec.with_values(n, values)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    raise ConfigError(f"centrifugal must be zero, symbolic or a list, got {centrifugal!r}")


def verify_model(model: ModelInstance, spec: RealizationSpec, seed: int = 0) -> VerifyReport:
    """Run every involution certificate for ``model`` realized by ``spec``.

    The finite-difference spot check runs first and is logged; the exact
    certificates decide the verdict.

    Raises:
        NoIntegral: if the model carries no integral
        ConfigError: if ``N`` exceeds the symbolic cap
    """
    if not model.has_integral:
        raise NoIntegral('model has no integral')
    if spec.n > MAX_SYMBOLIC_N:
        raise ConfigError(
            f"symbolic certificates are limited to N <= {MAX_SYMBOLIC_N}; "
            f"use integrate for larger N"
        )
    start = time.perf_counter()
    logger.info(f"Verifying {model.model_id} with N={spec.n}, b={spec.label()}")
    report = VerifyReport(model.model_id, spec.n, spec.label())

    system = build_nd_model(model, spec)
    assert system.i is not None
    report.spot_check = spot_check(system.h, system.i, spec.n, seed)
    if report.spot_check > SPOT_CHECK_TOLERANCE:
        logger.warning(f"Finite-difference bracket {report.spot_check:.3e} is not small")
    else:
        logger.info(f"Finite-difference spot check {report.spot_check:.3e}")

    assert model.abstract_i is not None
    report.certificates.append(
        certify_involution(
            model.abstract_h, model.abstract_i, BracketContext.abstract(),
            label='H,I', model=model.model_id,
        )
    )
    report.certificates.extend(system.certify())
    report.certificates.append(replace(casimir_identity_check(spec), model=model.model_id))
    report.elapsed = time.perf_counter() - start

    for cert in report.failures:
        logger.error(f"{cert.summary_line()}: {to_text(cert.residual)}")
    logger.info(
        f"Verification finished in {report.elapsed:.2f}s: "
        f"{'PASS' if report.passed else 'FAIL'}"
    )
    return report


def render_lift(result: LiftResult, h_file: str, i_file: str) -> str:
    lines = [
        f"h-file: {h_file}",
        f"i-file: {i_file}",
        f"Casimir rounds: {result.rounds}",
        '',
        result.report(),
    ]
    return '\n'.join(lines) + '\n'


def write_report(directory: Union[str, Path], text: str) -> Path:
    path = write_text(Path(directory) / REPORT_FILENAME, text)
    logger.debug(f"Wrote {path}")
    return path
