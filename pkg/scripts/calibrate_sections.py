#!/usr/bin/env python3
"""
Measure the section statistic on the calibration pair.

Integrates seeded orbits of an integrable model and of the classic
chaotic model on the same energy surface and reports the curve residual
of both sections against the stored thresholds. With --write the
measurements become the golden values and the thresholds are reset to
twice the integrable and half the chaotic measurement.
"""

import sys
import json
import argparse
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from hhtk.dynamics.compile import field_for_system
from hhtk.dynamics.sections import SectionCalibration, calibration_statistic
from hhtk.errors import HHTKError
from hhtk.models.catalog import resolve_model
from hhtk.models.realize import RealizationSpec, build_nd_model
from hhtk.utils import setup_logger, format_output, print_status

DEFAULT_CALIBRATION = Path(__file__).parent.parent / 'tests' / 'data' / 'section_calibration.json'


def measure(model_id: str, calibration: SectionCalibration, box: float) -> float:
    model = resolve_model(model_id, {}, exact=True)
    system = build_nd_model(model, RealizationSpec.plain(2), allow_quasi=True)
    return calibration_statistic(field_for_system(system), calibration, box)


def main():
    parser = argparse.ArgumentParser(
        description='Measure section statistics for the calibration models',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  calibrate_sections.py
  calibrate_sections.py --duration 500 --output json
  calibrate_sections.py --write
        """
    )

    parser.add_argument('--calibration', default=str(DEFAULT_CALIBRATION), help='Calibration JSON file')
    parser.add_argument('--duration', type=float, help='Override the orbit duration')
    parser.add_argument('--box', type=float, default=0.5, help='Half-width of the seed box')
    parser.add_argument('--write', action='store_true', help='Store the measured values in the calibration file')
    parser.add_argument('--output', choices=['table', 'json', 'csv'], default='table', help='Output format')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], default='INFO')

    args = parser.parse_args()

    # Setup logging
    logger = setup_logger('calibrate_sections', args.log_level)
    setup_logger('hhtk', args.log_level)

    try:
        path = Path(args.calibration)
        calibration = SectionCalibration.from_dict(json.loads(path.read_text()))
        if args.duration:
            calibration.duration = args.duration

        integrable = measure(calibration.integrable_model, calibration, args.box)
        chaotic = measure(calibration.chaotic_model, calibration, args.box)
        if args.write:
            calibration.record(integrable, chaotic)
            path.write_text(json.dumps(calibration.to_dict(), indent=2) + '\n')
            print_status(f"Updated {path}", 'INFO')

        result = {
            'integrable': integrable,
            'chaotic': chaotic,
            'ratio': chaotic / integrable if integrable > 0 else float('inf'),
            'integrable_max': calibration.integrable_max,
            'chaotic_min': calibration.chaotic_min,
            'separation_min': calibration.separation_min,
            'calibrated': calibration.calibrated,
        }
        print(format_output(result, args.output))

        if not calibration.separates(integrable, chaotic):
            print_status('Sections are not separated by the stored thresholds', 'WARNING')
            sys.exit(3)
        print_status('Sections separated', 'SUCCESS')

    except KeyboardInterrupt:
        print_status("Operation cancelled by user", 'WARNING')
        sys.exit(1)
    except (HHTKError, OSError, KeyError, ValueError) as e:
        logger.error(f"Error: {e}")
        print_status(f"Error: {e}", 'ERROR')
        sys.exit(1)


if __name__ == '__main__':
    main()
