#!/usr/bin/env python3
"""
Certify every catalog family in one go.

Runs the abstract, canonical and Casimir-identity certificates for the
fixed-degree families and a few small combined models, then prints one
row per model.
"""

import sys
import argparse
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from hhtk.errors import HHTKError
from hhtk.models.catalog import resolve_model
from hhtk.reports import realization_for, verify_model
from hhtk.utils import setup_logger, format_output, print_status

DEFAULT_MODELS = ['kdv', 'sk', 'holt', 'generic:beta=2', 'kdv-mr:M=1,R=0', 'kdv-mr:M=2,R=1']
SLOW_MODELS = ['kk', 'kdv-mr:M=3,R=2']


def main():
    parser = argparse.ArgumentParser(
        description='Run involution certificates for catalog models',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  verify_catalog.py
  verify_catalog.py --all --n 3 --centrifugal symbolic
  verify_catalog.py --models kdv,holt --output json
        """
    )

    parser.add_argument('--models', help='Comma-separated model ids (default: the quick set)')
    parser.add_argument('--all', action='store_true', help='Include the slow quartic and combined models')
    parser.add_argument('--n', type=int, default=2, help='Degrees of freedom')
    parser.add_argument('--centrifugal', default='zero', help='zero, symbolic, or b1,b2,...')
    parser.add_argument('--seed', type=int, default=0, help='Seed for the finite-difference spot check')
    parser.add_argument('--output', choices=['table', 'json', 'csv'], default='table', help='Output format')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], default='WARNING')

    args = parser.parse_args()

    # Setup logging
    logger = setup_logger('verify_catalog', args.log_level)
    setup_logger('hhtk', args.log_level)

    if args.models:
        models = [m.strip() for m in args.models.split(',') if m.strip()]
    else:
        models = DEFAULT_MODELS + (SLOW_MODELS if args.all else [])
    centrifugal = args.centrifugal
    if centrifugal not in ('zero', 'symbolic'):
        centrifugal = [v.strip() for v in centrifugal.split(',')]

    try:
        spec = realization_for(args.n, centrifugal)
        rows = []
        for model_id in models:
            report = verify_model(resolve_model(model_id, {}, exact=True), spec, args.seed)
            rows.append({
                'model': model_id,
                'N': args.n,
                'certificates': len(report.certificates),
                'spot check': report.spot_check,
                'wall': round(report.elapsed, 3),
                'verdict': 'PASS' if report.passed else 'FAIL',
            })
        print(format_output(rows, args.output))

        failed = [r['model'] for r in rows if r['verdict'] != 'PASS']
        if failed:
            print_status(f"Residuals left for: {', '.join(failed)}", 'ERROR')
            sys.exit(2)
        print_status(f"All {len(rows)} models certified", 'SUCCESS')

    except KeyboardInterrupt:
        print_status("Operation cancelled by user", 'WARNING')
        sys.exit(1)
    except HHTKError as e:
        logger.error(f"Error: {e}")
        print_status(f"Error: {e}", 'ERROR')
        sys.exit(e.exit_code)


if __name__ == '__main__':
    main()
