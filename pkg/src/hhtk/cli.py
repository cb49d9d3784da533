"""
Unified CLI for the Henon-Heiles toolkit.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from .algebra.grammar import read_expr
from .algebra.lift import lift_to_abstract
from .config import RunConfig, parse_number, resolve_config, run_directory, write_config_used
from .dynamics.compile import field_for_system
from .dynamics.integrate import StepPolicy, integrate
from .dynamics.sections import SectionPlane, energy_shell_seeds, random_seeds, section_scan, section_statistic
from .dynamics.sweep import SweepTask, parse_grid, result_columns, sweep
from .errors import ConfigError, HHTKError
from .models.catalog import INTEGRABLE_CASES, catalog_listing, resolve_model
from .models.realize import build_nd_model
from .reports import realization_for, render_lift, verify_model, write_report
from .utils import (
    format_output,
    gnuplot_script,
    log_elapsed,
    print_status,
    setup_logger,
    write_csv,
    write_dict_csv,
    write_text,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MATH = 2
EXIT_RUNTIME = 3


def create_parser() -> argparse.ArgumentParser:
    """Create the main argument parser with subcommands."""
    parser = argparse.ArgumentParser(
        prog='hhtk',
        description='Henon-Heiles Integrable Systems Toolkit',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  hhtk catalog --family generic
  hhtk verify --model kdv-mr:M=4,R=3 --n 4 --centrifugal symbolic
  hhtk integrate --model kdv --params delta=1/2,alpha=1/2 --x0 0.05,0.05,0,0 --T 100
  hhtk poincare --model classic-hh --energy 1/6 --seeds 8 --T 500
  hhtk sweep --model kdv --n 3 --x0 1,0.5,0.2,0,0,0 --grid b1=0:1:1/2
  hhtk lift kdv_h.txt kdv_i.txt
        """
    )

    # Global arguments
    parser.add_argument('--config', help='YAML run configuration (e.g. a previous config_used.yaml)')
    parser.add_argument('--output-dir', help='Output root (default: $HHTK_OUTPUT_ROOT or ./runs)')
    parser.add_argument('--seed', type=int, default=None, help='Seed for random test points and seeds')
    parser.add_argument('--strict', action='store_true', default=None, help='Exit 3 when a run does not complete')
    parser.add_argument('--timing', action='store_true', default=None, help='Include wall time in reports')
    parser.add_argument('--output', choices=['table', 'json', 'csv'], default='table', help='Output format')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], default='INFO', help='Log level')

    subparsers = parser.add_subparsers(dest='command', help='Operation to run')

    cat_parser = subparsers.add_parser('catalog', help='List model families')
    cat_parser.add_argument('--family', help='Show one family (e.g. generic, kdv-mr)')
    cat_parser.add_argument('--json', action='store_true', help='Machine-readable schema')

    verify_parser = subparsers.add_parser('verify', help='Exact involution certificates')
    add_model_arguments(verify_parser)

    int_parser = subparsers.add_parser('integrate', help='Integrate one trajectory')
    add_model_arguments(int_parser)
    add_run_arguments(int_parser)

    sec_parser = subparsers.add_parser('poincare', help='Poincare section on an energy surface')
    add_model_arguments(sec_parser)
    add_run_arguments(sec_parser)
    sec_parser.add_argument('--plane', help="Section plane, e.g. 'q1=0,+' (default)")
    sec_parser.add_argument('--energy', help='Energy of the seeded orbits, e.g. 1/6')
    sec_parser.add_argument('--seeds', type=int, help='Number of random seed orbits (default: 4)')

    sweep_parser = subparsers.add_parser('sweep', help='Drift and section statistics over a parameter grid')
    add_model_arguments(sweep_parser)
    add_run_arguments(sweep_parser)
    sweep_parser.add_argument('--grid', action='append', help='Grid axis name=start:stop:step or name=v1,v2 (repeatable)')
    sweep_parser.add_argument('--workers', type=int, help='Worker processes (default: 1)')
    sweep_parser.add_argument('--plane', help="Section plane for the section statistic")
    sweep_parser.add_argument('--energy', help='Add a section statistic at this energy')
    sweep_parser.add_argument('--seeds', type=int, help='Seed orbits per row for the section statistic')

    lift_parser = subparsers.add_parser('lift', help='Lift a 2D Hamiltonian/integral pair to the algebra')
    lift_parser.add_argument('h_file', help='File holding H(q1, p1, q2, p2)')
    lift_parser.add_argument('i_file', help='File holding the integral')

    return parser


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--model', help='Model id, e.g. kdv, holt, kdv-mr:M=4,R=3, generic:beta=2')
    parser.add_argument('--params', action='append', help='Parameter bindings name=value[,name=value] (repeatable)')
    parser.add_argument('--n', type=int, help='Degrees of freedom (default: 2)')
    parser.add_argument('--centrifugal', help='zero (default), symbolic, or b1,b2,...')


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--x0', help='Initial state q1..qN,p1..pN')
    parser.add_argument('--T', type=float, help='Duration (default: 100)')
    parser.add_argument('--dt', type=float, help='Step or sampling interval (default: 1e-3)')
    parser.add_argument('--method', choices=['verlet', 'rk45'], help='Integrator (default: verlet)')
    parser.add_argument('--rtol', type=float, help='rk45 relative tolerance')
    parser.add_argument('--atol', type=float, help='rk45 absolute tolerance')
    parser.add_argument('--sample-every', type=int, help='Store every k-th step')


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags that were given on the command line, keyed by config field."""
    names = (
        'model', 'params', 'n', 'centrifugal', 'x0', 'T', 'dt', 'method', 'rtol', 'atol',
        'sample_every', 'plane', 'energy', 'seeds', 'grid', 'workers', 'h_file', 'i_file',
        'seed', 'strict', 'timing',
    )
    return {name: getattr(args, name, None) for name in names}


def require_model(config: RunConfig) -> str:
    if not config.model:
        raise ConfigError('--model is required')
    return config.model


def step_policy(config: RunConfig) -> StepPolicy:
    return StepPolicy(
        method=config.method,
        dt=config.dt,
        rtol=config.rtol,
        atol=config.atol,
        sample_every=config.sample_every,
    )


def dynamics_system(config: RunConfig):
    """Realized system with decimals accepted and unset parameters left for the field."""
    model = resolve_model(require_model(config), config.params, exact=False)
    spec = realization_for(config.n, config.centrifugal, exact=False)
    return build_nd_model(model, spec, allow_quasi=True)


def handle_catalog(args, config: Optional[RunConfig]) -> int:
    """Handle the catalog listing."""
    rows = catalog_listing(args.family)
    if args.family and not rows:
        print_status(f"Unknown family: {args.family}", 'ERROR')
        return EXIT_CONFIG
    output = 'json' if args.json else args.output
    print(format_output(rows, output))
    if not args.family or args.family.lower() in ('generic', 'generichh'):
        cases = [
            {'case': name, 'beta': beta, 'Omega': omega}
            for name, beta, omega in INTEGRABLE_CASES
        ]
        if output == 'json':
            print(format_output({'integrable_cases': cases}, 'json'))
        else:
            print()
            print('Integrable GenericHH cases:')
            print(format_output(cases, output))
    return EXIT_OK


def handle_verify(args, config: RunConfig) -> int:
    """Handle exact involution certificates."""
    model = resolve_model(require_model(config), config.params, exact=True)
    spec = realization_for(config.n, config.centrifugal, exact=True)
    report = verify_model(model, spec, config.seed)

    directory = run_directory(config, args.output_dir)
    write_config_used(config, directory)
    write_report(directory, report.render(config.timing))

    print(format_output(report.rows(), args.output))
    for line in report.summary_lines():
        print(line)
    if report.passed:
        print_status(f"All certificates zero for {model.model_id} (N={spec.n})", 'SUCCESS')
        return EXIT_OK
    print_status(f"{len(report.failures)} certificates left a residual; see {directory}/report.txt", 'ERROR')
    return EXIT_MATH


@log_elapsed('integrate command')
def handle_integrate(args, config: RunConfig) -> int:
    """Handle one trajectory run."""
    system = dynamics_system(config)
    fld = field_for_system(system)
    if not config.x0:
        raise ConfigError(f"--x0 with {2 * fld.n} values is required")
    traj = integrate(fld, config.x0, config.T, step_policy(config), system.model_id)

    directory = run_directory(config, args.output_dir)
    write_config_used(config, directory)
    columns = traj.columns()
    write_csv(directory / 'trajectory.csv', columns, traj.rows())
    drift_columns = [c for c in columns if c.startswith('drift')]
    write_text(
        directory / 'drift.gp',
        gnuplot_script('trajectory.csv', columns, 't', drift_columns,
                       f"{system.model_id} relative drift", logscale=True),
    )

    summary = {'model': system.model_id, 'N': fld.n, 'status': traj.status.value, 'samples': len(traj.times)}
    summary.update({f"max drift{k}": v for k, v in traj.drift_summary().items()})
    print(format_output(summary, args.output))
    return finish_run(traj.completed, f"{traj.status.value}: {traj.message}", config)


@log_elapsed('poincare command')
def handle_poincare(args, config: RunConfig) -> int:
    """Handle Poincare sections."""
    system = dynamics_system(config)
    fld = field_for_system(system)
    plane = SectionPlane.parse(config.plane)
    if config.x0:
        states = [list(config.x0)]
    else:
        if config.energy is None:
            raise ConfigError('poincare needs --energy or --x0')
        energy = parse_number(config.energy)
        states = random_seeds(fld, energy, plane, config.seeds, config.seed)
        if not states:
            states = energy_shell_seeds(fld, energy, plane, [{}])
    if not states:
        raise ConfigError(f"no admissible seed orbits on H={config.energy}")
    section = section_scan(fld, states, config.T, plane, step_policy(config), system.model_id)
    statistic = section_statistic(section)

    directory = run_directory(config, args.output_dir)
    write_config_used(config, directory)
    columns = section.columns()
    write_csv(directory / 'section.csv', columns, section.rows())
    drop = {plane.index(fld.n), plane.conjugate_index(fld.n)}
    free = [columns[2 + k] for k in range(2 * fld.n) if k not in drop]
    if len(free) >= 2:
        write_text(
            directory / 'section.gp',
            gnuplot_script('section.csv', columns, free[0], [free[1]],
                           f"{system.model_id} section {plane.describe()}", points=True),
        )

    summary = {
        'model': system.model_id,
        'plane': plane.describe(),
        'orbits': len(states),
        'points': len(section),
        'status': section.status,
        'section statistic': statistic.aggregate,
    }
    print(format_output(summary, args.output))
    return finish_run(section.status == 'ok', 'no crossings recorded', config)


@log_elapsed('sweep command')
def handle_sweep(args, config: RunConfig) -> int:
    """Handle parameter sweeps."""
    if not config.grid:
        raise ConfigError('sweep needs at least one --grid axis')
    grid = parse_grid(config.grid)
    base = SweepTask(
        model_id=require_model(config),
        n=config.n,
        x0=tuple(config.x0),
        duration=config.T,
        policy=step_policy(config),
        parameters=tuple(sorted(config.params.items())),
        centrifugal=tuple(config.centrifugal) if isinstance(config.centrifugal, list) else (),
        energy=parse_number(config.energy) if config.energy is not None else None,
        plane=SectionPlane.parse(config.plane),
        seeds=config.seeds,
        seed=config.seed,
    )
    if len(base.x0) != 2 * base.n:
        raise ConfigError(f"--x0 needs {2 * base.n} values")
    rows = sweep(base, grid, config.workers)

    directory = run_directory(config, args.output_dir)
    write_config_used(config, directory)
    write_dict_csv(directory / 'sweep.csv', rows)
    columns = list(rows[0].keys())
    plotted = [c for c in result_columns(base.n, base.energy is not None) if c in columns]
    write_text(
        directory / 'sweep.gp',
        gnuplot_script('sweep.csv', columns, None, plotted, f"{base.model_id} sweep", logscale=True),
    )

    print(format_output(rows, args.output))
    failed = [r for r in rows if r.get('status') != 'completed']
    return finish_run(not failed, f"{len(failed)} of {len(rows)} rows did not complete", config)


def handle_lift(args, config: RunConfig) -> int:
    """Handle lifting a 2D pair to the abstract algebra."""
    if not config.h_file or not config.i_file:
        raise ConfigError('lift needs an H file and an integral file')
    h2 = read_expr(config.h_file)
    i2 = read_expr(config.i_file)
    result = lift_to_abstract(h2, i2)

    directory = run_directory(config, args.output_dir)
    write_config_used(config, directory)
    text = render_lift(result, config.h_file, config.i_file)
    write_report(directory, text)
    print(text, end='')
    print_status(f"Lifted pair commutes ({result.certificate.summary_line()})", 'SUCCESS')
    return EXIT_OK


def finish_run(completed: bool, message: str, config: RunConfig) -> int:
    if completed:
        print_status('Run completed', 'SUCCESS')
        return EXIT_OK
    if config.strict:
        print_status(f"Run did not complete ({message})", 'ERROR')
        return EXIT_RUNTIME
    print_status(f"Run did not complete ({message}); status recorded", 'WARNING')
    return EXIT_OK


def main(argv: Optional[List[str]] = None):
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    # Setup logging
    log = setup_logger('hhtk', args.log_level)

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_CONFIG)

    try:
        config = None
        if args.command != 'catalog':
            config = resolve_config(args.command, args.config, overrides_from(args))

        handlers = {
            'catalog': handle_catalog,
            'verify': handle_verify,
            'integrate': handle_integrate,
            'poincare': handle_poincare,
            'sweep': handle_sweep,
            'lift': handle_lift,
        }

        handler = handlers.get(args.command)
        if not handler:
            print_status(f"Unknown command: {args.command}", 'ERROR')
            sys.exit(EXIT_CONFIG)

        sys.exit(handler(args, config))

    except KeyboardInterrupt:
        print_status("Operation cancelled by user", 'WARNING')
        sys.exit(EXIT_CONFIG)
    except HHTKError as e:
        log.error(f"{type(e).__name__}: {e}")
        print_status(str(e), 'ERROR')
        sys.exit(e.exit_code)
    except OSError as e:
        log.error(f"I/O error: {e}")
        print_status(f"I/O error: {e}", 'ERROR')
        sys.exit(EXIT_CONFIG)


if __name__ == '__main__':
    main()
