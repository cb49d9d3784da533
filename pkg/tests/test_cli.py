"""Tests for CLI module."""

import csv
import io
import json
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path
from unittest.mock import patch

import yaml

from hhtk import cli
from hhtk.algebra.poisson import Certificate
from hhtk.algebra.symexpr import Expr, sym, to_text
from hhtk.models.catalog import make_kdv
from hhtk.reports import VerifyReport

KDV_RUN = ['--model', 'kdv', '--params', 'delta=1/2,alpha=1/2', '--x0', '0.05,0.05,0,0', '--T', '1', '--dt', '0.01']


class CLITestCase(unittest.TestCase):
    """Runs ``main`` against a temporary output root."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        out = io.StringIO()
        with redirect_stdout(out), self.assertRaises(SystemExit) as ctx:
            cli.main(['--output-dir', str(self.root), '--log-level', 'ERROR', *argv])
        self.output = out.getvalue()
        return ctx.exception.code


class TestParser(unittest.TestCase):
    """Argument parsing."""

    def test_subcommands(self):
        """Every operation has a subcommand."""
        parser = cli.create_parser()
        for command in ('catalog', 'verify', 'integrate', 'poincare', 'sweep'):
            with self.subTest(command=command):
                self.assertEqual(parser.parse_args([command]).command, command)
        args = parser.parse_args(['lift', 'h.txt', 'i.txt'])
        self.assertEqual((args.h_file, args.i_file), ('h.txt', 'i.txt'))

    def test_unset_flags_are_none(self):
        """Only given flags override the config file."""
        args = cli.create_parser().parse_args(['integrate', '--T', '5'])
        overrides = cli.overrides_from(args)
        self.assertEqual(overrides['T'], 5.0)
        self.assertIsNone(overrides['dt'])
        self.assertIsNone(overrides['strict'])

    def test_no_command(self):
        """Without a subcommand the help is printed and the exit code is 1."""
        with redirect_stdout(io.StringIO()), self.assertRaises(SystemExit) as ctx:
            cli.main([])
        self.assertEqual(ctx.exception.code, 1)


class TestCatalogCommand(CLITestCase):
    """hhtk catalog."""

    def test_listing(self):
        """All families and the integrable cases are printed."""
        self.assertEqual(self.run_cli('catalog'), 0)
        self.assertIn('kdv-mr', self.output)
        self.assertIn('16/3', self.output)

    def test_json(self):
        """--json prints parseable documents."""
        self.assertEqual(self.run_cli('catalog', '--family', 'sk', '--json'), 0)
        rows = json.loads(self.output)
        self.assertEqual(rows[0]['id'], 'sk')

    def test_unknown_family(self):
        """Unknown families exit 1."""
        self.assertEqual(self.run_cli('catalog', '--family', 'toda'), 1)


class TestVerifyCommand(CLITestCase):
    """hhtk verify."""

    def test_pass(self):
        """Certificates pass, the report and config are written."""
        self.assertEqual(self.run_cli('verify', '--model', 'kdv'), 0)
        directory = self.root / 'verify-kdv'
        report = (directory / 'report.txt').read_text()
        self.assertIn('overall: PASS', report)
        self.assertNotIn('wall', report)
        config = yaml.safe_load((directory / 'config_used.yaml').read_text())
        self.assertEqual(config['model'], 'kdv')
        self.assertIn('PASS kdv 2 canonical(N=2) H,I', self.output)

    def test_timing(self):
        """--timing adds wall time to the report."""
        self.assertEqual(self.run_cli('--timing', 'verify', '--model', 'kdv'), 0)
        self.assertIn('wall', (self.root / 'verify-kdv' / 'report.txt').read_text())

    def test_fail_exit_code(self):
        """A nonzero residual exits 2."""
        failing = VerifyReport('kdv', 2, 'zero', 0.0, [
            Certificate('H,I', 'abstract', sym('Am'), model='kdv'),
        ])
        with patch('hhtk.cli.verify_model', return_value=failing):
            self.assertEqual(self.run_cli('verify', '--model', 'kdv'), 2)
        self.assertIn('FAIL kdv 2 abstract H,I', self.output)
        self.assertIn('residual: Am', (self.root / 'verify-kdv' / 'report.txt').read_text())

    def test_configuration_errors(self):
        """Missing models, missing integrals and inexact values exit 1."""
        self.assertEqual(self.run_cli('verify'), 1)
        self.assertEqual(self.run_cli('verify', '--model', 'generic:beta=1'), 1)
        self.assertEqual(self.run_cli('verify', '--model', 'kdv', '--params', 'delta=0.5'), 1)
        self.assertEqual(self.run_cli('verify', '--model', 'kdv', '--n', '3', '--centrifugal', '1'), 1)


class TestIntegrateCommand(CLITestCase):
    """hhtk integrate."""

    def test_outputs(self):
        """Trajectory CSV and drift plot script are written."""
        self.assertEqual(self.run_cli('integrate', *KDV_RUN), 0)
        directory = self.root / 'integrate-kdv'
        with open(directory / 'trajectory.csv', newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['t', 'q1', 'q2', 'p1', 'p2', 'driftH', 'driftI', 'status'])
        self.assertEqual(len(rows), 102)
        self.assertEqual(rows[-1][-1], 'completed')
        self.assertIn('trajectory.csv', (directory / 'drift.gp').read_text())

    def test_config_reproduces_run(self):
        """Passing config_used.yaml back gives an identical trajectory."""
        self.assertEqual(self.run_cli('integrate', *KDV_RUN), 0)
        directory = self.root / 'integrate-kdv'
        first = (directory / 'trajectory.csv').read_text()
        config = str(directory / 'config_used.yaml')
        self.assertEqual(self.run_cli('--config', config, 'integrate'), 0)
        self.assertEqual((directory / 'trajectory.csv').read_text(), first)

    def test_strict(self):
        """An escaping orbit is recorded; --strict turns it into exit 3."""
        escape = ['--model', 'classic-hh', '--x0', '0,2,0,1', '--T', '20']
        self.assertEqual(self.run_cli('integrate', *escape), 0)
        self.assertIn('blowup', self.output)
        self.assertEqual(self.run_cli('--strict', 'integrate', *escape), 3)

    def test_missing_state(self):
        """--x0 is required."""
        self.assertEqual(self.run_cli('integrate', '--model', 'kdv'), 1)


class TestPoincareCommand(CLITestCase):
    """hhtk poincare."""

    def test_seeded_section(self):
        """Random seeds on the energy shell produce section points."""
        code = self.run_cli(
            'poincare', '--model', 'kdv', '--params', 'delta=1/2',
            '--energy', '1/100', '--seeds', '2', '--T', '30', '--dt', '0.01',
        )
        self.assertEqual(code, 0)
        directory = self.root / 'poincare-kdv'
        with open(directory / 'section.csv', newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['orbit', 't', 'q1', 'q2', 'p1', 'p2', 'residual'])
        self.assertGreater(len(rows), 2)
        self.assertTrue((directory / 'section.gp').exists())

    def test_no_crossings(self):
        """A plane the orbit never reaches exits 3 under --strict."""
        args = ['poincare', '--model', 'kdv', '--params', 'delta=1/2', '--x0', '0.1,0.1,0,0',
                '--plane', 'q2=5,+', '--T', '5', '--dt', '0.01']
        self.assertEqual(self.run_cli(*args), 0)
        self.assertEqual(self.run_cli('--strict', *args), 3)

    def test_needs_energy_or_state(self):
        """Without --energy or --x0 there is nothing to integrate."""
        self.assertEqual(self.run_cli('poincare', '--model', 'kdv'), 1)


class TestSweepCommand(CLITestCase):
    """hhtk sweep."""

    def test_rows(self):
        """One CSV row per grid point."""
        self.assertEqual(self.run_cli('sweep', *KDV_RUN, '--grid', 'Omega=0,1/4'), 0)
        directory = self.root / 'sweep-kdv'
        with open(directory / 'sweep.csv', newline='') as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([r['Omega'] for r in rows], ['0', '1/4'])
        self.assertTrue(all(r['status'] == 'completed' for r in rows))
        self.assertIn('driftH', (directory / 'sweep.gp').read_text())

    def test_needs_grid(self):
        """A sweep without axes is a configuration error."""
        self.assertEqual(self.run_cli('sweep', *KDV_RUN), 1)


class TestLiftCommand(CLITestCase):
    """hhtk lift."""

    def write(self, name, expr):
        path = self.root / name
        path.write_text(f"# {name}\n{to_text(expr)}\n")
        return str(path)

    def test_lift(self):
        """A commuting KdV pair lifts and the report is written."""
        model = make_kdv(1, 0, 1, 0)
        h = self.write('h.txt', model.realized_h)
        i = self.write('i.txt', model.realized_i)
        self.assertEqual(self.run_cli('lift', h, i), 0)
        report = (self.root / 'lift' / 'report.txt').read_text()
        self.assertIn('free dimension: 0', report)
        self.assertIn('PASS lift', report)

    def test_not_liftable(self):
        """Odd powers of q1 exit 2."""
        h = self.write('h.txt', sym('p1', 2) + sym('q1'))
        i = self.write('i.txt', Expr.const(1))
        self.assertEqual(self.run_cli('lift', h, i), 2)

    def test_missing_file(self):
        """Unreadable input exits 1."""
        self.assertEqual(self.run_cli('lift', str(self.root / 'none.txt'), str(self.root / 'none.txt')), 1)


if __name__ == '__main__':
    unittest.main()
