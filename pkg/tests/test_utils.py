"""Tests for output helpers."""

import csv
import io
import json
import logging
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path

from hhtk.utils import (
    format_number,
    format_output,
    gnuplot_script,
    log_elapsed,
    print_status,
    setup_logger,
    slugify,
    write_csv,
    write_dict_csv,
    write_text,
)


class TestFormatting(unittest.TestCase):
    """Tables, JSON and CSV text."""

    def setUp(self):
        self.rows = [
            {'pair': 'H,I', 'status': 'zero', 'drift': 1.5e-9},
            {'pair': 'H,C2', 'status': 'residual', 'drift': 0.25},
        ]

    def test_table(self):
        """Columns are aligned under a header and separator."""
        lines = format_output(self.rows, 'table').splitlines()
        self.assertTrue(lines[0].startswith('pair'))
        self.assertTrue(set(lines[1]) == {'-'})
        self.assertIn('1.500e-09', lines[2])

    def test_mapping_table(self):
        """A single mapping prints as key/value lines."""
        text = format_output({'model': 'kdv', 'N': 2}, 'table')
        self.assertEqual(text.splitlines()[0].split(), ['model', 'kdv'])

    def test_json(self):
        """JSON output parses back."""
        self.assertEqual(json.loads(format_output(self.rows, 'json')), self.rows)

    def test_csv(self):
        """CSV output keeps full float precision."""
        reader = csv.DictReader(io.StringIO(format_output(self.rows, 'csv')))
        first = next(reader)
        self.assertEqual(float(first['drift']), 1.5e-9)

    def test_empty(self):
        """Empty data has a placeholder table and empty CSV."""
        self.assertEqual(format_output([], 'table'), 'No data to display')
        self.assertEqual(format_output([], 'csv'), '')

    def test_format_number(self):
        """Floats round-trip through 17 significant digits."""
        value = 0.1 + 0.2
        self.assertEqual(float(format_number(value)), value)
        self.assertEqual(format_number('completed'), 'completed')

    def test_slugify(self):
        """Identifiers become directory names."""
        self.assertEqual(slugify('kdv-mr:M=4,R=3'), 'kdv-mr_M4_R3')
        self.assertEqual(slugify('generic:beta=1/3'), 'generic_beta1_3')
        self.assertEqual(slugify(':::'), 'run')


class TestStatusAndLogging(unittest.TestCase):
    """Console helpers."""

    def test_print_status(self):
        """The status tag precedes the message."""
        out = io.StringIO()
        with redirect_stdout(out):
            print_status('All certificates zero', 'SUCCESS')
        self.assertIn('[SUCCESS]', out.getvalue())
        self.assertIn('All certificates zero', out.getvalue())

    def test_setup_logger(self):
        """One handler with the requested level."""
        log = setup_logger('hhtk.test', 'debug')
        setup_logger('hhtk.test', 'WARNING')
        self.assertEqual(len(log.handlers), 1)
        self.assertEqual(log.level, logging.WARNING)

    def test_log_elapsed(self):
        """Start and finish lines are logged and the result passed through."""

        @log_elapsed('square')
        def square(x):
            return x * x

        with self.assertLogs(__name__, level='INFO') as logs:
            self.assertEqual(square(3), 9)
        self.assertIn('square started', logs.output[0])
        self.assertIn('square finished', logs.output[1])


class TestWriters(unittest.TestCase):
    """Files written next to run outputs."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_write_csv(self):
        """Header row, then values; parent directories are created."""
        path = write_csv(self.root / 'sub' / 't.csv', ['t', 'q1'], [[0.0, 1.0], [0.1, 0.5]])
        rows = list(csv.reader(path.read_text().splitlines()))
        self.assertEqual(rows[0], ['t', 'q1'])
        self.assertEqual(rows[2], ['0.10000000000000001', '0.5'])

    def test_write_dict_csv(self):
        """Columns come from the first row."""
        path = write_dict_csv(self.root / 's.csv', [{'alpha': '0', 'status': 'completed'}])
        self.assertEqual(path.read_text().splitlines(), ['alpha,status', '0,completed'])

    def test_write_text(self):
        """Text files end with a newline."""
        path = write_text(self.root / 'r.txt', 'overall: PASS')
        self.assertEqual(path.read_text(), 'overall: PASS\n')


class TestGnuplot(unittest.TestCase):
    """Plot scripts for CSV outputs."""

    def test_columns(self):
        """Columns are addressed by 1-based index."""
        script = gnuplot_script('trajectory.csv', ['t', 'q1', 'driftH'], 't', ['driftH'], 'drift', logscale=True)
        self.assertIn("using 1:3", script)
        self.assertIn('set logscale y', script)
        self.assertTrue(script.rstrip().endswith('pause mouse close'))

    def test_row_index(self):
        """Without an x column the row number is used."""
        script = gnuplot_script('sweep.csv', ['alpha', 'driftH'], None, ['driftH'], 'sweep')
        self.assertIn('using 0:2', script)

    def test_unknown_column(self):
        """Unknown columns are rejected."""
        with self.assertRaises(ValueError):
            gnuplot_script('section.csv', ['q2', 'p2'], 'q2', ['p3'], 'section')


if __name__ == '__main__':
    unittest.main()
