"""Tests for run configuration."""

import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import yaml

from hhtk.config import (
    CONFIG_FILENAME,
    OUTPUT_ROOT_ENV,
    RunConfig,
    load_config,
    parse_assignments,
    parse_centrifugal,
    parse_number,
    parse_vector,
    resolve_config,
    resolve_output_root,
    run_directory,
    write_config_used,
)
from hhtk.errors import ConfigError


class TestParsing(unittest.TestCase):
    """Value parsers shared by flags and files."""

    def test_numbers(self):
        """Decimals, rationals and integers."""
        self.assertEqual(parse_number('1/6'), 1 / 6)
        self.assertEqual(parse_number('-2'), -2.0)
        self.assertEqual(parse_number(0.5), 0.5)
        with self.assertRaises(ConfigError):
            parse_number('one')
        with self.assertRaises(ConfigError):
            parse_number('1/0')

    def test_vector(self):
        """Comma-separated vectors and YAML lists."""
        self.assertEqual(parse_vector('0.05, 0.05,0,0'), [0.05, 0.05, 0.0, 0.0])
        self.assertEqual(parse_vector([1, '1/2']), [1.0, 0.5])

    def test_assignments(self):
        """Repeated and comma-joined bindings merge; mappings are accepted."""
        self.assertEqual(
            parse_assignments(['alpha=1/2,beta=2', 'delta=1']),
            {'alpha': '1/2', 'beta': '2', 'delta': '1'},
        )
        self.assertEqual(parse_assignments({'alpha': 0.5, 'beta': 2}), {'alpha': '0.5', 'beta': '2'})
        self.assertEqual(parse_assignments(None), {})
        with self.assertRaises(ConfigError):
            parse_assignments('alpha')
        with self.assertRaises(ConfigError):
            parse_assignments({'alpha': True})

    def test_centrifugal(self):
        """Keywords or a list of constants."""
        self.assertEqual(parse_centrifugal(None), 'zero')
        self.assertEqual(parse_centrifugal('Symbolic'), 'symbolic')
        self.assertEqual(parse_centrifugal('1, 1/4'), ['1', '1/4'])
        self.assertEqual(parse_centrifugal([1, 0.25]), ['1', '0.25'])


class TestRunConfig(unittest.TestCase):
    """Validation, merging and naming."""

    def test_defaults(self):
        """Built-in defaults are valid."""
        config = RunConfig()
        self.assertEqual((config.n, config.T, config.dt, config.method), (2, 100.0, 1e-3, 'verlet'))
        self.assertEqual(config.plane, 'q1=0,+')

    def test_validation(self):
        """Bad values are configuration errors."""
        for kwargs in (
            {'operation': 'draw'},
            {'n': 1},
            {'n': 3, 'centrifugal': ['1']},
            {'dt': 0.0},
            {'workers': 0},
        ):
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    RunConfig(**kwargs)

    def test_from_mapping(self):
        """YAML values are normalised; unknown keys rejected."""
        config = RunConfig.from_mapping({'n': '3', 'x0': '1,0.5,0,0,0,0', 'T': '1/2', 'centrifugal': '1,2'})
        self.assertEqual(config.n, 3)
        self.assertEqual(config.T, 0.5)
        self.assertEqual(config.centrifugal, ['1', '2'])
        with self.assertRaises(ConfigError):
            RunConfig.from_mapping({'colour': 'red'})
        with self.assertRaises(ConfigError):
            RunConfig.from_mapping({'n': 'three'})

    def test_merged_ignores_unset_flags(self):
        """None means the flag was not given."""
        config = RunConfig(T=5.0).merged({'T': None, 'dt': 0.01, 'params': ['alpha=1']})
        self.assertEqual(config.T, 5.0)
        self.assertEqual(config.dt, 0.01)
        self.assertEqual(config.params, {'alpha': '1'})

    def test_run_name(self):
        """Run directories are named after operation and model."""
        self.assertEqual(RunConfig('integrate', 'kdv-mr:M=4,R=3').run_name(), 'integrate-kdv-mr_M4_R3')
        self.assertEqual(RunConfig('lift').run_name(), 'lift')


class TestFiles(unittest.TestCase):
    """Config files and output directories."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_load_errors(self):
        """Missing files, invalid YAML and non-mappings are rejected."""
        with self.assertRaises(ConfigError):
            load_config(self.root / 'missing.yaml')
        bad = self.root / 'bad.yaml'
        bad.write_text('a: [1, 2\n')
        with self.assertRaises(ConfigError):
            load_config(bad)
        listing = self.root / 'list.yaml'
        listing.write_text('- 1\n- 2\n')
        with self.assertRaises(ConfigError):
            load_config(listing)
        empty = self.root / 'empty.yaml'
        empty.write_text('')
        self.assertEqual(load_config(empty), {})

    def test_precedence(self):
        """Flags override the file, the file overrides defaults."""
        path = self.root / 'run.yaml'
        path.write_text(yaml.safe_dump({'model': 'kdv', 'T': 10, 'dt': 0.01, 'operation': 'verify'}))
        config = resolve_config('integrate', str(path), {'T': 20.0, 'dt': None})
        self.assertEqual(config.operation, 'integrate')
        self.assertEqual(config.model, 'kdv')
        self.assertEqual(config.T, 20.0)
        self.assertEqual(config.dt, 0.01)
        self.assertEqual(config.method, 'verlet')

    def test_round_trip(self):
        """config_used.yaml reproduces the configuration."""
        config = RunConfig(
            'poincare', 'kdv', params={'delta': '1/2'}, n=3, centrifugal=['1', '1/4'],
            x0=[1.0, 0.5, 0.0, 0.0, 0.0, 0.0], energy='1/6', seed=3,
        )
        path = write_config_used(config, self.root)
        self.assertEqual(path.name, CONFIG_FILENAME)
        again = resolve_config('poincare', str(path), {})
        self.assertEqual(again, config)

    def test_output_root(self):
        """--output-dir, then the environment, then ./runs."""
        self.assertEqual(resolve_output_root(str(self.root)), self.root)
        with patch.dict(os.environ, {OUTPUT_ROOT_ENV: str(self.root / 'env')}):
            self.assertEqual(resolve_output_root(), self.root / 'env')
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(resolve_output_root(), Path('runs'))

    def test_run_directory(self):
        """The run directory is created under the root."""
        path = run_directory(RunConfig('verify', 'sk'), str(self.root))
        self.assertTrue(path.is_dir())
        self.assertEqual(path, self.root / 'verify-sk')


if __name__ == '__main__':
    unittest.main()
