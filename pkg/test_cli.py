"""
Unit tests for the command line entry point, run configurations and output files
"""

import io
import json
import math
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import pandas as pd

from app import main
from utils.data_processing import build_run_config, format_json, validate_config

GOLDEN_MEAN = {'alphabet': ['0', '1'], 'constraints': {'type': 'nn', 'allowed': [[1, 1], [1, 0]]}}


class CommandLineTestCase(unittest.TestCase):
    """Shared helpers: a temporary workspace and captured streams"""

    def setUp(self):
        self.workspace = tempfile.TemporaryDirectory()
        self.addCleanup(self.workspace.cleanup)
        self.root = Path(self.workspace.name)

    def write_config(self, config, name='config.json'):
        path = self.root / name
        path.write_text(json.dumps(config), encoding='utf-8')
        return str(path)

    def run_command(self, command, config, out='out', *extra):
        path = self.write_config(config)
        out_dir = self.root / out
        stdout, stderr = io.StringIO(), io.StringIO()
        with patch('sys.stdout', stdout), patch('sys.stderr', stderr):
            code = main([command, '--config', path, '--out', str(out_dir), *extra])
        return code, out_dir, stdout.getvalue(), stderr.getvalue()

    def read_json(self, out_dir, command):
        return json.loads((out_dir / f'{command}.json').read_text(encoding='utf-8'))


class TestFolnerCommand(CommandLineTestCase):

    def test_defects_along_boxes(self):
        config = {'group': {'type': 'Zd', 'd': 1}, 'folner': {'type': 'boxes', 'n_min': 1, 'n_max': 6}}
        code, out_dir, stdout, _ = self.run_command('folner', config)
        self.assertEqual(code, 0)
        self.assertIn('folner.json', stdout)

        frame = pd.read_csv(out_dir / 'folner_defects.csv')
        self.assertEqual(list(frame.columns), ['n', 'size', 'defect_1'])
        for n, defect in zip(frame['n'], frame['defect_1']):
            self.assertAlmostEqual(defect, 2 / (2 * n + 1), places=15)

        report = self.read_json(out_dir, 'folner')
        self.assertTrue(report['nested'])
        self.assertTrue(report['decreasing'])
        self.assertEqual(report['schema'], 1)

    def test_trivial_generator(self):
        config = {'folner': {'type': 'boxes', 'n_min': 1, 'n_max': 4}, 'options': {'generators': [[0]]}}
        code, out_dir, _, _ = self.run_command('folner', config)
        self.assertEqual(code, 0)
        frame = pd.read_csv(out_dir / 'folner_defects.csv')
        self.assertTrue((frame['defect_0'] == 0.0).all())

    def test_missing_folner_block(self):
        code, out_dir, _, stderr = self.run_command('folner', {'group': {'type': 'Zd', 'd': 1}})
        self.assertEqual(code, 2)
        self.assertIn("Missing 'folner' block", stderr)
        self.assertFalse(out_dir.exists())


class TestAnalyzeCommand(CommandLineTestCase):

    def test_identity_additive_map(self):
        config = {
            'folner': {'type': 'boxes', 'n_min': 2, 'n_max': 20},
            'rep': {'type': 'identity', 'dim': 2},
            'setmap': {'rule': 'additive', 'v': [1.0, 2.0]},
        }
        code, out_dir, _, _ = self.run_command('analyze', config)
        self.assertEqual(code, 0)
        report = self.read_json(out_dir, 'analyze')
        self.assertTrue(report['equivariant'])
        self.assertTrue(report['aa'])
        self.assertEqual(report['failures'], [])
        self.assertTrue((out_dir / 'analyze_residual.csv').exists())

    def test_constant_map_under_rotation_is_not_equivariant(self):
        config = {
            'folner': {'type': 'boxes', 'n_min': 2, 'n_max': 20},
            'rep': {'type': 'rotation', 'angle': 2 * math.pi / 5},
            'setmap': {'rule': 'custom', 'kind': 'constant', 'v': [1.0, 0.0]},
        }
        code, out_dir, _, _ = self.run_command('analyze', config)
        self.assertEqual(code, 0)
        report = self.read_json(out_dir, 'analyze')
        self.assertFalse(report['equivariant'])
        self.assertIsNone(report['aa'])
        self.assertIn('skipped', report['additivity'])

    def test_rep_and_subshift_together(self):
        config = {
            'folner': {'type': 'boxes'},
            'rep': {'type': 'identity', 'dim': 1},
            'subshift': {'alphabet': ['0', '1']},
            'setmap': {'rule': 'additive', 'v': [1.0]},
        }
        code, _, _, stderr = self.run_command('analyze', config)
        self.assertEqual(code, 2)
        self.assertIn("Exactly one of 'rep' and 'subshift'", stderr)


class TestRealizeCommand(CommandLineTestCase):

    def test_identity_realization(self):
        config = {
            'folner': {'type': 'boxes', 'n_min': 2, 'n_max': 20},
            'rep': {'type': 'identity', 'dim': 2},
            'setmap': {'rule': 'additive', 'v': [1.0, -3.0]},
        }
        code, out_dir, _, _ = self.run_command('realize', config)
        self.assertEqual(code, 0)
        report = self.read_json(out_dir, 'realize')
        for value, expected in zip(report['realization']['v'], [1.0, -3.0]):
            self.assertAlmostEqual(value, expected, places=6)
        self.assertTrue((out_dir / 'realize_residual.csv').exists())

    def test_oscillating_map_fails_the_precondition(self):
        config = {
            'folner': {'type': 'geometric', 'exponents': list(range(2, 15))},
            'rep': {'type': 'identity', 'dim': 1},
            'setmap': {'rule': 'custom', 'kind': 'sin_log', 'v': [1.0]},
        }
        code, out_dir, _, stderr = self.run_command('realize', config)
        self.assertEqual(code, 3)
        self.assertIn('gap =', stderr)
        self.assertFalse(out_dir.exists())


class TestPressureCommand(CommandLineTestCase):

    def test_golden_mean_pressure(self):
        config = {
            'folner': {'type': 'intervals', 'n_min': 2, 'n_max': 14},
            'subshift': GOLDEN_MEAN,
            'potential': {'window': [0], 'table': {'0': 0.0, '1': 0.0}},
        }
        code, out_dir, _, _ = self.run_command('pressure', config)
        self.assertEqual(code, 0)
        report = self.read_json(out_dir, 'pressure')
        golden = (1 + math.sqrt(5)) / 2
        self.assertAlmostEqual(report['pressure']['spectral'], math.log(golden), places=10)
        self.assertAlmostEqual(report['pressure']['limit'], math.log(golden), places=10)
        self.assertTrue(report['pressure']['methods_agree'])

        frame = pd.read_csv(out_dir / 'pressure_pressure.csv')
        self.assertIn('transfer_matrix', frame.columns)
        self.assertEqual(len(frame), 13)

    def test_pattern_cap_exit_code(self):
        config = {
            'group': {'type': 'Zd', 'd': 2},
            'folner': {'type': 'boxes', 'n_min': 1, 'n_max': 3},
            'subshift': {'alphabet': ['0', '1'], 'dimension': 2},
            'potential': {'window': [[0, 0]], 'table': {'0': 0.0, '1': 0.0}},
            'options': {'pattern_cap': 1000},
        }
        code, out_dir, _, stderr = self.run_command('pressure', config)
        self.assertEqual(code, 4)
        self.assertIn('estimated count', stderr)
        self.assertFalse(out_dir.exists())

    def test_outputs_are_deterministic(self):
        config = {
            'folner': {'type': 'intervals', 'n_min': 2, 'n_max': 10},
            'subshift': GOLDEN_MEAN,
            'potential': {'window': [0, 1], 'table': {'00': 0.25, '01': -0.5, '10': 1.0}},
        }
        first = self.run_command('pressure', config, 'first')[1]
        second = self.run_command('pressure', config, 'second')[1]
        for name in ('pressure.json', 'pressure_pressure.csv'):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())


class TestVarprinCommand(CommandLineTestCase):

    def test_bernoulli_certificate(self):
        config = {
            'folner': {'type': 'intervals', 'n_min': 2, 'n_max': 10},
            'subshift': {'alphabet': ['0', '1']},
            'potential': {'window': [0], 'table': {'0': 0.0, '1': 1.0}},
            'options': {'family': 'bernoulli', 'grid_step': 0.01},
        }
        code, out_dir, _, _ = self.run_command('varprin', config)
        self.assertEqual(code, 0)
        report = self.read_json(out_dir, 'varprin')
        self.assertTrue(report['certificate']['certified'])
        self.assertAlmostEqual(report['certificate']['pressure'], math.log(1 + math.e), places=9)
        self.assertIn('equilibrium_state', report)

    def test_unknown_family(self):
        config = {
            'folner': {'type': 'intervals', 'n_min': 2, 'n_max': 10},
            'subshift': {'alphabet': ['0', '1']},
            'potential': {'window': [0], 'table': {}},
            'options': {'family': 'gibbs'},
        }
        code, _, _, stderr = self.run_command('varprin', config)
        self.assertEqual(code, 2)
        self.assertIn("Unknown measure family 'gibbs'", stderr)


class TestRunConfiguration(CommandLineTestCase):
    """Validation, overrides, file references and environment settings"""

    def test_validation_messages(self):
        errors = validate_config({'group': {'type': 'Zd', 'd': 3}, 'folner': {'type': 'spiral'}}, 'folner')
        self.assertEqual(len(errors), 2)
        errors = validate_config({'folner': {'type': 'intervals', 'n_min': 5, 'n_max': 2}}, 'folner')
        self.assertTrue(any('empty' in e for e in errors))
        self.assertEqual(validate_config({}, 'plot'), ["Unknown command 'plot', expected one of "
                                                      "['folner', 'analyze', 'realize', 'pressure', 'varprin']"])

    def test_overrides_take_precedence(self):
        config = {'folner': {'type': 'boxes'}, 'options': {'seed': 5, 'tol': 0.1}}
        is_valid, _, run = build_run_config(config, 'folner', {'seed': 9, 'tol': None})
        self.assertTrue(is_valid)
        self.assertEqual(run.seed, 9)
        self.assertEqual(run.tol, 0.1)

    def test_block_file_reference(self):
        (self.root / 'golden.json').write_text(json.dumps(GOLDEN_MEAN), encoding='utf-8')
        config = {
            'folner': {'type': 'intervals', 'n_min': 2, 'n_max': 8},
            'subshift': 'golden.json',
            'potential': {'window': [0], 'table': {}},
        }
        is_valid, message, run = build_run_config(config, 'pressure', base_dir=self.root)
        self.assertTrue(is_valid, message)
        self.assertEqual(run.subshift.name, 'nearest_neighbor')

    def test_missing_block_file(self):
        config = {'folner': {'type': 'boxes'}, 'subshift': 'nowhere.json', 'potential': {'window': [0]}}
        is_valid, message, run = build_run_config(config, 'pressure', base_dir=self.root)
        self.assertFalse(is_valid)
        self.assertIsNone(run)
        self.assertIn('nowhere.json', message)

    def test_invalid_json(self):
        path = self.root / 'broken.json'
        path.write_text('{"folner": ', encoding='utf-8')
        stderr = io.StringIO()
        with patch('sys.stderr', stderr):
            code = main(['folner', '--config', str(path), '--out', str(self.root / 'out')])
        self.assertEqual(code, 2)
        self.assertIn('Invalid JSON', stderr.getvalue())

    def test_malformed_environment_setting(self):
        config = {'folner': {'type': 'boxes', 'n_min': 1, 'n_max': 3}}
        with patch.dict(os.environ, {'AMENABLE_PATTERN_CAP': 'lots'}):
            code, _, _, stderr = self.run_command('folner', config)
        self.assertEqual(code, 0)
        self.assertIn('AMENABLE_PATTERN_CAP', stderr)

    def test_json_is_sorted_and_versioned(self):
        text = format_json({'b': float('inf'), 'a': (1, 2)})
        self.assertEqual(json.loads(text), {'a': [1, 2], 'b': None, 'schema': 1})
        self.assertLess(text.index('"a"'), text.index('"b"'))


if __name__ == '__main__':
    # Create a test suite
    test_suite = unittest.TestSuite()

    # Add all test classes
    test_classes = [
        TestFolnerCommand,
        TestAnalyzeCommand,
        TestRealizeCommand,
        TestPressureCommand,
        TestVarprinCommand,
        TestRunConfiguration,
    ]

    for test_class in test_classes:
        tests = unittest.TestLoader().loadTestsFromTestCase(test_class)
        test_suite.addTests(tests)

    # Run the tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    # Print summary
    print(f"\n{'=' * 50}")
    print("TEST SUMMARY")
    print(f"{'=' * 50}")
    print(f"Tests run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")
