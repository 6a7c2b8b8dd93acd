# -*- coding: utf-8 -*-
"""
Unit tests for run configuration module
"""
import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import Mock

from Common.Codes import ExitCode
from Common.Config import (STRUCTURAL_FIELDS, config_echo, config_from_dict, config_to_dict,
                           incompatible_fields, parse_config)
from Common.Errors import ConfigValidationError


class TestConfigFromDict(unittest.TestCase):
    """Тесты разбора и проверки конфигурации"""

    def Problems(self, data, strict=True):
        with self.assertRaises(ConfigValidationError) as context:
            config_from_dict(data, strict)
        return context.exception.details['problems']

    def test_defaults(self):
        """Тест значений по умолчанию и производных частот"""
        config = config_from_dict({})
        self.assertEqual(config.sample_rate, 16000)
        self.assertEqual(config.mel_rate, 100.0)
        self.assertEqual(config.latent_rate, 25.0)
        self.assertEqual(config.samples_per_latent, 640)
        self.assertEqual(config.bottleneck.optimizer.base_lr, 1e-3)
        self.assertEqual(config.tokenizer.optimizer.base_lr, 5e-4)
        self.assertEqual(config.tokenizer.weights.mel, 45.0)

    def test_nested_override(self):
        """Тест частичного переопределения вложенных разделов"""
        config = config_from_dict({'tokenizer': {'weights': {'kl': 0.001}, 'steps': 10}})
        self.assertEqual(config.tokenizer.weights.kl, 0.001)
        self.assertEqual(config.tokenizer.weights.mel, 45.0)
        self.assertEqual(config.tokenizer.steps, 10)

    def test_integer_for_float(self):
        """Тест приведения целого к числу с плавающей точкой"""
        self.assertIsInstance(config_from_dict({'corpus': {'hours': 1}}).corpus.hours, float)

    def test_unknown_key(self):
        """Тест неизвестного ключа в строгом и нестрогом режимах"""
        problems = self.Problems({'tokenizer': {'depth': 3}})
        self.assertTrue(any('tokenizer.depth' in problem for problem in problems))
        log = Mock()
        config_from_dict({'extra': 1}, strict=False, log=log)
        log.Warn.assert_called_once()

    def test_constraint_path(self):
        """Тест: нарушение ограничения сообщается с путем поля"""
        problems = self.Problems({'tokenizer': {'weights': {'mel': -1.0}}})
        self.assertTrue(any(problem.startswith('tokenizer.weights.mel') for problem in problems))

    def test_all_problems_collected(self):
        """Тест сбора всех нарушений сразу"""
        problems = self.Problems({'hop': 'abc', 'tokenizer': {'kl_mode': 'bogus', 'batch': 0}})
        self.assertEqual(len(problems), 3)

    def test_cross_field_rules(self):
        """Тест согласованности полей"""
        self.Problems({'mel_bins': 20})
        self.Problems({'window_size': 500})
        self.Problems({'hop': 1024})
        self.Problems({'bottleneck': {'d_low': 64}})
        self.Problems({'tokenizer': {'d': 8}})
        self.Problems({'tokenizer': {'kl_sweep': [0.5]}})
        self.Problems({'corpus': {'proportions': {'speech': 0.5, 'music': 0.2}}})

    def test_channel_merge_dimension(self):
        """Тест: при слиянии каналов d должно делить d_high"""
        config = config_from_dict({'tokenizer': {'semantic_source': 'channel_merge', 'd': 8}})
        self.assertEqual(config.tokenizer.d, 8)
        self.Problems({'tokenizer': {'semantic_source': 'channel_merge', 'd': 6}})

    def test_exit_code(self):
        """Тест кода выхода ошибки конфигурации"""
        self.assertEqual(ConfigValidationError(['x']).exitCode, ExitCode.ConfigError)


class TestConfigFiles(unittest.TestCase):
    """Тесты чтения файла конфигурации и эха"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_parse_file(self):
        """Тест чтения JSON-файла"""
        path = os.path.join(self.temp_dir, 'run.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump({'seed': 5, 'eval': {'suites': ['recon']}}, f)
        config = parse_config(path)
        self.assertEqual(config.seed, 5)
        self.assertEqual(config.eval.suites, ['recon'])

    def test_no_file(self):
        """Тест запуска без файла конфигурации"""
        self.assertEqual(parse_config(None), config_from_dict({}))

    def test_missing_file(self):
        """Тест отсутствующего файла"""
        with self.assertRaises(ConfigValidationError):
            parse_config(os.path.join(self.temp_dir, 'absent.json'))

    def test_broken_json(self):
        """Тест некорректного JSON"""
        path = os.path.join(self.temp_dir, 'broken.json')
        with open(path, 'w', encoding='utf-8') as f:
            f.write('{"seed": ')
        with self.assertRaises(ConfigValidationError):
            parse_config(path)

    def test_echo_round_trip(self):
        """Тест: эхо конфигурации разбирается в ту же конфигурацию"""
        config = config_from_dict({'seed': 3, 'tokenizer': {'kl_sweep': [0.0, 0.01]}})
        echo = config_echo(config)
        self.assertEqual(echo, config_echo(config))
        self.assertEqual(config_from_dict(json.loads(echo)), config)

    def test_incompatible_fields(self):
        """Тест поиска различающихся структурных полей"""
        stored = config_to_dict(config_from_dict({}))
        current = config_to_dict(config_from_dict({'tokenizer': {'channels': 32, 'steps': 1}}))
        self.assertEqual(incompatible_fields(stored, current), ['tokenizer.channels'])
        self.assertIn('tokenizer.channels', STRUCTURAL_FIELDS)


if __name__ == '__main__':
    unittest.main()
