# -*- coding: utf-8 -*-
"""
Unit tests for semantic bottleneck module
"""
import os
import shutil
import tempfile
import unittest
from unittest.mock import Mock

import numpy as np

from Common.Bottleneck import (build_bottleneck, compress, gram, load_bottleneck, loss_recon,
                               loss_time_relation, restore, save_bottleneck, sembo_objective, train_sembo)
from Common.Config import BottleneckConfig, OptimizerConfig, config_from_dict, config_to_dict
from Common.Dsp import FeatureSequence
from Common.Errors import (CheckpointConfigError, CheckpointFormatError, CheckpointMissingError,
                           ConfigValidationError, DimensionMismatchError, EmptyCorpusError,
                           FrameCountMismatchError)
from Common.Grad import Precision, Tensor, grad_check
from Common.Routines import ArrayContainer
from Common.Synth import rank_limited_features

TINY_CONFIG = {'mel_bins': 16,
               'semantic_encoder': {'d_high': 16, 'hidden': 16},
               'bottleneck': {'d_low': 4, 'hidden': 8, 'steps': 2, 'batch': 2, 'crop_frames': 4, 'log_every': 1,
                              'optimizer': {'warmup_steps': 1}},
               'tokenizer': {'d': 4}}


def TrainingConfig(steps=3, dLow=4, hidden=8):
    return BottleneckConfig(d_low=dLow, hidden=hidden, steps=steps, batch=2, crop_frames=5, log_every=1,
                            optimizer=OptimizerConfig(warmup_steps=1))


class TestCompressRestore(unittest.TestCase):
    """Тесты отображений узкого горла"""

    def setUp(self):
        self.model = build_bottleneck(64, 16, 64, seed=0)
        self.rng = np.random.default_rng(0)

    def test_shapes(self):
        """Тест форм 64 -> 16 -> 64"""
        z = Tensor(self.rng.standard_normal((10, 64)))
        low = compress(self.model, z)
        self.assertEqual(low.shape, (10, 16))
        self.assertEqual(restore(self.model, low).shape, (10, 64))

    def test_empty_sequence(self):
        """Тест последовательности без кадров"""
        self.assertEqual(compress(self.model, Tensor(np.zeros((0, 64)))).shape, (0, 16))

    def test_duplicate_rows(self):
        """Тест: одинаковые кадры дают одинаковые выходы"""
        row = self.rng.standard_normal(64)
        low = compress(self.model, Tensor(np.stack([row, row, row]))).values
        self.assertTrue(np.array_equal(low[0], low[1]))
        self.assertTrue(np.array_equal(low[1], low[2]))

    def test_scale_invariance(self):
        """Тест: вход нормируется покадрово"""
        z = self.rng.standard_normal((4, 64))
        left = compress(self.model, Tensor(z)).values
        right = compress(self.model, Tensor(3.0 * z)).values
        self.assertTrue(np.allclose(left, right, atol=1e-5))

    def test_feature_sequence(self):
        """Тест сохранения частоты кадров"""
        low = compress(self.model, FeatureSequence(self.rng.standard_normal((5, 64)), 25.0))
        self.assertIsInstance(low, FeatureSequence)
        self.assertEqual(low.frame_rate, 25.0)
        self.assertEqual(low.dim, 16)

    def test_dimension_mismatch(self):
        """Тест входа неверной размерности"""
        with self.assertRaises(DimensionMismatchError):
            compress(self.model, Tensor(np.zeros((3, 32))))
        with self.assertRaises(DimensionMismatchError):
            restore(self.model, Tensor(np.zeros((3, 64))))

    def test_invalid_sizes(self):
        """Тест d_low >= d_high"""
        with self.assertRaises(ConfigValidationError):
            build_bottleneck(16, 16, 16, seed=0)


class TestLosses(unittest.TestCase):
    """Тесты потерь восстановления и временных отношений"""

    def setUp(self):
        self.rng = np.random.default_rng(1)
        self.z = self.rng.standard_normal((2, 6, 16))

    def test_recon_zero(self):
        """Тест совпадающих последовательностей"""
        self.assertAlmostEqual(loss_recon(Tensor(self.z), Tensor(self.z)).Item(), 0.0, places=6)

    def test_recon_scaled(self):
        """Тест: положительный множитель не меняет нормированные кадры"""
        self.assertAlmostEqual(loss_recon(Tensor(2.5 * self.z), Tensor(self.z)).Item(), 0.0, places=5)

    def test_recon_negated(self):
        """Тест противоположных кадров: 2 / sqrt(D)"""
        self.assertAlmostEqual(loss_recon(Tensor(-self.z), Tensor(self.z)).Item(), 2.0 / np.sqrt(16), places=5)

    def test_gram(self):
        """Тест матриц Грама для ортонормированных и повторяющихся кадров"""
        self.assertTrue(np.allclose(gram(Tensor(np.eye(4))).values, np.eye(4), atol=1e-6))
        row = self.rng.standard_normal(8)
        self.assertTrue(np.allclose(gram(Tensor(np.stack([row] * 3))).values, np.ones((3, 3)), atol=1e-5))

    def test_time_relation_rotation(self):
        """Тест: ортогональное преобразование кадров сохраняет матрицу Грама"""
        q, _ = np.linalg.qr(self.rng.standard_normal((16, 16)))
        value = loss_time_relation(Tensor(self.z @ q), Tensor(self.z)).Item()
        self.assertAlmostEqual(value, 0.0, places=5)

    def test_time_relation_known_value(self):
        """Тест: ортогональные кадры против повторяющихся дают sqrt(2) / 2"""
        high = Tensor(np.eye(2))
        low = Tensor(np.ones((2, 2)))
        self.assertAlmostEqual(loss_time_relation(low, high).Item(), np.sqrt(2.0) / 2.0, places=5)

    def test_time_relation_frame_mismatch(self):
        """Тест разного числа кадров"""
        with self.assertRaises(FrameCountMismatchError):
            loss_time_relation(Tensor(np.ones((3, 4))), Tensor(np.ones((5, 16))))

    def test_objective_without_recon(self):
        """Тест: при lambda = 0 цель равна потере временных отношений"""
        model = build_bottleneck(16, 4, 8, seed=2)
        z = Tensor(self.z)
        total = sembo_objective(model, z, lambda_recon=0.0).Item()
        relation = loss_time_relation(compress(model, z), z).Item()
        self.assertAlmostEqual(total, relation, places=6)
        self.assertEqual(sembo_objective(model, z, lambda_recon=0.0, use_time_relation=False).Item(), 0.0)


class TestObjectiveGradients(unittest.TestCase):
    """Тесты градиентов цели узкого горла"""

    def setUp(self):
        with Precision(np.float64):
            self.model = build_bottleneck(6, 2, 4, seed=3)
            self.z = Tensor(np.random.default_rng(4).standard_normal((2, 5, 6)))

    def Check(self, layer, name):
        original = getattr(layer, name)

        def f(value):
            setattr(layer, name, value)
            try:
                return sembo_objective(self.model, self.z, lambda_recon=10.0)
            finally:
                setattr(layer, name, original)
        return grad_check(f, original.values)

    def test_compressor_weight(self):
        """Тест градиента по весам компрессора"""
        self.assertLess(self.Check(self.model.compressor.first, 'weight'), 1e-4)

    def test_restorer_bias(self):
        """Тест градиента по смещению восстановителя"""
        self.assertLess(self.Check(self.model.restorer.second, 'bias'), 1e-4)


class TestTraining(unittest.TestCase):
    """Тесты обучения узкого горла"""

    def setUp(self):
        self.corpus = list(rank_limited_features(5, 4, 12, 16, 3))

    def test_zero_steps(self):
        """Тест: без шагов параметры равны начальным"""
        model, history, state = train_sembo(self.corpus, TrainingConfig(steps=0), 16, seed=9)
        reference = build_bottleneck(16, 4, 8, seed=9)
        self.assertEqual(history, [])
        self.assertEqual(state.step_count, 0)
        for (name, left), (_, right) in zip(model.NamedParameters(), reference.NamedParameters()):
            self.assertTrue(np.array_equal(left.values, right.values), name)

    def test_determinism(self):
        """Тест повторяемости при одинаковом зерне"""
        first, historyA, _ = train_sembo(self.corpus, TrainingConfig(), 16, seed=1)
        second, historyB, _ = train_sembo(self.corpus, TrainingConfig(), 16, seed=1)
        self.assertEqual(historyA, historyB)
        for name, values in first.NamedArrays().items():
            self.assertTrue(np.array_equal(values, second.NamedArrays()[name]), name)

    def test_history_and_progress(self):
        """Тест записей истории и обратного вызова прогресса"""
        calls = []
        _, history, _ = train_sembo(self.corpus, TrainingConfig(steps=3), 16, seed=0,
                                    progress=lambda step, total: calls.append((step, total)))
        self.assertEqual([record['step'] for record in history], [1, 2, 3])
        self.assertEqual(set(history[0]), {'step', 'loss_recon', 'loss_tr', 'total', 'lr'})
        self.assertEqual(calls, [(1, 3), (2, 3), (3, 3)])
        self.assertTrue(all(np.isfinite(record['total']) for record in history))

    def test_short_clip_skipped(self):
        """Тест: клип короче кропа пропускается, потеря отношений не вырождается"""
        long = list(rank_limited_features(6, 8, 40, 16, 16))
        short = np.random.default_rng(1).standard_normal((1, 16))
        log = Mock()
        _, history, _ = train_sembo(long + [short], TrainingConfig(steps=3), 16, seed=0, log=log)
        _, reference, _ = train_sembo(long, TrainingConfig(steps=3), 16, seed=0)

        self.assertEqual(history, reference)
        self.assertTrue(all(record['loss_tr'] > 1e-2 for record in history))
        log.Warn.assert_called_once()

    def test_all_clips_too_short(self):
        """Тест: ни одной последовательности длиной в кроп"""
        corpus = [FeatureSequence(item[:3], 25.0) for item in self.corpus]
        with self.assertRaises(EmptyCorpusError):
            train_sembo(corpus, TrainingConfig(steps=1), 16, seed=0)

    def test_empty_corpus(self):
        """Тест пустого корпуса"""
        with self.assertRaises(EmptyCorpusError):
            train_sembo([], TrainingConfig(), 16, seed=0)
        with self.assertRaises(EmptyCorpusError):
            train_sembo([np.zeros((0, 16))], TrainingConfig(), 16, seed=0)

    @unittest.skipUnless(os.environ.get('SATOK_LONG_TESTS'), 'долгий тест')
    def test_loss_decreases(self):
        """Тест снижения потерь на данных низкого ранга за 2000 шагов"""
        corpus = list(rank_limited_features(6, 32, 64, 64, 8))
        config = BottleneckConfig(d_low=16, steps=2000, batch=16, crop_frames=32, log_every=500,
                                  optimizer=OptimizerConfig(warmup_steps=100))
        _, history, _ = train_sembo(corpus, config, 64, seed=0)
        early = np.mean([record['loss_recon'] for record in history[:20]])
        late = np.mean([record['loss_recon'] for record in history[-20:]])
        self.assertLess(late, 0.5 * early)


class TestCheckpoint(unittest.TestCase):
    """Тесты сохранения и загрузки узкого горла"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.path = os.path.join(self.temp_dir, 'sembo.ckpt')
        self.configDict = config_to_dict(config_from_dict(TINY_CONFIG))
        corpus = list(rank_limited_features(7, 3, 10, 16, 4))
        self.model, self.history, self.state = train_sembo(corpus, TrainingConfig(steps=2), 16, seed=0)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_round_trip(self):
        """Тест: загруженная модель совпадает с сохраненной и заморожена"""
        save_bottleneck(self.path, self.model, self.state, self.configDict, self.history)
        loaded, stored = load_bottleneck(self.path, self.configDict)
        for name, values in self.model.NamedArrays().items():
            self.assertTrue(np.array_equal(values, loaded.NamedArrays()[name]), name)
        self.assertFalse(any(param.requires_grad for param in loaded.Parameters()))
        self.assertEqual(stored['bottleneck']['d_low'], 4)
        contents = ArrayContainer.Load(self.path)
        self.assertEqual(contents.meta['optimizer_steps'], 2)
        self.assertIn('optimizer.m.compressor.first.weight', contents.arrays)

    def test_incompatible_config(self):
        """Тест несовпадения структурных полей"""
        save_bottleneck(self.path, self.model, self.state, self.configDict)
        other = dict(self.configDict, mel_bins=32)
        with self.assertRaises(CheckpointConfigError):
            load_bottleneck(self.path, other)

    def test_missing_file(self):
        """Тест отсутствующей контрольной точки"""
        with self.assertRaises(CheckpointMissingError):
            load_bottleneck(self.path)

    def test_wrong_kind(self):
        """Тест контейнера другого вида"""
        ArrayContainer.Save(self.path, 'latent', {'latent': np.zeros((2, 4))}, self.configDict)
        with self.assertRaises(CheckpointFormatError):
            load_bottleneck(self.path)


if __name__ == '__main__':
    unittest.main()
