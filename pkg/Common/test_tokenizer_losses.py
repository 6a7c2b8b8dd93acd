# -*- coding: utf-8 -*-
"""
Unit tests for tokenizer losses module
"""
import copy
import unittest

import numpy as np

from Common.Bottleneck import build_bottleneck
from Common.Config import LossWeights, config_from_dict
from Common.Dsp import AudioBuffer, mel_spectrogram
from Common.Errors import ShapeError
from Common.Grad import Precision, Tensor, grad_check
from Common.Tokenizer import build_tokenizer, forward
from Common.TokenizerLosses import (discriminator_loss, generator_loss, loss_adversarial,
                                    loss_feature_matching, loss_mel_multiscale, loss_semantic,
                                    total_objective)

TINY_CONFIG = {'mel_bins': 16,
               'semantic_encoder': {'d_high': 16, 'hidden': 16},
               'bottleneck': {'d_low': 4, 'hidden': 8},
               'tokenizer': {'d': 4, 'channels': 8, 'encoder_channels': 4, 'decoder_blocks': 1,
                             'disc_channels': 2, 'crop_seconds': 0.16, 'batch': 2}}


def TinyModel(seed=0):
    config = config_from_dict(copy.deepcopy(TINY_CONFIG))
    return build_tokenizer(config, build_bottleneck(16, 4, 8, seed=1), seed=seed)


def Noise(samples=2560, seed=0):
    return np.random.default_rng(seed).standard_normal(samples) * 0.1


class TestSemanticLoss(unittest.TestCase):
    """Тесты семантической потери"""

    def test_identical(self):
        """Тест совпадающих признаков"""
        z = Tensor(np.random.default_rng(0).standard_normal((2, 5, 8)))
        y = Tensor(np.random.default_rng(1).standard_normal((2, 5, 4)))
        high, low = loss_semantic(z, y, z, y)
        self.assertEqual(high.Item(), 0.0)
        self.assertEqual(low.Item(), 0.0)

    def test_unit_offset(self):
        """Тест сдвига всех элементов на 1"""
        z = np.random.default_rng(0).standard_normal((2, 5, 8))
        y = np.zeros((2, 5, 4))
        high, low = loss_semantic(Tensor(z + 1.0), Tensor(y - 1.0), Tensor(z), Tensor(y))
        self.assertAlmostEqual(high.Item(), 1.0, places=5)
        self.assertAlmostEqual(low.Item(), 1.0, places=5)

    def test_shape_mismatch(self):
        """Тест несовпадающих форм"""
        with self.assertRaises(ShapeError):
            loss_semantic(Tensor(np.zeros((1, 5, 8))), Tensor(np.zeros((1, 5, 4))),
                          Tensor(np.zeros((1, 4, 8))), Tensor(np.zeros((1, 5, 4))))


class TestMelLoss(unittest.TestCase):
    """Тесты многомасштабной мел-потери"""

    def test_identical(self):
        """Тест совпадающих сигналов"""
        x = Noise()
        self.assertEqual(loss_mel_multiscale(x, x.copy()).Item(), 0.0)

    def test_matches_direct_computation(self):
        """Тест против прямого расчета на одном масштабе"""
        x, y = Noise(seed=1), Noise(seed=2)
        expected = np.mean(np.abs(mel_spectrogram(AudioBuffer(x, 16000), 512, 128, 64).values
                                  - mel_spectrogram(AudioBuffer(y, 16000), 512, 128, 64).values))
        with Precision(np.float64):
            actual = loss_mel_multiscale(x, y, scales=[(512, 64)]).Item()
        self.assertAlmostEqual(actual, expected, places=8)

    def test_default_scales(self):
        """Тест: семь масштабов, результат положителен"""
        self.assertGreater(loss_mel_multiscale(Noise(seed=1), Noise(seed=2)).Item(), 0.0)


class TestAdversarialLosses(unittest.TestCase):
    """Тесты шарнирных потерь и сопоставления признаков"""

    def test_confident_discriminator(self):
        """Тест: уверенный дискриминатор не штрафуется"""
        real = [Tensor(np.full((1, 1, 2, 3), 2.0))] * 3
        fake = [Tensor(np.full((1, 1, 2, 3), -2.0))] * 3
        dLoss, gLoss = loss_adversarial(real, fake)
        self.assertEqual(dLoss.Item(), 0.0)
        self.assertEqual(gLoss.Item(), 2.0)

    def test_undecided_discriminator(self):
        """Тест нулевых логитов"""
        zeros = [Tensor(np.zeros((1, 1, 2, 3)))] * 2
        dLoss, gLoss = loss_adversarial(zeros, zeros)
        self.assertEqual(dLoss.Item(), 2.0)
        self.assertEqual(gLoss.Item(), 0.0)

    def test_resolution_count_mismatch(self):
        """Тест разного числа разрешений"""
        with self.assertRaises(ShapeError):
            loss_adversarial([Tensor(np.zeros(2))], [])

    def test_feature_matching(self):
        """Тест совпадающих и нулевых признаков"""
        rng = np.random.default_rng(3)
        real = [[Tensor(rng.standard_normal((1, 2, 4, 4))) for _ in range(4)] for _ in range(3)]
        self.assertEqual(loss_feature_matching(real, real).Item(), 0.0)
        zeros = [[Tensor(np.zeros(layer.shape)) for layer in layers] for layers in real]
        self.assertAlmostEqual(loss_feature_matching(real, zeros).Item(), 1.0, places=5)

    def test_feature_shape_mismatch(self):
        """Тест несовпадающих карт признаков"""
        with self.assertRaises(ShapeError):
            loss_feature_matching([[Tensor(np.zeros((1, 2)))]], [[Tensor(np.zeros((1, 3)))]])


class TestGeneratorObjective(unittest.TestCase):
    """Тесты целевой функции генератора"""

    def setUp(self):
        self.model = TinyModel()
        self.batch = np.stack([Noise(seed=4), Noise(seed=5)])
        self.result = forward(self.model, self.batch, deterministic=True)
        self.x = Tensor(self.batch)

    def test_zero_weights(self):
        """Тест: при нулевых весах цель равна нулю"""
        self.model.weights = LossWeights(mel=0.0, sem=0.0, kl=0.0, fm=0.0, adv=0.0)
        total, breakdown = generator_loss(self.model, self.x, self.result)
        self.assertEqual(total.Item(), 0.0)
        self.assertGreater(breakdown['mel'], 0.0)
        self.assertEqual(breakdown['weighted_mel'], 0.0)

    def test_weight_linearity(self):
        """Тест линейности по весам слагаемых"""
        self.model.weights = LossWeights(mel=1.0, sem=2.0, kl=0.5, fm=1.0, adv=1.0)
        single, _ = generator_loss(self.model, self.x, self.result)
        self.model.weights = LossWeights(mel=2.0, sem=4.0, kl=1.0, fm=2.0, adv=2.0)
        double, _ = generator_loss(self.model, self.x, self.result)
        self.assertAlmostEqual(double.Item(), 2.0 * single.Item(), places=3)

    def test_breakdown(self):
        """Тест состава расшифровки"""
        _, _, breakdown = total_objective(self.model, self.batch, deterministic=True)
        for name in ('mel', 'sem_high', 'sem_low', 'kl', 'fm', 'adv', 'generator', 'disc',
                     'weighted_mel', 'weighted_sem', 'weighted_kl', 'weighted_fm', 'weighted_adv'):
            self.assertIn(name, breakdown)
            self.assertTrue(np.isfinite(breakdown[name]), name)

    def test_deterministic_autoencoder(self):
        """Тест повторяемости в детерминированном режиме"""
        _, _, first = total_objective(self.model, self.batch, deterministic=True)
        _, _, second = total_objective(self.model, self.batch, deterministic=True)
        self.assertEqual(first, second)

    def test_discriminator_loss_isolated(self):
        """Тест: потеря дискриминатора не дает градиента генератору"""
        dLoss = discriminator_loss(self.model, self.x, self.result.x_hat)
        dLoss.Backward()
        self.assertIsNone(self.model.decoder.head.weight.grad)
        self.assertIsNotNone(self.model.discriminator.resolutions[0].logit.weight.grad)


class TestObjectiveGradient(unittest.TestCase):
    """Тест градиента полной цели генератора"""

    def test_kl_mean_bias(self):
        """Тест градиента по смещению головы mu против центральных разностей"""
        with Precision(np.float64):
            model = TinyModel(seed=2)
        batch = Noise(seed=6).reshape(1, -1)
        original = model.kl_mu.bias

        def f(bias):
            model.kl_mu.bias = bias
            try:
                total, _, _ = total_objective(model, batch, deterministic=True)
                return total
            finally:
                model.kl_mu.bias = original
        self.assertLess(grad_check(f, original.values), 1e-3)


if __name__ == '__main__':
    unittest.main()
