# -*- coding: utf-8 -*-
"""
Unit tests for tokenizer model module
"""
import copy
import unittest

import numpy as np

from Common.Bottleneck import build_bottleneck
from Common.Config import config_from_dict
from Common.Dsp import AudioBuffer, FeatureSequence, MelFrames
from Common.Errors import ConfigValidationError, DimensionMismatchError, RateMismatchError, ShapeError
from Common.Grad import Tensor
from Common.Tokenizer import (acoustic_encode, build_tokenizer, decode, discriminate, encode_audio, forward,
                              kl_bottleneck, kl_divergence, mel_batch, reconstruct, unify)

TINY_CONFIG = {'mel_bins': 16,
               'semantic_encoder': {'d_high': 16, 'hidden': 16},
               'bottleneck': {'d_low': 4, 'hidden': 8},
               'tokenizer': {'d': 4, 'channels': 8, 'encoder_channels': 4, 'decoder_blocks': 1,
                             'disc_channels': 2, 'crop_seconds': 0.16, 'batch': 2}}


def TinyModel(seed=0, **tokenizer):
    data = copy.deepcopy(TINY_CONFIG)
    data['tokenizer'].update(tokenizer)
    config = config_from_dict(data)
    sembo = build_bottleneck(16, 4, 8, seed=1) if config.tokenizer.semantic_source == 'bottleneck' else None
    return build_tokenizer(config, sembo, seed=seed)


def Noise(samples=2560, seed=0):
    return np.random.default_rng(seed).standard_normal(samples) * 0.1


class TestEncoders(unittest.TestCase):
    """Тесты акустического кодировщика и семантических целей"""

    def setUp(self):
        self.model = TinyModel()
        self.mel = mel_batch(self.model, Noise())

    def test_shapes(self):
        """Тест форм: 17 мел-кадров дополняются до 20 и дают 5 латентов"""
        self.assertEqual(self.mel.shape, (1, 17, 16))
        z_a_high, z_a_low = acoustic_encode(self.model, self.mel)
        self.assertEqual(z_a_high.shape, (1, 5, 16))
        self.assertEqual(z_a_low.shape, (1, 5, 4))

    def test_zero_projection(self):
        """Тест: нулевые веса fc дают смещение в каждом кадре"""
        self.model.fc.weight.values = np.zeros_like(self.model.fc.weight.values)
        _, z_a_low = acoustic_encode(self.model, self.mel)
        expected = np.broadcast_to(self.model.fc.bias.values, (1, 5, 4))
        self.assertTrue(np.allclose(z_a_low.values, expected))

    def test_rate_mismatch(self):
        """Тест мел-кадров другой частоты"""
        with self.assertRaises(RateMismatchError):
            acoustic_encode(self.model, MelFrames(self.mel[0], 50.0, 16))

    def test_unify(self):
        """Тест сложения латентов и проверки форм"""
        left = Tensor(np.ones((1, 3, 4)))
        right = Tensor(np.full((1, 3, 4), 2.0))
        self.assertTrue(np.allclose(unify(left, right).values, 3.0))
        with self.assertRaises(ShapeError):
            unify(left, Tensor(np.ones((1, 4, 4))))

    def test_channel_merge_source(self):
        """Тест семантической цели слиянием каналов без узкого горла"""
        model = TinyModel(semantic_source='channel_merge')
        self.assertIsNone(model.sembo)
        result = forward(model, Noise(), deterministic=True)
        expected = result.z_s_high.values.reshape(1, 5, 4, 4).mean(axis=-1)
        self.assertTrue(np.allclose(result.z_s_low.values, expected))

    def test_missing_bottleneck(self):
        """Тест источника bottleneck без обученного узкого горла"""
        config = config_from_dict(TINY_CONFIG)
        with self.assertRaises(ConfigValidationError):
            build_tokenizer(config, None)
        with self.assertRaises(DimensionMismatchError):
            build_tokenizer(config, build_bottleneck(16, 8, 8, seed=0))


class TestKlBottleneck(unittest.TestCase):
    """Тесты KL-горла"""

    def test_standard_normal(self):
        """Тест нулевой дивергенции для N(0, I)"""
        self.assertAlmostEqual(kl_divergence(Tensor(np.zeros((2, 5, 4))), Tensor(np.zeros((2, 5, 4)))).Item(), 0.0)

    def test_unit_shift(self):
        """Тест сдвига среднего на 1 по одной оси: 0.5 на кадр"""
        mu = np.zeros((1, 6, 4))
        mu[..., 0] = 1.0
        self.assertAlmostEqual(kl_divergence(Tensor(mu), Tensor(np.zeros((1, 6, 4)))).Item(), 0.5, places=6)

    def test_monte_carlo(self):
        """Тест совпадения с оценкой Монте-Карло по 10^6 выборкам"""
        for seed in range(5):
            rng = np.random.default_rng(seed)
            mu = rng.standard_normal((1, 2, 4))
            logvar = rng.uniform(-1.0, 1.0, (1, 2, 4))
            eta = rng.standard_normal((1_000_000, 2, 4))
            z = mu[0] + np.exp(0.5 * logvar[0]) * eta
            # log q(z) - log p(z) с сокращенными константами
            ratio = 0.5 * (z * z - eta * eta - logvar[0])
            estimate = ratio.sum(axis=-1).mean()
            closed = kl_divergence(Tensor(mu), Tensor(logvar)).Item()
            self.assertLess(abs(estimate - closed) / closed, 0.01, seed)

    def test_deterministic_mode(self):
        """Тест: без шума z = mu"""
        model = TinyModel()
        z_uni = Tensor(np.random.default_rng(0).standard_normal((1, 5, 4)))
        z, _ = kl_bottleneck(model, z_uni, np.random.default_rng(1), deterministic=True)
        self.assertTrue(np.array_equal(z.values, model.kl_mu(z_uni).values))
        noisy, _ = kl_bottleneck(model, z_uni, np.random.default_rng(1), deterministic=False)
        self.assertFalse(np.allclose(noisy.values, z.values))


class TestDecoder(unittest.TestCase):
    """Тесты декодера и дискриминатора"""

    def setUp(self):
        self.model = TinyModel()

    def test_empty_latent(self):
        """Тест T = 0"""
        self.assertEqual(decode(self.model, Tensor(np.zeros((1, 0, 4)))).shape, (1, 0))

    def test_one_second(self):
        """Тест: 25 латентов дают 16000 отсчетов"""
        audio = decode(self.model, FeatureSequence(np.random.default_rng(2).standard_normal((25, 4)), 25.0))
        self.assertIsInstance(audio, AudioBuffer)
        self.assertEqual(len(audio), 16000)
        self.assertTrue(np.all(np.isfinite(audio.samples)))

    def test_discriminator_outputs(self):
        """Тест: три разрешения по четыре карты признаков"""
        logits, features = discriminate(self.model, AudioBuffer(Noise(), 16000))
        self.assertEqual(len(logits), 3)
        self.assertTrue(all(len(maps) == 4 for maps in features))
        self.assertTrue(all(logit.shape[0] == 1 for logit in logits))


class TestForward(unittest.TestCase):
    """Тесты полного прямого прохода"""

    def setUp(self):
        self.model = TinyModel()
        self.batch = np.stack([Noise(seed=1), Noise(seed=2)])

    def test_shapes_and_identity(self):
        """Тест форм и равенства z_uni = z_a_low + z_s_low"""
        result = forward(self.model, self.batch, deterministic=True)
        self.assertEqual(result.x_hat.shape, (2, 2560))
        self.assertEqual(result.z_uni.shape, (2, 5, 4))
        self.assertTrue(np.allclose(result.z_uni.values, result.z_a_low.values + result.z_s_low.values))
        self.assertTrue(np.array_equal(result.z.values, result.distribution.mu.values))

    def test_frozen_semantic_path(self):
        """Тест: градиент не проходит в узкое горло и семантические цели"""
        result = forward(self.model, self.batch, deterministic=True)
        self.assertFalse(result.z_s_low.requires_grad)
        self.assertFalse(result.z_s_high.requires_grad)
        (result.x_hat * result.x_hat).Mean().Backward()
        self.assertTrue(all(param.grad is None for param in self.model.sembo.Parameters()))
        self.assertIsNotNone(self.model.acoustic_encoder.patch.weight.grad)
        self.assertIsNotNone(self.model.fc.weight.grad)


class TestInference(unittest.TestCase):
    """Тесты кодирования и реконструкции"""

    def setUp(self):
        self.model = TinyModel()
        self.audio = AudioBuffer(Noise(16000, seed=3), 16000)

    def test_encode_mu(self):
        """Тест формы латентов mu для одной секунды"""
        latent = encode_audio(self.model, self.audio, kind='mu')
        self.assertEqual(latent.values.shape, (26, 4))
        self.assertEqual(latent.frame_rate, 25.0)

    def test_reconstruct_length_and_purity(self):
        """Тест длины восстановления и повторяемости"""
        original = self.audio.samples.copy()
        first = reconstruct(self.model, self.audio)
        second = reconstruct(self.model, self.audio)
        self.assertEqual(len(first), len(self.audio))
        self.assertEqual(first.sample_rate, 16000)
        self.assertTrue(np.array_equal(first.samples, second.samples))
        self.assertTrue(np.array_equal(self.audio.samples, original))

    def test_rate_mismatch(self):
        """Тест аудио с другой частотой дискретизации"""
        with self.assertRaises(RateMismatchError):
            reconstruct(self.model, AudioBuffer(Noise(8000), 8000))


if __name__ == '__main__':
    unittest.main()
