# -*- coding: utf-8 -*-
"""
Unit tests for layers and AdamW optimizer modules
"""
import unittest

import numpy as np

from Common.Errors import CheckpointFormatError, DimensionMismatchError, MissingGradientError
from Common.Grad import Tensor
from Common.Layers import Linear, Mlp2, Module, Parameter
from Common.Optim import AdamW, CosineSchedule, OptimizerState, adamw_step


class Pair(Module):
    def __init__(self):
        rng = np.random.default_rng(0)
        self.head = Linear(3, 4, rng)
        self.blocks = [Mlp2(4, 5, 4, rng), Mlp2(4, 5, 4, rng)]


class TestModule(unittest.TestCase):
    """Тесты обхода параметров"""

    def test_named_parameters(self):
        """Тест имен параметров, включая списки подмодулей"""
        names = [name for name, _ in Pair().NamedParameters()]
        self.assertIn('head.weight', names)
        self.assertIn('blocks.1.second.bias', names)
        self.assertEqual(len(names), 2 + 2 * 4)

    def test_parameter_count(self):
        """Тест числа параметров Linear(3, 4)"""
        self.assertEqual(Linear(3, 4, np.random.default_rng(0)).ParameterCount(), 16)

    def test_linear_dimension_mismatch(self):
        """Тест входа неверной размерности"""
        with self.assertRaises(DimensionMismatchError):
            Linear(3, 4, np.random.default_rng(0))(Tensor(np.ones((2, 5))))

    def test_load_arrays(self):
        """Тест загрузки массивов и проверки форм"""
        source, target = Pair(), Pair()
        for _, param in target.NamedParameters():
            param.values = np.zeros_like(param.values)
        target.LoadArrays(source.NamedArrays())
        for (name, left), (_, right) in zip(source.NamedParameters(), target.NamedParameters()):
            self.assertTrue(np.array_equal(left.values, right.values), name)

        broken = source.NamedArrays()
        broken['head.weight'] = np.zeros((4, 3))
        with self.assertRaises(CheckpointFormatError):
            target.LoadArrays(broken, source='test.ckpt')
        del broken['head.weight']
        with self.assertRaises(CheckpointFormatError):
            target.LoadArrays(broken, source='test.ckpt')

    def test_set_requires_grad(self):
        """Тест заморозки параметров"""
        model = Pair()
        model.SetRequiresGrad(False)
        self.assertFalse(any(param.requires_grad for param in model.Parameters()))


class TestCosineSchedule(unittest.TestCase):
    """Тесты расписания шага обучения"""

    def setUp(self):
        self.schedule = CosineSchedule(base_lr=1e-3, min_lr=1e-5, warmup_steps=100, max_steps=1000)

    def test_endpoints(self):
        """Тест крайних точек расписания"""
        self.assertEqual(self.schedule.LearningRate(0), 0.0)
        self.assertEqual(self.schedule.LearningRate(100), 1e-3)
        self.assertEqual(self.schedule.LearningRate(1000), 1e-5)
        self.assertEqual(self.schedule.LearningRate(5000), 1e-5)

    def test_monotone(self):
        """Тест роста на разогреве и убывания после него"""
        rates = [self.schedule.LearningRate(step) for step in range(1001)]
        self.assertTrue(all(a < b for a, b in zip(rates[:100], rates[1:101])))
        self.assertTrue(all(a >= b for a, b in zip(rates[100:], rates[101:])))


class TestAdamW(unittest.TestCase):
    """Тесты оптимизатора AdamW"""

    def State(self, lr=1e-3, warmup=0, weightDecay=0.0):
        schedule = CosineSchedule(base_lr=lr, min_lr=lr, warmup_steps=warmup, max_steps=1000)
        return OptimizerState(schedule=schedule, weight_decay=weightDecay)

    def test_quadratic_descent(self):
        """Тест спуска по w^2 из точки 1"""
        w = Parameter(np.array([1.0]))
        optimizer = AdamW([('w', w)], self.State())
        previous = abs(float(w.values[0]))
        for _ in range(100):
            optimizer.ZeroGrad()
            (w * w).Sum().Backward()
            optimizer.Step()
            current = abs(float(w.values[0]))
            self.assertLess(current, previous)
            previous = current

    def test_first_step_rate(self):
        """Тест: первое обновление использует lr(1)"""
        w = Parameter(np.array([1.0]))
        w.grad = np.array([1.0])
        lr = adamw_step([('w', w)], self.State(lr=1.0, warmup=10))
        self.assertAlmostEqual(lr, 0.1)

    def test_weight_decay_without_gradient_signal(self):
        """Тест развязанного затухания весов при нулевом градиенте"""
        w = Parameter(np.array([2.0]))
        w.grad = np.array([0.0])
        adamw_step([('w', w)], self.State(lr=0.1, weightDecay=0.5))
        self.assertAlmostEqual(float(w.values[0]), 2.0 * (1.0 - 0.05), places=5)

    def test_missing_gradient(self):
        """Тест параметра без градиента"""
        w = Parameter(np.array([1.0]))
        with self.assertRaises(MissingGradientError):
            adamw_step([('w', w)], self.State())

    def test_state_arrays(self):
        """Тест сохранения и загрузки моментов"""
        w = Parameter(np.array([1.0, 2.0]))
        w.grad = np.array([0.5, -0.5])
        state = self.State()
        adamw_step([('w', w)], state)
        arrays = state.NamedArrays('optimizer')
        self.assertEqual(sorted(arrays), ['optimizer.m.w', 'optimizer.v.w'])

        restored = self.State()
        restored.LoadArrays(arrays, 'optimizer', state.step_count)
        self.assertEqual(restored.step_count, 1)
        self.assertTrue(np.array_equal(restored.first_moment['w'], state.first_moment['w']))
        self.assertTrue(np.array_equal(restored.second_moment['w'], state.second_moment['w']))


if __name__ == '__main__':
    unittest.main()
