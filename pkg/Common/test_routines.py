# -*- coding: utf-8 -*-
"""
Unit tests for file routines and array container
"""
import asyncio
import os
import shutil
import struct
import tempfile
import threading
import unittest

import numpy as np

from Common.Errors import CheckpointFormatError, CheckpointMissingError
from Common.Routines import CONTAINER_MAGIC, ArrayContainer, FileContentReader, run_with_progress


class TestFileContentReader(unittest.TestCase):
    """Тесты чтения файлов"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_missing_file(self):
        """Тест отсутствующего файла"""
        path = os.path.join(self.temp_dir, 'absent.bin')
        self.assertFalse(FileContentReader.IsExists(path))
        self.assertIsNone(FileContentReader.GetBinaryFileContent(path))
        self.assertEqual(FileContentReader.ListDir(path), [])

    def test_json_round_trip(self):
        """Тест записи JSON во вложенный каталог"""
        path = os.path.join(self.temp_dir, 'nested', 'doc.json')
        FileContentReader.WriteJson(path, {'b': 1, 'a': 'тест'})
        self.assertEqual(FileContentReader.ReadJson(path), {'a': 'тест', 'b': 1})
        self.assertEqual(FileContentReader.ListDir(os.path.dirname(path)), ['doc.json'])

    def test_sha256(self):
        """Тест контрольной суммы пустого файла"""
        path = os.path.join(self.temp_dir, 'empty.bin')
        open(path, 'wb').close()
        self.assertEqual(FileContentReader.Sha256(path),
                         'e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855')


class TestArrayContainer(unittest.TestCase):
    """Тесты контейнера именованных массивов"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.path = os.path.join(self.temp_dir, 'model.ckpt')
        rng = np.random.default_rng(0)
        self.arrays = {'b.weight': rng.standard_normal((3, 4)).astype(np.float32),
                       'a.bias': rng.standard_normal(4).astype(np.float32),
                       'empty': np.zeros((0, 4), dtype=np.float32)}

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_save_and_load(self):
        """Тест сохранения и чтения массивов, конфигурации и метаданных"""
        ArrayContainer.Save(self.path, 'tokenizer', self.arrays, {'seed': 1}, step=7, meta={'note': 'x'})
        contents = ArrayContainer.Load(self.path, 'tokenizer')
        self.assertEqual((contents.kind, contents.step), ('tokenizer', 7))
        self.assertEqual(contents.config, {'seed': 1})
        self.assertEqual(contents.meta, {'note': 'x'})
        for name, values in self.arrays.items():
            self.assertEqual(contents.arrays[name].shape, values.shape)
            self.assertTrue(np.array_equal(contents.arrays[name], values), name)
        self.assertFalse(os.path.exists(self.path + '.part'))

    def test_encoding_is_deterministic(self):
        """Тест побайтового совпадения при одинаковом содержимом"""
        shuffled = dict(reversed(list(self.arrays.items())))
        self.assertEqual(ArrayContainer.Encode('latent', self.arrays, {}),
                         ArrayContainer.Encode('latent', shuffled, {}))

    def test_header_layout(self):
        """Тест сигнатуры и длины заголовка"""
        content = ArrayContainer.Encode('latent', self.arrays, {})
        self.assertEqual(content[:8], CONTAINER_MAGIC)
        (length,) = struct.unpack('<Q', content[8:16])
        self.assertEqual(len(content) - 16 - length, (12 + 4 + 0) * 4)

    def test_missing(self):
        """Тест отсутствующего файла"""
        with self.assertRaises(CheckpointMissingError):
            ArrayContainer.Load(self.path)

    def test_corrupted(self):
        """Тест неверной сигнатуры, обрезанных данных и чужого вида"""
        content = ArrayContainer.Encode('tokenizer', self.arrays, {})
        with self.assertRaises(CheckpointFormatError):
            ArrayContainer.Decode(b'NOTMAGIC' + content[8:])
        with self.assertRaises(CheckpointFormatError):
            ArrayContainer.Decode(content[:-4])
        with self.assertRaises(CheckpointFormatError):
            ArrayContainer.Decode(content[:20])
        ArrayContainer.Save(self.path, 'latent', self.arrays, {})
        with self.assertRaises(CheckpointFormatError):
            ArrayContainer.Load(self.path, 'tokenizer')


class TestRunWithProgress(unittest.TestCase):
    """Тесты фоновой работы с отрисовкой прогресса"""

    def setUp(self):
        self.messages = []
        self.loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self.loop)

    def tearDown(self):
        self.loop.close()

    async def Redraw(self, message, percent):
        self.messages.append((message, percent, threading.current_thread() is threading.main_thread()))

    def test_order_and_result(self):
        """Тест: отрисовки идут по порядку в основном потоке, результат возвращается"""
        workers = []

        def work(progress):
            workers.append(threading.current_thread() is threading.main_thread())
            for step in range(1, 5):
                progress(step, 4)
            return 'done'

        result = self.loop.run_until_complete(run_with_progress(self.Redraw, 'Работа', work))
        self.assertEqual(result, 'done')
        self.assertEqual(workers, [False])
        self.assertEqual(self.messages, [(f'Работа: шаг {step}/4', 25 * step, True) for step in range(1, 5)])

    def test_exception(self):
        """Тест: исключение работы доходит до вызывающего после отрисовки прогресса"""

        def work(progress):
            progress(1, 2)
            raise CheckpointMissingError('absent.ckpt')

        with self.assertRaises(CheckpointMissingError):
            self.loop.run_until_complete(run_with_progress(self.Redraw, 'Работа', work))
        self.assertEqual(self.messages, [('Работа: шаг 1/2', 50, True)])


if __name__ == '__main__':
    unittest.main()
