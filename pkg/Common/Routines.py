# -*- coding: utf-8 -*-
"""
Модуль рутин по работе с файлами

Контейнер массивов (контрольные точки моделей и латентные файлы):
    8 байт   - сигнатура b'SATKARR1'
    8 байт   - длина заголовка, uint64 little-endian
    заголовок - JSON (ключи отсортированы): format_version, kind, step,
                config, meta, arrays = [{name, shape, offset, nbytes}]
    данные   - массивы float32 little-endian подряд в порядке имен
"""

import asyncio
import hashlib
import json
import os
import struct
from dataclasses import dataclass,field
from typing import Any,AnyStr,Awaitable,Callable,Dict,List,NoReturn,Optional,Tuple

import numpy as np

from Common.Errors import CheckpointFormatError,CheckpointMissingError

CONTAINER_MAGIC:bytes = b'SATKARR1'
CONTAINER_VERSION:int = 1
PAYLOAD_DTYPE:str = '<f4'

#----------------------------------------------------------------
class NullLog():
    """Журнал-заглушка с интерфейсом LogInterface"""
    def Error(self,sourceName,message): pass
    def Warn(self,sourceName,message): pass
    def Info(self,sourceName,message): pass

#----------------------------------------------------------------
ProgressCallback = Callable[[int,int],None]

async def run_with_progress(redraw:Callable[[str,int],Awaitable[Any]],title:str,
                            work:Callable[[ProgressCallback],Any]) -> Any:
    """
    Выполняет синхронную работу work(progress) в отдельном потоке

    Вызовы progress(step, total) из потока передаются в redraw по порядку,
    пока работа идет; к возврату все отрисовки завершены.
    """
    loop = asyncio.get_running_loop()
    queue:asyncio.Queue = asyncio.Queue()

    def progress(step:int,total:int) -> None:
        loop.call_soon_threadsafe(queue.put_nowait,(step,total))

    async def Consume() -> None:
        while True:
            item = await queue.get()
            if item is None:
                return
            step,total = item
            await redraw(f'{title}: шаг {step}/{total}',int(100 * step / max(total,1)))

    consumer = asyncio.create_task(Consume())
    try:
        return await asyncio.to_thread(work,progress)
    finally:
        queue.put_nowait(None)
        await consumer

#----------------------------------------------------------------
class FileContentReader():
    @staticmethod
    def IsExists(fullPath:str) -> bool:
        try:
            return os.path.exists(fullPath)
        except FileNotFoundError:
            return False

    @staticmethod
    def ListDir(folderFullPath:str) -> List:
        try:
            return sorted(os.listdir(folderFullPath))
        except FileNotFoundError:
            return []

    @staticmethod
    def GetBinaryFileContent(filePath:str) -> Optional[bytes]:
        try:
            with open(filePath,'rb') as f:
                return f.read()
        except FileNotFoundError:
            return None

    @staticmethod
    def ReadJson(filePath:str) -> Any:
        with open(filePath,'rb') as f:
            return json.load(f)

    @staticmethod
    def WriteJson(filePath:str,content:Any) -> NoReturn:
        folder = os.path.dirname(filePath)
        if folder:
            os.makedirs(folder,exist_ok=True)
        with open(filePath,'w',encoding='utf-8') as f:
            json.dump(content,f,sort_keys=True,indent=2,ensure_ascii=False)
            f.write('\n')

    @staticmethod
    def Sha256(filePath:str) -> AnyStr:
        digest = hashlib.sha256()
        with open(filePath,'rb') as f:
            for block in iter(lambda: f.read(1 << 20),b''):
                digest.update(block)
        return digest.hexdigest()

#----------------------------------------------------------------
#----------------------------------------------------------------
#-------------------КОНТЕЙНЕР ИМЕНОВАННЫХ МАССИВОВ----------------
#----------------------------------------------------------------
@dataclass
class ContainerContents():
    kind:str
    step:int
    config:Dict[str,Any]
    meta:Dict[str,Any]
    arrays:Dict[str,np.ndarray] = field(default_factory=dict)

class ArrayContainer():
    @staticmethod
    def Encode(kind:str,arrays:Dict[str,np.ndarray],config:Dict[str,Any],step:int=0,
               meta:Optional[Dict[str,Any]]=None) -> bytes:
        manifest:List[Dict[str,Any]] = []
        chunks:List[bytes] = []
        offset = 0
        for name in sorted(arrays):
            data = np.ascontiguousarray(arrays[name],dtype=PAYLOAD_DTYPE).tobytes()
            manifest.append({'name':name,'shape':[int(v) for v in np.shape(arrays[name])],
                             'offset':offset,'nbytes':len(data)})
            chunks.append(data)
            offset += len(data)
        header = {'format_version':CONTAINER_VERSION,'kind':kind,'step':int(step),
                  'config':config,'meta':meta or {},'arrays':manifest}
        headerBytes = json.dumps(header,sort_keys=True,separators=(',',':'),ensure_ascii=True).encode('ascii')
        return CONTAINER_MAGIC + struct.pack('<Q',len(headerBytes)) + headerBytes + b''.join(chunks)

    @staticmethod
    def Save(path:str,kind:str,arrays:Dict[str,np.ndarray],config:Dict[str,Any],step:int=0,
             meta:Optional[Dict[str,Any]]=None) -> NoReturn:
        content = ArrayContainer.Encode(kind,arrays,config,step,meta)
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder,exist_ok=True)
        temporary = f'{path}.part'
        with open(temporary,'wb') as f:
            f.write(content)
        os.replace(temporary,path)

    @staticmethod
    def Decode(content:bytes,source:str='') -> ContainerContents:
        if len(content) < 16 or content[:8] != CONTAINER_MAGIC:
            raise CheckpointFormatError(source,'неверная сигнатура')
        (headerLength,) = struct.unpack('<Q',content[8:16])
        if 16 + headerLength > len(content):
            raise CheckpointFormatError(source,'заголовок обрезан')
        try:
            header = json.loads(content[16:16 + headerLength].decode('ascii'))
        except (UnicodeDecodeError,json.JSONDecodeError) as e:
            raise CheckpointFormatError(source,f'заголовок не JSON: {e}') from None
        if header.get('format_version') != CONTAINER_VERSION:
            raise CheckpointFormatError(source,f'версия формата {header.get("format_version")}')

        payload = content[16 + headerLength:]
        arrays:Dict[str,np.ndarray] = {}
        expectedOffset = 0
        for entry in header.get('arrays',[]):
            shape = tuple(entry['shape'])
            nbytes = int(np.prod(shape,dtype=np.int64)) * 4
            if entry['nbytes'] != nbytes or entry['offset'] != expectedOffset:
                raise CheckpointFormatError(source,f'манифест массива {entry["name"]} не согласован')
            if expectedOffset + nbytes > len(payload):
                raise CheckpointFormatError(source,f'данные массива {entry["name"]} обрезаны')
            raw = payload[expectedOffset:expectedOffset + nbytes]
            arrays[entry['name']] = np.frombuffer(raw,dtype=PAYLOAD_DTYPE).reshape(shape).astype(np.float32)
            expectedOffset += nbytes
        if expectedOffset != len(payload):
            raise CheckpointFormatError(source,'длина данных не совпадает с манифестом')
        return ContainerContents(kind=header['kind'],step=header['step'],config=header['config'],
                                 meta=header['meta'],arrays=arrays)

    @staticmethod
    def Load(path:str,expectedKind:Optional[str]=None) -> ContainerContents:
        content = FileContentReader.GetBinaryFileContent(path)
        if content is None:
            raise CheckpointMissingError(path)
        contents = ArrayContainer.Decode(content,path)
        if expectedKind is not None and contents.kind != expectedKind:
            raise CheckpointFormatError(path,f'ожидался вид {expectedKind}, найден {contents.kind}')
        return contents
