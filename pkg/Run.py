# -*- coding: utf-8 -*-
"""
Точка входа

Число потоков BLAS фиксируется из конфигурации до импорта numpy.
"""

import os,sys,json

THREAD_VARIABLES = ('OMP_NUM_THREADS','OPENBLAS_NUM_THREADS','MKL_NUM_THREADS','NUMEXPR_NUM_THREADS')

#--------------------------------------------------------------------------------
def PinThreads(argv:list) -> int:
    threads = 1
    if '--config' in argv:
        position = argv.index('--config')
        try:
            with open(argv[position + 1],'rb') as f:
                value = json.load(f).get('threads',1)
            if isinstance(value,int) and not isinstance(value,bool) and value > 0:
                threads = value
        except (IndexError,OSError,ValueError,AttributeError):
            # ошибки конфигурации сообщит полный разбор
            pass
    for name in THREAD_VARIABLES:
        os.environ[name] = str(threads)
    return threads

PinThreads(sys.argv[1:])

import asyncio
from typing import NoReturn

from Common.Codes import ExitCode
from Interfaces.LogInterface import LogInterface
from Interfaces.Main import Interface

#--------------------------------------------------------------------------------
class ExitStatus():
    def __init__(self):
        self.status:int = ExitCode.Ok.value

#--------------------------------------------------------------------------------
def main() -> NoReturn:
    sys.excepthook = LogInterface.DeathRattle
    exitStatus:ExitStatus = ExitStatus()
    loop = asyncio.new_event_loop()
    appEntryPoint:Interface = Interface()
    # Обеспечиваем асинхронный цикл работы
    try:
        loop.run_until_complete(appEntryPoint.Run(exitStatus))
        sys.exit(exitStatus.status)
    except asyncio.exceptions.CancelledError:
        sys.exit(ExitCode.AsyncStartError.value)
    finally:
        loop.close()

if __name__ == '__main__':
    main()
