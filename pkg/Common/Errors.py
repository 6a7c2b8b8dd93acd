# -*- coding: utf-8 -*-
"""
Модуль исключений предметной области

Каждое исключение несет код выхода и словарь подробностей,
которые диспетчер печатает одной строкой JSON.
"""

from typing import Any,Dict,List,Sequence

from Common.Codes import ExitCode

#----------------------------------------------------------------
class SatokError(Exception):
    exitCode:ExitCode = ExitCode.ExecutionError

    def __init__(self,message:str,**details:Any):
        super().__init__(message)
        self.message:str = message
        self.details:Dict[str,Any] = details

    def Describe(self) -> Dict[str,Any]:
        description = {'error':type(self).__name__,
                       'exit_code':int(self.exitCode),
                       'message':self.message}
        description.update(self.details)
        return description

#----------------------------------------------------------------
#----------------------------АУДИО-------------------------------
#----------------------------------------------------------------
class AudioFileMissingError(SatokError):
    def __init__(self,path:str):
        super().__init__(f'Аудиофайл не найден: {path}',path=path)

class UnsupportedCodecError(SatokError):
    def __init__(self,path:str,reason:str):
        super().__init__(f'Неподдерживаемый формат WAV: {path} ({reason})',path=path,reason=reason)

class EmptyAudioError(SatokError):
    def __init__(self,source:str):
        super().__init__(f'Аудио нулевой длины: {source}',source=source)

class InvalidAudioError(SatokError):
    def __init__(self,reason:str):
        super().__init__(f'Некорректный аудиобуфер: {reason}',reason=reason)

class StftConfigError(SatokError):
    def __init__(self,windowSize:int,hop:int,reason:str):
        super().__init__(f'Недопустимые параметры STFT: окно {windowSize}, шаг {hop} ({reason})',
                         window_size=windowSize,hop=hop,reason=reason)

class NonColaError(SatokError):
    def __init__(self,windowSize:int,hop:int):
        super().__init__(f'Окно {windowSize} с шагом {hop} не удовлетворяет условию COLA',
                         window_size=windowSize,hop=hop)

class RateMismatchError(SatokError):
    def __init__(self,expected:float,actual:float):
        super().__init__(f'Частота кадров {actual} не совпадает с ожидаемой {expected}',
                         expected=expected,actual=actual)

#----------------------------------------------------------------
#----------------------ДИФФЕРЕНЦИРОВАНИЕ-------------------------
#----------------------------------------------------------------
class ShapeError(SatokError):
    def __init__(self,primitive:str,*shapes:Sequence[int]):
        shapeList = [list(shape) for shape in shapes]
        super().__init__(f'{primitive}: несогласованные формы {shapeList}',
                         primitive=primitive,shapes=shapeList)

class NonScalarLossError(SatokError):
    def __init__(self,shape:Sequence[int]):
        super().__init__(f'Обратный проход возможен только от скаляра, получена форма {list(shape)}',
                         shape=list(shape))

class TapeExhaustedError(SatokError):
    def __init__(self):
        super().__init__('Лента вычислений уже израсходована предыдущим обратным проходом')

class MissingGradientError(SatokError):
    def __init__(self,name:str):
        super().__init__(f'У параметра {name} отсутствует градиент',parameter=name)

#----------------------------------------------------------------
#-----------------------СПЕКТРАЛЬНЫЙ АНАЛИЗ----------------------
#----------------------------------------------------------------
class InsufficientFramesError(SatokError):
    def __init__(self,count:int,required:int):
        super().__init__(f'Недостаточно кадров: {count}, требуется больше {required - 1}',
                         count=count,required=required)

class NonSymmetricError(SatokError):
    def __init__(self,asymmetry:float):
        super().__init__(f'Матрица несимметрична: отклонение {asymmetry:.3e}',asymmetry=asymmetry)

class EigenConvergenceError(SatokError):
    def __init__(self,sweeps:int,offDiagonal:float):
        super().__init__(f'Метод Якоби не сошелся за {sweeps} проходов',
                         sweeps=sweeps,off_diagonal=offDiagonal)

class NegativeSpectrumError(SatokError):
    def __init__(self,value:float):
        super().__init__(f'Отрицательное собственное значение {value:.3e}',value=value)

class ZeroSpectrumError(SatokError):
    def __init__(self):
        super().__init__('Спектр состоит из одних нулей')

class IndivisibleDimensionError(SatokError):
    def __init__(self,dim:int,group:int):
        super().__init__(f'Размерность {dim} не делится на группу {group}',dim=dim,group=group)

class RetainedDimensionError(SatokError):
    def __init__(self,retained:int,dim:int):
        super().__init__(f'Число компонент {retained} превышает размерность {dim}',
                         retained=retained,dim=dim)

#----------------------------------------------------------------
#----------------------------МОДЕЛИ------------------------------
#----------------------------------------------------------------
class DimensionMismatchError(SatokError):
    def __init__(self,expected:int,actual:int):
        super().__init__(f'Ожидалась размерность признаков {expected}, получена {actual}',
                         expected=expected,actual=actual)

class FrameCountMismatchError(SatokError):
    def __init__(self,left:int,right:int):
        super().__init__(f'Число кадров различается: {left} и {right}',left=left,right=right)

class NonFiniteLossError(SatokError):
    def __init__(self,term:str,step:int=-1):
        super().__init__(f'Нечисловое значение в слагаемом {term} на шаге {step}',term=term,step=step)

class EmptyCorpusError(SatokError):
    def __init__(self,source:str):
        super().__init__(f'Корпус пуст: {source}',source=source)

class DegenerateSplitError(SatokError):
    def __init__(self,split:str):
        super().__init__(f'В выборке {split} представлен единственный класс',split=split)

#----------------------------------------------------------------
#---------------------ОРКЕСТРАЦИЯ И ФАЙЛЫ------------------------
#----------------------------------------------------------------
class CheckpointMissingError(SatokError):
    def __init__(self,path:str):
        super().__init__(f'Контрольная точка не найдена: {path}',path=path)

class CheckpointFormatError(SatokError):
    def __init__(self,path:str,reason:str):
        super().__init__(f'Поврежденная контрольная точка {path}: {reason}',path=path,reason=reason)

class CheckpointConfigError(SatokError):
    def __init__(self,path:str,fields:List[str]):
        super().__init__(f'Конфигурация несовместима с контрольной точкой {path}',path=path,fields=fields)

class ConfigValidationError(SatokError):
    exitCode:ExitCode = ExitCode.ConfigError

    def __init__(self,problems:List[str]):
        super().__init__('Ошибки конфигурации: ' + '; '.join(problems),problems=problems)

class UsageError(SatokError):
    exitCode:ExitCode = ExitCode.UsageError

    def __init__(self,message:str):
        super().__init__(message)

class PluginLoadError(SatokError):
    def __init__(self,module:str,reason:str):
        super().__init__(f'Не удалось загрузить модуль {module}: {reason}',module=module,reason=reason)
