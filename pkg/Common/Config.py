# -*- coding: utf-8 -*-
"""
Модуль конфигурации запуска

Схема задается вложенными dataclass; ограничения полей записаны
метаданными annotated_types и проверяются одним общим валидатором,
который собирает все нарушения с путями полей.
"""

import json
import os
from dataclasses import asdict,dataclass,field,fields,is_dataclass,replace
from typing import Any,Dict,List,Optional,Tuple,Union

import annotated_types as at
from typing_extensions import Annotated,Literal,get_args,get_origin,get_type_hints

from Common.Errors import ConfigValidationError
from Common.Routines import NullLog

KL_WEIGHT_GRID:Tuple[float,...] = (0.0,1e-4,1e-3,1e-2)

PositiveInt = Annotated[int,at.Gt(0)]
NonNegativeInt = Annotated[int,at.Ge(0)]
PositiveFloat = Annotated[float,at.Gt(0)]
NonNegativeFloat = Annotated[float,at.Ge(0)]
Fraction = Annotated[float,at.Interval(gt=0,le=1)]
Beta = Annotated[float,at.Interval(ge=0,lt=1)]

#----------------------------------------------------------------
@dataclass
class OptimizerConfig():
    base_lr:PositiveFloat = 1e-3
    min_lr:NonNegativeFloat = 1e-5
    warmup_steps:NonNegativeInt = 1000
    max_steps:Optional[PositiveInt] = None
    beta1:Beta = 0.8
    beta2:Beta = 0.99
    eps:PositiveFloat = 1e-8
    weight_decay:NonNegativeFloat = 0.01

@dataclass
class SemanticEncoderConfig():
    seed:int = 1234
    d_high:PositiveInt = 64
    hidden:PositiveInt = 128

@dataclass
class BottleneckConfig():
    d_low:PositiveInt = 16
    hidden:Optional[PositiveInt] = None
    lambda_recon:NonNegativeFloat = 1e3
    use_time_relation:bool = True
    steps:NonNegativeInt = 2000
    batch:PositiveInt = 16
    crop_frames:PositiveInt = 32
    log_every:PositiveInt = 100
    optimizer:OptimizerConfig = field(default_factory=OptimizerConfig)

@dataclass
class LossWeights():
    mel:NonNegativeFloat = 45.0
    sem:NonNegativeFloat = 45.0
    kl:NonNegativeFloat = 1e-2
    fm:NonNegativeFloat = 1.0
    adv:NonNegativeFloat = 1.0

@dataclass
class TokenizerConfig():
    d:PositiveInt = 16
    channels:PositiveInt = 64
    encoder_channels:PositiveInt = 16
    decoder_blocks:NonNegativeInt = 4
    disc_channels:PositiveInt = 8
    crop_seconds:PositiveFloat = 1.0
    batch:PositiveInt = 4
    steps:NonNegativeInt = 5000
    kl_mode:Literal['stochastic','deterministic'] = 'stochastic'
    kl_sweep:List[NonNegativeFloat] = field(default_factory=list)
    semantic_source:Literal['bottleneck','channel_merge'] = 'bottleneck'
    use_high:bool = True
    use_low:bool = True
    checkpoint_every:NonNegativeInt = 1000
    log_every:PositiveInt = 100
    weights:LossWeights = field(default_factory=LossWeights)
    optimizer:OptimizerConfig = field(default_factory=lambda: OptimizerConfig(base_lr=5e-4))

@dataclass
class EvalConfig():
    suites:List[Literal['recon','probe','rtf']] = field(default_factory=lambda: ['recon','probe','rtf'])
    seed:int = 7
    probe_classes:Annotated[int,at.Interval(ge=2,le=4)] = 4
    items_per_class:PositiveInt = 20
    probe_steps:NonNegativeInt = 2000
    probe_lr:PositiveFloat = 1e-2
    recon_items:PositiveInt = 6
    recon_seconds:PositiveFloat = 2.0
    rtf_warmup:NonNegativeInt = 1

@dataclass
class CorpusConfig():
    hours:PositiveFloat = 0.25
    clip_seconds:PositiveFloat = 4.0
    proportions:Dict[str,NonNegativeFloat] = field(default_factory=lambda: {'speech':0.346,'music':0.286,'audio':0.368})

@dataclass
class AnalysisConfig():
    alphas:List[Fraction] = field(default_factory=lambda: [0.5,0.9,0.99])
    features:Literal['semantic','mel'] = 'semantic'
    merge_group:PositiveInt = 4
    pca_retained:PositiveInt = 16
    pca_frame_cap:PositiveInt = 1_000_000

@dataclass
class Config():
    seed:int = 0
    threads:PositiveInt = 1
    sample_rate:PositiveInt = 16000
    hop:PositiveInt = 160
    window_size:PositiveInt = 512
    mel_bins:PositiveInt = 64
    semantic_encoder:SemanticEncoderConfig = field(default_factory=SemanticEncoderConfig)
    bottleneck:BottleneckConfig = field(default_factory=BottleneckConfig)
    tokenizer:TokenizerConfig = field(default_factory=TokenizerConfig)
    eval:EvalConfig = field(default_factory=EvalConfig)
    corpus:CorpusConfig = field(default_factory=CorpusConfig)
    analysis:AnalysisConfig = field(default_factory=AnalysisConfig)

    @property
    def mel_rate(self) -> float:
        return self.sample_rate / self.hop

    @property
    def latent_rate(self) -> float:
        return self.mel_rate / 4

    @property
    def samples_per_latent(self) -> int:
        return 4 * self.hop

#----------------------------------------------------------------
#---------------------------РАЗБОР-------------------------------
#----------------------------------------------------------------
def _CheckConstraint(value:Any,constraint:Any,path:str,problems:List[str]) -> None:
    bounds = []
    if isinstance(constraint,at.Interval):
        bounds = [('gt',constraint.gt),('ge',constraint.ge),('lt',constraint.lt),('le',constraint.le)]
    elif isinstance(constraint,at.Gt):
        bounds = [('gt',constraint.gt)]
    elif isinstance(constraint,at.Ge):
        bounds = [('ge',constraint.ge)]
    elif isinstance(constraint,at.Lt):
        bounds = [('lt',constraint.lt)]
    elif isinstance(constraint,at.Le):
        bounds = [('le',constraint.le)]
    checks = {'gt':(lambda v,b: v > b,'>'),'ge':(lambda v,b: v >= b,'>='),
              'lt':(lambda v,b: v < b,'<'),'le':(lambda v,b: v <= b,'<=')}
    for kind,bound in bounds:
        if bound is None:
            continue
        test,sign = checks[kind]
        if not test(value,bound):
            problems.append(f'{path}: значение {value} должно быть {sign} {bound}')

def _Coerce(value:Any,hint:Any,path:str,problems:List[str]) -> Any:
    origin = get_origin(hint)
    if origin is Annotated:
        base,*constraints = get_args(hint)
        converted = _Coerce(value,base,path,problems)
        if converted is not None and isinstance(converted,(int,float)) and not isinstance(converted,bool):
            for constraint in constraints:
                _CheckConstraint(converted,constraint,path,problems)
        return converted
    if origin is Union:
        options = [arg for arg in get_args(hint) if arg is not type(None)]
        if value is None:
            return None
        return _Coerce(value,options[0],path,problems)
    if origin is Literal:
        allowed = get_args(hint)
        if value not in allowed:
            problems.append(f'{path}: значение {value!r} не из {list(allowed)}')
        return value
    if origin in (list,List):
        (item,) = get_args(hint)
        if not isinstance(value,list):
            problems.append(f'{path}: ожидался список')
            return value
        return [_Coerce(v,item,f'{path}[{i}]',problems) for i,v in enumerate(value)]
    if origin in (dict,Dict):
        _,item = get_args(hint)
        if not isinstance(value,dict):
            problems.append(f'{path}: ожидался объект')
            return value
        return {str(k):_Coerce(v,item,f'{path}.{k}',problems) for k,v in value.items()}
    if hint is bool:
        if not isinstance(value,bool):
            problems.append(f'{path}: ожидалось логическое значение')
        return value
    if hint is int:
        if isinstance(value,bool) or not isinstance(value,int):
            problems.append(f'{path}: ожидалось целое число')
            return None
        return value
    if hint is float:
        if isinstance(value,bool) or not isinstance(value,(int,float)):
            problems.append(f'{path}: ожидалось число')
            return None
        return float(value)
    if hint is str:
        if not isinstance(value,str):
            problems.append(f'{path}: ожидалась строка')
        return value
    return value

def _Build(base:Any,data:Any,path:str,strict:bool,problems:List[str],unknown:List[str]) -> Any:
    if not isinstance(data,dict):
        problems.append(f'{path or "<корень>"}: ожидался объект')
        return base
    hints = get_type_hints(type(base),include_extras=True)
    names = {f.name for f in fields(base)}
    for key in data:
        if key not in names:
            unknown.append(f'{path}{key}')
    updates = {}
    for name in names:
        if name not in data:
            continue
        current = getattr(base,name)
        if is_dataclass(current):
            updates[name] = _Build(current,data[name],f'{path}{name}.',strict,problems,unknown)
        else:
            updates[name] = _Coerce(data[name],hints[name],f'{path}{name}',problems)
    return replace(base,**updates)

def _CheckDefaults(obj:Any,path:str,problems:List[str]) -> None:
    # Ограничения для значений, пришедших из умолчаний, проверяются тем же кодом
    hints = get_type_hints(type(obj),include_extras=True)
    for f in fields(obj):
        value = getattr(obj,f.name)
        if is_dataclass(value):
            _CheckDefaults(value,f'{path}{f.name}.',problems)
        elif value is not None:
            _Coerce(value,hints[f.name],f'{path}{f.name}',problems)

def _CrossValidate(config:Config,problems:List[str]) -> None:
    if config.window_size & (config.window_size - 1):
        problems.append(f'window_size: {config.window_size} не степень двойки')
    if config.hop > config.window_size:
        problems.append(f'hop: {config.hop} больше window_size {config.window_size}')
    if config.mel_bins % 8:
        problems.append(f'mel_bins: {config.mel_bins} должно быть кратно 8')
    dHigh = config.semantic_encoder.d_high
    if config.bottleneck.d_low >= dHigh:
        problems.append(f'bottleneck.d_low: {config.bottleneck.d_low} должно быть меньше semantic_encoder.d_high {dHigh}')
    tokenizer = config.tokenizer
    if tokenizer.semantic_source == 'bottleneck' and tokenizer.d != config.bottleneck.d_low:
        problems.append(f'tokenizer.d: {tokenizer.d} должно совпадать с bottleneck.d_low {config.bottleneck.d_low}')
    if tokenizer.semantic_source == 'channel_merge' and dHigh % tokenizer.d:
        problems.append(f'tokenizer.d: {tokenizer.d} должно делить semantic_encoder.d_high {dHigh}')
    for i,weight in enumerate(tokenizer.kl_sweep):
        if weight not in KL_WEIGHT_GRID:
            problems.append(f'tokenizer.kl_sweep[{i}]: {weight} не из сетки {list(KL_WEIGHT_GRID)}')
    proportions = config.corpus.proportions
    for family in proportions:
        if family not in ('speech','music','audio'):
            problems.append(f'corpus.proportions.{family}: неизвестное семейство')
    if proportions and abs(sum(proportions.values()) - 1.0) > 1e-6:
        problems.append(f'corpus.proportions: сумма долей {sum(proportions.values())} не равна 1')
    if config.analysis.pca_retained > dHigh and config.analysis.features == 'semantic':
        problems.append(f'analysis.pca_retained: {config.analysis.pca_retained} больше размерности {dHigh}')

def config_from_dict(data:Any,strict:bool=True,log:Any=None) -> Config:
    log = log or NullLog()
    problems:List[str] = []
    unknown:List[str] = []
    config = _Build(Config(),data,'',strict,problems,unknown)
    for key in unknown:
        if strict:
            problems.append(f'{key}: неизвестный ключ')
        else:
            log.Warn('Config',f'Неизвестный ключ пропущен: {key}')
    if not problems:
        _CheckDefaults(config,'',problems)
        _CrossValidate(config,problems)
    if problems:
        raise ConfigValidationError(problems)
    return config

def parse_config(path:Optional[str],strict:bool=True,log:Any=None) -> Config:
    """Разбор JSON-файла; отсутствующие поля берутся из умолчаний"""
    if path is None:
        return config_from_dict({},strict,log)
    if not os.path.isfile(path):
        raise ConfigValidationError([f'{path}: файл конфигурации не найден'])
    try:
        with open(path,'rb') as f:
            data = json.load(f)
    except (json.JSONDecodeError,UnicodeDecodeError) as e:
        raise ConfigValidationError([f'{path}: некорректный JSON ({e})']) from None
    return config_from_dict(data,strict,log)

def config_to_dict(config:Config) -> Dict[str,Any]:
    return asdict(config)

def config_echo(config:Config) -> str:
    return json.dumps(config_to_dict(config),sort_keys=True,ensure_ascii=False)

#----------------------------------------------------------------
STRUCTURAL_FIELDS:Tuple[str,...] = (
    'sample_rate','hop','window_size','mel_bins',
    'semantic_encoder.seed','semantic_encoder.d_high','semantic_encoder.hidden',
    'bottleneck.d_low','bottleneck.hidden',
    'tokenizer.d','tokenizer.channels','tokenizer.encoder_channels','tokenizer.decoder_blocks',
    'tokenizer.disc_channels','tokenizer.semantic_source',
)

def _Lookup(data:Dict[str,Any],dotted:str) -> Any:
    for part in dotted.split('.'):
        if not isinstance(data,dict):
            return None
        data = data.get(part)
    return data

def incompatible_fields(stored:Dict[str,Any],current:Dict[str,Any],
                        names:Tuple[str,...]=STRUCTURAL_FIELDS) -> List[str]:
    """Поля, задающие форму модели, которые различаются"""
    return [name for name in names if _Lookup(stored,name) != _Lookup(current,name)]
