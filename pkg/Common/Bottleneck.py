# -*- coding: utf-8 -*-
"""
Модуль семантического узкого горла

Компрессор C и восстановитель R - двухслойные перцептроны. Обучение
сочетает потерю восстановления нормированных кадров и потерю временных
отношений (совпадение матриц Грама косинусных сходств кадров).
"""

from typing import Any,Callable,Dict,List,Optional,Sequence,Tuple,Union

import numpy as np

from Common.Config import incompatible_fields
from Common.Dsp import FeatureSequence
from Common.Errors import (CheckpointConfigError,CheckpointFormatError,ConfigValidationError,
                           DimensionMismatchError,EmptyCorpusError,FrameCountMismatchError,
                           NonFiniteLossError,ShapeError)
from Common.Grad import Tensor,frame_normalize,l2_norm,stop_gradient
from Common.Layers import Mlp2,Module
from Common.Optim import AdamW,CosineSchedule,OptimizerState
from Common.Routines import ArrayContainer,NullLog

#----------------------------------------------------------------
class SemanticBottleneck(Module):
    def __init__(self,d_high:int,d_low:int,hidden:int,rng:np.random.Generator):
        if d_low >= d_high:
            raise ConfigValidationError([f'bottleneck.d_low: {d_low} должно быть меньше {d_high}'])
        self.compressor:Mlp2 = Mlp2(d_high,hidden,d_low,rng)
        self.restorer:Mlp2 = Mlp2(d_low,hidden,d_high,rng)
        self.d_high:int = d_high
        self.d_low:int = d_low

def build_bottleneck(d_high:int,d_low:int,hidden:Optional[int],seed:int) -> SemanticBottleneck:
    return SemanticBottleneck(d_high,d_low,hidden or d_high,np.random.default_rng(seed))

#----------------------------------------------------------------
def _AsTensor(z:Any) -> Tensor:
    if isinstance(z,Tensor):
        return z
    if isinstance(z,FeatureSequence):
        return Tensor(z.values)
    return Tensor(z)

def compress(model:SemanticBottleneck,z_high:Union[Tensor,FeatureSequence,np.ndarray]):
    """z_s^l = C(norm(z_s^h)) покадрово; тип результата повторяет тип входа"""
    z = _AsTensor(z_high)
    if z.shape[-1] != model.d_high:
        raise DimensionMismatchError(model.d_high,z.shape[-1])
    out = model.compressor(frame_normalize(z))
    if isinstance(z_high,FeatureSequence):
        return FeatureSequence(out.values.astype(np.float64),z_high.frame_rate)
    return out

def restore(model:SemanticBottleneck,z_low:Union[Tensor,FeatureSequence,np.ndarray]):
    z = _AsTensor(z_low)
    if z.shape[-1] != model.d_low:
        raise DimensionMismatchError(model.d_low,z.shape[-1])
    out = model.restorer(z)
    if isinstance(z_low,FeatureSequence):
        return FeatureSequence(out.values.astype(np.float64),z_low.frame_rate)
    return out

#----------------------------------------------------------------
def _Batched(z:Tensor) -> Tensor:
    return z.Reshape(1,*z.shape) if z.ndim == 2 else z

def mean_scaled_frobenius(residual:Tensor) -> Tensor:
    """||R||_F / sqrt(T*D) на последовательность, среднее по пакету"""
    residual = _Batched(residual)
    batch,frames,dim = residual.shape
    norms = l2_norm(residual.Reshape(batch,frames * dim),axis=-1)
    return (norms / np.sqrt(frames * dim)).Mean()

def loss_recon(z_hat:Tensor,z_target:Tensor) -> Tensor:
    z_hat,z_target = _AsTensor(z_hat),_AsTensor(z_target)
    if z_hat.shape != z_target.shape:
        raise ShapeError('loss_recon',z_hat.shape,z_target.shape)
    return mean_scaled_frobenius(frame_normalize(z_hat) - frame_normalize(stop_gradient(z_target)))

def gram(z:Tensor) -> Tensor:
    """Матрица косинусных сходств кадров: norm(Z) norm(Z)^T"""
    normalized = frame_normalize(_AsTensor(z))
    return normalized @ normalized.Transpose()

def loss_time_relation(z_low:Tensor,z_high:Tensor) -> Tensor:
    """||G^l - sg(G^h)||_F / T, среднее по пакету"""
    z_low,z_high = _Batched(_AsTensor(z_low)),_Batched(_AsTensor(z_high))
    if z_low.shape[-2] != z_high.shape[-2] or z_low.shape[0] != z_high.shape[0]:
        raise FrameCountMismatchError(z_low.shape[-2],z_high.shape[-2])
    batch,frames = z_low.shape[0],z_low.shape[-2]
    residual = gram(z_low) - gram(stop_gradient(z_high))
    norms = l2_norm(residual.Reshape(batch,frames * frames),axis=-1)
    return (norms / frames).Mean()

def sembo_terms(model:SemanticBottleneck,z_high:Tensor) -> Tuple[Tensor,Tensor]:
    target = stop_gradient(_AsTensor(z_high))
    z_low = compress(model,target)
    return loss_recon(restore(model,z_low),target),loss_time_relation(z_low,target)

def sembo_objective(model:SemanticBottleneck,z_high:Tensor,lambda_recon:float=1e3,
                    use_time_relation:bool=True) -> Tensor:
    recon,relation = sembo_terms(model,z_high)
    total = recon * lambda_recon
    if use_time_relation:
        total = total + relation
    return total

#----------------------------------------------------------------
def _Crops(rng:np.random.Generator,corpus:List[np.ndarray],batch:int,crop:int) -> np.ndarray:
    picks = rng.integers(0,len(corpus),size=batch)
    out = np.empty((batch,crop,corpus[0].shape[-1]))
    for i,index in enumerate(picks):
        sequence = corpus[index]
        start = int(rng.integers(0,sequence.shape[0] - crop + 1))
        out[i] = sequence[start:start + crop]
    return out

def make_optimizer_state(optimizer:Any,steps:int) -> OptimizerState:
    schedule = CosineSchedule(base_lr=optimizer.base_lr,min_lr=optimizer.min_lr,
                              warmup_steps=optimizer.warmup_steps,
                              max_steps=optimizer.max_steps or steps)
    return OptimizerState(schedule=schedule,beta1=optimizer.beta1,beta2=optimizer.beta2,
                          eps=optimizer.eps,weight_decay=optimizer.weight_decay)

def train_sembo(corpus:Sequence[Union[FeatureSequence,np.ndarray]],config:Any,d_high:int,seed:int,
                log:Any=None,progress:Optional[Callable[[int,int],None]]=None
                ) -> Tuple[SemanticBottleneck,List[Dict[str,float]],OptimizerState]:
    """
    Обучение узкого горла на кадрах замороженного кодировщика

    config - раздел bottleneck конфигурации. Возвращает модель, историю
    потерь по шагам (step, loss_recon, loss_tr, total, lr) и состояние
    оптимизатора.
    """
    log = log or NullLog()
    sequences = [np.asarray(item.values if isinstance(item,FeatureSequence) else item,dtype=np.float64)
                 for item in corpus]
    sequences = [item for item in sequences if item.ndim == 2 and item.shape[0] > 0]
    if not sequences:
        raise EmptyCorpusError('bottleneck')
    crop = config.crop_frames
    # кроп фиксирован, последовательности короче него пропускаются
    longEnough = [item for item in sequences if item.shape[0] >= crop]
    if not longEnough:
        raise EmptyCorpusError(f'bottleneck: нет последовательностей длиной от {crop} кадров')
    if len(longEnough) < len(sequences):
        log.Warn('Bottleneck',f'пропущено последовательностей короче {crop} кадров: {len(sequences) - len(longEnough)}')
    sequences = longEnough

    model = build_bottleneck(d_high,config.d_low,config.hidden,seed)
    optimizer = AdamW(list(model.NamedParameters()),make_optimizer_state(config.optimizer,config.steps))
    rng = np.random.default_rng([seed,1])
    history:List[Dict[str,float]] = []

    for step in range(1,config.steps + 1):
        batch = Tensor(_Crops(rng,sequences,config.batch,crop))
        optimizer.ZeroGrad()
        recon,relation = sembo_terms(model,batch)
        total = recon * config.lambda_recon
        if config.use_time_relation:
            total = total + relation
        for term,value in (('loss_recon',recon),('loss_tr',relation),('total',total)):
            if not np.isfinite(value.values):
                raise NonFiniteLossError(term,step)
        total.Backward()
        lr = optimizer.Step()
        record = {'step':step,'loss_recon':recon.Item(),'loss_tr':relation.Item(),'total':total.Item(),'lr':lr}
        history.append(record)
        if step % config.log_every == 0 or step == config.steps:
            log.Info('Bottleneck',f'шаг {step}: recon={record["loss_recon"]:.6f} tr={record["loss_tr"]:.6f} lr={lr:.2e}')
            if progress is not None:
                progress(step,config.steps)
    return model,history,optimizer.state

#----------------------------------------------------------------
CHECKPOINT_KIND:str = 'bottleneck'
SEMANTIC_FIELDS:Tuple[str,...] = ('sample_rate','hop','window_size','mel_bins','semantic_encoder.seed',
                                  'semantic_encoder.d_high','semantic_encoder.hidden',
                                  'bottleneck.d_low','bottleneck.hidden')

def save_bottleneck(path:str,model:SemanticBottleneck,state:OptimizerState,config:Dict[str,Any],
                    history:Optional[List[Dict[str,float]]]=None) -> None:
    arrays = model.NamedArrays()
    arrays.update(state.NamedArrays('optimizer'))
    ArrayContainer.Save(path,CHECKPOINT_KIND,arrays,config,state.step_count,
                        {'history':history or [],'optimizer_steps':state.step_count})

def load_bottleneck(path:str,config:Optional[Dict[str,Any]]=None) -> Tuple[SemanticBottleneck,Dict[str,Any]]:
    """Загрузка замороженного узкого горла; config - эхо текущего запуска для сверки"""
    contents = ArrayContainer.Load(path,CHECKPOINT_KIND)
    stored = contents.config
    if config is not None:
        fields = incompatible_fields(stored,config,SEMANTIC_FIELDS)
        if fields:
            raise CheckpointConfigError(path,fields)
    try:
        dHigh = int(stored['semantic_encoder']['d_high'])
        dLow = int(stored['bottleneck']['d_low'])
        hidden = stored['bottleneck'].get('hidden')
    except (KeyError,TypeError,ValueError):
        raise CheckpointFormatError(path,'в эхе конфигурации нет размерностей узкого горла') from None
    model = build_bottleneck(dHigh,dLow,hidden,0)
    model.LoadArrays(contents.arrays,source=path)
    model.SetRequiresGrad(False)
    return model,stored
