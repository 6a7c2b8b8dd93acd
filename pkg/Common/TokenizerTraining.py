# -*- coding: utf-8 -*-
"""
Модуль обучения токенизатора

Шаги генератора и дискриминатора чередуются: сначала дискриминатор на
sg(x_hat), затем генератор при замороженном дискриминаторе. Один
генератор случайных чисел с зерном задает и кропы, и шум
репараметризации; его состояние хранится в контрольной точке.
"""

from dataclasses import replace
from typing import Any,Callable,Dict,List,Optional,Sequence,Tuple,Union

import numpy as np

from Common.Bottleneck import SemanticBottleneck,build_bottleneck,make_optimizer_state
from Common.Config import Config,config_from_dict,config_to_dict,incompatible_fields
from Common.Dsp import AudioBuffer,fit_length
from Common.Errors import CheckpointConfigError,EmptyCorpusError
from Common.Grad import Tensor
from Common.Optim import AdamW,OptimizerState
from Common.Routines import ArrayContainer,ContainerContents,NullLog
from Common.Tokenizer import TokenizerModel,build_tokenizer,forward
from Common.TokenizerLosses import discriminator_loss,generator_loss

CHECKPOINT_KIND:str = 'tokenizer'
HISTORY_FIELDS:Tuple[str,...] = ('step','mel','sem_high','sem_low','kl','fm','adv','disc','generator',
                                 'weighted_mel','weighted_sem','weighted_kl','weighted_fm','weighted_adv',
                                 'lr_generator','lr_discriminator')

#----------------------------------------------------------------
class TrainingState():
    """Модель, два оптимизатора и генератор случайных чисел одного запуска"""
    def __init__(self,model:TokenizerModel,config:Config,seed:int):
        steps = config.tokenizer.steps
        self.model:TokenizerModel = model
        self.generator:AdamW = AdamW(model.GeneratorParameters(),
                                     make_optimizer_state(config.tokenizer.optimizer,steps))
        self.discriminator:AdamW = AdamW(model.DiscriminatorParameters(),
                                         make_optimizer_state(config.tokenizer.optimizer,steps))
        self.rng:np.random.Generator = np.random.default_rng([seed,3])
        self.step:int = 0
        self.history:List[Dict[str,float]] = []

    def Arrays(self) -> Dict[str,np.ndarray]:
        arrays = self.model.NamedArrays()
        arrays.update(self.generator.state.NamedArrays('optimizer.generator'))
        arrays.update(self.discriminator.state.NamedArrays('optimizer.discriminator'))
        return arrays

    def Meta(self) -> Dict[str,Any]:
        return {'rng':self.rng.bit_generator.state,
                'history':self.history,
                'optimizer_steps':{'generator':self.generator.state.step_count,
                                   'discriminator':self.discriminator.state.step_count}}

    def Restore(self,contents:ContainerContents,source:str) -> None:
        self.model.LoadArrays(contents.arrays,source=source)
        steps = contents.meta.get('optimizer_steps',{})
        self.generator.state.LoadArrays(contents.arrays,'optimizer.generator',int(steps.get('generator',0)))
        self.discriminator.state.LoadArrays(contents.arrays,'optimizer.discriminator',
                                            int(steps.get('discriminator',0)))
        self.rng.bit_generator.state = contents.meta['rng']
        self.history = list(contents.meta.get('history',[]))
        self.step = contents.step

#----------------------------------------------------------------
def save_tokenizer(path:str,state:TrainingState,config:Config) -> None:
    ArrayContainer.Save(path,CHECKPOINT_KIND,state.Arrays(),config_to_dict(config),state.step,state.Meta())

def load_tokenizer(path:str,config:Optional[Config]=None) -> Tuple[TokenizerModel,Config]:
    """Модель для вывода; конфигурация берется из эха контрольной точки"""
    contents = ArrayContainer.Load(path,CHECKPOINT_KIND)
    stored = config_from_dict(contents.config)
    if config is not None:
        fields = incompatible_fields(contents.config,config_to_dict(config))
        if fields:
            raise CheckpointConfigError(path,fields)
    sembo = None
    if stored.tokenizer.semantic_source == 'bottleneck':
        sembo = build_bottleneck(stored.semantic_encoder.d_high,stored.bottleneck.d_low,
                                 stored.bottleneck.hidden,stored.seed)
    model = build_tokenizer(stored,sembo)
    model.LoadArrays(contents.arrays,source=path)
    return model,stored

#----------------------------------------------------------------
def _Waveforms(corpus:Sequence[Union[AudioBuffer,np.ndarray]]) -> List[np.ndarray]:
    waves = [np.asarray(item.samples if isinstance(item,AudioBuffer) else item,dtype=np.float64)
             for item in corpus]
    return [wave for wave in waves if wave.ndim == 1 and wave.size > 0]

def _Crops(rng:np.random.Generator,waves:List[np.ndarray],batch:int,crop:int) -> np.ndarray:
    picks = rng.integers(0,len(waves),size=batch)
    out = np.empty((batch,crop))
    for i,index in enumerate(picks):
        wave = waves[index]
        if wave.size <= crop:
            out[i] = fit_length(wave,crop)
            continue
        start = int(rng.integers(0,wave.size - crop + 1))
        out[i] = wave[start:start + crop]
    return out

def training_step(state:TrainingState,batch:np.ndarray,step:int) -> Dict[str,float]:
    """Один шаг дискриминатора и один шаг генератора на общем прямом проходе"""
    model = state.model
    state.generator.ZeroGrad()
    state.discriminator.ZeroGrad()
    result = forward(model,batch,state.rng)
    x = Tensor(batch)

    dLoss = discriminator_loss(model,x,result.x_hat,step)
    dLoss.Backward()
    discriminatorLr = state.discriminator.Step()

    model.discriminator.SetRequiresGrad(False)
    try:
        total,breakdown = generator_loss(model,x,result,step)
        total.Backward()
    finally:
        model.discriminator.SetRequiresGrad(True)
    generatorLr = state.generator.Step()

    breakdown.update({'step':step,'disc':dLoss.Item(),
                      'lr_generator':generatorLr,'lr_discriminator':discriminatorLr})
    return breakdown

def train_tokenizer(corpus:Sequence[Union[AudioBuffer,np.ndarray]],config:Config,
                    sembo:Optional[SemanticBottleneck]=None,log:Any=None,
                    progress:Optional[Callable[[int,int],None]]=None,
                    checkpoint_path:Optional[str]=None,resume_path:Optional[str]=None
                    ) -> Tuple[TokenizerModel,List[Dict[str,float]]]:
    """
    Обучение токенизатора на волнах корпуса

    При checkpoint_path контрольная точка пишется каждые checkpoint_every
    шагов и в конце. resume_path продолжает прерванный запуск с той же
    последовательностью шагов.
    """
    log = log or NullLog()
    waves = _Waveforms(corpus)
    if not waves:
        raise EmptyCorpusError('tokenizer')
    tokenizer = config.tokenizer
    crop = int(round(tokenizer.crop_seconds * config.sample_rate))

    state = TrainingState(build_tokenizer(config,sembo),config,config.seed)
    if resume_path is not None:
        contents = ArrayContainer.Load(resume_path,CHECKPOINT_KIND)
        fields = incompatible_fields(contents.config,config_to_dict(config))
        if fields:
            raise CheckpointConfigError(resume_path,fields)
        state.Restore(contents,resume_path)
        log.Info('TokenizerTraining',f'Продолжение с шага {state.step}: {resume_path}')

    for step in range(state.step + 1,tokenizer.steps + 1):
        record = training_step(state,_Crops(state.rng,waves,tokenizer.batch,crop),step)
        state.history.append({name:record[name] for name in HISTORY_FIELDS})
        state.step = step
        if step % tokenizer.log_every == 0 or step == tokenizer.steps:
            log.Info('TokenizerTraining',
                     f'шаг {step}: mel={record["mel"]:.4f} sem_h={record["sem_high"]:.4f} '
                     f'sem_l={record["sem_low"]:.4f} kl={record["kl"]:.4f} fm={record["fm"]:.4f} '
                     f'adv={record["adv"]:.4f} disc={record["disc"]:.4f} lr={record["lr_generator"]:.2e}')
            if progress is not None:
                progress(step,tokenizer.steps)
        if checkpoint_path and tokenizer.checkpoint_every and step % tokenizer.checkpoint_every == 0:
            save_tokenizer(checkpoint_path,state,config)

    if checkpoint_path:
        save_tokenizer(checkpoint_path,state,config)
    return state.model,state.history

def sweep_configs(config:Config) -> List[Tuple[str,Config]]:
    """Варианты запуска по сетке весов KL; пустая сетка - один запуск"""
    if not config.tokenizer.kl_sweep:
        return [('',config)]
    variants = []
    for weight in config.tokenizer.kl_sweep:
        weights = replace(config.tokenizer.weights,kl=float(weight))
        variants.append((f'kl{weight:g}',replace(config,tokenizer=replace(config.tokenizer,weights=weights))))
    return variants
