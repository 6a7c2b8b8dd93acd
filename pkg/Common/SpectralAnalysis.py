# -*- coding: utf-8 -*-
"""
Модуль анализа сжимаемости последовательностей признаков

Ковариация по всем кадрам набора, собственные значения методом Якоби,
эффективный ранг, число главных компонент для доли дисперсии и два
способа понижения размерности без обучения: усреднение групп каналов
и проекция на главные компоненты.
"""

from dataclasses import dataclass,field
from typing import Dict,Iterable,List,Optional,Sequence,Tuple,Union

import numpy as np

from Common.Dsp import FeatureSequence
from Common.Errors import (ConfigValidationError,EigenConvergenceError,IndivisibleDimensionError,
                           InsufficientFramesError,NegativeSpectrumError,NonSymmetricError,RetainedDimensionError,
                           ZeroSpectrumError)

JACOBI_TOLERANCE:float = 1e-10
JACOBI_MAX_SWEEPS:int = 100
SYMMETRY_TOLERANCE:float = 1e-8
NEGATIVE_TOLERANCE:float = 1e-8
DEFAULT_FRAME_CAP:int = 1_000_000

FramesLike = Union[FeatureSequence,np.ndarray]

def _Values(frames:FramesLike) -> np.ndarray:
    values = frames.values if isinstance(frames,FeatureSequence) else np.asarray(frames)
    return np.asarray(values,dtype=np.float64)

#----------------------------------------------------------------
@dataclass
class SpectrumStats():
    eigenvalues:np.ndarray
    probabilities:np.ndarray
    effective_rank:float
    k_alpha:Dict[float,int]

    def ToDict(self) -> Dict:
        return {'dim':int(self.eigenvalues.size),
                'effective_rank':float(self.effective_rank),
                'k_alpha':{f'{alpha:g}':int(k) for alpha,k in sorted(self.k_alpha.items())},
                'eigenvalues':[float(v) for v in self.eigenvalues]}

@dataclass
class PcaProjection():
    mean:np.ndarray
    components:np.ndarray
    retained:int

#----------------------------------------------------------------
class CovarianceAccumulator():
    """Потоковая ковариация с попарным слиянием частичных сумм"""
    def __init__(self,dim:Optional[int]=None):
        self.count:int = 0
        self.mean:Optional[np.ndarray] = None
        self.scatter:Optional[np.ndarray] = None
        self.dim:Optional[int] = dim

    def Update(self,frames:FramesLike) -> 'CovarianceAccumulator':
        values = _Values(frames)
        if values.ndim != 2 or values.shape[0] == 0:
            return self
        batch = CovarianceAccumulator(values.shape[1])
        batch.count = values.shape[0]
        batch.mean = values.mean(axis=0)
        centered = values - batch.mean
        batch.scatter = centered.T @ centered
        return self.Merge(batch)

    def Merge(self,other:'CovarianceAccumulator') -> 'CovarianceAccumulator':
        if other.count == 0:
            return self
        if self.count == 0:
            self.count,self.mean,self.scatter,self.dim = other.count,other.mean.copy(),other.scatter.copy(),other.dim
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.scatter = self.scatter + other.scatter + np.outer(delta,delta) * (self.count * other.count / total)
        self.mean = self.mean + delta * (other.count / total)
        self.count = total
        return self

    def Covariance(self) -> np.ndarray:
        if self.count < 2:
            raise InsufficientFramesError(self.count,2)
        return self.scatter / (self.count - 1)

def covariance(frames:Iterable[FramesLike]) -> np.ndarray:
    """Несмещенная ковариация по всем кадрам набора (деление на N-1)"""
    accumulator = CovarianceAccumulator()
    for item in frames:
        accumulator.Update(item)
    return accumulator.Covariance()

#----------------------------------------------------------------
def eig_sym(matrix:np.ndarray) -> Tuple[np.ndarray,np.ndarray]:
    """
    Циклический метод Якоби для симметричной матрицы

    Останов, когда норма Фробениуса внедиагональной части меньше
    1e-10 * ||A||_F; не более 100 проходов. Возвращает собственные
    значения по убыванию и собственные векторы в столбцах.
    """
    a = np.array(matrix,dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSymmetricError(float('inf'))
    scale = max(1.0,float(np.max(np.abs(a)))) if a.size else 1.0
    asymmetry = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise NonSymmetricError(asymmetry)
    a = 0.5 * (a + a.T)
    dim = a.shape[0]
    vectors = np.eye(dim)
    total = float(np.linalg.norm(a))
    if total == 0.0:
        return np.zeros(dim),vectors

    converged = False
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2),0.0)))
        if off < JACOBI_TOLERANCE * total:
            converged = True
            break
        if sweep == JACOBI_MAX_SWEEPS:
            break
        for p in range(dim - 1):
            for q in range(p + 1,dim):
                apq = a[p,q]
                if apq == 0.0:
                    continue
                theta = (a[q,q] - a[p,p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colP = a[:,p].copy()
                colQ = a[:,q].copy()
                a[:,p] = c * colP - s * colQ
                a[:,q] = s * colP + c * colQ
                rowP = a[p,:].copy()
                rowQ = a[q,:].copy()
                a[p,:] = c * rowP - s * rowQ
                a[q,:] = s * rowP + c * rowQ
                a[p,q] = 0.0
                a[q,p] = 0.0
                vecP = vectors[:,p].copy()
                vecQ = vectors[:,q].copy()
                vectors[:,p] = c * vecP - s * vecQ
                vectors[:,q] = s * vecP + c * vecQ

    if not converged:
        raise EigenConvergenceError(JACOBI_MAX_SWEEPS,off)

    values = np.diag(a).copy()
    order = np.argsort(-values,kind='stable')
    values = values[order]
    vectors = vectors[:,order]

    top = max(float(values[0]),0.0)
    if values[-1] < -NEGATIVE_TOLERANCE * top:
        raise NegativeSpectrumError(float(values[-1]))
    values = np.maximum(values,0.0)
    return values,vectors

#----------------------------------------------------------------
def _CheckSpectrum(eigenvalues:Sequence[float]) -> np.ndarray:
    values = np.asarray(eigenvalues,dtype=np.float64)
    if np.any(values < 0):
        raise NegativeSpectrumError(float(values.min()))
    if values.sum() <= 0:
        raise ZeroSpectrumError()
    return values

def effective_rank(eigenvalues:Sequence[float]) -> float:
    """exp(-sum p log p), p = lambda / sum(lambda); нулевые p не учитываются"""
    values = _CheckSpectrum(eigenvalues)
    p = values / values.sum()
    nonzero = p[p > 0]
    return float(np.exp(-np.sum(nonzero * np.log(nonzero))))

def variance_components(eigenvalues:Sequence[float],alpha:float) -> int:
    """Наименьшее k, при котором доля накопленной дисперсии >= alpha"""
    if not 0.0 < alpha <= 1.0:
        raise ConfigValidationError([f'analysis.alphas: {alpha} вне (0, 1]'])
    values = _CheckSpectrum(np.sort(np.asarray(eigenvalues,dtype=np.float64))[::-1])
    cumulative = np.cumsum(values) / values.sum()
    return int(np.argmax(cumulative >= alpha - 1e-12) + 1)

def spectrum_stats(eigenvalues:Sequence[float],alphas:Sequence[float]) -> SpectrumStats:
    values = np.sort(_CheckSpectrum(eigenvalues))[::-1]
    return SpectrumStats(eigenvalues=values,
                         probabilities=values / values.sum(),
                         effective_rank=effective_rank(values),
                         k_alpha={float(alpha):variance_components(values,alpha) for alpha in alphas})

#----------------------------------------------------------------
def channel_merge(frames:FramesLike,group:int) -> FramesLike:
    """Канал j выхода = среднее входных каналов [j*group, (j+1)*group)"""
    values = _Values(frames)
    dim = values.shape[-1]
    if group <= 0 or dim % group:
        raise IndivisibleDimensionError(dim,group)
    merged = values.reshape(values.shape[:-1] + (dim // group,group)).mean(axis=-1)
    if isinstance(frames,FeatureSequence):
        return FeatureSequence(merged,frames.frame_rate)
    return merged

def pca_fit(frames:Iterable[FramesLike],retained:int,frame_cap:int=DEFAULT_FRAME_CAP,seed:int=0) -> PcaProjection:
    """
    Главные компоненты по объединенным кадрам набора

    При превышении frame_cap кадры отбираются резервуаром: каждому кадру
    сопоставляется случайный ключ, сохраняются frame_cap наименьших.
    """
    rng = np.random.default_rng(seed)
    kept:Optional[np.ndarray] = None
    keys:Optional[np.ndarray] = None
    for item in frames:
        values = _Values(item)
        if values.ndim != 2 or values.shape[0] == 0:
            continue
        itemKeys = rng.random(values.shape[0])
        kept = values if kept is None else np.concatenate([kept,values])
        keys = itemKeys if keys is None else np.concatenate([keys,itemKeys])
        if kept.shape[0] > frame_cap:
            order = np.argsort(keys,kind='stable')[:frame_cap]
            order.sort()
            kept,keys = kept[order],keys[order]

    count = 0 if kept is None else kept.shape[0]
    if kept is not None and retained > kept.shape[1]:
        raise RetainedDimensionError(retained,kept.shape[1])
    if count <= retained or count < 2:
        raise InsufficientFramesError(count,max(retained + 1,2))

    accumulator = CovarianceAccumulator().Update(kept)
    _,vectors = eig_sym(accumulator.Covariance())
    return PcaProjection(mean=accumulator.mean,components=vectors[:,:retained].T.copy(),retained=retained)

def pca_project(projection:PcaProjection,frames:FramesLike) -> FramesLike:
    values = _Values(frames)
    projected = (values - projection.mean) @ projection.components.T
    if isinstance(frames,FeatureSequence):
        return FeatureSequence(projected,frames.frame_rate)
    return projected

#----------------------------------------------------------------
#-------------------------ОТЧЕТ АНАЛИЗА--------------------------
#----------------------------------------------------------------
def _StatsOf(accumulator:CovarianceAccumulator,alphas:Sequence[float]) -> Dict:
    values,_ = eig_sym(accumulator.Covariance())
    return spectrum_stats(values,alphas).ToDict()

def feature_report(families:Dict[str,List[FramesLike]],alphas:Sequence[float],merge_group:int,
                   pca_retained:int,frame_cap:int=DEFAULT_FRAME_CAP,seed:int=0,log=None) -> Dict:
    """
    Спектр ковариации признаков по семействам и по всему корпусу

    Для каждого набора считаются исходные признаки, слияние каналов и
    PCA-проекция (компоненты оцениваются по всему корпусу). Семейства с
    недостаточным числом кадров пропускаются с предупреждением.
    """
    pooled:List[FramesLike] = [item for name in sorted(families) for item in families[name]]
    projection = pca_fit(pooled,pca_retained,frame_cap,seed)

    def Describe(items:List[FramesLike]) -> Dict:
        raw,merged,projected = CovarianceAccumulator(),CovarianceAccumulator(),CovarianceAccumulator()
        for item in items:
            raw.Update(item)
            merged.Update(channel_merge(item,merge_group))
            projected.Update(pca_project(projection,item))
        return {'frames':raw.count,
                'raw':_StatsOf(raw,alphas),
                'channel_merge':_StatsOf(merged,alphas),
                'pca':_StatsOf(projected,alphas)}

    report:Dict = {'families':{}}
    for name in sorted(families):
        try:
            report['families'][name] = Describe(families[name])
        except (InsufficientFramesError,ZeroSpectrumError) as e:
            if log is not None:
                log.Warn('SpectralAnalysis',f'Семейство {name} пропущено: {e}')
    report['pooled'] = Describe(pooled)
    report.update({key:report['pooled']['raw'][key] for key in ('dim','effective_rank','k_alpha','eigenvalues')})
    report['reductions'] = {'merge_group':merge_group,'pca_retained':pca_retained}
    return report
