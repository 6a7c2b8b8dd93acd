# -*- coding: utf-8 -*-
"""
Модуль вывода информации

CsvHistoryWriter - построчная история обучения, JsonReportWriter -
отчет анализа или оценки одним JSON-документом.
"""

from abc import ABCMeta,abstractmethod
import csv,json,os
from typing import Any,Dict,List,NoReturn,Optional

REPORT_FORMAT_VERSION:int = 1

#------------------------------------------------------------------------------
class _AbstractOutputWriter(metaclass=ABCMeta):
    def __init__(self,paths:dict):
        self._caseName:str = paths.get('CASENAME','')
        self._caseFolder:str = paths.get('CASEFOLDER','')
        self._moduleName:str = paths.get('MODULENAME','')
        self._outputPath:str = paths.get('OUTPUTPATH','')

        self._fieldsDescription:Optional[dict] = None
        self._recordFields:Optional[dict] = None
        self._fields:tuple = ()

        self._info:dict = {}

    @property
    def OutputPath(self) -> str:
        return self._outputPath

    def SetFields(self,fieldsDescription:dict,recordFields:dict) -> NoReturn:
        self._fieldsDescription = fieldsDescription
        self._recordFields = recordFields
        self._fields = tuple(recordFields.keys())

    def SetInfo(self,info:dict) -> NoReturn:
        self._info = info

    def _PrepareFolder(self) -> NoReturn:
        folder = os.path.dirname(self._outputPath)
        if folder:
            os.makedirs(folder,exist_ok=True)

    @abstractmethod
    def WriteRecord(self,record:Any) -> NoReturn:
        pass

    @abstractmethod
    def WriteMeta(self) -> NoReturn:
        pass

    @abstractmethod
    async def CloseOutput(self) -> NoReturn:
        pass

#------------------------------------------------------------------------------
class CsvHistoryWriter(_AbstractOutputWriter):
    """Записи - словари с ключами из recordFields; порядок столбцов фиксирован"""
    def __init__(self,paths:dict):
        super().__init__(paths)
        self._records:List[Dict[str,Any]] = []

    def WriteRecord(self,record:Dict[str,Any]) -> NoReturn:
        self._records.append({name:record.get(name,'') for name in self._fields})

    def WriteMeta(self) -> NoReturn:
        # Описание столбцов рядом с историей: <имя>.meta.json
        if self._fieldsDescription is None:
            return
        self._PrepareFolder()
        with open(f'{self._outputPath}.meta.json','w',encoding='utf-8') as f:
            json.dump({'fields':self._fieldsDescription,'info':self._info},f,sort_keys=True,indent=2,ensure_ascii=False)
            f.write('\n')

    async def CloseOutput(self) -> NoReturn:
        self._PrepareFolder()
        with open(self._outputPath,'w',encoding='utf-8',newline='') as f:
            writer = csv.DictWriter(f,fieldnames=list(self._fields),lineterminator='\n')
            writer.writeheader()
            for record in self._records:
                writer.writerow({key:(repr(value) if isinstance(value,float) else value)
                                 for key,value in record.items()})

#------------------------------------------------------------------------------
class JsonReportWriter(_AbstractOutputWriter):
    """Отчет: format_version, report (вид), info, sections"""
    def __init__(self,paths:dict):
        super().__init__(paths)
        self._sections:Dict[str,Any] = {}

    def WriteRecord(self,record:Dict[str,Any]) -> NoReturn:
        self._sections.update(record)

    def WriteMeta(self) -> NoReturn:
        self._sections.setdefault('info',self._info)

    def Document(self) -> Dict[str,Any]:
        document = {'format_version':REPORT_FORMAT_VERSION,'report':self._moduleName}
        document.update(self._sections)
        return document

    async def CloseOutput(self) -> NoReturn:
        self._PrepareFolder()
        with open(self._outputPath,'w',encoding='utf-8') as f:
            json.dump(self.Document(),f,sort_keys=True,indent=2,ensure_ascii=False)
            f.write('\n')
