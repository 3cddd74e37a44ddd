# models/execution.py
# Execution plan and partition schedules for the worker pool

from typing import List, Literal, Tuple

from pydantic import BaseModel, Field, model_validator

PartitionKind = Literal['by_band', 'by_pixel_chunk', 'by_triangle_entry', 'rotation_batch']


class ExecPlan(BaseModel):
    """How many workers, which reduction mode, and the fixed task granularity"""
    workers: int = Field(1, ge=1)
    mode: Literal['deterministic', 'fast'] = 'deterministic'
    chunk: int = Field(16384, ge=1, description="Pixels per task in deterministic mode")

    @property
    def deterministic(self):
        return self.mode == 'deterministic'


class PartitionSchedule(BaseModel):
    """Contiguous [start, stop) ranges, one per worker"""
    kind: PartitionKind
    total: int = Field(..., ge=0)
    assignments: List[Tuple[int, int]]

    @model_validator(mode='after')
    def exact_cover(self):
        position = 0
        for start, stop in self.assignments:
            if start != position or stop < start:
                raise ValueError(f'ranges must be contiguous and ordered, got {self.assignments}')
            position = stop
        if position != self.total:
            raise ValueError(f'ranges cover 0..{position}, expected 0..{self.total}')
        return self

    @property
    def workers(self):
        return len(self.assignments)

    def sizes(self):
        return [stop - start for start, stop in self.assignments]

    def nonempty(self):
        return [(start, stop) for start, stop in self.assignments if stop > start]
