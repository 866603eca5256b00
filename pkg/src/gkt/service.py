"""Guidance-as-a-service.

POST /v1/guidance accepts a list of questions plus a projection mode
and budget, and answers with the guidance texts, their token counts,
and the batched decode latency. Questions from concurrent calls
coalesce into shared batches: a batch leaves when it is full or when
the linger timeout (default 50 ms) expires, whichever comes first.
Requests carry no per-user generation settings; those stay an
edge-side concern.

A backend failure turns into a 502 for the calls whose questions were
in the failed batch; the service itself keeps running. Malformed
bodies get a 400 naming the offending field path. Shutdown waits for
in-flight batches to finish.
"""
from __future__ import annotations

import asyncio
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import Backend
from .domain import GenerationSettings, ProjectionMode, ProjectionSpec
from .errors import BackendError
from .guidance import build_teacher_prompt

DEFAULT_LINGER_S = 0.05


class GuidanceRequest(BaseModel):
    questions: list[str] = Field(min_length=1)
    mode: str = Field(pattern="^(cutoff|concise|hint)$")
    budget: int = Field(ge=1)


class GuidanceResponse(BaseModel):
    guidance: list[str]
    token_counts: list[int]
    batch_latency_s: float


@dataclass
class _Item:
    prompt: str
    budget: int
    future: asyncio.Future


class GuidanceBatcher:
    """Single logical queue; dispatch is serialized in one background task."""

    def __init__(self, backend: Backend, capacity: int, linger_s: float) -> None:
        self.backend = backend
        self.capacity = capacity
        self.linger_s = linger_s
        self.batches_dispatched = 0
        self._queue: asyncio.Queue[_Item] = asyncio.Queue()
        self._task: asyncio.Task | None = None
        # A dequeued item whose budget differs from the open batch; it
        # seeds the next batch so every dispatched batch is homogeneous.
        self._carry: _Item | None = None

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self._run())

    async def stop(self) -> None:
        # Drain: in-flight work finishes before the task is cancelled.
        await self._queue.join()
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass

    async def submit(self, prompt: str, budget: int) -> tuple[str, int, float]:
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        await self._queue.put(_Item(prompt, budget, future))
        return await future

    async def _collect(self) -> list[_Item]:
        if self._carry is not None:
            first, self._carry = self._carry, None
        else:
            first = await self._queue.get()
        batch = [first]
        deadline = asyncio.get_running_loop().time() + self.linger_s
        while len(batch) < self.capacity:
            remaining = deadline - asyncio.get_running_loop().time()
            if remaining <= 0:
                break
            try:
                item = await asyncio.wait_for(self._queue.get(), timeout=remaining)
            except asyncio.TimeoutError:
                break
            if item.budget != first.budget:
                self._carry = item
                break
            batch.append(item)
        return batch

    async def _run(self) -> None:
        while True:
            batch = await self._collect()
            try:
                await self._dispatch(batch)
            finally:
                for _ in batch:
                    self._queue.task_done()

    async def _dispatch(self, batch: list[_Item]) -> None:
        batch_index = self.batches_dispatched
        self.batches_dispatched += 1
        settings = GenerationSettings(max_new_tokens=batch[0].budget)
        prompts = [item.prompt for item in batch]
        start = time.perf_counter()
        try:
            outputs = await asyncio.to_thread(self.backend.generate_batch, prompts, settings)
        except Exception as exc:
            if isinstance(exc, BackendError) and exc.batch_index is None:
                exc.batch_index = batch_index
            for item in batch:
                if not item.future.done():
                    item.future.set_exception(exc)
            return
        wall = time.perf_counter() - start
        duration = (
            self.backend.batch_duration(outputs) if self.backend.is_simulated else wall
        )
        for item, output in zip(batch, outputs):
            if not item.future.done():
                item.future.set_result((output.text, output.token_count, duration))


def create_app(
    teacher: Backend,
    few_shot_prompt: str = "",
    capacity: int = 24,
    linger_s: float = DEFAULT_LINGER_S,
) -> FastAPI:
    batcher = GuidanceBatcher(teacher, capacity, linger_s)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        batcher.start()
        yield
        await batcher.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.batcher = batcher

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request, exc: RequestValidationError):
        first = exc.errors()[0]
        path = ".".join(str(part) for part in first["loc"] if part != "body")
        return JSONResponse(
            status_code=400,
            content={"error": "invalid request body", "field": path, "message": first["msg"]},
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/v1/guidance", response_model=GuidanceResponse)
    async def guidance(body: GuidanceRequest):
        projection = ProjectionSpec(
            mode=ProjectionMode(body.mode), guidance_token_budget=body.budget
        )
        prompts = [
            build_teacher_prompt(q, few_shot_prompt, projection) for q in body.questions
        ]
        tasks = [batcher.submit(p, body.budget) for p in prompts]
        settled = await asyncio.gather(*tasks, return_exceptions=True)
        for outcome in settled:
            if isinstance(outcome, BackendError):
                return JSONResponse(
                    status_code=502,
                    content={
                        "error": f"{type(outcome).__name__}: {outcome}",
                        "batch_index": outcome.batch_index,
                    },
                )
            if isinstance(outcome, BaseException):
                raise outcome
        texts = [text for text, _, _ in settled]
        counts = [count for _, count, _ in settled]
        latency = max((lat for _, _, lat in settled), default=0.0)
        return GuidanceResponse(
            guidance=texts, token_counts=counts, batch_latency_s=latency
        )

    return app
