"""Minimal client for the service.

Without a server URL the requests run against the ASGI app in-process, so the
CLI works standalone while exercising exactly the same request path a remote
deployment would.
"""

from __future__ import annotations

import asyncio
from typing import Optional, Tuple

import httpx

from .app import create_app

_LOCAL_BASE = "http://iwseg.local"


class ServiceClient:
    def __init__(self, server: Optional[str] = None, timeout: float = 600.0):
        self.server = server.rstrip("/") if server else None
        self.timeout = timeout

    def _run_local(self, method: str, path: str, payload: Optional[dict]) -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app(), raise_app_exceptions=False)

        async def go() -> httpx.Response:
            async with httpx.AsyncClient(
                transport=transport, base_url=_LOCAL_BASE, timeout=self.timeout
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())

    def request(self, method: str, path: str, payload: Optional[dict] = None) -> Tuple[int, dict]:
        if self.server is None:
            response = self._run_local(method, path, payload)
        else:
            with httpx.Client(base_url=self.server, timeout=self.timeout) as client:
                response = client.request(method, path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {"detail": response.text}
        return response.status_code, body

    def post(self, path: str, payload: dict) -> Tuple[int, dict]:
        return self.request("POST", path, payload)

    def get(self, path: str) -> Tuple[int, dict]:
        return self.request("GET", path)
