"""HTTP client for the service; the CLI is built entirely on top of this.

With no base_url the client mounts the application in-process through an
ASGI transport, so CLI use needs no running server.  Error bodies from the
service are turned back into the package's exception types.
"""

from __future__ import annotations

import asyncio

import httpx

from .errors import (
    AccuracyError,
    DomainError,
    InfeasibleError,
    ParameterError,
    PoleError,
    SearchExhaustedError,
)

_DOMAIN_ERRORS = {
    cls.__name__: cls
    for cls in (PoleError, AccuracyError, SearchExhaustedError, InfeasibleError, DomainError)
}


class ServiceClient:
    def __init__(self, base_url: str | None = None, timeout: float = 3600.0):
        self.base_url = base_url
        self._timeout = timeout
        self._sync: httpx.Client | None = None
        if base_url is not None:
            self._sync = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self):
        if self._sync is not None:
            self._sync.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def _request(self, method: str, path: str, payload: dict | None = None):
        if self._sync is not None:
            resp = self._sync.request(method, path, json=payload)
        else:
            from .service.app import app

            async def go():
                transport = httpx.ASGITransport(app=app)
                async with httpx.AsyncClient(
                    transport=transport, base_url="http://naklab", timeout=self._timeout
                ) as client:
                    return await client.request(method, path, json=payload)

            resp = asyncio.run(go())
        if resp.status_code >= 400:
            self._raise_mapped(resp)
        return resp.json()

    @staticmethod
    def _raise_mapped(resp: httpx.Response):
        try:
            body = resp.json()
        except ValueError:
            raise DomainError(f"service error {resp.status_code}: {resp.text[:200]}")
        error_type = body.get("error_type", "")
        message = body.get("message", f"service error {resp.status_code}")
        if error_type in ("ParameterError", "ValidationError"):
            raise ParameterError(message)
        raise _DOMAIN_ERRORS.get(error_type, DomainError)(message)

    def get(self, path: str) -> dict:
        return self._request("GET", path)

    def post(self, path: str, payload: dict) -> dict:
        return self._request("POST", path, payload)

    def health(self) -> dict:
        return self.get("/v1/health")
