from fastapi import Request, status
from fastapi.responses import JSONResponse
import logging

from app.core.exceptions import ParetoMCTSError

logger = logging.getLogger(__name__)


def setup_error_handlers(app):
    @app.exception_handler(ParetoMCTSError)
    async def library_exception_handler(request: Request, exc: ParetoMCTSError):
        logger.warning(f"Rejected {request.url.path}: {type(exc).__name__}: {exc}")
        return JSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            content={"detail": str(exc), "error": type(exc).__name__}
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        logger.warning(f"Rejected {request.url.path}: {exc}")
        return JSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            content={"detail": str(exc)}
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(request: Request, exc: Exception):
        logger.error(f"Unexpected error: {str(exc)}")
        return JSONResponse(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            content={"detail": "An unexpected error occurred"}
        )
