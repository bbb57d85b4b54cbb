#!/usr/bin/env python3
"""
API Server Runner
This script ensures the server runs from the correct directory with proper configuration.
"""
import os
import sys
import uvicorn
from pathlib import Path


def main(host: str = None, port: int = None, reload: bool = True):
    # Ensure we're in the correct directory
    root_dir = Path(__file__).parent
    os.chdir(root_dir)

    # Add current directory to Python path
    sys.path.insert(0, str(root_dir))

    from app.core.config import settings

    host = host or settings.SERVER_HOST
    port = port or settings.SERVER_PORT
    print("Starting Pareto MCTS API server...")
    print(f"Working Directory: {os.getcwd()}")
    print(f"Server URL: http://{host}:{port}")
    print(f"Health Check: http://{host}:{port}/health")
    print("Press Ctrl+C to stop the server")

    uvicorn.run(
        "app.main:app",
        host=host,
        port=port,
        reload=reload,
        log_level=settings.LOG_LEVEL.lower()
    )


if __name__ == "__main__":
    main()
