from .constellation import router as constellation_router

__all__ = ["constellation_router"]
