from .figures import FigureSpec, render
from .schemas import SchemaError

__all__ = ["FigureSpec", "render", "SchemaError"]
__version__ = "0.1.0"
