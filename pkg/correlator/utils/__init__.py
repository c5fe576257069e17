__all__ = ["SingletonMeta"]

from .singleton import SingletonMeta
