from .tdw_utils import BadDimensions, TDWUtils

Utils = TDWUtils

__all__ = ["Utils", "TDWUtils", "BadDimensions"]
