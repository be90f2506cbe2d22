"""
命令行模块
"""
from .bench_cli import build_parser, run

__all__ = ['build_parser', 'run']
