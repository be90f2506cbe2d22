#!/usr/bin/env python3
"""
PSS 实验台 - 主程序入口
"""
import logging
import sys


def main(argv=None):
    """程序主入口"""
    from cli.bench_cli import build_parser, run

    args, _ = build_parser().parse_known_args(argv)
    level = logging.INFO
    if getattr(args, 'verbose', False):
        level = logging.DEBUG
    elif getattr(args, 'quiet', False):
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
