#!/usr/bin/env python3

import logging
import sys

from twinsub import cli


if __name__ == '__main__':
    logging.basicConfig(
        level=logging.INFO,
        format="%(name)s: %(asctime)s: %(message)s")
    sys.exit(cli.main(sys.argv[1:]))
