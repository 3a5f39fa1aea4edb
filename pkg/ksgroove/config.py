import os

from decouple import config

from ksgroove.time import to_seconds

OUTPUT_DIR = os.path.abspath(
    os.path.expanduser(config('KSGROOVE_OUTPUT_DIR', default='./ksgroove-out'))
)
LOG_FILE_NAME = config('KSGROOVE_LOG_FILE', default='ksgroove.log')
LOG_FILE = os.path.join(OUTPUT_DIR, LOG_FILE_NAME)

LOG_LEVEL = config('KSGROOVE_LOG_LEVEL', default='INFO', cast=lambda v: v.strip().upper())

# 0 defers to the sweep file's own sweep.parallelism
PARALLELISM = config('KSGROOVE_PARALLELISM', default=0, cast=int)

VERIFY_BUDGETS = {
    'quick': config('KSGROOVE_QUICK_BUDGET', default='1 minutes', cast=to_seconds),
    'full': config('KSGROOVE_FULL_BUDGET', default='5 minutes', cast=to_seconds),
}
