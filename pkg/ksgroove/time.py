import humanreadable as hr


def to_seconds(argument, default_unit: str = 'minutes') -> float:
    """
    Parse a wall-clock duration such as "90 seconds" or "2" (minutes) into seconds.
    """
    try:
        time = hr.Time(str(argument), default_unit=default_unit)
    except Exception:
        raise ValueError(f'Unable to parse time from {argument}') from None
    return time.seconds
