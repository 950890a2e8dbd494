# config/time_helpers.py

def format_seconds(seconds: float) -> str:
    if seconds < 1.0:
        return f"{seconds * 1000:.0f}ms"
    sec = int(seconds)
    if sec < 60:
        return f"{seconds:.2f}s"
    return f"{sec//3600:02}:{(sec%3600)//60:02}:{sec%60:02}"
