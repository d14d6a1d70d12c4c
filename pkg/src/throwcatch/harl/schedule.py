"""Per-iteration blend weight between the catch and throw rewards."""

from throwcatch.config import AlphaSchedule


def alpha_at(schedule: AlphaSchedule, iteration: int, total_iters: int | None = None) -> float:
    """Fixed: ``alpha_start``. Decay: linear from ``alpha_start`` at 0 to ``alpha_end`` at
    ``total_iters`` (the schedule's own value wins), clamped beyond."""
    total = schedule.total_iters or total_iters
    if schedule.mode == "fixed" or not total:
        return schedule.alpha_start
    frac = min(max(iteration, 0), total) / total
    return schedule.alpha_start + (schedule.alpha_end - schedule.alpha_start) * frac
