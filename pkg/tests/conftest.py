"""Shared test configuration.

Interval arithmetic makes single examples slow and variable; the profile
disables hypothesis deadlines so precision work never counts as a flaky
timeout.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "exact",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("exact")
