"""Follow-graph analytics for political candidate follower populations."""

__version__ = "0.1.0"
