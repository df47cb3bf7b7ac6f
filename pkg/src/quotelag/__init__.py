"""quotelag: how fast local quotes absorb global price moves, and what that says about investor bias."""

__version__ = "0.1.0"
