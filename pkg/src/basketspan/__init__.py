"""Static hedging of multi-asset payoffs with portfolios of basket options."""

__version__ = "0.1.0"
