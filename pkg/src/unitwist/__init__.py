"""Universal twist elements from constant R-matrices."""
