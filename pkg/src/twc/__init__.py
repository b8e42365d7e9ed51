"""Two-way channel toolkit."""
