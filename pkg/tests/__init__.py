"""wavguard test suite."""
