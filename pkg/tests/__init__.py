"""Test suite for gapcheck."""
