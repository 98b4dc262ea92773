"""Test suite for the oscillating-grasp controllers and benchmark."""
