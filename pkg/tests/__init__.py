"""Test suite for kalman-sgd."""
