"""Tests for gke-means."""
