"""Atom-interferometric gravitational-wave detector simulation."""
