"""Test modules"""

