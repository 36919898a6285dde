"""Simulation and statistics services"""
