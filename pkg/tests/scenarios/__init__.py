"""Scenario tests run through the coordinator."""
