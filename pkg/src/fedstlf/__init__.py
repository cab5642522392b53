"""Federated short-term load forecasting simulator."""
