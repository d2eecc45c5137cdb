"""Dataset ingestion, evaluation protocol, exports and the command line."""
