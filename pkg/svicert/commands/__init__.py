"""Commands package for the svicert command line."""
