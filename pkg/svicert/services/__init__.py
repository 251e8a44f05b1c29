"""Services package: problem evaluation, solvers, certificates, market generators and reports."""
