"""
Tests for contourgraph

Unit tests per module, brute-force oracles (oracles.py) and the
end-to-end acceptance checks (test_acceptance.py).
"""
