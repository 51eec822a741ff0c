"""pwdist: how people choose passwords, measured and modelled.

The toolkit ingests leaked-credential corpora into rank-frequency tables,
fits Zipf models to them (least squares and maximum likelihood), computes
guessability and entropy statistics, measures how well one list's ordering
guesses another list, runs offline cracking experiments against salted
hashes, and simulates a Metropolis-Hastings scheme that flattens the
distribution of accepted passwords.
"""

__version__ = "0.1.0"
