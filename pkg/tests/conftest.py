from hypothesis import settings

# The numba kernels compile on first call, which can take longer than
# hypothesis' default per-example deadline.
settings.register_profile("locperc", deadline=None, max_examples=50)
settings.load_profile("locperc")
