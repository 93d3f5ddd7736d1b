import numpy as np

from spike_slab_eb.families import SlabFamily


class Cauchy(SlabFamily):
	"""Standard Cauchy slab, same tails as heavy_tail with delta=1 but its own form."""
	family_name = "cauchy"

	def log_density(self, u):
		return -np.log(np.pi) - np.log1p(np.square(u))

	def tail_mass(self, radius):
		return 1.0 - 2.0 / np.pi * np.arctan(radius)

	def log_slope_bound(self):
		# |2u/(1+u^2)| peaks at u=1
		return 1.0
