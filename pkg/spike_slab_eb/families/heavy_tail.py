import numpy as np

from spike_slab_eb.families import SlabFamily


class HeavyTail(SlabFamily):
	"""Polynomial-tailed slab gamma(u) = (delta/2)(1+|u|)^(-1-delta).

	The normaliser is delta/2 since the integral of (1+u)^(-1-delta) over
	(0, inf) is 1/delta. Tails are heavier than Cauchy for delta < 1.
	"""
	family_name = "heavy_tail"

	def log_density(self, u):
		delta = self.delta
		return np.log(delta / 2.0) - (1.0 + delta) * np.log1p(np.abs(u))

	def tail_mass(self, radius):
		return (1.0 + radius) ** (-self.delta)

	def log_slope_bound(self):
		# d/du log gamma = -(1+delta)/(1+u), largest at u=0
		return 1.0 + self.delta
