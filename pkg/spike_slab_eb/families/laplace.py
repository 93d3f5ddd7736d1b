import numpy as np
from scipy.stats import norm

from spike_slab_eb.families import SlabFamily


class Laplace(SlabFamily):
	"""Laplace slab with scale b: gamma(u) = exp(-|u|/b)/(2b).

	Light exponential tails; kept as the reference family with a closed
	form convolution and as the counterexample for heavy-tail rates.
	"""
	family_name = "laplace"

	def log_density(self, u):
		b = self.scale
		return -np.abs(u) / b - np.log(2.0 * b)

	def tail_mass(self, radius):
		return np.exp(-radius / self.scale)

	def log_slope_bound(self):
		return 1.0 / self.scale

	def closed_form_convolution(self, x):
		"""
		g(x) = e^{1/(2b^2)} / (2b) * [e^{-x/b} Phi(x - 1/b) + e^{x/b} Phi(-x - 1/b)].

		Each product is formed in log space so large |x| does not overflow.
		"""
		x = np.asarray(x, dtype=float)
		a = 1.0 / self.scale
		left = -a * x + norm.logcdf(x - a)
		right = a * x + norm.logcdf(-x - a)
		return np.exp(0.5 * a * a - np.log(2.0 * self.scale) + np.logaddexp(left, right))
