"""
Numerical tolerances shared across gaussof
"""

# symplectic eigenvalues may undershoot 1/2 by this much and still count as physical
PHYSICAL = 1e-9
# relative asymmetry allowed in a covariance matrix
SYMMETRY = 1e-12
# allowed deviation of S^T Omega S from Omega, relative to |S|^2
SYMPLECTIC = 1e-10
# most negative eigenvalue accepted for V0 - V_psi
RESIDUAL = 1e-7
# eigenvalues above this count towards the rank of the residual matrix
RANK = 1e-8
# slack on tan(theta0) >= tanh(r0)
CONSTRAINT = 1e-8
# bracket width at which the canonical solver's bisections stop
BRACKET = 1e-12


class Tolerances:
    """
    Bundle of numerical tolerances, passed to library functions as tol=...
    Instances are treated as immutable; use override() to derive a modified copy
    """
    fields = ('physical', 'symmetry', 'symplectic', 'residual', 'rank', 'constraint', 'bracket')

    def __init__(self, *, physical=PHYSICAL, symmetry=SYMMETRY, symplectic=SYMPLECTIC, residual=RESIDUAL,
                 rank=RANK, constraint=CONSTRAINT, bracket=BRACKET):
        self.physical = float(physical)
        self.symmetry = float(symmetry)
        self.symplectic = float(symplectic)
        self.residual = float(residual)
        self.rank = float(rank)
        self.constraint = float(constraint)
        self.bracket = float(bracket)

    def override(self, **kwargs):
        """
        Return a copy with some tolerances replaced
        :param kwargs: tolerance name -> new value
        :rtype: Tolerances
        """
        unknown = set(kwargs) - set(self.fields)
        if unknown:
            raise ValueError('Unknown tolerance(s): {}'.format(', '.join(sorted(unknown))))
        return Tolerances(**{**self.to_dict(), **kwargs})

    def to_dict(self):
        return {name: getattr(self, name) for name in self.fields}

    def __repr__(self):
        return 'Tolerances({})'.format(', '.join('{}={!r}'.format(k, v) for k, v in self.to_dict().items()))


DEFAULT_TOLERANCES = Tolerances()
