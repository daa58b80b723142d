from .covariance import CovMat4, StandardFormParams, reduce_to_standard_form, ppt_separability, validate
from .canonical import CanonicalForm, canonical_reduce, build_V0
from .epr import eof, entanglement_of_squeezing
