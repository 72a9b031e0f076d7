from .certificate_models import BoundSource, Certificate, Theorem, Verdict
from .domain_models import PeriodicitySpec, QuadratureSpec
