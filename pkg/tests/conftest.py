import warnings

import pytest

from sechprolate.commuting_ode import build_transform, galerkin_eigensystem
from sechprolate.extrapolation import builtin_case
from sechprolate.sech_operator import OperatorParams, nystrom_eigensystem
from sechprolate.svd_assembly import compute_svd


@pytest.fixture(scope="session")
def ny_c1():
    return nystrom_eigensystem(1.0, m_max=12)


@pytest.fixture(scope="session")
def ode_c1():
    return galerkin_eigensystem(1.0, n_b=140, m_max=20)


@pytest.fixture(scope="session")
def transform_c1():
    return build_transform(1.0)


@pytest.fixture(scope="session")
def svd_b1_c1():
    return compute_svd(OperatorParams(b=1.0, c=1.0), m_max=8)


@pytest.fixture(scope="session")
def basis_c2():
    from sechprolate.pswf import pswf_basis
    return pswf_basis(2.0, m_max=10)


@pytest.fixture(scope="session")
def case_a():
    """Benchmark case (a) with its SVD, shared by the extrapolation tests.

    The depth m_max=12 at c=0.5 trips the close-gap warning by design; the
    warning contract itself is asserted in the unit tests, not here.
    """
    obs, truth, params = builtin_case("a")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        svd = compute_svd(params, m_max=12)
    return obs, truth, params, svd
