import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orlicz_lab.errors import DomainError, ParseError
from orlicz_lab.potentials import (
    Huber,
    Mix,
    OrliczFunction,
    Power,
    check_cross_integrability,
    growth_dominates,
    parse_spec,
    verify_orlicz,
)

BUILTINS = ["power:1", "power:1.5", "power:2", "power:3", "power:4", "huber:1.0", "huber:0.3",
            "mix:1.0*power:4+0.5*power:1", "mix:2*power:1.2+0.1*power:6"]
finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


class TestEvaluation:
    def test_power_value(self):
        assert parse_spec("power:2").value(3.0) == 9.0
        assert parse_spec("power:2").value(0.0) == 0.0

    def test_huber_affine_branch(self):
        assert parse_spec("huber:1.0").value(2.0) == 3.0
        assert parse_spec("huber:1.0").value(-0.5) == 0.25

    def test_mix_value(self):
        V = parse_spec("mix:1.0*power:4+0.5*power:1")
        assert V.value(2.0) == pytest.approx(17.0)

    def test_vectorized_and_scalar(self):
        V = Power(3)
        out = V.value(np.array([-2.0, 0.0, 2.0]))
        np.testing.assert_array_equal(out, [8.0, 0.0, 8.0])
        assert isinstance(V.value(1.5), float)

    def test_right_derivative(self):
        V = Power(1)
        assert V.derivative_right(0.0) == 1.0
        assert V.derivative_right(-2.0) == -1.0
        H = Huber(1.0)
        # the right derivative at -t0 comes from the quadratic piece
        assert H.derivative_right(-1.0) == pytest.approx(-2.0)
        assert H.derivative_right(1.0) == pytest.approx(2.0)
        assert H.derivative_right(0.5) == pytest.approx(1.0)


class TestInverse:
    def test_closed_forms(self):
        assert parse_spec("power:2").inverse_nonneg(9.0) == pytest.approx(3.0)
        assert parse_spec("power:1").inverse_nonneg(4.0) == 4.0
        assert parse_spec("huber:1.0").inverse_nonneg(3.0) == pytest.approx(2.0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            Power(2).inverse_nonneg(-1.0)

    def test_mix_inverse_tolerance(self):
        V = parse_spec("mix:1.0*power:4+0.5*power:1")
        y = np.logspace(-12, 12, 200)
        t = V.inverse_nonneg(y)
        np.testing.assert_array_less(np.abs(V.value(t) - y), 1e-10 * (1 + y))


class TestParser:
    def test_round_trip_specs(self):
        for s in BUILTINS:
            V = parse_spec(s)
            assert parse_spec(V.spec) == V

    def test_mix_structure(self):
        V = parse_spec("mix:1.0*power:4+0.5*power:1")
        assert V == Mix(((1.0, Power(4)), (0.5, Power(1))))

    @pytest.mark.parametrize("text", ["power:0.5", "huber:0", "huber:-1", "mix:0*power:2", "mix:-1*power:2"])
    def test_domain_errors(self, text):
        with pytest.raises(DomainError):
            parse_spec(text)

    @pytest.mark.parametrize("text,pos", [("powr:2", 0), ("power2", 5), ("power:2x", 7), ("power:", 6),
                                          ("mix:1*huber:1", 6), ("mix:1*power:2+", 14)])
    def test_parse_error_positions(self, text, pos):
        with pytest.raises(ParseError) as err:
            parse_spec(text)
        assert err.value.position == pos
        assert "^" in str(err.value)

    def test_whitespace_tolerated(self):
        assert parse_spec(" mix: 1*power:2 + 1*power:1 ") == parse_spec("mix:1*power:2+1*power:1")


class TestAxioms:
    grid = np.concatenate([-np.linspace(0, 10, 1001), np.linspace(0, 10, 1001)])

    @pytest.mark.parametrize("spec", BUILTINS)
    def test_builtins_pass(self, spec):
        rep = verify_orlicz(parse_spec(spec), self.grid)
        assert rep.all_pass, rep

    def test_linear_has_zero_convexity_slack(self):
        rep = verify_orlicz(Power(1), self.grid)
        assert rep.all_pass
        assert rep.worst_convexity == 0.0

    def test_detects_nonconvex(self):
        class Sqrt(Power):
            def _value_abs(self, t):
                return np.sqrt(t)

        rep = verify_orlicz(Sqrt(1.0), self.grid)
        assert not rep.convex
        assert not rep.inverse_roundtrip

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            verify_orlicz(Power(2), [])


@pytest.mark.parametrize("spec", BUILTINS)
class TestProperties:
    @given(x=finite)
    @settings(max_examples=60, deadline=None)
    def test_even_and_zero_only_at_origin(self, spec, x):
        V = parse_spec(spec)
        assert V.value(x) == V.value(-x)
        if x == 0 or abs(x) > 1e-50:  # below that x**p underflows
            assert (V.value(x) == 0) == (x == 0)

    @given(a=finite, b=finite)
    @settings(max_examples=60, deadline=None)
    def test_midpoint_convex(self, spec, a, b):
        V = parse_spec(spec)
        va, vb = V.value(a), V.value(b)
        assert V.value(0.5 * (a + b)) <= 0.5 * (va + vb) + 1e-12 * (1 + abs(va) + abs(vb))

    @given(y=st.floats(min_value=0, max_value=1e8, allow_nan=False))
    @settings(max_examples=60, deadline=None)
    def test_inverse_round_trip(self, spec, y):
        V = parse_spec(spec)
        assert abs(V.value(V.inverse_nonneg(y)) - y) <= 1e-10 * (1 + y)


@given(p=st.floats(min_value=1, max_value=6), c=st.floats(min_value=1e-3, max_value=1e3),
       x=st.floats(min_value=-50, max_value=50))
@settings(max_examples=100, deadline=None)
def test_power_homogeneity(p, c, x):
    V = Power(p)
    assert V.value(c * x) == pytest.approx(c**p * V.value(x), rel=1e-12, abs=1e-300)


class TestHypothesisChecks:
    def test_growth(self):
        assert growth_dominates(Power(2), Power(1))
        assert growth_dominates(parse_spec("mix:1*power:4+0.5*power:1"), Power(2))
        assert not growth_dominates(Power(1), Power(2))
        assert growth_dominates(Power(2), Huber(1.0))

    def test_cross_integrability(self):
        assert check_cross_integrability(Power(4), Power(2))

    def test_cross_integrability_warns(self):
        class CoshMinusOne(OrliczFunction):
            spec = "cosh"

            def _value_abs(self, t):
                return np.cosh(t) - 1.0

            def _deriv_abs(self, t):
                return np.sinh(t)

            def _inverse(self, y):
                return np.arccosh(y + 1.0)

        with pytest.warns(RuntimeWarning):
            assert not check_cross_integrability(CoshMinusOne(), Power(1))
