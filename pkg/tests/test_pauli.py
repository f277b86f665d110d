"""Pauli algebra, observables, and seminorm tests."""

import math

import numpy as np
import pytest

from aqstate.pauli import (
    FactoredObservable,
    Observable,
    PauliAxis,
    PauliString,
    SingleQubitOperator,
    factored_seminorms,
    load_observable,
    normalize_to_unit_seminorm,
    observable_from_dict,
    observable_to_dict,
    pair_compat,
    projector_factored,
    projector_pauli_expansion,
    projector_seminorms,
    save_observable,
    seminorm,
    seminorm1,
    seminorm2,
    shot_budget,
    std_bound,
    weight,
)


def seminorm_bruteforce(obs):
    """Independent oracle: explicit double loop over term labels."""
    labels = [(c, p.to_label()) for c, p in obs.terms if p.weight > 0]
    total = 0.0
    for ci, si in labels:
        for cj, sj in labels:
            r, delta = 0, 1
            for a, b in zip(si, sj):
                if a != "I" and b != "I":
                    r += 1
                    if a != b:
                        delta = 0
            total += (3.0**r) * delta * abs(ci) * abs(cj)
    return math.sqrt(total)


def random_signed_observable(n_qubits, n_terms, rng):
    terms = []
    for _ in range(n_terms):
        axes = rng.integers(0, 4, n_qubits)
        coeff = rng.uniform(-1.0, 1.0)
        terms.append(
            (coeff, PauliString(n_qubits, tuple((q, int(a)) for q, a in enumerate(axes) if a)))
        )
    return Observable(n_qubits, tuple(terms))


class TestPauliString:
    def test_label_round_trip(self):
        p = PauliString.from_label("XIZY")
        assert p.to_label() == "XIZY"
        assert p.n_qubits == 4
        assert dict(p.support) == {0: PauliAxis.X, 2: PauliAxis.Z, 3: PauliAxis.Y}

    def test_identity_entries_dropped(self):
        p = PauliString(3, ((0, PauliAxis.I), (2, PauliAxis.X)))
        assert p.support == ((2, PauliAxis.X),)

    def test_weight_examples(self):
        assert weight(PauliString.from_label("XIZ")) == 2
        assert weight(PauliString.from_label("II")) == 0
        assert weight(PauliString.from_label("XYZ")) == 3

    def test_out_of_range_qubit(self):
        with pytest.raises(ValueError):
            PauliString(2, ((2, PauliAxis.X),))

    def test_duplicate_qubit(self):
        with pytest.raises(ValueError):
            PauliString(2, ((0, PauliAxis.X), (0, PauliAxis.Z)))

    def test_hashable(self):
        assert PauliString.from_label("XI") == PauliString(2, ((0, PauliAxis.X),))
        assert len({PauliString.from_label("XI"), PauliString(2, ((0, "X"),))}) == 1


class TestPairCompat:
    @pytest.mark.parametrize(
        "a,b,expect",
        [
            ("XI", "ZI", (0, 1)),
            ("XI", "XZ", (1, 1)),
            ("XY", "XY", (1, 2)),
            ("II", "XY", (1, 0)),
        ],
    )
    def test_examples(self, a, b, expect):
        assert pair_compat(PauliString.from_label(a), PauliString.from_label(b)) == expect

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(1, 7))
            pa = PauliString(n, tuple((q, int(x)) for q, x in enumerate(rng.integers(0, 4, n)) if x))
            pb = PauliString(n, tuple((q, int(x)) for q, x in enumerate(rng.integers(0, 4, n)) if x))
            assert pair_compat(pa, pb) == pair_compat(pb, pa)

    def test_mismatched_sizes(self):
        with pytest.raises(ValueError):
            pair_compat(PauliString.from_label("X"), PauliString.from_label("XI"))


class TestObservable:
    def test_canonicalization_merges_duplicates(self):
        obs = Observable.from_strings([(0.5, "XI"), (0.25, "XI"), (1.0, "ZZ")])
        assert len(obs.terms) == 2
        coeffs = {p.to_label(): c for c, p in obs.terms}
        assert coeffs == {"XI": 0.75, "ZZ": 1.0}

    def test_zero_terms_dropped(self):
        obs = Observable.from_strings([(0.5, "XI"), (-0.5, "XI")])
        assert obs.terms == ()

    def test_mixed_sizes_rejected(self):
        with pytest.raises(ValueError):
            Observable(2, ((1.0, PauliString.from_label("X")),))

    def test_addition_and_scaling(self):
        a = Observable.from_strings([(1.0, "XI")])
        b = Observable.from_strings([(2.0, "XI"), (1.0, "IZ")])
        total = a + b
        assert {p.to_label(): c for c, p in total.terms} == {"XI": 3.0, "IZ": 1.0}
        assert {p.to_label(): c for c, p in (0.5 * b).terms} == {"XI": 1.0, "IZ": 0.5}


class TestSeminorms:
    def test_sigma_x(self):
        obs = Observable.from_strings([(1.0, "X")])
        assert seminorm(obs) == pytest.approx(math.sqrt(3), abs=1e-15)
        assert seminorm2(obs) == pytest.approx(math.sqrt(3), abs=1e-15)
        assert seminorm1(obs) == pytest.approx(math.sqrt(3), abs=1e-15)

    def test_weight_r_monomial(self):
        for r, label in [(1, "XII"), (2, "XZI"), (3, "XYZ")]:
            obs = Observable.from_strings([(1.0, label)])
            assert seminorm(obs) == pytest.approx(3.0 ** (r / 2), rel=1e-15)

    def test_two_term_example(self):
        obs = Observable.from_strings([(0.5, "XI"), (0.5, "XZ")])
        assert seminorm(obs) == pytest.approx(math.sqrt(4.5), abs=1e-14)
        assert seminorm2(obs) == pytest.approx(math.sqrt(3.0), abs=1e-14)
        assert seminorm1(obs) == pytest.approx(0.5 * math.sqrt(3) + 1.5, abs=1e-14)

    def test_identity_only_is_zero(self):
        obs = Observable.from_strings([(2.0, "III")])
        assert seminorm(obs) == 0.0
        assert seminorm2(obs) == 0.0
        assert seminorm1(obs) == 0.0

    def test_against_bruteforce(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            obs = random_signed_observable(int(rng.integers(1, 7)), int(rng.integers(1, 9)), rng)
            assert seminorm(obs) == pytest.approx(seminorm_bruteforce(obs), rel=1e-12)

    def test_hierarchy(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            obs = random_signed_observable(int(rng.integers(1, 7)), int(rng.integers(1, 9)), rng)
            s2, s, s1 = seminorm2(obs), seminorm(obs), seminorm1(obs)
            assert s2 <= s <= s1

    def test_extension_invariance(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            obs = random_signed_observable(3, 5, rng)
            for extra in (1, 4):
                wide = Observable(
                    3 + extra,
                    tuple((c, PauliString(3 + extra, p.support)) for c, p in obs.terms),
                )
                assert seminorm(wide) == pytest.approx(seminorm(obs), rel=1e-14)
                assert seminorm2(wide) == pytest.approx(seminorm2(obs), rel=1e-14)
                assert seminorm1(wide) == pytest.approx(seminorm1(obs), rel=1e-14)

    def test_scaling(self):
        rng = np.random.default_rng(29)
        obs = random_signed_observable(4, 6, rng)
        for c in (-2.0, 0.5, 3.7):
            assert seminorm(obs.scaled(c)) == pytest.approx(abs(c) * seminorm(obs), rel=1e-13)


class TestStdBound:
    def test_unit_seminorm_budget(self):
        obs = normalize_to_unit_seminorm(
            Observable.from_strings([(0.3, "XZ"), (0.9, "YI")])
        )
        assert std_bound(obs, 10_000) == pytest.approx(0.01, rel=1e-10)

    def test_sigma_x_three_snapshots(self):
        assert std_bound(Observable.from_strings([(1.0, "X")]), 3) == pytest.approx(1.0)

    def test_identity_zero(self):
        assert std_bound(Observable.from_strings([(1.0, "II")]), 7) == 0.0

    def test_zero_snapshots_rejected(self):
        with pytest.raises(ValueError):
            std_bound(Observable.from_strings([(1.0, "X")]), 0)

    def test_shot_budget(self):
        obs = Observable.from_strings([(1.0, "X")])
        m = shot_budget(obs, 0.01)
        assert std_bound(obs, m) <= 0.01 < std_bound(obs, m - 1)


class TestNormalization:
    def test_scalar_rescale(self):
        obs = normalize_to_unit_seminorm(Observable.from_strings([(2.0, "X")]))
        assert seminorm(obs) == pytest.approx(1.0, abs=1e-12)
        assert obs.terms[0][0] == pytest.approx(2.0 / math.sqrt(12.0))

    def test_fixed_point(self):
        obs = normalize_to_unit_seminorm(Observable.from_strings([(0.4, "XZ"), (0.1, "YY")]))
        again = normalize_to_unit_seminorm(obs)
        for (c1, _), (c2, _) in zip(obs.terms, again.terms):
            assert c1 == pytest.approx(c2, rel=1e-12)

    def test_example_division(self):
        obs = Observable.from_strings([(0.5, "XI"), (0.5, "XZ")])
        unit = normalize_to_unit_seminorm(obs)
        for (cu, _), (c, _) in zip(unit.terms, obs.terms):
            assert cu == pytest.approx(c / math.sqrt(4.5), rel=1e-12)

    def test_seminorm2_flag(self):
        obs = Observable.from_strings([(0.5, "XI"), (0.5, "XZ")])
        unit = normalize_to_unit_seminorm(obs, which="seminorm2")
        assert seminorm2(unit) == pytest.approx(1.0, abs=1e-12)

    def test_zero_seminorm_rejected(self):
        with pytest.raises(ValueError):
            normalize_to_unit_seminorm(Observable.from_strings([(1.0, "II")]))


class TestProjectors:
    def test_factored_single_bit(self):
        proj = projector_factored([0])
        ((coeff, factors),) = proj.terms
        assert coeff == 1.0
        assert factors[0] == SingleQubitOperator(a0=0.5, az=0.5)

    def test_factored_sign_flip(self):
        proj = projector_factored([1, 1])
        for op in proj.terms[0][1]:
            assert op == SingleQubitOperator(a0=0.5, az=-0.5)

    def test_expansion_one_qubit(self):
        obs = projector_pauli_expansion([0])
        assert {p.to_label(): c for c, p in obs.terms} == {"I": 0.5, "Z": 0.5}

    def test_expansion_two_qubits_coefficients(self):
        obs = projector_pauli_expansion([0, 1])
        assert len(obs.terms) == 4
        assert all(abs(c) == 0.25 for c, _ in obs.terms)

    def test_expansion_matches_factored(self):
        rng = np.random.default_rng(31)
        for n in range(1, 5):
            bits = [int(b) for b in rng.integers(0, 2, n)]
            expanded = projector_factored(bits).to_observable()
            direct = projector_pauli_expansion(bits)
            assert {p.to_label(): c for c, p in expanded.terms} == pytest.approx(
                {p.to_label(): c for c, p in direct.terms}
            )

    def test_seminorm2_closed_form(self):
        for n in range(1, 7):
            obs = projector_pauli_expansion([1] * n)
            assert seminorm2(obs) ** 2 == pytest.approx(1.0 - 0.25**n, abs=1e-12)

    def test_seminorm_bound(self):
        for n in range(1, 7):
            obs = projector_pauli_expansion([0] * n)
            assert seminorm(obs) ** 2 <= 1.5**n
            # the N = 3 instance from the brute-force pair sum
            if n == 3:
                assert seminorm(obs) ** 2 == pytest.approx(201.0 / 64.0, rel=1e-12)

    def test_closed_forms_match_bruteforce(self):
        rng = np.random.default_rng(37)
        for n in range(1, 7):
            bits = [int(b) for b in rng.integers(0, 2, n)]
            obs = projector_pauli_expansion(bits)
            closed = projector_seminorms(n)
            assert closed[0] == pytest.approx(seminorm(obs), rel=1e-13)
            assert closed[1] == pytest.approx(seminorm2(obs), rel=1e-13)
            assert closed[2] == pytest.approx(seminorm1(obs), rel=1e-13)

    def test_expansion_cap(self):
        with pytest.raises(ValueError):
            projector_pauli_expansion([0] * 13)


class TestFactoredSeminorms:
    def test_projector_closed_form_route(self):
        for n in (1, 3, 6, 20):
            proj = projector_factored([0] * n)
            norm, norm2 = factored_seminorms(proj)
            expect = projector_seminorms(n)
            assert norm == pytest.approx(expect[0], rel=1e-13)
            assert norm2 == pytest.approx(expect[1], rel=1e-13)

    def test_single_term_matches_expansion(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            factors = tuple(
                SingleQubitOperator(*rng.uniform(-1, 1, size=4)) for _ in range(n)
            )
            fobs = FactoredObservable(n, ((rng.uniform(0.2, 2.0), factors),))
            norm, norm2 = factored_seminorms(fobs)
            expanded = fobs.to_observable()
            assert norm == pytest.approx(seminorm(expanded), rel=1e-11)
            assert norm2 == pytest.approx(seminorm2(expanded), rel=1e-11)

    def test_multi_term_falls_back_to_expansion(self):
        rng = np.random.default_rng(43)
        factors = lambda: tuple(
            SingleQubitOperator(*rng.uniform(-1, 1, size=4)) for _ in range(3)
        )
        fobs = FactoredObservable(3, ((1.0, factors()), (0.5, factors())))
        norm, norm2 = factored_seminorms(fobs)
        expanded = fobs.to_observable()
        assert norm == pytest.approx(seminorm(expanded), rel=1e-12)
        assert norm2 == pytest.approx(seminorm2(expanded), rel=1e-12)

    def test_factor_count_must_match(self):
        with pytest.raises(ValueError):
            FactoredObservable(2, ((1.0, (SingleQubitOperator(1.0),)),))


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        obs = Observable.from_strings([(0.25, "XIZ"), (-1.5, "YYI")])
        path = tmp_path / "obs.json"
        save_observable(obs, path)
        assert load_observable(path) == obs

    def test_factored_round_trip(self, tmp_path):
        proj = projector_factored([0, 1, 1])
        path = tmp_path / "proj.json"
        save_observable(proj, path)
        assert load_observable(path, factored=True) == proj

    def test_dict_schema(self):
        data = observable_to_dict(Observable.from_strings([(0.5, "XI")]))
        assert data == {"n_qubits": 2, "terms": [{"coeff": 0.5, "pauli": "XI"}]}

    def test_label_length_checked(self):
        with pytest.raises(ValueError):
            observable_from_dict({"n_qubits": 3, "terms": [{"coeff": 1.0, "pauli": "XI"}]})

    def test_malformed_rejected(self):
        with pytest.raises(ValueError):
            observable_from_dict({"terms": [{"coeff": 1.0}]})
