"""Key cryptanalysis battery unit tests against small hand-checked oracles."""

import random

import gmpy2
import pytest

from cct import keycheck, keys
from cct.errors import MalformedPoint, MissingDenylist
from cct.keycheck import PublicKey


def sound_key(i, e=65537):
    rnd = random.Random(900_000 + i)
    p = int(gmpy2.next_prime(rnd.getrandbits(512) | (1 << 511) | 1))
    q = int(gmpy2.next_prime(rnd.getrandbits(512) | (1 << 511) | 1))
    return PublicKey(key_id=f"sound{i}", n=p * q, e=e)


class TestFactoringPrimitives:
    def test_fermat_small_oracle(self):
        # 5959 = 59 * 101; 80^2 - 5959 = 21^2
        assert keycheck.fermat_factor(5959) == (59, 101)

    def test_fermat_even(self):
        assert keycheck.fermat_factor(2 * 31) == (2, 31)

    def test_fermat_miss_returns_none(self):
        assert keycheck.fermat_factor(101 * 7919, max_steps=4) is None

    def test_pollard_pm1_small_oracle(self):
        # 80813 = 211 * 383; 211 - 1 = 2 * 3 * 5 * 7 is 10-power-smooth
        assert keycheck.pollard_pm1(80813, b1=10) == 211

    def test_pollard_pm1_respects_bound(self):
        # 383 - 1 = 2 * 191: not smooth below 191
        assert keycheck.pollard_pm1(383 * 7919, b1=100) is None

    def test_factor_with_guess_recovers_nearby_prime(self):
        rnd = random.Random(7)
        p = int(gmpy2.next_prime((1 << 511) + rnd.getrandbits(400)))
        q = int(gmpy2.next_prime((1 << 511) + rnd.getrandbits(400)))
        guess = p - rnd.getrandbits(20)
        got = keycheck.factor_with_guess(p * q, guess)
        assert got is not None and got[0] * got[1] == p * q

    def test_factor_with_guess_rejects_far_guess(self):
        k1, k2 = sound_key(1), sound_key(2)
        assert keycheck.factor_with_guess(k1.n, k2.n >> 512) is None


class TestBatchGcd:
    def test_three_modulus_oracle(self):
        # gcd structure of {33, 35, 77}: 33 and 77 share 11, 35 and 77 share 7
        got = keycheck.batch_gcd([33, 35, 77])
        assert got == {33: {11}, 35: {7}, 77: {11, 7}}

    def test_matches_pairwise_on_shared_prime_corpus(self):
        shared = int(gmpy2.next_prime(1 << 255))
        mods = []
        for i in range(8):
            other = int(gmpy2.next_prime(
                (1 << 255) + random.Random(i).getrandbits(128)))
            if i % 3 == 0:
                mods.append(shared * other)
            else:
                mods.append(other * int(gmpy2.next_prime((3 << 254) + i)))
        got = keycheck.batch_gcd(mods)
        for n_i in mods:
            expected = set()
            for n_j in mods:
                g = int(gmpy2.gcd(n_i, n_j))
                if n_i != n_j and g > 1:
                    expected.add(g)
            assert got.get(n_i, set()) == expected

    def test_gcd_n_minus_1(self):
        big = int(gmpy2.next_prime(1 << 80))
        # craft two primes whose predecessor shares `big`
        n1 = 2 * big * 3 + 1
        while not gmpy2.is_prime(n1):
            n1 += 2 * big
        n2 = n1 + 2 * big
        while not gmpy2.is_prime(n2):
            n2 += 2 * big
        hits = keycheck.gcd_n_minus_1([n1, n2])
        assert any(g % big == 0 for (_, _, g) in hits)

    def test_gcd_n_minus_1_clean_below_bound(self):
        assert keycheck.gcd_n_minus_1([sound_key(11).n, sound_key(12).n]) == []


class TestRoca:
    def test_small_input_guard(self):
        assert keycheck.roca_fingerprint(15) is False

    def test_flags_structured_modulus(self):
        rnd = random.Random(4)
        km = keys.generate_weak_rsa_key(_rng(rnd), "roca")
        assert keycheck.roca_fingerprint(km.public["n"]) is True

    def test_sound_modulus_clean(self):
        assert keycheck.roca_fingerprint(sound_key(3).n) is False


class TestDenylists:
    def test_load_and_lookup(self, tmp_path):
        n = sound_key(4).n
        (tmp_path / "keypair.denylist").write_text(
            "# comment\n" + keycheck.modulus_digest(n) + "\n")
        lists = keycheck.load_denylists(str(tmp_path))
        assert keycheck.denylist_lookup(n, lists) == [
            ("KeypairDenylist", keycheck.modulus_digest(n))]
        assert keycheck.denylist_lookup(n + 2, lists) == []

    def test_env_var_directory(self, tmp_path, monkeypatch):
        (tmp_path / "unseeded_rand.denylist").write_text("a" * 64 + "\n")
        monkeypatch.setenv(keycheck.DENYLIST_ENV, str(tmp_path))
        assert "UnseededRand" in keycheck.load_denylists()

    def test_bad_line_rejected(self, tmp_path):
        (tmp_path / "keypair.denylist").write_text("not-a-digest\n")
        with pytest.raises(MissingDenylist):
            keycheck.load_denylists(str(tmp_path))

    def test_missing_directory(self):
        with pytest.raises(MissingDenylist):
            keycheck.load_denylists("/nonexistent/denylists")


class TestAnalyzeRsaKey:
    def test_small_exponent_flagged(self):
        findings = keycheck.analyze_rsa_key(sound_key(5, e=3), denylists={})
        assert any(f.check_id == "Exponents" for f in findings)

    def test_check_order_exponents_first(self):
        km = keys.generate_weak_rsa_key(_rng(random.Random(8)), "close")
        key = PublicKey("k", km.public["n"], 3)
        findings = keycheck.analyze_rsa_key(key, denylists={})
        assert findings[0].check_id == "Exponents"

    def test_factored_findings_verified(self):
        km = keys.generate_weak_rsa_key(_rng(random.Random(9)), "close")
        key = PublicKey("k", km.public["n"], km.public["e"])
        findings = [f for f in keycheck.analyze_rsa_key(key, denylists={})
                    if f.factored]
        assert findings and all(
            f.factored[0] * f.factored[1] == key.n for f in findings)

    def test_sound_key_clean(self):
        assert keycheck.analyze_rsa_key(sound_key(6), denylists={}) == []


class TestEcKeyChecks:
    def test_reference_point_clean(self):
        from cct import ec
        point = ec.scalar_base_mult(1234567)
        assert keycheck.analyze_ec_key(point) == []

    def test_off_curve_flagged(self):
        from cct import ec
        x, y = ec.scalar_base_mult(99)
        bad = keycheck.analyze_ec_key((x, y ^ 1))
        assert any(f.check_id == "EcOnCurve" for f in bad)

    def test_out_of_range_flagged(self):
        from cct import ec
        bad = keycheck.analyze_ec_key((ec.P, 5))
        assert any(f.check_id == "EcFieldRange" for f in bad)

    def test_malformed_encoding(self):
        with pytest.raises(MalformedPoint):
            keycheck.decode_ec_point(b"\x02" + b"\x00" * 10)


def _rng(rnd):
    class _R:
        def getrandbits(self, k):
            return rnd.getrandbits(k)

        def bytes(self, n):
            return rnd.getrandbits(8 * n).to_bytes(n, "big")
    return _R()
