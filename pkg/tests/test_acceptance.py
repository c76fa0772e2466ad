"""Acceptance gate: one test class per release criterion.

Expected values are frozen from independent sources: FIPS 180-4 and
RFC 4231 vectors, SP 800-38A F.2.1, RFC 6979 A.2.5, and cross-checks
against the pyca cryptography implementation. Each class maps to one
line of the terminal summary (see conftest).
"""

import hashlib
import json
import math
import time

import numpy as np
import pytest

from cct import cli, ec, fleet, fleetstats, keycheck, keys, rsa_padding, \
    timecheck, xvalidate
from cct.fleet import FleetConfig
from cct.keycheck import PublicKey
from cct.keys import KeyAlgo
from cct.provider import Provider, RandomSource, SignScheme, _default_boosted
from cct.randcheck import (BLOCK_BYTES_LARGE, BLOCK_BYTES_SMALL,
                           analyze_randomness, byte_distribution_profile,
                           run_battery)
from cct.randcheck.pipeline import analyze_dataset_randomness
from cct.randcheck.sp80022 import frequency
from cct.records import (Dimension, FindingKind, GroupKey, Tier,
                         group_samples)
from cct.timecheck import LeakModel, TimingSample, analyze_device, flag_device
from tests.conftest import small_fleet_config

RSA_KEY = keys.fixed_keys()[KeyAlgo.RSA_1024]
EC_KEY = keys.fixed_keys()[KeyAlgo.EC_P256]


class TestCriterion1Kats:
    """Known-answer vectors for every reference primitive, bit-exact."""

    SHA256_VECTORS = [
        (b"abc",
         "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
        (b"",
         "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        (b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
         "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"),
    ]

    HMAC_VECTORS = [  # RFC 4231 test cases 1-3
        (b"\x0b" * 20, b"Hi There",
         "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"),
        (b"Jefe", b"what do ya want for nothing?",
         "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"),
        (b"\xaa" * 20, b"\xdd" * 50,
         "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"),
    ]

    AES_KEY = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    AES_IV = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    AES_PT = bytes.fromhex(
        "6bc1bee22e409f96e93d7e117393172a"
        "ae2d8a571e03ac9c9eb76fac45af8e51"
        "30c81c46a35ce411e5fbc1191a0a52ef"
        "f69f2445df4f9b17ad2b417be66c3710")
    AES_CT = bytes.fromhex(
        "7649abac8119b246cee98e9b12e9197d"
        "5086cb9b507219ee95db113a917678b2"
        "73bed6b8e3c1743b7116e69e22229516"
        "3ff1caa1681fac09120eca307586e1a7")

    # expected signatures computed independently (PKCS1 v1.5 is
    # deterministic, so digests of the signature bytes pin them down)
    PKCS1_DIGESTS = [
        (b"abc",
         "9f7076bbb81c124f65cba3dd42ef7dea513e26f1b21621821a7b3a74411ce9d8"),
        (b"The quick brown fox jumps over the lazy dog",
         "24f02f326aa5ae7fd52116fc679e2d15afce3fd75ce8e2a17f29619bac5276d8"),
        (b"",
         "f6968db462bf5fd09395d0b3aff4f4ac96e4cacbc5d45972b476915874c013ce"),
    ]

    ECDSA_D = 0xC9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721
    ECDSA_VECTORS = [  # RFC 6979 "sample"/"test" plus a cross-checked third
        (b"sample",
         0xA6E3C57DD01ABE90086538398355DD4C3B17AA873382B0F24D6129493D8AAD60,
         0xEFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716,
         0xF7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8),
        (b"test",
         0xD16B6AE827F17175E040871A1C7EC3500192C4C92677336EC2537ACAEE0008E0,
         0xF1ABB023518351CD71D881567B1EA663ED3EFCF6C5132B354F28D3B0B7D38367,
         0x019F4113742A2B14BD25926B49C649155F267E60D3814B4C0CC84250E46F0083),
        (b"abc",
         0xA2CCE5A11BF204817594869EA1CB883B08A6E2C75099067E05366AF9F031C6FA,
         0xD0720B69059E029F2001100CDB2EEE9914D7D685E03584313F867BC963740A42,
         0xE2AC01DCB1E1C5F1CB1954F2FD8E408F0BC6C82C59D94FF46067187679AC14E7),
    ]

    def test_criterion_1_sha256(self):
        for message, digest in self.SHA256_VECTORS:
            assert ec.hash_to_int(message) == int(digest, 16)

    def test_criterion_1_hmac_sha256(self):
        for key, message, digest in self.HMAC_VECTORS:
            assert xvalidate.mac_external(key, message).hex() == digest

    def test_criterion_1_aes_cbc(self):
        # chained prefixes give three independent bit-exact checks
        for blocks in (1, 2, 4):
            ct = xvalidate.encrypt_external_aes(
                self.AES_KEY, self.AES_IV, self.AES_PT[:16 * blocks])
            assert ct[:16 * blocks] == self.AES_CT[:16 * blocks]

    def test_criterion_1_rsa_pkcs1(self):
        n = RSA_KEY.public["n"]
        for message, digest in self.PKCS1_DIGESTS:
            em = rsa_padding.emsa_pkcs1_encode(message, (n.bit_length() + 7) // 8)
            sig = keys.rsa_private_op(
                RSA_KEY, int.from_bytes(em, "big")).to_bytes(128, "big")
            assert hashlib.sha256(sig).hexdigest() == digest

    def test_criterion_1_ecdsa_p256(self):
        for message, k, want_r, want_s in self.ECDSA_VECTORS:
            r, s = ec.ecdsa_sign_raw(self.ECDSA_D, message, k)
            assert (r, s) == (want_r, want_s)
            public = ec.scalar_base_mult(self.ECDSA_D)
            assert ec.ecdsa_verify_raw(public, message, r, s)

    def test_criterion_1_runtime(self, request):
        # KATs must be near-instant; re-run the full set under a stopwatch
        start = time.monotonic()
        self.test_criterion_1_sha256()
        self.test_criterion_1_hmac_sha256()
        self.test_criterion_1_aes_cbc()
        self.test_criterion_1_rsa_pkcs1()
        self.test_criterion_1_ecdsa_p256()
        assert time.monotonic() - start < 5.0


class TestCriterion2Recovery:
    """1000 random artifacts: every secret parameter recovered exactly."""

    TRIALS = 1000

    def test_criterion_2_ecdsa_nonce(self):
        src = RandomSource.uniform(101)
        d = EC_KEY.private["d"]
        hits = 0
        for i in range(self.TRIALS):
            k = keys.scalar_from_rng(src)
            message = b"m%d" % i
            r, s = ec.ecdsa_sign_raw(d, message, k)
            sig = ec.der_encode_signature(r, s)
            got = xvalidate.recover_ecdsa_nonce(d, message, sig)
            hits += got in (k, ec.N - k)
        assert hits == self.TRIALS

    def test_criterion_2_pss_salt(self):
        src = RandomSource.uniform(102)
        n = RSA_KEY.public["n"]
        hits = 0
        for i in range(self.TRIALS):
            salt = src.bytes(32)
            em = rsa_padding.emsa_pss_encode(b"m%d" % i,
                                             n.bit_length() - 1, salt)
            sig = keys.rsa_private_op(
                RSA_KEY, int.from_bytes(em, "big")).to_bytes(128, "big")
            hits += xvalidate.recover_pss_salt(RSA_KEY, sig) == salt
        assert hits == self.TRIALS

    def test_criterion_2_oaep_seed(self):
        src = RandomSource.uniform(103)
        n, e = RSA_KEY.public["n"], RSA_KEY.public["e"]
        hits = 0
        for i in range(self.TRIALS):
            seed = src.bytes(32)
            em = rsa_padding.eme_oaep_encode(b"pt%d" % i, 128, seed)
            ct = keys.rsa_public_op(
                n, e, int.from_bytes(em, "big")).to_bytes(128, "big")
            got_seed, got_message = xvalidate.recover_oaep_seed(RSA_KEY, ct)
            hits += got_seed == seed and got_message == b"pt%d" % i
        assert hits == self.TRIALS


def _model(fingerprint, **overrides):
    make, model = fingerprint.split("/")
    base = {"fingerprint": fingerprint, "chipset_make": make,
            "chipset_model": model, "api_level": 33, "memory_gb": 8.0,
            "strongbox_supported": True, "release_year": 2023, "count": 2,
            "faults": [], "timing": {}}
    base.update(overrides)
    return base


def _fault(pattern, applies_to=None, **params):
    params.setdefault("rate", 1.0)
    spec = {"pattern": pattern, "params": params}
    if applies_to is not None:
        spec["applies_to"] = applies_to
    return spec


# one model per bug-pattern cluster so pipelines see each fault against
# its own model fingerprint, the way real fleets cluster by firmware
FAULT_FLEET = {
    "seed": 2023, "days": 2, "ops_per_device_day": 60,
    "models": [
        _model("xval/artifact", faults=[
            _fault("PssSaltLength", ["RsaSignPss"], len=0),
            _fault("WrongKeySignature", ["RsaSignPkcs1"]),
            _fault("ZeroChunkEcdsa", ["EcSign"], run=8),
            _fault("OaepTruncation", ["RsaCryptOaep"]),
            _fault("HmacEcdsaShaped", ["HmacSha256"]),
        ]),
        _model("sdc/bitflip", count=1, faults=[
            _fault("SdcBitFlip", rate=0.6, count=1)]),
        _model("errs/rejects", count=3, faults=[
            _fault("KeyImportReject", rate=0.3),
            _fault("InvalidKeyBlob", rate=0.2),
            _fault("IncompatiblePurposeEcdh", ["EcExchange"], rate=0.5),
            _fault("StrongBoxDecryptFail", ["AesCbc"], rate=0.5),
        ]),
        _model("keys/patterned", faults=[_fault("PatternedRsaPrimes")]),
        _model("rng/biased", ops_per_device_day=1200,
               suites=["AesCbc", "EcSign"],  # highest material yield
               faults=[_fault("BiasedRng")]),
        _model("time/leaky", count=1, suites=["EcSign"],
               ops_per_device_day=32000, faults=[
                   _fault("NonConstantTimeEcdsa", ["EcSign"],
                          mean=87.0, std=2.0)]),
    ],
}

HEALTHY_FLEET = {
    "seed": 20260823, "days": 2, "ops_per_device_day": 2500,
    "models": [
        _model("sym/healthy", count=10,
               suites=["AesCbc", "HmacSha256"]),
        _model("ec/healthy", count=8, ops_per_device_day=2000,
               suites=["EcSign", "EcExchange"]),
        _model("full/healthy", count=4),
    ],
}


def _all_pipeline_findings(records):
    findings = list(xvalidate.cross_validate(records))
    findings += analyze_dataset_randomness(records)
    rsa_keys, ec_points = keycheck.keys_from_records(records)
    findings += [f.to_finding()
                 for f in keycheck.run_key_battery(rsa_keys, ec_points)]
    findings += [rep.to_finding()
                 for rep in timecheck.analyze_records(records)
                 if rep.status == "flagged"]
    findings += fleetstats.bug_pattern_findings(records)
    return findings


@pytest.fixture(scope="module")
def faulted_findings():
    records = list(fleet.iter_fleet(FleetConfig.from_json(FAULT_FLEET)))
    return _all_pipeline_findings(records)


class TestCriterion3Faults:
    EXPECTED = {
        FindingKind.INVALID_PSS_SALT, FindingKind.WRONG_KEY_SIGNATURE,
        FindingKind.ZERO_CHUNK_ECDSA, FindingKind.OAEP_SIZE_ANOMALY,
        FindingKind.HMAC_ECDSA_SHAPED, FindingKind.SILENT_DATA_CORRUPTION,
        FindingKind.WEAK_RSA_KEY, FindingKind.WEAK_RANDOM,
        FindingKind.TIMING_LEAK, FindingKind.KEY_IMPORT_FAILURE,
        FindingKind.INVALID_KEY_BLOB, FindingKind.INCOMPATIBLE_PURPOSE,
        FindingKind.DECRYPT_PADDING_FAILURE,
    }

    def test_criterion_3_every_fault_detected(self, faulted_findings):
        kinds = {f.kind for f in faulted_findings}
        assert self.EXPECTED <= kinds, sorted(
            k.value for k in self.EXPECTED - kinds)

    def test_criterion_3_healthy_fleet_clean(self):
        records = list(fleet.iter_fleet(FleetConfig.from_json(HEALTHY_FLEET)))
        assert len(records) >= 100_000
        assert _all_pipeline_findings(records) == []


class TestCriterion4Randomness:
    def test_criterion_4_frequency_kat(self):
        bits = np.array([1, 0, 1, 1, 0, 1, 0, 1, 0, 1], dtype=np.uint8)
        ((name, p),) = tuple(frequency(bits))
        assert name == "Frequency"
        assert abs(p - 0.527089) < 1e-6

    def test_criterion_4_pvalue_count(self):
        block = RandomSource.uniform(40).bytes(BLOCK_BYTES_LARGE)
        assert len(run_battery(block)) == 699

    def test_criterion_4_biased_bytes_at_16k(self):
        src = RandomSource.biased_bytes(41, _default_boosted("p0"), 2.0)
        profile = byte_distribution_profile(src.bytes(16 * 1024))
        assert profile.biased

    def test_criterion_4_calibration(self):
        passes = 0
        for seed in range(100):
            material = RandomSource.uniform(seed).bytes(640 * 1024)
            verdict = analyze_randomness(material, BLOCK_BYTES_SMALL)
            passes += not verdict.weak
        assert passes >= 99


class TestCriterion5KeyBattery:
    def _weak_keys(self):
        src = RandomSource.uniform(50)
        out = []
        for family in keys.WEAK_FAMILIES:
            name = "shared:accept" if family == "shared" else family
            out.append((family + "-a", keys.generate_weak_rsa_key(src, name)))
            if family == "shared":  # the pair is what makes it detectable
                out.append((family + "-b",
                            keys.generate_weak_rsa_key(src, name)))
        return out

    def test_criterion_5_weak_families_flagged(self):
        labelled = self._weak_keys()
        battery = keycheck.run_key_battery([
            PublicKey(label, km.public["n"], km.public["e"])
            for label, km in labelled])
        flagged = {f.key_id for f in battery}
        for family in keys.WEAK_FAMILIES:
            assert family + "-a" in flagged, family

    def test_criterion_5_sound_keys_clean(self):
        start = time.monotonic()
        src = RandomSource.uniform(51)
        sound = [keys.generate_rsa_key(src) for _ in range(1000)]
        battery = keycheck.run_key_battery([
            PublicKey("k%04d" % i, km.public["n"], km.public["e"])
            for i, km in enumerate(sound)])
        assert battery == []
        assert time.monotonic() - start < 600

    def test_criterion_5_batch_gcd_matches_pairwise(self):
        src = RandomSource.uniform(52)
        moduli = [keys.generate_rsa_key(src).public["n"] for _ in range(48)]
        moduli += [keys.generate_weak_rsa_key(src, "shared:bg").public["n"]
                   for _ in range(2)]
        batch = {n: s for n, s in keycheck.batch_gcd(moduli).items() if s}
        pairwise: dict[int, set[int]] = {}
        for i, a in enumerate(moduli):
            for b in moduli[i + 1:]:
                g = math.gcd(a, b)
                if g > 1:
                    pairwise.setdefault(a, set()).add(g)
                    pairwise.setdefault(b, set()).add(g)
        assert batch == pairwise and len(batch) == 2


class TestCriterion6Timing:
    def test_criterion_6_simulation_kat(self):
        model = LeakModel(87.0, 10.0, 1 / 256, 1 / 32)
        sim = timecheck.simulate_leak_corr(model, 1_000_000, seed=60)
        assert abs(sim - 0.016) < 0.002
        assert abs(sim - model.analytic_corr()) < 0.1 * model.analytic_corr()

    def test_criterion_6_device_classification(self):
        gen = np.random.Generator(np.random.PCG64(61))
        n = 10_000
        correct = 0
        for device in range(40):
            leaky = device < 20
            short = gen.random(n) < 1 / 256
            times = gen.normal(87.0, 2.0, n)
            if leaky:
                times = times - (87.0 / 32) * short
            samples = [TimingSample(31 if s else 32, float(t))
                       for s, t in zip(short, times)]
            report = analyze_device("dev%02d" % device, samples, seed=62)
            correct += (report.status == "flagged") == leaky
        assert correct >= 38  # 95% of 40

    CASES = [
        (0.02, 0.016, 100_000, True),
        (0.004, 0.016, 100_000, False),
        (0.0055, 0.016, 100_000, False),
        (0.02, 0.016, 9_999, False),
        (0.0155, 0.016, 100_000, True),
    ]

    @pytest.mark.parametrize("observed,simulated,n,want", CASES)
    def test_criterion_6_flag_rule(self, observed, simulated, n, want):
        assert flag_device(observed, simulated, n) is want


class TestCriterion7Stats:
    def test_criterion_7_error_rates_exact(self, synthetic30):
        triple = fleetstats.error_rates(synthetic30)
        assert triple.rate_raw == 6 / 30
        assert triple.group_median == 0.1
        assert triple.rate_threshold == 1 / 20

    def test_criterion_7_p90_exact(self, synthetic30):
        table = fleetstats.p90_latency(synthetic30, seed=0)
        by_tier = {tier: value for (_, _, tier), value in table.items()}
        assert by_tier == {Tier.PREMIUM: 90.0, Tier.MEDIUM: 50.0,
                           Tier.LOW: 30.0}

    def test_criterion_7_privacy_floor(self, synthetic30):
        base = synthetic30[0]
        import dataclasses
        big = [dataclasses.replace(base, day=i % 7) for i in range(150)]
        small = [dataclasses.replace(
            base, device=dataclasses.replace(base.device, api_level=30),
            day=i % 7) for i in range(99)]
        groups = group_samples(big + small, GroupKey((Dimension.API_LEVEL,)))
        assert all(len(v) >= 100 for v in groups.values())
        assert sum(len(v) for v in groups.values()) == 150


class TestCriterion8Determinism:
    def test_criterion_8_byte_identical(self, tmp_path):
        config = tmp_path / "fleet.cfg"
        config.write_text(json.dumps(small_fleet_config(seed=80).to_json()))
        outputs = []
        for run in ("a", "b"):
            dataset = tmp_path / f"{run}.jsonl"
            findings = tmp_path / f"{run}.json"
            rendered = tmp_path / f"{run}.md"
            assert cli.main(["simulate", "--config", str(config),
                             "--out", str(dataset)]) == cli.EXIT_OK
            assert cli.main(["analyze", "all", "--dataset", str(dataset),
                             "--out", str(findings)]) == cli.EXIT_OK
            assert cli.main(["report", str(findings),
                             "--out", str(rendered)]) == cli.EXIT_OK
            outputs.append((dataset.read_bytes(), findings.read_bytes(),
                            rendered.read_bytes()))
        assert outputs[0] == outputs[1]
