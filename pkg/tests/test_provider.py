"""Reference provider behaviour and fault-injection catalog."""

import collections

import pytest

from cct import ec, keys, xvalidate
from cct.errors import (BlockSizeFailure, ImportFailure, InvalidKey,
                        InvalidKeyBlob)
from cct.keys import KeyAlgo
from cct.provider import (CryptScheme, FaultPattern, FaultSpec, Provider,
                          RandomSource, SignScheme)
def make_provider(*faults, seed=1):
    return Provider(RandomSource.uniform(seed), faults=faults, fault_seed=seed)


def fault(pattern, rate=1.0, **params):
    params.setdefault("rate", rate)
    return FaultSpec(pattern=pattern, params=params)


class TestRandomSource:
    def test_deterministic(self):
        assert (RandomSource.uniform(3).bytes(64)
                == RandomSource.uniform(3).bytes(64))

    def test_nonzero_bytes(self):
        assert 0 not in RandomSource.uniform(3).nonzero_bytes(4096)

    def test_biased_distribution(self):
        src = RandomSource.biased_bytes(5, frozenset({0x41}), factor=8.0)
        counts = collections.Counter(src.bytes(1 << 16))
        # boosted value carries factor/256 of the mass
        assert counts[0x41] > 4 * (1 << 16) // 256

    def test_boost_factor_bound(self):
        with pytest.raises(ValueError):
            RandomSource.biased_bytes(5, frozenset(range(255)), factor=2.0)


class TestReferenceOps:
    def test_sign_verify_all_schemes(self):
        provider = make_provider()
        for scheme, algo in [(SignScheme.PKCS1_SHA256, KeyAlgo.RSA_1024),
                             (SignScheme.PSS_SHA256, KeyAlgo.RSA_1024),
                             (SignScheme.ECDSA_SHA256, KeyAlgo.EC_P256)]:
            handle = provider.generate_key(algo)
            sig = provider.sign(handle, scheme, b"payload")
            assert provider.verify(handle, scheme, b"payload",
                                   sig.output).output == b"\x01"
            assert provider.verify(handle, scheme, b"tampered",
                                   sig.output).output == b"\x00"

    def test_encrypt_decrypt_all_schemes(self):
        provider = make_provider()
        for scheme, algo in [(CryptScheme.AES_CBC_PKCS7, KeyAlgo.AES_128),
                             (CryptScheme.RSA_OAEP_SHA256, KeyAlgo.RSA_1024),
                             (CryptScheme.RSA_PKCS1, KeyAlgo.RSA_1024)]:
            handle = provider.generate_key(algo)
            ct = provider.encrypt(handle, scheme, b"\x07" * 32)
            assert provider.decrypt(handle, scheme, ct.output).output == b"\x07" * 32

    def test_mac_matches_external(self):
        provider = make_provider()
        handle = provider.generate_key(KeyAlgo.HMAC_SHA256)
        tag = provider.mac(handle, b"data").output
        assert tag == xvalidate.mac_external(handle.material.secret, b"data")

    def test_exchange_matches_local_scalar(self):
        provider = make_provider()
        handle = provider.generate_key(KeyAlgo.EC_P256)
        peer = ec.scalar_base_mult(424242)
        got = provider.exchange(handle, ec.encode_point(peer))
        assert got.output == ec.ecdh_shared_secret(
            handle.material.private["d"], peer)

    def test_wall_times_positive(self):
        provider = make_provider()
        handle = provider.generate_key(KeyAlgo.AES_128)
        result = provider.encrypt(handle, CryptScheme.AES_CBC_PKCS7, b"x")
        assert result.wall_time_ms >= 0


class TestFaults:
    def test_pss_salt_length(self):
        provider = make_provider(fault(FaultPattern.PSS_SALT_LENGTH, salt_len=0))
        km = keys.fixed_keys()[KeyAlgo.RSA_1024]
        handle = provider.import_key(km)
        sig = provider.sign(handle, SignScheme.PSS_SHA256, b"m")
        assert xvalidate.recover_pss_salt(km, sig.output) == b""

    def test_zero_chunk_ecdsa(self):
        provider = make_provider(fault(FaultPattern.ZERO_CHUNK_ECDSA, run=8))
        handle = provider.generate_key(KeyAlgo.EC_P256)
        sig = provider.sign(handle, SignScheme.ECDSA_SHA256, b"m")
        r, _ = ec.der_decode_two_integers(sig.output)
        assert b"\x00" * 8 in r.to_bytes(32, "big")

    def test_wrong_key_signature(self):
        # RSA PKCS1 slot filled with a signature from a local EC key
        provider = make_provider(fault(FaultPattern.WRONG_KEY_SIGNATURE))
        km = keys.fixed_keys()[KeyAlgo.RSA_1024]
        handle = provider.import_key(km)
        sig = provider.sign(handle, SignScheme.PKCS1_SHA256, b"m")
        assert provider.verify(handle, SignScheme.PKCS1_SHA256, b"m",
                               sig.output).output == b"\x00"
        r, s = ec.der_decode_two_integers(sig.output)
        assert r > 0 and s > 0

    def test_oaep_truncation(self):
        provider = make_provider(fault(FaultPattern.OAEP_TRUNCATION))
        handle = provider.generate_key(KeyAlgo.RSA_1024)
        ct = provider.encrypt(handle, CryptScheme.RSA_OAEP_SHA256, b"\x01" * 32)
        junk = provider.decrypt(handle, CryptScheme.RSA_OAEP_SHA256, ct.output)
        assert len(junk.output) in (254, 255, 256)

    def test_hmac_ecdsa_shaped(self):
        provider = make_provider(fault(FaultPattern.HMAC_ECDSA_SHAPED))
        handle = provider.generate_key(KeyAlgo.HMAC_SHA256)
        tag = provider.mac(handle, b"m").output
        r, s = ec.der_decode_two_integers(tag)
        assert r > 0 and s > 0

    def test_key_import_reject(self):
        provider = make_provider(fault(FaultPattern.KEY_IMPORT_REJECT))
        with pytest.raises(ImportFailure):
            provider.import_key(keys.fixed_keys()[KeyAlgo.RSA_1024])

    def test_invalid_key_blob(self):
        provider = make_provider(fault(FaultPattern.INVALID_KEY_BLOB))
        handle_ok = make_provider().generate_key(KeyAlgo.AES_128)
        with pytest.raises(InvalidKeyBlob):
            provider.encrypt(handle_ok, CryptScheme.AES_CBC_PKCS7, b"x")

    def test_incompatible_purpose_ecdh(self):
        provider = make_provider(fault(FaultPattern.INCOMPATIBLE_PURPOSE_ECDH))
        handle = make_provider().generate_key(KeyAlgo.EC_P256)
        with pytest.raises(InvalidKey):
            provider.exchange(handle, ec.encode_point(ec.scalar_base_mult(9)))

    def test_strongbox_decrypt_fail(self):
        provider = make_provider(fault(FaultPattern.STRONGBOX_DECRYPT_FAIL))
        handle = make_provider().generate_key(KeyAlgo.AES_128)
        with pytest.raises(BlockSizeFailure) as exc:
            provider.decrypt(handle, CryptScheme.AES_CBC_PKCS7, b"\x00" * 32)
        assert exc.value.code == -46

    def test_sdc_bit_flip_changes_output(self):
        provider = make_provider(fault(FaultPattern.SDC_BIT_FLIP, rate=1.0))
        reference = make_provider()
        handle = reference.generate_key(KeyAlgo.HMAC_SHA256)
        tag = provider.mac(handle, b"m").output
        good = reference.mac(handle, b"m").output
        assert tag != good and len(tag) == len(good)
        assert xvalidate._bit_diff(tag, good) == 1

    def test_patterned_primes(self):
        provider = make_provider(
            fault(FaultPattern.PATTERNED_RSA_PRIMES, family="sparse"))
        handle = provider.generate_key(KeyAlgo.RSA_1024)
        p = handle.material.private["p"]
        assert bin(p).count("1") < 60

    def test_zero_chunk_run_validation(self):
        with pytest.raises(ValueError):
            fault(FaultPattern.ZERO_CHUNK_ECDSA, run=7)

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            fault(FaultPattern.SDC_BIT_FLIP, rate=1.5)

    def test_non_constant_time_leak(self):
        spec = fault(FaultPattern.NON_CONSTANT_TIME_ECDSA, mean=87.0, std=2.0)
        provider = Provider(RandomSource.uniform(2), faults=(spec,),
                            fault_seed=2)
        handle = provider.generate_key(KeyAlgo.EC_P256)
        short, full = [], []
        for i in range(4000):
            result = provider.sign(handle, SignScheme.ECDSA_SHA256,
                                   b"m%d" % i)
            bucket = short if result.nonce < 1 << 248 else full
            bucket.append(result.wall_time_ms)
        assert sum(short) / len(short) < sum(full) / len(full) - 1.0
