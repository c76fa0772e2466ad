"""Blind parameter recovery with a known private key: pull the ECDSA
nonce out of a signature, the salt out of a PSS encoding, and the seed
out of an OAEP ciphertext. This is what lets the cross-validation
pipeline inspect a provider's randomness from the outside.

    python3 demos/parameter_recovery_walkthrough.py
"""

from cct import ec, keys, rsa_padding, xvalidate
from cct.keys import KeyAlgo
from cct.provider import RandomSource


def main():
    src = RandomSource.uniform(42)
    rsa_key = keys.fixed_keys()[KeyAlgo.RSA_1024]
    ec_key = keys.fixed_keys()[KeyAlgo.EC_P256]
    n, e = rsa_key.public["n"], rsa_key.public["e"]

    # 1. ECDSA nonce: with d known, k = (z + r*d) / s mod N
    d = ec_key.private["d"]
    k = keys.scalar_from_rng(src)
    r, s = ec.ecdsa_sign_raw(d, b"audit me", k)
    recovered = xvalidate.recover_ecdsa_nonce(
        d, b"audit me", ec.der_encode_signature(r, s))
    print("nonce recovered exactly:" if recovered == k
          else "nonce recovered up to sign flip (N - k):",
          hex(recovered)[:20], "...")

    # 2. PSS salt: invert the public operation, strip MGF1, read the salt
    salt = src.bytes(32)
    em = rsa_padding.emsa_pss_encode(b"salted", n.bit_length() - 1, salt)
    sig = keys.rsa_private_op(
        rsa_key, int.from_bytes(em, "big")).to_bytes(128, "big")
    got = xvalidate.recover_pss_salt(rsa_key, sig)
    print("pss salt round-trips bit-exactly:", got == salt)

    # 3. OAEP seed: decrypt with the private key, unmask both halves
    seed = src.bytes(32)
    em = rsa_padding.eme_oaep_encode(b"secret payload", 128, seed)
    ct = keys.rsa_public_op(n, e, int.from_bytes(em, "big")).to_bytes(128, "big")
    got_seed, message = xvalidate.recover_oaep_seed(rsa_key, ct)
    print("oaep seed round-trips bit-exactly:", got_seed == seed,
          "| message:", message)


if __name__ == "__main__":
    main()
