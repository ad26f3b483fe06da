//! Small-exponent RSA instances, the continued-fraction baseline, and
//! factoring from a known totient.

use num_bigint::{BigInt, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{dec, dec_opt};
use crate::lattice::log2_big;

/// Public half of a key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey {
    #[serde(with = "dec")]
    pub n: BigInt,
    #[serde(with = "dec")]
    pub e: BigInt,
}

impl PublicKey {
    pub fn new(n: BigInt, e: BigInt) -> Result<Self> {
        if e <= BigInt::one() || e >= n {
            return Err(Error::InvalidParameter("public exponent must satisfy 1 < e < n".into()));
        }
        Ok(Self { n, e })
    }
}

/// Full key material of a generated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RsaInstance {
    pub n: BigInt,
    pub e: BigInt,
    pub p: BigInt,
    pub q: BigInt,
    pub d: BigInt,
    /// `(e d - 1) / phi`
    pub k: BigInt,
    pub phi: BigInt,
    /// Requested size exponent: `d < n^(delta + 0.005)`.
    pub delta: f64,
    pub seed: u64,
    pub modulus_bits: u32,
}

impl RsaInstance {
    pub fn public_key(&self) -> PublicKey {
        PublicKey {
            n: self.n.clone(),
            e: self.e.clone(),
        }
    }

    /// `log_n d` of the actual secret exponent.
    pub fn actual_delta(&self) -> f64 {
        log2_big(&self.d) / log2_big(&self.n)
    }

    /// The secret root `(k, p + q - 1)` of `x (n - y) + 1` modulo `e`.
    pub fn secret_root(&self) -> (BigInt, BigInt) {
        (self.k.clone(), &self.n - &self.phi)
    }

    /// Rebuilds an instance from `p`, `q`, `d` (e.g. a fixed test vector).
    pub fn from_secrets(p: BigInt, q: BigInt, d: BigInt) -> Result<Self> {
        let n = &p * &q;
        let phi = (&p - 1) * (&q - 1);
        let e =
            mod_inverse(&d, &phi).ok_or_else(|| Error::InvalidParameter("d is not invertible modulo phi(n)".into()))?;
        let k = (&e * &d - 1) / &phi;
        let delta = log2_big(&d) / log2_big(&n);
        Ok(Self {
            modulus_bits: n.bits() as u32,
            n,
            e,
            p,
            q,
            d,
            k,
            phi,
            delta,
            seed: 0,
        })
    }

    pub fn to_record(&self, emit_secrets: bool) -> InstanceRecord {
        let s = |v: &BigInt| emit_secrets.then(|| v.clone());
        InstanceRecord {
            n: self.n.clone(),
            e: self.e.clone(),
            p: s(&self.p),
            q: s(&self.q),
            d: s(&self.d),
            k: s(&self.k),
            phi: s(&self.phi),
            delta: Some(self.delta),
            seed: Some(self.seed),
            modulus_bits: Some(self.modulus_bits),
        }
    }
}

/// JSON form of an instance. Integers are decimal strings; every secret
/// field is optional so public-only keys can be imported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    #[serde(with = "dec")]
    pub n: BigInt,
    #[serde(with = "dec")]
    pub e: BigInt,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub p: Option<BigInt>,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub q: Option<BigInt>,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub d: Option<BigInt>,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub k: Option<BigInt>,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub phi: Option<BigInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_bits: Option<u32>,
}

impl InstanceRecord {
    pub fn public_key(&self) -> Result<PublicKey> {
        PublicKey::new(self.n.clone(), self.e.clone())
    }

    /// The full instance when enough secrets are present and consistent.
    pub fn instance(&self) -> Option<RsaInstance> {
        let (p, q) = match (&self.p, &self.q) {
            (Some(p), Some(q)) => (p.clone(), q.clone()),
            _ => {
                let phi = self.phi.clone()?;
                recover_factors_from_phi(&self.n, &phi)?
            }
        };
        if &p * &q != self.n {
            return None;
        }
        let phi = (&p - 1) * (&q - 1);
        let d = match &self.d {
            Some(d) => d.clone(),
            None => mod_inverse(&self.e, &phi)?,
        };
        if (&self.e * &d).mod_floor(&phi) != BigInt::one() {
            return None;
        }
        let k = (&self.e * &d - 1) / &phi;
        Some(RsaInstance {
            modulus_bits: self.modulus_bits.unwrap_or(self.n.bits() as u32),
            delta: self.delta.unwrap_or_else(|| log2_big(&d) / log2_big(&self.n)),
            seed: self.seed.unwrap_or(0),
            n: self.n.clone(),
            e: self.e.clone(),
            p,
            q,
            d,
            k,
            phi,
        })
    }
}

/// Knobs for [`keygen_with`].
#[derive(Clone, Debug)]
pub struct KeygenConfig {
    /// Resample `d` until `e > n^min_e_exponent`.
    pub min_e_exponent: f64,
    pub mr_rounds: usize,
}

impl Default for KeygenConfig {
    fn default() -> Self {
        Self {
            min_e_exponent: 0.9,
            mr_rounds: 40,
        }
    }
}

pub fn keygen(modulus_bits: u32, delta: f64, seed: u64) -> Result<RsaInstance> {
    keygen_with(modulus_bits, delta, seed, &KeygenConfig::default())
}

/// Deterministic instance with balanced primes and an odd `d` of exactly
/// `floor(delta * modulus_bits)` bits.
pub fn keygen_with(modulus_bits: u32, delta: f64, seed: u64, cfg: &KeygenConfig) -> Result<RsaInstance> {
    if modulus_bits < 128 {
        return Err(Error::InvalidParameter(format!("modulus_bits = {modulus_bits} < 128")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 0.5)")));
    }
    let d_bits = (delta * modulus_bits as f64).floor() as u64;
    if d_bits < 16 {
        return Err(Error::InvalidParameter(format!(
            "delta * modulus_bits = {} < 16",
            delta * modulus_bits as f64
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p_bits = (modulus_bits / 2) as u64;
    let q_bits = modulus_bits as u64 - p_bits;
    let p = random_prime(p_bits, cfg.mr_rounds, &mut rng)?;
    let q = loop {
        let q = random_prime(q_bits, cfg.mr_rounds, &mut rng)?;
        if q != p {
            break q;
        }
    };
    let n = &p * &q;
    let phi = (&p - 1) * (&q - 1);
    let log_n = log2_big(&n);
    for _ in 0..10_000 {
        let d = random_exact_bits(d_bits, &mut rng) | BigInt::one();
        if !d.gcd(&phi).is_one() {
            continue;
        }
        let e = mod_inverse(&d, &phi).expect("gcd checked");
        if log2_big(&e) <= cfg.min_e_exponent * log_n {
            continue;
        }
        let k = (&e * &d - 1) / &phi;
        return Ok(RsaInstance {
            n,
            e,
            p,
            q,
            d,
            k,
            phi,
            delta,
            seed,
            modulus_bits,
        });
    }
    Err(Error::InvalidParameter("could not draw a suitable d".into()))
}

fn random_exact_bits<R: rand::Rng>(bits: u64, rng: &mut R) -> BigInt {
    let v = rng.gen_biguint(bits) | (num_bigint::BigUint::one() << (bits - 1));
    BigInt::from_biguint(Sign::Plus, v)
}

/// Random prime with exactly `bits` bits and the top two bits set.
pub fn random_prime<R: rand::Rng>(bits: u64, rounds: usize, rng: &mut R) -> Result<BigInt> {
    let attempts = 200 * bits as usize;
    for _ in 0..attempts {
        let mut c = random_exact_bits(bits, rng) | BigInt::one();
        if bits >= 2 {
            c |= BigInt::one() << (bits - 2);
        }
        if is_probable_prime(&c, rounds, rng) {
            return Ok(c);
        }
    }
    Err(Error::PrimeGeneration(attempts))
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251,
];

/// Trial division by small primes, then `rounds` strong probable-prime tests.
pub fn is_probable_prime<R: rand::Rng>(n: &BigInt, rounds: usize, rng: &mut R) -> bool {
    if n < &BigInt::from(2) {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigInt::from(sp);
        if n == &sp {
            return true;
        }
        if n.is_multiple_of(&sp) {
            return false;
        }
    }
    let one = BigInt::one();
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let t = &n1 >> s;
    let two = BigInt::from(2);
    'witness: for _ in 0..rounds {
        let a = rng.gen_bigint_range(&two, &n1);
        let mut x = a.modpow(&t, n);
        if x == one || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `a^-1 mod m` for `m > 1`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// Integer square root when `v` is a perfect square.
pub fn exact_sqrt(v: &BigInt) -> Option<BigInt> {
    if v.is_negative() {
        return None;
    }
    let r = v.sqrt();
    (&r * &r == *v).then_some(r)
}

/// Splits `n` given a candidate totient: returns `(p, q)` with `p <= q`.
pub fn recover_factors_from_phi(n: &BigInt, phi: &BigInt) -> Option<(BigInt, BigInt)> {
    let s = n - phi + 1;
    let disc = &s * &s - (n << 2u32);
    let t = exact_sqrt(&disc)?;
    let (p2, q2): (BigInt, BigInt) = (&s - &t, &s + &t);
    if p2.is_odd() || q2.is_odd() {
        return None;
    }
    let (p, q) = (p2 >> 1u32, q2 >> 1u32);
    let one = BigInt::one();
    (p > one && q > one && &p * &q == *n).then_some((p, q))
}

/// Secret material found by [`wiener`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WienerResult {
    pub d: BigInt,
    pub p: BigInt,
    pub q: BigInt,
}

/// Tries every continued-fraction convergent `k/d` of `e/n`.
pub fn wiener(pk: &PublicKey) -> Option<WienerResult> {
    let (mut num, mut den) = (pk.e.clone(), pk.n.clone());
    // h_{-2}/k_{-2} = 0/1, h_{-1}/k_{-1} = 1/0
    let (mut h2, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k2, mut k1) = (BigInt::one(), BigInt::zero());
    while !den.is_zero() {
        let (a, r) = Integer::div_rem(&num, &den);
        let h = &a * &h1 + &h2;
        let k = &a * &k1 + &k2;
        if let Some(res) = try_convergent(pk, &h, &k) {
            return Some(res);
        }
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        (num, den) = (den, r);
    }
    None
}

fn try_convergent(pk: &PublicKey, k: &BigInt, d: &BigInt) -> Option<WienerResult> {
    if !k.is_positive() || !d.is_positive() {
        return None;
    }
    let ed1 = &pk.e * d - 1;
    let (phi, rem) = Integer::div_rem(&ed1, k);
    if !rem.is_zero() {
        return None;
    }
    let (p, q) = recover_factors_from_phi(&pk.n, &phi)?;
    Some(WienerResult { d: d.clone(), p, q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn keygen_defining_relations() {
        for seed in 0..5 {
            let inst = keygen(256, 0.26, seed).unwrap();
            assert_eq!(&inst.p * &inst.q, inst.n);
            assert_eq!(inst.phi, &inst.n - &inst.p - &inst.q + 1);
            assert_eq!((&inst.e * &inst.d).mod_floor(&inst.phi), BigInt::one());
            assert_eq!(&inst.e * &inst.d, BigInt::one() + &inst.k * &inst.phi);
            assert_eq!(inst.n.bits(), 256);
            assert!((inst.p.bits() as i64 - inst.q.bits() as i64).abs() <= 2);
            assert!(inst.actual_delta() < inst.delta + 0.005);
            assert!(log2_big(&inst.e) > 0.9 * log2_big(&inst.n));
        }
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = keygen(256, 0.26, 42).unwrap();
        let b = keygen(256, 0.26, 42).unwrap();
        assert_eq!(a, b);
        assert!((65..=67).contains(&a.d.bits()));
        assert_ne!(a, keygen(256, 0.26, 43).unwrap());
    }

    #[test]
    fn keygen_bounds() {
        assert!(keygen(64, 0.26, 1).is_err());
        assert!(keygen(256, 0.6, 1).is_err());
        assert!(keygen(256, 0.0, 1).is_err());
        assert!(keygen(128, 0.1, 1).is_err());
    }

    #[test]
    fn primality_small() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let primes: Vec<i64> = (0..200).filter(|&v| is_probable_prime(&big(v), 10, &mut rng)).collect();
        assert_eq!(&primes[..10], &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(primes.len(), 46);
        // Carmichael number
        assert!(!is_probable_prime(&big(561), 10, &mut rng));
        assert!(is_probable_prime(&big(2_147_483_647), 10, &mut rng));
    }

    #[test]
    fn factors_from_phi() {
        assert_eq!(recover_factors_from_phi(&big(15), &big(8)), Some((big(3), big(5))));
        assert_eq!(recover_factors_from_phi(&big(35), &big(24)), Some((big(5), big(7))));
        assert_eq!(recover_factors_from_phi(&big(35), &big(23)), None);
        let inst = keygen(256, 0.26, 3).unwrap();
        let (p, q) = recover_factors_from_phi(&inst.n, &inst.phi).unwrap();
        assert_eq!((p, q), (inst.p.clone().min(inst.q.clone()), inst.p.max(inst.q)));
    }

    #[test]
    fn wiener_textbook_instance() {
        // p = 379, q = 239, d = 5: 17993 * 5 = 1 + 89964
        let pk = PublicKey::new(big(90581), big(17993)).unwrap();
        let r = wiener(&pk).unwrap();
        assert_eq!(r.d, big(5));
        assert_eq!((r.p, r.q), (big(239), big(379)));
    }

    #[test]
    fn wiener_tiny_key_outside_convergents() {
        // n = 15, e = d = 3: 1/3 is not a convergent of 3/15, so nothing is found.
        let pk = PublicKey::new(big(15), big(3)).unwrap();
        assert_eq!(wiener(&pk), None);
    }

    #[test]
    fn wiener_breaks_small_d() {
        let inst = keygen(512, 0.20, 11).unwrap();
        let r = wiener(&inst.public_key()).unwrap();
        assert_eq!(r.d, inst.d);
    }

    #[test]
    fn wiener_fails_above_quarter() {
        for seed in 0..20 {
            let inst = keygen(512, 0.30, seed).unwrap();
            assert!(wiener(&inst.public_key()).is_none());
        }
    }

    #[test]
    fn record_roundtrip_and_public_only() {
        let inst = keygen(256, 0.26, 9).unwrap();
        let json = serde_json::to_string(&inst.to_record(true)).unwrap();
        let back: InstanceRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.instance().unwrap(), inst);
        let public = serde_json::to_string(&inst.to_record(false)).unwrap();
        assert!(!public.contains("\"d\""));
        let back: InstanceRecord = serde_json::from_str(&public).unwrap();
        assert!(back.instance().is_none());
        assert_eq!(back.public_key().unwrap(), inst.public_key());
        let min: InstanceRecord = serde_json::from_str(r#"{"n":"90581","e":"17993"}"#).unwrap();
        assert_eq!(min.e, big(17993));
    }
}
