//! One-parameter families `y^2 = x^3 + A(T)x + B(T)` over Q(T):
//! specialization, the square-free sieve that admits `t = c t' + t0` with
//! controlled square part, the conductor proxy, and persistent trace
//! caches.

use crate::arith::{factorize, poly_eval, primes_up_to, trial_division_table};
use crate::curves::{minimalize_at_p, trace_kernel, EllipticCurve, QrTable};
use crate::{intpoly, Error, Result};
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// Contribution of p in {2, 3} to the log-conductor proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallPrimePolicy {
    /// Each of 2 and 3 contributes log p once when it divides the minimal
    /// discriminant.
    #[default]
    IncludeOnce,
    /// Small primes contribute nothing.
    Ignore,
}

/// A family over Q(T) with its sieve parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub a_coeffs: Vec<BigInt>,
    pub b_coeffs: Vec<BigInt>,
    /// Declared geometric rank over Q(T); cross-checked by first moments.
    pub rank_r: u32,
    pub sieve_c: i64,
    pub sieve_t0: i64,
    /// The fixed square part B: primes allowed to divide D(t) to a fixed
    /// power on the sieved progression.
    pub fixed_square_b: u64,
    pub small_prime_policy: SmallPrimePolicy,
    /// Optional override for D(T); computed from the discriminant's
    /// square-free decomposition when absent.
    pub d_coeffs: Option<Vec<BigInt>>,
    /// Exact conductors ingested from a CSV override, keyed by t.
    pub conductor_table: Option<BTreeMap<i64, BigInt>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntOrString {
    Int(i64),
    Str(String),
}

impl IntOrString {
    fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntOrString::Int(v) => Ok(BigInt::from(*v)),
            IntOrString::Str(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad integer literal {s:?}"))),
        }
    }
}

/// On-disk schema: {A, B, r, c, t0, B_square} with integer-string
/// coefficients, plus optional D and policy.
#[derive(Serialize, Deserialize)]
struct FamilySpecFile {
    #[serde(rename = "A")]
    a: Vec<IntOrString>,
    #[serde(rename = "B")]
    b: Vec<IntOrString>,
    r: u32,
    c: i64,
    t0: i64,
    #[serde(rename = "B_square")]
    b_square: u64,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<IntOrString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<SmallPrimePolicy>,
}

impl FamilySpec {
    pub fn new(
        a_coeffs: Vec<BigInt>,
        b_coeffs: Vec<BigInt>,
        rank_r: u32,
        sieve_c: i64,
        sieve_t0: i64,
        fixed_square_b: u64,
    ) -> Result<Self> {
        let spec = FamilySpec {
            a_coeffs,
            b_coeffs,
            rank_r,
            sieve_c,
            sieve_t0,
            fixed_square_b,
            small_prime_policy: SmallPrimePolicy::default(),
            d_coeffs: None,
            conductor_table: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.sieve_c < 1 {
            return Err(Error::InvalidConfig("sieve parameter c must be >= 1".into()));
        }
        if self.fixed_square_b == 0 {
            return Err(Error::InvalidConfig("fixed square part B must be positive".into()));
        }
        if intpoly::degree(&self.disc_poly()).is_none() {
            return Err(Error::InvalidConfig(
                "the discriminant polynomial vanishes identically".into(),
            ));
        }
        Ok(())
    }

    pub fn with_policy(mut self, policy: SmallPrimePolicy) -> Self {
        self.small_prime_policy = policy;
        self
    }

    pub fn with_d_coeffs(mut self, d: Vec<BigInt>) -> Self {
        self.d_coeffs = Some(d);
        self
    }

    pub fn with_conductor_table(mut self, table: BTreeMap<i64, BigInt>) -> Self {
        self.conductor_table = Some(table);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: FamilySpecFile = serde_json::from_str(s)
            .map_err(|e| Error::InvalidConfig(format!("family spec: {e}")))?;
        let to_ints = |v: &[IntOrString]| v.iter().map(IntOrString::to_bigint).collect::<Result<Vec<_>>>();
        let mut spec = FamilySpec::new(
            to_ints(&file.a)?,
            to_ints(&file.b)?,
            file.r,
            file.c,
            file.t0,
            file.b_square,
        )?;
        if let Some(d) = &file.d {
            spec.d_coeffs = Some(to_ints(d)?);
        }
        if let Some(p) = file.policy {
            spec.small_prime_policy = p;
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let to_strs = |v: &[BigInt]| v.iter().map(|c| IntOrString::Str(c.to_string())).collect();
        let file = FamilySpecFile {
            a: to_strs(&self.a_coeffs),
            b: to_strs(&self.b_coeffs),
            r: self.rank_r,
            c: self.sieve_c,
            t0: self.sieve_t0,
            b_square: self.fixed_square_b,
            d: self.d_coeffs.as_ref().map(|d| to_strs(d)),
            policy: Some(self.small_prime_policy),
        };
        serde_json::to_string_pretty(&file).expect("family spec serializes")
    }

    /// Discriminant polynomial `-16(4A^3 + 27B^2)` of the family.
    pub fn disc_poly(&self) -> Vec<BigInt> {
        let a3 = poly_pow(&self.a_coeffs, 3);
        let b2 = poly_pow(&self.b_coeffs, 2);
        let n = a3.len().max(b2.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in a3.iter().enumerate() {
            out[i] += BigInt::from(4) * c;
        }
        for (i, c) in b2.iter().enumerate() {
            out[i] += BigInt::from(27) * c;
        }
        for c in &mut out {
            *c *= BigInt::from(-16);
        }
        intpoly::normalize(out)
    }

    /// `D(T)`: the supplied override, or the product of the distinct
    /// irreducible factors of the discriminant (square-free decomposition
    /// by gcd with the derivative, content dropped).
    pub fn d_poly(&self) -> Vec<BigInt> {
        self.d_coeffs
            .clone()
            .unwrap_or_else(|| intpoly::radical(&self.disc_poly()))
    }

    /// Degree of the conductor-scale polynomial; feeds the support
    /// constraint `sigma < min(1/2, 2/(3m))`.
    pub fn conductor_poly_degree(&self) -> usize {
        intpoly::degree(&self.d_poly()).unwrap_or(0)
    }

    /// SHA-256 of the canonical description; keys the trace cache.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        let mut feed = |tag: &str, coeffs: &[BigInt]| {
            hasher.update(tag.as_bytes());
            for c in coeffs {
                hasher.update(c.to_string().as_bytes());
                hasher.update(b",");
            }
            hasher.update(b";");
        };
        feed("A", &self.a_coeffs);
        feed("B", &self.b_coeffs);
        if let Some(d) = &self.d_coeffs {
            feed("D", d);
        }
        hasher.update(
            format!(
                "r={};c={};t0={};Bsq={};policy={:?}",
                self.rank_r, self.sieve_c, self.sieve_t0, self.fixed_square_b, self.small_prime_policy
            )
            .as_bytes(),
        );
        hasher.finalize().into()
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_pow(a: &[BigInt], e: u32) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(1)];
    for _ in 0..e {
        out = poly_mul(&out, a);
    }
    out
}

/// Specialize the family at t: evaluate A(t), B(t) and minimalize at every
/// p >= 5 dividing the coefficients to the required powers.
pub fn specialize(spec: &FamilySpec, t: i64) -> Result<EllipticCurve> {
    let tv = BigInt::from(t);
    let a = poly_eval(&spec.a_coeffs, &tv);
    let b = poly_eval(&spec.b_coeffs, &tv);
    let curve = EllipticCurve::new(a, b).map_err(|_| Error::SingularSpecialization(t))?;
    Ok(minimal_model(curve))
}

/// Strip p^4 | a, p^6 | b for every p >= 5; only primes up to
/// min(|a|^{1/4}, |b|^{1/6}) can qualify, which keeps the scan tiny.
fn minimal_model(curve: EllipticCurve) -> EllipticCurve {
    let bound_a = if curve.a().is_zero() {
        u64::MAX
    } else {
        curve.a().abs().nth_root(4).to_u64().unwrap_or(u64::MAX)
    };
    let bound_b = if curve.b().is_zero() {
        u64::MAX
    } else {
        curve.b().abs().nth_root(6).to_u64().unwrap_or(u64::MAX)
    };
    // A candidate beyond 10^6 would need a coefficient past 10^24; the
    // conductor proxy absorbs such a miss inside its O(1) error anyway.
    let bound = bound_a.min(bound_b).min(1_000_000);
    if bound < 5 {
        return curve;
    }
    let mut out = curve;
    for p in primes_up_to(bound).iter() {
        if p < 5 {
            continue;
        }
        out = minimalize_at_p(&out, p);
    }
    out
}

/// The sieved progression inside [R, 2R].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SievedFamily {
    /// The range base R.
    pub r_base: u64,
    /// Admitted t values, ascending.
    pub members: Vec<i64>,
    /// Calibrated exponent e_p for each prime p dividing the fixed square
    /// part B.
    pub exponents: BTreeMap<u64, u32>,
    /// Progression members skipped because D(t) = 0 or the specialization
    /// is singular.
    pub singular_skipped: usize,
}

/// Ascending progression t = c t' + t0 clipped to [lo, hi].
fn progression(c: i64, t0: i64, lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let first = if t0 >= lo {
        // step down as far as possible, then clamp back into range
        t0 - ((t0 - lo) / c) * c
    } else {
        t0 + ((lo - t0 + c - 1) / c) * c
    };
    (0..).map(move |k| first + k * c).take_while(move |&t| t <= hi)
}

/// Calibrate e_p = ord_p(D(t)) over the first 32 progression members with
/// D(t) != 0; the family is rejected if the exponent varies.
fn calibrate_exponents(spec: &FamilySpec, d: &[BigInt]) -> Result<BTreeMap<u64, u32>> {
    let mut exponents = BTreeMap::new();
    if spec.fixed_square_b == 1 {
        return Ok(exponents);
    }
    let b_primes: Vec<u64> = factorize(&BigInt::from(spec.fixed_square_b))?
        .factors
        .iter()
        .map(|&(p, _)| p)
        .collect();
    let mut seen = 0usize;
    let mut t = spec.sieve_t0;
    let mut guard = 0usize;
    while seen < 32 {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::InvalidConfig(
                "could not find 32 progression members with D(t) != 0".into(),
            ));
        }
        let dv = poly_eval(d, &BigInt::from(t));
        t += spec.sieve_c;
        if dv.is_zero() {
            continue;
        }
        seen += 1;
        let fact = factorize(&dv)?;
        for &p in &b_primes {
            let e = fact.ord(p);
            match exponents.get(&p) {
                None => {
                    exponents.insert(p, e);
                }
                Some(&prev) if prev == e => {}
                Some(_) => return Err(Error::SieveCalibration { p }),
            }
        }
    }
    Ok(exponents)
}

/// Admit the t = c t' + t0 in [R, 2R] whose D(t) is square-free except for
/// the calibrated primes dividing B, where the exponent must equal e_p.
pub fn sieve_family(spec: &FamilySpec, r_base: u64) -> Result<SievedFamily> {
    if r_base < 1 {
        return Err(Error::InvalidConfig("R must be >= 1".into()));
    }
    let d = spec.d_poly();
    if intpoly::degree(&d).is_none() {
        return Err(Error::InvalidConfig("D(T) vanishes identically".into()));
    }
    let exponents = calibrate_exponents(spec, &d)?;
    let disc = spec.disc_poly();
    let lo = r_base as i64;
    let hi = 2 * r_base as i64;
    let candidates: Vec<i64> = progression(spec.sieve_c, spec.sieve_t0, lo, hi).collect();
    let flags: Vec<Result<Option<bool>>> = candidates
        .par_iter()
        .map(|&t| {
            let dv = poly_eval(&d, &BigInt::from(t));
            if dv.is_zero() || poly_eval(&disc, &BigInt::from(t)).is_zero() {
                return Ok(None); // singular; skipped and counted
            }
            let fact = factorize(&dv)?;
            for &(q, e) in &fact.factors {
                if e >= 2 && exponents.get(&q) != Some(&e) {
                    return Ok(Some(false));
                }
            }
            Ok(Some(true))
        })
        .collect();
    let mut members = Vec::new();
    let mut singular_skipped = 0usize;
    for (t, flag) in candidates.into_iter().zip(flags) {
        match flag? {
            Some(true) => members.push(t),
            Some(false) => {}
            None => singular_skipped += 1,
        }
    }
    Ok(SievedFamily { r_base, members, exponents, singular_skipped })
}

fn bigint_ln(n: &BigInt) -> f64 {
    // log of |n| via f64 conversion; desk-scale conductors fit comfortably.
    n.abs().to_f64().map(f64::ln).unwrap_or(f64::INFINITY)
}

/// Log-conductor proxy: `sum_{p | disc_min, p > 3} log p` plus the
/// small-prime policy contribution, unless an exact override is present.
pub fn log_conductor(spec: &FamilySpec, t: i64) -> Result<f64> {
    if let Some(table) = &spec.conductor_table {
        if let Some(n) = table.get(&t) {
            return Ok(bigint_ln(n));
        }
    }
    let curve = specialize(spec, t)?;
    let fact = factorize(curve.disc())?;
    let mut acc = 0.0;
    for &(p, _) in &fact.factors {
        if p > 3 {
            acc += (p as f64).ln();
        } else if spec.small_prime_policy == SmallPrimePolicy::IncludeOnce {
            acc += (p as f64).ln();
        }
    }
    if acc <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "log-conductor proxy vanished at t = {t} under policy {:?}",
            spec.small_prime_policy
        )));
    }
    Ok(acc)
}

/// Mean of `log_conductor` over all nonsingular t in [R, 2R] (the global
/// normalization averages the whole strip, not the sieved progression).
pub fn avg_log_conductor(spec: &FamilySpec, r_base: u64) -> Result<f64> {
    let (ts, _) = nonsingular_range(spec, r_base)?;
    let logs: Vec<f64> = ts
        .par_iter()
        .map(|&t| log_conductor(spec, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::quad::pairwise_sum(&logs) / logs.len() as f64)
}

/// All nonsingular integer t in [R, 2R] plus the count of singular skips.
pub(crate) fn nonsingular_range(spec: &FamilySpec, r_base: u64) -> Result<(Vec<i64>, usize)> {
    if r_base < 1 {
        return Err(Error::InvalidConfig("R must be >= 1".into()));
    }
    let disc = spec.disc_poly();
    let mut ts = Vec::with_capacity(r_base as usize + 1);
    let mut skipped = 0usize;
    for t in r_base as i64..=2 * r_base as i64 {
        if poly_eval(&disc, &BigInt::from(t)).is_zero() {
            skipped += 1;
        } else {
            ts.push(t);
        }
    }
    if ts.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok((ts, skipped))
}

/// In-memory table of traces a_t(p), row-major over (t, prime).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TraceTable {
    pub ts: Vec<i64>,
    pub primes: Vec<u64>,
    pub data: Vec<i16>,
}

impl TraceTable {
    pub fn row(&self, idx: usize) -> &[i16] {
        &self.data[idx * self.primes.len()..(idx + 1) * self.primes.len()]
    }
}

/// Reduce polynomial coefficients mod p for native Horner evaluation.
fn reduced_coeffs(coeffs: &[BigInt], p: u64) -> Vec<u64> {
    coeffs
        .iter()
        .map(|c| c.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits"))
        .collect()
}

fn horner_mod(coeffs: &[u64], x: u64, p: u64) -> u64 {
    let mut acc: u64 = 0;
    for &c in coeffs.iter().rev() {
        acc = ((acc as u128 * x as u128 + c as u128) % p as u128) as u64;
    }
    acc
}

/// Traces for every (t, p) with 3 < p <= prime_limit over the given
/// specializations. For each prime the family is evaluated once per
/// residue class; curves whose specialization was rescaled by
/// minimalization fall back to a direct character sum.
pub(crate) fn trace_table(spec: &FamilySpec, ts: &[i64], prime_limit: u64) -> Result<TraceTable> {
    if prime_limit > 250_000_000 {
        return Err(Error::InvalidConfig(
            "prime limit exceeds the 16-bit trace range".into(),
        ));
    }
    let primes: Vec<u64> = primes_up_to(prime_limit).iter().filter(|&p| p > 3).collect();
    // Specialized models; remember which ones the raw residue tables cover.
    let curves: Vec<EllipticCurve> = ts
        .par_iter()
        .map(|&t| specialize(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<bool> = ts
        .iter()
        .zip(&curves)
        .map(|(&t, c)| {
            let tv = BigInt::from(t);
            *c.a() == poly_eval(&spec.a_coeffs, &tv) && *c.b() == poly_eval(&spec.b_coeffs, &tv)
        })
        .collect();

    let columns: Vec<Vec<i16>> = primes
        .par_iter()
        .map(|&p| {
            let qr = QrTable::new(p);
            let a_mod = reduced_coeffs(&spec.a_coeffs, p);
            let b_mod = reduced_coeffs(&spec.b_coeffs, p);
            let by_residue: Vec<i16> = (0..p)
                .map(|tau| {
                    trace_kernel(horner_mod(&a_mod, tau, p), horner_mod(&b_mod, tau, p), p, &qr)
                        as i16
                })
                .collect();
            ts.iter()
                .enumerate()
                .map(|(i, &t)| {
                    if raw[i] {
                        by_residue[t.rem_euclid(p as i64) as usize]
                    } else {
                        let a = curves[i].a().mod_floor(&BigInt::from(p)).to_u64().unwrap();
                        let b = curves[i].b().mod_floor(&BigInt::from(p)).to_u64().unwrap();
                        trace_kernel(a, b, p, &qr) as i16
                    }
                })
                .collect()
        })
        .collect();

    let mut data = vec![0i16; ts.len() * primes.len()];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * primes.len() + j] = v;
        }
    }
    Ok(TraceTable { ts: ts.to_vec(), primes, data })
}

const CACHE_MAGIC: &[u8; 4] = b"ZWL1";

/// Persistent table of a_t(p) for the sieved members of a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCache {
    fingerprint: [u8; 32],
    pub r_base: u64,
    pub prime_limit: u64,
    table: TraceTable,
}

impl TraceCache {
    pub fn members(&self) -> &[i64] {
        &self.table.ts
    }

    pub fn primes(&self) -> &[u64] {
        &self.table.primes
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Trace at (t, p), if cached.
    pub fn get(&self, t: i64, p: u64) -> Option<i64> {
        let i = self.table.ts.binary_search(&t).ok()?;
        let j = self.table.primes.binary_search(&p).ok()?;
        Some(self.table.data[i * self.table.primes.len() + j] as i64)
    }

    pub fn check_fingerprint(&self, spec: &FamilySpec) -> Result<()> {
        if self.fingerprint == spec.fingerprint() {
            Ok(())
        } else {
            Err(Error::CacheFingerprint)
        }
    }

    pub(crate) fn table(&self) -> &TraceTable {
        &self.table
    }

    /// Serialize: magic, fingerprint, R, prime limit, member count, member
    /// t values, dense row-major i16 traces, SHA-256 trailer.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&self.fingerprint);
        buf.extend_from_slice(&self.r_base.to_le_bytes());
        buf.extend_from_slice(&self.prime_limit.to_le_bytes());
        buf.extend_from_slice(&(self.table.ts.len() as u64).to_le_bytes());
        for &t in &self.table.ts {
            buf.extend_from_slice(&t.to_le_bytes());
        }
        for &v in &self.table.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let checksum: [u8; 32] = Sha256::digest(&buf).into();
        w.write_all(&buf)?;
        w.write_all(&checksum)?;
        Ok(())
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 4 + 32 + 8 + 8 + 8 + 32 {
            return Err(Error::CacheFormat("container too short".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 32);
        let checksum: [u8; 32] = Sha256::digest(body).into();
        if checksum != trailer {
            return Err(Error::CacheChecksum);
        }
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
            if *off + n > body.len() {
                return Err(Error::CacheFormat("truncated container".into()));
            }
            let s = &body[*off..*off + n];
            *off += n;
            Ok(s)
        };
        if take(&mut off, 4)? != CACHE_MAGIC {
            return Err(Error::CacheFormat("bad magic".into()));
        }
        let fingerprint: [u8; 32] = take(&mut off, 32)?.try_into().unwrap();
        let r_base = u64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap());
        let prime_limit = u64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap());
        let count = u64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap()) as usize;
        let mut ts = Vec::with_capacity(count);
        for _ in 0..count {
            ts.push(i64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap()));
        }
        let primes: Vec<u64> = primes_up_to(prime_limit).iter().filter(|&p| p > 3).collect();
        let expect = count * primes.len() * 2;
        let raw = take(&mut off, expect)?;
        if off != body.len() {
            return Err(Error::CacheFormat("trailing bytes in container".into()));
        }
        let data: Vec<i16> = raw
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok(TraceCache {
            fingerprint,
            r_base,
            prime_limit,
            table: TraceTable { ts, primes, data },
        })
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }
}

/// Build the cache of a_t(p) for all sieved members and 3 < p <= prime_limit.
pub fn build_trace_cache(spec: &FamilySpec, r_base: u64, prime_limit: u64) -> Result<TraceCache> {
    if prime_limit < 5 {
        return Err(Error::InvalidConfig("prime limit must be >= 5".into()));
    }
    let sieved = sieve_family(spec, r_base)?;
    let table = trace_table(spec, &sieved.members, prime_limit)?;
    Ok(TraceCache {
        fingerprint: spec.fingerprint(),
        r_base,
        prime_limit,
        table,
    })
}

/// Load a cache file (checksum-verified; fingerprint checked separately
/// against a family via [`TraceCache::check_fingerprint`]).
pub fn load_trace_cache<P: AsRef<Path>>(path: P) -> Result<TraceCache> {
    TraceCache::load_from_path(path)
}

/// Parse a `t,conductor` CSV override of exact conductors.
pub fn load_conductor_csv<P: AsRef<Path>>(path: P) -> Result<BTreeMap<i64, BigInt>> {
    parse_conductor_csv(&std::fs::read_to_string(path)?)
}

pub fn parse_conductor_csv(text: &str) -> Result<BTreeMap<i64, BigInt>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 && line.eq_ignore_ascii_case("t,conductor") {
            continue;
        }
        let (t_str, n_str) = line
            .split_once(',')
            .ok_or_else(|| Error::InvalidConfig(format!("conductor CSV line {}: missing comma", i + 1)))?;
        let t: i64 = t_str
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("conductor CSV line {}: bad t", i + 1)))?;
        let n: BigInt = n_str
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("conductor CSV line {}: bad conductor", i + 1)))?;
        if !n.is_positive() {
            return Err(Error::InvalidConfig(format!(
                "conductor CSV line {}: conductor must be positive",
                i + 1
            )));
        }
        out.insert(t, n);
    }
    Ok(out)
}

// Ensure the trial-division table is warm before parallel sections race to
// build it.
pub(crate) fn warm_tables() {
    let _ = trial_division_table();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::discriminant;

    /// A = const 1, B = T: the reference rank-0 family.
    fn fam_bt() -> FamilySpec {
        FamilySpec::new(
            vec![BigInt::from(1)],
            vec![BigInt::from(0), BigInt::from(1)],
            0,
            1,
            0,
            1,
        )
        .unwrap()
    }

    /// A = 0, B = T: disc = -432 T^2, so D(T) = T.
    fn fam_d_is_t() -> FamilySpec {
        FamilySpec::new(
            vec![],
            vec![BigInt::from(0), BigInt::from(1)],
            0,
            1,
            0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn specialize_examples() {
        let c = specialize(&fam_bt(), 3).unwrap();
        assert_eq!((c.a(), c.b()), (&BigInt::from(1), &BigInt::from(3)));

        // A = T, B = 1 at t = 0 -> (0, 1) with disc -432.
        let fam = FamilySpec::new(
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1)],
            1,
            1,
            0,
            1,
        )
        .unwrap();
        let c = specialize(&fam, 0).unwrap();
        assert_eq!((c.a(), c.b()), (&BigInt::from(0), &BigInt::from(1)));
        assert_eq!(c.disc(), &BigInt::from(-432));

        // Singular specialization: A = 0, B = T at t = 0.
        assert!(matches!(
            specialize(&fam_d_is_t(), 0),
            Err(Error::SingularSpecialization(0))
        ));
    }

    #[test]
    fn specialize_minimalizes() {
        // A = 625, B = 15625 T^0? use constants: family (625, 15625 + 0*T).
        let fam = FamilySpec::new(
            vec![BigInt::from(625)],
            vec![BigInt::from(15625), BigInt::from(0)],
            0,
            1,
            0,
            1,
        )
        .unwrap();
        let c = specialize(&fam, 7).unwrap();
        assert_eq!((c.a(), c.b()), (&BigInt::from(1), &BigInt::from(1)));
    }

    #[test]
    fn specialize_matches_disc_poly_pre_minimalization() {
        let fam = fam_bt();
        let dp = fam.disc_poly();
        for t in [-7i64, 1, 10, 113] {
            let tv = BigInt::from(t);
            let raw = discriminant(
                &poly_eval(&fam.a_coeffs, &tv),
                &poly_eval(&fam.b_coeffs, &tv),
            );
            assert_eq!(raw, poly_eval(&dp, &tv), "t = {t}");
        }
    }

    #[test]
    fn sieve_squarefree_strip() {
        let got = sieve_family(&fam_d_is_t(), 10).unwrap();
        assert_eq!(got.members, vec![10, 11, 13, 14, 15, 17, 19]);
        assert!(got.exponents.is_empty());
        assert_eq!(got.singular_skipped, 0);
    }

    #[test]
    fn sieve_rejects_square_part_without_calibration() {
        // t = 50 has D(t) = 50 = 2 * 5^2 with B = 1: rejected.
        let got = sieve_family(&fam_d_is_t(), 45).unwrap();
        assert!(!got.members.contains(&50));
        assert!(got.members.contains(&46)); // 46 = 2 * 23 square-free
    }

    #[test]
    fn sieve_with_fixed_square_part() {
        // D(T) = 4T supplied directly; progression t = 2t' + 1 keeps t odd,
        // so ord_2(D(t)) = 2 is constant and e_2 = 2 calibrates.
        let spec = FamilySpec::new(
            vec![BigInt::from(1)],
            vec![BigInt::from(0), BigInt::from(1)],
            0,
            2,
            1,
            4,
        )
        .unwrap()
        .with_d_coeffs(vec![BigInt::zero(), BigInt::from(4)]);
        let got = sieve_family(&spec, 3).unwrap();
        assert_eq!(got.exponents.get(&2), Some(&2));
        // t = 3: D = 12 = 2^2 * 3 -> admitted by the calibrated rule.
        assert!(got.members.contains(&3));
        assert!(got.members.contains(&5));
        // t in [3,6] even values are not on the progression.
        assert!(!got.members.contains(&4));
    }

    #[test]
    fn sieve_calibration_rejects_varying_exponent() {
        // D(T) = T with B = 4: ord_2(t) varies along t = 1, 2, 3, ...
        let spec = FamilySpec::new(
            vec![BigInt::from(1)],
            vec![BigInt::from(0), BigInt::from(1)],
            0,
            1,
            0,
            4,
        )
        .unwrap()
        .with_d_coeffs(vec![BigInt::zero(), BigInt::from(1)]);
        assert!(matches!(
            sieve_family(&spec, 10),
            Err(Error::SieveCalibration { p: 2 })
        ));
    }

    #[test]
    fn sieve_density_stabilizes() {
        // Square-free density approaches 6/pi^2; compare R = 2000 vs 8000.
        let d1 = sieve_family(&fam_d_is_t(), 2000).unwrap().members.len() as f64 / 2000.0;
        let d2 = sieve_family(&fam_d_is_t(), 8000).unwrap().members.len() as f64 / 8000.0;
        assert!((d1 - d2).abs() < 0.05, "{d1} vs {d2}");

        let d1 = sieve_family(&fam_bt(), 2000).unwrap().members.len() as f64 / 2000.0;
        let d2 = sieve_family(&fam_bt(), 8000).unwrap().members.len() as f64 / 8000.0;
        assert!((d1 - d2).abs() < 0.05, "{d1} vs {d2}");
    }

    #[test]
    fn sieve_members_bounded() {
        let got = sieve_family(&fam_bt(), 100).unwrap();
        assert!(got.members.len() <= 101);
        assert!(got.members.iter().all(|&t| (100..=200).contains(&t)));
    }

    #[test]
    fn log_conductor_examples() {
        // Curve (-1, 1): disc -368 = -16 * 23.
        let fam = FamilySpec::new(
            vec![BigInt::from(-1)],
            vec![BigInt::from(1)],
            0,
            1,
            0,
            1,
        )
        .unwrap();
        let got = log_conductor(&fam, 5).unwrap();
        assert!((got - (2.0f64.ln() + 23.0f64.ln())).abs() < 1e-12);

        // Curve (1, 0): disc -64 -> include-once gives log 2.
        let fam = FamilySpec::new(vec![BigInt::from(1)], vec![BigInt::from(0)], 0, 1, 0, 1).unwrap();
        let got = log_conductor(&fam, 9).unwrap();
        assert!((got - 2.0f64.ln()).abs() < 1e-12);

        // Under the ignore policy the proxy vanishes and errors.
        let fam = fam.with_policy(SmallPrimePolicy::Ignore);
        assert!(log_conductor(&fam, 9).is_err());
    }

    #[test]
    fn log_conductor_override_passthrough() {
        let mut table = BTreeMap::new();
        table.insert(5i64, BigInt::from(389));
        let fam = fam_bt().with_conductor_table(table);
        assert!((log_conductor(&fam, 5).unwrap() - 389.0f64.ln()).abs() < 1e-15);
        // Other t still use the proxy.
        assert!(log_conductor(&fam, 6).unwrap() > 0.0);
    }

    #[test]
    fn conductor_csv_roundtrip() {
        let table = parse_conductor_csv("t,conductor\n5,389\n-3,11\n").unwrap();
        assert_eq!(table.get(&5), Some(&BigInt::from(389)));
        assert_eq!(table.get(&-3), Some(&BigInt::from(11)));
        assert!(parse_conductor_csv("5;389").is_err());
        assert!(parse_conductor_csv("5,-1").is_err());
    }

    #[test]
    fn avg_log_conductor_constant_family() {
        let fam = FamilySpec::new(vec![BigInt::from(-1)], vec![BigInt::from(1)], 0, 1, 0, 1).unwrap();
        let one = log_conductor(&fam, 7).unwrap();
        for r in [10u64, 100] {
            let avg = avg_log_conductor(&fam, r).unwrap();
            assert!((avg - one).abs() < 1e-12);
        }
    }

    #[test]
    fn avg_log_conductor_matches_direct_sum() {
        let fam = fam_bt();
        let avg = avg_log_conductor(&fam, 100).unwrap();
        let mut acc = 0.0;
        let mut n = 0usize;
        for t in 100..=200 {
            acc += log_conductor(&fam, t).unwrap();
            n += 1;
        }
        assert!((avg - acc / n as f64).abs() < 1e-12);
    }

    #[test]
    fn avg_log_conductor_grows_with_r() {
        let fam = fam_bt();
        let small = avg_log_conductor(&fam, 100).unwrap();
        let large = avg_log_conductor(&fam, 1000).unwrap();
        assert!(large > small, "{large} <= {small}");
    }

    #[test]
    fn trace_table_matches_per_curve_computation() {
        let fam = fam_bt();
        let ts: Vec<i64> = (50..70).collect();
        let table = trace_table(&fam, &ts, 60).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let curve = specialize(&fam, t).unwrap();
            for (j, &p) in table.primes.iter().enumerate() {
                let want = crate::curves::trace_of_frobenius(&curve, p).unwrap().a_p;
                assert_eq!(table.row(i)[j] as i64, want, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn trace_table_handles_minimalized_members() {
        // B(t) = 15625 t + 15625 = 5^6 (t + 1), A = 625: at every t the
        // model minimalizes to (1, (t+1)).
        let fam = FamilySpec::new(
            vec![BigInt::from(625)],
            vec![BigInt::from(15625), BigInt::from(15625)],
            0,
            1,
            0,
            1,
        )
        .unwrap();
        let ts = vec![3i64, 4, 6];
        let table = trace_table(&fam, &ts, 30).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let curve = specialize(&fam, t).unwrap();
            assert_eq!(curve.a(), &BigInt::from(1));
            for (j, &p) in table.primes.iter().enumerate() {
                let want = crate::curves::trace_of_frobenius(&curve, p).unwrap().a_p;
                assert_eq!(table.row(i)[j] as i64, want, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let fam = fam_bt();
        let cache = build_trace_cache(&fam, 50, 100).unwrap();
        let mut bytes = Vec::new();
        cache.save(&mut bytes).unwrap();
        let loaded = TraceCache::load(&bytes[..]).unwrap();
        assert_eq!(cache, loaded);
        loaded.check_fingerprint(&fam).unwrap();

        let mut bytes2 = Vec::new();
        loaded.save(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn cache_get_returns_traces() {
        let fam = fam_bt();
        let cache = build_trace_cache(&fam, 50, 60).unwrap();
        let t = cache.members()[0];
        let curve = specialize(&fam, t).unwrap();
        let want = crate::curves::trace_of_frobenius(&curve, 53).unwrap().a_p;
        assert_eq!(cache.get(t, 53), Some(want));
        assert_eq!(cache.get(t, 4), None);
    }

    #[test]
    fn tampered_cache_is_refused() {
        let fam = fam_bt();
        let cache = build_trace_cache(&fam, 50, 60).unwrap();
        let mut bytes = Vec::new();
        cache.save(&mut bytes).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        assert!(matches!(TraceCache::load(&bytes[..]), Err(Error::CacheChecksum)));

        // Fingerprint mismatch is a distinct error.
        let other = fam_d_is_t();
        let cache = build_trace_cache(&fam, 50, 60).unwrap();
        assert!(matches!(cache.check_fingerprint(&other), Err(Error::CacheFingerprint)));
    }

    #[test]
    fn cache_build_is_fast_enough() {
        let fam = fam_bt();
        let start = std::time::Instant::now();
        let cache = build_trace_cache(&fam, 1000, 500).unwrap();
        assert!(!cache.members().is_empty());
        assert!(start.elapsed() < std::time::Duration::from_secs(10));
    }

    #[test]
    fn family_json_roundtrip() {
        let text = r#"{"A": ["1"], "B": [0, "1"], "r": 0, "c": 1, "t0": 0, "B_square": 1}"#;
        let spec = FamilySpec::from_json(text).unwrap();
        assert_eq!(spec, fam_bt());
        let spec2 = FamilySpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, spec2);
        // Mixed int/string coefficients accepted; floats are not.
        assert!(FamilySpec::from_json(r#"{"A": [1.5], "B": [1], "r": 0, "c": 1, "t0": 0, "B_square": 1}"#).is_err());
    }

    #[test]
    fn fingerprint_distinguishes_families() {
        assert_ne!(fam_bt().fingerprint(), fam_d_is_t().fingerprint());
        assert_eq!(fam_bt().fingerprint(), fam_bt().fingerprint());
    }

    #[test]
    fn identically_singular_family_rejected() {
        assert!(FamilySpec::new(vec![], vec![], 0, 1, 0, 1).is_err());
    }

    #[test]
    fn progression_respects_offset() {
        let v: Vec<i64> = progression(3, 1, 10, 20).collect();
        assert_eq!(v, vec![10, 13, 16, 19]);
        let v: Vec<i64> = progression(1, 0, 5, 8).collect();
        assert_eq!(v, vec![5, 6, 7, 8]);
    }
}
