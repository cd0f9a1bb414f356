//! Segmented sieves for d_k over ranges, plus a slow reference sieve and a
//! compact binary table format.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::dk_prime_power;

pub const DKTB_MAGIC: [u8; 4] = *b"DKTB";
pub const DKTB_VERSION: u32 = 1;

const MAX_RANGE_END: u64 = 1 << 31;
const ORACLE_MAX_END: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("bad sieve config: {0}")]
    BadConfig(&'static str),
    #[error("d_k value overflows 64 bits at n = {n}")]
    Overflow { n: u64 },
    #[error("allocation of {bytes} bytes failed")]
    Alloc { bytes: usize },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad table format: {0}")]
    Format(&'static str),
}

/// Half-open range [range_start, range_end) to sieve, the segment length,
/// and the divisor order k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    pub range_start: u64,
    pub range_end: u64,
    pub segment_size: u64,
    pub k: u32,
}

/// d_k values for a contiguous range: values[i] = d_k(offset + i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DkTable {
    pub offset: u64,
    pub values: Vec<u64>,
}

impl DkTable {
    #[inline]
    pub fn get(&self, n: u64) -> u64 {
        self.values[(n - self.offset) as usize]
    }
}

/// Smallest prime factor for every n in [2, limit], spf[0] = spf[1] = 0.
/// Linear sieve, one write per composite.
pub fn spf_sieve(limit: u32) -> Result<Vec<u32>, SieveError> {
    let len = limit as usize + 1;
    let mut spf: Vec<u32> = Vec::new();
    spf.try_reserve_exact(len)
        .map_err(|_| SieveError::Alloc { bytes: len * 4 })?;
    spf.resize(len, 0);
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..len {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let iu = i as u64;
        for &p in &primes {
            if p > spf[i] || p as u64 * iu > limit as u64 {
                break;
            }
            spf[(p as u64 * iu) as usize] = p;
        }
    }
    Ok(spf)
}

/// Primes up to and including limit.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let len = limit as usize + 1;
    let mut composite = vec![false; len];
    let mut primes = Vec::new();
    for i in 2..len {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j < len {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn binom_row(k: u32) -> Result<[u64; 64], SieveError> {
    let mut row = [0u64; 64];
    for (j, slot) in row.iter_mut().enumerate() {
        *slot = dk_prime_power(k, 2, j as u32).map_err(|_| SieveError::Overflow { n: 0 })?;
    }
    Ok(row)
}

fn sieve_segment(
    seg_start: u64,
    out: &mut [u64],
    primes: &[u64],
    binoms: &[u64; 64],
) -> Result<(), SieveError> {
    let len = out.len() as u64;
    let seg_end = seg_start + len;
    out.fill(1);
    let mut rem: Vec<u64> = Vec::new();
    rem.try_reserve_exact(out.len())
        .map_err(|_| SieveError::Alloc { bytes: out.len() * 8 })?;
    rem.extend(seg_start..seg_end);
    for &p in primes {
        let first = seg_start.div_ceil(p) * p;
        if first >= seg_end {
            continue;
        }
        let mut i = (first - seg_start) as usize;
        while (i as u64) < len {
            let mut e = 0usize;
            let r = &mut rem[i];
            while *r % p == 0 {
                *r /= p;
                e += 1;
            }
            out[i] = out[i]
                .checked_mul(binoms[e])
                .ok_or(SieveError::Overflow { n: seg_start + i as u64 })?;
            i += p as usize;
        }
    }
    for (i, r) in rem.iter().enumerate() {
        // leftover cofactor is prime: everything below sqrt(range_end) was removed
        if *r > 1 {
            out[i] = out[i]
                .checked_mul(binoms[1])
                .ok_or(SieveError::Overflow { n: seg_start + i as u64 })?;
        }
    }
    Ok(())
}

/// d_k over [range_start, range_end), segmented and parallel. Output is
/// independent of segment_size and thread count.
pub fn dk_range(cfg: &SieveConfig) -> Result<DkTable, SieveError> {
    if cfg.k == 0 || cfg.k > 8 {
        return Err(SieveError::BadConfig("k must be in 1..=8"));
    }
    if cfg.range_start == 0 {
        return Err(SieveError::BadConfig("range_start must be >= 1"));
    }
    if cfg.range_end <= cfg.range_start {
        return Err(SieveError::BadConfig("range must be nonempty"));
    }
    if cfg.range_end > MAX_RANGE_END {
        return Err(SieveError::BadConfig("range_end above 2^31"));
    }
    if cfg.segment_size == 0 {
        return Err(SieveError::BadConfig("segment_size must be >= 1"));
    }
    let total = (cfg.range_end - cfg.range_start) as usize;
    let mut values: Vec<u64> = Vec::new();
    values
        .try_reserve_exact(total)
        .map_err(|_| SieveError::Alloc { bytes: total * 8 })?;
    values.resize(total, 1);
    if cfg.k == 1 {
        return Ok(DkTable { offset: cfg.range_start, values });
    }
    let binoms = binom_row(cfg.k)?;
    let primes = primes_up_to(isqrt(cfg.range_end - 1));
    let seg = cfg.segment_size as usize;
    values
        .par_chunks_mut(seg)
        .enumerate()
        .try_for_each(|(idx, chunk)| {
            let seg_start = cfg.range_start + (idx * seg) as u64;
            sieve_segment(seg_start, chunk, &primes, &binoms)
        })?;
    Ok(DkTable { offset: cfg.range_start, values })
}

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |rr| rr > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|rr| rr <= n) {
        r += 1;
    }
    r
}

/// Reference d_k table built by repeated divisor-sum convolution from the
/// all-ones array. Quadratic-ish and memory hungry, so capped at 10^6.
pub fn dk_range_oracle(cfg: &SieveConfig) -> Result<DkTable, SieveError> {
    if cfg.k == 0 || cfg.k > 8 {
        return Err(SieveError::BadConfig("k must be in 1..=8"));
    }
    if cfg.range_start == 0 || cfg.range_end <= cfg.range_start {
        return Err(SieveError::BadConfig("range must be nonempty and start >= 1"));
    }
    if cfg.range_end > ORACLE_MAX_END {
        return Err(SieveError::BadConfig("oracle capped at range_end <= 10^6"));
    }
    let end = cfg.range_end as usize;
    let mut cur = vec![1u64; end];
    cur[0] = 0;
    for _ in 2..=cfg.k {
        let mut next = vec![0u64; end];
        for a in 1..end {
            let mut n = a;
            while n < end {
                next[n] += cur[a];
                n += a;
            }
        }
        cur = next;
    }
    let values = cur[cfg.range_start as usize..].to_vec();
    Ok(DkTable { offset: cfg.range_start, values })
}

/// Serializes a table: magic, version, k, offset, length, then the values,
/// all little endian.
pub fn write_dktb<W: Write>(w: &mut W, k: u32, table: &DkTable) -> io::Result<()> {
    w.write_all(&DKTB_MAGIC)?;
    w.write_all(&DKTB_VERSION.to_le_bytes())?;
    w.write_all(&k.to_le_bytes())?;
    w.write_all(&table.offset.to_le_bytes())?;
    w.write_all(&(table.values.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 << 10);
    for chunk in table.values.chunks(1 << 10) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_dktb<R: Read>(r: &mut R) -> Result<(u32, DkTable), SieveError> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)?;
    if head != DKTB_MAGIC {
        return Err(SieveError::Format("bad magic"));
    }
    let mut w4 = [0u8; 4];
    r.read_exact(&mut w4)?;
    if u32::from_le_bytes(w4) != DKTB_VERSION {
        return Err(SieveError::Format("unsupported version"));
    }
    r.read_exact(&mut w4)?;
    let k = u32::from_le_bytes(w4);
    let mut w8 = [0u8; 8];
    r.read_exact(&mut w8)?;
    let offset = u64::from_le_bytes(w8);
    r.read_exact(&mut w8)?;
    let len = u64::from_le_bytes(w8);
    if len > MAX_RANGE_END {
        return Err(SieveError::Format("length out of range"));
    }
    let mut values: Vec<u64> = Vec::new();
    values
        .try_reserve_exact(len as usize)
        .map_err(|_| SieveError::Alloc { bytes: len as usize * 8 })?;
    let mut buf = vec![0u8; 8 << 10];
    let mut left = len as usize;
    while left > 0 {
        let take = left.min(1 << 10);
        let bytes = &mut buf[..take * 8];
        r.read_exact(bytes)?;
        for c in bytes.chunks_exact(8) {
            values.push(u64::from_le_bytes(c.try_into().unwrap()));
        }
        left -= take;
    }
    Ok((k, DkTable { offset, values }))
}
