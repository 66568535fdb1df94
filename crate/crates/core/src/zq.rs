//! Word arithmetic in Z_{p^e} for p^e <= 2^64.

/// Residue modulus of Z_{p^e}, specialised by how reduction is done.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Modulus {
    /// 2^64: natural word wraparound.
    Wrap,
    /// 2^e with e < 64: wraparound then mask.
    Pow2 { mask: u64 },
    /// Any other p^e < 2^64.
    General(u64),
}

impl Modulus {
    pub(crate) fn new(p: u64, e: u32) -> Option<Self> {
        if p == 2 {
            return match e {
                64 => Some(Modulus::Wrap),
                1..=63 => Some(Modulus::Pow2 {
                    mask: (1u64 << e) - 1,
                }),
                _ => None,
            };
        }
        let mut q: u64 = 1;
        for _ in 0..e {
            q = q.checked_mul(p)?;
        }
        Some(Modulus::General(q))
    }

    /// The modulus as a u128 (2^64 for `Wrap`).
    pub(crate) fn value(self) -> u128 {
        match self {
            Modulus::Wrap => 1u128 << 64,
            Modulus::Pow2 { mask } => mask as u128 + 1,
            Modulus::General(q) => q as u128,
        }
    }

    #[inline(always)]
    pub(crate) fn reduce(self, a: u64) -> u64 {
        match self {
            Modulus::Wrap => a,
            Modulus::Pow2 { mask } => a & mask,
            Modulus::General(q) => a % q,
        }
    }

    #[inline(always)]
    pub(crate) fn add(self, a: u64, b: u64) -> u64 {
        match self {
            Modulus::Wrap => a.wrapping_add(b),
            Modulus::Pow2 { mask } => a.wrapping_add(b) & mask,
            Modulus::General(q) => {
                let (s, carry) = a.overflowing_add(b);
                if carry || s >= q {
                    s.wrapping_sub(q)
                } else {
                    s
                }
            }
        }
    }

    #[inline(always)]
    pub(crate) fn sub(self, a: u64, b: u64) -> u64 {
        match self {
            Modulus::Wrap => a.wrapping_sub(b),
            Modulus::Pow2 { mask } => a.wrapping_sub(b) & mask,
            Modulus::General(q) => {
                if a >= b {
                    a - b
                } else {
                    a.wrapping_sub(b).wrapping_add(q)
                }
            }
        }
    }

    #[inline(always)]
    pub(crate) fn neg(self, a: u64) -> u64 {
        self.sub(0, a)
    }

    #[inline(always)]
    pub(crate) fn mul(self, a: u64, b: u64) -> u64 {
        match self {
            Modulus::Wrap => a.wrapping_mul(b),
            Modulus::Pow2 { mask } => a.wrapping_mul(b) & mask,
            Modulus::General(q) => ((a as u128 * b as u128) % q as u128) as u64,
        }
    }

    #[inline(always)]
    pub(crate) fn mul_add(self, acc: u64, a: u64, b: u64) -> u64 {
        self.add(acc, self.mul(a, b))
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &sp in &SMALL {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Inverse of `a` modulo the prime `p`, or `None` when `a ≡ 0`.
pub(crate) fn inv_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    let (mut old_r, mut r) = (a as i128, p as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    Some(old_s.rem_euclid(p as i128) as u64)
}

/// Distinct prime factors by trial division.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f.saturating_mul(f) <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}
