//! Fixed-point number formats and exact interval arithmetic.
//!
//! Everything downstream — type inference, the reference evaluator, and the
//! gate synthesizer — shares these primitives, so the flooring/wrapping rules
//! are defined once here and nowhere else.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub const DEFAULT_MACHINE_PRECISION: u32 = 8;

/// Two's-complement fixed-point layout. Bit `j` (LSB-first) carries weight
/// `2^(j - fraction_digits)`; in signed formats the top bit's weight is
/// negated. Invariants: `fraction_digits <= size`, `size >= 1`, and signed
/// formats keep at least one bit above the fraction for the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    pub size: u32,
    pub signed: bool,
    pub fraction_digits: u32,
}

impl FixedPointFormat {
    pub fn new(size: u32, signed: bool, fraction_digits: u32) -> FixedPointFormat {
        Self::try_new(size, signed, fraction_digits).unwrap()
    }

    pub fn try_new(size: u32, signed: bool, fraction_digits: u32) -> Result<FixedPointFormat, String> {
        if size == 0 {
            return Err("format size must be at least 1".into());
        }
        if size > 63 {
            return Err(format!("format size {size} exceeds the supported maximum of 63"));
        }
        if fraction_digits > size {
            return Err(format!(
                "fraction digits {fraction_digits} exceed format size {size}"
            ));
        }
        if signed && size < fraction_digits + 1 {
            return Err(format!(
                "signed format needs a sign bit above the {fraction_digits} fraction digits"
            ));
        }
        Ok(FixedPointFormat { size, signed, fraction_digits })
    }

    pub fn bit() -> FixedPointFormat {
        FixedPointFormat { size: 1, signed: false, fraction_digits: 0 }
    }

    /// Weight of bit `j`: `±2^(j - fraction_digits)`.
    pub fn bit_weight(&self, j: u32) -> BigRational {
        debug_assert!(j < self.size);
        let w = pow2(j as i64 - self.fraction_digits as i64);
        if self.signed && j == self.size - 1 {
            -w
        } else {
            w
        }
    }

    pub fn decode(&self, code: u64) -> BigRational {
        debug_assert!(code < (1u64 << self.size));
        let mut acc = BigRational::zero();
        for j in 0..self.size {
            if code >> j & 1 == 1 {
                acc += self.bit_weight(j);
            }
        }
        acc
    }

    /// Encode a value that is exactly representable; `None` if it is off the
    /// format's grid or outside its range.
    pub fn encode_exact(&self, v: &BigRational) -> Option<u64> {
        let scaled = v * pow2(self.fraction_digits as i64);
        if !scaled.is_integer() {
            return None;
        }
        let i = scaled.to_integer();
        let (lo, hi) = self.code_bounds();
        if i < lo || i > hi {
            return None;
        }
        let wrapped = ((&i) & BigInt::from((1u64 << self.size) - 1)).to_u64().unwrap();
        Some(wrapped)
    }

    /// Floor `v` onto the grid, then wrap modulo `2^size`: the semantics of
    /// moving a value into this format, overflow and all.
    pub fn encode_wrap(&self, v: &BigRational) -> u64 {
        let i = (v * pow2(self.fraction_digits as i64)).floor().to_integer();
        ((&i) & BigInt::from((1u64 << self.size) - 1)).to_u64().unwrap()
    }

    /// `decode(encode_wrap(v))`: what the circuit computes when `v` lands in
    /// a register of this format.
    pub fn convert(&self, v: &BigRational) -> BigRational {
        self.decode(self.encode_wrap(v))
    }

    fn code_bounds(&self) -> (BigInt, BigInt) {
        if self.signed {
            (
                -(BigInt::one() << (self.size - 1)),
                (BigInt::one() << (self.size - 1)) - 1,
            )
        } else {
            (BigInt::zero(), (BigInt::one() << self.size) - 1)
        }
    }

    pub fn min_value(&self) -> BigRational {
        BigRational::from_integer(self.code_bounds().0) / pow2(self.fraction_digits as i64)
    }

    pub fn max_value(&self) -> BigRational {
        BigRational::from_integer(self.code_bounds().1) / pow2(self.fraction_digits as i64)
    }

    pub fn range(&self) -> NumInterval {
        NumInterval::new(self.min_value(), self.max_value())
    }

    pub fn grid_step(&self) -> BigRational {
        pow2(-(self.fraction_digits as i64))
    }

    pub fn representable(&self, v: &BigRational) -> bool {
        self.encode_exact(v).is_some()
    }
}

impl std::fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.size,
            if self.signed { "signed" } else { "unsigned" },
            self.fraction_digits
        )
    }
}

/// Closed rational interval, `lo <= hi` always.
#[derive(Debug, Clone, PartialEq)]
pub struct NumInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl NumInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> NumInterval {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        NumInterval { lo, hi }
    }

    pub fn point(v: BigRational) -> NumInterval {
        NumInterval { lo: v.clone(), hi: v }
    }

    pub fn zero() -> NumInterval {
        NumInterval::point(BigRational::zero())
    }

    pub fn add(&self, other: &NumInterval) -> NumInterval {
        NumInterval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &NumInterval) -> NumInterval {
        NumInterval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn neg(&self) -> NumInterval {
        NumInterval::new(-&self.hi, -&self.lo)
    }

    pub fn hull(&self, other: &NumInterval) -> NumInterval {
        NumInterval::new(
            self.lo.clone().min(other.lo.clone()),
            self.hi.clone().max(other.hi.clone()),
        )
    }

    /// Smallest interval containing `self` and 0 — the possible contribution
    /// of a term gated by one unknown bit.
    pub fn hull_zero(&self) -> NumInterval {
        self.hull(&NumInterval::zero())
    }

    /// Floor both endpoints onto the `2^-frac` grid (monotone, so this is the
    /// exact image interval of pointwise flooring).
    pub fn floor_to(&self, frac: u32) -> NumInterval {
        NumInterval::new(floor_to_frac(&self.lo, frac), floor_to_frac(&self.hi, frac))
    }

    /// Image of `x -> floor_g(x * 2^exp)`: one partial product term.
    pub fn scale_floor(&self, exp: i64, frac: u32) -> NumInterval {
        let lo = floor_to_frac(&(&self.lo * pow2(exp)), frac);
        let hi = floor_to_frac(&(&self.hi * pow2(exp)), frac);
        NumInterval::new(lo, hi)
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

impl std::fmt::Display for NumInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn pow2(exp: i64) -> BigRational {
    if exp >= 0 {
        BigRational::from_integer(BigInt::one() << exp as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-exp) as u64)
    }
}

/// Largest grid multiple not exceeding `v` (floor toward negative infinity).
pub fn floor_to_frac(v: &BigRational, frac: u32) -> BigRational {
    let scaled = v * pow2(frac as i64);
    BigRational::from_integer(scaled.floor().to_integer()) / pow2(frac as i64)
}

/// If `v` is dyadic (`m / 2^k` in lowest terms), the number of fraction
/// digits needed to represent it exactly.
pub fn dyadic_fraction_digits(v: &BigRational) -> Option<u32> {
    let den = v.denom();
    if den.is_one() {
        return Some(0);
    }
    let bits = den.bits();
    if *den == (BigInt::one() << (bits - 1)) {
        u32::try_from(bits - 1).ok()
    } else {
        None
    }
}

/// Round to the nearest multiple of `2^-precision`, ties to even. The flag
/// reports whether rounding changed the value.
pub fn snap_to_grid(v: &BigRational, precision: u32) -> (BigRational, bool) {
    let scaled = v * pow2(precision as i64);
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let n = if frac < half {
        floor.to_integer()
    } else if frac > half {
        floor.to_integer() + 1
    } else {
        let f = floor.to_integer();
        if (&f) % 2 == BigInt::zero() {
            f
        } else {
            f + 1
        }
    };
    let snapped = BigRational::from_integer(n) / pow2(precision as i64);
    let lossy = snapped != *v;
    (snapped, lossy)
}

/// Minimal format with the given fraction digits whose grid points inside
/// `iv` (endpoints floored onto the grid) are all representable. Signed
/// exactly when the floored lower endpoint is negative.
pub fn infer_format(iv: &NumInterval, fraction_digits: u32) -> FixedPointFormat {
    let lo_i = (&iv.lo * pow2(fraction_digits as i64)).floor().to_integer();
    let hi_i = (&iv.hi * pow2(fraction_digits as i64)).floor().to_integer();
    let signed = lo_i.is_negative();
    let mut size = fraction_digits.max(1);
    if signed {
        size = size.max(fraction_digits + 1);
    }
    loop {
        let (lo_b, hi_b) = if signed {
            (
                -(BigInt::one() << (size - 1)),
                (BigInt::one() << (size - 1)) - 1,
            )
        } else {
            (BigInt::zero(), (BigInt::one() << size) - 1)
        };
        if lo_i >= lo_b && hi_i <= hi_b {
            // May exceed the 63-bit simulator-facing limit; callers that
            // lower to circuits must reject such formats with a diagnostic.
            return FixedPointFormat { size, signed, fraction_digits };
        }
        size += 1;
        assert!(size <= 1024, "runaway format inference for {iv}");
    }
}

// ─── register layout conversion ──────────────────────────────────────

/// Where each destination bit of a format conversion comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitSource {
    /// Stays |0⟩ — the source has no bit at this weight.
    Zero,
    /// Copy of source bit `j`.
    Src(u32),
    /// Sign extension: copy of the source's top (sign) bit.
    SignOf(u32),
}

/// Bit-level plan realizing [`FixedPointFormat::convert`]: arithmetic shift
/// by the fraction difference, then truncate to the destination width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPlan {
    pub dst_bits: Vec<BitSource>,
    /// Source bits floored away (destination grid is coarser).
    pub dropped_low: Vec<u32>,
    /// Source bits wrapped away (destination is too narrow at the top).
    pub dropped_high: Vec<u32>,
}

pub fn plan_alignment(src: &FixedPointFormat, dst: &FixedPointFormat) -> AlignmentPlan {
    plan_scaled_alignment(src, dst, 0)
}

/// Alignment of `src` into `dst` after scaling the source value by `2^exp`
/// (the wiring form of shifts: no gate ever moves data, bits just land at a
/// different weight). `exp = 0` is plain alignment.
pub fn plan_scaled_alignment(
    src: &FixedPointFormat,
    dst: &FixedPointFormat,
    exp: i64,
) -> AlignmentPlan {
    let delta = src.fraction_digits as i64 - dst.fraction_digits as i64 - exp;
    let mut dst_bits = Vec::with_capacity(dst.size as usize);
    for k in 0..dst.size as i64 {
        let j = k + delta;
        if j < 0 {
            dst_bits.push(BitSource::Zero);
        } else if (j as u32) < src.size {
            dst_bits.push(BitSource::Src(j as u32));
        } else if src.signed {
            dst_bits.push(BitSource::SignOf(src.size - 1));
        } else {
            dst_bits.push(BitSource::Zero);
        }
    }
    let dropped_low: Vec<u32> = (0..src.size)
        .filter(|&j| (j as i64) < delta)
        .collect();
    let dropped_high: Vec<u32> = (0..src.size)
        .filter(|&j| (j as i64) - delta >= dst.size as i64)
        .collect();
    AlignmentPlan { dst_bits, dropped_low, dropped_high }
}

// ─── multiplication partials ─────────────────────────────────────────

/// One controlled partial product: if multiplier bit `bit` is set, add
/// `sign * floor_g(2^exp * multiplicand)` to the accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartialWeight {
    pub bit: u32,
    pub exp: i64,
    pub negative: bool,
}

/// Partial weights of a quantum multiplier: bit `j` carries `2^(j - frac)`,
/// negated on a signed format's top bit.
pub fn mul_partial_weights(fmt: &FixedPointFormat) -> Vec<PartialWeight> {
    (0..fmt.size)
        .map(|j| PartialWeight {
            bit: j,
            exp: j as i64 - fmt.fraction_digits as i64,
            negative: fmt.signed && j == fmt.size - 1,
        })
        .collect()
}

/// Sign-magnitude decomposition of a dyadic constant multiplier: the overall
/// sign and the exponents of the set bits of `|c|`. Panics on non-dyadic
/// input — constants are snapped to the working grid before reaching here.
pub fn const_partial_exponents(c: &BigRational) -> (bool, Vec<i64>) {
    let negative = c.is_negative();
    let mag = c.abs();
    let f = dyadic_fraction_digits(&mag)
        .unwrap_or_else(|| panic!("constant {c} is not dyadic")) as i64;
    let m = (mag * pow2(f)).to_integer();
    let mut exps = Vec::new();
    let mut j = 0i64;
    let mut rest = m;
    while !rest.is_zero() {
        if (&rest) % 2 == BigInt::one() {
            exps.push(j - f);
        }
        rest >>= 1;
        j += 1;
    }
    (negative, exps)
}

/// `sign * floor_g(2^exp * v)`: the exact value a single partial contributes.
pub fn partial_value(v: &BigRational, exp: i64, frac: u32, negative: bool) -> BigRational {
    let t = floor_to_frac(&(v * pow2(exp)), frac);
    if negative {
        -t
    } else {
        t
    }
}

/// Exact decimal rendering for rationals with a `2^a * 5^b` denominator —
/// every fixed-point value qualifies. Anything else falls back to `p/q`.
pub fn decimal_string(v: &BigRational) -> String {
    let mut den = v.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut twos = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    let mut fives = 0u32;
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return v.to_string();
    }
    let digits = twos.max(fives);
    let scaled = (v * BigRational::from_integer(BigInt::from(10).pow(digits))).to_integer();
    if digits == 0 {
        return scaled.to_string();
    }
    let neg = scaled.is_negative();
    let mag = format!("{:0>width$}", scaled.abs().to_string(), width = digits as usize + 1);
    let (int_part, frac_part) = mag.split_at(mag.len() - digits as usize);
    format!("{}{int_part}.{frac_part}", if neg { "-" } else { "" })
}
